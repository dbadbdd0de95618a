#include "socrec/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "tsv.hpp"

namespace socrec {

namespace {

constexpr std::size_t kChunk = 4096;

void check_leakage(std::span<const RatingRecord> records, const MfmModel& model) {
  if (records.empty() || model.provenance.records == 0) return;
  Timestamp earliest = records.front().timestamp;
  for (const auto& r : records) earliest = std::min(earliest, r.timestamp);
  if (model.provenance.last >= earliest) {
    throw Error("ensemble: level-1 model was fitted on ratings up to " +
                std::to_string(model.provenance.last) +
                ", overlapping the records being assembled (from " + std::to_string(earliest) + ")");
  }
}

std::size_t feature_cols(int gamma_range, const BehaviorTables* tables) {
  if (gamma_range < 0 || gamma_range > 5) throw Error("ensemble: gamma_range must be in 0..5");
  if (gamma_range > 0 && tables == nullptr) throw Error("ensemble: behavior tables required");
  return gamma_range > 0 ? 2 : 1;
}

void chunk_gradient(std::span<const double> x, std::size_t cols, std::span<const std::uint8_t> y,
                    std::span<const double> w, std::size_t chunk, double* out) {
  const std::size_t begin = chunk * kChunk;
  const std::size_t end = std::min(y.size(), begin + kChunk);
  std::fill(out, out + cols + 1, 0.0);
  for (std::size_t r = begin; r < end; ++r) {
    const double* row = x.data() + r * cols;
    double z = w[0];
    for (std::size_t c = 0; c < cols; ++c) z += w[c + 1] * row[c];
    const double e = sigmoid(z) - static_cast<double>(y[r]);
    out[0] += e;
    for (std::size_t c = 0; c < cols; ++c) out[c + 1] += e * row[c];
  }
}

void reduce(const std::vector<double>& partial, std::size_t chunks, std::size_t width,
            std::size_t rows, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    for (std::size_t c = 0; c < width; ++c) grad[c] += partial[ch * width + c];
  }
  for (double& g : grad) g /= static_cast<double>(rows);
}

}  // namespace

TimeSplit split_by_time(std::span<const RatingRecord> records, Timestamp window_begin,
                        int boundary_days) {
  TimeSplit out;
  out.boundary = window_begin + static_cast<Timestamp>(boundary_days) * kSecondsPerDay;
  for (const auto& r : records) (r.timestamp <= out.boundary ? out.first : out.second).push_back(r);
  return out;
}

FeatureMatrix assemble_features(std::span<const RatingRecord> records,
                                std::span<const DurationContext> contexts, const MfmModel& model,
                                const BehaviorTables* tables, int gamma_range, bool leakage) {
  const std::size_t cols = feature_cols(gamma_range, tables);
  if (contexts.size() != records.size() && gamma_range > 0) {
    throw Error("ensemble: contexts do not align with records");
  }
  if (leakage) check_leakage(records, model);
  FeatureMatrix m;
  m.cols = cols;
  m.values.resize(records.size() * cols);
  m.labels.resize(records.size());
  const std::vector<double> scores = score_records(model, records);
  const long n = static_cast<long>(records.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) {
    const auto r = static_cast<std::size_t>(k);
    m.values[r * cols] = scores[r];
    if (cols > 1) m.values[r * cols + 1] = gamma(contexts[r], gamma_range, *tables);
    m.labels[r] = records[r].result;
  }
  return m;
}

FeatureMatrix assemble_features_serial(std::span<const RatingRecord> records,
                                       std::span<const DurationContext> contexts,
                                       const MfmModel& model, const BehaviorTables* tables,
                                       int gamma_range, bool leakage) {
  const std::size_t cols = feature_cols(gamma_range, tables);
  if (contexts.size() != records.size() && gamma_range > 0) {
    throw Error("ensemble: contexts do not align with records");
  }
  if (leakage) check_leakage(records, model);
  FeatureMatrix m;
  m.cols = cols;
  const std::vector<double> scores = score_records_serial(model, records);
  for (std::size_t r = 0; r < records.size(); ++r) {
    m.values.push_back(scores[r]);
    if (cols > 1) m.values.push_back(gamma(contexts[r], gamma_range, *tables));
    m.labels.push_back(records[r].result);
  }
  return m;
}

void LogisticConfig::validate() const {
  if (!(tolerance > 0.0)) throw Error("ensemble: tolerance must be > 0");
  if (max_iterations < 1) throw Error("ensemble: max_iterations must be >= 1");
  if (step < 0.0) throw Error("ensemble: step must be >= 0");
}

void logistic_gradient(std::span<const double> x, std::size_t cols,
                       std::span<const std::uint8_t> labels, std::span<const double> w,
                       std::span<double> grad) {
  const std::size_t rows = labels.size();
  const std::size_t chunks = (rows + kChunk - 1) / kChunk;
  const std::size_t width = cols + 1;
  std::vector<double> partial(chunks * width);
  const long nc = static_cast<long>(chunks);
#pragma omp parallel for schedule(static)
  for (long ch = 0; ch < nc; ++ch) {
    chunk_gradient(x, cols, labels, w, static_cast<std::size_t>(ch),
                   partial.data() + static_cast<std::size_t>(ch) * width);
  }
  reduce(partial, chunks, width, rows, grad);
}

void logistic_gradient_serial(std::span<const double> x, std::size_t cols,
                              std::span<const std::uint8_t> labels, std::span<const double> w,
                              std::span<double> grad) {
  const std::size_t rows = labels.size();
  const std::size_t chunks = (rows + kChunk - 1) / kChunk;
  const std::size_t width = cols + 1;
  std::vector<double> partial(chunks * width);
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    chunk_gradient(x, cols, labels, w, ch, partial.data() + ch * width);
  }
  reduce(partial, chunks, width, rows, grad);
}

EnsembleModel fit_logistic(const FeatureMatrix& f, const LogisticConfig& config) {
  config.validate();
  const std::size_t rows = f.rows();
  const std::size_t cols = f.cols;
  if (rows == 0) throw Error("ensemble: no rows to fit");
  const auto positives = std::count(f.labels.begin(), f.labels.end(), std::uint8_t{1});
  if (positives == 0 || static_cast<std::size_t>(positives) == rows) {
    throw Error("ensemble: logistic fit needs both positive and negative labels");
  }

  // Standardize so that one step size suits every column.
  std::vector<double> center(cols, 0.0);
  std::vector<double> scale(cols, 1.0);
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += f.values[r * cols + c];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = f.values[r * cols + c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(rows);
    center[c] = mean;
    if (var > 1e-24) scale[c] = std::sqrt(var);
  }
  std::vector<double> z(f.values.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      z[r * cols + c] = (f.values[r * cols + c] - center[c]) / scale[c];
    }
  }

  const double step = config.step > 0.0 ? config.step : 4.0 / static_cast<double>(cols + 1);
  std::vector<double> v(cols + 1, 0.0);
  std::vector<double> g(cols + 1, 0.0);
  EnsembleModel out;
  for (int it = 0; it < config.max_iterations; ++it) {
    logistic_gradient(z, cols, f.labels, v, g);
    double norm = 0.0;
    for (double x : g) norm += x * x;
    out.gradient_norm = std::sqrt(norm);
    out.iterations = it;
    if (out.gradient_norm < config.tolerance) break;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= step * g[k];
    out.iterations = it + 1;
  }

  out.weights.assign(cols + 1, 0.0);
  out.weights[0] = v[0];
  for (std::size_t c = 0; c < cols; ++c) {
    out.weights[c + 1] = v[c + 1] / scale[c];
    out.weights[0] -= v[c + 1] * center[c] / scale[c];
  }
  for (double w : out.weights) {
    if (!std::isfinite(w)) throw Error("ensemble: logistic fit diverged");
  }
  return out;
}

double blend(const EnsembleModel& model, std::span<const double> row) {
  if (model.weights.size() != row.size() + 1) {
    throw Error("ensemble: feature row has " + std::to_string(row.size()) + " columns, model expects " +
                std::to_string(model.weights.empty() ? 0 : model.weights.size() - 1));
  }
  double z = model.weights[0];
  for (std::size_t c = 0; c < row.size(); ++c) z += model.weights[c + 1] * row[c];
  return sigmoid(z);
}

std::vector<double> blend_all(const EnsembleModel& model, const FeatureMatrix& f) {
  std::vector<double> out(f.rows());
  for (std::size_t r = 0; r < f.rows(); ++r) out[r] = blend(model, {f.row(r), f.cols});
  return out;
}

void write_ensemble_model(const EnsembleModel& model, const std::filesystem::path& file,
                          const std::string& stamp) {
  auto out = tsv::open_output(file);
  out << tsv::stamp_line(stamp);
  for (std::size_t k = 0; k < model.weights.size(); ++k) {
    out << 'W' << k << '\t' << tsv::format_double(model.weights[k]) << '\n';
  }
  out << "iterations\t" << model.iterations << '\n';
  out << "gradient_norm\t" << tsv::format_double(model.gradient_norm) << '\n';
}

}  // namespace socrec
