#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>

#include "nwpkit/io.hpp"
#include "nwpkit/preprocess.hpp"

namespace nwpkit {

// ---------------------------------------------------------------------------
// Per-field scores. `w` holds one unit-mean weight per latitude row.

/// sqrt of the weighted spatial mean of (f - o)^2.
template <typename DF, typename DO>
double weighted_rmse(const Eigen::ArrayBase<DF>& f, const Eigen::ArrayBase<DO>& o, const Eigen::VectorXd& w) {
  const auto sq_rows = (f - o).square().rowwise().sum();
  return std::sqrt((sq_rows.matrix().dot(w)) / static_cast<double>(f.size()));
}

/// Weighted mean of (a - b)^2.
template <typename DA, typename DB>
double weighted_mse(const Eigen::ArrayBase<DA>& a, const Eigen::ArrayBase<DB>& b, const Eigen::VectorXd& w) {
  return (a - b).square().rowwise().sum().matrix().dot(w) / static_cast<double>(a.size());
}

/// Anomaly correlation from raw weighted products of the anomalies (no
/// further mean removal). Zero when either anomaly has zero weighted norm.
template <typename DF, typename DO>
double weighted_acc(const Eigen::ArrayBase<DF>& fa, const Eigen::ArrayBase<DO>& oa, const Eigen::VectorXd& w) {
  const double fo = (fa * oa).rowwise().sum().matrix().dot(w);
  const double ff = fa.square().rowwise().sum().matrix().dot(w);
  const double oo = oa.square().rowwise().sum().matrix().dot(w);
  if (!(ff > 0.0) || !(oo > 0.0)) return 0.0;
  return std::clamp(fo / std::sqrt(ff * oo), -1.0, 1.0);
}

struct PairScores {
  double rmse = 0.0;
  /// NaN when no climatology is available.
  double acc = std::numeric_limits<double>::quiet_NaN();
  /// [1 - MSE(F,O) / MSE(C,O)] - [2 ACC - 1]
  double skill_residual = std::numeric_limits<double>::quiet_NaN();
  /// MSE(F,O) / MSE(C,O) - [2 ACC - 1], the relation as usually printed
  double skill_residual_printed = std::numeric_limits<double>::quiet_NaN();
};

/// Scores of one forecast/target pair; `clim` may be null. Throws
/// NumericError when MSE(C, O) is zero and skill residuals are requested.
PairScores score_pair(const GridArrayd& forecast, const GridArrayd& target, const GridArrayd* clim,
                      const Eigen::VectorXd& w, bool skill_relation);

// ---------------------------------------------------------------------------
// Bootstrap over initialization times.

struct BootstrapSpec {
  int resamples = 1000;
  std::uint64_t seed = 20240101;
  double lower_percentile = 2.5;
  double upper_percentile = 97.5;
};

struct BootstrapSummary {
  /// mean over resamples of the resample mean
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Resample r draws values.size() indices with replacement from an
/// mt19937_64 seeded with seed_seq{seed, r}, so results do not depend on
/// thread count. Percentiles use linear interpolation between order statistics.
BootstrapSummary bootstrap_mean(std::span<const double> values, const BootstrapSpec& spec);

/// Linear-interpolation percentile of already sorted values, p in [0, 100].
double percentile_sorted(std::span<const double> sorted, double p);

// ---------------------------------------------------------------------------
// Forecast sets.

/// Forecast fields (times are valid times, init_times parallel to them)
/// together with the verifying target series.
class ForecastSet {
 public:
  /// Throws DataError when a forecast has no target at its valid time, when
  /// grids differ or a forecast variable is missing from the targets.
  ForecastSet(Dataset forecasts, Dataset targets);

  const Dataset& forecasts() const noexcept { return forecasts_; }
  const Dataset& targets() const noexcept { return targets_; }
  const GridSpec& grid() const noexcept { return forecasts_.grid(); }
  /// Target time index for forecast time index k.
  std::size_t target_index(std::size_t k) const { return target_index_[k]; }
  long lead_hours(std::size_t k) const;
  std::vector<long> leads() const;

 private:
  Dataset forecasts_;
  Dataset targets_;
  std::vector<std::size_t> target_index_;
};

struct MetricResult {
  std::vector<TimePoint> inits;
  std::vector<double> values;
  BootstrapSummary summary;
};

MetricResult rmse(const ForecastSet& set, const VariableKey& key, long lead_hours, const BootstrapSpec& spec = {});
MetricResult acc(const ForecastSet& set, const Climatology& clim, const VariableKey& key, long lead_hours,
                 const BootstrapSpec& spec = {});
/// Corrected-form skill residual per initialization.
MetricResult skill_relation_check(const ForecastSet& set, const Climatology& clim, const VariableKey& key,
                                  long lead_hours, const BootstrapSpec& spec = {});

struct VerifyOptions {
  BootstrapSpec bootstrap;
  /// Also emit skill_residual and skill_residual_printed rows.
  bool skill_relation = false;
  /// Restrict to these variables / leads; empty means all.
  std::vector<VariableKey> variables;
  std::vector<long> leads;
};

/// Collects per-pair scores and turns them into score records. Pairs may be
/// added in any order; each (variable, lead) group is sorted by
/// initialization time before bootstrapping. Not thread-safe.
class ScoreCollector {
 public:
  explicit ScoreCollector(VerifyOptions options, bool has_climatology);

  void add(const VariableKey& key, long lead_hours, TimePoint init, const PairScores& scores);
  std::vector<ScoreRecord> records() const;

 private:
  struct Entry {
    TimePoint init;
    PairScores scores;
  };
  VerifyOptions options_;
  bool has_clim_;
  std::map<std::pair<VariableKey, long>, std::vector<Entry>> entries_;
};

/// Scores every (variable, lead) of an in-memory forecast set.
std::vector<ScoreRecord> verify(const ForecastSet& set, const Climatology* clim, const VerifyOptions& options);

/// Same, streaming fields from containers so memory stays at a few fields per thread.
std::vector<ScoreRecord> verify_files(const std::filesystem::path& forecasts, const std::filesystem::path& targets,
                                      const Climatology* clim, const VerifyOptions& options);

// ---------------------------------------------------------------------------
// Cross-variable spatial correlation.

struct CorrelationMatrix {
  std::vector<VariableKey> keys;
  Eigen::MatrixXd r;

  /// Square CSV: header ",k1,k2,..." then one row per key, values as %.9g.
  void write_csv(const std::filesystem::path& path) const;
  static CorrelationMatrix read_csv(const std::filesystem::path& path);
};

/// Pearson correlation of every pair of flattened fields (unweighted unless
/// `weighted`, which uses the unit-mean latitude weights). Symmetric with an
/// exact unit diagonal. Throws NumericError naming a zero-variance field.
CorrelationMatrix spatial_correlation(std::span<const Field> fields, bool weighted = false);

/// Elementwise mean of matrices with identical keys.
CorrelationMatrix average(std::span<const CorrelationMatrix> matrices);

/// forecast - reference, with an exactly zero diagonal.
CorrelationMatrix correlation_difference(const CorrelationMatrix& forecast, const CorrelationMatrix& reference);

}  // namespace nwpkit
