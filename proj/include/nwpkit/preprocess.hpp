#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "nwpkit/grid.hpp"
#include "nwpkit/io.hpp"

namespace nwpkit {

/// Closed time interval [start, end].
struct Period {
  TimePoint start;
  TimePoint end;
  bool contains(TimePoint t) const noexcept { return start <= t && t <= end; }
};

/// Which spread the residual coefficients are divided by.
enum class ResidualDenominator {
  /// geometric mean over variable-levels of the std of the one-step tendency
  /// of the standardized variable; the product of all xi is then 1
  tendency,
  /// geometric mean of the std of the standardized variables themselves
  /// (each is 1 over the stats period, so xi reduces to sigma(dT'))
  standardized,
};

std::string_view to_string(ResidualDenominator d);
ResidualDenominator residual_denominator_from_string(std::string_view text);

struct NormEntry {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 1.0;
  /// sigma of the one-step tendency of (T - mu) / sigma; 0 until computed
  double tendency_sigma = 0.0;
};

struct NormStats {
  std::map<VariableKey, NormEntry> entries;
  Period period{};
  std::chrono::seconds step{0};
  ResidualDenominator denominator = ResidualDenominator::tendency;

  /// Throws DataError naming the key when it has no entry.
  const NormEntry& at(const VariableKey& key) const;

  json to_json() const;
  static NormStats from_json(const json& j);
  void save(const std::filesystem::path& path) const;
  static NormStats load(const std::filesystem::path& path);
};

/// Plain spatio-temporal mean and population standard deviation per
/// variable-level over all grid points and times inside `period` (the whole
/// time axis when omitted). Accumulated per field and merged with Chan's
/// pairwise update. Throws NumericError on zero variance.
NormStats compute_stats(const Dataset& data, std::optional<Period> period = std::nullopt);

/// Fills xi and tendency_sigma. Uses the same period as `stats`; at least two
/// times must fall inside it.
NormStats compute_residual_coeff(const Dataset& data, NormStats stats,
                                 ResidualDenominator denominator = ResidualDenominator::tendency);

/// (T - mu) / (xi sigma)
Field normalize(const Field& field, const NormStats& stats);
/// T'' xi sigma + mu
Field denormalize(const Field& field, const NormStats& stats);

Dataset normalize(const Dataset& data, const NormStats& stats);
Dataset denormalize(const Dataset& data, const NormStats& stats);

/// Lower bound applied to de-normalized moisture fields.
struct ClampSpec {
  double floor = 1e-8;
  /// Variable names the clamp applies to; empty means every variable.
  std::vector<std::string> variables = {"Q", "Q500"};

  bool applies_to(const VariableKey& key) const;
};

/// Values below the floor become exactly the floor, the rest are untouched.
template <typename Derived>
GridArray<typename Derived::Scalar> clamp_floor(const Eigen::DenseBase<Derived>& values,
                                                typename Derived::Scalar floor) {
  return values.derived().array().max(floor);
}

/// Returns the field unchanged when its variable is not selected by `spec`.
Field clamp_nonnegative(const Field& field, const ClampSpec& spec = {});

// ---------------------------------------------------------------------------

struct ClimatologySpec {
  int window_days = 61;
  double gaussian_std_days = 10.0;
};

/// Mean fields per (variable, day of year, hour of day). Days use the
/// 365-day calendar of `noleap_day_of_year`.
class Climatology {
 public:
  Climatology(std::shared_ptr<const GridSpec> grid, std::vector<VariableInfo> variables,
              std::vector<int> hours, ClimatologySpec spec);

  const GridSpec& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const GridSpec>& grid_ptr() const noexcept { return grid_; }
  const std::vector<VariableInfo>& variables() const noexcept { return variables_; }
  const std::vector<int>& hours() const noexcept { return hours_; }
  const ClimatologySpec& spec() const noexcept { return spec_; }

  bool has(std::size_t var, int doy, int hour) const;
  /// Throws DataError naming the missing (variable, day, hour) bin.
  const GridArrayd& at(std::size_t var, int doy, int hour) const;
  const GridArrayd& at(const VariableKey& key, TimePoint valid_time) const;
  void set(std::size_t var, int doy, int hour, GridArrayd mean);

  std::optional<std::size_t> variable_index(const VariableKey& key) const;

  /// Container form: one time per (day, hour) bin in the reference year 2001.
  Dataset to_dataset() const;
  static Climatology from_dataset(const Dataset& data);

 private:
  std::size_t slot(std::size_t var, int doy, std::size_t hour_idx) const;
  std::optional<std::size_t> hour_index(int hour) const;

  std::shared_ptr<const GridSpec> grid_;
  std::vector<VariableInfo> variables_;
  std::vector<int> hours_;
  ClimatologySpec spec_;
  std::vector<std::optional<GridArrayd>> bins_;
};

inline constexpr int kClimatologyReferenceYear = 2001;

/// Gaussian-weighted sliding-window climatology. For every (day d, hour h)
/// the mean over all samples at hour h whose circular day distance from d
/// is at most window_days / 2, weighted by exp(-dd^2 / (2 s^2)) and
/// renormalized. s = 0 keeps only same-day samples. Throws DataError listing
/// the empty windows.
Climatology compute_climatology(const Dataset& data, const ClimatologySpec& spec = {});

/// Circular distance between two 365-day-calendar days.
int circular_day_distance(int a, int b);

}  // namespace nwpkit
