#pragma once

#include <Eigen/Dense>
#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nwpkit/time.hpp"

namespace nwpkit {

using Eigen::Index;

/// Dense global field storage: rows are latitudes (north to south), columns
/// are longitudes. Row-major so a latitude circle is contiguous.
template <typename Scalar>
using GridArray = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GridArrayd = GridArray<double>;
using GridArrayf = GridArray<float>;

enum class GridKind { gaussian, equiangular };

std::string_view to_string(GridKind kind);
GridKind grid_kind_from_string(std::string_view text);

/// Gauss-Legendre nodes on [-1, 1] in descending order and their weights.
/// Nodes converge by Newton iteration on P_n to machine precision.
void gauss_legendre(Index n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// Geometry of a regular global latitude-longitude grid.
///
/// Latitudes are ordered north to south. Longitudes are uniform with step
/// 360/n_lon starting at `lon_origin`. For Gaussian grids the sines of the
/// latitudes are the Gauss-Legendre nodes and are kept exactly as computed,
/// so spectral transforms never go through asin/sin round trips.
class GridSpec {
 public:
  static GridSpec gaussian(Index n_lat, Index n_lon, double lon_origin = 0.0);
  static GridSpec equiangular(Index n_lat, Index n_lon, double lon_origin = 0.0);

  GridKind kind() const noexcept { return kind_; }
  Index n_lat() const noexcept { return sin_lat_.size(); }
  Index n_lon() const noexcept { return n_lon_; }
  Index size() const noexcept { return n_lat() * n_lon_; }
  double lon_origin() const noexcept { return lon_origin_; }
  double lon_step_deg() const noexcept { return 360.0 / static_cast<double>(n_lon_); }

  const Eigen::VectorXd& latitudes() const noexcept { return lat_deg_; }
  const Eigen::VectorXd& sin_latitudes() const noexcept { return sin_lat_; }
  /// cos(phi) evaluated as sqrt((1 - mu)(1 + mu)) from the stored sines.
  Eigen::VectorXd cos_latitudes() const;
  Eigen::VectorXd longitudes() const;

  /// Gauss-Legendre weights; empty for equiangular grids.
  const Eigen::VectorXd& quad_weights() const noexcept { return quad_weights_; }

  /// Cell areas on the unit sphere divided by 2 pi, summing to 2: the
  /// quadrature weights on a Gaussian grid, latitude band areas otherwise.
  const Eigen::VectorXd& area_weights() const noexcept { return area_weights_; }

  friend bool operator==(const GridSpec& a, const GridSpec& b);

 private:
  GridSpec() = default;

  GridKind kind_ = GridKind::gaussian;
  Index n_lon_ = 0;
  double lon_origin_ = 0.0;
  Eigen::VectorXd lat_deg_;
  Eigen::VectorXd sin_lat_;
  Eigen::VectorXd quad_weights_;
  Eigen::VectorXd area_weights_;
};

/// Regular Gaussian grid; n_lat must be even. Warns on stderr when
/// n_lon < 2 n_lat.
GridSpec make_gaussian_grid(Index n_lat, Index n_lon);

enum class WeightNormalization {
  unit_mean,  ///< cos(phi) / mean(cos(phi)); a uniform error c gives RMSE c
  cosine,     ///< raw cos(phi)
};

/// Per-latitude verification weights.
Eigen::VectorXd metric_weights(const GridSpec& grid,
                               WeightNormalization norm = WeightNormalization::unit_mean);
Eigen::VectorXd metric_weights(const Eigen::Ref<const Eigen::VectorXd>& latitudes_deg,
                               WeightNormalization norm = WeightNormalization::unit_mean);

// ---------------------------------------------------------------------------
// Variables

/// A variable on one vertical level. Level tags: "sfc" for single-level
/// fields, "p<hPa>" for pressure levels, "ml<k>" for model levels.
struct VariableKey {
  std::string name;
  std::string level = "sfc";

  std::string label() const;
  auto operator<=>(const VariableKey&) const = default;
};

/// Parses "name" or "name@level".
VariableKey parse_variable_key(std::string_view text);

std::optional<double> pressure_hpa(std::string_view level_tag);

struct VariableInfo {
  VariableKey key;
  std::string units;
  bool operator==(const VariableInfo&) const = default;
};

struct RegisteredVariable {
  std::string_view short_name;
  std::string_view long_name;
  std::string_view units;
  bool upper_air;
};

/// Known variables and their units; nullptr for names outside the registry.
const RegisteredVariable* find_variable(std::string_view short_name);
const std::vector<RegisteredVariable>& variable_registry();

/// Throws DataError if `info` names a registered variable with other units.
void check_units(const VariableInfo& info);

// ---------------------------------------------------------------------------
// Fields

/// One global 2-D scalar field. Values are finite and shaped to the grid.
class Field {
 public:
  Field(std::shared_ptr<const GridSpec> grid, GridArrayd values, VariableKey key,
        TimePoint valid_time);

  const GridSpec& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const GridSpec>& grid_ptr() const noexcept { return grid_; }
  const GridArrayd& values() const noexcept { return values_; }
  const VariableKey& key() const noexcept { return key_; }
  TimePoint valid_time() const noexcept { return valid_time_; }

  /// Same metadata, new values (validated).
  Field with_values(GridArrayd values) const;
  Field with_time(TimePoint t) const;

 private:
  std::shared_ptr<const GridSpec> grid_;
  GridArrayd values_;
  VariableKey key_;
  TimePoint valid_time_;
};

/// Fields of one variable ordered by valid time with a constant step.
class FieldSeries {
 public:
  explicit FieldSeries(std::vector<Field> fields);

  std::size_t size() const noexcept { return fields_.size(); }
  bool empty() const noexcept { return fields_.empty(); }
  const Field& operator[](std::size_t i) const { return fields_[i]; }
  auto begin() const { return fields_.begin(); }
  auto end() const { return fields_.end(); }
  /// Zero for series of fewer than two fields.
  std::chrono::seconds step() const noexcept { return step_; }

 private:
  std::vector<Field> fields_;
  std::chrono::seconds step_{0};
};

}  // namespace nwpkit
