#include "nwpkit/grid.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "nwpkit/errors.hpp"

namespace nwpkit {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

// P_n(x) and P_{n-1}(x) by the three-term recurrence.
void legendre_pair(Index n, double x, double& pn, double& pn1) {
  double p0 = 1.0;
  double p1 = x;
  for (Index k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
    p0 = p1;
    p1 = p2;
  }
  pn = p1;
  pn1 = p0;
}

void check_sizes(Index n_lat, Index n_lon) {
  if (n_lat < 2) throw ArgumentError("grid needs n_lat >= 2, got " + std::to_string(n_lat));
  if (n_lon < 4 || n_lon % 2 != 0) {
    throw ArgumentError("grid needs an even n_lon >= 4, got " + std::to_string(n_lon));
  }
}

}  // namespace

std::string_view to_string(GridKind kind) {
  return kind == GridKind::gaussian ? "gaussian" : "equiangular";
}

GridKind grid_kind_from_string(std::string_view text) {
  if (text == "gaussian") return GridKind::gaussian;
  if (text == "equiangular") return GridKind::equiangular;
  throw ArgumentError("unknown grid kind '" + std::string(text) + "'");
}

void gauss_legendre(Index n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n < 1) throw ArgumentError("Gauss-Legendre order must be positive");
  nodes.resize(n);
  weights.resize(n);
  const Index half = (n + 1) / 2;
  for (Index k = 0; k < half; ++k) {
    // Tricomi-style initial guess for the k-th largest root.
    double x = std::cos(std::numbers::pi * (static_cast<double>(k) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pn = 0.0, pn1 = 0.0, dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      legendre_pair(n, x, pn, pn1);
      dp = static_cast<double>(n) * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;  // quadratic convergence: x is now exact to rounding
    }
    legendre_pair(n, x, pn, pn1);
    dp = static_cast<double>(n) * (x * pn - pn1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[k] = x;
    nodes[n - 1 - k] = -x;
    weights[k] = w;
    weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

GridSpec GridSpec::gaussian(Index n_lat, Index n_lon, double lon_origin) {
  check_sizes(n_lat, n_lon);
  GridSpec g;
  g.kind_ = GridKind::gaussian;
  g.n_lon_ = n_lon;
  g.lon_origin_ = lon_origin;
  gauss_legendre(n_lat, g.sin_lat_, g.quad_weights_);
  g.lat_deg_ = g.sin_lat_.unaryExpr([](double mu) { return std::asin(mu) * kDeg; });
  g.area_weights_ = g.quad_weights_;
  return g;
}

GridSpec GridSpec::equiangular(Index n_lat, Index n_lon, double lon_origin) {
  check_sizes(n_lat, n_lon);
  GridSpec g;
  g.kind_ = GridKind::equiangular;
  g.n_lon_ = n_lon;
  g.lon_origin_ = lon_origin;
  const double dlat = 180.0 / static_cast<double>(n_lat);
  g.lat_deg_.resize(n_lat);
  g.sin_lat_.resize(n_lat);
  g.area_weights_.resize(n_lat);
  for (Index i = 0; i < n_lat; ++i) {
    const double lat = 90.0 - (static_cast<double>(i) + 0.5) * dlat;
    g.lat_deg_[i] = lat;
    g.sin_lat_[i] = std::sin(lat / kDeg);
    const double top = 90.0 - static_cast<double>(i) * dlat;
    const double bottom = 90.0 - static_cast<double>(i + 1) * dlat;
    g.area_weights_[i] = std::sin(top / kDeg) - std::sin(bottom / kDeg);
  }
  return g;
}

Eigen::VectorXd GridSpec::cos_latitudes() const {
  return sin_lat_.unaryExpr([](double mu) { return std::sqrt((1.0 - mu) * (1.0 + mu)); });
}

Eigen::VectorXd GridSpec::longitudes() const {
  Eigen::VectorXd lon(n_lon_);
  const double step = lon_step_deg();
  for (Index j = 0; j < n_lon_; ++j) {
    lon[j] = std::fmod(lon_origin_ + static_cast<double>(j) * step, 360.0);
    if (lon[j] < 0.0) lon[j] += 360.0;
  }
  return lon;
}

bool operator==(const GridSpec& a, const GridSpec& b) {
  return a.kind_ == b.kind_ && a.n_lon_ == b.n_lon_ && a.lon_origin_ == b.lon_origin_ &&
         a.sin_lat_.size() == b.sin_lat_.size() && a.sin_lat_ == b.sin_lat_;
}

GridSpec make_gaussian_grid(Index n_lat, Index n_lon) {
  if (n_lat % 2 != 0) {
    throw ArgumentError("Gaussian grid needs an even n_lat, got " + std::to_string(n_lat));
  }
  if (n_lon < 2 * n_lat) {
    std::clog << "warning: n_lon=" << n_lon << " < 2*n_lat=" << 2 * n_lat
              << "; zonal resolution cannot represent the full Gaussian truncation\n";
  }
  return GridSpec::gaussian(n_lat, n_lon);
}

Eigen::VectorXd metric_weights(const Eigen::Ref<const Eigen::VectorXd>& latitudes_deg,
                               WeightNormalization norm) {
  if (latitudes_deg.size() == 0) throw ArgumentError("metric_weights: no latitudes");
  Eigen::VectorXd w = latitudes_deg.unaryExpr([](double lat) { return std::cos(lat / kDeg); });
  if (norm == WeightNormalization::unit_mean) w /= w.mean();
  return w;
}

Eigen::VectorXd metric_weights(const GridSpec& grid, WeightNormalization norm) {
  Eigen::VectorXd w = grid.cos_latitudes();
  if (norm == WeightNormalization::unit_mean) w /= w.mean();
  return w;
}

// ---------------------------------------------------------------------------

std::string VariableKey::label() const { return name + "@" + level; }

VariableKey parse_variable_key(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) return {std::string(text), "sfc"};
  return {std::string(text.substr(0, at)), std::string(text.substr(at + 1))};
}

std::optional<double> pressure_hpa(std::string_view level_tag) {
  if (level_tag.size() < 2 || level_tag[0] != 'p') return std::nullopt;
  try {
    std::size_t used = 0;
    const double p = std::stod(std::string(level_tag.substr(1)), &used);
    if (used != level_tag.size() - 1 || !(p > 0.0)) return std::nullopt;
    return p;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

const std::vector<RegisteredVariable>& variable_registry() {
  static const std::vector<RegisteredVariable> registry = {
      {"U", "Zonal Wind", "m s-1", true},
      {"V", "Meridional Wind", "m s-1", true},
      {"T", "Air Temperature", "K", true},
      {"Q", "Specific Humidity", "kg kg-1", true},
      {"SP", "Surface Pressure", "Pa", false},
      {"t2m", "2-Meter Temperature", "K", false},
      {"V500", "Meridional Wind at 500 hPa", "m s-1", false},
      {"U500", "Zonal Wind at 500 hPa", "m s-1", false},
      {"T500", "Temperature at 500 hPa", "K", false},
      {"Z500", "Geopotential Height at 500 hPa", "m", false},
      {"Q500", "Specific Humidity at 500 hPa", "kg kg-1", false},
      {"Z_SFC", "Geopotential at surface", "m2 s-2", false},
      {"LSM", "Land Sea Mask", "1", false},
      {"I_s", "Integrated instantaneous solar irradiance", "J m-2", false},
  };
  return registry;
}

const RegisteredVariable* find_variable(std::string_view short_name) {
  for (const auto& v : variable_registry()) {
    if (v.short_name == short_name) return &v;
  }
  return nullptr;
}

void check_units(const VariableInfo& info) {
  if (const auto* reg = find_variable(info.key.name); reg && reg->units != info.units) {
    throw DataError("variable " + info.key.label() + " has units '" + info.units +
                    "', expected '" + std::string(reg->units) + "'");
  }
}

// ---------------------------------------------------------------------------

Field::Field(std::shared_ptr<const GridSpec> grid, GridArrayd values, VariableKey key,
             TimePoint valid_time)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      key_(std::move(key)),
      valid_time_(valid_time) {
  if (!grid_) throw ArgumentError("field " + key_.label() + " has no grid");
  if (values_.rows() != grid_->n_lat() || values_.cols() != grid_->n_lon()) {
    throw ArgumentError("field " + key_.label() + " has shape " +
                        std::to_string(values_.rows()) + "x" + std::to_string(values_.cols()) +
                        ", grid is " + std::to_string(grid_->n_lat()) + "x" +
                        std::to_string(grid_->n_lon()));
  }
  if (!values_.isFinite().all()) {
    throw DataError("field " + key_.label() + " at " + format_iso(valid_time_) +
                    " contains non-finite values");
  }
}

Field Field::with_values(GridArrayd values) const {
  return Field(grid_, std::move(values), key_, valid_time_);
}

Field Field::with_time(TimePoint t) const {
  Field out = *this;
  out.valid_time_ = t;
  return out;
}

FieldSeries::FieldSeries(std::vector<Field> fields) : fields_(std::move(fields)) {
  for (std::size_t i = 1; i < fields_.size(); ++i) {
    const Field& prev = fields_[i - 1];
    const Field& cur = fields_[i];
    if (!(cur.key() == prev.key())) {
      throw ArgumentError("series mixes variables " + prev.key().label() + " and " +
                          cur.key().label());
    }
    if (!(cur.grid() == prev.grid())) {
      throw ArgumentError("series " + cur.key().label() + " mixes grids");
    }
    const auto step = cur.valid_time() - prev.valid_time();
    if (step <= std::chrono::seconds{0}) {
      throw ArgumentError("series " + cur.key().label() + " is not strictly increasing at " +
                          format_iso(cur.valid_time()));
    }
    if (i == 1) {
      step_ = step;
    } else if (step != step_) {
      throw ArgumentError("series " + cur.key().label() + " has a non-uniform step at " +
                          format_iso(cur.valid_time()));
    }
  }
}

}  // namespace nwpkit
