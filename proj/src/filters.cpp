#include "nwpkit/filters.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/FFT>

#include "nwpkit/errors.hpp"
#include "nwpkit/parallel.hpp"

namespace nwpkit {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Meridional flux-form coefficients: k[i] couples rows i and i+1.
struct MeridionalStencil {
  Eigen::ArrayXd k;       // n_lat - 1 interface conductances
  Eigen::ArrayXd width;   // n_lat cell widths in sin(lat)
  Eigen::ArrayXd zonal;   // n_lat coefficients 1 / (cos^2 lat dlon^2)
};

MeridionalStencil make_stencil(const GridSpec& grid) {
  const Index n = grid.n_lat();
  MeridionalStencil s;
  s.width = grid.area_weights().array();
  s.k.resize(std::max<Index>(n - 1, 0));
  double edge_mu = 1.0;
  for (Index i = 0; i + 1 < n; ++i) {
    edge_mu -= s.width[i];
    const double edge_cos = std::sqrt(std::max(0.0, (1.0 - edge_mu) * (1.0 + edge_mu)));
    const double dphi = (grid.latitudes()[i] - grid.latitudes()[i + 1]) * kDeg;
    s.k[i] = edge_cos / dphi;
  }
  const double dlon = 2.0 * std::numbers::pi / static_cast<double>(grid.n_lon());
  s.zonal = 1.0 / (grid.cos_latitudes().array().square() * dlon * dlon);
  return s;
}

}  // namespace

double diffusion_stability_limit(const GridSpec& grid) {
  const auto s = make_stencil(grid);
  const Index n = grid.n_lat();
  const double dlon = 2.0 * std::numbers::pi / static_cast<double>(grid.n_lon());
  double dphi_min = std::numeric_limits<double>::infinity();
  for (Index i = 0; i + 1 < n; ++i) {
    dphi_min = std::min(dphi_min, (grid.latitudes()[i] - grid.latitudes()[i + 1]) * kDeg);
  }
  const double cos_min = grid.cos_latitudes().minCoeff();
  const double stiff = std::max(n > 1 ? 1.0 / (dphi_min * dphi_min) : 0.0, 1.0 / (cos_min * cos_min * dlon * dlon));
  double max_diag = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double k_up = i > 0 ? s.k[i - 1] : 0.0;
    const double k_dn = i + 1 < n ? s.k[i] : 0.0;
    max_diag = std::max(max_diag, (k_up + k_dn) / s.width[i] + 2.0 * s.zonal[i]);
  }
  return std::min(0.2 / stiff, 1.0 / max_diag);
}

GridArrayd spherical_laplacian(const GridSpec& grid, const GridArrayd& f) {
  if (f.rows() != grid.n_lat() || f.cols() != grid.n_lon()) {
    throw ArgumentError("laplacian: array shape does not match the grid");
  }
  const auto s = make_stencil(grid);
  const Index n = grid.n_lat(), nl = grid.n_lon();
  GridArrayd out(n, nl);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const Index i = static_cast<Index>(ii);
    Eigen::Array<double, 1, Eigen::Dynamic> flux = Eigen::Array<double, 1, Eigen::Dynamic>::Zero(nl);
    if (i > 0) flux += s.k[i - 1] * (f.row(i - 1) - f.row(i));
    if (i + 1 < n) flux += s.k[i] * (f.row(i + 1) - f.row(i));
    auto row = out.row(i);
    row = flux / s.width[i];
    const auto fr = f.row(i);
    for (Index j = 0; j < nl; ++j) {
      const double west = fr[j == 0 ? nl - 1 : j - 1], east = fr[j + 1 == nl ? 0 : j + 1];
      row[j] += s.zonal[i] * (west - 2.0 * fr[j] + east);
    }
  });
  return out;
}

GridArrayd laplacian_diffuse(const GridSpec& grid, const GridArrayd& values, const DiffusionSpec& spec) {
  if (spec.steps < 0) throw ArgumentError("diffusion steps must be non-negative");
  if (!(spec.nu_dt >= 0.0)) throw ArgumentError("diffusion nu_dt must be non-negative");
  const double limit = diffusion_stability_limit(grid);
  if (spec.nu_dt > limit) {
    std::ostringstream os;
    os.precision(6);
    os << "diffusion nu_dt=" << spec.nu_dt << " exceeds the stability limit " << limit << " for this grid";
    throw ArgumentError(os.str());
  }
  GridArrayd f = values;
  for (int step = 0; step < spec.steps; ++step) f += spec.nu_dt * spherical_laplacian(grid, f);
  return f;
}

Field laplacian_diffuse(const Field& field, const DiffusionSpec& spec) {
  return field.with_values(laplacian_diffuse(field.grid(), field.values(), spec));
}

void PoleFilterSpec::validate() const {
  if (!(start_lat > 0.0 && start_lat < 90.0)) {
    throw ArgumentError("pole filter start_lat must be in (0, 90), got " + std::to_string(start_lat));
  }
  if (reference_lat && !(*reference_lat >= 0.0 && *reference_lat < 90.0)) {
    throw ArgumentError("pole filter reference_lat must be in [0, 90)");
  }
}

Index pole_filter_cutoff(double lat_deg, Index n_lon, const PoleFilterSpec& spec) {
  const double ref = spec.reference_lat.value_or(spec.start_lat);
  const double ratio = std::cos(lat_deg * kDeg) / std::cos(ref * kDeg);
  const double m = std::floor(static_cast<double>(n_lon / 2) * ratio);
  return std::clamp<Index>(static_cast<Index>(m), 0, n_lon / 2);
}

GridArrayd pole_filter(const GridSpec& grid, const GridArrayd& values, const PoleFilterSpec& spec) {
  spec.validate();
  if (values.rows() != grid.n_lat() || values.cols() != grid.n_lon()) {
    throw ArgumentError("pole filter: array shape does not match the grid");
  }
  const Index n_lon = grid.n_lon();
  GridArrayd out = values;
  parallel_for(static_cast<std::size_t>(grid.n_lat()), [&](std::size_t ii) {
    const Index i = static_cast<Index>(ii);
    const double lat = grid.latitudes()[i];
    if (std::abs(lat) <= spec.start_lat) return;
    const Index cutoff = pole_filter_cutoff(lat, n_lon, spec);
    if (2 * cutoff + 1 >= n_lon) return;
    Eigen::FFT<double> fft;
    std::vector<double> row(values.row(i).data(), values.row(i).data() + n_lon);
    std::vector<std::complex<double>> spec_row;
    fft.fwd(spec_row, row);
    for (Index m = cutoff + 1; m <= n_lon - cutoff - 1; ++m) spec_row[m] = 0.0;
    fft.inv(row, spec_row);
    const double mean_before = values.row(i).mean();
    for (Index j = 0; j < n_lon; ++j) out(i, j) = row[j];
    // Restore the zonal mean lost to rounding.
    out.row(i) += mean_before - out.row(i).mean();
  });
  return out;
}

Field pole_filter(const Field& field, const PoleFilterSpec& spec) {
  return field.with_values(pole_filter(field.grid(), field.values(), spec));
}

}  // namespace nwpkit
