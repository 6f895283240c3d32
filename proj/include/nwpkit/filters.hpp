#pragma once

#include <optional>

#include "nwpkit/grid.hpp"

namespace nwpkit {

struct DiffusionSpec {
  /// nu * dt / a^2 per step (unit sphere)
  double nu_dt = 0.0;
  int steps = 0;
};

/// Largest admissible nu_dt: the smaller of
/// 0.2 / max(1 / dphi_min^2, 1 / (cos^2(lat_polar) dlon^2)) and the
/// Gershgorin bound 1 / max_i diag(-L)_i of the discrete operator, which
/// keeps each explicit step non-expansive in the area-weighted norm.
double diffusion_stability_limit(const GridSpec& grid);

/// Discrete spherical Laplacian on the unit sphere. The meridional part is
/// in flux form over latitude cells whose widths in sin(lat) equal the area
/// weights: interface fluxes cos(lat_{i+1/2}) (f_{i+1} - f_i) / (lat_{i+1} - lat_i)
/// with zero flux through the poles, divided by the cell width. The zonal
/// part is the periodic second difference over cos^2(lat) dlon^2. The
/// area-weighted sum of the result is zero up to rounding.
GridArrayd spherical_laplacian(const GridSpec& grid, const GridArrayd& values);

/// Forward-Euler steps of F <- F + nu_dt * lap(F). Throws ArgumentError
/// stating the limit when nu_dt exceeds diffusion_stability_limit.
GridArrayd laplacian_diffuse(const GridSpec& grid, const GridArrayd& values, const DiffusionSpec& spec);
Field laplacian_diffuse(const Field& field, const DiffusionSpec& spec);

struct PoleFilterSpec {
  /// Rows with |lat| > start_lat are filtered.
  double start_lat = 60.0;
  /// Latitude at which the cutoff equals the Nyquist wavenumber; start_lat when unset.
  std::optional<double> reference_lat;

  void validate() const;
};

/// Highest zonal wavenumber kept on a row at `lat_deg`:
/// floor(n_lon / 2 * cos(lat) / cos(reference_lat)), capped at n_lon / 2.
Index pole_filter_cutoff(double lat_deg, Index n_lon, const PoleFilterSpec& spec);

/// Zonal low-pass of every row poleward of start_lat; other rows are copied.
GridArrayd pole_filter(const GridSpec& grid, const GridArrayd& values, const PoleFilterSpec& spec);
Field pole_filter(const Field& field, const PoleFilterSpec& spec);

}  // namespace nwpkit
