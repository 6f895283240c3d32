#pragma once

#include <algorithm>
#include <filesystem>
#include <map>

#include "nwpkit/grid.hpp"
#include "nwpkit/io.hpp"

namespace nwpkit {

inline constexpr double kDefaultSolarConstant = 1361.0;  // W m-2

struct SolarConfig {
  /// Annual solar constant in W m-2, each value anchored at 1 January of its
  /// year. Empty means kDefaultSolarConstant for every time.
  std::map<int, double> gsc_table;
  /// Years past the end of the table reuse cycle_start + (y - cycle_start) mod cycle_length.
  int cycle_start = 1983;
  int cycle_length = 13;
  double calendar_year_days = 365.2425;
  int minute_step_seconds = 60;

  /// Throws ArgumentError on gaps in the table, values outside [1300, 1450]
  /// or non-positive cycle parameters.
  void validate() const;
};

/// Reads "year,value" lines; a non-numeric first line is taken as a header.
std::map<int, double> read_gsc_table(const std::filesystem::path& path);

/// Table year used for calendar year `year`. Throws DataError before the
/// table start or when the mapped year is missing.
int gsc_table_year(int year, const SolarConfig& config);

double solar_constant_at(TimePoint time, const SolarConfig& config);

/// Location-independent sun position.
struct SunPosition {
  double declination;      // radians
  double equation_of_time; // radians of hour angle (apparent minus mean solar time)
  double distance_au;
};

/// Astronomical Almanac low-precision formulas (about 0.01 degree in
/// declination for 1950-2050).
SunPosition sun_position(TimePoint time);
/// Same, for a time given as fractional seconds since the Unix epoch.
SunPosition sun_position(double unix_seconds);

struct SolarGeometry {
  double declination;  // radians
  double hour_angle;   // radians, zero at local solar noon, in [-pi, pi)
  double distance_au;
  double zenith;       // radians in [0, pi]
};

/// Sea-level geometry; lat and lon in degrees.
SolarGeometry solar_geometry(TimePoint time, double lat_deg, double lon_deg);

/// max(G_SC / d^2 * cos(zenith), 0) in W m-2.
inline double toa_irradiance(double gsc, double distance_au, double cos_zenith) {
  return std::max(gsc / (distance_au * distance_au) * cos_zenith, 0.0);
}

double instantaneous_irradiance(TimePoint time, double lat_deg, double lon_deg,
                                const SolarConfig& config = {});
GridArrayd instantaneous_irradiance(TimePoint time, const GridSpec& grid,
                                    const SolarConfig& config = {});

/// Energy in J m-2 received during [window_start, window_start + window):
/// the left-endpoint instantaneous irradiance of every minute step times its
/// length. Summed per whole hour first, then across hours, so a window equals
/// the sum of its one-hour sub-windows exactly. The returned I_s field is
/// labelled with the window end time.
Field accumulated_irradiance(TimePoint window_start, std::chrono::hours window,
                             std::shared_ptr<const GridSpec> grid, const SolarConfig& config = {});

/// Consecutive accumulation windows of length `step`, the first one ending at
/// `first_end`.
Dataset solar_forcing(TimePoint first_end, std::chrono::hours step, std::size_t n_windows,
                      std::shared_ptr<const GridSpec> grid, const SolarConfig& config = {});

}  // namespace nwpkit
