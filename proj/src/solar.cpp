#include "nwpkit/solar.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nwpkit/errors.hpp"
#include "nwpkit/parallel.hpp"

namespace nwpkit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr double kJ2000UnixSeconds = 946728000.0;  // 2000-01-01T12:00:00Z

double wrap_degrees(double x) {
  x = std::fmod(x, 360.0);
  return x < 0.0 ? x + 360.0 : x;
}

// Wraps to [-pi, pi).
double wrap_pi(double x) {
  x = std::fmod(x + kPi, 2.0 * kPi);
  if (x < 0.0) x += 2.0 * kPi;
  return x - kPi;
}

}  // namespace

void SolarConfig::validate() const {
  if (cycle_length <= 0) throw ArgumentError("solar cycle length must be positive");
  if (!(calendar_year_days > 0.0)) throw ArgumentError("calendar year length must be positive");
  if (minute_step_seconds <= 0 || 3600 % minute_step_seconds != 0) {
    throw ArgumentError("solar sampling step must divide one hour");
  }
  int prev = 0;
  bool first = true;
  for (const auto& [year, value] : gsc_table) {
    if (!first && year != prev + 1) {
      throw ArgumentError("solar constant table has a gap after " + std::to_string(prev));
    }
    if (!(value >= 1300.0 && value <= 1450.0)) {
      throw ArgumentError("solar constant for " + std::to_string(year) + " is outside [1300, 1450]");
    }
    prev = year;
    first = false;
  }
}

std::map<int, double> read_gsc_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::open, "cannot open " + path.string(), 0);
  std::map<int, double> table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string ys, vs;
    std::getline(ls, ys, ',');
    std::getline(ls, vs);
    try {
      std::size_t used = 0;
      const int year = std::stoi(ys, &used);
      const double value = std::stod(vs);
      if (!table.emplace(year, value).second) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate year " + ys);
      }
    } catch (const std::logic_error&) {
      if (line_no == 1) continue;
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected year,value");
    }
  }
  return table;
}

int gsc_table_year(int year, const SolarConfig& config) {
  if (config.gsc_table.empty()) return year;
  const int first = config.gsc_table.begin()->first;
  const int last = config.gsc_table.rbegin()->first;
  if (year < first) {
    throw DataError("no solar constant before " + std::to_string(first) + " (requested " +
                    std::to_string(year) + ")");
  }
  int mapped = year;
  if (year > last) {
    const int off = (year - config.cycle_start) % config.cycle_length;
    mapped = config.cycle_start + (off < 0 ? off + config.cycle_length : off);
  }
  if (!config.gsc_table.count(mapped)) {
    throw DataError("solar constant table does not cover year " + std::to_string(mapped) +
                    " (mapped from " + std::to_string(year) + ")");
  }
  return mapped;
}

double solar_constant_at(TimePoint time, const SolarConfig& config) {
  if (config.gsc_table.empty()) return kDefaultSolarConstant;
  const int year = year_of(time);
  const double since_jan1 =
      static_cast<double>((time - make_time(year, 1, 1)).count());
  const double frac = since_jan1 / (config.calendar_year_days * 86400.0);
  const double a = config.gsc_table.at(gsc_table_year(year, config));
  const double b = config.gsc_table.at(gsc_table_year(year + 1, config));
  return a + (b - a) * frac;
}

SunPosition sun_position(double unix_seconds) {
  const double n = (unix_seconds - kJ2000UnixSeconds) / 86400.0;
  const double L = wrap_degrees(280.460 + 0.9856474 * n);
  const double g = wrap_degrees(357.528 + 0.9856003 * n) * kDeg;
  const double lambda = (L + 1.915 * std::sin(g) + 0.020 * std::sin(2.0 * g)) * kDeg;
  const double eps = (23.439 - 0.0000004 * n) * kDeg;
  const double ra = std::atan2(std::cos(eps) * std::sin(lambda), std::cos(lambda));
  SunPosition p;
  p.declination = std::asin(std::sin(eps) * std::sin(lambda));
  p.equation_of_time = wrap_pi(L * kDeg - ra);
  p.distance_au = 1.00014 - 0.01671 * std::cos(g) - 0.00014 * std::cos(2.0 * g);
  return p;
}

SunPosition sun_position(TimePoint time) {
  return sun_position(static_cast<double>(time.time_since_epoch().count()));
}

namespace {

// Hour angle at longitude 0 from UTC seconds of day and the equation of time.
double greenwich_hour_angle(double seconds_of_day, double eot) {
  return 2.0 * kPi * seconds_of_day / 86400.0 - kPi + eot;
}

}  // namespace

SolarGeometry solar_geometry(TimePoint time, double lat_deg, double lon_deg) {
  if (!(std::abs(lat_deg) <= 90.0)) throw ArgumentError("latitude outside [-90, 90]");
  const SunPosition sun = sun_position(time);
  const double h =
      wrap_pi(greenwich_hour_angle(static_cast<double>(seconds_of_day(time)), sun.equation_of_time) +
              lon_deg * kDeg);
  const double phi = lat_deg * kDeg;
  const double cz =
      std::sin(phi) * std::sin(sun.declination) + std::cos(phi) * std::cos(sun.declination) * std::cos(h);
  return {sun.declination, h, sun.distance_au, std::acos(std::clamp(cz, -1.0, 1.0))};
}

double instantaneous_irradiance(TimePoint time, double lat_deg, double lon_deg,
                                const SolarConfig& config) {
  const auto geo = solar_geometry(time, lat_deg, lon_deg);
  const double g = solar_constant_at(time, config);
  return toa_irradiance(g, geo.distance_au, std::cos(geo.zenith));
}

namespace {

struct SunSample {
  double scale;  // G_SC / d^2
  double sin_dec;
  double cos_dec;
};

// Sun samples and per-column cos(hour angle) for the sampling instants in
// [start, start + 1 h).
void hour_samples(TimePoint start, const GridSpec& grid, const SolarConfig& config,
                  std::vector<SunSample>& sun, Eigen::ArrayXXd& cos_h) {
  const int n = 3600 / config.minute_step_seconds;
  sun.resize(n);
  cos_h.resize(n, grid.n_lon());
  const Eigen::VectorXd& lon = grid.longitudes();
  for (int k = 0; k < n; ++k) {
    const TimePoint t = start + std::chrono::seconds{k * config.minute_step_seconds};
    const SunPosition p = sun_position(t);
    const double g = solar_constant_at(t, config);
    sun[k] = {g / (p.distance_au * p.distance_au), std::sin(p.declination), std::cos(p.declination)};
    const double h0 = greenwich_hour_angle(static_cast<double>(seconds_of_day(t)), p.equation_of_time);
    for (Index j = 0; j < grid.n_lon(); ++j) cos_h(k, j) = std::cos(h0 + lon[j] * kDeg);
  }
}

}  // namespace

GridArrayd instantaneous_irradiance(TimePoint time, const GridSpec& grid, const SolarConfig& config) {
  const SunPosition p = sun_position(time);
  const double scale = solar_constant_at(time, config) / (p.distance_au * p.distance_au);
  const double sd = std::sin(p.declination), cd = std::cos(p.declination);
  const double h0 = greenwich_hour_angle(static_cast<double>(seconds_of_day(time)), p.equation_of_time);
  Eigen::ArrayXd cos_h(grid.n_lon());
  for (Index j = 0; j < grid.n_lon(); ++j) cos_h[j] = std::cos(h0 + grid.longitudes()[j] * kDeg);
  GridArrayd out(grid.n_lat(), grid.n_lon());
  for (Index i = 0; i < grid.n_lat(); ++i) {
    const double a = grid.sin_latitudes()[i] * sd, b = grid.cos_latitudes()[i] * cd;
    out.row(i) = (scale * (a + b * cos_h.transpose())).max(0.0);
  }
  return out;
}

Field accumulated_irradiance(TimePoint window_start, std::chrono::hours window,
                             std::shared_ptr<const GridSpec> grid, const SolarConfig& config) {
  config.validate();
  if (!grid) throw ArgumentError("accumulated_irradiance: no grid");
  if (window.count() <= 0) throw ArgumentError("accumulation window must be at least one hour");
  const Index rows = grid->n_lat(), cols = grid->n_lon();
  const double dt = static_cast<double>(config.minute_step_seconds);
  GridArrayd total = GridArrayd::Zero(rows, cols);
  std::vector<SunSample> sun;
  Eigen::ArrayXXd cos_h;
  GridArrayd hour(rows, cols);
  for (long hr = 0; hr < window.count(); ++hr) {
    hour_samples(window_start + std::chrono::hours{hr}, *grid, config, sun, cos_h);
    parallel_for(static_cast<std::size_t>(rows), [&](std::size_t i) {
      const double mu = grid->sin_latitudes()[i], c = grid->cos_latitudes()[i];
      auto acc = hour.row(static_cast<Index>(i));
      acc.setZero();
      for (std::size_t k = 0; k < sun.size(); ++k) {
        const double a = mu * sun[k].sin_dec, b = c * sun[k].cos_dec;
        acc += (sun[k].scale * (a + b * cos_h.row(static_cast<Index>(k)))).max(0.0) * dt;
      }
    });
    total += hour;
  }
  return Field(std::move(grid), std::move(total), VariableKey{"I_s", "sfc"}, window_start + window);
}

Dataset solar_forcing(TimePoint first_end, std::chrono::hours step, std::size_t n_windows,
                      std::shared_ptr<const GridSpec> grid, const SolarConfig& config) {
  std::vector<TimePoint> times;
  std::vector<Field> fields;
  for (std::size_t w = 0; w < n_windows; ++w) {
    const TimePoint end = first_end + step * static_cast<long>(w);
    fields.push_back(accumulated_irradiance(end - step, step, grid, config));
    times.push_back(end);
  }
  Dataset d(std::move(grid), {{{"I_s", "sfc"}, "J m-2"}}, std::move(times), std::move(fields));
  d.attributes()["accumulation_hours"] = step.count();
  return d;
}

}  // namespace nwpkit
