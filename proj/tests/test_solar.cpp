#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nwpkit/errors.hpp"
#include "nwpkit/solar.hpp"
#include "test_util.hpp"

using namespace nwpkit;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

SolarConfig table_1979_1995() {
  SolarConfig c;
  for (int y = 1979; y <= 1995; ++y) c.gsc_table[y] = 1360.0 + 0.1 * (y - 1979);
  return c;
}

}  // namespace

TEST_CASE("solar constant interpolation between annual values") {
  SolarConfig c;
  c.gsc_table = {{1990, 1365.0}, {1991, 1367.0}};
  CHECK(solar_constant_at(make_time(1990, 1, 1), c) == 1365.0);
  // Half a Gregorian year after 1 January.
  const TimePoint mid = make_time(1990, 1, 1) + std::chrono::seconds{static_cast<long>(365.2425 * 43200)};
  CHECK(solar_constant_at(mid, c) == doctest::Approx(1366.0).epsilon(1e-12));
  CHECK(solar_constant_at(make_time(1990, 12, 31, 23), c) > 1366.9);
  CHECK(solar_constant_at(make_time(2000, 5, 5), SolarConfig{}) == kDefaultSolarConstant);
}

TEST_CASE("years past the table reuse the 13-year cycle") {
  const auto c = table_1979_1995();
  CHECK(gsc_table_year(1995, c) == 1995);
  CHECK(gsc_table_year(1996, c) == 1983);
  CHECK(gsc_table_year(2009, c) == 1983);
  for (int y = 1996; y <= 2100; ++y) CHECK(gsc_table_year(y, c) == 1983 + (y - 1996) % 13);
  // 1995 interpolates toward the start of the repeated cycle.
  CHECK(solar_constant_at(make_time(1995, 7, 2), c) < c.gsc_table.at(1995));
  CHECK(solar_constant_at(make_time(2009, 1, 1), c) == c.gsc_table.at(1983));
  CHECK_THROWS_AS(solar_constant_at(make_time(1978, 6, 1), c), DataError);
}

TEST_CASE("solar config validation and CSV table") {
  SolarConfig c;
  c.gsc_table = {{1990, 1365.0}, {1992, 1367.0}};
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.gsc_table = {{1990, 1200.0}};
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.gsc_table = {{1990, 1365.0}};
  c.minute_step_seconds = 7;
  CHECK_THROWS_AS(c.validate(), ArgumentError);

  test::TempDir dir;
  std::ofstream(dir / "g.csv") << "year,value\n1990,1365.5\n1991,1366\n";
  const auto table = read_gsc_table(dir / "g.csv");
  CHECK(table.size() == 2);
  CHECK(table.at(1990) == 1365.5);
  std::ofstream(dir / "bad.csv") << "1990,1365\nx,y\n";
  CHECK_THROWS_AS(read_gsc_table(dir / "bad.csv"), DataError);
}

TEST_CASE("zenith against a published high-precision solar position") {
  // Reference example of the NREL solar position algorithm: 2003-10-17
  // 12:30:30 local (UTC-7), Golden CO; topocentric zenith 50.11162 degrees.
  const auto g = solar_geometry(parse_iso("2003-10-17T19:30:30Z"), 39.742476, -105.1786);
  CHECK(std::abs(g.zenith / kDeg - 50.11162) < 0.3);
}

TEST_CASE("equinox declination and solar noon at the equator") {
  // March equinox 2020 at 03:50 UTC.
  CHECK(std::abs(sun_position(parse_iso("2020-03-20T03:50Z")).declination / kDeg) < 0.02);
  const TimePoint t = parse_iso("2020-03-20T12:00Z");
  const auto sun = sun_position(t);
  // Longitude where the hour angle is zero at this instant.
  const double lon = -sun.equation_of_time / kDeg;
  CHECK(solar_geometry(t, 0.0, lon).zenith / kDeg < 0.5);
}

TEST_CASE("subsolar point and its antipode") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long> secs(0, 40L * 365 * 86400);
  for (int i = 0; i < 50; ++i) {
    const TimePoint t = make_time(1990, 1, 1) + std::chrono::seconds{secs(rng)};
    const auto sun = sun_position(t);
    const double lat = sun.declination / kDeg;
    const double h0 = 2 * kPi * seconds_of_day(t) / 86400.0 - kPi + sun.equation_of_time;
    const double lon = -h0 / kDeg;
    CHECK(solar_geometry(t, lat, lon).zenith < 1e-6);
    CHECK(solar_geometry(t, -lat, lon + 180.0).zenith > kPi - 1e-6);
    CHECK(sun.distance_au >= 0.98);
    CHECK(sun.distance_au <= 1.02);
  }
}

TEST_CASE("top-of-atmosphere irradiance formula") {
  CHECK(toa_irradiance(1361.0, 1.0, 1.0) == 1361.0);
  CHECK(toa_irradiance(1361.0, 1.0, std::cos(kPi / 3)) == doctest::Approx(680.5).epsilon(1e-15));
  CHECK(toa_irradiance(1361.0, 1.0, -0.3) == 0.0);
  CHECK(instantaneous_irradiance(parse_iso("2020-06-21T00:00Z"), -80.0, 0.0) == 0.0);
}

TEST_CASE("irradiance is never negative") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lat(-90, 90), lon(0, 360);
  std::uniform_int_distribution<long> secs(0, 40L * 365 * 86400);
  const auto grid = GridSpec::gaussian(16, 32);
  for (int i = 0; i < 200; ++i) {
    const TimePoint t = make_time(1990, 1, 1) + std::chrono::seconds{secs(rng)};
    CHECK(instantaneous_irradiance(t, lat(rng), lon(rng)) >= 0.0);
    if (i % 20 == 0) CHECK((instantaneous_irradiance(t, grid) >= 0.0).all());
  }
}

TEST_CASE("grid irradiance agrees with the pointwise form") {
  const auto grid = GridSpec::gaussian(8, 16);
  const TimePoint t = parse_iso("2017-08-21T18:25Z");
  const auto a = instantaneous_irradiance(t, grid);
  for (Index i = 0; i < 8; ++i) {
    for (Index j = 0; j < 16; ++j) {
      CHECK(a(i, j) == doctest::Approx(instantaneous_irradiance(t, grid.latitudes()[i], grid.longitudes()[j]))
                           .epsilon(1e-9)
                           .scale(1.0));
    }
  }
}

TEST_CASE("six-hour accumulation equals the sum of its hours bit-exactly") {
  auto grid = std::make_shared<const GridSpec>(GridSpec::gaussian(16, 32));
  const TimePoint start = parse_iso("2018-11-02T06:00Z");
  const auto six = accumulated_irradiance(start, std::chrono::hours{6}, grid);
  GridArrayd sum = GridArrayd::Zero(16, 32);
  for (int h = 0; h < 6; ++h) {
    sum += accumulated_irradiance(start + std::chrono::hours{h}, std::chrono::hours{1}, grid).values();
  }
  CHECK((six.values() == sum).all());
  CHECK(six.valid_time() == start + std::chrono::hours{6});
  CHECK(six.key() == VariableKey{"I_s", "sfc"});
}

TEST_CASE("polar night accumulates nothing") {
  auto grid = std::make_shared<const GridSpec>(GridSpec::gaussian(16, 32));
  const auto f = accumulated_irradiance(parse_iso("2021-06-21T00:00Z"), std::chrono::hours{6}, grid);
  CHECK((f.values().row(15) == 0.0).all());
  CHECK((f.values().row(0) > 0.0).all());
}

TEST_CASE("equatorial equinox daily total matches the closed form") {
  auto grid = std::make_shared<const GridSpec>(GridSpec::equiangular(3, 8));
  const TimePoint start = parse_iso("2020-03-20T00:00Z");
  const auto day = accumulated_irradiance(start, std::chrono::hours{24}, grid);
  const auto sun = sun_position(start + std::chrono::hours{12});
  const double expected = 86400.0 * kDefaultSolarConstant / (kPi * sun.distance_au * sun.distance_au);
  for (Index j = 0; j < 8; ++j) CHECK(std::abs(day.values()(1, j) / expected - 1.0) < 0.02);
}

TEST_CASE("global daily mean irradiance is a quarter of the flux at the Earth") {
  auto grid = std::make_shared<const GridSpec>(GridSpec::gaussian(64, 128));
  const TimePoint start = parse_iso("2019-01-03T00:00Z");
  const auto day = accumulated_irradiance(start, std::chrono::hours{24}, grid);
  const auto w = metric_weights(*grid);
  double mean = 0.0;
  for (Index i = 0; i < 64; ++i) mean += w[i] * day.values().row(i).mean();
  mean /= 64.0 * 86400.0;
  const double d = sun_position(start + std::chrono::hours{12}).distance_au;
  CHECK(std::abs(mean / (kDefaultSolarConstant / (4 * d * d)) - 1.0) < 0.01);
}

TEST_CASE("hemispheric symmetry near the equinox") {
  const auto grid = GridSpec::gaussian(32, 64);
  const TimePoint t = parse_iso("2020-03-20T03:50Z");
  const auto a = instantaneous_irradiance(t, grid);
  const auto sun = sun_position(t);
  const double g = kDefaultSolarConstant / (sun.distance_au * sun.distance_au);
  for (Index i = 0; i < 16; ++i) {
    // Mirror cells differ by at most 2 G |sin(lat) sin(dec)| / d^2.
    const double bound = 2.0 * g * std::abs(grid.sin_latitudes()[i] * std::sin(sun.declination)) + 1e-9;
    CHECK(((a.row(i) - a.row(31 - i)).abs() <= bound).all());
  }
}

TEST_CASE("solar forcing series labels windows by their end") {
  auto grid = std::make_shared<const GridSpec>(GridSpec::gaussian(4, 8));
  const auto d = solar_forcing(parse_iso("2020-01-01T06:00Z"), std::chrono::hours{6}, 3, grid);
  REQUIRE(d.n_times() == 3);
  CHECK(d.times()[2] == parse_iso("2020-01-01T18:00Z"));
  CHECK((d.field(1, 0).values() ==
         accumulated_irradiance(parse_iso("2020-01-01T06:00Z"), std::chrono::hours{6}, grid).values())
            .all());
}
