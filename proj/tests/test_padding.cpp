#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nwpkit/padding.hpp"
#include "test_util.hpp"

using namespace nwpkit;

namespace {

// Cell (i, j) holds i * n_lon + j.
GridArrayd cell_ids(Index n_lat, Index n_lon) {
  GridArrayd a(n_lat, n_lon);
  for (Index i = 0; i < n_lat; ++i)
    for (Index j = 0; j < n_lon; ++j) a(i, j) = static_cast<double>(i * n_lon + j);
  return a;
}

// Source cell of padded position (r, c), from the padding definition.
std::pair<Index, Index> oracle_source(Index r, Index c, Index n_lat, Index n_lon, const PadSpec& s) {
  const Index p = s.pad_ns, e = s.pad_ew;
  Index j = ((c - e) % n_lon + n_lon) % n_lon;
  const Index roll = s.mode == PadMode::rotate_reflect ? n_lon / 2 : 0;
  Index i;
  if (r < p) {
    i = p - 1 - r;  // reflected
    j = (j + roll) % n_lon;
  } else if (r >= p + n_lat) {
    i = n_lat - 1 - (r - p - n_lat);
    j = (j + roll) % n_lon;
  } else {
    i = r - p;
  }
  return {i, j};
}

}  // namespace

TEST_CASE("pad_ns = 1 rolls the first row by half the circle") {
  const auto x = cell_ids(4, 8);
  const auto p = pad(x, PadSpec{1, 0});
  REQUIRE(p.rows() == 6);
  for (Index j = 0; j < 8; ++j) {
    CHECK(p(0, j) == x(0, (j + 4) % 8));
    CHECK(p(5, j) == x(3, (j + 4) % 8));
  }
}

TEST_CASE("pad_ew = 2 wraps the dateline") {
  const auto x = cell_ids(4, 8);
  const auto p = pad(x, PadSpec{0, 2});
  REQUIRE(p.cols() == 12);
  CHECK((p.col(0) == x.col(6)).all());
  CHECK((p.col(11) == x.col(1)).all());
}

TEST_CASE("pad_ns = 2 reverses the polar row order") {
  const auto x = cell_ids(4, 8);
  const auto p = pad(x, PadSpec{2, 0});
  for (Index j = 0; j < 8; ++j) {
    CHECK(p(0, j) == x(1, (j + 4) % 8));
    CHECK(p(1, j) == x(0, (j + 4) % 8));
  }
}

TEST_CASE("pole-row provenance matches the index oracle") {
  for (Index pad_ns : {1, 2, 40}) {
    for (Index pad_ew : {0, 3, 40}) {
      for (PadMode mode : {PadMode::rotate_reflect, PadMode::reflect_only}) {
        const Index n_lat = 64, n_lon = 128;
        const PadSpec s{pad_ns, pad_ew, mode};
        const auto p = pad(cell_ids(n_lat, n_lon), s);
        bool all = true;
        for (Index r = 0; r < p.rows(); ++r) {
          for (Index c = 0; c < p.cols(); ++c) {
            const auto [i, j] = oracle_source(r, c, n_lat, n_lon, s);
            all = all && p(r, c) == static_cast<double>(i * n_lon + j);
          }
        }
        CHECK(all);
      }
    }
  }
}

TEST_CASE("unpad(pad(x)) is bit-exact for random fields and specs") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n_lat = 1 + static_cast<Index>(rng() % 12);
    const Index n_lon = 2 * (1 + static_cast<Index>(rng() % 12));
    const PadSpec s{static_cast<Index>(rng() % (n_lat + 1)), static_cast<Index>(rng() % (n_lon / 2 + 1)),
                    rng() % 2 ? PadMode::rotate_reflect : PadMode::reflect_only};
    const GridArrayd x = test::random_array(n_lat, n_lon, rng);
    const auto back = unpad(pad(x, s), s);
    REQUIRE(back.rows() == n_lat);
    CHECK(std::memcmp(back.data(), x.data(), sizeof(double) * x.size()) == 0);
  }
}

TEST_CASE("zero spec is the identity both ways") {
  std::mt19937_64 rng(9);
  const GridArrayd x = test::random_array(5, 10, rng);
  CHECK((pad(x, PadSpec{}) == x).all());
  CHECK((unpad(x, PadSpec{}) == x).all());
}

TEST_CASE("padded values are copies of interior values") {
  std::mt19937_64 rng(10);
  const GridArrayd x = test::random_array(16, 32, rng);
  const auto p = pad(x, PadSpec{5, 7});
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < p.size(); ++i) {
    CHECK(std::binary_search(sorted.begin(), sorted.end(), p.data()[i]));
  }
}

TEST_CASE("dateline seam differences equal interior differences") {
  std::mt19937_64 rng(11);
  const GridArrayd x = test::random_array(8, 16, rng);
  const PadSpec s{3, 4};
  const auto p = pad(x, s);
  // Across the western seam: padded column e-1 is interior column n_lon-1.
  const Eigen::ArrayXd seam = x.col(0) - x.col(15);
  CHECK((p.col(4).segment(3, 8) - p.col(3).segment(3, 8) == seam).all());
  CHECK((p.col(20).segment(3, 8) - p.col(19).segment(3, 8) == seam).all());
  // The wrap holds on the polar rows too.
  CHECK((p.col(0) == p.col(16)).all());
  CHECK((p.col(23) == p.col(7)).all());
}

TEST_CASE("smooth field is continuous across the pole") {
  const auto grid = GridSpec::gaussian(32, 64);
  GridArrayd f(32, 64);
  for (Index i = 0; i < 32; ++i) {
    for (Index j = 0; j < 64; ++j) {
      const double phi = grid.latitudes()[i] * std::numbers::pi / 180, lam = grid.longitudes()[j] * std::numbers::pi / 180;
      // Smooth on the sphere: linear in Cartesian coordinates plus a z^2 term.
      f(i, j) = std::cos(phi) * std::cos(lam) + 0.5 * std::cos(phi) * std::sin(lam) + std::sin(phi) * std::sin(phi);
    }
  }
  const auto p = pad(f, PadSpec{2, 0});
  const double across = (p.row(1) - p.row(2)).abs().maxCoeff();
  const double interior = (f.row(0) - f.row(1)).abs().maxCoeff();
  CHECK(across <= 2.0 * interior);
  const double across_s = (p.row(34) - p.row(33)).abs().maxCoeff();
  const double interior_s = (f.row(31) - f.row(30)).abs().maxCoeff();
  CHECK(across_s <= 2.0 * interior_s);
}

TEST_CASE("invalid specs") {
  const GridArrayd x = GridArrayd::Zero(4, 8);
  CHECK_THROWS_AS(pad(x, PadSpec{5, 0}), ArgumentError);
  CHECK_THROWS_AS(pad(x, PadSpec{0, 5}), ArgumentError);
  CHECK_THROWS_AS(pad(GridArrayd::Zero(4, 7), PadSpec{1, 0}), ArgumentError);
  CHECK_NOTHROW(pad(GridArrayd::Zero(4, 7), PadSpec{1, 0, PadMode::reflect_only}));
  CHECK_THROWS_AS(unpad(x, PadSpec{2, 0}), ArgumentError);
  CHECK(pad_mode_from_string("reflect_only") == PadMode::reflect_only);
  CHECK_THROWS_AS(pad_mode_from_string("wrap"), ArgumentError);
}

TEST_CASE("float arrays pad without conversion") {
  GridArrayf x = cell_ids(4, 8).cast<float>();
  const GridArrayf p = pad(x, PadSpec{1, 1});
  CHECK(p(0, 1) == x(0, 4));
}
