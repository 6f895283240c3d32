#include "nwpkit/sht.hpp"

#include <cmath>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "nwpkit/errors.hpp"
#include "nwpkit/parallel.hpp"

namespace nwpkit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kScaleBits = 256;
const double kSmall = std::ldexp(1.0, -kScaleBits);
const double kLarge = std::ldexp(1.0, kScaleBits);

void check_l_max(const GridSpec& grid, int l_max, bool analysis) {
  if (l_max < 0) throw ArgumentError("l_max must be non-negative");
  if (2 * static_cast<Index>(l_max) >= grid.n_lon()) {
    throw ArgumentError("l_max=" + std::to_string(l_max) + " needs n_lon > " + std::to_string(2 * l_max) +
                        ", grid has " + std::to_string(grid.n_lon()));
  }
  if (analysis) {
    if (grid.kind() != GridKind::gaussian) {
      throw ArgumentError("spherical harmonic analysis needs a Gaussian grid");
    }
    if (l_max > grid.n_lat() - 1) {
      throw ArgumentError("l_max=" + std::to_string(l_max) + " exceeds n_lat - 1 = " +
                          std::to_string(grid.n_lat() - 1));
    }
  }
}

}  // namespace

void legendre_order(int m, int l_max, double mu, double cos_phi, double* out) {
  if (m < 0 || m > l_max) throw ArgumentError("legendre_order: need 0 <= m <= l_max");
  // Sectoral seed Pbar_m^m = v * 2^e.
  double v = 1.0 / std::numbers::sqrt2;
  int e = 0;
  for (int k = 1; k <= m; ++k) {
    v *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * cos_phi;
    if (v != 0.0 && std::abs(v) < kSmall) {
      v *= kLarge;
      e -= kScaleBits;
    }
  }
  auto emit = [&](int l, double p) { out[l - m] = e == 0 ? p : std::ldexp(p, e); };
  emit(m, v);
  if (m == l_max) return;
  double p2 = v;
  double p1 = std::sqrt(2.0 * m + 3.0) * mu * v;
  emit(m + 1, p1);
  const double mm = static_cast<double>(m) * m;
  double a_prev = std::sqrt(2.0 * m + 3.0);
  for (int l = m + 2; l <= l_max; ++l) {
    const double ll = static_cast<double>(l) * l;
    const double a = std::sqrt((4.0 * ll - 1.0) / (ll - mm));
    const double p = a * (mu * p1 - p2 / a_prev);
    p2 = p1;
    p1 = p;
    a_prev = a;
    if (e < 0 && std::abs(p1) > kLarge) {
      p1 *= kSmall;
      p2 *= kSmall;
      e += kScaleBits;
    }
    emit(l, p1);
  }
}

HarmonicCoeffs::HarmonicCoeffs(int l_max) : l_max_(l_max) {
  if (l_max < 0) throw ArgumentError("l_max must be non-negative");
  const std::size_t n = static_cast<std::size_t>(l_max + 1) * (l_max + 2) / 2;
  a_ = Eigen::ArrayXcd::Zero(static_cast<Index>(n));
}

std::size_t HarmonicCoeffs::index(int l, int m) const {
  if (m < 0 || m > l || l > l_max_) {
    throw ArgumentError("harmonic index (" + std::to_string(l) + ", " + std::to_string(m) + ") out of range");
  }
  // Columns of fixed m, each holding l = m .. l_max.
  const std::size_t mm = static_cast<std::size_t>(m);
  return mm * (l_max_ + 1) - mm * (mm - 1) / 2 + static_cast<std::size_t>(l - m);
}

int max_degree(const GridSpec& grid) {
  return static_cast<int>(std::min(grid.n_lat() - 1, (grid.n_lon() - 1) / 2));
}

HarmonicCoeffs analyze(const GridSpec& grid, const GridArrayd& values, int l_max) {
  check_l_max(grid, l_max, true);
  if (values.rows() != grid.n_lat() || values.cols() != grid.n_lon()) {
    throw ArgumentError("analyze: array shape does not match the grid");
  }
  const Index n_lat = grid.n_lat(), n_lon = grid.n_lon();
  const int nm = l_max + 1;
  const double lambda0 = grid.lon_origin() * kPi / 180.0;
  const double scale = std::sqrt(2.0 * kPi) / static_cast<double>(n_lon);

  // Zonal Fourier coefficients, G(i, m) = integral of f exp(-i m lon) / sqrt(2 pi).
  Eigen::ArrayXXcd G(n_lat, nm);
  parallel_for(static_cast<std::size_t>(n_lat), [&](std::size_t i) {
    Eigen::FFT<double> fft;
    std::vector<double> row(values.row(static_cast<Index>(i)).data(),
                            values.row(static_cast<Index>(i)).data() + n_lon);
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, row);
    for (int m = 0; m < nm; ++m) {
      G(static_cast<Index>(i), m) = scale * spec[m] * std::polar(1.0, -m * lambda0);
    }
  });

  HarmonicCoeffs a(l_max);
  const auto& mu = grid.sin_latitudes();
  const auto& c = grid.cos_latitudes();
  const auto& w = grid.quad_weights();
  parallel_for(static_cast<std::size_t>(nm), [&](std::size_t mi) {
    const int m = static_cast<int>(mi);
    std::vector<double> p(l_max - m + 1);
    std::vector<std::complex<double>> acc(p.size(), 0.0);
    for (Index i = 0; i < n_lat; ++i) {
      legendre_order(m, l_max, mu[i], c[i], p.data());
      const std::complex<double> g = w[i] * G(i, m);
      for (std::size_t k = 0; k < p.size(); ++k) acc[k] += p[k] * g;
    }
    for (std::size_t k = 0; k < p.size(); ++k) a(m + static_cast<int>(k), m) = acc[k];
  });
  return a;
}

HarmonicCoeffs analyze(const Field& field, int l_max) { return analyze(field.grid(), field.values(), l_max); }

GridArrayd synthesize(const HarmonicCoeffs& coeffs, const GridSpec& grid) {
  const int l_max = coeffs.l_max();
  check_l_max(grid, l_max, false);
  const Index n_lat = grid.n_lat(), n_lon = grid.n_lon();
  const int nm = l_max + 1;
  const double lambda0 = grid.lon_origin() * kPi / 180.0;
  const auto& mu = grid.sin_latitudes();
  const auto& c = grid.cos_latitudes();

  // H(i, m) = sum over l of a_l^m Pbar_l^m(mu_i) / sqrt(2 pi).
  Eigen::ArrayXXcd H(n_lat, nm);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * kPi);
  parallel_for(static_cast<std::size_t>(nm), [&](std::size_t mi) {
    const int m = static_cast<int>(mi);
    std::vector<double> p(l_max - m + 1);
    for (Index i = 0; i < n_lat; ++i) {
      legendre_order(m, l_max, mu[i], c[i], p.data());
      std::complex<double> s = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) s += coeffs(m + static_cast<int>(k), m) * p[k];
      H(i, m) = s * inv_sqrt_2pi;
    }
  });

  GridArrayd out(n_lat, n_lon);
  parallel_for(static_cast<std::size_t>(n_lat), [&](std::size_t ii) {
    const Index i = static_cast<Index>(ii);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec(n_lon, 0.0);
    const double n = static_cast<double>(n_lon);
    spec[0] = n * H(i, 0).real();
    for (int m = 1; m < nm; ++m) {
      const std::complex<double> x = n * H(i, m) * std::polar(1.0, m * lambda0);
      spec[m] = x;
      spec[n_lon - m] = std::conj(x);
    }
    std::vector<double> row;
    fft.inv(row, spec);
    for (Index j = 0; j < n_lon; ++j) out(i, j) = row[j];
  });
  return out;
}

Eigen::ArrayXd zonal_power(const HarmonicCoeffs& coeffs) {
  const int l_max = coeffs.l_max();
  Eigen::ArrayXd p = Eigen::ArrayXd::Zero(l_max + 1);
  for (int m = 0; m <= l_max; ++m) {
    double s = 0.0;
    for (int l = m; l <= l_max; ++l) s += std::norm(coeffs(l, m));
    p[m] = m == 0 ? s : 2.0 * s;
  }
  return p;
}

SpectrumResult zonal_power_spectrum(const Field& field, int l_max) {
  return {field.key().label(), std::nullopt, zonal_power(analyze(field, l_max))};
}

SpectrumResult kinetic_energy_spectrum(const Field& u, const Field& v, int l_max, bool half) {
  if (u.grid() != v.grid()) throw ArgumentError("kinetic energy spectrum: u and v grids differ");
  Eigen::ArrayXd p = zonal_power(analyze(u, l_max)) + zonal_power(analyze(v, l_max));
  if (half) p *= 0.5;
  return {"KE@" + u.key().level, std::nullopt, std::move(p)};
}

SpectrumResult potential_temperature_energy_spectrum(const Field& t, double pressure_hpa, int l_max) {
  if (!(pressure_hpa > 0.0)) throw ArgumentError("pressure must be positive");
  const GridArrayd theta = t.values() * std::pow(1000.0 / pressure_hpa, kKappaDryAir);
  return {"theta@" + t.key().level, std::nullopt, zonal_power(analyze(t.grid(), theta, l_max))};
}

}  // namespace nwpkit
