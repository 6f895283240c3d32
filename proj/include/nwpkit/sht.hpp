#pragma once

#include <complex>
#include <optional>

#include "nwpkit/grid.hpp"

namespace nwpkit {

/// Fully normalized associated Legendre functions for one order m:
/// out[l - m] = Pbar_l^m(mu) for l = m .. l_max, with the integral of
/// Pbar^2 over [-1, 1] equal to 1 and the Condon-Shortley phase included.
/// `cos_phi` is sqrt(1 - mu^2), passed separately for accuracy near the
/// poles. The sectoral seed is carried with a separate binary exponent, so
/// values that underflow double precision come out as zero instead of
/// poisoning the recurrence.
void legendre_order(int m, int l_max, double mu, double cos_phi, double* out);

/// Triangular complex coefficients a_l^m for 0 <= m <= l <= l_max of
/// Y_l^m = Pbar_l^m(sin lat) exp(i m lon) / sqrt(2 pi), which is orthonormal
/// on the unit sphere. Negative orders of a real field follow from
/// a_l^{-m} = (-1)^m conj(a_l^m) and are not stored.
class HarmonicCoeffs {
 public:
  HarmonicCoeffs() = default;
  explicit HarmonicCoeffs(int l_max);

  int l_max() const noexcept { return l_max_; }
  std::complex<double>& operator()(int l, int m) { return a_[index(l, m)]; }
  const std::complex<double>& operator()(int l, int m) const { return a_[index(l, m)]; }
  const Eigen::ArrayXcd& data() const noexcept { return a_; }
  Eigen::ArrayXcd& data() noexcept { return a_; }

  std::size_t index(int l, int m) const;

 private:
  int l_max_ = -1;
  Eigen::ArrayXcd a_;
};

/// Gauss-Legendre analysis of a field on a Gaussian grid. Requires
/// l_max <= n_lat - 1 and l_max < n_lon / 2.
HarmonicCoeffs analyze(const GridSpec& grid, const GridArrayd& values, int l_max);
HarmonicCoeffs analyze(const Field& field, int l_max);

/// Evaluates the expansion on any grid with l_max < n_lon / 2.
GridArrayd synthesize(const HarmonicCoeffs& coeffs, const GridSpec& grid);

/// Largest degree a grid supports for analysis.
int max_degree(const GridSpec& grid);

struct SpectrumResult {
  std::string variable;
  std::optional<long> lead_hours;
  /// power[m] for m = 0 .. l_max
  Eigen::ArrayXd power;
};

/// P(m) = sum over l >= m of |a_l^m|^2, doubled for m > 0 to account for -m,
/// so that the sum over m equals the integral of the squared field.
Eigen::ArrayXd zonal_power(const HarmonicCoeffs& coeffs);
SpectrumResult zonal_power_spectrum(const Field& field, int l_max);

/// KE(m) = (P_u(m) + P_v(m)) / 2, or without the 1/2 when `half` is false.
SpectrumResult kinetic_energy_spectrum(const Field& u, const Field& v, int l_max, bool half = true);

inline constexpr double kKappaDryAir = 0.2854;

/// Spectrum of theta = T (1000 / p)^kappa with p in hPa.
SpectrumResult potential_temperature_energy_spectrum(const Field& t, double pressure_hpa, int l_max);

}  // namespace nwpkit
