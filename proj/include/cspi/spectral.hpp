#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cspi/grid.hpp"

namespace cspi {

using complex = std::complex<double>;

/// Complex single-photon (or reference) spectral wavefunction sampled on a grid.
class SpectralAmplitude {
public:
  /// Throws if any value is non-finite, or if `normalized` is claimed but the discrete
  /// norm differs from 1 by more than 1e-9 relative.
  SpectralAmplitude(FrequencyGrid grid, std::vector<complex> values, bool normalized = false);

  const FrequencyGrid &grid() const noexcept { return grid_; }
  std::span<const complex> values() const noexcept { return values_; }
  const complex &operator[](std::size_t k) const noexcept { return values_[k]; }
  std::size_t size() const noexcept { return values_.size(); }
  bool normalized() const noexcept { return normalized_; }

  /// Riemann sum of |value|^2 over the grid.
  double norm_squared() const noexcept;
  double max_abs() const noexcept;

  SpectralAmplitude normalized_copy() const;
  /// Shifts the pulse later in time by tau: multiplies every component by exp(-i omega tau).
  SpectralAmplitude delayed(double tau) const;
  SpectralAmplitude with_global_phase(double theta) const;

private:
  FrequencyGrid grid_;
  std::vector<complex> values_;
  bool normalized_;
};

/// Joint spectral amplitude psi(omega1, omega2); row-major in omega1 then omega2.
class TwoPhotonAmplitude {
public:
  TwoPhotonAmplitude(FrequencyGrid grid1, FrequencyGrid grid2, std::vector<complex> values,
                     bool normalized = false);

  const FrequencyGrid &grid1() const noexcept { return grid1_; }
  const FrequencyGrid &grid2() const noexcept { return grid2_; }
  std::span<const complex> values() const noexcept { return values_; }
  const complex &operator()(std::size_t k1, std::size_t k2) const noexcept {
    return values_[k1 * grid2_.count() + k2];
  }
  bool normalized() const noexcept { return normalized_; }

  double norm_squared() const noexcept;
  double max_abs() const noexcept;

  /// Delays arm 1 by tau1 and arm 2 by tau2.
  TwoPhotonAmplitude delayed(double tau1, double tau2) const;

private:
  FrequencyGrid grid1_;
  FrequencyGrid grid2_;
  std::vector<complex> values_;
  bool normalized_;
};

struct ReferencePulseSpec {
  double sigma_r = 1.0;         // std of |phi|^2; the frequency unit
  double center_detuning = 0.0;
  double peak_time = 0.0;       // applied by the forward model, not by the builder
  complex alpha{1.0, 0.0};
};

/// Gaussian test signal for single-photon interference. Its spectral phase is
/// 0.5 * phase_curvature * (omega - center)^2 - omega * delay.
struct SignalPulseSpec {
  double sigma = 1.0;
  double center_detuning = 0.0;
  double delay = 0.0;
  double phase_curvature = 0.0;
};

/// Factorized down-conversion state psi_plus(omega1 + omega2) * psi_minus(omega1 - omega2).
struct GaussianPdcSpec {
  double delta_plus = 0.2;   // std of |psi_plus|^2 in omega1 + omega2
  double delta_minus = 2.0;  // std of |psi_minus|^2 in omega1 - omega2
  double chirp = 0.0;        // Arg psi_minus(nu) = -chirp * nu^2 / 2
  double pump_detuning = 0.0;

  /// Unnormalized factors; the built state is a constant multiple of their product.
  complex psi_plus(double sum) const noexcept;
  complex psi_minus(double diff) const noexcept;
};

struct MomentReport {
  double mean_sum = 0.0;
  double mean_diff = 0.0;
  double delta_sum = 0.0;
  double delta_diff = 0.0;
  std::optional<double> delta_tdiff;
};

/// Mean and standard deviation of a weighted 1-D distribution.
struct Spread {
  double mean = 0.0;
  double std = 0.0;
};

SpectralAmplitude make_gaussian_reference(const ReferencePulseSpec &spec, const FrequencyGrid &grid);
SpectralAmplitude make_gaussian_signal(const SignalPulseSpec &spec, const FrequencyGrid &grid);
TwoPhotonAmplitude make_gaussian_pdc_state(const GaussianPdcSpec &spec, const FrequencyGrid &grid1,
                                           const FrequencyGrid &grid2);

/// Half-width each arm's grid must cover around pump_detuning / 2.
double required_pdc_half_span(const GaussianPdcSpec &spec) noexcept;

/// Mean and std of |a|^2 over the grid.
Spread spectral_spread(const SpectralAmplitude &amplitude);

/// Frequency moments of |psi|^2 in the rotated coordinates omega1 +- omega2.
MomentReport joint_spectral_moments(const TwoPhotonAmplitude &state);

/// Time-domain wavefunction f(t) = (2 pi)^-1/2 sum_k a_k exp(i omega_k t) d_omega, sampled on
/// the discrete conjugate grid t_j = (j - n/2) dt with dt = 2 pi / (n d_omega). With this
/// normalization the discrete Parseval identity holds exactly.
struct TimeProfile {
  double dt = 0.0;
  std::vector<complex> values;

  double time(std::size_t j) const noexcept {
    return (static_cast<double>(j) - 0.5 * static_cast<double>(values.size())) * dt;
  }
  double norm_squared() const noexcept;
  Spread spread() const;
  std::size_t peak_index() const noexcept;
};

/// `oversample` sets the zero padding: the transform length is the next power of two at or
/// above oversample * size.
TimeProfile time_profile(const SpectralAmplitude &amplitude, std::size_t oversample = 4);

/// Std of the arrival-time difference t1 - t2, from the exact marginal of |psi(t1, t2)|^2.
/// Requires equal grid spacings and at least 16 samples per delta_diff along omega1 - omega2.
double time_difference_std(const TwoPhotonAmplitude &state);

} // namespace cspi
