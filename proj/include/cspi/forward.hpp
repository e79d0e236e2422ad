#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cspi/spectral.hpp"

namespace cspi {

struct InterferenceSetup1D {
  complex alpha{1.0, 0.0};  // reference amplitude
  complex gamma{1.0, 0.0};  // signal single-photon amplitude
  double t_r = 0.0;         // reference peak time
};

struct InterferenceSetup2D {
  complex alpha{1.0, 0.0};        // reference amplitude, both arms unless alpha2 is set
  complex eta{1.0, 0.0};          // pair amplitude
  double t_r1 = 0.0;
  double t_r2 = 0.0;
  std::optional<complex> alpha2;  // arm-2 reference amplitude when it differs

  complex alpha_arm2() const noexcept { return alpha2.value_or(alpha); }
};

enum class CountKind { rate, counts };

/// Expected rates or sampled counts on one grid or a grid pair (row-major in omega1).
class CountDistribution {
public:
  /// Rates must be finite and non-negative; counts must also be integers.
  CountDistribution(CountKind kind, FrequencyGrid grid, std::vector<double> values, double total_exposure = 1.0);
  CountDistribution(CountKind kind, FrequencyGrid grid1, FrequencyGrid grid2, std::vector<double> values,
                    double total_exposure = 1.0);

  CountKind kind() const noexcept { return kind_; }
  bool is_2d() const noexcept { return grid2_.has_value(); }
  const FrequencyGrid &grid1() const noexcept { return grid1_; }
  const FrequencyGrid &grid2() const;
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double operator()(std::size_t k1, std::size_t k2) const noexcept { return values_[k1 * grid2_->count() + k2]; }
  std::size_t size() const noexcept { return values_.size(); }
  /// Factor converting rates into expected counts; for sampled counts, the factor that was used.
  double total_exposure() const noexcept { return total_exposure_; }
  double total() const noexcept;

private:
  void validate() const;

  CountKind kind_;
  FrequencyGrid grid1_;
  std::optional<FrequencyGrid> grid2_;
  std::vector<double> values_;
  double total_exposure_;
};

/// 0.5 |alpha phi(w) exp(-i w t_r) + gamma psi(w)|^2 at every grid point.
CountDistribution single_photon_rate(const SpectralAmplitude &signal, const SpectralAmplitude &reference,
                                     const InterferenceSetup1D &setup);

/// 0.25 |alpha1 alpha2 phi1(w1) phi2(w2) exp(-i (w1 t_r1 + w2 t_r2)) + eta psi(w1, w2)|^2.
/// The single-reference form uses the same pulse shape in both arms.
CountDistribution coincidence_rate(const TwoPhotonAmplitude &state, const SpectralAmplitude &reference,
                                   const InterferenceSetup2D &setup);
CountDistribution coincidence_rate(const TwoPhotonAmplitude &state, const SpectralAmplitude &reference1,
                                   const SpectralAmplitude &reference2, const InterferenceSetup2D &setup);

/// Draws independent Poisson counts with mean rate * total_expected / sum(rates). Each bin
/// has its own generator keyed by (seed, bin index), so the result does not depend on the
/// order in which bins are visited.
CountDistribution sample_poisson_counts(const CountDistribution &rates, double total_expected, std::uint64_t seed);

} // namespace cspi
