#pragma once

#include <optional>
#include <string_view>

#include "cspi/forward.hpp"
#include "cspi/spectral.hpp"

namespace cspi {

/// Named two-photon configuration: state, shared arm grid and reference peak times.
struct PairPreset {
  GaussianPdcSpec state;
  FrequencyGrid grid;
  double t_r1 = 0.0;
  double t_r2 = 0.0;
};

/// "fig3": delta_plus 0.2, delta_minus 2, no chirp, peak times +-5 on a 512-point grid over +-6.
/// "fig4": the same with chirp 1.25.
std::optional<PairPreset> find_pair_preset(std::string_view name);

/// Pair amplitude magnitude whose peak contribution |eta psi| equals the peak of |alpha^2 phi phi|.
double balanced_eta(const TwoPhotonAmplitude &state, const SpectralAmplitude &reference, complex alpha = 1.0);

} // namespace cspi
