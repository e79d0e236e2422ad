#include "cspi/presets.hpp"

#include "cspi/error.hpp"

namespace cspi {

std::optional<PairPreset> find_pair_preset(std::string_view name) {
  const FrequencyGrid grid = FrequencyGrid::from_span(0.0, 6.0, 512);
  if (name == "fig3") return PairPreset{{0.2, 2.0, 0.0, 0.0}, grid, 5.0, -5.0};
  if (name == "fig4") return PairPreset{{0.2, 2.0, 1.25, 0.0}, grid, 5.0, -5.0};
  return std::nullopt;
}

double balanced_eta(const TwoPhotonAmplitude &state, const SpectralAmplitude &reference, complex alpha) {
  require(state.max_abs() > 0.0, ErrorKind::invalid_argument, "state vanishes everywhere");
  return std::norm(alpha) * reference.max_abs() * reference.max_abs() / state.max_abs();
}

} // namespace cspi
