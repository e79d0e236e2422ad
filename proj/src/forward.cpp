#include "cspi/forward.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cspi/error.hpp"

namespace cspi {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require_same_grid(const FrequencyGrid &a, const FrequencyGrid &b, const char *what) {
  require(a == b, ErrorKind::grid_mismatch, what);
}

} // namespace

CountDistribution::CountDistribution(CountKind kind, FrequencyGrid grid, std::vector<double> values,
                                     double total_exposure)
    : kind_(kind), grid1_(grid), values_(std::move(values)), total_exposure_(total_exposure) {
  require(values_.size() == grid1_.count(), ErrorKind::invalid_argument, "count table size does not match its grid");
  validate();
}

CountDistribution::CountDistribution(CountKind kind, FrequencyGrid grid1, FrequencyGrid grid2,
                                     std::vector<double> values, double total_exposure)
    : kind_(kind), grid1_(grid1), grid2_(grid2), values_(std::move(values)), total_exposure_(total_exposure) {
  require(values_.size() == grid1_.count() * grid2_->count(), ErrorKind::invalid_argument,
          "count table size does not match its grids");
  validate();
}

void CountDistribution::validate() const {
  require(std::isfinite(total_exposure_) && total_exposure_ > 0.0, ErrorKind::invalid_argument,
          "total exposure must be positive");
  for (double v : values_) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::invalid_argument, "count values must be finite and >= 0");
    if (kind_ == CountKind::counts) {
      require(v == std::floor(v), ErrorKind::invalid_argument, "sampled counts must be integers");
    }
  }
}

const FrequencyGrid &CountDistribution::grid2() const {
  require(grid2_.has_value(), ErrorKind::invalid_argument, "one-dimensional table has no second grid");
  return *grid2_;
}

double CountDistribution::total() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

CountDistribution single_photon_rate(const SpectralAmplitude &signal, const SpectralAmplitude &reference,
                                     const InterferenceSetup1D &setup) {
  require_same_grid(signal.grid(), reference.grid(), "signal and reference grids differ");
  const auto &g = signal.grid();
  std::vector<double> out(g.count());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const complex r = setup.alpha * reference[k] * std::polar(1.0, -g.point(k) * setup.t_r);
    out[k] = 0.5 * std::norm(r + setup.gamma * signal[k]);
  }
  return CountDistribution(CountKind::rate, g, std::move(out));
}

CountDistribution coincidence_rate(const TwoPhotonAmplitude &state, const SpectralAmplitude &reference,
                                   const InterferenceSetup2D &setup) {
  return coincidence_rate(state, reference, reference, setup);
}

CountDistribution coincidence_rate(const TwoPhotonAmplitude &state, const SpectralAmplitude &reference1,
                                   const SpectralAmplitude &reference2, const InterferenceSetup2D &setup) {
  const auto &g1 = state.grid1();
  const auto &g2 = state.grid2();
  require_same_grid(g1, reference1.grid(), "state arm-1 grid differs from the reference grid");
  require_same_grid(g2, reference2.grid(), "state arm-2 grid differs from the reference grid");
  const complex a12 = setup.alpha * setup.alpha_arm2();
  std::vector<complex> r2(g2.count());
  for (std::size_t k2 = 0; k2 < r2.size(); ++k2) r2[k2] = reference2[k2] * std::polar(1.0, -g2.point(k2) * setup.t_r2);

  std::vector<double> out(g1.count() * g2.count());
  for (std::size_t k1 = 0; k1 < g1.count(); ++k1) {
    const complex r1 = a12 * reference1[k1] * std::polar(1.0, -g1.point(k1) * setup.t_r1);
    for (std::size_t k2 = 0; k2 < g2.count(); ++k2) {
      out[k1 * g2.count() + k2] = 0.25 * std::norm(r1 * r2[k2] + setup.eta * state(k1, k2));
    }
  }
  return CountDistribution(CountKind::rate, g1, g2, std::move(out));
}

CountDistribution sample_poisson_counts(const CountDistribution &rates, double total_expected, std::uint64_t seed) {
  require(rates.kind() == CountKind::rate, ErrorKind::invalid_argument, "can only sample from expected rates");
  require(std::isfinite(total_expected) && total_expected > 0.0, ErrorKind::invalid_argument,
          "total_expected must be positive");
  const double sum = rates.total();
  require(sum > 0.0, ErrorKind::zero_total_rate, "cannot sample counts from an all-zero rate table");
  const double exposure = total_expected / sum;

  const std::uint64_t key = splitmix64(seed);
  std::vector<double> counts(rates.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double mean = rates[k] * exposure;
    if (mean <= 0.0) continue;
    std::mt19937_64 engine(splitmix64(key ^ splitmix64(static_cast<std::uint64_t>(k))));
    std::poisson_distribution<std::int64_t> draw(mean);
    counts[k] = static_cast<double>(draw(engine));
  }
  if (rates.is_2d()) return CountDistribution(CountKind::counts, rates.grid1(), rates.grid2(), std::move(counts), exposure);
  return CountDistribution(CountKind::counts, rates.grid1(), std::move(counts), exposure);
}

} // namespace cspi
