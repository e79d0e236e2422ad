#include "cspi/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cspi/error.hpp"
#include "fft.hpp"

namespace cspi {

namespace {

constexpr double normalization_tolerance = 1e-9;

void require_finite(std::span<const complex> values, const char *what) {
  for (const auto &v : values) {
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorKind::invalid_argument,
            std::string(what) + " contains a non-finite value");
  }
}

double sum_abs2(std::span<const complex> values) noexcept {
  double total = 0.0;
  for (const auto &v : values) total += std::norm(v);
  return total;
}

void check_claimed_norm(double norm, const char *what) {
  require(std::abs(norm - 1.0) <= normalization_tolerance, ErrorKind::invalid_argument,
          std::string(what) + " flagged normalized but has norm " + std::to_string(norm));
}

std::vector<complex> scaled(std::vector<complex> values, double factor) {
  for (auto &v : values) v *= factor;
  return values;
}

} // namespace

SpectralAmplitude::SpectralAmplitude(FrequencyGrid grid, std::vector<complex> values, bool normalized)
    : grid_(grid), values_(std::move(values)), normalized_(normalized) {
  require(values_.size() == grid_.count(), ErrorKind::invalid_argument,
          "amplitude has " + std::to_string(values_.size()) + " values for a grid of " +
              std::to_string(grid_.count()));
  require_finite(values_, "spectral amplitude");
  if (normalized_) check_claimed_norm(norm_squared(), "spectral amplitude");
}

double SpectralAmplitude::norm_squared() const noexcept { return sum_abs2(values_) * grid_.spacing(); }

double SpectralAmplitude::max_abs() const noexcept {
  double m = 0.0;
  for (const auto &v : values_) m = std::max(m, std::abs(v));
  return m;
}

SpectralAmplitude SpectralAmplitude::normalized_copy() const {
  const double norm = norm_squared();
  require(norm > 0.0, ErrorKind::invalid_argument, "cannot normalize a zero amplitude");
  return SpectralAmplitude(grid_, scaled(values_, 1.0 / std::sqrt(norm)), true);
}

SpectralAmplitude SpectralAmplitude::delayed(double tau) const {
  std::vector<complex> out(values_);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::polar(1.0, -grid_.point(k) * tau);
  return SpectralAmplitude(grid_, std::move(out), normalized_);
}

SpectralAmplitude SpectralAmplitude::with_global_phase(double theta) const {
  std::vector<complex> out(values_);
  const complex factor = std::polar(1.0, theta);
  for (auto &v : out) v *= factor;
  return SpectralAmplitude(grid_, std::move(out), normalized_);
}

TwoPhotonAmplitude::TwoPhotonAmplitude(FrequencyGrid grid1, FrequencyGrid grid2, std::vector<complex> values,
                                       bool normalized)
    : grid1_(grid1), grid2_(grid2), values_(std::move(values)), normalized_(normalized) {
  require(values_.size() == grid1_.count() * grid2_.count(), ErrorKind::invalid_argument,
          "two-photon amplitude size does not match its grids");
  require_finite(values_, "two-photon amplitude");
  if (normalized_) check_claimed_norm(norm_squared(), "two-photon amplitude");
}

double TwoPhotonAmplitude::norm_squared() const noexcept {
  return sum_abs2(values_) * grid1_.spacing() * grid2_.spacing();
}

double TwoPhotonAmplitude::max_abs() const noexcept {
  double m = 0.0;
  for (const auto &v : values_) m = std::max(m, std::abs(v));
  return m;
}

TwoPhotonAmplitude TwoPhotonAmplitude::delayed(double tau1, double tau2) const {
  std::vector<complex> out(values_);
  const std::size_t n2 = grid2_.count();
  for (std::size_t k1 = 0; k1 < grid1_.count(); ++k1) {
    for (std::size_t k2 = 0; k2 < n2; ++k2) {
      out[k1 * n2 + k2] *= std::polar(1.0, -(grid1_.point(k1) * tau1 + grid2_.point(k2) * tau2));
    }
  }
  return TwoPhotonAmplitude(grid1_, grid2_, std::move(out), normalized_);
}

complex GaussianPdcSpec::psi_plus(double sum) const noexcept {
  const double x = sum - pump_detuning;
  return {std::exp(-x * x / (4.0 * delta_plus * delta_plus)), 0.0};
}

complex GaussianPdcSpec::psi_minus(double diff) const noexcept {
  return std::exp(-diff * diff / (4.0 * delta_minus * delta_minus)) * std::polar(1.0, -0.5 * chirp * diff * diff);
}

double required_pdc_half_span(const GaussianPdcSpec &spec) noexcept {
  // The +-4 std box in (sum, diff) coordinates has its corners at
  // omega_i = pump/2 +- 2 (delta_plus + delta_minus).
  return 2.0 * (spec.delta_plus + spec.delta_minus);
}

SpectralAmplitude make_gaussian_reference(const ReferencePulseSpec &spec, const FrequencyGrid &grid) {
  require(spec.sigma_r > 0.0, ErrorKind::invalid_argument, "sigma_r must be positive");
  const double c = spec.center_detuning;
  const double w = 4.0 * spec.sigma_r;
  require(grid.covers(c - w, c + w), ErrorKind::grid_too_narrow,
          "reference grid must span +-4 sigma_r around " + std::to_string(c) + ", got [" +
              std::to_string(grid.front()) + ", " + std::to_string(grid.back()) + "]");
  std::vector<complex> values(grid.count());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double x = grid.point(k) - c;
    values[k] = std::exp(-x * x / (4.0 * spec.sigma_r * spec.sigma_r));
  }
  return SpectralAmplitude(grid, std::move(values)).normalized_copy();
}

SpectralAmplitude make_gaussian_signal(const SignalPulseSpec &spec, const FrequencyGrid &grid) {
  require(spec.sigma > 0.0, ErrorKind::invalid_argument, "signal sigma must be positive");
  const double c = spec.center_detuning;
  const double w = 4.0 * spec.sigma;
  require(grid.covers(c - w, c + w), ErrorKind::grid_too_narrow, "signal grid must span +-4 sigma");
  std::vector<complex> values(grid.count());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double omega = grid.point(k);
    const double x = omega - c;
    const double phase = 0.5 * spec.phase_curvature * x * x - omega * spec.delay;
    values[k] = std::exp(-x * x / (4.0 * spec.sigma * spec.sigma)) * std::polar(1.0, phase);
  }
  return SpectralAmplitude(grid, std::move(values)).normalized_copy();
}

TwoPhotonAmplitude make_gaussian_pdc_state(const GaussianPdcSpec &spec, const FrequencyGrid &grid1,
                                           const FrequencyGrid &grid2) {
  require(spec.delta_plus > 0.0 && spec.delta_minus > 0.0, ErrorKind::invalid_argument,
          "delta_plus and delta_minus must be positive");
  const double mid = 0.5 * spec.pump_detuning;
  const double w = required_pdc_half_span(spec);
  require(grid1.covers(mid - w, mid + w) && grid2.covers(mid - w, mid + w), ErrorKind::grid_too_narrow,
          "state grids must span +-" + std::to_string(w) + " around " + std::to_string(mid));
  const std::size_t n1 = grid1.count();
  const std::size_t n2 = grid2.count();
  std::vector<complex> values(n1 * n2);
  for (std::size_t k1 = 0; k1 < n1; ++k1) {
    const double w1 = grid1.point(k1);
    for (std::size_t k2 = 0; k2 < n2; ++k2) {
      const double w2 = grid2.point(k2);
      values[k1 * n2 + k2] = spec.psi_plus(w1 + w2) * spec.psi_minus(w1 - w2);
    }
  }
  const double norm = sum_abs2(values) * grid1.spacing() * grid2.spacing();
  return TwoPhotonAmplitude(grid1, grid2, scaled(std::move(values), 1.0 / std::sqrt(norm)), true);
}

Spread spectral_spread(const SpectralAmplitude &amplitude) {
  double w = 0.0, m1 = 0.0;
  const auto &g = amplitude.grid();
  for (std::size_t k = 0; k < amplitude.size(); ++k) {
    const double p = std::norm(amplitude[k]);
    w += p;
    m1 += p * g.point(k);
  }
  require(w > 0.0, ErrorKind::invalid_argument, "moments of a zero amplitude");
  const double mean = m1 / w;
  double m2 = 0.0;
  for (std::size_t k = 0; k < amplitude.size(); ++k) {
    const double d = g.point(k) - mean;
    m2 += std::norm(amplitude[k]) * d * d;
  }
  return {mean, std::sqrt(m2 / w)};
}

MomentReport joint_spectral_moments(const TwoPhotonAmplitude &state) {
  const auto &g1 = state.grid1();
  const auto &g2 = state.grid2();
  double w = 0.0, s1 = 0.0, d1 = 0.0;
  for (std::size_t k1 = 0; k1 < g1.count(); ++k1) {
    for (std::size_t k2 = 0; k2 < g2.count(); ++k2) {
      const double p = std::norm(state(k1, k2));
      w += p;
      s1 += p * (g1.point(k1) + g2.point(k2));
      d1 += p * (g1.point(k1) - g2.point(k2));
    }
  }
  require(w > 0.0, ErrorKind::invalid_argument, "moments of a zero state");
  MomentReport r;
  r.mean_sum = s1 / w;
  r.mean_diff = d1 / w;
  double s2 = 0.0, d2 = 0.0;
  for (std::size_t k1 = 0; k1 < g1.count(); ++k1) {
    for (std::size_t k2 = 0; k2 < g2.count(); ++k2) {
      const double p = std::norm(state(k1, k2));
      const double ds = g1.point(k1) + g2.point(k2) - r.mean_sum;
      const double dd = g1.point(k1) - g2.point(k2) - r.mean_diff;
      s2 += p * ds * ds;
      d2 += p * dd * dd;
    }
  }
  r.delta_sum = std::sqrt(s2 / w);
  r.delta_diff = std::sqrt(d2 / w);
  return r;
}

double TimeProfile::norm_squared() const noexcept { return sum_abs2(values) * dt; }

Spread TimeProfile::spread() const {
  double w = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double p = std::norm(values[j]);
    w += p;
    m1 += p * time(j);
  }
  require(w > 0.0, ErrorKind::invalid_argument, "moments of a zero time profile");
  const double mean = m1 / w;
  double m2 = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double d = time(j) - mean;
    m2 += std::norm(values[j]) * d * d;
  }
  return {mean, std::sqrt(m2 / w)};
}

std::size_t TimeProfile::peak_index() const noexcept {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (std::norm(values[j]) > std::norm(values[best])) best = j;
  }
  return best;
}

TimeProfile time_profile(const SpectralAmplitude &amplitude, std::size_t oversample) {
  const auto &g = amplitude.grid();
  const std::size_t n = detail::next_power_of_two(std::max<std::size_t>(1, oversample) * amplitude.size());
  detail::InverseDft dft(n);
  auto in = dft.input();
  // exp(i omega_k t_j) = exp(i omega_0 t_j) exp(2 pi i k j / n) (-1)^k for the centered t grid.
  for (std::size_t k = 0; k < amplitude.size(); ++k) in[k] = (k % 2 == 0) ? amplitude[k] : -amplitude[k];
  dft.execute();

  TimeProfile out;
  out.dt = 2.0 * std::numbers::pi / (static_cast<double>(n) * g.spacing());
  out.values.resize(n);
  const double scale = g.spacing() / std::sqrt(2.0 * std::numbers::pi);
  const double omega0 = g.front();
  auto result = dft.output();
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = scale * std::polar(1.0, omega0 * out.time(j)) * result[j];
  }
  return out;
}

double time_difference_std(const TwoPhotonAmplitude &state) {
  const auto &g1 = state.grid1();
  const auto &g2 = state.grid2();
  const double h = g1.spacing();
  require(std::abs(g2.spacing() - h) <= 1e-12 * h, ErrorKind::grid_mismatch,
          "time_difference_std needs equal grid spacings on both arms");
  const double diff_step = 2.0 * h;  // omega1 - omega2 step along a line of constant sum
  const MomentReport moments = joint_spectral_moments(state);
  require(moments.delta_diff / diff_step >= 16.0, ErrorKind::under_resolved_grid,
          "grid resolves delta_diff with only " + std::to_string(moments.delta_diff / diff_step) +
              " samples; need at least 16");

  const std::size_t n1 = g1.count();
  const std::size_t n2 = g2.count();
  const std::size_t n = detail::next_power_of_two(4 * std::max(n1, n2));
  detail::InverseDft dft(n);
  std::vector<double> density(n, 0.0);

  // Parseval along the sum direction: the marginal of t1 - t2 is the incoherent sum over
  // lines k1 + k2 = m of the transforms taken along each line.
  for (std::size_t m = 0; m + 1 < n1 + n2; ++m) {
    const std::size_t k1_lo = m >= n2 ? m - (n2 - 1) : 0;
    const std::size_t k1_hi = std::min(m, n1 - 1);
    auto in = dft.input();
    std::fill(in.begin(), in.end(), complex{});
    bool any = false;
    for (std::size_t k1 = k1_lo; k1 <= k1_hi; ++k1) {
      const std::size_t k = k1 - k1_lo;
      const complex v = state(k1, m - k1);
      in[k] = (k % 2 == 0) ? v : -v;
      any = any || v != complex{};
    }
    if (!any) continue;
    dft.execute();
    auto out = dft.output();
    for (std::size_t j = 0; j < n; ++j) density[j] += std::norm(out[j]);
  }

  // Along a line the conjugate variable of omega1 - omega2 is (t1 - t2) / 2.
  const double dt_half = 2.0 * std::numbers::pi / (static_cast<double>(n) * diff_step);
  auto t_of = [&](std::size_t j) { return 2.0 * (static_cast<double>(j) - 0.5 * static_cast<double>(n)) * dt_half; };
  double w = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    w += density[j];
    m1 += density[j] * t_of(j);
  }
  require(w > 0.0, ErrorKind::invalid_argument, "time_difference_std of a zero state");
  const double mean = m1 / w;
  double m2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = t_of(j) - mean;
    m2 += density[j] * d * d;
  }
  return std::sqrt(m2 / w);
}

} // namespace cspi
