#include "cspi/reconstruction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>

#include "cspi/error.hpp"

namespace cspi {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double infinity = std::numeric_limits<double>::infinity();

double wrap(double a) { return std::remainder(a, two_pi); }

void require_spacing(double spacing) {
  require(std::isfinite(spacing) && spacing > 0.0, ErrorKind::nonpositive_spacing,
          "fringe spacing must be positive, got " + std::to_string(spacing));
}

std::vector<double> magnitudes(const SpectralAmplitude &a) {
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = std::abs(a[k]);
  return out;
}

// Joins phases across neighbouring valid bins, starting from the anchor, so that each
// step changes by less than pi. Neighbours are visited breadth-first in index order.
void unwrap_from(std::vector<double> &phase, const std::vector<char> &valid, std::size_t anchor,
                 const std::vector<std::vector<std::size_t>> &neighbours) {
  std::vector<char> seen(phase.size(), 0);
  std::deque<std::size_t> queue{anchor};
  seen[anchor] = 1;
  const double base = phase[anchor];
  phase[anchor] = 0.0;
  std::vector<double> raw = phase;
  raw[anchor] = base;
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (std::size_t j : neighbours[i]) {
      if (!valid[j] || seen[j]) continue;
      seen[j] = 1;
      phase[j] = phase[i] + wrap(raw[j] - raw[i]);
      queue.push_back(j);
    }
  }
  for (std::size_t i = 0; i < phase.size(); ++i) {
    if (valid[i] && !seen[i]) phase[i] = wrap(raw[i] - base);
  }
}

// Neighbours along a 1-D chain that skips invalid bins.
std::vector<std::vector<std::size_t>> chain_neighbours(const std::vector<char> &valid) {
  std::vector<std::vector<std::size_t>> out(valid.size());
  std::size_t prev = valid.size();
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (!valid[i]) continue;
    if (prev != valid.size()) {
      out[prev].push_back(i);
      out[i].push_back(prev);
    }
    prev = i;
  }
  return out;
}

struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;  // C = offset + amplitude cos(x + phase)
  bool ok = false;
};

SinusoidFit fit_sinusoid(const std::vector<double> &x, const std::vector<double> &c) {
  Eigen::MatrixXd a(x.size(), 3);
  Eigen::VectorXd b(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::cos(x[i]);
    a(i, 2) = std::sin(x[i]);
    b(i) = c[i];
  }
  const auto qr = a.colPivHouseholderQr();
  SinusoidFit fit;
  if (qr.rank() < 3) return fit;
  const Eigen::Vector3d sol = qr.solve(b);
  fit.offset = sol(0);
  fit.amplitude = std::hypot(sol(1), sol(2));
  fit.phase = std::atan2(-sol(2), sol(1));
  fit.ok = true;
  return fit;
}

std::size_t distinct_count(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

// One line of constant omega1 + omega2 through a 2-D table on equal grids.
struct Line {
  double sum = 0.0;
  double nu0 = 0.0;  // omega1 - omega2 at the first sample; samples step by 2h
  int lattice = 0;   // 2 k1 - m of the first sample, shared by lines of equal parity
  std::vector<double> counts;
  std::vector<double> reference;  // |alpha1 alpha2 phi(omega1) phi(omega2)|
  double excess = 0.0;            // sum of counts above the reference-only level
};

struct PairGeometry {
  std::size_t n;
  double h;
  FrequencyGrid grid;
};

Line extract_line(const std::vector<double> &rates, const std::vector<double> &phi_abs, double a12,
                  const PairGeometry &geo, std::size_t m) {
  const std::size_t n = geo.n;
  const std::size_t lo = m >= n ? m - (n - 1) : 0;
  const std::size_t hi = std::min(m, n - 1);
  Line line;
  line.sum = geo.grid.point(lo) + geo.grid.point(m - lo);
  line.nu0 = geo.grid.point(lo) - geo.grid.point(m - lo);
  line.lattice = 2 * static_cast<int>(lo) - static_cast<int>(m);
  for (std::size_t k1 = lo; k1 <= hi; ++k1) {
    const std::size_t k2 = m - k1;
    const double c = rates[k1 * n + k2];
    const double r = a12 * phi_abs[k1] * phi_abs[k2];
    line.counts.push_back(c);
    line.reference.push_back(r);
    line.excess += c - 0.25 * r * r;
  }
  return line;
}

std::vector<double> gaussian_smooth(const std::vector<double> &v, double sigma_samples) {
  if (sigma_samples <= 0.0) return v;
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_samples));
  std::vector<double> kernel(2 * half + 1);
  for (std::ptrdiff_t i = -half; i <= half; ++i) {
    const double u = static_cast<double>(i) / sigma_samples;
    kernel[i + half] = std::exp(-0.5 * u * u);
  }
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  std::vector<double> out(v.size());
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    double s = 0.0, w = 0.0;
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, j - half); i <= std::min(n - 1, j + half); ++i) {
      s += kernel[i - j + half] * v[i];
      w += kernel[i - j + half];
    }
    out[j] = s / w;
  }
  return out;
}

struct GradientSample {
  double nu = 0.0;
  double spacing = 0.0;
  double gradient = 0.0;
  double strength = 0.0;
};

// Gradient samples from adjacent crests, restricted to the contiguous strong, unfolded
// stretch around the strongest pair.
std::vector<GradientSample> select_gradient_samples(const NormalizedFringes &fr, double delay_diff,
                                                    const PairOptions &options, double *lo, double *hi) {
  struct Candidate {
    GradientSample sample;
    std::size_t index;  // position of the left crest in the maxima list
  };
  std::vector<Candidate> pairs;
  const double sign = delay_diff >= 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i + 1 < fr.maxima.size(); ++i) {
    if (!fr.crest(i) || !fr.crest(i + 1)) continue;
    GradientSample g;
    g.spacing = fr.maxima[i + 1].position - fr.maxima[i].position;
    g.nu = 0.5 * (fr.maxima[i + 1].position + fr.maxima[i].position);
    g.gradient = sign * two_pi / g.spacing - 0.5 * delay_diff;
    g.strength = std::min(fr.strength[i], fr.strength[i + 1]);
    pairs.push_back({g, i});
  }
  if (pairs.empty()) return {};
  double best = 0.0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].sample.strength > best) {
      best = pairs[i].sample.strength;
      best_i = i;
    }
  }
  auto keep = [&](std::size_t i) {
    const auto &g = pairs[i].sample;
    return g.strength >= options.strength_fraction * best &&
           two_pi / g.spacing >= options.fold_fraction * 0.5 * std::abs(delay_diff);
  };
  if (!keep(best_i)) return {};
  std::size_t a = best_i, b = best_i;
  while (a > 0 && pairs[a - 1].index + 1 == pairs[a].index && keep(a - 1)) --a;
  while (b + 1 < pairs.size() && pairs[b].index + 1 == pairs[b + 1].index && keep(b + 1)) ++b;
  std::vector<GradientSample> out;
  for (std::size_t i = a; i <= b; ++i) out.push_back(pairs[i].sample);
  *lo = fr.maxima[pairs[a].index].position;
  *hi = fr.maxima[pairs[b].index + 1].position;
  return out;
}

struct Moments {
  double w = 0.0, s1 = 0.0, s2 = 0.0;
  void add(double weight, double x) {
    w += weight;
    s1 += weight * x;
    s2 += weight * x * x;
  }
  double std() const {
    const double mean = s1 / w;
    return std::sqrt(std::max(0.0, s2 / w - mean * mean));
  }
};

} // namespace

double phase_gradient_single(double spacing, double t_r) {
  require_spacing(spacing);
  return two_pi / spacing - t_r;
}

double phase_gradient_diff(double spacing, double t_r1, double t_r2) {
  require_spacing(spacing);
  return two_pi / spacing - 0.5 * (t_r1 - t_r2);
}

std::size_t MaskedProfile::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

std::vector<std::pair<double, double>> MaskedProfile::ranges() const {
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < valid.size();) {
    if (!valid[k]) {
      ++k;
      continue;
    }
    std::size_t j = k;
    while (j + 1 < valid.size() && valid[j + 1]) ++j;
    out.emplace_back(grid.point(k), grid.point(j));
    k = j + 1;
  }
  return out;
}

MaskedProfile amplitude_from_envelope(const EnvelopePair &envelope, complex alpha, complex gamma,
                                      const SpectralAmplitude &phi) {
  const double scale = 2.0 * std::abs(alpha) * std::abs(gamma);
  require(scale > 0.0, ErrorKind::invalid_argument, "alpha and gamma must be nonzero");
  const double threshold = bandwidth_mask_fraction * phi.max_abs();
  MaskedProfile out{phi.grid(), std::vector<double>(phi.size(), 0.0), std::vector<char>(phi.size(), 0)};
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const double w = phi.grid().point(k);
    const double p = std::abs(phi[k]);
    if (p < threshold || p == 0.0 || !envelope.contains(w)) continue;
    out.values[k] = std::max(0.0, envelope.upper(w) - envelope.lower(w)) / (scale * p);
    out.valid[k] = 1;
  }
  return out;
}

std::vector<double> PhaseProfile::integrated() const {
  std::vector<double> out(nu.size(), 0.0);
  if (nu.empty()) return out;
  for (std::size_t i = 1; i < nu.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (gradient[i] + gradient[i - 1]) * (nu[i] - nu[i - 1]);
  }
  double anchor;
  if (0.0 <= nu.front()) anchor = out.front();
  else if (0.0 >= nu.back()) anchor = out.back();
  else anchor = interpolate_linear(nu, out, 0.0);
  for (auto &v : out) v -= anchor;
  return out;
}

CurvatureFit fit_curvature(const PhaseProfile &profile, double min_span) {
  const std::size_t n = profile.nu.size();
  require(n == profile.gradient.size(), ErrorKind::invalid_argument, "phase profile columns differ in length");
  require(n >= 3, ErrorKind::insufficient_samples,
          "curvature fit needs at least 3 gradient samples, got " + std::to_string(n));
  const auto [lo, hi] = std::minmax_element(profile.nu.begin(), profile.nu.end());
  require(*hi - *lo >= min_span, ErrorKind::insufficient_samples,
          "gradient samples span " + std::to_string(*hi - *lo) + ", need " + std::to_string(min_span));
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = profile.nu[i];
    b(i) = profile.gradient[i];
  }
  const Eigen::Vector2d sol = a.colPivHouseholderQr().solve(b);
  CurvatureFit fit;
  fit.intercept = sol(0);
  fit.curvature = sol(1);
  fit.residual = std::sqrt((a * sol - b).squaredNorm() / static_cast<double>(n));
  return fit;
}

CorrelationTime correlation_time(double delta_diff, double curvature) {
  require(delta_diff > 0.0, ErrorKind::invalid_argument, "delta_diff must be positive");
  const double chirp = 2.0 * delta_diff * std::abs(curvature);
  return {chirp, std::hypot(1.0 / delta_diff, chirp)};
}

EntanglementVerdict separability_check(double delta_sum, double delta_diff, double curvature) {
  require(delta_sum > 0.0 && delta_diff > 0.0, ErrorKind::invalid_argument, "spectral widths must be positive");
  EntanglementVerdict v;
  v.delta_sum = delta_sum;
  v.delta_diff = delta_diff;
  v.curvature = std::abs(curvature);
  v.lhs = v.curvature;
  v.rhs = 1.0 / (2.0 * delta_sum * delta_diff);
  v.margin = v.lhs == 0.0 ? infinity : v.rhs / v.lhs;
  v.entangled = v.lhs < v.rhs;
  v.uncertainty_product = delta_sum * correlation_time(delta_diff, curvature).quadrature;
  v.violation_factor = 1.0 / v.uncertainty_product;
  return v;
}

TomographyResult timescan_tomography(const std::vector<ScanSample> &series, const SpectralAmplitude &reference,
                                     complex alpha, complex gamma) {
  std::vector<double> times;
  for (const auto &s : series) {
    require(!s.counts.is_2d(), ErrorKind::invalid_argument, "single-photon scan needs 1-D tables");
    require(s.counts.grid1() == reference.grid(), ErrorKind::grid_mismatch, "scan table grid differs from the reference");
    times.push_back(s.t_r);
  }
  require(distinct_count(times) >= 4, ErrorKind::insufficient_samples, "scan needs at least 4 distinct peak times");
  const auto &g = reference.grid();
  const std::size_t n = g.count();
  const double threshold = bandwidth_mask_fraction * reference.max_abs();
  const auto [tmin, tmax] = std::minmax_element(times.begin(), times.end());
  const double range = *tmax - *tmin;

  std::vector<SinusoidFit> fits(n);
  std::vector<char> valid(n, 0);
  double max_offset = 0.0, max_amp = 0.0;
  std::vector<double> x(series.size()), c(series.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double w = g.point(k);
    if (std::abs(reference[k]) < threshold || std::abs(w) * range < two_pi) continue;
    for (std::size_t i = 0; i < series.size(); ++i) {
      x[i] = w * series[i].t_r;
      c[i] = series[i].counts[k] / series[i].counts.total_exposure();
    }
    fits[k] = fit_sinusoid(x, c);
    if (!fits[k].ok) continue;
    valid[k] = 1;
    max_offset = std::max(max_offset, std::abs(fits[k].offset));
    max_amp = std::max(max_amp, fits[k].amplitude);
  }
  require(std::count(valid.begin(), valid.end(), 1) > 0, ErrorKind::insufficient_scan_range,
          "no frequency bin sees a full fringe period over the scanned peak times");
  require(max_amp > 1e-9 * max_offset, ErrorKind::zero_signal, "no interference signal in any bin");
  require(std::abs(alpha) > 0.0 && std::abs(gamma) > 0.0, ErrorKind::invalid_argument,
          "alpha and gamma must be nonzero");

  const double gauge = std::arg(std::conj(alpha) * gamma);
  std::vector<double> mag(n, 0.0), phase(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!valid[k]) continue;
    mag[k] = fits[k].amplitude / (std::abs(alpha) * std::abs(gamma) * std::abs(reference[k]));
    phase[k] = fits[k].phase - gauge + std::arg(reference[k]);
  }
  std::size_t anchor = n;
  double best = infinity;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = std::abs(g.point(k) - g.center());
    if (valid[k] && d < best) {
      best = d;
      anchor = k;
    }
  }
  unwrap_from(phase, valid, anchor, chain_neighbours(valid));
  std::vector<complex> values(n);
  for (std::size_t k = 0; k < n; ++k) values[k] = valid[k] ? std::polar(mag[k], phase[k]) : complex{};
  return {SpectralAmplitude(g, std::move(values)), std::move(valid)};
}

PairTomographyResult timescan_tomography(const std::vector<PairScanSample> &series,
                                         const SpectralAmplitude &reference, complex alpha, complex eta) {
  std::vector<double> keys;
  for (const auto &s : series) {
    require(s.counts.is_2d(), ErrorKind::invalid_argument, "pair scan needs 2-D tables");
    require(s.counts.grid1() == reference.grid() && s.counts.grid2() == reference.grid(), ErrorKind::grid_mismatch,
            "scan table grids differ from the reference");
    keys.push_back(s.t_r1 * 1e6 + s.t_r2);
  }
  require(distinct_count(keys) >= 4, ErrorKind::insufficient_samples, "scan needs at least 4 distinct peak-time pairs");
  const auto &g = reference.grid();
  const std::size_t n = g.count();
  const double threshold = bandwidth_mask_fraction * reference.max_abs() * reference.max_abs();

  std::vector<SinusoidFit> fits(n * n);
  std::vector<char> valid(n * n, 0);
  double max_offset = 0.0, max_amp = 0.0;
  std::vector<double> x(series.size()), c(series.size());
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      const std::size_t idx = k1 * n + k2;
      if (std::abs(reference[k1] * reference[k2]) < threshold) continue;
      double lo = infinity, hi = -infinity;
      for (std::size_t i = 0; i < series.size(); ++i) {
        x[i] = g.point(k1) * series[i].t_r1 + g.point(k2) * series[i].t_r2;
        c[i] = series[i].counts[idx] / series[i].counts.total_exposure();
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
      }
      if (hi - lo < two_pi) continue;
      fits[idx] = fit_sinusoid(x, c);
      if (!fits[idx].ok) continue;
      valid[idx] = 1;
      max_offset = std::max(max_offset, std::abs(fits[idx].offset));
      max_amp = std::max(max_amp, fits[idx].amplitude);
    }
  }
  require(std::count(valid.begin(), valid.end(), 1) > 0, ErrorKind::insufficient_scan_range,
          "no frequency bin sees a full fringe period over the scanned peak times");
  require(max_amp > 1e-9 * max_offset, ErrorKind::zero_signal, "no interference signal in any bin");
  require(std::abs(alpha) > 0.0 && std::abs(eta) > 0.0, ErrorKind::invalid_argument, "alpha and eta must be nonzero");

  const double gauge = std::arg(std::conj(alpha) * std::conj(alpha) * eta);
  std::vector<double> mag(n * n, 0.0), phase(n * n, 0.0);
  std::vector<std::vector<std::size_t>> neighbours(n * n);
  std::size_t anchor = n * n;
  double best = infinity;
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      const std::size_t idx = k1 * n + k2;
      if (!valid[idx]) continue;
      const complex ref = reference[k1] * reference[k2];
      mag[idx] = 2.0 * fits[idx].amplitude / (std::norm(alpha) * std::abs(eta) * std::abs(ref));
      phase[idx] = fits[idx].phase - gauge + std::arg(ref);
      const double d = std::hypot(g.point(k1) - g.center(), g.point(k2) - g.center());
      if (d < best) {
        best = d;
        anchor = idx;
      }
      if (k1 > 0) neighbours[idx].push_back(idx - n);
      if (k2 > 0) neighbours[idx].push_back(idx - 1);
      if (k2 + 1 < n) neighbours[idx].push_back(idx + 1);
      if (k1 + 1 < n) neighbours[idx].push_back(idx + n);
    }
  }
  unwrap_from(phase, valid, anchor, neighbours);
  std::vector<complex> values(n * n);
  for (std::size_t i = 0; i < n * n; ++i) values[i] = valid[i] ? std::polar(mag[i], phase[i]) : complex{};
  return {TwoPhotonAmplitude(g, g, std::move(values)), std::move(valid)};
}

SingleReport analyze_single(const CountDistribution &table, const SpectralAmplitude &reference,
                            const InterferenceSetup1D &setup) {
  require(!table.is_2d(), ErrorKind::invalid_argument, "single-photon analysis needs a 1-D table");
  require(table.grid1() == reference.grid(), ErrorKind::grid_mismatch, "table grid differs from the reference grid");
  const auto &g = reference.grid();
  std::vector<double> rates(table.values().begin(), table.values().end());
  double scale = table.total_exposure();
  if (table.kind() == CountKind::counts) {
    // Expected total without the interference term, for a normalized signal.
    double phi_sum = 0.0;
    for (std::size_t k = 0; k < reference.size(); ++k) phi_sum += std::norm(reference[k]);
    scale = table.total() / (0.5 * (std::norm(setup.alpha) * phi_sum + std::norm(setup.gamma) / g.spacing()));
    require(scale > 0.0, ErrorKind::zero_total_rate, "count table is empty");
  }
  for (auto &v : rates) v /= scale;

  SingleReport report{0.0, 0.0, 0.0, {}, {g, {}, {}}};
  const auto extrema = locate_extrema(rates, g.front(), g.spacing());
  report.amplitude = amplitude_from_envelope(EnvelopePair(extrema), setup.alpha, setup.gamma, reference);

  std::vector<double> r = magnitudes(reference);
  for (auto &v : r) v *= std::abs(setup.alpha);
  const auto fr = normalize_fringes(rates, r, g.front(), g.spacing(), 0.5);
  const double threshold = bandwidth_mask_fraction * reference.max_abs();
  const std::vector<double> phi_abs = magnitudes(reference);
  std::vector<double> spacings;
  for (std::size_t i = 0; i + 1 < fr.maxima.size(); ++i) {
    const auto &a = fr.maxima[i];
    const auto &b = fr.maxima[i + 1];
    if (!fr.crest(i) || !fr.crest(i + 1)) continue;
    if (interpolate_quadratic(phi_abs, g.front(), g.spacing(), a.position) < threshold ||
        interpolate_quadratic(phi_abs, g.front(), g.spacing(), b.position) < threshold)
      continue;
    const double spacing = b.position - a.position;
    report.phase.nu.push_back(0.5 * (a.position + b.position));
    report.phase.gradient.push_back(phase_gradient_single(spacing, setup.t_r));
    spacings.push_back(spacing);
  }
  require(!spacings.empty(), ErrorKind::no_extrema, "no adjacent fringe crests inside the bandwidth mask");
  std::vector<double> sorted = spacings;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  report.fringe_spacing = sorted[sorted.size() / 2];
  report.phase_gradient = phase_gradient_single(report.fringe_spacing, setup.t_r);
  report.signal_time = -report.phase_gradient;
  return report;
}

namespace {

struct PairData {
  PairGeometry geo;
  std::vector<double> rates;
  std::vector<double> phi_abs;
  double a12 = 0.0;
  bool counts = false;
};

PairData prepare_pair(const CountDistribution &table, const SpectralAmplitude &reference,
                      const InterferenceSetup2D &setup) {
  require(table.is_2d(), ErrorKind::invalid_argument, "pair analysis needs a 2-D table");
  require(table.grid1() == table.grid2(), ErrorKind::grid_mismatch, "pair analysis needs identical arm grids");
  require(table.grid1() == reference.grid(), ErrorKind::grid_mismatch, "table grid differs from the reference grid");
  require(setup.t_r1 != setup.t_r2, ErrorKind::invalid_argument,
          "equal reference peak times leave no fringes along omega1 - omega2");
  PairData d{{table.grid1().count(), table.grid1().spacing(), table.grid1()}, {}, magnitudes(reference),
             std::abs(setup.alpha * setup.alpha_arm2()), table.kind() == CountKind::counts};
  d.rates.assign(table.values().begin(), table.values().end());
  double scale = table.total_exposure();
  if (d.counts) {
    // Expected total without the interference term, which integrates to nearly zero.
    double phi_sum = 0.0;
    for (double p : d.phi_abs) phi_sum += p * p;
    const double rate_sum = 0.25 * (d.a12 * d.a12 * phi_sum * phi_sum + std::norm(setup.eta) / (d.geo.h * d.geo.h));
    scale = table.total() / rate_sum;
    require(scale > 0.0, ErrorKind::zero_total_rate, "count table is empty");
  }
  for (auto &v : d.rates) v /= scale;
  return d;
}

struct SliceAnalysis {
  Line line;
  NormalizedFringes fringes;
  double min_peak = 0.9;
};

// Central slice, band-averaged over equal-parity neighbours for sampled counts.
SliceAnalysis central_slice(const PairData &d, const InterferenceSetup2D &setup, const std::vector<Line> &lines) {
  std::size_t best = 0;
  for (std::size_t m = 0; m < lines.size(); ++m) {
    if (lines[m].excess > lines[best].excess) best = m;
  }
  SliceAnalysis out;
  out.line = lines[best];
  const double delay_diff = setup.t_r1 - setup.t_r2;
  NormalizeOptions opt;
  if (d.counts) {
    const double floor = 0.5 * lines[best].excess;
    const int first = -static_cast<int>(d.geo.n - 1);
    const std::size_t slots = d.geo.n;
    std::vector<double> c(slots, 0.0), r2(slots, 0.0), w(slots, 0.0);
    double sum = 0.0, weight = 0.0;
    for (std::size_t m = best % 2; m < lines.size(); m += 2) {
      const auto &l = lines[m];
      if (l.excess < floor) continue;
      sum += l.sum;
      weight += 1.0;
      for (std::size_t i = 0; i < l.counts.size(); ++i) {
        const auto slot = static_cast<std::size_t>((l.lattice + 2 * static_cast<int>(i) - first) / 2);
        c[slot] += l.counts[i];
        r2[slot] += l.reference[i] * l.reference[i];
        w[slot] += 1.0;
      }
    }
    // Keep the slots every band member reaches.
    Line avg;
    avg.sum = sum / weight;
    bool started = false;
    for (std::size_t s = 0; s < slots; ++s) {
      if (w[s] < weight) continue;
      if (!started) {
        avg.lattice = first + 2 * static_cast<int>(s);
        avg.nu0 = static_cast<double>(avg.lattice) * d.geo.h;
        started = true;
      }
      avg.counts.push_back(c[s] / w[s]);
      avg.reference.push_back(std::sqrt(r2[s] / w[s]));
    }
    const double period = two_pi / (0.5 * std::abs(delay_diff));
    avg.counts = gaussian_smooth(avg.counts, 0.1 * period / (2.0 * d.geo.h));
    out.line = std::move(avg);
    out.min_peak = 0.5;
    opt.global_envelope = true;
    opt.extrapolate = true;
  }
  opt.min_peak = out.min_peak;
  out.fringes = normalize_fringes(out.line.counts, out.line.reference, out.line.nu0, 2.0 * d.geo.h, 0.25, opt);
  return out;
}

// Least-squares parabola through log excess against the sum frequency, rows weighted by the
// excess. Empty unless at least 3 lines qualify and the parabola opens downwards.
std::optional<std::array<double, 3>> log_quadratic_fit(const std::vector<Line> &lines, double fraction) {
  double peak = 0.0;
  for (const auto &l : lines) peak = std::max(peak, l.excess);
  std::vector<const Line *> used;
  for (const auto &l : lines) {
    if (peak > 0.0 && l.excess >= fraction * peak) used.push_back(&l);
  }
  if (used.size() < 3) return std::nullopt;
  Eigen::MatrixXd a(used.size(), 3);
  Eigen::VectorXd b(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) {
    const double w = used[i]->excess / peak;
    const double s = used[i]->sum;
    a(i, 0) = w;
    a(i, 1) = w * s;
    a(i, 2) = w * s * s;
    b(i) = w * std::log(used[i]->excess);
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
  if (!(c(2) < 0.0)) return std::nullopt;
  return std::array<double, 3>{c(0), c(1), c(2)};
}

std::vector<Line> all_lines(const PairData &d) {
  std::vector<Line> lines;
  for (std::size_t m = 0; m + 1 < 2 * d.geo.n; ++m) lines.push_back(extract_line(d.rates, d.phi_abs, d.a12, d.geo, m));
  return lines;
}

} // namespace

ReconstructionReport analyze_pair(const CountDistribution &table, const SpectralAmplitude &reference,
                                  const InterferenceSetup2D &setup, const PairOptions &options) {
  const PairData d = prepare_pair(table, reference, setup);
  const std::vector<Line> lines = all_lines(d);
  const SliceAnalysis slice = central_slice(d, setup, lines);
  const double delay_diff = setup.t_r1 - setup.t_r2;
  const double step = 2.0 * d.geo.h;

  ReconstructionReport report;
  report.slice_sum = slice.line.sum;
  for (std::size_t i = 0; i < slice.line.counts.size(); ++i) {
    report.slice_nu.push_back(slice.line.nu0 + static_cast<double>(i) * step);
  }
  report.slice_values = slice.line.counts;
  report.slice_reference = slice.line.reference;

  double lo = 0.0, hi = 0.0;
  const auto samples = select_gradient_samples(slice.fringes, delay_diff, options, &lo, &hi);
  require(samples.size() >= 3, ErrorKind::insufficient_samples,
          "found " + std::to_string(samples.size()) + " usable fringe spacings; need at least 3");
  report.mask = {{lo, hi}};
  double nearest = infinity;
  for (const auto &s : samples) {
    report.phase.nu.push_back(s.nu);
    report.phase.gradient.push_back(s.gradient);
    if (std::abs(s.nu) < nearest) {
      nearest = std::abs(s.nu);
      report.fringe_spacing = s.spacing;
    }
  }

  const std::size_t len = slice.line.counts.size();
  const double eta_abs = std::abs(setup.eta);
  report.amplitude_diff = {FrequencyGrid(slice.line.nu0 + 0.5 * static_cast<double>(len - 1) * step, step, len),
                           std::vector<double>(len, 0.0), std::vector<char>(len, 0)};
  if (eta_abs > 0.0) {
    for (std::size_t i = 0; i < len; ++i) {
      if (std::isnan(slice.fringes.envelope[i])) continue;
      report.amplitude_diff.values[i] = slice.fringes.envelope[i] / eta_abs;
      report.amplitude_diff.valid[i] = 1;
    }
  }

  // Spectral widths from the measured envelope of |psi|.
  std::optional<std::pair<double, double>> widths;
  try {
    Moments sum, diff;
    if (!d.counts) {
      // Every slice with at least three crests contributes, unless its crests are weaker
      // than 1e-3 of the strongest anywhere.
      std::vector<std::pair<const Line *, NormalizedFringes>> fits;
      double peak = 0.0;
      NormalizeOptions opt;
      opt.extrapolate = true;
      for (const auto &l : lines) {
        if (l.counts.size() < 5) continue;
        try {
          auto fr = normalize_fringes(l.counts, l.reference, l.nu0, step, 0.25, opt);
          for (std::size_t i = 0; i < fr.maxima.size(); ++i) {
            if (fr.crest(i)) peak = std::max(peak, fr.magnitude[i]);
          }
          fits.emplace_back(&l, std::move(fr));
        } catch (const Error &) {
        }
      }
      for (const auto &[l, fr] : fits) {
        double line_peak = 0.0;
        std::size_t crests = 0;
        for (std::size_t i = 0; i < fr.maxima.size(); ++i) {
          if (!fr.crest(i)) continue;
          line_peak = std::max(line_peak, fr.magnitude[i]);
          ++crests;
        }
        if (crests < 3 || line_peak < 1e-3 * peak) continue;
        for (std::size_t i = 0; i < fr.envelope.size(); ++i) {
          if (std::isnan(fr.envelope[i])) continue;
          const double w = fr.envelope[i] * fr.envelope[i];
          sum.add(w, l->sum);
          diff.add(w, l->nu0 + static_cast<double>(i) * step);
        }
      }
    } else {
      // Noise in the far lines would dominate raw moments, so the marginal is modelled as
      // a Gaussian fitted to the lines above 5% of the peak.
      const auto fit = log_quadratic_fit(lines, 0.05);
      if (fit) {
        for (const auto &l : lines) sum.add(std::exp((*fit)[0] + l.sum * ((*fit)[1] + l.sum * (*fit)[2])), l.sum);
      }
      for (std::size_t i = 0; i < len; ++i) {
        const double p = slice.fringes.envelope[i];
        if (!std::isnan(p)) diff.add(p * p, slice.line.nu0 + static_cast<double>(i) * step);
      }
    }
    if (sum.w > 0.0 && diff.w > 0.0 && sum.std() > 0.0 && diff.std() > 0.0) widths = {sum.std(), diff.std()};
  } catch (const Error &) {
    widths.reset();
  }
  if (widths) {
    report.source = "envelope";
    report.delta_sum = widths->first;
    report.delta_diff = widths->second;
  } else {
    require(options.fallback_moments.has_value(), ErrorKind::insufficient_samples,
            "could not estimate spectral widths from the data and no state moments were given");
    report.source = "state";
    report.delta_sum = options.fallback_moments->delta_sum;
    report.delta_diff = options.fallback_moments->delta_diff;
  }

  const CurvatureFit fit = fit_curvature(report.phase, report.delta_diff);
  report.curvature = fit.curvature;
  report.curvature_residual = fit.residual;
  const auto times = correlation_time(report.delta_diff, fit.curvature);
  report.t_corr_strong_chirp = times.strong_chirp;
  report.t_corr_quadrature = times.quadrature;
  const auto verdict = separability_check(report.delta_sum, report.delta_diff, fit.curvature);
  report.uncertainty_product = verdict.uncertainty_product;
  report.violation_factor = verdict.violation_factor;
  report.entangled = verdict.entangled;
  report.margin = verdict.margin;
  return report;
}

double sum_direction_spacing(const CountDistribution &table, const SpectralAmplitude &reference,
                             const InterferenceSetup2D &setup) {
  const PairData d = prepare_pair(table, reference, setup);
  const std::vector<Line> lines = all_lines(d);
  const double step = 2.0 * d.geo.h;
  std::size_t best = 0;
  for (std::size_t m = 0; m < lines.size(); ++m) {
    if (lines[m].excess > lines[best].excess) best = m;
  }
  auto crests = [&](const Line &l) {
    std::vector<double> out;
    const auto fr = normalize_fringes(l.counts, l.reference, l.nu0, step, 0.25);
    for (std::size_t i = 0; i < fr.maxima.size(); ++i) {
      if (fr.crest(i)) out.push_back(fr.maxima[i].position);
    }
    return out;
  };
  const auto central = crests(lines[best]);
  require(central.size() >= 2, ErrorKind::no_extrema, "central slice has fewer than two fringe crests");
  std::size_t c0 = 0;
  for (std::size_t i = 1; i < central.size(); ++i) {
    if (std::abs(central[i]) < std::abs(central[c0])) c0 = i;
  }
  const std::size_t c1 = c0 + 1 < central.size() ? c0 + 1 : c0 - 1;
  const double nu_spacing = std::abs(central[c1] - central[c0]);

  // Follow the crest nearest nu = 0 through the strong sum-frequency slices.
  std::vector<double> s, nu;
  for (const auto &l : lines) {
    if (l.excess < 0.1 * lines[best].excess || l.counts.size() < 5) continue;
    std::vector<double> cr;
    try {
      cr = crests(l);
    } catch (const Error &) {
      continue;
    }
    if (cr.empty()) continue;
    const double x = *std::min_element(cr.begin(), cr.end(), [&](double a, double b) {
      return std::abs(a - central[c0]) < std::abs(b - central[c0]);
    });
    if (std::abs(x - central[c0]) > 0.25 * nu_spacing) continue;
    s.push_back(l.sum);
    nu.push_back(x);
  }
  require(s.size() >= 3, ErrorKind::insufficient_samples, "too few sum-frequency slices carry fringes");
  PhaseProfile drift{s, nu};
  const auto fit = fit_curvature(drift, 0.0);
  require(fit.curvature != 0.0, ErrorKind::no_extrema, "fringes do not tilt along omega1 + omega2");
  return nu_spacing / std::abs(fit.curvature);
}

} // namespace cspi
