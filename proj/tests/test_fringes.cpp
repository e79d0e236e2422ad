#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cspi/error.hpp"
#include "cspi/fringes.hpp"
#include "cspi/presets.hpp"

using namespace cspi;

namespace {

constexpr double pi = std::numbers::pi;

ErrorKind kind_of(auto &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::invalid_argument;
}

std::vector<double> sample(const FrequencyGrid &g, auto &&f) {
  std::vector<double> v(g.count());
  for (std::size_t k = 0; k < g.count(); ++k) v[k] = f(g.point(k));
  return v;
}

bool alternates(const FringeExtrema &e) {
  for (std::size_t i = 1; i < e.points.size(); ++i) {
    if (e.points[i].maximum == e.points[i - 1].maximum) return false;
    if (e.points[i].position <= e.points[i - 1].position) return false;
  }
  return true;
}

} // namespace

TEST_CASE("maxima of a known sinusoid") {
  const auto g = FrequencyGrid::from_span(0.0, 3.0, 601);
  const auto e = locate_extrema(sample(g, [](double w) { return 1.0 + std::cos(5.0 * w); }), g.front(), g.spacing());
  const auto maxima = e.maxima();
  REQUIRE(maxima.size() == 5);
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    CHECK(std::abs(maxima[i].position - (static_cast<double>(i) - 2.0) * 2.0 * pi / 5.0) < 1e-3);
  }
  for (const auto &m : maxima) CHECK(m.value == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(alternates(e));
}

TEST_CASE("count-table overload") {
  const auto g = FrequencyGrid::from_span(0.0, 3.0, 601);
  const CountDistribution slice(CountKind::rate, g, sample(g, [](double w) { return 1.0 + std::cos(5.0 * w); }));
  CHECK(locate_extrema(slice).maxima().size() == 5);
}

TEST_CASE("extrema preconditions") {
  const auto g = FrequencyGrid::from_span(0.0, 1.0, 50);
  CHECK(kind_of([&] { locate_extrema(sample(g, [](double w) { return w; }), g.front(), g.spacing()); }) ==
        ErrorKind::no_extrema);
  CHECK(kind_of([] { locate_extrema(std::vector<double>(20, 1.0), 0.0, 1.0); }) == ErrorKind::no_extrema);
  CHECK(kind_of([] { locate_extrema(std::vector<double>{0.0, 1.0, 0.0, 1.0}, 0.0, 1.0); }) ==
        ErrorKind::insufficient_samples);
}

TEST_CASE("plateaus report their centroid") {
  const std::vector<double> v{0.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0, 0.0, 1.0};
  const auto e = locate_extrema(v, 10.0, 0.5);
  REQUIRE(e.points.size() == 2);
  CHECK(e.points[0].maximum);
  CHECK(e.points[0].position == doctest::Approx(10.0 + 3.0 * 0.5));
  CHECK(e.points[0].value == 2.0);
  CHECK_FALSE(e.points[1].maximum);
  CHECK(e.points[1].position == doctest::Approx(10.0 + 6.5 * 0.5));
}

TEST_CASE("extrema alternate on noisy curves") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(200);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(0.2 * static_cast<double>(k)) + noise(rng);
    v[100] = v[101];  // force a tie somewhere
    CHECK(alternates(locate_extrema(v, 0.0, 1.0)));
  }
}

TEST_CASE("envelope pair through alternating extrema") {
  const auto g = FrequencyGrid::from_span(0.0, 4.0, 801);
  const auto v = sample(g, [](double w) { return std::exp(-0.25 * w * w) * (1.5 + std::cos(6.0 * w)); });
  const EnvelopePair env(locate_extrema(v, g.front(), g.spacing()));
  CHECK(env.lo() < env.hi());
  for (double x = env.lo(); x <= env.hi(); x += 0.01) CHECK(env.upper(x) >= env.lower(x));
  CHECK(env.upper(0.0) == doctest::Approx(2.5).epsilon(1e-4));
}

TEST_CASE("interpolation helpers") {
  const std::vector<double> xs{0.0, 1.0, 3.0}, ys{1.0, 3.0, -1.0};
  CHECK(interpolate_linear(xs, ys, -1.0) == 1.0);
  CHECK(interpolate_linear(xs, ys, 0.5) == doctest::Approx(2.0));
  CHECK(interpolate_linear(xs, ys, 2.0) == doctest::Approx(1.0));
  CHECK(interpolate_linear(xs, ys, 5.0) == -1.0);
  const std::vector<double> quad{4.0, 1.0, 0.0, 1.0, 4.0};  // (x - 2)^2 at x = 0..4
  CHECK(interpolate_quadratic(quad, 0.0, 1.0, 2.3) == doctest::Approx(0.09));
  CHECK(interpolate_quadratic(quad, 0.0, 1.0, 0.2) == doctest::Approx(3.24));
}

TEST_CASE("calibrated normalization recovers cosine and envelope") {
  const auto g = FrequencyGrid::from_span(0.0, 6.0, 1201);
  auto r = [](double x) { return std::exp(-0.25 * x * x); };
  auto p = [](double x) { return 0.6 * std::exp(-0.125 * (x - 0.5) * (x - 0.5)); };
  auto theta = [](double x) { return 5.0 * x + 0.3; };
  const double k = 0.25;
  const auto c = sample(g, [&](double x) { return k * (r(x) * r(x) + p(x) * p(x) + 2.0 * r(x) * p(x) * std::cos(theta(x))); });
  const auto ref = sample(g, r);
  const auto fr = normalize_fringes(c, ref, g.front(), g.spacing(), k);
  for (std::size_t j = 0; j < g.count(); ++j) {
    const double x = g.point(j);
    if (std::abs(x) > 3.0) continue;
    REQUIRE_FALSE(std::isnan(fr.envelope[j]));
    CHECK(std::abs(fr.envelope[j] - p(x)) < 0.01 * p(x));
    CHECK(std::abs(fr.cosine[j] - std::cos(theta(x))) < 0.02);
  }
  for (std::size_t i = 0; i < fr.maxima.size(); ++i) {
    if (!fr.crest(i)) continue;
    const double phase = theta(fr.maxima[i].position);
    CHECK(std::abs(std::remainder(phase, 2.0 * pi)) < 0.01);
  }
}

TEST_CASE("turning points of the fringe phase are not crests") {
  // theta turns around at x = 2, producing a maximum of C where cos theta < 1.
  const auto g = FrequencyGrid::from_span(0.0, 6.0, 1201);
  auto r = [](double x) { return std::exp(-0.25 * x * x); };
  auto p = [](double x) { return 0.6 * std::exp(-0.125 * x * x); };
  auto theta = [](double x) { return 5.0 * x - 1.25 * x * x; };
  const auto c = sample(g, [&](double x) { return 0.25 * std::norm(r(x) + p(x) * std::polar(1.0, theta(x))); });
  const auto fr = normalize_fringes(c, sample(g, r), g.front(), g.spacing(), 0.25);
  std::size_t crests = 0;
  for (std::size_t i = 0; i < fr.maxima.size(); ++i) {
    if (!fr.crest(i)) continue;
    ++crests;
    CHECK(std::abs(std::remainder(theta(fr.maxima[i].position), 2.0 * pi)) < 0.05);
  }
  CHECK(crests >= 4);
}

TEST_CASE("normalization argument checks") {
  const std::vector<double> c(10, 1.0), r(9, 1.0);
  CHECK(kind_of([&] { normalize_fringes(c, r, 0.0, 1.0, 0.25); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { normalize_fringes(c, c, 0.0, 1.0, 0.0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("central Fourier-limited pair slice has fringe spacing 2 pi / 5") {
  const auto preset = *find_pair_preset("fig3");
  const auto phi = make_gaussian_reference({}, preset.grid);
  const auto state = make_gaussian_pdc_state(preset.state, preset.grid, preset.grid);
  const InterferenceSetup2D setup{1.0, balanced_eta(state, phi), preset.t_r1, preset.t_r2, {}};
  const auto table = coincidence_rate(state, phi, setup);

  // omega1 + omega2 = 0 is the antidiagonal k1 + k2 = n - 1.
  const std::size_t n = preset.grid.count();
  std::vector<double> slice;
  for (std::size_t k1 = 0; k1 < n; ++k1) slice.push_back(table(k1, n - 1 - k1));
  // The Gaussian reference factor pulls raw maxima towards nu = 0, so the fringes are
  // calibrated against the known reference before locating extrema.
  std::vector<double> reference;
  for (std::size_t k1 = 0; k1 < n; ++k1) reference.push_back(std::abs(phi[k1] * phi[n - 1 - k1]));
  const double step = 2.0 * preset.grid.spacing();
  const double origin = preset.grid.front() - preset.grid.back();
  const auto fr = normalize_fringes(slice, reference, origin, step, 0.25);
  std::size_t lo = 0;
  while (std::isnan(fr.cosine[lo])) ++lo;
  std::size_t hi = lo;
  while (hi < n && !std::isnan(fr.cosine[hi])) ++hi;
  const auto maxima =
      locate_extrema(std::span(fr.cosine).subspan(lo, hi - lo), origin + static_cast<double>(lo) * step, step).maxima();
  std::size_t c = 0;
  for (std::size_t i = 1; i < maxima.size(); ++i) {
    if (std::abs(maxima[i].position) < std::abs(maxima[c].position)) c = i;
  }
  REQUIRE(c > 0);
  REQUIRE(c + 1 < maxima.size());
  const double expected = 2.0 * pi / 5.0;
  CHECK(std::abs(maxima[c + 1].position - maxima[c].position - expected) < 0.005 * expected);
  CHECK(std::abs(maxima[c].position - maxima[c - 1].position - expected) < 0.005 * expected);
}
