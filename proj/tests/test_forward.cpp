#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cspi/error.hpp"
#include "cspi/forward.hpp"

using namespace cspi;

namespace {

const FrequencyGrid grid1d = FrequencyGrid::from_span(0.0, 6.0, 481);
const FrequencyGrid grid2d = FrequencyGrid::from_span(0.0, 6.0, 128);

} // namespace

TEST_CASE("single-photon limits") {
  const auto phi = make_gaussian_reference({}, grid1d);
  const complex alpha{0.3, 0.1};

  SUBCASE("reference only") {
    const auto c = single_photon_rate(make_gaussian_signal({}, grid1d), phi, {alpha, 0.0, 4.0});
    for (std::size_t k = 0; k < c.size(); ++k) {
      CHECK(c[k] == doctest::Approx(0.5 * std::norm(alpha) * std::norm(phi[k])).epsilon(1e-14));
    }
  }
  SUBCASE("constructive and destructive") {
    const auto up = single_photon_rate(phi, phi, {0.4, 0.4, 0.0});
    const auto down = single_photon_rate(phi, phi, {0.4, -0.4, 0.0});
    for (std::size_t k = 0; k < up.size(); ++k) {
      CHECK(up[k] == doctest::Approx(2.0 * 0.16 * std::norm(phi[k])).epsilon(1e-14));
      CHECK(down[k] == 0.0);
    }
  }
  SUBCASE("grid mismatch") {
    const auto other = make_gaussian_reference({}, FrequencyGrid::from_span(0.0, 6.0, 480));
    CHECK_THROWS_AS(single_photon_rate(other, phi, {}), Error);
  }
}

TEST_CASE("single-photon rate expands into the three-term form") {
  SignalPulseSpec s;
  s.sigma = 0.8;
  s.delay = -2.0;
  s.phase_curvature = 0.4;
  const auto psi = make_gaussian_signal(s, grid1d);
  const auto phi = make_gaussian_reference({}, grid1d);
  const InterferenceSetup1D setup{{0.2, -0.3}, {0.1, 0.25}, 7.0};
  const auto c = single_photon_rate(psi, phi, setup);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double w = grid1d.point(k);
    const complex cross = std::conj(setup.alpha) * setup.gamma * std::conj(phi[k]) * std::polar(1.0, w * setup.t_r) * psi[k];
    const double expanded = 0.5 * (std::norm(setup.alpha * phi[k]) + std::norm(setup.gamma * psi[k]) + 2.0 * cross.real());
    CHECK(c[k] == doctest::Approx(expanded).epsilon(1e-12).scale(1e-3));
    CHECK(c[k] >= 0.0);
    CHECK(c[k] <= std::norm(setup.alpha * phi[k]) + std::norm(setup.gamma * psi[k]) + 1e-15);
  }
}

TEST_CASE("coincidence limits and expansion") {
  const auto phi = make_gaussian_reference({}, grid2d);
  const auto state = make_gaussian_pdc_state({0.2, 2.0, 1.25, 0.0}, grid2d, grid2d);
  const complex alpha{0.5, 0.2};
  const complex eta{0.05, -0.02};

  const auto refs = coincidence_rate(state, phi, {alpha, 0.0, 5.0, -5.0, {}});
  const auto pdc = coincidence_rate(state, phi, {0.0, eta, 5.0, -5.0, {}});
  const InterferenceSetup2D both{alpha, eta, 3.0, -4.0, {}};
  const auto full = coincidence_rate(state, phi, both);
  const std::size_t n = grid2d.count();
  for (std::size_t k1 = 0; k1 < n; ++k1) {
    for (std::size_t k2 = 0; k2 < n; ++k2) {
      const double a4 = std::norm(alpha) * std::norm(alpha);
      CHECK(refs(k1, k2) == doctest::Approx(0.25 * a4 * std::norm(phi[k1]) * std::norm(phi[k2])).epsilon(1e-13));
      CHECK(pdc(k1, k2) == doctest::Approx(0.25 * std::norm(eta) * std::norm(state(k1, k2))).epsilon(1e-13));

      const double w1 = grid2d.point(k1), w2 = grid2d.point(k2);
      const complex cross = std::conj(alpha) * std::conj(alpha) * eta * std::conj(phi[k1]) * std::conj(phi[k2]) *
                            std::polar(1.0, w1 * both.t_r1 + w2 * both.t_r2) * state(k1, k2);
      const double expanded = 0.25 * (a4 * std::norm(phi[k1] * phi[k2]) + std::norm(eta * state(k1, k2)) + 2.0 * cross.real());
      CHECK(full(k1, k2) == doctest::Approx(expanded).epsilon(1e-12).scale(1e-6));
      CHECK(full(k1, k2) >= 0.0);
    }
  }
}

TEST_CASE("coincidences are invariant under a common delay of state and references") {
  const auto phi = make_gaussian_reference({}, grid2d);
  const auto state = make_gaussian_pdc_state({0.3, 1.5, 0.5, 0.0}, grid2d, grid2d);
  const InterferenceSetup2D setup{{0.4, 0.1}, {0.02, 0.01}, 2.0, -3.0, {}};
  const double tau = 1.7;
  InterferenceSetup2D moved = setup;
  moved.t_r1 += tau;
  moved.t_r2 += tau;
  const auto a = coincidence_rate(state, phi, setup);
  const auto b = coincidence_rate(state.delayed(tau, tau), phi, moved);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.values()[i] - b.values()[i]) <= 1e-12);
}

TEST_CASE("unequal arm amplitudes") {
  const auto phi = make_gaussian_reference({}, grid2d);
  const auto state = make_gaussian_pdc_state({0.2, 2.0, 0.0, 0.0}, grid2d, grid2d);
  InterferenceSetup2D setup{{0.5, 0.0}, {0.0, 0.0}, 0.0, 0.0, complex{0.25, 0.0}};
  const auto c = coincidence_rate(state, phi, setup);
  CHECK(c(64, 64) == doctest::Approx(0.25 * 0.5 * 0.5 * 0.25 * 0.25 * std::norm(phi[64]) * std::norm(phi[64])));
}

TEST_CASE("count table validation") {
  CHECK_THROWS_AS(CountDistribution(CountKind::rate, grid1d, std::vector<double>(481, -1.0)), Error);
  CHECK_THROWS_AS(CountDistribution(CountKind::counts, grid1d, std::vector<double>(481, 0.5)), Error);
  CHECK_THROWS_AS(CountDistribution(CountKind::rate, grid1d, std::vector<double>(10, 0.0)), Error);
}

TEST_CASE("poisson sampling") {
  const auto grid = FrequencyGrid::from_span(0.0, 1.0, 100);

  SUBCASE("degenerate table") {
    std::vector<double> v(100, 0.0);
    v[37] = 2.5;
    const auto counts = sample_poisson_counts(CountDistribution(CountKind::rate, grid, v), 100.0, 3);
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto c = sample_poisson_counts(CountDistribution(CountKind::rate, grid, v), 100.0, seed);
      for (std::size_t k = 0; k < 100; ++k) {
        if (k != 37) CHECK(c[k] == 0.0);
      }
      mean += c[37] / 200.0;
    }
    CHECK(counts.kind() == CountKind::counts);
    CHECK(counts.total_exposure() == doctest::Approx(40.0));
    // 200 draws of Poisson(100): the sample mean has std 0.71.
    CHECK(std::abs(mean - 100.0) < 3.5);
  }

  SUBCASE("uniform table") {
    const CountDistribution uniform(CountKind::rate, grid, std::vector<double>(100, 0.3));
    const auto c = sample_poisson_counts(uniform, 1e6, 42);
    int inside = 0;
    double total = 0.0;
    for (double v : c.values()) {
      inside += std::abs(v - 1e4) <= 500.0;
      total += v;
    }
    CHECK(inside >= 99);
    CHECK(std::abs(total - 1e6) < 5000.0);
  }

  SUBCASE("determinism") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> v(100);
    for (auto &x : v) x = u(rng);
    const CountDistribution rates(CountKind::rate, grid, v);
    const auto a = sample_poisson_counts(rates, 5e4, 42);
    const auto b = sample_poisson_counts(rates, 5e4, 42);
    const auto other = sample_poisson_counts(rates, 5e4, 43);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    CHECK_FALSE(std::equal(a.values().begin(), a.values().end(), other.values().begin()));
  }

  SUBCASE("errors") {
    const CountDistribution zero(CountKind::rate, grid, std::vector<double>(100, 0.0));
    try {
      sample_poisson_counts(zero, 10.0, 1);
      FAIL("expected zero-total-rate");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::zero_total_rate);
    }
    const auto counts = sample_poisson_counts(CountDistribution(CountKind::rate, grid, std::vector<double>(100, 1.0)), 10.0, 1);
    CHECK_THROWS_AS(sample_poisson_counts(counts, 10.0, 1), Error);
  }
}
