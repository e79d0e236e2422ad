#include "cspi/fringes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "cspi/error.hpp"

namespace cspi {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double infinity_value() { return std::numeric_limits<double>::infinity(); }

std::vector<Extremum> filter(const std::vector<Extremum> &points, bool maximum) {
  std::vector<Extremum> out;
  for (const auto &p : points) {
    if (p.maximum == maximum) out.push_back(p);
  }
  return out;
}

// Smooth model of log P through the crest nodes.
class LogEnvelope {
public:
  LogEnvelope(std::vector<double> xs, std::vector<double> ys, bool global) : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (global && xs_.size() >= 3) {
      Eigen::MatrixXd a(xs_.size(), 3);
      Eigen::VectorXd b(xs_.size());
      // Rows weighted by P: noise in log P falls off as 1 / P.
      for (std::size_t i = 0; i < xs_.size(); ++i) {
        const double w = std::exp(ys_[i]);
        a(i, 0) = w;
        a(i, 1) = w * xs_[i];
        a(i, 2) = w * xs_[i] * xs_[i];
        b(i) = w * ys_[i];
      }
      const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
      coef_ = {c(0), c(1), c(2)};
    }
  }

  double operator()(double x) const {
    if (coef_) return (*coef_)[0] + x * ((*coef_)[1] + x * (*coef_)[2]);
    const std::size_t m = xs_.size();
    if (m == 1) return ys_[0];
    // Three nearest nodes, or both when only two exist.
    std::size_t r = static_cast<std::size_t>(std::lower_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
    std::size_t l = r;
    const std::size_t want = std::min<std::size_t>(3, m);
    while (r - l < want) {
      if (l == 0) ++r;
      else if (r == m) --l;
      else if (x - xs_[l - 1] <= xs_[r] - x) --l;
      else ++r;
    }
    double sum = 0.0;
    for (std::size_t i = l; i < r; ++i) {
      double w = ys_[i];
      for (std::size_t j = l; j < r; ++j) {
        if (j != i) w *= (x - xs_[j]) / (xs_[i] - xs_[j]);
      }
      sum += w;
    }
    return sum;
  }

private:
  std::vector<double> xs_, ys_;
  std::optional<std::array<double, 3>> coef_;
};

} // namespace

std::vector<Extremum> FringeExtrema::maxima() const { return filter(points, true); }
std::vector<Extremum> FringeExtrema::minima() const { return filter(points, false); }

FringeExtrema locate_extrema(std::span<const double> y, double origin, double step) {
  require(y.size() >= 5, ErrorKind::insufficient_samples, "extrema search needs at least 5 samples");
  struct Run {
    std::size_t a, b;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < y.size();) {
    std::size_t j = i;
    while (j + 1 < y.size() && y[j + 1] == y[i]) ++j;
    runs.push_back({i, j});
    i = j + 1;
  }

  FringeExtrema out;
  for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
    const auto [a, b] = runs[r];
    const double v = y[a];
    const double before = y[runs[r - 1].a];
    const double after = y[runs[r + 1].a];
    bool maximum;
    if (v > before && v > after) maximum = true;
    else if (v < before && v < after) maximum = false;
    else continue;

    Extremum e;
    e.maximum = maximum;
    if (a == b) {
      const double y0 = y[a - 1], y1 = y[a], y2 = y[a + 1];
      const double d = 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2);
      e.position = origin + (static_cast<double>(a) + d) * step;
      e.value = y1 - 0.25 * (y0 - y2) * d;
    } else {
      e.position = origin + 0.5 * static_cast<double>(a + b) * step;
      e.value = v;
    }
    out.points.push_back(e);
  }
  require(std::any_of(out.points.begin(), out.points.end(), [](const Extremum &e) { return e.maximum; }),
          ErrorKind::no_extrema, "slice has no interior maximum");
  return out;
}

FringeExtrema locate_extrema(const CountDistribution &slice) {
  require(!slice.is_2d(), ErrorKind::invalid_argument, "extrema search needs a one-dimensional slice");
  return locate_extrema(slice.values(), slice.grid1().front(), slice.grid1().spacing());
}

double interpolate_linear(std::span<const double> xs, std::span<const double> ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const std::size_t i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

double interpolate_quadratic(std::span<const double> v, double origin, double step, double x) {
  const double u = (x - origin) / step;
  const auto last = static_cast<std::ptrdiff_t>(v.size()) - 2;
  const auto i = std::clamp<std::ptrdiff_t>(std::lround(u), 1, last);
  const double t = u - static_cast<double>(i);
  const double y0 = v[i - 1], y1 = v[i], y2 = v[i + 1];
  return y1 + 0.5 * t * (y2 - y0) + 0.5 * t * t * (y2 - 2.0 * y1 + y0);
}

EnvelopePair::EnvelopePair(const FringeExtrema &extrema) {
  for (const auto &e : extrema.points) {
    (e.maximum ? max_x_ : min_x_).push_back(e.position);
    (e.maximum ? max_y_ : min_y_).push_back(e.value);
  }
  require(!max_x_.empty() && !min_x_.empty(), ErrorKind::no_extrema, "envelopes need both maxima and minima");
  lo_ = std::max(max_x_.front(), min_x_.front());
  hi_ = std::min(max_x_.back(), min_x_.back());
}

double EnvelopePair::upper(double x) const { return interpolate_linear(max_x_, max_y_, x); }
double EnvelopePair::lower(double x) const { return interpolate_linear(min_x_, min_y_, x); }

std::vector<double> NormalizedFringes::crest_positions() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    if (accepted[i]) out.push_back(maxima[i].position);
  }
  return out;
}

namespace {

// Leave-one-out prediction of node i from the others.
double predict_without(const std::vector<double> &xs, const std::vector<double> &ys, std::size_t i, bool global) {
  std::vector<double> ox, oy;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (j == i) continue;
    ox.push_back(xs[j]);
    oy.push_back(ys[j]);
  }
  return LogEnvelope(std::move(ox), std::move(oy), global)(xs[i]);
}

// Removes crest nodes sitting below the trend of the others, worst first. Returns the kept flags.
std::vector<char> prune_dips(const std::vector<double> &xs, const std::vector<double> &ys, double max_dip, bool global) {
  std::vector<char> keep(xs.size(), 1);
  while (true) {
    std::vector<double> kx, ky;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!keep[i]) continue;
      kx.push_back(xs[i]);
      ky.push_back(ys[i]);
      idx.push_back(i);
    }
    if (kx.size() < 4) break;
    double worst = max_dip;
    std::size_t drop = kx.size();
    for (std::size_t i = 0; i < kx.size(); ++i) {
      const double dip = predict_without(kx, ky, i, global) - ky[i];
      if (dip > worst) {
        worst = dip;
        drop = i;
      }
    }
    if (drop == kx.size()) break;
    keep[idx[drop]] = 0;
  }
  return keep;
}

} // namespace

NormalizedFringes normalize_fringes(std::span<const double> counts, std::span<const double> reference, double origin,
                                    double step, double prefactor, const NormalizeOptions &options) {
  require(counts.size() == reference.size(), ErrorKind::invalid_argument, "reference length differs from the slice");
  require(prefactor > 0.0, ErrorKind::invalid_argument, "fringe prefactor must be positive");
  const std::size_t n = counts.size();
  auto x_of = [&](std::size_t j) { return origin + static_cast<double>(j) * step; };

  auto crest_magnitude = [&](double x) {
    const double c = std::max(0.0, interpolate_quadratic(counts, origin, step, x));
    const double r = interpolate_quadratic(reference, origin, step, x);
    return std::pair{std::sqrt(c / prefactor) - r, r};
  };

  // Crest nodes (position, log P) among the candidates, with dips removed.
  struct Nodes {
    std::vector<double> x, y;
    std::vector<char> accepted;  // per candidate
  };
  auto nodes_from = [&](const std::vector<Extremum> &candidates, bool gate) {
    Nodes nodes;
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (gate && candidates[i].value < options.min_peak) continue;
      const double p = crest_magnitude(candidates[i].position).first;
      if (p <= 0.0) continue;
      nodes.x.push_back(candidates[i].position);
      nodes.y.push_back(std::log(p));
      owner.push_back(i);
    }
    const auto keep = prune_dips(nodes.x, nodes.y, options.max_dip, options.global_envelope);
    Nodes kept;
    kept.accepted.assign(candidates.size(), 0);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (!keep[i]) continue;
      kept.x.push_back(nodes.x[i]);
      kept.y.push_back(nodes.y[i]);
      kept.accepted[owner[i]] = 1;
    }
    require(!kept.x.empty(), ErrorKind::no_extrema, "no fringe crests above the reference level");
    return kept;
  };

  // |P| can never exceed sqrt(C / k) + R, whatever the fringe phase.
  auto bounded = [&](std::size_t j, double log_value) {
    return std::min(std::exp(log_value), std::sqrt(std::max(0.0, counts[j]) / prefactor) + reference[j]);
  };

  std::vector<Extremum> candidates = locate_extrema(counts, origin, step).maxima();
  NormalizedFringes out;
  Nodes nodes = nodes_from(candidates, false);
  for (int it = 0; it <= options.iterations; ++it) {
    const LogEnvelope log_p(nodes.x, nodes.y, options.global_envelope);
    out.cosine.assign(n, nan);
    for (std::size_t j = 0; j < n; ++j) {
      const double r = reference[j];
      const double p = bounded(j, log_p(x_of(j)));
      if (r > 0.0 && p > 0.0 && std::isfinite(p)) {
        out.cosine[j] = (counts[j] / prefactor - r * r - p * p) / (2.0 * r * p);
      }
    }

    candidates.clear();
    for (std::size_t j = 0; j < n;) {
      if (std::isnan(out.cosine[j])) {
        ++j;
        continue;
      }
      std::size_t k = j;
      while (k < n && !std::isnan(out.cosine[k])) ++k;
      if (k - j >= 5) {
        try {
          for (const auto &e : locate_extrema(std::span(out.cosine).subspan(j, k - j), x_of(j), step).maxima()) {
            candidates.push_back(e);
          }
        } catch (const Error &) {
          // monotone stretch
        }
      }
      j = k;
    }
    require(!candidates.empty(), ErrorKind::no_extrema, "normalized fringes have no maxima");
    nodes = nodes_from(candidates, true);
  }

  // Envelope between the outer crests, optionally continued outwards while it decays.
  const LogEnvelope log_p(nodes.x, nodes.y, options.global_envelope);
  double margin = 2.0 * step;
  if (nodes.x.size() >= 2) {
    std::vector<double> gaps(nodes.x.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes.x.size(); ++i) gaps[i] = nodes.x[i + 1] - nodes.x[i];
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    margin = 0.5 * gaps[gaps.size() / 2];
  }
  const double lo = nodes.x.front() - margin, hi = nodes.x.back() + margin;
  out.envelope.assign(n, nan);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = x_of(j);
    if (x >= lo && x <= hi) out.envelope[j] = bounded(j, log_p(x));
  }
  if (options.extrapolate) {
    auto extend = [&](std::ptrdiff_t from, std::ptrdiff_t dir) {
      double prev = std::isnan(out.envelope[from]) ? infinity_value() : out.envelope[from];
      for (std::ptrdiff_t j = from + dir; j >= 0 && j < static_cast<std::ptrdiff_t>(n); j += dir) {
        if (!std::isnan(out.envelope[j])) continue;
        const double p = bounded(static_cast<std::size_t>(j), log_p(x_of(static_cast<std::size_t>(j))));
        if (!(p <= prev)) break;
        out.envelope[j] = p;
        prev = p;
      }
    };
    std::ptrdiff_t first = -1, last = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(out.envelope[j])) continue;
      if (first < 0) first = static_cast<std::ptrdiff_t>(j);
      last = static_cast<std::ptrdiff_t>(j);
    }
    if (first >= 0) {
      extend(first, -1);
      extend(last, +1);
    }
  }

  out.maxima = candidates;
  out.accepted = nodes.accepted;
  out.magnitude.resize(candidates.size());
  out.strength.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto [p, r] = crest_magnitude(candidates[i].position);
    out.magnitude[i] = std::max(0.0, p);
    out.strength[i] = out.magnitude[i] * r;
  }
  return out;
}

} // namespace cspi
