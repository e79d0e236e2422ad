#pragma once

#include <span>
#include <vector>

#include "cspi/forward.hpp"

namespace cspi {

struct Extremum {
  double position = 0.0;
  double value = 0.0;
  bool maximum = false;
};

/// Interior extrema of a sampled curve, ascending in position; maxima and minima alternate.
struct FringeExtrema {
  std::vector<Extremum> points;

  std::vector<Extremum> maxima() const;
  std::vector<Extremum> minima() const;
};

/// Finds strict local extrema of samples at origin + k * step. Single-sample extrema are
/// refined by the vertex of the parabola through the sample and its two neighbours; flat
/// runs report their centroid. Throws no_extrema when there is no interior maximum.
FringeExtrema locate_extrema(std::span<const double> values, double origin, double step);
FringeExtrema locate_extrema(const CountDistribution &slice);

/// Piecewise-linear curves through the fringe maxima and minima.
class EnvelopePair {
public:
  explicit EnvelopePair(const FringeExtrema &extrema);

  /// Interval covered by both curves; empty when lo() > hi().
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  bool contains(double x) const noexcept { return x >= lo_ && x <= hi_; }
  double upper(double x) const;
  double lower(double x) const;

private:
  std::vector<double> max_x_, max_y_, min_x_, min_y_;
  double lo_, hi_;
};

/// Linear interpolation through ascending nodes, clamped to the end values.
double interpolate_linear(std::span<const double> xs, std::span<const double> ys, double x);

/// Value at x of the parabola through the three uniform samples nearest to x.
double interpolate_quadratic(std::span<const double> values, double origin, double step, double x);

struct NormalizeOptions {
  double min_peak = 0.9;         // normalized height a maximum needs to count as a fringe crest
  double max_dip = 0.15;         // crests whose log P falls this far below their neighbours' trend are rejected
  int iterations = 3;
  bool global_envelope = false;  // one quadratic in log P instead of local three-point pieces
  bool extrapolate = false;      // extend the envelope past the outer crests while it keeps decaying
};

/// Fringes of the form C = k (R^2 + P^2 + 2 R P cos theta) with the reference magnitude R known
/// per sample. The signal magnitude P is estimated at the crests, where cos theta = 1, and
/// interpolated in log between them; dividing out R and P leaves cos theta.
///
/// A maximum where the fringe phase merely turns around (cos theta < 1) underestimates P, so
/// it shows up as a dip in log P against the neighbouring crests and is rejected.
struct NormalizedFringes {
  std::vector<double> cosine;    // NaN where R or P is unavailable
  std::vector<double> envelope;  // P per sample, NaN outside the crest range
  std::vector<Extremum> maxima;  // maxima of `cosine`; value is the normalized height
  std::vector<double> magnitude; // P estimated at each maximum as if it were a crest
  std::vector<double> strength;  // R * P at each maximum
  std::vector<char> accepted;    // maximum is a genuine crest

  bool crest(std::size_t i) const { return accepted[i] != 0; }
  std::vector<double> crest_positions() const;
};

NormalizedFringes normalize_fringes(std::span<const double> counts, std::span<const double> reference, double origin,
                                    double step, double prefactor, const NormalizeOptions &options = {});

} // namespace cspi
