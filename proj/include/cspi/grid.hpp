#pragma once

#include <cstddef>
#include <vector>

namespace cspi {

/// Uniform grid of frequency detunings, in units of the reference spectral width.
///
/// Point k sits at center + (k - (count - 1) / 2) * spacing, so an even count has
/// no point exactly at the center.
class FrequencyGrid {
public:
  FrequencyGrid(double center, double spacing, std::size_t count);

  /// Grid covering [center - half_span, center + half_span] with both ends included.
  static FrequencyGrid from_span(double center, double half_span, std::size_t count);

  double center() const noexcept { return center_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t count() const noexcept { return count_; }

  double point(std::size_t k) const noexcept {
    return center_ + (static_cast<double>(k) - 0.5 * static_cast<double>(count_ - 1)) * spacing_;
  }
  double front() const noexcept { return point(0); }
  double back() const noexcept { return point(count_ - 1); }

  /// True when [lo, hi] lies inside the grid, allowing for rounding in the end points.
  bool covers(double lo, double hi) const noexcept;

  std::vector<double> points() const;

  /// Grids compare equal when they describe the same points to within 1e-12 relative.
  friend bool operator==(const FrequencyGrid &a, const FrequencyGrid &b) noexcept;

private:
  double center_;
  double spacing_;
  std::size_t count_;
};

} // namespace cspi
