#include "cspi/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cspi/error.hpp"

namespace cspi {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
  case ErrorKind::invalid_argument: return "invalid-argument";
  case ErrorKind::grid_too_narrow: return "grid-too-narrow";
  case ErrorKind::grid_mismatch: return "grid-mismatch";
  case ErrorKind::under_resolved_grid: return "under-resolved-grid";
  case ErrorKind::zero_total_rate: return "zero-total-rate";
  case ErrorKind::no_extrema: return "no-extrema";
  case ErrorKind::nonpositive_spacing: return "nonpositive-spacing";
  case ErrorKind::insufficient_samples: return "insufficient-samples";
  case ErrorKind::insufficient_scan_range: return "insufficient-scan-range";
  case ErrorKind::zero_signal: return "zero-signal";
  case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

FrequencyGrid::FrequencyGrid(double center, double spacing, std::size_t count)
    : center_(center), spacing_(spacing), count_(count) {
  require(std::isfinite(center), ErrorKind::invalid_argument, "grid center must be finite");
  require(std::isfinite(spacing) && spacing > 0.0, ErrorKind::invalid_argument,
          "grid spacing must be positive, got " + std::to_string(spacing));
  require(count >= 2, ErrorKind::invalid_argument, "grid needs at least 2 points");
}

FrequencyGrid FrequencyGrid::from_span(double center, double half_span, std::size_t count) {
  require(half_span > 0.0, ErrorKind::invalid_argument, "grid span must be positive");
  require(count >= 2, ErrorKind::invalid_argument, "grid needs at least 2 points");
  return FrequencyGrid(center, 2.0 * half_span / static_cast<double>(count - 1), count);
}

bool FrequencyGrid::covers(double lo, double hi) const noexcept {
  const double slack = 1e-9 * spacing_;
  return front() <= lo + slack && back() >= hi - slack;
}

std::vector<double> FrequencyGrid::points() const {
  std::vector<double> out(count_);
  for (std::size_t k = 0; k < count_; ++k) out[k] = point(k);
  return out;
}

bool operator==(const FrequencyGrid &a, const FrequencyGrid &b) noexcept {
  if (a.count_ != b.count_) return false;
  const double tol = 1e-12 * std::max(a.spacing_, b.spacing_) * static_cast<double>(a.count_);
  return std::abs(a.spacing_ - b.spacing_) <= 1e-12 * a.spacing_ && std::abs(a.center_ - b.center_) <= tol;
}

} // namespace cspi
