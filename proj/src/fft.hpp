#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <span>

namespace cspi::detail {

/// Owns an FFTW plan for the unnormalized transform out_j = sum_k in_k exp(+2 pi i j k / n).
/// Planning uses FFTW_ESTIMATE so results never depend on timing measurements.
class InverseDft {
public:
  explicit InverseDft(std::size_t n);
  ~InverseDft();
  InverseDft(const InverseDft &) = delete;
  InverseDft &operator=(const InverseDft &) = delete;

  std::size_t size() const noexcept { return n_; }
  std::span<std::complex<double>> input() noexcept;
  std::span<const std::complex<double>> output() const noexcept;
  void execute() noexcept;

private:
  std::size_t n_;
  fftw_complex *in_;
  fftw_complex *out_;
  fftw_plan plan_;
};

std::size_t next_power_of_two(std::size_t n) noexcept;

} // namespace cspi::detail
