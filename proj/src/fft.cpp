#include "fft.hpp"

#include <new>

namespace cspi::detail {

InverseDft::InverseDft(std::size_t n) : n_(n) {
  in_ = fftw_alloc_complex(n);
  out_ = fftw_alloc_complex(n);
  if (in_ == nullptr || out_ == nullptr) {
    fftw_free(in_);
    fftw_free(out_);
    throw std::bad_alloc();
  }
  plan_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  for (std::size_t k = 0; k < n; ++k) in_[k][0] = in_[k][1] = 0.0;
}

InverseDft::~InverseDft() {
  fftw_destroy_plan(plan_);
  fftw_free(in_);
  fftw_free(out_);
}

// fftw_complex is layout-compatible with std::complex<double>.
std::span<std::complex<double>> InverseDft::input() noexcept {
  return {reinterpret_cast<std::complex<double> *>(in_), n_};
}

std::span<const std::complex<double>> InverseDft::output() const noexcept {
  return {reinterpret_cast<const std::complex<double> *>(out_), n_};
}

void InverseDft::execute() noexcept { fftw_execute(plan_); }

std::size_t next_power_of_two(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

} // namespace cspi::detail
