#pragma once

// Thin RAII layer over FFTW. Planning is serialized; execution of a shared
// plan on per-call buffers is thread-safe.

#include <fftw3.h>

#include <complex>
#include <new>
#include <cstddef>

#include "ctdb/grid.hpp"

namespace ctdb::detail {

template <typename T>
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n)
      : n_(n), ptr_(static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n)))) {
    if (!ptr_) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  T* get() noexcept { return ptr_; }
  const T* get() const noexcept { return ptr_; }
  T& operator[](std::size_t i) noexcept { return ptr_[i]; }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  T* ptr_;
};

/// Real-to-complex / complex-to-real pair of length n (unnormalized).
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

  // Buffers must come from FftwBuffer (matching alignment). inverse() clobbers `in`.
  void forward(double* in, fftw_complex* out) const;
  void inverse(fftw_complex* in, double* out) const;

 private:
  std::size_t n_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

/// Unnormalized 2-D DFT of a real grid, full (non-shifted) complex output.
Grid<std::complex<double>> fft2(const Grid<double>& x);

}  // namespace ctdb::detail
