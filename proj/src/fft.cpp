#include "fft.hpp"

#include <mutex>

namespace ctdb::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  FftwBuffer<double> re(n);
  FftwBuffer<fftw_complex> sp(n / 2 + 1);
  std::lock_guard lock(planner_mutex());
  const int len = static_cast<int>(n);
  fwd_ = fftw_plan_dft_r2c_1d(len, re.get(), sp.get(), FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(len, sp.get(), re.get(), FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(fwd_);
  if (inv_) fftw_destroy_plan(inv_);
}

void RealFft::forward(double* in, fftw_complex* out) const {
  fftw_execute_dft_r2c(fwd_, in, out);
}

void RealFft::inverse(fftw_complex* in, double* out) const {
  fftw_execute_dft_c2r(inv_, in, out);
}

Grid<std::complex<double>> fft2(const Grid<double>& x) {
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  FftwBuffer<fftw_complex> buf(rows * cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    buf[i][0] = x.data()[i];
    buf[i][1] = 0.0;
  }
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf.get(),
                            buf.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  Grid<std::complex<double>> out(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    out.data()[i] = {buf[i][0], buf[i][1]};
  }
  return out;
}

}  // namespace ctdb::detail
