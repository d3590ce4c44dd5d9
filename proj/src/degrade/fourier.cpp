#include "medq/degrade/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>

#include "medq/error.hpp"

namespace medq::degrade {

namespace {

// The FFTW planner is not reentrant; execution of a finished plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : ptr(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!ptr) throw Error("fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* ptr;
};

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

void run(std::span<Complex> data, int rank, const int* dims, bool inverse) {
  static_assert(sizeof(Complex) == sizeof(fftw_complex));
  FftwBuffer buf(data.size());
  Plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft(rank, dims, buf.ptr, buf.ptr, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                             FFTW_ESTIMATE));
  }
  if (!plan) throw Error("fftw plan creation failed");
  std::copy(data.begin(), data.end(), reinterpret_cast<Complex*>(buf.ptr));
  fftw_execute(plan.get());
  std::copy_n(reinterpret_cast<const Complex*>(buf.ptr), data.size(), data.begin());
}

}  // namespace

void fft_1d(std::span<Complex> data, bool inverse) {
  if (data.empty()) return;
  const int n = static_cast<int>(data.size());
  run(data, 1, &n, inverse);
}

void fft_2d(std::span<Complex> data, int rows, int cols, bool inverse) {
  if (static_cast<std::size_t>(rows) * cols != data.size()) throw InvalidArgument("fft_2d: shape mismatch");
  const int dims[2] = {rows, cols};
  run(data, 2, dims, inverse);
}

}  // namespace medq::degrade
