#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>

#include "okgc/diff_engine.hpp"
#include "okgc/errors.hpp"

namespace okgc::ad {

namespace {

// FFTW's planner is not thread-safe; execution on distinct buffers is.
std::mutex g_planner_mutex;

class FftWorkspace {
 public:
  explicit FftWorkspace(int d) : d_(d), bins_(d / 2 + 1) {
    real_ = fftw_alloc_real(static_cast<std::size_t>(d));
    spec_a_ = fftw_alloc_complex(static_cast<std::size_t>(bins_));
    spec_b_ = fftw_alloc_complex(static_cast<std::size_t>(bins_));
    std::lock_guard<std::mutex> lock(g_planner_mutex);
    forward_ = fftw_plan_dft_r2c_1d(d, real_, spec_a_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(d, spec_a_, real_, FFTW_ESTIMATE);
  }
  ~FftWorkspace() {
    {
      std::lock_guard<std::mutex> lock(g_planner_mutex);
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(inverse_);
    }
    fftw_free(real_);
    fftw_free(spec_a_);
    fftw_free(spec_b_);
  }
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  // conj_a selects correlation (conj(A) * B) instead of convolution (A * B).
  Vector combine(const Vector& a, const Vector& b, bool conj_a) {
    for (int i = 0; i < d_; ++i) real_[i] = a[i];
    fftw_execute_dft_r2c(forward_, real_, spec_a_);
    for (int i = 0; i < d_; ++i) real_[i] = b[i];
    fftw_execute_dft_r2c(forward_, real_, spec_b_);
    for (int k = 0; k < bins_; ++k) {
      const std::complex<double> fa(spec_a_[k][0], conj_a ? -spec_a_[k][1] : spec_a_[k][1]);
      const std::complex<double> fb(spec_b_[k][0], spec_b_[k][1]);
      const auto prod = fa * fb;
      spec_a_[k][0] = prod.real();
      spec_a_[k][1] = prod.imag();
    }
    fftw_execute_dft_c2r(inverse_, spec_a_, real_);
    Vector out(d_);
    const double inv = 1.0 / static_cast<double>(d_);
    for (int i = 0; i < d_; ++i) out[i] = real_[i] * inv;
    return out;
  }

 private:
  int d_;
  int bins_;
  double* real_;
  fftw_complex* spec_a_;
  fftw_complex* spec_b_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

FftWorkspace& workspace(Eigen::Index d) {
  thread_local std::map<Eigen::Index, std::unique_ptr<FftWorkspace>> cache;
  auto& slot = cache[d];
  if (!slot) slot = std::make_unique<FftWorkspace>(static_cast<int>(d));
  return *slot;
}

void check_lengths(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw DimensionError("circular correlation: length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
}

}  // namespace

Vector circular_correlation_naive(const Vector& a, const Vector& b) {
  check_lengths(a, b);
  const auto d = a.size();
  Vector out = Vector::Zero(d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index i = 0; i < d; ++i) out[k] += a[i] * b[(i + k) % d];
  return out;
}

Vector circular_convolution_naive(const Vector& a, const Vector& b) {
  check_lengths(a, b);
  const auto d = a.size();
  Vector out = Vector::Zero(d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index i = 0; i < d; ++i) out[k] += a[i] * b[((k - i) % d + d) % d];
  return out;
}

Vector circular_correlation_fft(const Vector& a, const Vector& b) {
  check_lengths(a, b);
  if (a.size() == 0) return Vector();
  return workspace(a.size()).combine(a, b, true);
}

Vector circular_convolution_fft(const Vector& a, const Vector& b) {
  check_lengths(a, b);
  if (a.size() == 0) return Vector();
  return workspace(a.size()).combine(a, b, false);
}

Vector circular_correlation(const Vector& a, const Vector& b) {
  return a.size() >= kFftMinDim ? circular_correlation_fft(a, b)
                                : circular_correlation_naive(a, b);
}

}  // namespace okgc::ad
