#pragma once

// Process-wide cache of FFTW plans. Plans are created once under a lock with
// FFTW_ESTIMATE | FFTW_UNALIGNED and afterwards only executed through the
// new-array interface, which FFTW guarantees to be thread safe. ESTIMATE
// planning makes the chosen algorithm, and hence every result bit, a pure
// function of the transform size.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace asq::detail {

class FftPlans {
 public:
  enum class Kind { R2C1, C2R1, R2C2, C2R2 };

  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  /// Unnormalised forward real-to-complex transform of length n.
  void r2c_1d(int n, double* in, std::complex<double>* out) {
    fftw_execute_dft_r2c(plan(Kind::R2C1, n), in, as_fftw(out));
  }

  /// Unnormalised inverse transform of length n; `in` is clobbered.
  void c2r_1d(int n, std::complex<double>* in, double* out) {
    fftw_execute_dft_c2r(plan(Kind::C2R1, n), as_fftw(in), out);
  }

  void r2c_2d(int n, double* in, std::complex<double>* out) {
    fftw_execute_dft_r2c(plan(Kind::R2C2, n), in, as_fftw(out));
  }

  void c2r_2d(int n, std::complex<double>* in, double* out) {
    fftw_execute_dft_c2r(plan(Kind::C2R2, n), as_fftw(in), out);
  }

 private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

  static fftw_complex* as_fftw(std::complex<double>* p) {
    return reinterpret_cast<fftw_complex*>(p);
  }

  fftw_plan plan(Kind kind, int n) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const bool two_d = kind == Kind::R2C2 || kind == Kind::C2R2;
    const std::size_t real_len = two_d ? static_cast<std::size_t>(n) * n : n;
    const std::size_t cplx_len = two_d ? static_cast<std::size_t>(n) * (n / 2 + 1) : n / 2 + 1;
    double* r = fftw_alloc_real(real_len);
    fftw_complex* c = fftw_alloc_complex(cplx_len);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = nullptr;
    switch (kind) {
      case Kind::R2C1: p = fftw_plan_dft_r2c_1d(n, r, c, flags); break;
      case Kind::C2R1: p = fftw_plan_dft_c2r_1d(n, c, r, flags); break;
      case Kind::R2C2: p = fftw_plan_dft_r2c_2d(n, n, r, c, flags); break;
      case Kind::C2R2: p = fftw_plan_dft_c2r_2d(n, n, c, r, flags); break;
    }
    fftw_free(r);
    fftw_free(c);
    plans_.emplace(key, p);
    return p;
  }

  std::mutex mutex_;
  std::map<std::tuple<Kind, int>, fftw_plan> plans_;
};

}  // namespace asq::detail
