#pragma once

// Discrete sine transform of type I:
//
//   y_k = sum_{j=1..M} x_j sin(pi j k / (M + 1)),   k = 1..M
//
// Its inverse is (2 / (M + 1)) times the same transform. Short lines use the
// O(M^2) sum; longer lines go through FFTW's RODFT00 kind.

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace sparsecombine {

inline constexpr std::size_t kDirectSineMaxLength = 64;

inline void dst1_direct(std::span<const double> in, std::span<double> out) {
  const std::size_t m = in.size();
  if (out.size() != m) throw std::invalid_argument("dst1_direct: size mismatch");
  // sin(pi r / (M+1)) for r in [0, 2(M+1)); reduces jk exactly before the sine.
  const std::size_t period = 2 * (m + 1);
  std::vector<double> table(period);
  for (std::size_t r = 0; r < period; ++r)
    table[r] = std::sin(std::numbers::pi * static_cast<double>(r) / static_cast<double>(m + 1));
  for (std::size_t k = 1; k <= m; ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= m; ++j) acc += in[j - 1] * table[(j * k) % period];
    out[k - 1] = acc;
  }
}

namespace detail {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(static_cast<double*>(fftw_malloc(sizeof(double) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* data;
};

// FFTW planning is not thread-safe; executing an existing plan on fresh
// arrays is. Plans are created once per length under a lock.
class SinePlanCache {
 public:
  static SinePlanCache& instance() {
    static SinePlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t m) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(m);
    if (it != plans_.end()) return it->second;
    FftwBuffer in(m), out(m);
    fftw_plan plan = fftw_plan_r2r_1d(static_cast<int>(m), in.data, out.data, FFTW_RODFT00, FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("fftw: failed to plan sine transform");
    plans_.emplace(m, plan);
    return plan;
  }

  ~SinePlanCache() {
    for (auto& [m, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  SinePlanCache() = default;
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

}  // namespace detail

inline void dst1_fft(std::span<const double> in, std::span<double> out) {
  const std::size_t m = in.size();
  if (out.size() != m) throw std::invalid_argument("dst1_fft: size mismatch");
  if (m == 0) return;
  fftw_plan plan = detail::SinePlanCache::instance().get(m);
  detail::FftwBuffer a(m), b(m);
  std::copy(in.begin(), in.end(), a.data);
  fftw_execute_r2r(plan, a.data, b.data);
  // RODFT00 carries an extra factor 2.
  for (std::size_t k = 0; k < m; ++k) out[k] = 0.5 * b.data[k];
}

inline void dst1(std::span<const double> in, std::span<double> out) {
  if (in.size() <= kDirectSineMaxLength)
    dst1_direct(in, out);
  else
    dst1_fft(in, out);
}

enum class SineBackend { Auto, Direct, Fft };

/// Reusable in-place transform for many lines of one length. One instance
/// per thread.
class SineTransform {
 public:
  explicit SineTransform(std::size_t length, SineBackend backend = SineBackend::Auto)
      : length_(length), scratch_(length), in_(length == 0 ? 1 : length), out_(length == 0 ? 1 : length) {
    const bool direct = backend == SineBackend::Direct ||
                        (backend == SineBackend::Auto && length_ <= kDirectSineMaxLength) || length_ == 0;
    if (direct) {
      const std::size_t period = 2 * (length_ + 1);
      table_.resize(period);
      for (std::size_t r = 0; r < period; ++r)
        table_[r] = std::sin(std::numbers::pi * static_cast<double>(r) / static_cast<double>(length_ + 1));
    } else {
      plan_ = detail::SinePlanCache::instance().get(length_);
    }
  }

  std::size_t length() const { return length_; }

  void operator()(std::span<double> line) {
    if (line.size() != length_) throw std::invalid_argument("SineTransform: wrong line length");
    if (plan_ == nullptr) {
      const std::size_t period = table_.size();
      for (std::size_t k = 1; k <= length_; ++k) {
        double acc = 0.0;
        std::size_t r = 0;
        for (std::size_t j = 1; j <= length_; ++j) {
          r += k;
          if (r >= period) r -= period;
          acc += line[j - 1] * table_[r];
        }
        scratch_[k - 1] = acc;
      }
      std::copy(scratch_.begin(), scratch_.end(), line.begin());
    } else {
      std::copy(line.begin(), line.end(), in_.data);
      fftw_execute_r2r(plan_, in_.data, out_.data);
      for (std::size_t k = 0; k < length_; ++k) line[k] = 0.5 * out_.data[k];
    }
  }

 private:
  std::size_t length_;
  std::vector<double> table_;
  std::vector<double> scratch_;
  detail::FftwBuffer in_, out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace sparsecombine
