#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace chd {

using cplx = std::complex<double>;
using Vec = std::vector<double>;
using CVec = std::vector<cplx>;

// Every failure carries a stable kind string ("MonotonicityViolation", ...)
// so callers and the CLI can map it without parsing messages.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

[[noreturn]] inline void fail(const std::string& kind, const std::string& msg) {
  throw Error(kind, msg);
}

// Dense row-major matrix, just enough for kernels.
template <class T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> a;
  Mat() = default;
  Mat(int r, int c, T v = T{}) : rows(r), cols(c), a(size_t(r) * c, v) {}
  T& operator()(int i, int j) { return a[size_t(i) * cols + j]; }
  const T& operator()(int i, int j) const { return a[size_t(i) * cols + j]; }
  T* row(int i) { return a.data() + size_t(i) * cols; }
  const T* row(int i) const { return a.data() + size_t(i) * cols; }
};
using RMat = Mat<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Worker count: CHANNEL_DAMP_THREADS if set, else hardware concurrency.
int thread_count();

}  // namespace chd
