#pragma once

// Forward-mode dual numbers with a small fixed-capacity gradient.
// Nesting one level (Dual<Dual<double>>) gives exact second derivatives.

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>

namespace harmsec {

inline constexpr std::size_t kMaxSeeds = 8;

template <class T>
class Dual {
 public:
  T v{};
  std::array<T, kMaxSeeds> d{};
  int n = 0;

  Dual() = default;
  Dual(T value) : v(value) {}  // NOLINT: implicit lift of constants
  Dual(T value, int nseeds) : v(value), n(nseeds) {}

  static Dual seed(T value, int nseeds, int index) {
    Dual r(value, nseeds);
    r.d[index] = T(1);
    return r;
  }

  int size() const { return n; }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

namespace detail {
template <class T>
int common_size(const Dual<T>& a, const Dual<T>& b) {
  return a.n > b.n ? a.n : b.n;
}
}  // namespace detail

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r(a.v + b.v, detail::common_size(a, b));
  for (int i = 0; i < r.n; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}

template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r(a.v - b.v, detail::common_size(a, b));
  for (int i = 0; i < r.n; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}

template <class T>
Dual<T> operator-(const Dual<T>& a) {
  Dual<T> r(-a.v, a.n);
  for (int i = 0; i < r.n; ++i) r.d[i] = -a.d[i];
  return r;
}

template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r(a.v * b.v, detail::common_size(a, b));
  for (int i = 0; i < r.n; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}

template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  const T q = a.v / b.v;
  Dual<T> r(q, detail::common_size(a, b));
  for (int i = 0; i < r.n; ++i) r.d[i] = (a.d[i] - q * b.d[i]) / b.v;
  return r;
}

// Chain rule helper: f(a) with f'(a.v) = df.
template <class T>
Dual<T> chain(const Dual<T>& a, const T& f, const T& df) {
  Dual<T> r(f, a.n);
  for (int i = 0; i < r.n; ++i) r.d[i] = df * a.d[i];
  return r;
}

using std::atan2;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tan;

template <class T>
Dual<T> sin(const Dual<T>& a) {
  return chain(a, sin(a.v), cos(a.v));
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  return chain(a, cos(a.v), -sin(a.v));
}
template <class T>
Dual<T> tan(const Dual<T>& a) {
  const T t = tan(a.v);
  return chain(a, t, T(1) + t * t);
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  const T e = exp(a.v);
  return chain(a, e, e);
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  return chain(a, log(a.v), T(1) / a.v);
}
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  const T s = sqrt(a.v);
  return chain(a, s, T(0.5) / s);
}
// Constant real exponent.
template <class T>
Dual<T> pow(const Dual<T>& a, double e) {
  return chain(a, pow(a.v, e), T(e) * pow(a.v, e - 1.0));
}
template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  const T r2 = x.v * x.v + y.v * y.v;
  Dual<T> r(atan2(y.v, x.v), detail::common_size(y, x));
  for (int i = 0; i < r.n; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / r2;
  return r;
}

}  // namespace harmsec
