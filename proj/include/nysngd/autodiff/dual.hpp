#pragma once

#include <Eigen/Core>

#include <cmath>
#include <type_traits>

namespace nysngd {

/// Forward-mode dual number carrying one tangent. Nesting (Dual<Dual<T>>)
/// propagates second derivatives along a single direction.
template <typename T>
struct Dual {
  using value_type = T;

  T val{};
  T tan{};

  Dual() : val(0.0), tan(0.0) {}
  Dual(const T& v) : val(v), tan(0.0) {}  // NOLINT: constants lift implicitly
  Dual(const T& v, const T& t) : val(v), tan(t) {}
  template <typename U>
    requires(std::is_arithmetic_v<U> && !std::is_same_v<T, U>)
  Dual(U c) : val(static_cast<double>(c)), tan(0.0) {}  // NOLINT

  Dual& operator+=(const Dual& o) { val += o.val; tan += o.tan; return *this; }
  Dual& operator-=(const Dual& o) { val -= o.val; tan -= o.tan; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend Dual operator-(const Dual& a) { return {-a.val, -a.tan}; }
  friend Dual operator+(const Dual& a, const Dual& b) { return {a.val + b.val, a.tan + b.tan}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {a.val - b.val, a.tan - b.tan}; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    return {a.val * b.val, a.val * b.tan + a.tan * b.val};
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    const T q = a.val / b.val;
    return {q, (a.tan - q * b.tan) / b.val};
  }

  template <typename U> requires std::is_arithmetic_v<U>
  friend Dual operator+(const Dual& a, U b) { return {a.val + static_cast<double>(b), a.tan}; }
  template <typename U> requires std::is_arithmetic_v<U>
  friend Dual operator+(U b, const Dual& a) { return {static_cast<double>(b) + a.val, a.tan}; }
  template <typename U> requires std::is_arithmetic_v<U>
  friend Dual operator-(const Dual& a, U b) { return {a.val - static_cast<double>(b), a.tan}; }
  template <typename U> requires std::is_arithmetic_v<U>
  friend Dual operator-(U b, const Dual& a) { return {static_cast<double>(b) - a.val, -a.tan}; }
  template <typename U> requires std::is_arithmetic_v<U>
  friend Dual operator*(const Dual& a, U b) {
    const double s = static_cast<double>(b);
    return {a.val * s, a.tan * s};
  }
  template <typename U> requires std::is_arithmetic_v<U>
  friend Dual operator*(U b, const Dual& a) { return a * b; }
  template <typename U> requires std::is_arithmetic_v<U>
  friend Dual operator/(const Dual& a, U b) {
    const double s = static_cast<double>(b);
    return {a.val / s, a.tan / s};
  }

  friend Dual sin(const Dual& a) {
    using std::cos; using std::sin;
    return {sin(a.val), cos(a.val) * a.tan};
  }
  friend Dual cos(const Dual& a) {
    using std::cos; using std::sin;
    return {cos(a.val), -(sin(a.val) * a.tan)};
  }
  friend Dual exp(const Dual& a) {
    using std::exp;
    const T e = exp(a.val);
    return {e, e * a.tan};
  }
  friend Dual log(const Dual& a) {
    using std::log;
    return {log(a.val), a.tan / a.val};
  }
  friend Dual sqrt(const Dual& a) {
    using std::sqrt;
    const T r = sqrt(a.val);
    return {r, a.tan / (2.0 * r)};
  }
  friend Dual tanh(const Dual& a) {
    using std::tanh;
    const T t = tanh(a.val);
    return {t, (1.0 - t * t) * a.tan};
  }
};

/// Innermost double value of a (possibly nested) scalar.
inline double primal(double x) { return x; }
template <typename T>
double primal(const Dual<T>& x) { return primal(x.val); }

/// Stop-gradient: keeps the value, drops the outermost tangent.
inline double freeze(double x) { return x; }
template <typename T>
Dual<T> freeze(const Dual<T>& x) { return Dual<T>(x.val, T(0.0)); }

/// Builds a (possibly nested) scalar of type A from a scalar of type P,
/// padding every extra tangent level with zeros.
template <typename A, typename P>
A lift(const P& p) {
  if constexpr (std::is_same_v<A, P>) {
    return p;
  } else {
    return A(lift<typename A::value_type>(p));
  }
}

template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

}  // namespace nysngd

namespace Eigen {

template <typename T>
struct NumTraits<nysngd::Dual<T>> : NumTraits<double> {
  using Real = nysngd::Dual<T>;
  using NonInteger = nysngd::Dual<T>;
  using Nested = nysngd::Dual<T>;
  using Literal = nysngd::Dual<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2 * NumTraits<T>::ReadCost,
    AddCost = 2 * NumTraits<T>::AddCost,
    MulCost = 3 * NumTraits<T>::MulCost
  };
};

}  // namespace Eigen
