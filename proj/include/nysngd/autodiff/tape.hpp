#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace nysngd {

class Var;

/// Linear record of scalar operations with their local partials. Each node
/// has at most two parents; a reverse sweep accumulates cotangents.
class Tape {
 public:
  struct Node {
    std::int32_t lhs;
    std::int32_t rhs;
    double dlhs;
    double drhs;
    double value;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// New independent input slot.
  Var variable(double value);

  std::int32_t push(double value, std::int32_t lhs, double dlhs, std::int32_t rhs, double drhs) {
    nodes_.push_back({lhs, rhs, dlhs, drhs, value});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }

  /// One reverse sweep. `seeds` holds (node, cotangent) pairs; returns the
  /// cotangent of every node.
  std::vector<double> reverse(std::span<const std::pair<std::int32_t, double>> seeds) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    for (const auto& [idx, w] : seeds) {
      if (idx >= 0) adj[static_cast<std::size_t>(idx)] += w;
    }
    for (std::size_t k = nodes_.size(); k-- > 0;) {
      const double a = adj[k];
      if (a == 0.0) continue;
      const Node& n = nodes_[k];
      if (n.lhs >= 0) adj[static_cast<std::size_t>(n.lhs)] += a * n.dlhs;
      if (n.rhs >= 0) adj[static_cast<std::size_t>(n.rhs)] += a * n.drhs;
    }
    return adj;
  }

 private:
  std::vector<Node> nodes_;
};

/// Reverse-mode scalar. A Var without a tape is a constant.
class Var {
 public:
  Var() = default;
  Var(double c) : value_(c) {}  // NOLINT: constants lift implicitly
  template <typename U>
    requires(std::is_integral_v<U>)
  Var(U c) : value_(static_cast<double>(c)) {}  // NOLINT
  Var(double value, Tape* tape, std::int32_t index) : value_(value), tape_(tape), index_(index) {}

  double value() const { return value_; }
  Tape* tape() const { return tape_; }
  std::int32_t index() const { return index_; }
  bool is_constant() const { return tape_ == nullptr; }

  Var& operator+=(const Var& o) { *this = *this + o; return *this; }
  Var& operator-=(const Var& o) { *this = *this - o; return *this; }
  Var& operator*=(const Var& o) { *this = *this * o; return *this; }
  Var& operator/=(const Var& o) { *this = *this / o; return *this; }

  friend Var operator-(const Var& a) { return unary(a, -a.value_, -1.0); }
  friend Var operator+(const Var& a, const Var& b) {
    return binary(a, b, a.value_ + b.value_, 1.0, 1.0);
  }
  friend Var operator-(const Var& a, const Var& b) {
    return binary(a, b, a.value_ - b.value_, 1.0, -1.0);
  }
  friend Var operator*(const Var& a, const Var& b) {
    return binary(a, b, a.value_ * b.value_, b.value_, a.value_);
  }
  friend Var operator/(const Var& a, const Var& b) {
    const double q = a.value_ / b.value_;
    return binary(a, b, q, 1.0 / b.value_, -q / b.value_);
  }

  friend Var sin(const Var& a) { return unary(a, std::sin(a.value_), std::cos(a.value_)); }
  friend Var cos(const Var& a) { return unary(a, std::cos(a.value_), -std::sin(a.value_)); }
  friend Var exp(const Var& a) {
    const double e = std::exp(a.value_);
    return unary(a, e, e);
  }
  friend Var log(const Var& a) { return unary(a, std::log(a.value_), 1.0 / a.value_); }
  friend Var sqrt(const Var& a) {
    const double r = std::sqrt(a.value_);
    return unary(a, r, 0.5 / r);
  }
  friend Var tanh(const Var& a) {
    const double t = std::tanh(a.value_);
    return unary(a, t, 1.0 - t * t);
  }

 private:
  static Var unary(const Var& a, double value, double da) {
    if (a.tape_ == nullptr) return Var(value);
    return Var(value, a.tape_, a.tape_->push(value, a.index_, da, -1, 0.0));
  }
  static Var binary(const Var& a, const Var& b, double value, double da, double db) {
    Tape* t = a.tape_ != nullptr ? a.tape_ : b.tape_;
    if (t == nullptr) return Var(value);
    if (a.tape_ != nullptr && b.tape_ != nullptr && a.tape_ != b.tape_) {
      throw std::logic_error("Var: operands recorded on different tapes");
    }
    return Var(value, t, t->push(value, a.index_, da, b.index_, db));
  }

  double value_ = 0.0;
  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
};

inline Var Tape::variable(double value) {
  return Var(value, this, push(value, -1, 0.0, -1, 0.0));
}

inline double primal(const Var& x) { return x.value(); }

/// Stop-gradient: the result is a tape-free constant with the same value.
inline Var freeze(const Var& x) { return Var(x.value()); }

}  // namespace nysngd

namespace Eigen {

template <>
struct NumTraits<nysngd::Var> : NumTraits<double> {
  using Real = nysngd::Var;
  using NonInteger = nysngd::Var;
  using Nested = nysngd::Var;
  using Literal = nysngd::Var;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 4,
    MulCost = 4
  };
};

}  // namespace Eigen
