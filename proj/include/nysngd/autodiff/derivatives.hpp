#pragma once

#include "nysngd/autodiff/dual.hpp"
#include "nysngd/autodiff/tape.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nysngd {

/// Raised when a sweep produces NaN/Inf. `index` is the offending output
/// entry (one per quadrature row for residual stacks), or -1 if unknown.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, Eigen::Index index)
      : std::runtime_error(what + " (entry " + std::to_string(index) + ")"), index_(index) {}
  Eigen::Index index() const { return index_; }

 private:
  Eigen::Index index_;
};

namespace detail {

inline void check_dims(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(got) + " vs " + std::to_string(want) + ")");
  }
}

}  // namespace detail

/// J f(theta) * v via dual lifting. `f` must accept and return
/// VectorX<Dual<double>> (a generic lambda is the usual choice).
template <typename F>
Eigen::VectorXd jvp(F&& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& v) {
  detail::check_dims(v.size(), theta.size(), "jvp");
  using D = Dual<double>;
  VectorX<D> th(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) th[i] = D(theta[i], v[i]);
  const VectorX<D> y = f(th);
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i].val) || !std::isfinite(y[i].tan)) {
      throw NonFiniteError("jvp: non-finite output", i);
    }
    out[i] = y[i].tan;
  }
  return out;
}

/// J f(theta)^T * w from one reverse sweep over a private tape. `f` must
/// accept and return VectorX<Var>.
template <typename F>
Eigen::VectorXd vjp(F&& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w) {
  Tape tape;
  VectorX<Var> th(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) th[i] = tape.variable(theta[i]);
  const VectorX<Var> y = f(th);
  detail::check_dims(w.size(), y.size(), "vjp");
  std::vector<std::pair<std::int32_t, double>> seeds;
  seeds.reserve(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i].value())) throw NonFiniteError("vjp: non-finite output", i);
    seeds.emplace_back(y[i].index(), w[i]);
  }
  const std::vector<double> adj = tape.reverse(seeds);
  Eigen::VectorXd out(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    out[i] = adj[static_cast<std::size_t>(th[i].index())];
    if (!std::isfinite(out[i])) throw NonFiniteError("vjp: non-finite cotangent", -1);
  }
  return out;
}

/// Gradient of a scalar map; `f` accepts VectorX<Var> and returns Var.
template <typename F>
Eigen::VectorXd grad(F&& f, const Eigen::VectorXd& theta) {
  auto wrapped = [&f](const VectorX<Var>& th) {
    VectorX<Var> y(1);
    y[0] = f(th);
    return y;
  };
  return vjp(wrapped, theta, Eigen::VectorXd::Ones(1));
}

}  // namespace nysngd
