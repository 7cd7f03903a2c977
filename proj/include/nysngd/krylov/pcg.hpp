#pragma once

#include "nysngd/linalg/operator.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nysngd {

struct PcgOptions {
  double rel_tol = 1e-10;
  /// Cap on operator applications inside the iteration (one per step plus
  /// any residual recomputation); the final check adds at most one more.
  int maxit = 100;
  /// Recompute r = b - A x every this many iterations.
  int replace_every = 50;
};

struct SolveReport {
  Eigen::VectorXd x;
  int iterations = 0;
  /// True relative residual |b - A x| / |b| of the returned x.
  double relative_residual = 0.0;
  std::int64_t matvecs = 0;
  std::int64_t precond_applications = 0;
  bool converged = false;
  bool breakdown = false;
  /// Recursive relative residual after each iteration.
  std::vector<double> history;
};

/// Preconditioned conjugate gradients from x0 = 0 on an SPD operator. With
/// no preconditioner this is plain CG. Convergence is judged on the
/// unpreconditioned residual and confirmed by a true residual, so
/// matvecs = iterations + number of true-residual evaluations (normally
/// iterations + 1) and never exceeds maxit + 1.
inline SolveReport pcg(const LinearOperator<double>& a, const Eigen::VectorXd& b, const PcgOptions& opt = {},
                       const LinearOperator<double>* precond = nullptr) {
  if (b.size() != a.size()) throw std::invalid_argument("pcg: dimension mismatch");
  if (!(opt.rel_tol > 0.0 && opt.rel_tol < 1.0)) throw std::invalid_argument("pcg: rel_tol must lie in (0, 1)");
  if (opt.maxit < 1) throw std::invalid_argument("pcg: maxit must be >= 1");

  SolveReport rep;
  rep.x = Eigen::VectorXd::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    rep.converged = true;
    return rep;
  }
  auto apply_m = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    if (precond == nullptr) return r;
    ++rep.precond_applications;
    return precond->apply(r);
  };
  auto true_residual = [&]() -> Eigen::VectorXd {
    ++rep.matvecs;
    return b - a.apply(rep.x);
  };

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = apply_m(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  bool fresh = false;  // r is a true residual of the current x

  for (int k = 1; rep.matvecs < opt.maxit; ++k) {
    ++rep.matvecs;
    const Eigen::VectorXd q = a.apply(p);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      rep.breakdown = true;
      break;
    }
    const double alpha = rz / pq;
    rep.x += alpha * p;
    r -= alpha * q;
    rep.iterations = k;
    fresh = false;
    if (opt.replace_every > 0 && k % opt.replace_every == 0) {
      r = true_residual();
      fresh = true;
    }
    rep.history.push_back(r.norm() / bnorm);
    if (rep.history.back() <= opt.rel_tol) {
      if (!fresh) {
        r = true_residual();
        fresh = true;
      }
      if (r.norm() <= opt.rel_tol * bnorm) {
        rep.converged = true;
        break;
      }
    }
    z = apply_m(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  if (!fresh) r = true_residual();
  rep.relative_residual = r.norm() / bnorm;
  return rep;
}

}  // namespace nysngd
