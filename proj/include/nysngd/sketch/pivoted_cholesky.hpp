#pragma once

#include "nysngd/linalg/operator.hpp"
#include "nysngd/sketch/nystrom.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nysngd {

enum class PivotRule { kGreedy, kUniform, kRandomlyPivoted };

inline PivotRule parse_pivot_rule(const std::string& name) {
  if (name == "greedy") return PivotRule::kGreedy;
  if (name == "uniform") return PivotRule::kUniform;
  if (name == "rp") return PivotRule::kRandomlyPivoted;
  throw std::invalid_argument("unknown pivot rule '" + name + "'");
}

/// G ~ F F^T with F = G[:, S] chol(G[S, S])^{-T}.
template <typename Scalar = double>
struct PivotedCholesky {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> F;  // p x k, k <= l
  std::vector<Eigen::Index> pivots;
};

/// Partial Cholesky with up to `ell` pivots. Reads the diagonal with p
/// products (guarded at p = 2000) and one product per pivot. Stops early
/// once the residual diagonal is exhausted (max <= tol * initial max).
/// Uniform pivots are drawn among indices with positive residual diagonal.
template <typename Scalar>
PivotedCholesky<Scalar> pivoted_cholesky(const LinearOperator<Scalar>& g, Eigen::Index ell, PivotRule rule,
                                         std::uint64_t seed, double tol = 1e-13) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index p = g.size();
  if (p > 2000) throw std::length_error("pivoted_cholesky: diagonal access exceeds the dense guard");
  if (ell < 1 || ell > p) throw std::invalid_argument("pivoted_cholesky: rank must satisfy 1 <= l <= p");

  Vector diag(p);
  {
    Vector e = Vector::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      e[i] = Scalar(1);
      diag[i] = g.apply(e)[i];
      e[i] = Scalar(0);
    }
  }
  const double scale = diag.cwiseAbs().maxCoeff();
  if (diag.minCoeff() < -1e-12 * scale) throw std::domain_error("pivoted_cholesky: operator has a negative diagonal");

  std::mt19937_64 rng(seed);
  PivotedCholesky<Scalar> out;
  out.F.setZero(p, ell);
  Vector res = diag.cwiseMax(Scalar(0));
  Eigen::Index k = 0;
  for (; k < ell; ++k) {
    const double top = res.maxCoeff();
    if (!(top > tol * scale)) break;
    Eigen::Index s = 0;
    switch (rule) {
      case PivotRule::kGreedy:
        res.maxCoeff(&s);
        break;
      case PivotRule::kRandomlyPivoted: {
        std::discrete_distribution<Eigen::Index> pick(res.data(), res.data() + p);
        s = pick(rng);
        break;
      }
      case PivotRule::kUniform: {
        std::vector<Eigen::Index> live;
        for (Eigen::Index i = 0; i < p; ++i) {
          if (res[i] > tol * scale) live.push_back(i);
        }
        std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
        s = live[pick(rng)];
        break;
      }
    }
    Vector e = Vector::Zero(p);
    e[s] = Scalar(1);
    Vector col = g.apply(e) - out.F.leftCols(k) * out.F.row(s).head(k).transpose();
    const Scalar pivot = col[s];
    if (!(pivot > Scalar(0))) break;
    col /= std::sqrt(pivot);
    out.F.col(k) = col;
    out.pivots.push_back(s);
    res -= col.cwiseAbs2();
    res[s] = Scalar(0);
    if (res.minCoeff() < -1e-8 * scale) {
      throw std::domain_error("pivoted_cholesky: residual diagonal became negative");
    }
    res = res.cwiseMax(Scalar(0));
  }
  out.F.conservativeResize(p, k);
  return out;
}

/// Eigen-form of F F^T, for use with NystromPreconditioner.
template <typename Scalar>
NystromFactor<Scalar> to_nystrom_factor(const PivotedCholesky<Scalar>& pc) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::BDCSVD<Matrix> svd(pc.F, Eigen::ComputeThinU);
  NystromFactor<Scalar> out;
  out.U = svd.matrixU();
  out.eigenvalues = svd.singularValues().array().square().matrix();
  return out;
}

}  // namespace nysngd
