#pragma once

#include "nysngd/linalg/operator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace nysngd {

/// Unit roundoff used by the shift and the damping rules.
inline constexpr double kMachEps = 2.220446049250313e-16;

/// Low-rank PSD surrogate U diag(eigenvalues) U^T.
template <typename Scalar = double>
struct NystromFactor {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix U;            // p x l, orthonormal columns
  Vector eigenvalues;  // l, nonnegative, descending

  Eigen::Index rank() const { return eigenvalues.size(); }
  Eigen::Index dim() const { return U.rows(); }
  Matrix reconstruct() const { return U * eigenvalues.asDiagonal() * U.transpose(); }
  /// Best rank-k truncation (k <= rank()).
  Matrix reconstruct(Eigen::Index k) const {
    return U.leftCols(k) * eigenvalues.head(k).asDiagonal() * U.leftCols(k).transpose();
  }
};

class CholeskyFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Standard normal p x l test matrix, filled column by column.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = Scalar(normal(rng));
  }
  return m;
}

/// Randomized Nystrom approximation of a PSD operator with a Gaussian test
/// matrix and a stabilizing shift. Costs l products, issued as one block.
/// Throws CholeskyFailure when the shifted core matrix is not numerically
/// positive definite.
template <typename Scalar>
NystromFactor<Scalar> nystrom_approximate(const LinearOperator<Scalar>& g, Eigen::Index ell, std::uint64_t seed) {
  using Matrix = typename NystromFactor<Scalar>::Matrix;
  using Vector = typename NystromFactor<Scalar>::Vector;
  const Eigen::Index p = g.size();
  if (ell < 1 || ell > p) throw std::invalid_argument("nystrom_approximate: rank must satisfy 1 <= l <= p");

  const Matrix gauss = gaussian_matrix<Scalar>(p, ell, seed);
  const Matrix omega = Eigen::HouseholderQR<Matrix>(gauss).householderQ() * Matrix::Identity(p, ell);
  Matrix y = g.apply_block(omega);
  if (y.norm() == Scalar(0)) {
    // G annihilates the sketch: the approximation is exactly zero
    NystromFactor<Scalar> zero;
    zero.U = omega;
    zero.eigenvalues = Vector::Zero(ell);
    return zero;
  }
  const Scalar nu = Scalar(kMachEps) * y.norm();
  y += nu * omega;

  Matrix core = omega.transpose() * y;
  core = Scalar(0.5) * (core + core.transpose());
  const Eigen::LLT<Matrix> llt(core);
  if (llt.info() != Eigen::Success) throw CholeskyFailure("nystrom_approximate: Cholesky of the core matrix failed");
  const Matrix c = llt.matrixU();
  // B = Y_nu C^{-1}
  const Matrix b = c.template triangularView<Eigen::Upper>().template solve<Eigen::OnTheRight>(y);

  const Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU);
  NystromFactor<Scalar> out;
  out.U = svd.matrixU();
  const Vector sigma = svd.singularValues();
  out.eigenvalues = (sigma.array().square() - nu).cwiseMax(Scalar(0)).matrix();
  return out;
}

/// Seed for retry `attempt` of a sketch drawn with `seed`.
inline std::uint64_t retry_seed(std::uint64_t seed, int attempt) {
  return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt);
}

/// nystrom_approximate with up to `max_retries` fresh seeds after a Cholesky
/// failure; rethrows the last failure.
template <typename Scalar>
NystromFactor<Scalar> nystrom_approximate_retry(const LinearOperator<Scalar>& g, Eigen::Index ell,
                                                std::uint64_t seed, int max_retries = 3) {
  for (int attempt = 0;; ++attempt) {
    try {
      return nystrom_approximate(g, ell, retry_seed(seed, attempt));
    } catch (const CholeskyFailure&) {
      if (attempt >= max_retries) throw;
    }
  }
}

/// P^{-1} = (l_min + mu) U (L + mu I)^{-1} U^T + (I - U U^T), applied in O(p l).
template <typename Scalar = double>
class NystromPreconditioner final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::Vector;
  using typename LinearOperator<Scalar>::Matrix;

  NystromPreconditioner(NystromFactor<Scalar> factor, Scalar mu) : factor_(std::move(factor)), mu_(mu) {
    if (factor_.rank() < 1) throw std::invalid_argument("NystromPreconditioner: empty factor");
    const Scalar tail = factor_.eigenvalues[factor_.rank() - 1] + mu_;
    if (!(tail > Scalar(0))) throw std::invalid_argument("NystromPreconditioner: lambda_l + mu must be positive");
    scale_ = (tail / (factor_.eigenvalues.array() + mu_)).matrix();
  }

  Eigen::Index size() const override { return factor_.dim(); }
  const NystromFactor<Scalar>& factor() const { return factor_; }
  Scalar mu() const { return mu_; }

 protected:
  void do_apply(const Vector& x, Vector& y) const override {
    const Vector c = factor_.U.transpose() * x;
    y = x + factor_.U * (scale_.array() - Scalar(1)).matrix().cwiseProduct(c);
  }

 private:
  NystromFactor<Scalar> factor_;
  Scalar mu_;
  Vector scale_;
};

/// d_eff(mu) = sum_i lambda_i / (lambda_i + mu).
template <typename Derived>
double effective_dimension(const Eigen::MatrixBase<Derived>& eigenvalues, double mu) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double l = eigenvalues[i];
    acc += l / (l + mu);
  }
  return acc;
}

/// Sketch size 2 ceil(1.5 d_eff) + 1, capped at p.
inline Eigen::Index sketch_size_for(double d_eff, Eigen::Index p) {
  const auto l = static_cast<Eigen::Index>(2.0 * std::ceil(1.5 * d_eff) + 1.0);
  return std::clamp<Eigen::Index>(l, 1, p);
}

}  // namespace nysngd
