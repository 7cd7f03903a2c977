#pragma once

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>

namespace nysngd {

/// Square linear map accessed only through products. Every product is
/// counted (one per column for block products).
template <typename Scalar>
class LinearOperator {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  virtual ~LinearOperator() = default;

  virtual Eigen::Index size() const = 0;

  Vector apply(const Vector& x) const {
    if (x.size() != size()) throw std::invalid_argument("LinearOperator: dimension mismatch");
    Vector y(size());
    matvecs_.fetch_add(1, std::memory_order_relaxed);
    do_apply(x, y);
    return y;
  }

  /// Y = A X, issued as one request so implementations can batch.
  Matrix apply_block(const Matrix& x) const {
    if (x.rows() != size()) throw std::invalid_argument("LinearOperator: dimension mismatch");
    Matrix y(size(), x.cols());
    matvecs_.fetch_add(static_cast<std::int64_t>(x.cols()), std::memory_order_relaxed);
    do_apply_block(x, y);
    return y;
  }

  std::int64_t matvecs() const { return matvecs_.load(std::memory_order_relaxed); }

 protected:
  virtual void do_apply(const Vector& x, Vector& y) const = 0;
  virtual void do_apply_block(const Matrix& x, Matrix& y) const {
    Vector col(size());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      do_apply(x.col(j), col);
      y.col(j) = col;
    }
  }

 private:
  mutable std::atomic<std::int64_t> matvecs_{0};
};

template <typename Scalar>
class DenseOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::Vector;
  using typename LinearOperator<Scalar>::Matrix;

  explicit DenseOperator(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols()) throw std::invalid_argument("DenseOperator: matrix must be square");
  }
  Eigen::Index size() const override { return a_.rows(); }
  const Matrix& matrix() const { return a_; }

 protected:
  void do_apply(const Vector& x, Vector& y) const override { y.noalias() = a_ * x; }
  void do_apply_block(const Matrix& x, Matrix& y) const override { y.noalias() = a_ * x; }

 private:
  Matrix a_;
};

/// A + shift * I over a borrowed operator.
template <typename Scalar>
class ShiftedOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::Vector;
  using typename LinearOperator<Scalar>::Matrix;

  ShiftedOperator(const LinearOperator<Scalar>& base, Scalar shift) : base_(base), shift_(shift) {}
  Eigen::Index size() const override { return base_.size(); }
  Scalar shift() const { return shift_; }

 protected:
  void do_apply(const Vector& x, Vector& y) const override { y = base_.apply(x) + shift_ * x; }
  void do_apply_block(const Matrix& x, Matrix& y) const override { y = base_.apply_block(x) + shift_ * x; }

 private:
  const LinearOperator<Scalar>& base_;
  Scalar shift_;
};

template <typename Scalar>
class FunctionOperator final : public LinearOperator<Scalar> {
 public:
  using typename LinearOperator<Scalar>::Vector;
  using Fn = std::function<Vector(const Vector&)>;

  FunctionOperator(Eigen::Index n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  Eigen::Index size() const override { return n_; }

 protected:
  void do_apply(const Vector& x, Vector& y) const override { y = fn_(x); }

 private:
  Eigen::Index n_;
  Fn fn_;
};

/// Column i = A e_i. Guarded because it costs n products.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> assemble_dense(const LinearOperator<Scalar>& op,
                                                                     Eigen::Index guard = 2000) {
  const Eigen::Index n = op.size();
  if (n > guard) throw std::length_error("assemble_dense: dimension exceeds dense-assembly guard");
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  return op.apply_block(Matrix::Identity(n, n));
}

}  // namespace nysngd
