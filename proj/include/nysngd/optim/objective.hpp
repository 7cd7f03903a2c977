#pragma once

#include "nysngd/gramian/gramian.hpp"
#include "nysngd/linalg/operator.hpp"
#include "nysngd/problems/collocation.hpp"

#include <Eigen/Core>

#include <limits>
#include <memory>
#include <utility>

namespace nysngd {

/// What an outer optimizer needs: loss, gradient, a Gramian frozen at the
/// current parameters and, optionally, an error against a reference.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double loss(const Eigen::VectorXd& theta) const = 0;
  virtual std::pair<double, Eigen::VectorXd> loss_and_gradient(const Eigen::VectorXd& theta) const = 0;
  virtual std::unique_ptr<LinearOperator<double>> gramian(const Eigen::VectorXd& theta) const = 0;
  /// NaN when no reference is available.
  virtual double error(const Eigen::VectorXd& /*theta*/) const { return std::numeric_limits<double>::quiet_NaN(); }
};

/// A PDE problem on a network with fixed training quadrature; the error is
/// the relative H1 error on a separate evaluation quadrature.
class PinnObjective final : public Objective {
 public:
  PinnObjective(Collocation collocation, QuadratureSet eval)
      : col_(std::move(collocation)), eval_(std::move(eval)) {}

  const Collocation& collocation() const { return col_; }
  Eigen::Index dim() const override { return col_.param_count(); }
  double loss(const Eigen::VectorXd& theta) const override { return col_.loss(theta); }
  std::pair<double, Eigen::VectorXd> loss_and_gradient(const Eigen::VectorXd& theta) const override {
    return col_.loss_and_gradient(theta);
  }
  std::unique_ptr<LinearOperator<double>> gramian(const Eigen::VectorXd& theta) const override {
    return std::make_unique<GramianOperator>(col_, theta);
  }
  double error(const Eigen::VectorXd& theta) const override {
    return h1_relative_error(col_.problem(), col_.topology(), theta, eval_);
  }

 private:
  Collocation col_;
  QuadratureSet eval_;
};

/// 1/2 sum_r w_r (A theta - b)_r^2 with Gramian A^T W A (exact Gauss-Newton,
/// so one natural-gradient step solves the problem). The error is the
/// distance to the weighted least-squares solution.
class LinearLeastSquares final : public Objective {
 public:
  LinearLeastSquares(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd w);

  Eigen::Index dim() const override { return a_.cols(); }
  double loss(const Eigen::VectorXd& theta) const override;
  std::pair<double, Eigen::VectorXd> loss_and_gradient(const Eigen::VectorXd& theta) const override;
  std::unique_ptr<LinearOperator<double>> gramian(const Eigen::VectorXd& theta) const override;
  double error(const Eigen::VectorXd& theta) const override { return (theta - solution_).norm(); }

  const Eigen::VectorXd& solution() const { return solution_; }
  double optimal_loss() const { return loss(solution_); }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd w_;
  Eigen::VectorXd solution_;
};

}  // namespace nysngd
