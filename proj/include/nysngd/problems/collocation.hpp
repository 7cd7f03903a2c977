#pragma once

#include "nysngd/autodiff/network_tape.hpp"
#include "nysngd/problems/problem.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace nysngd {

/// Linear map from output jets of a NetworkTape to metric rows, frozen at
/// the tape's parameters: row r reads point(r) and sums coeff(c, r) times
/// jet component c.
struct MetricMap {
  Eigen::MatrixXd coeff;             // components x rows
  std::vector<Eigen::Index> point;   // global point index of each row
  Eigen::VectorXd weights;           // w_r * phi(x_r)

  Eigen::Index rows() const { return static_cast<Eigen::Index>(point.size()); }
  /// Metric rows for tangent jets `jets` (shape of NetworkTape::output()).
  Eigen::VectorXd apply(const Eigen::MatrixXd& jets) const;
  /// Adjoint: jet cotangent for row cotangent y.
  Eigen::MatrixXd adjoint(const Eigen::VectorXd& y, Eigen::Index n_points, int components) const;
};

/// A problem discretized by a network and a fixed quadrature, evaluated
/// through the batched network tape.
class Collocation {
 public:
  Collocation(std::shared_ptr<const Problem> problem, MlpTopology topology, QuadratureSet quadrature);

  const Problem& problem() const { return *problem_; }
  std::shared_ptr<const Problem> problem_ptr() const { return problem_; }
  const MlpTopology& topology() const { return topology_; }
  const QuadratureSet& quadrature() const { return quadrature_; }
  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::Index param_count() const { return topology_.param_count(); }

  NetworkTape record(const Eigen::VectorXd& theta) const { return {topology_, theta, points_}; }

  Eigen::VectorXd residual_stack(const NetworkTape& tape) const;
  Eigen::VectorXd residual_stack(const Eigen::VectorXd& theta) const { return residual_stack(record(theta)); }
  const Eigen::VectorXd& residual_weights() const { return residual_weights_; }

  double loss(const Eigen::VectorXd& theta) const;
  /// Loss and its gradient J_R^T W R (one reverse sweep).
  std::pair<double, Eigen::VectorXd> loss_and_gradient(const Eigen::VectorXd& theta) const;

  MetricMap metric_map(const NetworkTape& tape) const;

 private:
  template <typename Fn>
  void for_each_point(Fn&& fn) const;

  std::shared_ptr<const Problem> problem_;
  MlpTopology topology_;
  QuadratureSet quadrature_;
  Eigen::MatrixXd points_;
  Eigen::VectorXd residual_weights_;
};

/// Value and gradient of an approximant at a point.
using FieldEval = std::function<std::pair<double, Eigen::VectorXd>(PointRef)>;

/// (|u - u*|_{L2}^2 + |grad u - grad u*|_{L2}^2)^{1/2} / |u*|_{H1} on the
/// interior block of `eval`. Throws if the exact solution has zero norm.
double h1_relative_error(const Problem& problem, const FieldEval& approximant, const QuadratureSet& eval);

/// Same, for a network; evaluated through the batched tape.
double h1_relative_error(const Problem& problem, const MlpTopology& topology, const Eigen::VectorXd& theta,
                         const QuadratureSet& eval);

}  // namespace nysngd
