#pragma once

#include "nysngd/autodiff/network_tape.hpp"
#include "nysngd/linalg/operator.hpp"
#include "nysngd/problems/collocation.hpp"

#include <Eigen/Core>

namespace nysngd {

/// G(theta) = J F^T diag(w phi) J F, F the metric stack frozen at theta.
/// Each product is one JVP and one VJP through the recorded network tape;
/// G itself is never formed.
class GramianOperator final : public LinearOperator<double> {
 public:
  GramianOperator(const Collocation& collocation, const Eigen::VectorXd& theta);

  Eigen::Index size() const override { return tape_.param_count(); }
  const NetworkTape& tape() const { return tape_; }
  const MetricMap& metric_map() const { return map_; }

 protected:
  void do_apply(const Vector& x, Vector& y) const override;

 private:
  NetworkTape tape_;
  MetricMap map_;
};

/// J F1^T diag(w) J F2 v for two metric stacks on the same rows and weights.
Eigen::VectorXd matvec_two_factor(const NetworkTape& tape, const MetricMap& first, const MetricMap& second,
                                  const Eigen::VectorXd& v);

/// Same Gramian through the scalar engine: vjp(F, theta, W jvp(F, theta, v))
/// with F built from `metric_stack` and the stop-gradient. Slow; used as an
/// independent route in tests.
class ReferenceGramian final : public LinearOperator<double> {
 public:
  ReferenceGramian(const Problem& problem, const MlpTopology& topology, const QuadratureSet& quadrature,
                   const Eigen::VectorXd& theta, bool stop_gradient = true);

  Eigen::Index size() const override { return theta_.size(); }

 protected:
  void do_apply(const Vector& x, Vector& y) const override;

 private:
  const Problem& problem_;
  MlpTopology topology_;
  const QuadratureSet& quadrature_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd weights_;
  bool stop_gradient_;
};

/// Dense Gramian, column i = G e_i (p products). Throws above p = 2000.
inline Eigen::MatrixXd assemble_dense(const GramianOperator& g) {
  return assemble_dense(static_cast<const LinearOperator<double>&>(g), 2000);
}

}  // namespace nysngd
