#include "nysngd/gramian/gramian.hpp"

#include "nysngd/autodiff/derivatives.hpp"

#include <stdexcept>

namespace nysngd {

GramianOperator::GramianOperator(const Collocation& collocation, const Eigen::VectorXd& theta)
    : tape_(collocation.record(theta)), map_(collocation.metric_map(tape_)) {}

void GramianOperator::do_apply(const Vector& x, Vector& y) const {
  y = matvec_two_factor(tape_, map_, map_, x);
}

Eigen::VectorXd matvec_two_factor(const NetworkTape& tape, const MetricMap& first, const MetricMap& second,
                                  const Eigen::VectorXd& v) {
  if (first.rows() != second.rows() || first.point != second.point) {
    throw std::invalid_argument("matvec_two_factor: metric stacks do not share rows");
  }
  const Eigen::VectorXd rows = second.apply(tape.jvp(v)).cwiseProduct(second.weights);
  return tape.vjp(first.adjoint(rows, tape.points(), tape.components()));
}

ReferenceGramian::ReferenceGramian(const Problem& problem, const MlpTopology& topology,
                                   const QuadratureSet& quadrature, const Eigen::VectorXd& theta,
                                   bool stop_gradient)
    : problem_(problem),
      topology_(topology),
      quadrature_(quadrature),
      theta_(theta),
      weights_(metric_weights(problem, quadrature)),
      stop_gradient_(stop_gradient) {}

void ReferenceGramian::do_apply(const Vector& x, Vector& y) const {
  auto stack = [this](const auto& th) { return metric_stack(problem_, topology_, th, th, quadrature_, stop_gradient_); };
  const Eigen::VectorXd jv = jvp(stack, theta_, x);
  y = vjp(stack, theta_, weights_.cwiseProduct(jv));
}

}  // namespace nysngd
