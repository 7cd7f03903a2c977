#pragma once

#include "nysngd/autodiff/dual.hpp"
#include "nysngd/autodiff/jet.hpp"
#include "nysngd/autodiff/tape.hpp"
#include "nysngd/model/mlp.hpp"
#include "nysngd/problems/quadrature.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace nysngd {

enum class MetricKind { kLeastSquares, kEnergy, kNewton, kGaussNewton };

std::string to_string(MetricKind kind);

using PointRef = Eigen::Ref<const Eigen::VectorXd>;

/// A PDE instance: sampling geometry, pointwise residual law per region,
/// pointwise metric functionals per region and the analytic solution.
///
/// Every region contributes one residual row per point to the loss
/// 1/2 sum_r w_r r_r^2. The metric on a region is a list of functionals
/// F_u v(x), linear in the jet of v and evaluated with the linearization jet
/// `frozen`; they make up the rows of the metric stack.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual int input_dim() const = 0;
  virtual MetricKind metric_kind() const = 0;

  virtual QuadratureSet sample_quadrature(const QuadratureCounts& counts, std::uint64_t seed) const = 0;

  virtual double residual(BlockKind kind, PointRef x, const PointJet<double>& u) const = 0;
  virtual Dual<double> residual(BlockKind kind, PointRef x, const PointJet<Dual<double>>& u) const = 0;
  virtual Var residual(BlockKind kind, PointRef x, const PointJet<Var>& u) const = 0;

  virtual int metric_rows(BlockKind kind) const = 0;
  virtual double metric(BlockKind kind, int row, PointRef x, const PointJet<double>& v,
                        const PointJet<double>& frozen) const = 0;
  virtual Dual<double> metric(BlockKind kind, int row, PointRef x, const PointJet<Dual<double>>& v,
                              const PointJet<Dual<double>>& frozen) const = 0;
  virtual Var metric(BlockKind kind, int row, PointRef x, const PointJet<Var>& v,
                     const PointJet<Var>& frozen) const = 0;

  /// Metric density phi_u(x); 1 for every shipped problem.
  virtual double density(BlockKind /*kind*/, PointRef /*x*/) const { return 1.0; }

  virtual PointJet<double> exact_jet(PointRef x) const = 0;
  double exact_value(PointRef x) const { return exact_jet(x).value; }
};

/// Routes the scalar-typed virtuals to the templates `residual_impl<S>` and
/// `metric_impl<S>` of Derived.
template <typename Derived>
class ProblemBase : public Problem {
 public:
  double residual(BlockKind k, PointRef x, const PointJet<double>& u) const override {
    return self().template residual_impl<double>(k, x, u);
  }
  Dual<double> residual(BlockKind k, PointRef x, const PointJet<Dual<double>>& u) const override {
    return self().template residual_impl<Dual<double>>(k, x, u);
  }
  Var residual(BlockKind k, PointRef x, const PointJet<Var>& u) const override {
    return self().template residual_impl<Var>(k, x, u);
  }
  double metric(BlockKind k, int row, PointRef x, const PointJet<double>& v,
                const PointJet<double>& frozen) const override {
    return self().template metric_impl<double>(k, row, x, v, frozen);
  }
  Dual<double> metric(BlockKind k, int row, PointRef x, const PointJet<Dual<double>>& v,
                      const PointJet<Dual<double>>& frozen) const override {
    return self().template metric_impl<Dual<double>>(k, row, x, v, frozen);
  }
  Var metric(BlockKind k, int row, PointRef x, const PointJet<Var>& v, const PointJet<Var>& frozen) const override {
    return self().template metric_impl<Var>(k, row, x, v, frozen);
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Builds a shipped problem: poisson1d, poisson2d, heat1p1d, nlpoisson2d.
std::shared_ptr<const Problem> make_problem(const std::string& name);
std::vector<std::string> problem_names();

/// Weights w_r of the residual rows (block order, one row per point).
Eigen::VectorXd residual_weights(const QuadratureSet& q);

/// Weights w_r * phi(x_r) of the metric rows (block order, point-major).
Eigen::VectorXd metric_weights(const Problem& problem, const QuadratureSet& q);

/// Residual stack evaluated through the scalar engine (any of double,
/// Dual<double>, Var). One row per quadrature point.
template <typename S>
VectorX<S> residual_stack(const Problem& problem, const MlpTopology& topo, const VectorX<S>& theta,
                          const QuadratureSet& q) {
  VectorX<S> out(q.total_points());
  Eigen::Index r = 0;
  for (const auto& block : q.blocks) {
    for (Eigen::Index j = 0; j < block.size(); ++j) {
      const PointJet<S> u = network_jet<S>(topo, theta, block.points.col(j));
      out[r++] = problem.residual(block.kind, block.points.col(j), u);
    }
  }
  return out;
}

/// Metric stack [F_{u_sg(theta_bar)} u_theta(x_r)]_r through the scalar
/// engine. With `stop_gradient` false the linearization jet is left
/// differentiable (used as a negative control only).
template <typename S>
VectorX<S> metric_stack(const Problem& problem, const MlpTopology& topo, const VectorX<S>& theta,
                        const VectorX<S>& theta_bar, const QuadratureSet& q, bool stop_gradient = true) {
  Eigen::Index rows = 0;
  for (const auto& block : q.blocks) rows += block.size() * problem.metric_rows(block.kind);
  VectorX<S> out(rows);
  Eigen::Index r = 0;
  for (const auto& block : q.blocks) {
    const int k = problem.metric_rows(block.kind);
    if (k == 0) continue;
    for (Eigen::Index j = 0; j < block.size(); ++j) {
      const PointJet<S> v = network_jet<S>(topo, theta, block.points.col(j));
      const PointJet<S> bar = network_jet<S>(topo, theta_bar, block.points.col(j));
      const PointJet<S> lin = stop_gradient ? freeze(bar) : bar;
      for (int row = 0; row < k; ++row) out[r++] = problem.metric(block.kind, row, block.points.col(j), v, lin);
    }
  }
  return out;
}

/// Loss 1/2 sum_r w_r r_r^2 through the scalar engine.
template <typename S>
S loss_generic(const Problem& problem, const MlpTopology& topo, const VectorX<S>& theta, const QuadratureSet& q) {
  const VectorX<S> r = residual_stack(problem, topo, theta, q);
  const Eigen::VectorXd w = residual_weights(q);
  S acc(0.0);
  for (Eigen::Index i = 0; i < r.size(); ++i) acc = acc + (0.5 * w[i]) * (r[i] * r[i]);
  return acc;
}

}  // namespace nysngd
