#include "nysngd/problems/collocation.hpp"

#include "nysngd/autodiff/derivatives.hpp"

#include <cmath>
#include <stdexcept>

namespace nysngd {

namespace {

PointJet<double> jet_at(const NetworkTape& tape, Eigen::Index point) {
  PointJet<double> j(tape.input_dim());
  for (int c = 0; c < tape.components(); ++c) j.component(c) = tape.output(c, point);
  return j;
}

}  // namespace

Eigen::VectorXd MetricMap::apply(const Eigen::MatrixXd& jets) const {
  const Eigen::Index n = jets.cols() / coeff.rows();
  Eigen::VectorXd out(rows());
  for (Eigen::Index r = 0; r < rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < coeff.rows(); ++c) {
      const double k = coeff(c, r);
      if (k != 0.0) acc += k * jets(0, c * n + point[static_cast<std::size_t>(r)]);
    }
    out[r] = acc;
  }
  return out;
}

Eigen::MatrixXd MetricMap::adjoint(const Eigen::VectorXd& y, Eigen::Index n_points, int components) const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1, components * n_points);
  for (Eigen::Index r = 0; r < rows(); ++r) {
    for (Eigen::Index c = 0; c < coeff.rows(); ++c) {
      const double k = coeff(c, r);
      if (k != 0.0) g(0, c * n_points + point[static_cast<std::size_t>(r)]) += k * y[r];
    }
  }
  return g;
}

Collocation::Collocation(std::shared_ptr<const Problem> problem, MlpTopology topology, QuadratureSet quadrature)
    : problem_(std::move(problem)), topology_(std::move(topology)), quadrature_(std::move(quadrature)) {
  if (topology_.input_dim() != problem_->input_dim()) {
    throw std::invalid_argument("Collocation: network input dimension does not match the problem");
  }
  if (topology_.output_dim() != 1) throw std::invalid_argument("Collocation: shipped problems are scalar-valued");
  points_ = quadrature_.all_points();
  residual_weights_ = nysngd::residual_weights(quadrature_);
}

template <typename Fn>
void Collocation::for_each_point(Fn&& fn) const {
  Eigen::Index g = 0;
  for (const auto& block : quadrature_.blocks) {
    for (Eigen::Index j = 0; j < block.size(); ++j, ++g) fn(block, j, g);
  }
}

Eigen::VectorXd Collocation::residual_stack(const NetworkTape& tape) const {
  Eigen::VectorXd r(points_.cols());
  for_each_point([&](const QuadratureBlock& block, Eigen::Index j, Eigen::Index g) {
    r[g] = problem_->residual(block.kind, block.points.col(j), jet_at(tape, g));
    if (!std::isfinite(r[g])) throw NonFiniteError("residual_stack: non-finite residual", g);
  });
  return r;
}

double Collocation::loss(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd r = residual_stack(theta);
  return 0.5 * residual_weights_.dot(r.cwiseAbs2());
}

std::pair<double, Eigen::VectorXd> Collocation::loss_and_gradient(const Eigen::VectorXd& theta) const {
  const NetworkTape tape = record(theta);
  const Eigen::Index n = points_.cols();
  const int C = tape.components();
  Eigen::MatrixXd cot = Eigen::MatrixXd::Zero(1, C * n);
  double loss = 0.0;
  for_each_point([&](const QuadratureBlock& block, Eigen::Index j, Eigen::Index g) {
    const PointJet<double> u = jet_at(tape, g);
    const auto x = block.points.col(j);
    const double r = problem_->residual(block.kind, x, u);
    if (!std::isfinite(r)) throw NonFiniteError("loss_and_gradient: non-finite residual", g);
    const double wr = residual_weights_[g] * r;
    loss += 0.5 * wr * r;
    // local partials dr/d(jet component) by one dual pass per component
    PointJet<Dual<double>> ud(u.dim());
    for (int c = 0; c < C; ++c) ud.component(c) = Dual<double>(u.component(c), 0.0);
    for (int c = 0; c < C; ++c) {
      ud.component(c).tan = 1.0;
      const double dr = problem_->residual(block.kind, x, ud).tan;
      ud.component(c).tan = 0.0;
      if (dr != 0.0) cot(0, c * n + g) += wr * dr;
    }
  });
  return {loss, tape.vjp(cot)};
}

MetricMap Collocation::metric_map(const NetworkTape& tape) const {
  MetricMap map;
  const int C = tape.components();
  std::vector<double> coeffs;
  std::vector<double> weights;
  for_each_point([&](const QuadratureBlock& block, Eigen::Index j, Eigen::Index g) {
    const int k = problem_->metric_rows(block.kind);
    if (k == 0) return;
    const auto x = block.points.col(j);
    const PointJet<double> frozen = jet_at(tape, g);
    const double w = block.weights[j] * problem_->density(block.kind, x);
    for (int row = 0; row < k; ++row) {
      PointJet<double> basis(tape.input_dim());
      for (int c = 0; c < C; ++c) {
        basis.component(c) = 1.0;
        coeffs.push_back(problem_->metric(block.kind, row, x, basis, frozen));
        basis.component(c) = 0.0;
      }
      map.point.push_back(g);
      weights.push_back(w);
    }
  });
  map.coeff = Eigen::Map<Eigen::MatrixXd>(coeffs.data(), C, static_cast<Eigen::Index>(map.point.size()));
  map.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return map;
}

double h1_relative_error(const Problem& problem, const FieldEval& approximant, const QuadratureSet& eval) {
  const QuadratureBlock& block = eval.block(BlockKind::kInterior);
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index j = 0; j < block.size(); ++j) {
    const auto x = block.points.col(j);
    const PointJet<double> ex = problem.exact_jet(x);
    const auto [u, du] = approximant(x);
    const double w = block.weights[j];
    num += w * ((u - ex.value) * (u - ex.value) + (du - ex.gradient).squaredNorm());
    den += w * (ex.value * ex.value + ex.gradient.squaredNorm());
  }
  if (!(den > 0.0)) throw std::domain_error("h1_relative_error: exact solution has zero H1 norm");
  return std::sqrt(num / den);
}

double h1_relative_error(const Problem& problem, const MlpTopology& topology, const Eigen::VectorXd& theta,
                         const QuadratureSet& eval) {
  const QuadratureBlock& block = eval.block(BlockKind::kInterior);
  const NetworkTape tape(topology, theta, block.points);
  Eigen::Index at = 0;
  auto field = [&](PointRef) {
    const Eigen::Index g = at++;
    Eigen::VectorXd grad(tape.input_dim());
    for (int i = 0; i < tape.input_dim(); ++i) grad[i] = tape.output(1 + i, g);
    return std::pair<double, Eigen::VectorXd>(tape.output(0, g), grad);
  };
  return h1_relative_error(problem, field, eval);
}

}  // namespace nysngd
