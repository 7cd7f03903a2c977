#include "nysngd/problems/problem.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nysngd {

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::kInterior: return "interior";
    case BlockKind::kBoundary: return "boundary";
    case BlockKind::kInitial: return "initial";
  }
  return "?";
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kLeastSquares: return "least-squares";
    case MetricKind::kEnergy: return "energy";
    case MetricKind::kNewton: return "newton";
    case MetricKind::kGaussNewton: return "gauss-newton";
  }
  return "?";
}

Eigen::Index QuadratureSet::total_points() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

bool QuadratureSet::has(BlockKind kind) const {
  for (const auto& b : blocks) {
    if (b.kind == kind) return true;
  }
  return false;
}

const QuadratureBlock& QuadratureSet::block(BlockKind kind) const {
  for (const auto& b : blocks) {
    if (b.kind == kind) return b;
  }
  throw std::out_of_range("QuadratureSet: no " + to_string(kind) + " block");
}

Eigen::MatrixXd QuadratureSet::all_points() const {
  const Eigen::Index d = blocks.empty() ? 0 : blocks.front().points.rows();
  Eigen::MatrixXd out(d, total_points());
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.size()) = b.points;
    at += b.size();
  }
  return out;
}

Eigen::VectorXd residual_weights(const QuadratureSet& q) {
  Eigen::VectorXd w(q.total_points());
  Eigen::Index at = 0;
  for (const auto& b : q.blocks) {
    w.segment(at, b.size()) = b.weights;
    at += b.size();
  }
  return w;
}

Eigen::VectorXd metric_weights(const Problem& problem, const QuadratureSet& q) {
  std::vector<double> w;
  for (const auto& b : q.blocks) {
    const int k = problem.metric_rows(b.kind);
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double wj = b.weights[j] * problem.density(b.kind, b.points.col(j));
      for (int row = 0; row < k; ++row) w.push_back(wj);
    }
  }
  return Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

namespace {

constexpr double kPi = std::numbers::pi;

void require_counts(const QuadratureCounts& c) {
  if (c.interior < 1 || c.boundary < 1) throw std::invalid_argument("sample_quadrature: counts must be >= 1");
}

QuadratureBlock uniform_box(BlockKind kind, int dim, Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  QuadratureBlock b{kind, Eigen::MatrixXd(dim, n), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int i = 0; i < dim; ++i) b.points(i, j) = unif(rng);
  }
  return b;
}

/// Uniform points on the perimeter of the unit square, weight 4/n.
QuadratureBlock square_perimeter(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 4.0);
  QuadratureBlock b{BlockKind::kBoundary, Eigen::MatrixXd(2, n), Eigen::VectorXd::Constant(n, 4.0 / static_cast<double>(n))};
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = unif(rng);
    const int edge = std::min(3, static_cast<int>(s));
    const double t = s - edge;
    switch (edge) {
      case 0: b.points.col(j) << t, 0.0; break;
      case 1: b.points.col(j) << 1.0, t; break;
      case 2: b.points.col(j) << 1.0 - t, 1.0; break;
      default: b.points.col(j) << 0.0, 1.0 - t; break;
    }
  }
  return b;
}

// -- Poisson, strong form: Delta u + f = 0 in (0,1)^d, u = g on the boundary.

template <int Dim>
class Poisson final : public ProblemBase<Poisson<Dim>> {
 public:
  std::string name() const override { return Dim == 1 ? "poisson1d" : "poisson2d"; }
  int input_dim() const override { return Dim; }
  MetricKind metric_kind() const override { return MetricKind::kLeastSquares; }

  QuadratureSet sample_quadrature(const QuadratureCounts& c, std::uint64_t seed) const override {
    require_counts(c);
    std::mt19937_64 rng(seed);
    QuadratureSet q;
    q.blocks.push_back(uniform_box(BlockKind::kInterior, Dim, c.interior, rng));
    if constexpr (Dim == 1) {
      // the boundary measure is two points; alternate so both are covered
      QuadratureBlock b{BlockKind::kBoundary, Eigen::MatrixXd(1, c.boundary),
                        Eigen::VectorXd::Constant(c.boundary, 2.0 / static_cast<double>(c.boundary))};
      for (Eigen::Index j = 0; j < c.boundary; ++j) b.points(0, j) = static_cast<double>(j % 2);
      q.blocks.push_back(std::move(b));
    } else {
      q.blocks.push_back(square_perimeter(c.boundary, rng));
    }
    return q;
  }

  PointJet<double> exact_jet(PointRef x) const override {
    PointJet<double> j(Dim);
    double prod = 1.0;
    for (int i = 0; i < Dim; ++i) prod *= std::sin(kPi * x[i]);
    j.value = prod;
    for (int i = 0; i < Dim; ++i) {
      double other = 1.0;
      for (int k = 0; k < Dim; ++k) {
        if (k != i) other *= std::sin(kPi * x[k]);
      }
      j.gradient[i] = kPi * std::cos(kPi * x[i]) * other;
      j.second[i] = -kPi * kPi * prod;
    }
    return j;
  }

  double source(PointRef x) const { return Dim * kPi * kPi * exact_jet(x).value; }

  template <typename S>
  S residual_impl(BlockKind k, PointRef x, const PointJet<S>& u) const {
    if (k == BlockKind::kInterior) return u.laplacian() + source(x);
    return u.value - this->exact_value(x);
  }

  int metric_rows(BlockKind) const override { return 1; }

  template <typename S>
  S metric_impl(BlockKind k, int, PointRef, const PointJet<S>& v, const PointJet<S>&) const {
    return k == BlockKind::kInterior ? v.laplacian() : v.value;
  }
};

// -- Heat in 1+1D, inputs (t, x): u_t - u_xx = f, lateral Dirichlet data and
// initial data. Exact u = cos(pi x) exp(-pi^2 t / 4).

class Heat1p1 final : public ProblemBase<Heat1p1> {
 public:
  std::string name() const override { return "heat1p1d"; }
  int input_dim() const override { return 2; }
  MetricKind metric_kind() const override { return MetricKind::kLeastSquares; }

  QuadratureSet sample_quadrature(const QuadratureCounts& c, std::uint64_t seed) const override {
    require_counts(c);
    const Eigen::Index n_init = c.initial > 0 ? c.initial : c.boundary;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    QuadratureSet q;
    q.blocks.push_back(uniform_box(BlockKind::kInterior, 2, c.interior, rng));
    QuadratureBlock lateral{BlockKind::kBoundary, Eigen::MatrixXd(2, c.boundary),
                            Eigen::VectorXd::Constant(c.boundary, 2.0 / static_cast<double>(c.boundary))};
    for (Eigen::Index j = 0; j < c.boundary; ++j) lateral.points.col(j) << unif(rng), static_cast<double>(j % 2);
    q.blocks.push_back(std::move(lateral));
    QuadratureBlock initial{BlockKind::kInitial, Eigen::MatrixXd(2, n_init),
                            Eigen::VectorXd::Constant(n_init, 1.0 / static_cast<double>(n_init))};
    for (Eigen::Index j = 0; j < n_init; ++j) initial.points.col(j) << 0.0, unif(rng);
    q.blocks.push_back(std::move(initial));
    return q;
  }

  PointJet<double> exact_jet(PointRef x) const override {
    const double decay = std::exp(-kPi * kPi * x[0] / 4.0);
    const double c = std::cos(kPi * x[1]);
    PointJet<double> j(2);
    j.value = c * decay;
    j.gradient << -kPi * kPi / 4.0 * c * decay, -kPi * std::sin(kPi * x[1]) * decay;
    j.second << std::pow(kPi * kPi / 4.0, 2) * c * decay, -kPi * kPi * c * decay;
    return j;
  }

  double source(PointRef x) const { return 0.75 * kPi * kPi * exact_value(x); }

  template <typename S>
  S residual_impl(BlockKind k, PointRef x, const PointJet<S>& u) const {
    if (k == BlockKind::kInterior) return u.gradient[0] - u.second[1] - source(x);
    return u.value - exact_value(x);
  }

  // interior: operator row and bulk L2 row; initial: L2 row; lateral: none
  int metric_rows(BlockKind k) const override {
    switch (k) {
      case BlockKind::kInterior: return 2;
      case BlockKind::kInitial: return 1;
      case BlockKind::kBoundary: return 0;
    }
    return 0;
  }

  template <typename S>
  S metric_impl(BlockKind k, int row, PointRef, const PointJet<S>& v, const PointJet<S>&) const {
    if (k == BlockKind::kInterior && row == 0) return v.gradient[0] - v.second[1];
    return v.value;
  }
};

// -- Nonlinear Poisson: -Delta u + u^3 = f in (0,1)^2, Gauss-Newton metric.

class NonlinearPoisson final : public ProblemBase<NonlinearPoisson> {
 public:
  std::string name() const override { return "nlpoisson2d"; }
  int input_dim() const override { return 2; }
  MetricKind metric_kind() const override { return MetricKind::kGaussNewton; }

  QuadratureSet sample_quadrature(const QuadratureCounts& c, std::uint64_t seed) const override {
    return linear_.sample_quadrature(c, seed);
  }

  PointJet<double> exact_jet(PointRef x) const override { return linear_.exact_jet(x); }

  double source(PointRef x) const {
    const double u = exact_value(x);
    return 2.0 * kPi * kPi * u + u * u * u;
  }

  template <typename S>
  S residual_impl(BlockKind k, PointRef x, const PointJet<S>& u) const {
    if (k == BlockKind::kInterior) return u.laplacian() - u.value * u.value * u.value + source(x);
    return u.value - exact_value(x);
  }

  int metric_rows(BlockKind) const override { return 1; }

  /// Linearization of the residual at the frozen jet.
  template <typename S>
  S metric_impl(BlockKind k, int, PointRef, const PointJet<S>& v, const PointJet<S>& frozen) const {
    if (k == BlockKind::kInterior) return v.laplacian() - 3.0 * frozen.value * frozen.value * v.value;
    return v.value;
  }

 private:
  Poisson<2> linear_;
};

}  // namespace

std::vector<std::string> problem_names() { return {"poisson1d", "poisson2d", "heat1p1d", "nlpoisson2d"}; }

std::shared_ptr<const Problem> make_problem(const std::string& name) {
  if (name == "poisson1d") return std::make_shared<Poisson<1>>();
  if (name == "poisson2d") return std::make_shared<Poisson<2>>();
  if (name == "heat1p1d") return std::make_shared<Heat1p1>();
  if (name == "nlpoisson2d") return std::make_shared<NonlinearPoisson>();
  throw std::invalid_argument("unknown problem '" + name + "'");
}

}  // namespace nysngd
