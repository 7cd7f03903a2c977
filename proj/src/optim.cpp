#include "nysngd/optim/optimizers.hpp"

#include "nysngd/autodiff/derivatives.hpp"
#include "nysngd/linalg/seed.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nysngd {

FloorMode parse_floor_mode(const std::string& name) {
  if (name == "none") return FloorMode::kNone;
  if (name == "loss-power") return FloorMode::kLossPower;
  if (name == "grad-power") return FloorMode::kGradPower;
  if (name == "constant") return FloorMode::kConstant;
  throw std::invalid_argument("unknown mu floor mode '" + name + "'");
}

std::string to_string(FloorMode mode) {
  switch (mode) {
    case FloorMode::kNone: return "none";
    case FloorMode::kLossPower: return "loss-power";
    case FloorMode::kGradPower: return "grad-power";
    case FloorMode::kConstant: return "constant";
  }
  return "?";
}

double MuFloor::value(double loss, double grad_norm) const {
  switch (mode) {
    case FloorMode::kNone: return 0.0;
    case FloorMode::kLossPower: return c * std::pow(loss, alpha);
    case FloorMode::kGradPower: return c * std::pow(grad_norm, alpha);
    case FloorMode::kConstant: return c;
  }
  return 0.0;
}

Eigen::Index NystromNgdConfig::resolved_ell_max(Eigen::Index p) const {
  if (ell_max > 0) return std::min(ell_max, p);
  return std::max<Eigen::Index>(1, std::min<Eigen::Index>(500, p / 2));
}

double NystromNgdConfig::resolved_gamma(Eigen::Index p) const {
  return gamma_times_p ? gamma * static_cast<double>(p) : gamma;
}

void NystromNgdConfig::validate() const {
  if (ell0 < 1) throw std::invalid_argument("config: ell0 must be >= 1");
  if (ell_max != 0 && ell_max < ell0) throw std::invalid_argument("config: ell_max must be >= ell0");
  if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("config: kappa must lie in (0, 1)");
  if (maxit < 1) throw std::invalid_argument("config: maxit must be >= 1");
  if (iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
  if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0)) {
    throw std::invalid_argument("config: line-search shrink must lie in (0, 1)");
  }
}

double adapt_mu(double lambda1, double gamma, double loss, double grad_norm, const MuFloor& floor) {
  return std::max(gamma * kMachEps * lambda1, floor.value(loss, grad_norm));
}

Eigen::Index adapt_rank(const Eigen::VectorXd& eigenvalues, double mu, Eigen::Index ell, Eigen::Index ell_max,
                        double ratio, Eigen::Index offset) {
  const Eigen::Index n = eigenvalues.size();
  if (n == 0) return std::min(ell, ell_max);
  if (eigenvalues[n - 1] > ratio * mu) return std::min(2 * ell, ell_max);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (eigenvalues[i] < ratio * mu) return std::clamp<Eigen::Index>(i + 1 + offset, 1, ell_max);
  }
  return std::min(ell, ell_max);
}

LineSearchResult backtracking_linesearch(const std::function<double(const Eigen::VectorXd&)>& loss,
                                         const Eigen::VectorXd& theta, double loss0, const Eigen::VectorXd& grad,
                                         const Eigen::VectorXd& d, const LineSearchParams& params) {
  LineSearchResult res;
  res.loss = loss0;
  const double slope = grad.dot(d);
  if (!(slope > 0.0)) return res;
  double alpha = params.alpha0;
  for (int k = 0; k <= params.max_backtracks; ++k, alpha *= params.shrink) {
    double trial = std::numeric_limits<double>::infinity();
    try {
      trial = loss(theta - alpha * d);
    } catch (const NonFiniteError&) {
    }
    ++res.evaluations;
    if (std::isfinite(trial) && trial <= loss0 - params.c1 * alpha * slope) {
      res.alpha = alpha;
      res.loss = trial;
      res.success = true;
      return res;
    }
  }
  return res;
}

Eigen::VectorXd ngd_dense_direction(const Eigen::MatrixXd& g, const Eigen::VectorXd& grad, double mu) {
  const Eigen::Index p = g.rows();
  const Eigen::MatrixXd m = g + mu * Eigen::MatrixXd::Identity(p, p);
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double cutoff = static_cast<double>(p) * kMachEps * (sigma.size() > 0 ? sigma[0] : 0.0);
  Eigen::VectorXd c = svd.matrixU().transpose() * grad;
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = sigma[i] > cutoff ? c[i] / sigma[i] : 0.0;
  return svd.matrixV() * c;
}

SolveReport ngd_cg_direction(const LinearOperator<double>& g, const Eigen::VectorXd& grad, double mu, double kappa,
                             int maxit) {
  const ShiftedOperator<double> shifted(g, mu);
  PcgOptions opt;
  opt.rel_tol = std::min(kappa, grad.norm());
  opt.maxit = maxit;
  return pcg(shifted, grad, opt);
}

NystromDirection nystrom_ngd_direction(const LinearOperator<double>& g, const Eigen::VectorXd& grad, double loss,
                                       Eigen::Index ell, const NystromNgdConfig& config, std::uint64_t sketch_seed,
                                       double mu_boost, double rel_tol) {
  NystromDirection out;
  const std::int64_t before = g.matvecs();
  out.factor = nystrom_approximate_retry(g, ell, sketch_seed);
  out.sketch_matvecs = g.matvecs() - before;
  const double gnorm = grad.norm();
  out.mu = mu_boost * adapt_mu(out.factor.eigenvalues[0], config.resolved_gamma(g.size()), loss, gnorm, config.floor);
  if (!(out.mu > 0.0)) throw std::domain_error("nystrom_ngd: damping vanished (zero Gramian and zero floor)");
  const NystromPreconditioner<double> precond(out.factor, out.mu);
  const ShiftedOperator<double> shifted(g, out.mu);
  PcgOptions opt;
  opt.rel_tol = rel_tol > 0.0 ? rel_tol : std::min(config.kappa, gnorm);
  opt.maxit = config.maxit;
  out.solve = pcg(shifted, grad, opt, &precond);
  return out;
}

Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& h, const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  const double sy = s.dot(y);
  if (!(sy > 0.0)) return h;
  const double rho = 1.0 / sy;
  const Eigen::VectorXd hy = h * y;
  Eigen::MatrixXd out = h;
  out.noalias() += (rho + rho * rho * y.dot(hy)) * s * s.transpose();
  out.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Direction {
  Eigen::VectorXd d;
  double mu = 0.0;
  Eigen::Index ell = 0;
  int pcg_iters = 0;
  std::int64_t matvecs = 0;
};

/// Shared outer loop: direction, Armijo step along -d, trace. `next` is
/// called with (theta, loss, grad, iteration, mu_boost). `accepted` is told
/// about every step (s, y = change in gradient) or a rejection (empty s).
template <typename Next, typename Accepted>
RunResult outer_loop(const Objective& obj, const Eigen::VectorXd& theta0, const NystromNgdConfig& cfg,
                     Eigen::Index ell_report, Next&& next, Accepted&& accepted) {
  cfg.validate();
  if (theta0.size() != obj.dim()) throw std::invalid_argument("optimizer: initial parameters have the wrong size");
  const auto t0 = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };
  auto loss_fn = [&obj](const Eigen::VectorXd& th) { return obj.loss(th); };

  RunResult run;
  run.theta = theta0;
  auto [loss, grad] = obj.loss_and_gradient(run.theta);
  if (!std::isfinite(loss)) throw NonFiniteError("optimizer: non-finite initial loss", -1);
  run.records.push_back({0, loss, obj.error(run.theta), 0.0, ell_report, 0, 0, seconds()});

  std::int64_t matvecs = 0;
  double boost = 1.0;
  for (int k = 1; k <= cfg.iterations; ++k) {
    if (cfg.matvec_budget > 0 && matvecs >= cfg.matvec_budget) break;
    Direction dir;
    try {
      dir = next(run.theta, loss, grad, k, boost);
    } catch (const std::exception& e) {
      run.aborted = true;
      run.abort_reason = e.what();
      break;
    }
    matvecs += dir.matvecs;
    const LineSearchResult ls = backtracking_linesearch(loss_fn, run.theta, loss, grad, dir.d, cfg.line_search);
    if (ls.success) {
      const Eigen::VectorXd step = -ls.alpha * dir.d;
      run.theta += step;
      const Eigen::VectorXd old_grad = grad;
      std::tie(loss, grad) = obj.loss_and_gradient(run.theta);
      accepted(step, grad - old_grad);
      boost = 1.0;
    } else {
      accepted(Eigen::VectorXd(), Eigen::VectorXd());
      boost *= 10.0;
    }
    if (!std::isfinite(loss)) {
      run.aborted = true;
      run.abort_reason = "non-finite loss";
      break;
    }
    run.records.push_back({k, loss, obj.error(run.theta), dir.mu, dir.ell, dir.pcg_iters, matvecs, seconds()});
  }
  return run;
}

constexpr auto kNoUpdate = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {};

double ngd_mu(double loss) { return std::min(1e-5, loss); }

}  // namespace

RunResult nystrom_ngd_run(const Objective& objective, const Eigen::VectorXd& theta0, const NystromNgdConfig& config) {
  const Eigen::Index p = objective.dim();
  const Eigen::Index ell_max = config.resolved_ell_max(p);
  Eigen::Index ell = std::min(config.ell0, ell_max);
  auto next = [&](const Eigen::VectorXd& theta, double loss, const Eigen::VectorXd& grad, int k, double boost) {
    const auto g = objective.gramian(theta);
    const NystromDirection nd = nystrom_ngd_direction(*g, grad, loss, ell, config,
                                                      derive_seed(config.seed, static_cast<std::uint64_t>(k)), boost);
    Direction dir{nd.solve.x, nd.mu, ell, nd.solve.iterations, g->matvecs()};
    ell = adapt_rank(nd.factor.eigenvalues, nd.mu, ell, ell_max, config.rank_ratio, config.rank_offset);
    return dir;
  };
  return outer_loop(objective, theta0, config, ell, next, kNoUpdate);
}

RunResult ngd_cg_run(const Objective& objective, const Eigen::VectorXd& theta0, const NystromNgdConfig& config) {
  const int maxit = config.maxit + static_cast<int>(config.resolved_ell_max(objective.dim()));
  auto next = [&](const Eigen::VectorXd& theta, double loss, const Eigen::VectorXd& grad, int, double boost) {
    const auto g = objective.gramian(theta);
    const double mu = boost * ngd_mu(loss);
    const SolveReport rep = ngd_cg_direction(*g, grad, mu, config.kappa, maxit);
    return Direction{rep.x, mu, 0, rep.iterations, g->matvecs()};
  };
  return outer_loop(objective, theta0, config, 0, next, kNoUpdate);
}

RunResult ngd_dense_run(const Objective& objective, const Eigen::VectorXd& theta0, const NystromNgdConfig& config) {
  auto next = [&](const Eigen::VectorXd& theta, double loss, const Eigen::VectorXd& grad, int, double boost) {
    const auto g = objective.gramian(theta);
    const double mu = boost * ngd_mu(loss);
    const Eigen::VectorXd d = ngd_dense_direction(assemble_dense(*g), grad, mu);
    return Direction{d, mu, 0, 0, g->matvecs()};
  };
  return outer_loop(objective, theta0, config, 0, next, kNoUpdate);
}

RunResult gradient_descent_run(const Objective& objective, const Eigen::VectorXd& theta0,
                               const NystromNgdConfig& config) {
  auto next = [](const Eigen::VectorXd&, double, const Eigen::VectorXd& grad, int, double) {
    return Direction{grad, 0.0, 0, 0, 0};
  };
  return outer_loop(objective, theta0, config, 0, next, kNoUpdate);
}

RunResult bfgs_run(const Objective& objective, const Eigen::VectorXd& theta0, const NystromNgdConfig& config) {
  const Eigen::Index p = objective.dim();
  if (p > 5000) throw std::length_error("bfgs_run: dense inverse Hessian limited to p <= 5000");
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p, p);
  auto next = [&](const Eigen::VectorXd&, double, const Eigen::VectorXd& grad, int, double) {
    return Direction{h * grad, 0.0, 0, 0, 0};
  };
  // a rejected step restarts from H = I
  auto update = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    if (s.size() == 0) {
      h.setIdentity();
    } else {
      h = bfgs_update(h, s, y);
    }
  };
  return outer_loop(objective, theta0, config, 0, next, update);
}

std::vector<std::string> optimizer_names() { return {"nystrom_ngd", "ngd_cg", "ngd_dense", "gd", "bfgs"}; }

RunResult run_optimizer(const std::string& name, const Objective& objective, const Eigen::VectorXd& theta0,
                        const NystromNgdConfig& config) {
  if (name == "nystrom_ngd") return nystrom_ngd_run(objective, theta0, config);
  if (name == "ngd_cg") return ngd_cg_run(objective, theta0, config);
  if (name == "ngd_dense") return ngd_dense_run(objective, theta0, config);
  if (name == "gd") return gradient_descent_run(objective, theta0, config);
  if (name == "bfgs") return bfgs_run(objective, theta0, config);
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

LinearLeastSquares::LinearLeastSquares(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd w)
    : a_(std::move(a)), b_(std::move(b)), w_(std::move(w)) {
  if (b_.size() != a_.rows() || w_.size() != a_.rows()) {
    throw std::invalid_argument("LinearLeastSquares: inconsistent dimensions");
  }
  const Eigen::VectorXd sw = w_.cwiseSqrt();
  solution_ = (sw.asDiagonal() * a_).completeOrthogonalDecomposition().solve(sw.cwiseProduct(b_));
}

double LinearLeastSquares::loss(const Eigen::VectorXd& theta) const {
  return 0.5 * w_.dot((a_ * theta - b_).cwiseAbs2());
}

std::pair<double, Eigen::VectorXd> LinearLeastSquares::loss_and_gradient(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd r = a_ * theta - b_;
  return {0.5 * w_.dot(r.cwiseAbs2()), a_.transpose() * w_.cwiseProduct(r)};
}

std::unique_ptr<LinearOperator<double>> LinearLeastSquares::gramian(const Eigen::VectorXd&) const {
  return std::make_unique<DenseOperator<double>>(a_.transpose() * w_.asDiagonal() * a_);
}

}  // namespace nysngd
