#pragma once

#include "nysngd/krylov/pcg.hpp"
#include "nysngd/optim/objective.hpp"
#include "nysngd/sketch/nystrom.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nysngd {

enum class FloorMode { kNone, kLossPower, kGradPower, kConstant };

FloorMode parse_floor_mode(const std::string& name);
std::string to_string(FloorMode mode);

/// Lower bound on the damping: c * loss^alpha, c * |grad|^alpha or c.
struct MuFloor {
  FloorMode mode = FloorMode::kLossPower;
  double c = 1e-4;
  double alpha = 2.0;

  double value(double loss, double grad_norm) const;
};

struct LineSearchParams {
  double alpha0 = 1.0;
  double shrink = 0.5;
  double c1 = 1e-4;
  int max_backtracks = 30;
};

struct NystromNgdConfig {
  Eigen::Index ell0 = 10;
  /// 0 selects min(500, p / 2).
  Eigen::Index ell_max = 0;
  /// Damping multiplier; multiplied by p when gamma_times_p is set.
  double gamma = 1.0;
  bool gamma_times_p = true;
  int maxit = 20;
  double kappa = 0.1;
  MuFloor floor;
  /// Rank rule: grow while lambda_l > ratio * mu, otherwise shrink to the
  /// first index below ratio * mu plus offset.
  double rank_ratio = 10.0;
  Eigen::Index rank_offset = 1;
  LineSearchParams line_search;
  int iterations = 300;
  /// Stop once cumulative matvecs reach this (0: no budget).
  std::int64_t matvec_budget = 0;
  std::uint64_t seed = 0;

  Eigen::Index resolved_ell_max(Eigen::Index p) const;
  double resolved_gamma(Eigen::Index p) const;
  void validate() const;
};

/// mu = max(gamma * eps * lambda1, floor(loss, grad_norm)).
double adapt_mu(double lambda1, double gamma, double loss, double grad_norm, const MuFloor& floor);

/// Next sketch size from the current eigenvalue estimates (descending).
Eigen::Index adapt_rank(const Eigen::VectorXd& eigenvalues, double mu, Eigen::Index ell, Eigen::Index ell_max,
                        double ratio = 10.0, Eigen::Index offset = 1);

struct LineSearchResult {
  double alpha = 0.0;
  double loss = 0.0;
  bool success = false;
  int evaluations = 0;
};

/// Armijo backtracking along theta - alpha d:
/// L(theta - alpha d) <= L(theta) - c1 alpha <grad, d>. Fails at once when
/// <grad, d> <= 0; non-finite trial losses count as rejections.
LineSearchResult backtracking_linesearch(const std::function<double(const Eigen::VectorXd&)>& loss,
                                         const Eigen::VectorXd& theta, double loss0, const Eigen::VectorXd& grad,
                                         const Eigen::VectorXd& d, const LineSearchParams& params = {});

/// d = pinv(G + mu I) grad through an SVD with cutoff p * eps * sigma_1.
Eigen::VectorXd ngd_dense_direction(const Eigen::MatrixXd& g, const Eigen::VectorXd& grad, double mu);

/// CG on (G + mu I) d = grad with rel_tol = min(kappa, |grad|).
SolveReport ngd_cg_direction(const LinearOperator<double>& g, const Eigen::VectorXd& grad, double mu, double kappa,
                             int maxit);

struct NystromDirection {
  SolveReport solve;
  NystromFactor<double> factor;
  double mu = 0.0;
  std::int64_t sketch_matvecs = 0;
};

/// One NystromNGD direction: sketch of rank ell, damping, preconditioner
/// and PCG. `mu_boost` multiplies the adapted damping. `rel_tol` < 0 means
/// min(kappa, |grad|).
NystromDirection nystrom_ngd_direction(const LinearOperator<double>& g, const Eigen::VectorXd& grad, double loss,
                                       Eigen::Index ell, const NystromNgdConfig& config, std::uint64_t sketch_seed,
                                       double mu_boost = 1.0, double rel_tol = -1.0);

/// H + [rho + rho^2 y^T H y] s s^T - rho [(H y) s^T + s (H y)^T], rho = 1/(s^T y),
/// using only matrix-vector products and rank-one updates. Returns H when
/// s^T y <= 0.
Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& h, const Eigen::VectorXd& s, const Eigen::VectorXd& y);

/// Per-iteration trace. Iteration 0 is the initial state.
struct RunRecord {
  int iteration = 0;
  double loss = 0.0;
  double h1_rel_error = 0.0;
  double mu = 0.0;
  Eigen::Index ell = 0;
  int pcg_iters = 0;
  std::int64_t matvecs = 0;
  double seconds = 0.0;
};

struct RunResult {
  Eigen::VectorXd theta;
  std::vector<RunRecord> records;
  bool aborted = false;
  std::string abort_reason;
};

RunResult nystrom_ngd_run(const Objective& objective, const Eigen::VectorXd& theta0, const NystromNgdConfig& config);
/// Unpreconditioned CG directions with mu = min(1e-5, L) and maxit + ell_max
/// iterations per solve.
RunResult ngd_cg_run(const Objective& objective, const Eigen::VectorXd& theta0, const NystromNgdConfig& config);
/// Dense SVD directions with mu = min(1e-5, L); p is limited by the dense guard.
RunResult ngd_dense_run(const Objective& objective, const Eigen::VectorXd& theta0, const NystromNgdConfig& config);
RunResult gradient_descent_run(const Objective& objective, const Eigen::VectorXd& theta0,
                               const NystromNgdConfig& config);
/// Dense inverse-Hessian BFGS from H0 = I; p <= 5000.
RunResult bfgs_run(const Objective& objective, const Eigen::VectorXd& theta0, const NystromNgdConfig& config);

std::vector<std::string> optimizer_names();
RunResult run_optimizer(const std::string& name, const Objective& objective, const Eigen::VectorXd& theta0,
                        const NystromNgdConfig& config);

}  // namespace nysngd
