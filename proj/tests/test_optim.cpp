#include "nysngd/autodiff/derivatives.hpp"
#include "nysngd/optim/optimizers.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nysngd;

namespace {

LinearLeastSquares toy_least_squares(std::uint64_t seed, Eigen::Index rows = 60, Eigen::Index cols = 10) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd a = oracle::randn(rows, cols, rng);
  const Eigen::VectorXd b = oracle::randn(rows, rng);
  const Eigen::VectorXd w = (oracle::randn(rows, rng).cwiseAbs().array() + 0.1).matrix() / static_cast<double>(rows);
  return LinearLeastSquares(a, b, w);
}

PinnObjective small_pinn(const std::string& name, MlpTopology topo, QuadratureCounts train) {
  const auto problem = make_problem(name);
  QuadratureSet q = problem->sample_quadrature(train, 11);
  QuadratureSet eval = problem->sample_quadrature({4 * train.interior, 4 * train.boundary, 4 * train.initial}, 12);
  return PinnObjective(Collocation(problem, std::move(topo), std::move(q)), std::move(eval));
}

double angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0));
}

}  // namespace

TEST(AdaptMu, Examples) {
  const MuFloor none{FloorMode::kNone, 0.0, 0.0};
  EXPECT_NEAR(adapt_mu(1.0, 1217.0, 1.0, 1.0, none), 2.702e-13, 1e-16);
  EXPECT_DOUBLE_EQ(adapt_mu(1.0, 1217.0, 1.0, 1.0, none), 1217.0 * std::ldexp(1.0, -52));
  const MuFloor pinn{FloorMode::kLossPower, 1e-4, 2.0};
  EXPECT_NEAR(adapt_mu(1e-3, 337.0, 1e-2, 5.0, pinn), 1e-8, 1e-22);
  EXPECT_DOUBLE_EQ(adapt_mu(0.0, 10.0, 1.0, 1.0, {FloorMode::kConstant, 1e-9, 0.0}), 1e-9);
  EXPECT_DOUBLE_EQ(adapt_mu(0.0, 10.0, 1.0, 1.0, none), 0.0);
  EXPECT_DOUBLE_EQ(adapt_mu(0.0, 10.0, 1.0, 0.1, {FloorMode::kGradPower, 2.0, 2.0}), 2.0 * 0.01);
}

TEST(AdaptMu, FloorModeNames) {
  for (FloorMode m : {FloorMode::kNone, FloorMode::kLossPower, FloorMode::kGradPower, FloorMode::kConstant}) {
    EXPECT_EQ(parse_floor_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_floor_mode("quadratic"), std::invalid_argument);
}

TEST(AdaptRank, Examples) {
  EXPECT_EQ(adapt_rank(Eigen::Vector4d(4.0, 3.0, 2.0, 1.0), 0.05, 4, 100), 8);
  EXPECT_EQ(adapt_rank(Eigen::Vector4d(4.0, 3.0, 2.0, 1.0), 0.05, 4, 6), 6);
  EXPECT_EQ(adapt_rank(Eigen::Vector3d(1.0, 0.5, 1e-6), 1e-3, 3, 10), 4);
  EXPECT_EQ(adapt_rank(Eigen::Vector3d(1.0, 0.5, 1e-6), 1e-3, 3, 3), 3);
  EXPECT_EQ(adapt_rank(Eigen::Vector3d(3.0, 2.0, 1.0), 1e-3, 3, 3), 3);
  EXPECT_EQ(adapt_rank(Eigen::Vector3d(1e-9, 0.0, 0.0), 1e-3, 3, 10), 2);
}

TEST(AdaptRank, StaysWithinBounds) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(1, 40);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index ell = pick(rng);
    const Eigen::Index ell_max = ell + pick(rng) % 20;
    Eigen::VectorXd eigs = oracle::randn(ell, rng).cwiseAbs2();
    std::sort(eigs.data(), eigs.data() + ell, std::greater<>());
    const Eigen::Index next = adapt_rank(eigs, std::pow(10.0, -pick(rng) / 8.0), ell, ell_max);
    EXPECT_GE(next, 1);
    EXPECT_LE(next, ell_max);
  }
}

TEST(LineSearch, QuadraticAcceptsFullStep) {
  auto loss = [](const Eigen::VectorXd& t) { return 0.5 * t.squaredNorm(); };
  const Eigen::Vector3d theta(1.0, -2.0, 0.5);
  const LineSearchResult r = backtracking_linesearch(loss, theta, loss(theta), theta, theta);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.alpha, 1.0);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.evaluations, 1);
}

TEST(LineSearch, OvershootingStepIsHalved) {
  // L = 5|t|^2, d = grad = 10 t: alpha = 1/8 is the first Armijo step
  auto loss = [](const Eigen::VectorXd& t) { return 5.0 * t.squaredNorm(); };
  const Eigen::Vector2d theta(1.0, 1.0);
  const Eigen::Vector2d grad = 10.0 * theta;
  const LineSearchResult r = backtracking_linesearch(loss, theta, loss(theta), grad, grad);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.alpha, 0.125);
  EXPECT_EQ(r.evaluations, 4);
  EXPECT_LE(r.loss, loss(theta) - 1e-4 * r.alpha * grad.squaredNorm());
}

TEST(LineSearch, AscentDirectionFailsImmediately) {
  auto loss = [](const Eigen::VectorXd& t) { return 0.5 * t.squaredNorm(); };
  const Eigen::Vector2d theta(1.0, 1.0);
  const LineSearchResult r = backtracking_linesearch(loss, theta, loss(theta), theta, -theta);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.alpha, 0.0);
  EXPECT_EQ(r.evaluations, 0);
  EXPECT_EQ(r.loss, loss(theta));
}

TEST(LineSearch, NoDecreaseExhaustsBacktracks) {
  // descent slope claimed but the loss only rises: every trial is rejected
  auto loss = [](const Eigen::VectorXd& t) { return 1.0 + t.squaredNorm(); };
  const Eigen::Vector2d theta(0.0, 0.0);
  LineSearchParams params;
  params.max_backtracks = 7;
  const LineSearchResult r = backtracking_linesearch(loss, theta, 1.0, Eigen::Vector2d(1.0, 0.0),
                                                     Eigen::Vector2d(1.0, 0.0), params);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.evaluations, 8);
}

TEST(LineSearch, NonFiniteTrialsAreRejections) {
  auto loss = [](const Eigen::VectorXd& t) {
    if (std::abs(t[0]) > 0.6) return std::numeric_limits<double>::quiet_NaN();
    if (std::abs(t[0]) > 0.4) throw NonFiniteError("overflow", 0);
    return 0.5 * t.squaredNorm();
  };
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 1.0);
  const LineSearchResult r = backtracking_linesearch(loss, theta, 0.5, theta, 2.0 * theta);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.alpha, 0.5);
  EXPECT_EQ(r.evaluations, 2);
}

TEST(DenseNgd, IdentityGramian) {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd g = oracle::randn(12, rng);
  EXPECT_LE((ngd_dense_direction(Eigen::MatrixXd::Identity(12, 12), g, 0.25) - g / 1.25).norm(), 1e-15 * g.norm());
  EXPECT_LE((ngd_dense_direction(Eigen::MatrixXd::Identity(12, 12), g, 0.0) - g).norm(), 1e-15 * g.norm());
}

TEST(DenseNgd, LargeDampingApproachesGradient) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = oracle::random_psd(30, 30, rng);
  const Eigen::VectorXd g = oracle::randn(30, rng);
  const double mu = 1e4 * oracle::sym_norm2(a);
  const Eigen::VectorXd d = ngd_dense_direction(a, g, mu);
  EXPECT_LE(angle(d, g), 1e-3);
  EXPECT_NEAR(d.norm() * mu / g.norm(), 1.0, 1e-3);
}

TEST(DenseNgd, RankDeficientGivesMinimumNormSolution) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd a = oracle::random_psd(20, 6, rng);
  const Eigen::VectorXd g = a * oracle::randn(20, rng);
  const Eigen::VectorXd expected = a.completeOrthogonalDecomposition().solve(g);
  EXPECT_LE((ngd_dense_direction(a, g, 0.0) - expected).norm(), 1e-8 * expected.norm());
}

TEST(NgdCg, WellConditionedMatchesDense) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd a = oracle::random_psd(40, 40, rng) / 40.0;
  const Eigen::VectorXd g = oracle::randn(40, rng);
  const DenseOperator<double> op(a);
  const SolveReport rep = ngd_cg_direction(op, g, 1.0, 1e-13, 200);
  ASSERT_TRUE(rep.converged);
  const Eigen::VectorXd dense = ngd_dense_direction(a, g, 1.0);
  EXPECT_LE((rep.x - dense).norm(), 1e-8 * dense.norm());
  EXPECT_EQ(op.matvecs(), rep.matvecs);
}

TEST(NgdCg, ToleranceFollowsGradientNorm) {
  std::mt19937_64 rng(6);
  const DenseOperator<double> op(oracle::random_psd(30, 30, rng));
  const Eigen::VectorXd g = 1e-4 * oracle::randn(30, rng).normalized();
  const SolveReport rep = ngd_cg_direction(op, g, 1e-3, 0.1, 500);
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rep.relative_residual, 1e-4);
}

TEST(NgdCg, LosesToNystromAtEqualProducts) {
  const Eigen::Index p = 400;
  Eigen::VectorXd lam(p);
  for (Eigen::Index j = 0; j < p; ++j) lam[j] = std::pow(0.85, static_cast<double>(j));
  NystromNgdConfig cfg;
  cfg.gamma = 1.0;
  cfg.gamma_times_p = false;
  cfg.floor = {FloorMode::kConstant, 1e-7, 0.0};
  cfg.maxit = 40;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const DenseOperator<double> g(oracle::with_spectrum(lam, rng));
    const Eigen::VectorXd grad = g.matrix() * oracle::randn(p, rng);
    const NystromDirection nd = nystrom_ngd_direction(g, grad, 1.0, 80, cfg, seed, 1.0, 1e-14);
    ASSERT_EQ(nd.mu, 1e-7);
    const std::int64_t total = g.matvecs();
    ASSERT_EQ(total, 80 + nd.solve.matvecs);
    const DenseOperator<double> g2(g.matrix());
    const SolveReport cg = ngd_cg_direction(g2, grad, nd.mu, 1e-14, static_cast<int>(total - 1));
    EXPECT_LE(g2.matvecs(), total);
    EXPECT_LT(nd.solve.relative_residual, cg.relative_residual) << "seed " << seed;
  }
}

TEST(NystromDirection, CountsSketchAndSolveProducts) {
  std::mt19937_64 rng(7);
  const DenseOperator<double> g(oracle::random_psd(50, 20, rng));
  NystromNgdConfig cfg;
  const Eigen::VectorXd grad = oracle::randn(50, rng);
  const NystromDirection nd = nystrom_ngd_direction(g, grad, 0.5, 12, cfg, 3);
  EXPECT_EQ(nd.sketch_matvecs, 12);
  EXPECT_EQ(g.matvecs(), 12 + nd.solve.matvecs);
  EXPECT_EQ(nd.factor.rank(), 12);
  EXPECT_LE(nd.solve.matvecs, cfg.maxit + 1);
}

TEST(NystromDirection, RejectsVanishingDamping) {
  const DenseOperator<double> g(Eigen::MatrixXd::Zero(6, 6));
  NystromNgdConfig cfg;
  cfg.floor.mode = FloorMode::kNone;
  EXPECT_THROW(nystrom_ngd_direction(g, Eigen::VectorXd::Ones(6), 1.0, 3, cfg, 0), std::domain_error);
}

TEST(SolverConsistency, ThreeSolversAgreeOnPinnGramian) {
  const PinnObjective obj = small_pinn("poisson2d", MlpTopology({2, 8, 8, 1}), {40, 16, 0});
  ASSERT_LE(obj.dim(), 200);
  const Eigen::VectorXd theta = init(obj.collocation().topology(), 3).values();
  const auto [loss, grad] = obj.loss_and_gradient(theta);
  const auto g = obj.gramian(theta);
  NystromNgdConfig cfg;
  cfg.floor = {FloorMode::kConstant, 1e-3, 0.0};
  cfg.maxit = 2000;
  const NystromDirection nd = nystrom_ngd_direction(*g, grad, loss, 30, cfg, 5, 1.0, 1e-12);
  ASSERT_TRUE(nd.solve.converged);
  const Eigen::VectorXd dense = ngd_dense_direction(assemble_dense(*g), grad, nd.mu);
  const SolveReport cg = ngd_cg_direction(*g, grad, nd.mu, 1e-12, 5000);
  ASSERT_TRUE(cg.converged);
  EXPECT_LE((nd.solve.x - dense).norm(), 1e-6 * dense.norm());
  EXPECT_LE((cg.x - dense).norm(), 1e-6 * dense.norm());
}

TEST(Bfgs, IdentityWithMatchingPairStaysIdentity) {
  const Eigen::VectorXd s = Eigen::VectorXd::Unit(4, 2);
  EXPECT_LE((bfgs_update(Eigen::MatrixXd::Identity(4, 4), s, s) - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-15);
}

TEST(Bfgs, MatchesTextbookUpdate) {
  std::mt19937_64 rng(8);
  int checked = 0;
  while (checked < 1000) {
    const Eigen::MatrixXd h = oracle::random_psd(5, 5, rng) + 0.1 * Eigen::MatrixXd::Identity(5, 5);
    const Eigen::VectorXd s = oracle::randn(5, rng);
    const Eigen::VectorXd y = oracle::randn(5, rng);
    if (s.dot(y) <= 1e-2 * s.norm() * y.norm()) continue;
    const Eigen::MatrixXd ref = oracle::bfgs_textbook(h, s, y);
    EXPECT_LE((bfgs_update(h, s, y) - ref).norm(), 1e-12 * ref.norm());
    ++checked;
  }
}

TEST(Bfgs, SkipsNegativeCurvature) {
  const Eigen::MatrixXd h = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  EXPECT_EQ(bfgs_update(h, Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(-1, 0, 0)), h);
  EXPECT_EQ(bfgs_update(h, Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0)), h);
}

TEST(Bfgs, SolvesLeastSquares) {
  const LinearLeastSquares obj = toy_least_squares(9);
  NystromNgdConfig cfg;
  cfg.iterations = 200;
  const RunResult run = bfgs_run(obj, Eigen::VectorXd::Zero(obj.dim()), cfg);
  EXPECT_LE(run.records.back().loss - obj.optimal_loss(), 1e-10);
}

TEST(GradientDescent, MonotoneOnQuadraticBowl) {
  const LinearLeastSquares obj = toy_least_squares(10);
  NystromNgdConfig cfg;
  cfg.iterations = 50;
  const RunResult run = gradient_descent_run(obj, Eigen::VectorXd::Zero(obj.dim()), cfg);
  ASSERT_EQ(run.records.size(), 51u);
  for (std::size_t k = 1; k < run.records.size(); ++k) EXPECT_LT(run.records[k].loss, run.records[k - 1].loss);
}

TEST(GradientDescent, StationaryPointIsKept) {
  const LinearLeastSquares obj = toy_least_squares(11, 10, 10);
  const Eigen::VectorXd start = obj.solution();
  ASSERT_LE(obj.loss_and_gradient(start).second.norm(), 1e-12);
  NystromNgdConfig cfg;
  cfg.iterations = 3;
  const RunResult run = gradient_descent_run(obj, start, cfg);
  EXPECT_LE((run.theta - start).norm(), 1e-12);
}

TEST(NystromNgd, LeastSquaresToyConvergesFast) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LinearLeastSquares obj = toy_least_squares(20 + seed);
    NystromNgdConfig cfg;
    cfg.iterations = 5;
    cfg.seed = seed;
    const RunResult run = nystrom_ngd_run(obj, Eigen::VectorXd::Zero(obj.dim()), cfg);
    ASSERT_FALSE(run.aborted) << run.abort_reason;
    EXPECT_LE(run.records.back().loss - obj.optimal_loss(), 1e-10) << "seed " << seed;
    EXPECT_LE(run.records.back().h1_rel_error, 1e-4 * obj.solution().norm());
  }
}

TEST(NystromNgd, PinnRunInvariants) {
  const PinnObjective obj = small_pinn("poisson1d", MlpTopology({1, 10, 10, 1}), {40, 2, 0});
  NystromNgdConfig cfg;
  cfg.iterations = 25;
  cfg.ell0 = 4;
  cfg.ell_max = 24;
  const RunResult run = nystrom_ngd_run(obj, init(obj.collocation().topology(), 1).values(), cfg);
  ASSERT_FALSE(run.aborted) << run.abort_reason;
  ASSERT_EQ(run.records.size(), 26u);
  bool shrunk = false;
  for (std::size_t k = 1; k < run.records.size(); ++k) {
    const RunRecord& prev = run.records[k - 1];
    const RunRecord& cur = run.records[k];
    EXPECT_LE(cur.loss, prev.loss);
    EXPECT_LE(cur.ell, 24);
    EXPECT_GT(cur.mu, 0.0);
    const std::int64_t step = cur.matvecs - prev.matvecs;
    EXPECT_GE(step, cur.ell + cur.pcg_iters + 1);
    EXPECT_LE(step, cur.ell + cfg.maxit + 1);
    if (k >= 2 && cur.ell < prev.ell) shrunk = true;
    if (!shrunk && k >= 2) EXPECT_GE(cur.ell, prev.ell);
  }
  EXPECT_LT(run.records.back().loss, 1e-2 * run.records.front().loss);
}

TEST(NystromNgd, DeterministicForFixedSeed) {
  const PinnObjective obj = small_pinn("poisson2d", MlpTopology({2, 6, 1}), {30, 12, 0});
  NystromNgdConfig cfg;
  cfg.iterations = 6;
  cfg.seed = 42;
  const Eigen::VectorXd theta0 = init(obj.collocation().topology(), 2).values();
  const RunResult a = nystrom_ngd_run(obj, theta0, cfg);
  const RunResult b = nystrom_ngd_run(obj, theta0, cfg);
  EXPECT_EQ(a.theta, b.theta);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].loss, b.records[k].loss);
    EXPECT_EQ(a.records[k].mu, b.records[k].mu);
    EXPECT_EQ(a.records[k].ell, b.records[k].ell);
    EXPECT_EQ(a.records[k].matvecs, b.records[k].matvecs);
  }
}

TEST(NystromNgd, StopsAtMatvecBudget) {
  const PinnObjective obj = small_pinn("poisson2d", MlpTopology({2, 6, 1}), {30, 12, 0});
  NystromNgdConfig cfg;
  cfg.iterations = 1000;
  cfg.matvec_budget = 150;
  const RunResult run = nystrom_ngd_run(obj, init(obj.collocation().topology(), 2).values(), cfg);
  ASSERT_GE(run.records.size(), 2u);
  EXPECT_GE(run.records.back().matvecs, 150);
  EXPECT_LT(run.records[run.records.size() - 2].matvecs, 150);
}

TEST(NgdCg, StepBudgetOnPinn) {
  const PinnObjective obj = small_pinn("poisson2d", MlpTopology({2, 8, 1}), {30, 12, 0});
  NystromNgdConfig cfg;
  cfg.iterations = 8;
  cfg.ell_max = 40;
  const RunResult run = ngd_cg_run(obj, init(obj.collocation().topology(), 4).values(), cfg);
  for (std::size_t k = 1; k < run.records.size(); ++k) {
    EXPECT_LE(run.records[k].matvecs - run.records[k - 1].matvecs, cfg.maxit + 40 + 1);
    EXPECT_LE(run.records[k].mu, 1e-5);
  }
}

TEST(Optimizers, AllReachLeastSquaresOptimum) {
  const LinearLeastSquares obj = toy_least_squares(30);
  NystromNgdConfig cfg;
  cfg.iterations = 30;
  for (const std::string& name : optimizer_names()) {
    if (name == "gd") continue;
    const RunResult run = run_optimizer(name, obj, Eigen::VectorXd::Zero(obj.dim()), cfg);
    EXPECT_LE(run.records.back().loss - obj.optimal_loss(), 1e-9) << name;
  }
  EXPECT_THROW(run_optimizer("adam", obj, Eigen::VectorXd::Zero(obj.dim()), cfg), std::invalid_argument);
}

TEST(Optimizers, ConfigValidation) {
  NystromNgdConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.resolved_ell_max(337), 168);
  EXPECT_EQ(cfg.resolved_ell_max(2000), 500);
  EXPECT_EQ(cfg.resolved_ell_max(1), 1);
  EXPECT_EQ(cfg.resolved_gamma(337), 337.0);
  auto broken = [](auto mutate) {
    NystromNgdConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(broken([](NystromNgdConfig& c) { c.ell0 = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](NystromNgdConfig& c) { c.ell_max = 5; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](NystromNgdConfig& c) { c.gamma = 0.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](NystromNgdConfig& c) { c.kappa = 1.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](NystromNgdConfig& c) { c.maxit = 0; }).validate(), std::invalid_argument);
  const LinearLeastSquares obj = toy_least_squares(31);
  EXPECT_THROW(nystrom_ngd_run(obj, Eigen::VectorXd::Zero(3), cfg), std::invalid_argument);
}
