#include "nysngd/harness/experiment.hpp"
#include "nysngd/optim/objective.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace nysngd;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nysngd_test_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

ExperimentConfig small_config(const std::filesystem::path& out) {
  std::istringstream in(
      "problem = poisson1d\n"
      "hidden = 6, 6\n"
      "interior = 24\n"
      "boundary = 2\n"
      "iterations = 5\n"
      "ell0 = 4\n"
      "repetitions = 2\n"
      "seed = 7\n");
  ExperimentConfig c = parse_config(in);
  c.output_dir = out;
  return c;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string without_last_column(const std::string& line) { return line.substr(0, line.rfind(',')); }

}  // namespace

TEST(Config, ParsesAllKeys) {
  std::istringstream in(
      "# comment line\n"
      "problem = heat1p1d   # trailing comment\n"
      "hidden = 8, 4\n"
      "activation = tanh\n"
      "interior = 100\n"
      "boundary = 30\n"
      "initial = 20\n"
      "eval_interior = 500\n"
      "optimizer = ngd_cg\n"
      "seed = 12\n"
      "repetitions = 3\n"
      "output_dir = results\n"
      "iterations = 40\n"
      "ell0 = 5\n"
      "ell_max = 50\n"
      "gamma = 0.01p\n"
      "maxit = 30\n"
      "kappa = 0.05\n"
      "mu_floor = grad-power\n"
      "mu_floor_c = 1e-3\n"
      "mu_floor_alpha = 1.5\n"
      "rank_ratio = 20\n"
      "rank_offset = 2\n"
      "ls_shrink = 0.3\n"
      "ls_c1 = 1e-3\n"
      "ls_max_backtracks = 12\n"
      "matvec_budget = 9000\n");
  const ExperimentConfig c = parse_config(in);
  EXPECT_EQ(c.problem, "heat1p1d");
  EXPECT_EQ(c.hidden, (std::vector<int>{8, 4}));
  EXPECT_EQ(c.train.interior, 100);
  EXPECT_EQ(c.train.boundary, 30);
  EXPECT_EQ(c.train.initial, 20);
  EXPECT_EQ(c.eval.interior, 500);
  EXPECT_EQ(c.optimizer, "ngd_cg");
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.repetitions, 3);
  EXPECT_EQ(c.output_dir, "results");
  EXPECT_EQ(c.optim.iterations, 40);
  EXPECT_EQ(c.optim.ell0, 5);
  EXPECT_EQ(c.optim.ell_max, 50);
  EXPECT_DOUBLE_EQ(c.optim.gamma, 0.01);
  EXPECT_TRUE(c.optim.gamma_times_p);
  EXPECT_EQ(c.optim.maxit, 30);
  EXPECT_DOUBLE_EQ(c.optim.kappa, 0.05);
  EXPECT_EQ(c.optim.floor.mode, FloorMode::kGradPower);
  EXPECT_DOUBLE_EQ(c.optim.floor.c, 1e-3);
  EXPECT_DOUBLE_EQ(c.optim.floor.alpha, 1.5);
  EXPECT_DOUBLE_EQ(c.optim.rank_ratio, 20.0);
  EXPECT_EQ(c.optim.rank_offset, 2);
  EXPECT_DOUBLE_EQ(c.optim.line_search.shrink, 0.3);
  EXPECT_DOUBLE_EQ(c.optim.line_search.c1, 1e-3);
  EXPECT_EQ(c.optim.line_search.max_backtracks, 12);
  EXPECT_EQ(c.optim.matvec_budget, 9000);
  EXPECT_EQ(c.topology(2).widths(), (std::vector<int>{2, 8, 4, 1}));
}

TEST(Config, GammaForms) {
  ExperimentConfig c;
  apply_setting(c, "gamma", "p");
  EXPECT_EQ(c.optim.gamma, 1.0);
  EXPECT_TRUE(c.optim.gamma_times_p);
  apply_setting(c, "gamma", "10p");
  EXPECT_EQ(c.optim.gamma, 10.0);
  apply_setting(c, "gamma", "250");
  EXPECT_EQ(c.optim.gamma, 250.0);
  EXPECT_FALSE(c.optim.gamma_times_p);
}

TEST(Config, RejectsBadInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  };
  EXPECT_THROW(parse("colour = blue\n"), std::invalid_argument);
  EXPECT_THROW(parse("iterations = many\n"), std::invalid_argument);
  EXPECT_THROW(parse("iterations = 10x\n"), std::invalid_argument);
  EXPECT_THROW(parse("just words\n"), std::invalid_argument);
  EXPECT_THROW(parse("optimizer = adam\n"), std::invalid_argument);
  EXPECT_THROW(parse("problem = navier_stokes\n"), std::invalid_argument);
  EXPECT_THROW(parse("repetitions = 0\n"), std::invalid_argument);
  EXPECT_THROW(parse("kappa = 1.5\n"), std::invalid_argument);
  EXPECT_THROW(parse("ell0 = 20\nell_max = 10\n"), std::invalid_argument);
  EXPECT_THROW(parse("mu_floor = sometimes\n"), std::invalid_argument);
  EXPECT_THROW(load_config("/nonexistent/dir/config.cfg"), std::runtime_error);
  EXPECT_NO_THROW(parse(""));
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile({5.0, 1.0, 3.0}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile({2.0}, 0.75), 2.0);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}

TEST(Experiment, ZeroIterationsWritesHeaderAndInitialRow) {
  ExperimentConfig c = small_config(scratch("empty"));
  c.optim.iterations = 0;
  c.repetitions = 1;
  const ExperimentSummary s = run_experiment(c);
  ASSERT_EQ(s.runs.size(), 1u);
  EXPECT_EQ(s.runs[0].trace.filename(), "poisson1d_nystrom_ngd_seed7.csv");
  const auto lines = read_lines(s.runs[0].trace);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], kTraceHeader);
  EXPECT_EQ(lines[1].rfind("0,", 0), 0u);
}

TEST(Experiment, TraceSchemaAndSummary) {
  const auto dir = scratch("summary");
  const ExperimentConfig c = small_config(dir);
  const ExperimentSummary s = run_experiment(c);
  ASSERT_EQ(s.runs.size(), 2u);
  EXPECT_EQ(s.runs[0].seed, 7u);
  EXPECT_EQ(s.runs[1].seed, 8u);
  std::vector<double> finals;
  for (const RepetitionResult& r : s.runs) {
    const auto lines = read_lines(r.trace);
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0], "iteration,loss,h1_rel_error,mu,ell,pcg_iters,matvecs,seconds");
    long long prev_it = -1;
    long long prev_mv = -1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      std::stringstream ss(lines[i]);
      std::vector<std::string> cols;
      for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
      ASSERT_EQ(cols.size(), 8u);
      EXPECT_GT(std::stoll(cols[0]), prev_it);
      EXPECT_GE(std::stoll(cols[6]), prev_mv);
      prev_it = std::stoll(cols[0]);
      prev_mv = std::stoll(cols[6]);
    }
    finals.push_back(r.run.records.back().h1_rel_error);
  }
  std::ifstream in(dir / "summary.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("problem"), "poisson1d");
  EXPECT_EQ(j.at("optimizer"), "nystrom_ngd");
  EXPECT_DOUBLE_EQ(j.at("median_final_error").get<double>(), quantile(finals, 0.5));
  EXPECT_DOUBLE_EQ(j.at("q25").get<double>(), quantile(finals, 0.25));
  EXPECT_DOUBLE_EQ(j.at("q75").get<double>(), quantile(finals, 0.75));
  EXPECT_GE(j.at("median_seconds").get<double>(), 0.0);
  EXPECT_EQ(j.size(), 6u);
}

TEST(Experiment, RepeatedRunsMatchOutsideTimingColumn) {
  const ExperimentConfig a = small_config(scratch("det_a"));
  const ExperimentConfig b = small_config(scratch("det_b"));
  const ExperimentSummary sa = run_experiment(a);
  const ExperimentSummary sb = run_experiment(b);
  for (std::size_t r = 0; r < sa.runs.size(); ++r) {
    const auto la = read_lines(sa.runs[r].trace);
    const auto lb = read_lines(sb.runs[r].trace);
    ASSERT_EQ(la.size(), lb.size());
    for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(without_last_column(la[i]), without_last_column(lb[i]));
  }
  // a different seed changes the numbers
  ExperimentConfig c = small_config(scratch("det_c"));
  c.seed = 8;
  c.repetitions = 1;
  const auto lc = read_lines(run_experiment(c).runs[0].trace);
  EXPECT_NE(without_last_column(lc[1]), without_last_column(read_lines(sa.runs[0].trace)[1]));
  EXPECT_EQ(without_last_column(lc.back()), without_last_column(read_lines(sa.runs[1].trace).back()));
}

TEST(Spectrum, IdentityIsFlat) {
  const DenseOperator<double> g(Eigen::MatrixXd::Identity(7, 7));
  EXPECT_EQ(normalized_spectrum(g, 5), std::vector<double>(5, 1.0));
  EXPECT_EQ(normalized_spectrum(g, 20).size(), 7u);
}

TEST(Spectrum, OrthogonalFeaturesWithWeights) {
  const LinearLeastSquares lin(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(1.0, 0.25));
  const std::vector<double> s = normalized_spectrum(*lin.gramian(Eigen::Vector2d::Zero()), 2);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 0.25);
  EXPECT_THROW(normalized_spectrum(DenseOperator<double>(Eigen::MatrixXd::Zero(3, 3)), 2), std::domain_error);
}

TEST(Spectrum, PinnGramianDecays) {
  const ExperimentConfig c = small_config(scratch("spectrum"));
  const std::vector<double> s = dump_spectrum(c, 7, 30);
  ASSERT_EQ(s.size(), 30u);
  EXPECT_EQ(s[0], 1.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_LE(s[i], s[i - 1]);
    EXPECT_GE(s[i], 0.0);
  }
  EXPECT_LT(s.back(), 1e-4);
  EXPECT_EQ(dump_spectrum(c, 7, 30), s);
  EXPECT_NE(dump_spectrum(c, 7, 30, 3), s);

  std::ostringstream out;
  write_spectrum(out, {1.0, 0.5});
  EXPECT_EQ(out.str(), "index,normalized_eigenvalue\n1,1\n2,0.5\n");
}
