#pragma once

#include "nysngd/linalg/operator.hpp"
#include "nysngd/model/mlp.hpp"
#include "nysngd/optim/optimizers.hpp"
#include "nysngd/problems/quadrature.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace nysngd {

/// One experiment: a problem, a network, quadrature sizes and an optimizer.
/// Repetition r uses seed + r for the initial parameters, the training and
/// evaluation quadratures and the sketches (as independent sub-streams).
struct ExperimentConfig {
  std::string problem = "poisson2d";
  std::vector<int> hidden = {16, 16};
  Activation activation = Activation::kTanh;
  QuadratureCounts train{400, 160, 0};
  /// Zero entries default to ten times the training counts.
  QuadratureCounts eval{0, 0, 0};
  std::string optimizer = "nystrom_ngd";
  NystromNgdConfig optim;
  std::uint64_t seed = 0;
  int repetitions = 1;
  std::filesystem::path output_dir = "out";

  MlpTopology topology(int input_dim) const;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys throw.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` setting.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

struct RepetitionResult {
  std::uint64_t seed = 0;
  RunResult run;
  std::filesystem::path trace;
};

struct ExperimentSummary {
  std::string problem;
  std::string optimizer;
  double median_final_error = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double median_seconds = 0.0;
  std::vector<RepetitionResult> runs;
};

/// Linear-interpolation quantile (q in [0, 1]) of unsorted values.
double quantile(std::vector<double> values, double q);

/// Runs one repetition without writing anything.
RunResult run_single(const ExperimentConfig& config, std::uint64_t seed);

/// All repetitions; writes <problem>_<optimizer>_seed<N>.csv per run and
/// summary.json into the output directory.
ExperimentSummary run_experiment(const ExperimentConfig& config);

inline constexpr const char* kTraceHeader = "iteration,loss,h1_rel_error,mu,ell,pcg_iters,matvecs,seconds";

void write_trace(std::ostream& out, const std::vector<RunRecord>& records);
void write_summary(std::ostream& out, const ExperimentSummary& summary);

/// Leading k eigenvalues of the densely assembled operator divided by the
/// largest, descending. Negative roundoff is clipped to zero.
std::vector<double> normalized_spectrum(const LinearOperator<double>& g, Eigen::Index k);

/// Spectrum of G(theta) for repetition seed `seed` after `iterations`
/// optimizer steps (0: at initialization).
std::vector<double> dump_spectrum(const ExperimentConfig& config, std::uint64_t seed, Eigen::Index k,
                                  int iterations = 0);

void write_spectrum(std::ostream& out, const std::vector<double>& values);

}  // namespace nysngd
