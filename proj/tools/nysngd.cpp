#include "nysngd/harness/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"Matrix-free natural gradient descent with Nystrom preconditioning for PDE-solving networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  Eigen::Index top = 50;
  int after = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (key = value lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory (overrides output_dir)");
    cmd->add_option("--seed", seed, "base seed (overrides seed)");
  };
  CLI::App* run = app.add_subcommand("run", "run all repetitions; write CSV traces and summary.json");
  add_common(run);
  CLI::App* spectrum = app.add_subcommand("spectrum", "write the normalized leading Gramian eigenvalues");
  add_common(spectrum);
  spectrum->add_option("--top", top, "number of eigenvalues")->check(CLI::PositiveNumber);
  spectrum->add_option("--after", after, "optimizer iterations before the dump (0: at initialization)")
      ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    nysngd::ExperimentConfig config = nysngd::load_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seed = *seed;

    if (run->parsed()) {
      const nysngd::ExperimentSummary s = nysngd::run_experiment(config);
      for (const auto& r : s.runs) {
        const auto& last = r.run.records.back();
        std::printf("seed %llu: %d iterations, loss %.3e, H1 error %.3e, %.1f s -> %s%s\n",
                    static_cast<unsigned long long>(r.seed), last.iteration, last.loss, last.h1_rel_error,
                    last.seconds, r.trace.c_str(), r.run.aborted ? " (aborted)" : "");
      }
      nysngd::write_summary(std::cout, s);
    } else {
      const auto values = nysngd::dump_spectrum(config, config.seed, top, after);
      std::filesystem::create_directories(config.output_dir);
      const auto path = config.output_dir / (config.problem + "_spectrum.csv");
      std::ofstream out(path);
      nysngd::write_spectrum(out, values);
      if (!out) throw std::runtime_error("write failed for " + path.string());
      std::printf("wrote %zu eigenvalues to %s\n", values.size(), path.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
