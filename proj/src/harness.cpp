#include "nysngd/harness/experiment.hpp"

#include "nysngd/linalg/seed.hpp"
#include "nysngd/optim/objective.hpp"
#include "nysngd/problems/collocation.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nysngd {

namespace {

// sub-streams of a repetition seed
enum Stream : std::uint64_t { kInitStream = 1, kTrainStream = 2, kEvalStream = 3, kSketchStream = 4 };

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(to_int(key, item)));
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: '" + key + "' expects true or false");
}

QuadratureCounts resolve_eval(const ExperimentConfig& c) {
  QuadratureCounts e = c.eval;
  if (e.interior == 0) e.interior = 10 * c.train.interior;
  if (e.boundary == 0) e.boundary = 10 * c.train.boundary;
  if (e.initial == 0) e.initial = 10 * (c.train.initial > 0 ? c.train.initial : c.train.boundary);
  return e;
}

struct Setup {
  std::shared_ptr<const Problem> problem;
  MlpTopology topology;
  Eigen::VectorXd theta0;
  NystromNgdConfig optim;
};

Setup setup(const ExperimentConfig& config, std::uint64_t seed) {
  Setup s;
  s.problem = make_problem(config.problem);
  s.topology = config.topology(s.problem->input_dim());
  s.theta0 = init(s.topology, derive_seed(seed, kInitStream)).values();
  s.optim = config.optim;
  s.optim.seed = derive_seed(seed, kSketchStream);
  return s;
}

PinnObjective make_objective(const ExperimentConfig& config, const Setup& s, std::uint64_t seed) {
  QuadratureSet train = s.problem->sample_quadrature(config.train, derive_seed(seed, kTrainStream));
  QuadratureSet eval = s.problem->sample_quadrature(resolve_eval(config), derive_seed(seed, kEvalStream));
  return {Collocation(s.problem, s.topology, std::move(train)), std::move(eval)};
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MlpTopology ExperimentConfig::topology(int input_dim) const {
  std::vector<int> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  return {widths, activation};
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
  NystromNgdConfig& o = c.optim;
  if (key == "problem") {
    c.problem = v;
  } else if (key == "hidden") {
    c.hidden = to_int_list(key, v);
  } else if (key == "activation") {
    c.activation = parse_activation(v);
  } else if (key == "interior") {
    c.train.interior = to_int(key, v);
  } else if (key == "boundary") {
    c.train.boundary = to_int(key, v);
  } else if (key == "initial") {
    c.train.initial = to_int(key, v);
  } else if (key == "eval_interior") {
    c.eval.interior = to_int(key, v);
  } else if (key == "eval_boundary") {
    c.eval.boundary = to_int(key, v);
  } else if (key == "eval_initial") {
    c.eval.initial = to_int(key, v);
  } else if (key == "optimizer") {
    c.optimizer = v;
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "repetitions") {
    c.repetitions = static_cast<int>(to_int(key, v));
  } else if (key == "output_dir") {
    c.output_dir = v;
  } else if (key == "iterations") {
    o.iterations = static_cast<int>(to_int(key, v));
  } else if (key == "ell0") {
    o.ell0 = to_int(key, v);
  } else if (key == "ell_max") {
    o.ell_max = to_int(key, v);
  } else if (key == "gamma") {
    // "p", "10p", "0.01p" or an absolute value
    if (!v.empty() && v.back() == 'p') {
      const std::string factor = trim(v.substr(0, v.size() - 1));
      o.gamma = factor.empty() ? 1.0 : to_double(key, factor);
      o.gamma_times_p = true;
    } else {
      o.gamma = to_double(key, v);
      o.gamma_times_p = false;
    }
  } else if (key == "maxit") {
    o.maxit = static_cast<int>(to_int(key, v));
  } else if (key == "kappa") {
    o.kappa = to_double(key, v);
  } else if (key == "mu_floor") {
    o.floor.mode = parse_floor_mode(v);
  } else if (key == "mu_floor_c") {
    o.floor.c = to_double(key, v);
  } else if (key == "mu_floor_alpha") {
    o.floor.alpha = to_double(key, v);
  } else if (key == "rank_ratio") {
    o.rank_ratio = to_double(key, v);
  } else if (key == "rank_offset") {
    o.rank_offset = to_int(key, v);
  } else if (key == "ls_shrink") {
    o.line_search.shrink = to_double(key, v);
  } else if (key == "ls_c1") {
    o.line_search.c1 = to_double(key, v);
  } else if (key == "ls_max_backtracks") {
    o.line_search.max_backtracks = static_cast<int>(to_int(key, v));
  } else if (key == "matvec_budget") {
    o.matvec_budget = to_int(key, v);
  } else if (key == "gamma_times_p") {
    o.gamma_times_p = to_bool(key, v);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (c.repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
  c.optim.validate();
  make_problem(c.problem);
  if (const auto names = optimizer_names(); std::find(names.begin(), names.end(), c.optimizer) == names.end()) {
    throw std::invalid_argument("config: unknown optimizer '" + c.optimizer + "'");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RunResult run_single(const ExperimentConfig& config, std::uint64_t seed) {
  const Setup s = setup(config, seed);
  const PinnObjective objective = make_objective(config, s, seed);
  return run_optimizer(config.optimizer, objective, s.theta0, s.optim);
}

void write_trace(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kTraceHeader << '\n';
  for (const RunRecord& r : records) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.6f", r.seconds);
    out << r.iteration << ',' << num(r.loss) << ',' << num(r.h1_rel_error) << ',' << num(r.mu) << ',' << r.ell << ','
        << r.pcg_iters << ',' << r.matvecs << ',' << secs << '\n';
  }
}

void write_summary(std::ostream& out, const ExperimentSummary& s) {
  nlohmann::json j;
  j["problem"] = s.problem;
  j["optimizer"] = s.optimizer;
  j["median_final_error"] = s.median_final_error;
  j["q25"] = s.q25;
  j["q75"] = s.q75;
  j["median_seconds"] = s.median_seconds;
  out << j.dump(2) << '\n';
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.output_dir);
  ExperimentSummary summary;
  summary.problem = config.problem;
  summary.optimizer = config.optimizer;
  std::vector<double> errors;
  std::vector<double> seconds;
  for (int r = 0; r < config.repetitions; ++r) {
    RepetitionResult rep;
    rep.seed = config.seed + static_cast<std::uint64_t>(r);
    rep.run = run_single(config, rep.seed);
    rep.trace = config.output_dir /
                (config.problem + "_" + config.optimizer + "_seed" + std::to_string(rep.seed) + ".csv");
    std::ofstream out(rep.trace);
    if (!out) throw std::runtime_error("cannot write " + rep.trace.string());
    write_trace(out, rep.run.records);
    if (!out) throw std::runtime_error("write failed for " + rep.trace.string());
    errors.push_back(rep.run.records.back().h1_rel_error);
    seconds.push_back(rep.run.records.back().seconds);
    summary.runs.push_back(std::move(rep));
  }
  summary.median_final_error = quantile(errors, 0.5);
  summary.q25 = quantile(errors, 0.25);
  summary.q75 = quantile(errors, 0.75);
  summary.median_seconds = quantile(seconds, 0.5);
  const auto path = config.output_dir / "summary.json";
  std::ofstream out(path);
  write_summary(out, summary);
  if (!out) throw std::runtime_error("write failed for " + path.string());
  return summary;
}

std::vector<double> normalized_spectrum(const LinearOperator<double>& g, Eigen::Index k) {
  const Eigen::MatrixXd dense = assemble_dense(g);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (dense + dense.transpose()),
                                                           Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
  const Eigen::Index n = ev.size();
  const double top = n > 0 ? ev[n - 1] : 0.0;
  if (!(top > 0.0)) throw std::domain_error("normalized_spectrum: operator has no positive eigenvalue");
  std::vector<double> out;
  for (Eigen::Index i = 0; i < std::min(k, n); ++i) out.push_back(std::max(0.0, ev[n - 1 - i]) / top);
  return out;
}

std::vector<double> dump_spectrum(const ExperimentConfig& config, std::uint64_t seed, Eigen::Index k,
                                  int iterations) {
  const Setup s = setup(config, seed);
  const PinnObjective objective = make_objective(config, s, seed);
  Eigen::VectorXd theta = s.theta0;
  if (iterations > 0) {
    NystromNgdConfig o = s.optim;
    o.iterations = iterations;
    theta = run_optimizer(config.optimizer, objective, theta, o).theta;
  }
  return normalized_spectrum(*objective.gramian(theta), k);
}

void write_spectrum(std::ostream& out, const std::vector<double>& values) {
  out << "index,normalized_eigenvalue\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << i + 1 << ',' << num(values[i]) << '\n';
}

}  // namespace nysngd
