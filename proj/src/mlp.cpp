#include "nysngd/model/mlp.hpp"

#include <random>

namespace nysngd {

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

MlpTopology::MlpTopology(std::vector<int> widths, Activation activation)
    : widths_(std::move(widths)), activation_(activation) {
  if (widths_.size() < 2) throw std::invalid_argument("MlpTopology: need at least input and output widths");
  for (int w : widths_) {
    if (w < 1) throw std::invalid_argument("MlpTopology: widths must be >= 1");
  }
  offsets_.assign(1, 0);
  for (int l = 0; l < layers(); ++l) {
    offsets_.push_back(offsets_.back() + static_cast<Eigen::Index>(fan_out(l)) * fan_in(l) + fan_out(l));
  }
}

ParamVector::ParamVector(MlpTopology topology, Eigen::VectorXd values)
    : topology_(std::move(topology)), values_(std::move(values)) {
  if (values_.size() != topology_.param_count()) {
    throw std::invalid_argument("ParamVector: length does not match topology");
  }
}

Eigen::VectorXd concat(std::span<const ParamVector> parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p.values();
    at += p.size();
  }
  return out;
}

ParamVector init(const MlpTopology& topology, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamVector theta(topology);
  for (int l = 0; l < topology.layers(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(topology.fan_in(l)));
    auto w = theta.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * normal(rng);
    }
  }
  return theta;
}

}  // namespace nysngd
