#pragma once

#include "nysngd/autodiff/dual.hpp"
#include "nysngd/autodiff/jet.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nysngd {

enum class Activation { kTanh, kRelu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Layer widths n_0 = d, n_1..n_L hidden, n_{L+1} = d'. No activation on the
/// last layer.
class MlpTopology {
 public:
  MlpTopology() = default;
  MlpTopology(std::vector<int> widths, Activation activation = Activation::kTanh);
  MlpTopology(std::initializer_list<int> widths, Activation activation = Activation::kTanh)
      : MlpTopology(std::vector<int>(widths), activation) {}

  const std::vector<int>& widths() const { return widths_; }
  Activation activation() const { return activation_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  /// Number of affine layers, L + 1.
  int layers() const { return static_cast<int>(widths_.size()) - 1; }
  int fan_in(int layer) const { return widths_[static_cast<std::size_t>(layer)]; }
  int fan_out(int layer) const { return widths_[static_cast<std::size_t>(layer) + 1]; }
  Eigen::Index param_count() const { return offsets_.back(); }
  /// Offset of W_layer (column-major, fan_out x fan_in) in the flat vector;
  /// the bias follows immediately.
  Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  Eigen::Index bias_offset(int layer) const {
    return weight_offset(layer) + static_cast<Eigen::Index>(fan_out(layer)) * fan_in(layer);
  }

  friend bool operator==(const MlpTopology& a, const MlpTopology& b) {
    return a.widths_ == b.widths_ && a.activation_ == b.activation_;
  }

 private:
  std::vector<int> widths_;
  Activation activation_ = Activation::kTanh;
  std::vector<Eigen::Index> offsets_{0};
};

/// Flat parameter vector [W_1, b_1, ..., W_{L+1}, b_{L+1}] with its topology.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(MlpTopology topology, Eigen::VectorXd values);
  explicit ParamVector(MlpTopology topology)
      : ParamVector(topology, Eigen::VectorXd::Zero(topology.param_count())) {}

  const MlpTopology& topology() const { return topology_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  Eigen::Index size() const { return values_.size(); }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const {
    return {values_.data() + topology_.weight_offset(layer), topology_.fan_out(layer), topology_.fan_in(layer)};
  }
  Eigen::Map<Eigen::MatrixXd> weight(int layer) {
    return {values_.data() + topology_.weight_offset(layer), topology_.fan_out(layer), topology_.fan_in(layer)};
  }
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const {
    return {values_.data() + topology_.bias_offset(layer), topology_.fan_out(layer)};
  }
  Eigen::Map<Eigen::VectorXd> bias(int layer) {
    return {values_.data() + topology_.bias_offset(layer), topology_.fan_out(layer)};
  }

 private:
  MlpTopology topology_;
  Eigen::VectorXd values_;
};

/// Concatenates parameter vectors of several networks (e.g. one per field
/// of a system) into one flat vector; slices follow argument order.
Eigen::VectorXd concat(std::span<const ParamVector> parts);

/// Deterministic init: W ~ N(0, 1/fan_in), b = 0.
ParamVector init(const MlpTopology& topology, std::uint64_t seed);

template <typename A>
A activate(Activation act, const A& z) {
  using std::tanh;
  switch (act) {
    case Activation::kTanh:
      return tanh(z);
    case Activation::kRelu:
      return primal(z) > 0.0 ? z : A(0.0);
  }
  return z;
}

/// Network output at x. Parameters of scalar type P are lifted into the
/// activation scalar type A (A may nest input tangents on top of P).
template <typename A, typename P>
VectorX<A> forward(const MlpTopology& topo, const VectorX<P>& theta, const VectorX<A>& x) {
  if (x.size() != topo.input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
  if (theta.size() != topo.param_count()) throw std::invalid_argument("forward: parameter count mismatch");
  VectorX<A> cur = x;
  for (int l = 0; l < topo.layers(); ++l) {
    const int nin = topo.fan_in(l);
    const int nout = topo.fan_out(l);
    const Eigen::Index w0 = topo.weight_offset(l);
    const Eigen::Index b0 = topo.bias_offset(l);
    VectorX<A> next(nout);
    for (int i = 0; i < nout; ++i) {
      A acc = lift<A>(theta[b0 + i]);
      for (int j = 0; j < nin; ++j) acc = acc + lift<A>(theta[w0 + static_cast<Eigen::Index>(j) * nout + i]) * cur[j];
      next[i] = (l + 1 < topo.layers()) ? activate(topo.activation(), acc) : acc;
    }
    cur = std::move(next);
  }
  return cur;
}

inline Eigen::VectorXd forward(const ParamVector& theta, const Eigen::VectorXd& x) {
  return forward<double, double>(theta.topology(), theta.values(), x);
}

/// Value, input gradient and pure second derivatives of output 0 at x,
/// differentiable in the parameter scalar S.
template <typename S>
PointJet<S> network_jet(const MlpTopology& topo, const VectorX<S>& theta,
                        const Eigen::Ref<const Eigen::VectorXd>& x, int output = 0) {
  if (topo.activation() != Activation::kTanh) {
    throw std::invalid_argument("network_jet: activation " + to_string(topo.activation()) +
                                " has no usable second derivative");
  }
  auto field = [&](const VectorX<Dual<Dual<S>>>& xin) { return forward(topo, theta, xin)[output]; };
  return input_derivatives<S>(field, x);
}

}  // namespace nysngd
