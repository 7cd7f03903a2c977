#pragma once

#include "nysngd/model/mlp.hpp"

#include <Eigen/Core>

#include <vector>

namespace nysngd {

/// Records one forward pass of a tanh MLP over a batch of points, carrying
/// value, input gradient and pure second input derivatives (a "jet") through
/// every layer as dense matrices. The record is the linearization point for
/// parameter-space JVPs (tangent propagated forward through the recorded
/// primal) and VJPs (one reverse sweep).
///
/// Jet matrices have one row per output and component-major columns: column
/// c * n + j holds component c of point j, with c = 0 the value, 1..d the
/// first derivatives and d+1..2d the second derivatives.
class NetworkTape {
 public:
  NetworkTape(const MlpTopology& topology, const Eigen::VectorXd& theta, const Eigen::MatrixXd& points);

  const MlpTopology& topology() const { return topo_; }
  Eigen::Index points() const { return n_; }
  int input_dim() const { return d_; }
  int components() const { return 1 + 2 * d_; }
  Eigen::Index param_count() const { return topo_.param_count(); }

  const Eigen::MatrixXd& output() const { return output_; }
  double output(int component, Eigen::Index point, int out = 0) const {
    return output_(out, component * n_ + point);
  }

  /// Tangent jets of the outputs for parameter direction v.
  Eigen::MatrixXd jvp(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  /// Parameter cotangent for output-jet cotangent g (same shape as output()).
  Eigen::VectorXd vjp(const Eigen::Ref<const Eigen::MatrixXd>& g) const;

 private:
  Eigen::MatrixXd activation_jvp(std::size_t layer, const Eigen::MatrixXd& dz) const;
  Eigen::MatrixXd activation_vjp(std::size_t layer, const Eigen::MatrixXd& ga) const;

  MlpTopology topo_;
  Eigen::VectorXd theta_;
  Eigen::Index n_ = 0;
  int d_ = 0;
  std::vector<Eigen::MatrixXd> inputs_;  // jets entering each affine layer
  std::vector<Eigen::MatrixXd> pre_;     // pre-activation jets of hidden layers
  std::vector<Eigen::ArrayXXd> t_;       // tanh of the value component
  std::vector<Eigen::ArrayXXd> s_;       // 1 - t^2
  Eigen::MatrixXd output_;
};

}  // namespace nysngd
