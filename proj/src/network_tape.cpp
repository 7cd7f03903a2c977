#include "nysngd/autodiff/network_tape.hpp"

#include "nysngd/autodiff/derivatives.hpp"

#include <stdexcept>

namespace nysngd {

namespace {

Eigen::Map<const Eigen::MatrixXd> weight_of(const MlpTopology& topo, const double* base, int l) {
  return {base + topo.weight_offset(l), topo.fan_out(l), topo.fan_in(l)};
}

Eigen::Map<const Eigen::VectorXd> bias_of(const MlpTopology& topo, const double* base, int l) {
  return {base + topo.bias_offset(l), topo.fan_out(l)};
}

}  // namespace

NetworkTape::NetworkTape(const MlpTopology& topology, const Eigen::VectorXd& theta, const Eigen::MatrixXd& points)
    : topo_(topology), theta_(theta), n_(points.cols()), d_(static_cast<int>(points.rows())) {
  if (topo_.activation() != Activation::kTanh) {
    throw std::invalid_argument("NetworkTape: only tanh networks carry second input derivatives");
  }
  if (points.rows() != topo_.input_dim()) throw std::invalid_argument("NetworkTape: point dimension mismatch");
  if (theta.size() != topo_.param_count()) throw std::invalid_argument("NetworkTape: parameter count mismatch");

  const int C = components();
  Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(d_, C * n_);
  x0.leftCols(n_) = points;
  for (int i = 0; i < d_; ++i) x0.row(i).segment((1 + i) * n_, n_).setOnes();
  inputs_.push_back(std::move(x0));

  const int L = topo_.layers();
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = weight_of(topo_, theta_.data(), l) * inputs_.back();
    z.leftCols(n_).colwise() += bias_of(topo_, theta_.data(), l);
    if (l + 1 == L) {
      output_ = std::move(z);
      break;
    }
    const Eigen::ArrayXXd t = z.leftCols(n_).array().tanh();
    const Eigen::ArrayXXd s = 1.0 - t.square();
    const Eigen::ArrayXXd q = -2.0 * t * s;
    Eigen::MatrixXd a(z.rows(), z.cols());
    a.leftCols(n_) = t.matrix();
    for (int i = 0; i < d_; ++i) {
      const auto zi = z.middleCols((1 + i) * n_, n_).array();
      const auto zii = z.middleCols((1 + d_ + i) * n_, n_).array();
      a.middleCols((1 + i) * n_, n_) = (s * zi).matrix();
      a.middleCols((1 + d_ + i) * n_, n_) = (s * zii + q * zi.square()).matrix();
    }
    pre_.push_back(std::move(z));
    t_.push_back(t);
    s_.push_back(s);
    inputs_.push_back(std::move(a));
  }

  if (!output_.allFinite()) {
    for (Eigen::Index j = 0; j < output_.cols(); ++j) {
      if (!output_.col(j).allFinite()) throw NonFiniteError("NetworkTape: non-finite jet", j % n_);
    }
  }
}

Eigen::MatrixXd NetworkTape::activation_jvp(std::size_t layer, const Eigen::MatrixXd& dz) const {
  const Eigen::MatrixXd& z = pre_[layer];
  const Eigen::ArrayXXd& t = t_[layer];
  const Eigen::ArrayXXd& s = s_[layer];
  const Eigen::ArrayXXd q = -2.0 * t * s;
  const Eigen::ArrayXXd dt = s * dz.leftCols(n_).array();
  const Eigen::ArrayXXd ds = -2.0 * t * dt;
  const Eigen::ArrayXXd dq = -2.0 * (dt * s + t * ds);
  Eigen::MatrixXd da(dz.rows(), dz.cols());
  da.leftCols(n_) = dt.matrix();
  for (int i = 0; i < d_; ++i) {
    const auto zi = z.middleCols((1 + i) * n_, n_).array();
    const auto zii = z.middleCols((1 + d_ + i) * n_, n_).array();
    const auto dzi = dz.middleCols((1 + i) * n_, n_).array();
    const auto dzii = dz.middleCols((1 + d_ + i) * n_, n_).array();
    da.middleCols((1 + i) * n_, n_) = (ds * zi + s * dzi).matrix();
    da.middleCols((1 + d_ + i) * n_, n_) = (ds * zii + s * dzii + dq * zi.square() + 2.0 * q * zi * dzi).matrix();
  }
  return da;
}

Eigen::MatrixXd NetworkTape::activation_vjp(std::size_t layer, const Eigen::MatrixXd& ga) const {
  const Eigen::MatrixXd& z = pre_[layer];
  const Eigen::ArrayXXd& t = t_[layer];
  const Eigen::ArrayXXd& s = s_[layer];
  const Eigen::ArrayXXd q = -2.0 * t * s;
  Eigen::MatrixXd gz(ga.rows(), ga.cols());
  Eigen::ArrayXXd gs = Eigen::ArrayXXd::Zero(ga.rows(), n_);
  Eigen::ArrayXXd gq = Eigen::ArrayXXd::Zero(ga.rows(), n_);
  for (int i = 0; i < d_; ++i) {
    const auto zi = z.middleCols((1 + i) * n_, n_).array();
    const auto zii = z.middleCols((1 + d_ + i) * n_, n_).array();
    const auto gai = ga.middleCols((1 + i) * n_, n_).array();
    const auto gaii = ga.middleCols((1 + d_ + i) * n_, n_).array();
    gz.middleCols((1 + i) * n_, n_) = (s * gai + 2.0 * q * zi * gaii).matrix();
    gz.middleCols((1 + d_ + i) * n_, n_) = (s * gaii).matrix();
    gs += gai * zi + gaii * zii;
    gq += gaii * zi.square();
  }
  // q = -2 t s, s = 1 - t^2, t = tanh(z0)
  gs += -2.0 * t * gq;
  Eigen::ArrayXXd gt = ga.leftCols(n_).array() - 2.0 * s * gq;
  gt += -2.0 * t * gs;
  gz.leftCols(n_) = (s * gt).matrix();
  return gz;
}

Eigen::MatrixXd NetworkTape::jvp(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != param_count()) throw std::invalid_argument("NetworkTape::jvp: dimension mismatch");
  const int L = topo_.layers();
  Eigen::MatrixXd da;
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd dz = weight_of(topo_, v.data(), l) * inputs_[static_cast<std::size_t>(l)];
    if (l > 0) dz.noalias() += weight_of(topo_, theta_.data(), l) * da;
    dz.leftCols(n_).colwise() += bias_of(topo_, v.data(), l);
    if (l + 1 == L) return dz;
    da = activation_jvp(static_cast<std::size_t>(l), dz);
  }
  return da;
}

Eigen::VectorXd NetworkTape::vjp(const Eigen::Ref<const Eigen::MatrixXd>& g) const {
  if (g.rows() != output_.rows() || g.cols() != output_.cols()) {
    throw std::invalid_argument("NetworkTape::vjp: cotangent shape mismatch");
  }
  Eigen::VectorXd out(param_count());
  Eigen::MatrixXd gz = g;
  for (int l = topo_.layers() - 1; l >= 0; --l) {
    Eigen::Map<Eigen::MatrixXd> gw(out.data() + topo_.weight_offset(l), topo_.fan_out(l), topo_.fan_in(l));
    gw.noalias() = gz * inputs_[static_cast<std::size_t>(l)].transpose();
    Eigen::Map<Eigen::VectorXd>(out.data() + topo_.bias_offset(l), topo_.fan_out(l)) = gz.leftCols(n_).rowwise().sum();
    if (l == 0) break;
    const Eigen::MatrixXd ga = weight_of(topo_, theta_.data(), l).transpose() * gz;
    gz = activation_vjp(static_cast<std::size_t>(l - 1), ga);
  }
  if (!out.allFinite()) throw NonFiniteError("NetworkTape::vjp: non-finite cotangent", -1);
  return out;
}

}  // namespace nysngd
