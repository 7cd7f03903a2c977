#pragma once

#include "nysngd/autodiff/dual.hpp"

#include <Eigen/Core>

#include <stdexcept>

namespace nysngd {

/// Largest input dimension handled by point jets (space-time problems use 2).
inline constexpr int kMaxJetDim = 4;

template <typename S>
using JetVector = Eigen::Matrix<S, Eigen::Dynamic, 1, 0, kMaxJetDim, 1>;

/// Value, input gradient and pure second input derivatives of a scalar
/// field at one point.
template <typename S>
struct PointJet {
  S value{0.0};
  JetVector<S> gradient;
  JetVector<S> second;  // d^2 u / dx_i^2

  PointJet() = default;
  explicit PointJet(int dim)
      : gradient(JetVector<S>::Constant(dim, S(0.0))), second(JetVector<S>::Constant(dim, S(0.0))) {}

  int dim() const { return static_cast<int>(gradient.size()); }

  S laplacian() const {
    S acc(0.0);
    for (int i = 0; i < dim(); ++i) acc = acc + second[i];
    return acc;
  }

  /// Number of scalar components: value, d first and d second derivatives.
  int components() const { return 1 + 2 * dim(); }

  S& component(int c) {
    if (c == 0) return value;
    return c <= dim() ? gradient[c - 1] : second[c - 1 - dim()];
  }
  const S& component(int c) const { return const_cast<PointJet*>(this)->component(c); }
};

/// Applies `freeze` componentwise.
template <typename S>
PointJet<S> freeze(const PointJet<S>& j) {
  PointJet<S> out(j.dim());
  for (int c = 0; c < j.components(); ++c) out.component(c) = freeze(j.component(c));
  return out;
}

/// Input derivatives of a scalar field by forward-over-forward duals, one
/// nested pass per coordinate. `field` must accept VectorX<Dual<Dual<S>>>
/// and return Dual<Dual<S>>. The result stays differentiable in whatever S
/// carries (parameter tangents or tape variables).
template <typename S, typename Field>
PointJet<S> input_derivatives(Field&& field, const Eigen::Ref<const Eigen::VectorXd>& x) {
  using D2 = Dual<Dual<S>>;
  const int d = static_cast<int>(x.size());
  if (d < 1 || d > kMaxJetDim) throw std::invalid_argument("input_derivatives: unsupported input dimension");
  PointJet<S> jet(d);
  VectorX<D2> xin(d);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      const Dual<S> seed = (k == i) ? Dual<S>(S(x[k]), S(1.0)) : Dual<S>(S(x[k]), S(0.0));
      xin[k] = (k == i) ? D2(seed, Dual<S>(S(1.0), S(0.0))) : D2(seed, Dual<S>(S(0.0), S(0.0)));
    }
    const D2 u = field(xin);
    if (i == 0) jet.value = u.val.val;
    jet.gradient[i] = u.val.tan;
    jet.second[i] = u.tan.tan;
  }
  return jet;
}

}  // namespace nysngd
