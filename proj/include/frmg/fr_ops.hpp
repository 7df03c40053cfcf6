#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "frmg/quadrature.hpp"
#include "frmg/types.hpp"

namespace frmg::fr {

/// Nodal flux-reconstruction operators for one reference element of degree p,
/// with DG-recovering (Radau) correction functions.
///
/// Cm/C0/Cp form the three-element stencil of the advective first derivative
/// (2/h scaling applied on assembly). The diffusive derivative nests two
/// first derivatives built with its own upwinding factor; the five B matrices
/// are the resulting compositions over a five-element stencil.
struct FrOperatorSet {
  int p = 0;
  RVec x;        // p+1 solution points in [-1, 1]
  RMat D;        // nodal differentiation matrix
  RVec gL, gR;   // correction-function gradients at the points
  RVec lL, lR;   // interpolation of nodal values to xi = -1 / xi = +1
  double alpha_a = 1.0;  // advective upwinding in [0.5, 1]
  double alpha_d = 0.5;  // diffusive upwinding in [0.5, 1]

  RMat Cm, C0, Cp;                 // advective stencil blocks (alpha_a)
  RMat Cdm, Cd0, Cdp;              // diffusive first-derivative blocks (alpha_d)
  RMat Bm2, Bm, B0, Bp, Bp2;       // nested second-derivative blocks
};

namespace detail {

/// Correction-function gradients for the DG-recovering choice: the left
/// correction is the degree-(p+1) right Radau polynomial and the right
/// correction the left Radau polynomial, differentiated analytically.
inline void radau_gradients(int p, const RVec& x, RVec& gl, RVec& gr) {
  const int n = static_cast<int>(x.size());
  gl.resize(n);
  gr.resize(n);
  const double sign = (p % 2 == 0) ? -1.0 : 1.0;  // (-1)^{p+1}
  for (int i = 0; i < n; ++i) {
    const double dp1 = quad::legendre(p + 1, x[i]).second;
    const double dp0 = quad::legendre(p, x[i]).second;
    gl[i] = 0.5 * sign * (dp1 - dp0);
    gr[i] = 0.5 * (dp1 + dp0);
  }
}

struct CTriple {
  RMat m, z, p;
};

inline CTriple c_matrices(const RMat& d, const RVec& gl, const RVec& gr,
                          const RVec& ll, const RVec& lr, double alpha) {
  CTriple c;
  c.m = alpha * (gl * lr.transpose());
  c.z = d - alpha * (gl * ll.transpose()) - (1.0 - alpha) * (gr * lr.transpose());
  c.p = (1.0 - alpha) * (gr * ll.transpose());
  return c;
}

}  // namespace detail

/// Builds the operator set on an explicit point set. Intended for tests that
/// need non-Gauss points; the public builder below uses Gauss--Legendre.
inline FrOperatorSet build_fr_operators_at(const RVec& points, double alpha_a,
                                           double alpha_d) {
  const int p = static_cast<int>(points.size()) - 1;
  if (p < 0) throw InvalidInput("build_fr_operators: p must be >= 0");
  for (double a : {alpha_a, alpha_d})
    if (a < 0.5 || a > 1.0)
      throw InvalidInput("build_fr_operators: alpha must lie in [0.5, 1]");

  FrOperatorSet ops;
  ops.p = p;
  ops.x = points;
  ops.alpha_a = alpha_a;
  ops.alpha_d = alpha_d;
  ops.D = quad::diff_matrix(points);
  detail::radau_gradients(p, points, ops.gL, ops.gR);
  ops.lL = quad::interp_row(points, -1.0);
  ops.lR = quad::interp_row(points, +1.0);

  const auto ca = detail::c_matrices(ops.D, ops.gL, ops.gR, ops.lL, ops.lR, alpha_a);
  ops.Cm = ca.m;
  ops.C0 = ca.z;
  ops.Cp = ca.p;

  const auto cd = detail::c_matrices(ops.D, ops.gL, ops.gR, ops.lL, ops.lR, alpha_d);
  ops.Cdm = cd.m;
  ops.Cd0 = cd.z;
  ops.Cdp = cd.p;

  ops.Bm2 = cd.m * cd.m;
  ops.Bm = cd.m * cd.z + cd.z * cd.m;
  ops.B0 = cd.m * cd.p + cd.z * cd.z + cd.p * cd.m;
  ops.Bp = cd.z * cd.p + cd.p * cd.z;
  ops.Bp2 = cd.p * cd.p;
  return ops;
}

/// FR operators of degree p at Gauss--Legendre solution points.
inline FrOperatorSet build_fr_operators(int p, double alpha_a, double alpha_d) {
  if (p < 0) throw InvalidInput("build_fr_operators: p must be >= 0");
  return build_fr_operators_at(quad::gauss_legendre_points(p + 1), alpha_a, alpha_d);
}

/// Wavenumber-parameterized single-element operator of the periodic scheme:
///   Qa u = du/dx,  Qd u = d2u/dx2,  Q = -Qa + mu Qd = i k W diag(Lambda) W^-1.
/// Eigenpairs are ordered so that index 0 is the mode whose weight in the
/// projection of the exact wave is largest (the physical mode).
struct BlochOperator {
  FrOperatorSet base;
  double h = 1.0;
  double mu = 0.0;
  double k = 1.0;
  Mat Qa, Qd, Q;
  Mat W;        // eigenvectors of Q, primary mode first
  Vec LambdaQ;  // Q = i k W diag(LambdaQ) W^-1
  Vec eigQ;     // eigenvalues of Q itself (= i k LambdaQ)
  Vec beta;     // mode weights of the exact wave, matching the ordering

  /// Physical solution-point positions within one element of width h.
  RVec points_physical() const {
    return (base.x.array() + 1.0) * (0.5 * h);
  }

  /// Exact wave sampled at the element's solution points (equals W * beta).
  Vec wave_vector() const {
    const RVec xp = points_physical();
    Vec v(xp.size());
    for (int j = 0; j < xp.size(); ++j) v[j] = std::exp(iunit * k * xp[j]);
    return v;
  }
};

/// Assembles the Bloch operator at wavenumber k for element width h and
/// viscosity mu, and eigendecomposes it. k = 0 is excluded (rank loss).
inline BlochOperator build_bloch(const FrOperatorSet& base, double h, double mu,
                                 double k) {
  if (h <= 0.0) throw InvalidInput("build_bloch: h must be positive");
  if (mu < 0.0) throw InvalidInput("build_bloch: mu must be nonnegative");
  if (k == 0.0) throw InvalidInput("build_bloch: k = 0 is excluded");

  BlochOperator op;
  op.base = base;
  op.h = h;
  op.mu = mu;
  op.k = k;

  const cplx em = std::exp(-iunit * k * h);
  const cplx ep = std::exp(iunit * k * h);
  op.Qa = (2.0 / h) * (em * base.Cm + base.C0.cast<cplx>() + ep * base.Cp);
  op.Qd = (4.0 / (h * h)) *
          (em * em * base.Bm2 + em * base.Bm + base.B0.cast<cplx>() +
           ep * base.Bp + ep * ep * base.Bp2);
  op.Q = -op.Qa + mu * op.Qd;

  Eigen::ComplexEigenSolver<Mat> es(op.Q);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "build_bloch: eigendecomposition failed (p=" << base.p << ", k=" << k
        << ", alpha=(" << base.alpha_a << "," << base.alpha_d << "))";
    throw NumericalError(msg.str());
  }
  Mat w = es.eigenvectors();
  Vec mu_q = es.eigenvalues();

  // Mode weights of the unit-normalized exact wave; used both as output and
  // to identify the physical mode. With unit-norm eigenvectors this makes
  // |beta_0| -> 1 for a well-resolved wave.
  Vec v = op.wave_vector();
  v /= v.norm();
  Eigen::PartialPivLU<Mat> lu(w);
  Vec beta = lu.solve(v);
  const double resid = (w * beta - v).norm();
  if (!(resid <= 1e-8 * v.norm())) {
    std::ostringstream msg;
    msg << "build_bloch: eigenvector matrix is numerically singular (p="
        << base.p << ", k=" << k << ")";
    throw NumericalError(msg.str());
  }

  const int n = base.p + 1;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(beta[a]) > std::abs(beta[b]);
  });

  op.W = Mat(n, n);
  op.eigQ = Vec(n);
  op.beta = Vec(n);
  for (int j = 0; j < n; ++j) {
    op.W.col(j) = w.col(order[j]);
    op.eigQ[j] = mu_q[order[j]];
    op.beta[j] = beta[order[j]];
  }
  op.LambdaQ = op.eigQ / (iunit * k);

  const double qnorm = op.Q.norm();
  const Mat recon = op.W * op.eigQ.asDiagonal() * op.W.inverse();
  if (!((op.Q - recon).norm() <= 1e-9 * qnorm)) {
    std::ostringstream msg;
    msg << "build_bloch: eigendecomposition reconstruction failed (p=" << base.p
        << ", k=" << k << ", alpha=(" << base.alpha_a << "," << base.alpha_d
        << "))";
    throw NumericalError(msg.str());
  }
  return op;
}

/// Weights beta solving W beta = v, where v samples the exact wave at the
/// element's points. The primary mode is the entry of largest magnitude
/// (index 0 by the ordering fixed at construction).
inline Vec mode_weights(const BlochOperator& op) { return op.beta; }

}  // namespace frmg::fr
