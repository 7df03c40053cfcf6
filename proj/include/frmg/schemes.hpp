#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "frmg/types.hpp"

namespace frmg::schemes {

inline constexpr int kMaxStages = 16;

/// Explicit Runge--Kutta scheme in Butcher form. A is strictly lower
/// triangular; c holds the row sums of A. Immutable after construction.
struct ButcherTableau {
  int r = 0;   // stage count
  RMat A;      // r x r, strictly lower triangular
  RVec b;      // length r
  RVec c;      // length r, c_i = sum_j A(i,j)

  /// b^T A^j e for j = 0 .. r-1. A is nilpotent, so these are the only
  /// nonzero terms of the Neumann series of (I - zA)^{-1}.
  std::vector<double> stage_sums() const {
    std::vector<double> s(r);
    RVec v = RVec::Ones(r);  // A^j e
    for (int j = 0; j < r; ++j) {
      s[j] = b.dot(v);
      v = A * v;
    }
    return s;
  }
};

/// Backward-difference formula of order s: coefficients B_0 .. B_s with
/// u_{n+1} = -sum_{i<s} B_{i+1} u_{n-i} + dt B_0 u'_{n+1}.
struct BdfScheme {
  int s = 0;
  RVec B;  // length s+1
};

namespace detail {

inline void validate_tableau(const ButcherTableau& tab, double b_sum_tol,
                             const std::string& origin) {
  if (tab.r < 1 || tab.r > kMaxStages)
    throw InvalidInput(origin + ": stage count must be in [1, " +
                       std::to_string(kMaxStages) + "]");
  if (tab.A.rows() != tab.r || tab.A.cols() != tab.r || tab.b.size() != tab.r)
    throw InvalidInput(origin + ": A must be r x r and b length r");
  for (int i = 0; i < tab.r; ++i)
    for (int j = i; j < tab.r; ++j)
      if (tab.A(i, j) != 0.0)
        throw InvalidInput(origin + ": A is not strictly lower triangular at (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");
  if (std::abs(tab.b.sum() - 1.0) > b_sum_tol)
    throw InvalidInput(origin + ": b does not sum to 1 (sum = " +
                       std::to_string(tab.b.sum()) + ")");
}

}  // namespace detail

/// BDF coefficients for order 1, 2 or 3, from the exact rationals.
inline BdfScheme make_bdf(int order) {
  BdfScheme bdf;
  bdf.s = order;
  switch (order) {
    case 1:
      bdf.B = RVec(2);
      bdf.B << 1.0, -1.0;
      break;
    case 2:
      bdf.B = RVec(3);
      bdf.B << 2.0 / 3.0, -4.0 / 3.0, 1.0 / 3.0;
      break;
    case 3:
      bdf.B = RVec(4);
      bdf.B << 6.0 / 11.0, -18.0 / 11.0, 9.0 / 11.0, -2.0 / 11.0;
      break;
    default:
      throw InvalidInput("make_bdf: unsupported order " + std::to_string(order) +
                         " (supported: 1, 2, 3)");
  }
  return bdf;
}

/// Three-stage, third-order strong-stability-preserving RK scheme.
inline ButcherTableau make_ssprk3() {
  ButcherTableau tab;
  tab.r = 3;
  tab.A = RMat::Zero(3, 3);
  tab.A(1, 0) = 1.0;
  tab.A(2, 0) = 0.25;
  tab.A(2, 1) = 0.25;
  tab.b = RVec(3);
  tab.b << 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0;
  tab.c = tab.A.rowwise().sum();
  detail::validate_tableau(tab, 1e-12, "make_ssprk3");
  return tab;
}

/// Builds a tableau from a config record with keys `stages`, `A` (full rows,
/// row-major) and `b`. c is computed as the row sums of A. Rejects schemes
/// that are not strictly lower triangular or whose weights do not sum to 1.
inline ButcherTableau load_tableau(const nlohmann::json& src) {
  ButcherTableau tab;
  if (!src.contains("stages") || !src.contains("A") || !src.contains("b"))
    throw InvalidInput("load_tableau: record needs keys stages, A, b");
  tab.r = src.at("stages").get<int>();
  if (tab.r < 1 || tab.r > kMaxStages)
    throw InvalidInput("load_tableau: stages must be in [1, " +
                       std::to_string(kMaxStages) + "]");
  const auto& a = src.at("A");
  if (!a.is_array() || static_cast<int>(a.size()) != tab.r)
    throw InvalidInput("load_tableau: A must have one row per stage");
  tab.A = RMat::Zero(tab.r, tab.r);
  for (int i = 0; i < tab.r; ++i) {
    const auto& row = a.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != tab.r)
      throw InvalidInput("load_tableau: A row " + std::to_string(i) +
                         " must have length stages");
    for (int j = 0; j < tab.r; ++j) tab.A(i, j) = row.at(j).get<double>();
  }
  const auto& b = src.at("b");
  if (!b.is_array() || static_cast<int>(b.size()) != tab.r)
    throw InvalidInput("load_tableau: b must have length stages");
  tab.b = RVec(tab.r);
  for (int i = 0; i < tab.r; ++i) tab.b[i] = b.at(i).get<double>();
  tab.c = tab.A.rowwise().sum();
  detail::validate_tableau(tab, 1e-9, "load_tableau");
  return tab;
}

/// Coefficients of the pseudo-step amplification split: the update reads
///   u_{m+1} = P(z) u_m - C(z) * sum_l B_{l+1} u_{n-l},   z = lambda dtau,
/// with P(z) = sum_j gamma_j z^j (degree r) and C(z) = sum_j kappa_j z^j
/// (degree r-1). P + C equals the plain ERK stability polynomial R.
struct StabilityCoeffs {
  RVec gamma;  // length r+1
  RVec kappa;  // length r
};

/// Closed-form expansion of P and C for the coupled pseudo-time update.
/// A is nilpotent, so (I - zA)^{-1} e = sum_j z^j A^j e terminates and the
/// coefficients are exact; no fitting is involved.
inline StabilityCoeffs stability_polynomial(const ButcherTableau& tab,
                                            const BdfScheme& bdf,
                                            double tau_over_t) {
  if (tau_over_t <= 0.0)
    throw InvalidInput("stability_polynomial: dtau/dt must be positive");
  const auto s = tab.stage_sums();
  const double f = tau_over_t / bdf.B[0];
  StabilityCoeffs out;
  out.gamma = RVec::Zero(tab.r + 1);
  out.kappa = RVec::Zero(tab.r);
  out.gamma[0] = 1.0 - f * s[0];
  for (int j = 1; j <= tab.r; ++j) {
    const double s_next = (j < tab.r) ? s[j] : 0.0;
    out.gamma[j] = s[j - 1] - f * s_next;
  }
  for (int j = 0; j < tab.r; ++j) out.kappa[j] = f * s[j];
  return out;
}

/// Coefficients of the plain ERK stability polynomial
/// R(z) = 1 + sum_{j>=1} (b^T A^{j-1} e) z^j.
inline RVec erk_polynomial(const ButcherTableau& tab) {
  const auto s = tab.stage_sums();
  RVec r = RVec::Zero(tab.r + 1);
  r[0] = 1.0;
  for (int j = 1; j <= tab.r; ++j) r[j] = s[j - 1];
  return r;
}

/// Horner evaluation of a real-coefficient polynomial at complex z.
inline cplx eval_poly(const RVec& coeffs, cplx z) {
  cplx acc{0.0, 0.0};
  for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j)
    acc = acc * z + coeffs[j];
  return acc;
}

}  // namespace frmg::schemes
