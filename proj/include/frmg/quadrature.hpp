#pragma once

#include <cmath>
#include <utility>

#include "frmg/types.hpp"

namespace frmg::quad {

/// Legendre polynomial P_n and its derivative at x, by upward recurrence.
/// The derivative recurrence P'_{n+1} = (2n+1) P_n + P'_{n-1} is a polynomial
/// identity, so it is valid at the interval endpoints as well.
inline std::pair<double, double> legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double pm1 = 1.0, dpm1 = 0.0;  // P_0, P'_0
  double p = x, dp = 1.0;        // P_1, P'_1
  for (int k = 1; k < n; ++k) {
    const double pnext  = ((2.0 * k + 1.0) * x * p - k * pm1) / (k + 1.0);
    const double dpnext = (2.0 * k + 1.0) * p + dpm1;
    pm1 = p;
    dpm1 = dp;
    p = pnext;
    dp = dpnext;
  }
  return {p, dp};
}

/// Roots of P_n on (-1, 1), ascending: the n-point Gauss--Legendre nodes.
inline RVec gauss_legendre_points(int n) {
  if (n < 1) throw InvalidInput("gauss_legendre_points: n must be >= 1");
  RVec x(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-type initial guess, then Newton.
    double xi = -std::cos(M_PI * (4.0 * i + 3.0) / (4.0 * n + 2.0));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, xi);
      const double dx = p / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[i] = xi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return x;
}

/// Gauss--Legendre weights for the given nodes: w_i = 2 / ((1-x^2) P'_n(x)^2).
inline RVec gauss_legendre_weights(const RVec& x) {
  const int n = static_cast<int>(x.size());
  RVec w(n);
  for (int i = 0; i < n; ++i) {
    const auto [p, dp] = legendre(n, x[i]);
    (void)p;
    w[i] = 2.0 / ((1.0 - x[i] * x[i]) * dp * dp);
  }
  return w;
}

/// Orthonormal Legendre Vandermonde: V(i,j) = sqrt((2j+1)/2) P_j(x_i).
/// With n = x.size() modes, V maps modal to nodal coefficients.
inline RMat vandermonde(const RVec& x) {
  const int n = static_cast<int>(x.size());
  RMat v(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      v(i, j) = std::sqrt((2.0 * j + 1.0) / 2.0) * legendre(j, x[i]).first;
  return v;
}

/// Barycentric weights of an interpolation point set.
inline RVec barycentric_weights(const RVec& x) {
  const int n = static_cast<int>(x.size());
  RVec w = RVec::Ones(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (k != j) w[j] /= (x[j] - x[k]);
  return w;
}

/// Nodal differentiation matrix: D(i,j) = l_j'(x_i) for the Lagrange basis on x.
inline RMat diff_matrix(const RVec& x) {
  const int n = static_cast<int>(x.size());
  const RVec w = barycentric_weights(x);
  RMat d = RMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      d(i, j) = (w[j] / w[i]) / (x[i] - x[j]);
      rowsum += d(i, j);
    }
    d(i, i) = -rowsum;  // rows of D annihilate constants
  }
  return d;
}

/// Row vector interpolating nodal values on x to the point xi: out[j] = l_j(xi).
inline RVec interp_row(const RVec& x, double xi) {
  const int n = static_cast<int>(x.size());
  RVec r(n);
  for (int j = 0; j < n; ++j) {
    double prod = 1.0;
    for (int k = 0; k < n; ++k)
      if (k != j) prod *= (xi - x[k]) / (x[j] - x[k]);
    r[j] = prod;
  }
  return r;
}

}  // namespace frmg::quad
