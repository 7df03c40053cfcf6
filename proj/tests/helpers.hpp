#pragma once

#include <random>

#include "frmg/dualtime.hpp"
#include "frmg/fr_ops.hpp"
#include "frmg/schemes.hpp"

namespace frmg::test {

/// Merson's classical 5-stage method, used wherever a loaded multi-stage
/// tableau is needed.
inline schemes::ButcherTableau merson5() {
  nlohmann::json j;
  j["stages"] = 5;
  j["A"] = {
      {0.0, 0.0, 0.0, 0.0, 0.0},
      {1.0 / 3.0, 0.0, 0.0, 0.0, 0.0},
      {1.0 / 6.0, 1.0 / 6.0, 0.0, 0.0, 0.0},
      {1.0 / 8.0, 0.0, 3.0 / 8.0, 0.0, 0.0},
      {0.5, 0.0, -1.5, 2.0, 0.0},
  };
  j["b"] = {1.0 / 6.0, 0.0, 0.0, 2.0 / 3.0, 1.0 / 6.0};
  return schemes::load_tableau(j);
}

/// Random strictly-lower-triangular tableau with unit-sum weights.
inline schemes::ButcherTableau random_tableau(std::mt19937& rng, int stages) {
  std::uniform_real_distribution<double> u(-0.6, 1.0);
  schemes::ButcherTableau tab;
  tab.r = stages;
  tab.A = RMat::Zero(stages, stages);
  for (int i = 1; i < stages; ++i)
    for (int j = 0; j < i; ++j) tab.A(i, j) = u(rng);
  tab.b = RVec(stages);
  for (int i = 0; i < stages; ++i) tab.b[i] = u(rng) + 0.2;
  tab.b /= tab.b.sum();
  tab.c = tab.A.rowwise().sum();
  return tab;
}

/// One-step ERK update matrix for du/dtau = Q u, built by the literal stage
/// recursion (independent of the stability-polynomial route).
inline Mat erk_update_matrix(const schemes::ButcherTableau& tab, const Mat& q,
                             double dtau) {
  const int n = static_cast<int>(q.rows());
  Mat r = Mat::Zero(n, n);
  std::vector<Vec> stage(tab.r);
  for (int col = 0; col < n; ++col) {
    Vec e = Vec::Zero(n);
    e[col] = 1.0;
    for (int i = 0; i < tab.r; ++i) {
      Vec y = e;
      for (int j = 0; j < i; ++j) y += (dtau * tab.A(i, j)) * stage[j];
      stage[i] = q * y;
    }
    Vec out = e;
    for (int i = 0; i < tab.r; ++i) out += (dtau * tab.b[i]) * stage[i];
    r.col(col) = out;
  }
  return r;
}

}  // namespace frmg::test
