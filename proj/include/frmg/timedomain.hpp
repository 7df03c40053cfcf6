#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <vector>

#include "frmg/dualtime.hpp"
#include "frmg/fr_ops.hpp"
#include "frmg/pmg.hpp"
#include "frmg/types.hpp"

namespace frmg::td {

/// Uniform periodic 1D mesh of n_elem elements of width h, degree p. The
/// global state vector stores the p+1 nodal values of each element
/// contiguously, element 0 first.
struct Grid1D {
  int n_elem = 0;
  double h = 1.0;
  int p = 0;

  int block() const { return p + 1; }
  int size() const { return n_elem * (p + 1); }
  double length() const { return n_elem * h; }
};

/// Physical node coordinate of element e, node j.
inline double node_x(const Grid1D& grid, const RVec& points, int e, int j) {
  return e * grid.h + (points[j] + 1.0) * 0.5 * grid.h;
}

/// Samples exp(i k x) at every node of the periodic grid.
inline Vec sample_wave(const Grid1D& grid, const fr::FrOperatorSet& ops, double k) {
  Vec u(grid.size());
  for (int e = 0; e < grid.n_elem; ++e)
    for (int j = 0; j < grid.block(); ++j)
      u[e * grid.block() + j] = std::exp(iunit * k * node_x(grid, ops.x, e, j));
  return u;
}

namespace detail {

/// One first-derivative application with the given stencil blocks,
/// periodic in the element index.
inline Vec first_derivative(const Vec& u, const Grid1D& grid, const RMat& cm,
                            const RMat& c0, const RMat& cp) {
  const int nb = grid.block();
  Vec out(grid.size());
  for (int e = 0; e < grid.n_elem; ++e) {
    const int em = (e + grid.n_elem - 1) % grid.n_elem;
    const int ep = (e + 1) % grid.n_elem;
    out.segment(e * nb, nb) =
        (2.0 / grid.h) * (cm * u.segment(em * nb, nb) +
                          c0 * u.segment(e * nb, nb) +
                          cp * u.segment(ep * nb, nb));
  }
  return out;
}

}  // namespace detail

/// Spatial right-hand side -du/dx + mu d2u/dx2, built blockwise from the
/// three-element advective stencil and the nested diffusive stencil.
inline Vec residual(const Vec& u, double mu, const fr::FrOperatorSet& ops,
                    const Grid1D& grid) {
  Vec out = -detail::first_derivative(u, grid, ops.Cm, ops.C0, ops.Cp);
  if (mu != 0.0) {
    const Vec q = detail::first_derivative(u, grid, ops.Cdm, ops.Cd0, ops.Cdp);
    out += mu * detail::first_derivative(q, grid, ops.Cdm, ops.Cd0, ops.Cdp);
  }
  return out;
}

/// Element-integrated mean of u over the domain (exact for nodal data).
inline cplx integrated_mean(const Vec& u, const Grid1D& grid, const RVec& weights) {
  cplx acc{0.0, 0.0};
  const int nb = grid.block();
  for (int e = 0; e < grid.n_elem; ++e)
    for (int j = 0; j < nb; ++j) acc += weights[j] * u[e * nb + j];
  return acc * (grid.h / 2.0) / grid.length();
}

struct StepResult {
  Vec u;
  bool diverged = false;
  int pseudo_steps_done = 0;
  std::vector<double> residual_norms;  // pseudo residual after each step
};

/// Physical-space dual-time level system. Provides the same interface as the
/// Fourier-space system, so the multigrid cycle executor runs unchanged on
/// global state vectors. The BDF history of coarse levels is the elementwise
/// restriction of the fine history.
class PhysicalSystem {
 public:
  PhysicalSystem(const Grid1D& grid, double mu, double alpha_a, double alpha_d,
                 const dual::DualTimeConfig& cfg, double f_tau = 1.0)
      : grid_(grid), mu_(mu), cfg_(cfg) {
    transfers_ = (grid.p >= 1) ? pmg::build_transfers(grid.p)
                               : pmg::TransferOperators{};
    levels_.resize(grid.p + 1);
    for (int i = 0; i <= grid.p; ++i) {
      levels_[i].ops = fr::build_fr_operators(i, alpha_a, alpha_d);
      levels_[i].grid = Grid1D{grid.n_elem, grid.h, i};
      levels_[i].dtau = cfg.dtau * std::pow(f_tau, grid.p - i);
    }
  }

  int levels() const { return grid_.p + 1; }
  const Grid1D& grid(int l) const { return levels_[l].grid; }
  const Grid1D& fine_grid() const { return grid_; }
  const fr::FrOperatorSet& ops(int l) const { return levels_[l].ops; }
  const dual::DualTimeConfig& config() const { return cfg_; }
  double mu() const { return mu_; }
  double dtau(int l) const { return levels_[l].dtau; }

  /// Fixes the BDF history (hist[0] = u_n, hist[1] = u_{n-1}, ...) for the
  /// upcoming physical step and restricts it to every level.
  void set_fine_history(const std::vector<Vec>& hist) {
    if (static_cast<int>(hist.size()) != cfg_.bdf.s)
      throw InvalidInput("PhysicalSystem: history needs s levels");
    levels_[grid_.p].hist = hist;
    for (int i = grid_.p - 1; i >= 0; --i) {
      levels_[i].hist.resize(hist.size());
      for (size_t j = 0; j < hist.size(); ++j)
        levels_[i].hist[j] = restrict_down(i + 1, levels_[i + 1].hist[j]);
    }
    for (int i = 0; i <= grid_.p; ++i) {
      Level& lv = levels_[i];
      lv.hist_sum = Vec::Zero(lv.grid.size());
      for (int j = 0; j < cfg_.bdf.s; ++j)
        lv.hist_sum += cfg_.bdf.B[j + 1] * lv.hist[j];
    }
  }

  /// M explicit pseudo steps at level l with deficit source r. The BDF source
  /// is frozen over each step's stages, consistent with the update split.
  Vec smooth(int l, int steps, const Vec& u0, const Vec& r) const {
    const Level& lv = levels_[l];
    const double inv_bdt = 1.0 / (cfg_.dt * cfg_.bdf.B[0]);
    const auto& tab = cfg_.tab;
    Vec u = u0;
    std::vector<Vec> q(tab.r);
    for (int m = 0; m < steps; ++m) {
      const Vec src = inv_bdt * (u + lv.hist_sum) + r;
      for (int i = 0; i < tab.r; ++i) {
        Vec y = u;
        for (int j = 0; j < i; ++j)
          if (tab.A(i, j) != 0.0) y += (lv.dtau * tab.A(i, j)) * q[j];
        q[i] = residual(y, mu_, lv.ops, lv.grid) - src;
      }
      for (int i = 0; i < tab.r; ++i) u += (lv.dtau * tab.b[i]) * q[i];
    }
    return u;
  }

  Vec apply_T(int l, const Vec& u) const {
    return residual(u, mu_, levels_[l].ops, levels_[l].grid) -
           (1.0 / (cfg_.dt * cfg_.bdf.B[0])) * u;
  }

  Vec history_term(int l) const {
    return (1.0 / (cfg_.dt * cfg_.bdf.B[0])) * levels_[l].hist_sum;
  }

  Vec restrict_down(int l, const Vec& v) const {
    const int fb = l + 1;  // fine block size at level l
    const int cb = l;      // coarse block size at level l-1
    const int ne = grid_.n_elem;
    Vec out(ne * cb);
    for (int e = 0; e < ne; ++e)
      out.segment(e * cb, cb) = transfers_.rho[l - 1] * v.segment(e * fb, fb);
    return out;
  }

  Vec prolong_up(int l, const Vec& v) const {
    const int ne = grid_.n_elem;
    Vec out(ne * (l + 2));
    for (int e = 0; e < ne; ++e)
      out.segment(e * (l + 2), l + 2) =
          transfers_.pi[l] * v.segment(e * (l + 1), l + 1);
    return out;
  }

  /// Pseudo residual du/dtau of the fine-level state u.
  Vec pseudo_residual(const Vec& u, const Vec& r) const {
    return apply_T(grid_.p, u) - history_term(grid_.p) - r;
  }

  /// Advances one physical step: M pseudo steps, optionally grouped into
  /// multigrid cycles (n_cycles cycles of the given spec). History must have
  /// been set. Divergence (1e6x norm growth) aborts the stepping.
  StepResult advance(const std::optional<pmg::CycleSpec>& cycle,
                     int n_repeats) const {
    const Vec& u_n = levels_[grid_.p].hist[0];
    const double guard = 1e6 * (u_n.norm() + 1.0);
    StepResult res;
    res.u = u_n;
    const Vec r0 = Vec::Zero(grid_.size());
    for (int it = 0; it < n_repeats; ++it) {
      if (cycle) {
        res.u = pmg::run_cycle(*this, *cycle, res.u);
        res.pseudo_steps_done += cycle->fine_steps();
      } else {
        res.u = smooth(grid_.p, 1, res.u, r0);
        res.pseudo_steps_done += 1;
      }
      res.residual_norms.push_back(pseudo_residual(res.u, r0).norm());
      if (!(res.u.norm() <= guard)) {
        res.diverged = true;
        break;
      }
    }
    return res;
  }

 private:
  struct Level {
    fr::FrOperatorSet ops;
    Grid1D grid;
    double dtau = 0.0;
    std::vector<Vec> hist;
    Vec hist_sum;  // sum_j B_{j+1} hist[j]
  };

  Grid1D grid_;
  double mu_;
  dual::DualTimeConfig cfg_;
  pmg::TransferOperators transfers_;
  std::vector<Level> levels_;
};

/// Nearest wavenumber representable on the periodic grid, 2 pi j / (N h).
inline double snap_wavenumber(double k, const Grid1D& grid) {
  const double base = 2.0 * M_PI / grid.length();
  const double j = std::max(1.0, std::round(k / base));
  return j * base;
}

struct DeviationResult {
  double max_rel_dev = 0.0;
  std::vector<double> fourier_norms;
  std::vector<double> physical_norms;  // scaled by 1/sqrt(n_elem)
  Vec final_state;                     // physical state after the last step
};

/// Runs the same single-wavenumber dual-time pseudo iteration in physical
/// space (periodic grid, analytic BDF history) and in Fourier space, and
/// compares the per-pseudo-step error norms against the exact advanced wave.
/// The wavenumber must be representable on the grid.
inline DeviationResult fourier_deviation(int p, double h, double mu,
                                         double alpha_a, double alpha_d,
                                         double k, const dual::DualTimeConfig& cfg,
                                         int n_elem, int n_steps) {
  const Grid1D grid{n_elem, h, p};
  const double ks = snap_wavenumber(k, grid);
  if (std::abs(ks - k) > 1e-9 * std::max(1.0, std::abs(k)))
    throw InvalidInput("fourier_deviation: wavenumber is not on the periodic grid");
  const cplx omega = dual::dispersion_omega(k, mu);

  // Physical side: exact analytic history u_{n-l} = e^{i omega l dt} u_n.
  PhysicalSystem sys(grid, mu, alpha_a, alpha_d, cfg);
  const Vec u0 = sample_wave(grid, sys.ops(p), k);
  std::vector<Vec> hist(cfg.bdf.s);
  for (int l = 0; l < cfg.bdf.s; ++l)
    hist[l] = std::exp(iunit * omega * (static_cast<double>(l) * cfg.dt)) * u0;
  sys.set_fine_history(hist);

  // Fourier side: one-step update u <- P u - C c_hist u0.
  const auto ops = fr::build_fr_operators(p, alpha_a, alpha_d);
  const auto op = fr::build_bloch(ops, h, mu, k);
  dual::DualTimeConfig cfg1 = cfg;
  cfg1.M = 1;
  const auto props = dual::build_propagators(op, cfg1, omega);
  const Vec wb = op.wave_vector();
  const Vec csrc = props.C * (props.c_hist * wb);

  const cplx exact = std::exp(-iunit * omega * cfg.dt);
  const Vec r0 = Vec::Zero(grid.size());
  const double scale = std::sqrt(static_cast<double>(n_elem));

  DeviationResult out;
  Vec u_phys = u0;
  Vec u_four = wb;
  for (int m = 0; m < n_steps; ++m) {
    u_phys = sys.smooth(p, 1, u_phys, r0);
    u_four = props.P * u_four - csrc;
    const double e_phys = (u_phys - exact * u0).norm() / scale;
    const double e_four = (u_four - exact * wb).norm();
    out.physical_norms.push_back(e_phys);
    out.fourier_norms.push_back(e_four);
    const double denom = std::max(e_four, 1e-300);
    out.max_rel_dev = std::max(out.max_rel_dev, std::abs(e_phys - e_four) / denom);
  }
  out.final_state = u_phys;
  return out;
}

/// Marches n_physical steps from u0. The first s-1 steps bootstrap with
/// lower-order BDF so no exact history is required. Returns the trajectory of
/// state norms and the divergence flag.
struct MarchResult {
  Vec u;
  bool diverged = false;
  int pseudo_steps_done = 0;
  std::vector<double> step_norms;
};

inline MarchResult march(const Grid1D& grid, double mu, double alpha_a,
                         double alpha_d, const dual::DualTimeConfig& cfg,
                         const Vec& u0, int n_physical,
                         const std::optional<pmg::CycleSpec>& cycle = std::nullopt,
                         int n_repeats_per_step = -1) {
  MarchResult out;
  out.u = u0;
  std::deque<Vec> hist{u0};
  const int repeats = n_repeats_per_step > 0 ? n_repeats_per_step : cfg.M;
  for (int n = 0; n < n_physical; ++n) {
    const int order = std::min<int>(cfg.bdf.s, static_cast<int>(hist.size()));
    dual::DualTimeConfig step_cfg = cfg;
    step_cfg.bdf = schemes::make_bdf(order);
    PhysicalSystem sys(grid, mu, alpha_a, alpha_d, step_cfg);
    sys.set_fine_history(std::vector<Vec>(hist.begin(), hist.begin() + order));
    const StepResult step = sys.advance(cycle, repeats);
    out.pseudo_steps_done += step.pseudo_steps_done;
    out.u = step.u;
    out.step_norms.push_back(step.u.norm());
    if (step.diverged) {
      out.diverged = true;
      break;
    }
    hist.push_front(step.u);
    if (static_cast<int>(hist.size()) > cfg.bdf.s) hist.pop_back();
  }
  return out;
}

}  // namespace frmg::td
