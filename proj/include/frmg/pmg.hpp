#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "frmg/dualtime.hpp"
#include "frmg/fr_ops.hpp"
#include "frmg/quadrature.hpp"
#include "frmg/types.hpp"

namespace frmg::pmg {

// ---------------------------------------------------------------------------
// Transfers
// ---------------------------------------------------------------------------

/// Restriction/prolongation between polynomial levels. Modally the restriction
/// is the truncated identity and the prolongation its transpose; both are
/// projected to nodal form with the per-level Legendre Vandermonde matrices.
struct TransferOperators {
  int p = 0;
  std::vector<RMat> rho;  // rho[i]: (i+1) x (i+2), level i+1 -> i
  std::vector<RMat> pi;   // pi[i]:  (i+2) x (i+1), level i -> i+1
  std::vector<RMat> V;    // V[i]: Vandermonde at level i (orthonormal Legendre)
};

inline TransferOperators build_transfers(int p) {
  if (p < 1) throw InvalidInput("build_transfers: p must be >= 1");
  TransferOperators t;
  t.p = p;
  t.V.resize(p + 1);
  for (int i = 0; i <= p; ++i)
    t.V[i] = quad::vandermonde(quad::gauss_legendre_points(i + 1));
  t.rho.resize(p);
  t.pi.resize(p);
  for (int i = 0; i < p; ++i) {
    RMat trunc = RMat::Zero(i + 1, i + 2);  // truncated identity
    trunc.leftCols(i + 1).setIdentity();
    t.rho[i] = t.V[i] * trunc * t.V[i + 1].inverse();
    t.pi[i] = t.V[i + 1] * trunc.transpose() * t.V[i].inverse();
  }
  return t;
}

// ---------------------------------------------------------------------------
// Cycle specification
// ---------------------------------------------------------------------------

struct CycleLeg {
  int level = 0;
  int steps = 1;
};

/// Declarative multigrid cycle: a walk over polynomial levels starting and
/// ending at the finest degree, each leg smoothing `steps` times. Moving down
/// restricts, moving up prolongs and corrects. f_tau scales the pseudo step
/// per level as dtau_i = dtau * f_tau^(p-i).
struct CycleSpec {
  double f_tau = 1.0;
  std::vector<CycleLeg> legs;

  void validate(int p) const {
    if (legs.empty()) throw InvalidInput("CycleSpec: no legs");
    if (legs.front().level != p)
      throw InvalidInput("CycleSpec: first leg must be at the finest level");
    if (legs.back().level != p)
      throw InvalidInput("CycleSpec: last leg must be at the finest level");
    if (f_tau < 1.0) throw InvalidInput("CycleSpec: f_tau must be >= 1");
    for (size_t i = 0; i < legs.size(); ++i) {
      if (legs[i].level < 0 || legs[i].level > p)
        throw InvalidInput("CycleSpec: leg level out of range");
      if (legs[i].steps < 0)
        throw InvalidInput("CycleSpec: leg steps must be nonnegative");
      if (i + 1 < legs.size() &&
          std::abs(legs[i + 1].level - legs[i].level) != 1)
        throw InvalidInput("CycleSpec: consecutive legs must differ by one level");
    }
  }

  /// Fine-level smoothing steps at the start of the cycle.
  int n_sp() const { return legs.front().steps; }
  /// Fine-level smoothing steps at the end of the cycle (0 for a single leg).
  int n_sp_prime() const {
    return legs.size() > 1 ? legs.back().steps : 0;
  }
  /// Total fine-level smoothing steps per cycle, the cost unit of the
  /// cumulative fine pseudo-time tau = fine_steps * n_cycle * dtau.
  int fine_steps() const {
    int n = 0;
    const int p = legs.front().level;
    for (const auto& leg : legs)
      if (leg.level == p) n += leg.steps;
    return n;
  }
};

/// Plain dual-time stepping expressed as a degenerate single-leg cycle.
inline CycleSpec make_single_level(int p, int steps) {
  return CycleSpec{1.0, {{p, steps}}};
}

/// Named cycle presets:
///  - "v":   symmetric V-cycle to level 0, n_s steps per leg
///  - "vap": V-cycle with one restriction step and extra (3) smoothing steps
///           on the bottom, prolongation and final legs
///  - "w":   W-shaped cycle with its middle peak at level p-2
inline CycleSpec make_preset(const std::string& name, int p, int n_s = 1,
                             double f_tau = 1.0, int prolong_steps = 3) {
  if (p < 1) throw InvalidInput("make_preset: p must be >= 1");
  CycleSpec spec;
  spec.f_tau = f_tau;
  auto add_run = [&spec](int from, int to, int steps) {
    const int dir = (to >= from) ? 1 : -1;
    for (int l = from; l != to + dir; l += dir) spec.legs.push_back({l, steps});
  };
  if (name == "v" || name == "v1" || name == "v3") {
    const int steps = (name == "v3") ? 3 : (name == "v1" ? 1 : n_s);
    add_run(p, 1, steps);
    add_run(0, p, steps);
  } else if (name == "vap") {
    add_run(p, 1, n_s);
    add_run(0, p, prolong_steps);
  } else if (name == "w") {
    const int peak = p - 2;
    add_run(p, 0, n_s);
    if (peak >= 1) {
      add_run(1, peak, n_s);
      add_run(peak - 1, 0, n_s);
    }
    add_run(1, p, n_s);
  } else {
    throw InvalidInput("make_preset: unknown cycle preset '" + name + "'");
  }
  spec.validate(p);
  return spec;
}

inline CycleSpec cycle_from_json(const nlohmann::json& j, int p) {
  CycleSpec spec;
  spec.f_tau = j.value("f_tau", 1.0);
  if (!j.contains("legs") || !j.at("legs").is_array())
    throw InvalidInput("cycle config: needs a legs array");
  for (const auto& leg : j.at("legs"))
    spec.legs.push_back({leg.at("level").get<int>(), leg.at("steps").get<int>()});
  spec.validate(p);
  return spec;
}

inline nlohmann::json cycle_to_json(const CycleSpec& spec) {
  nlohmann::json j;
  j["f_tau"] = spec.f_tau;
  j["legs"] = nlohmann::json::array();
  for (const auto& leg : spec.legs)
    j["legs"].push_back({{"level", leg.level}, {"steps", leg.steps}});
  return j;
}

// ---------------------------------------------------------------------------
// Cycle execution
// ---------------------------------------------------------------------------

/// Working variables of one cycle execution, indexed by level.
struct CycleState {
  std::vector<Vec> u;   // smoothed state of the last visit
  std::vector<Vec> u0;  // initial state of the current visit
  std::vector<Vec> d;   // deficits
  std::vector<Vec> r;   // residual sources (r at the finest level stays zero)
};

struct CycleTraceLeg {
  int level = 0;
  int steps = 0;
  Vec u_after;
  Vec r_used;
};

struct CycleTrace {
  std::vector<CycleTraceLeg> legs;
};

/// Runs one multigrid cycle. `System` supplies the per-level machinery:
///   int levels() const;                                  // p + 1
///   Vec smooth(int l, int steps, const Vec& u0, const Vec& r) const;
///   Vec apply_T(int l, const Vec& u) const;              // Q_l u - u/(dt B0)
///   Vec history_term(int l) const;                       // frozen BDF source
///   Vec restrict_down(int l, const Vec& v) const;        // level l -> l-1
///   Vec prolong_up(int l, const Vec& v) const;           // level l -> l+1
///
/// Restriction legs form the deficit d_l = r_l - (T_l u_l - hist_l), restrict
/// the state and the deficit, and source the next level with
/// r_{l-1} = T_{l-1} u0_{l-1} - hist_{l-1} + d_{l-1}. Prolongation legs smooth,
/// prolong the correction Delta = u0 - u and subtract it from the parent's
/// smoothed state. The BDF history of every level is the restriction of the
/// fine time history, frozen over the cycle.
template <class System>
Vec run_cycle(const System& sys, const CycleSpec& spec, const Vec& fine_initial,
              CycleState* state_out = nullptr, CycleTrace* trace = nullptr) {
  const int p = sys.levels() - 1;
  spec.validate(p);

  CycleState st;
  st.u.resize(p + 1);
  st.u0.resize(p + 1);
  st.d.resize(p + 1);
  st.r.resize(p + 1);
  st.u0[p] = fine_initial;
  st.r[p] = Vec::Zero(fine_initial.size());

  for (size_t i = 0; i < spec.legs.size(); ++i) {
    const int l = spec.legs[i].level;
    st.u[l] = sys.smooth(l, spec.legs[i].steps, st.u0[l], st.r[l]);
    if (trace) trace->legs.push_back({l, spec.legs[i].steps, st.u[l], st.r[l]});
    if (i + 1 == spec.legs.size()) break;

    const int next = spec.legs[i + 1].level;
    if (next == l - 1) {
      st.d[l] = st.r[l] - (sys.apply_T(l, st.u[l]) - sys.history_term(l));
      st.u0[l - 1] = sys.restrict_down(l, st.u[l]);
      st.d[l - 1] = sys.restrict_down(l, st.d[l]);
      st.r[l - 1] = sys.apply_T(l - 1, st.u0[l - 1]) - sys.history_term(l - 1) +
                    st.d[l - 1];
    } else {
      const Vec delta = st.u0[l] - st.u[l];
      st.u0[l + 1] = st.u[l + 1] - sys.prolong_up(l, delta);
    }
  }
  Vec result = st.u[p];
  if (state_out) *state_out = std::move(st);
  return result;
}

// ---------------------------------------------------------------------------
// Fourier-space level system
// ---------------------------------------------------------------------------

enum class Smoother { kErk, kEj };

/// Everything needed to run cycles on the single-wavenumber problem:
/// per-level Bloch operators, propagators at the scaled pseudo step, the
/// pseudo-time operators T_l, and the restricted history anchors.
class FourierSystem {
 public:
  FourierSystem(int p, double h, double mu, double alpha_a, double alpha_d,
                double k, const dual::DualTimeConfig& cfg, double f_tau = 1.0,
                Smoother smoother = Smoother::kErk, double ej_kappa = 0.5)
      : p_(p), cfg_(cfg), f_tau_(f_tau), smoother_(smoother), ej_kappa_(ej_kappa) {
    if (p < 0) throw InvalidInput("FourierSystem: p must be >= 0");
    if (smoother == Smoother::kEj && (ej_kappa < 0.0 || ej_kappa > 1.0))
      throw InvalidInput("FourierSystem: EJ relaxation must lie in [0, 1]");
    transfers_ = (p >= 1) ? build_transfers(p) : TransferOperators{};
    omega_ = dual::dispersion_omega(k, mu);
    c_hist_ = dual::history_factor(cfg.bdf, omega_, cfg.dt);
    cb_ = c_hist_ / (cfg.dt * cfg.bdf.B[0]);

    levels_.resize(p + 1);
    for (int i = 0; i <= p; ++i) {
      Level& lv = levels_[i];
      lv.ops = fr::build_fr_operators(i, alpha_a, alpha_d);
      lv.bloch = fr::build_bloch(lv.ops, h, mu, k);
      lv.dtau = cfg.dtau * std::pow(f_tau, p - i);
      lv.T = lv.bloch.Q -
             (1.0 / (cfg.dt * cfg.bdf.B[0])) * Mat::Identity(i + 1, i + 1);
      if (smoother == Smoother::kErk) {
        const auto coeffs =
            schemes::stability_polynomial(cfg.tab, cfg.bdf, lv.dtau / cfg.dt);
        const Mat x = lv.dtau * lv.bloch.Q;
        lv.P = dual::eval_poly_matrix(coeffs.gamma, x);
        lv.C = dual::eval_poly_matrix(coeffs.kappa, x);
        lv.K = (cfg.dt * cfg.bdf.B[0]) * lv.C;
        double rho = 0.0;
        for (int j = 0; j < lv.bloch.eigQ.size(); ++j)
          rho = std::max(rho, std::abs(schemes::eval_poly(
                                  coeffs.gamma, lv.dtau * lv.bloch.eigQ[j])));
        lv.rho_P = rho;
        if (rho >= 1.0) {
          std::ostringstream msg;
          msg << "FourierSystem: pseudo-step unstable at level " << i
              << " (rho(P) = " << rho << ", dtau_i = " << lv.dtau << ")";
          if (f_tau > 1.0 && i < p) msg << "; f_tau exceeds CFL at level " << i;
          throw NumericalError(msg.str());
        }
      } else {
        // Inverse of the element-local block of T = Q - I/(dt B0): the
        // single-element part of Q is -(2/h) C0 + mu (4/h^2) B0.
        const double b0dt = cfg.bdf.B[0] * cfg.dt;
        const RMat bracket =
            RMat::Identity(i + 1, i + 1) +
            (2.0 * b0dt / h) * (lv.ops.C0 - (2.0 * mu / h) * lv.ops.B0);
        Eigen::FullPivLU<RMat> lu(bracket);
        if (!lu.isInvertible())
          throw NumericalError(
              "FourierSystem: singular element Jacobi block at level " +
              std::to_string(i));
        lv.Jinv = (-b0dt * lu.inverse()).cast<cplx>();
      }
    }
    Vec wave = levels_[p].bloch.wave_vector();
    set_fine_history_anchor(wave / wave.norm());
  }

  /// Fixes the fine-level time history to exp(i omega l dt) * anchor and
  /// restricts it to every level. Anchors stay frozen across cycles within
  /// one physical step.
  void set_fine_history_anchor(const Vec& anchor) {
    levels_[p_].eta = anchor;
    for (int i = p_ - 1; i >= 0; --i)
      levels_[i].eta = transfers_.rho[i] * levels_[i + 1].eta;
  }

  int levels() const { return p_ + 1; }
  int degree() const { return p_; }
  double f_tau() const { return f_tau_; }
  const dual::DualTimeConfig& config() const { return cfg_; }
  cplx omega() const { return omega_; }
  cplx history_factor_scalar() const { return c_hist_; }
  cplx cb() const { return cb_; }
  const fr::BlochOperator& bloch(int l) const { return levels_[l].bloch; }
  const Mat& T(int l) const { return levels_[l].T; }
  const Mat& P(int l) const { return levels_[l].P; }
  const Mat& C(int l) const { return levels_[l].C; }
  const Mat& K(int l) const { return levels_[l].K; }
  double dtau(int l) const { return levels_[l].dtau; }
  const Vec& anchor(int l) const { return levels_[l].eta; }
  const TransferOperators& transfers() const { return transfers_; }

  Vec smooth(int l, int steps, const Vec& u0, const Vec& r) const {
    const Level& lv = levels_[l];
    Vec u = u0;
    if (smoother_ == Smoother::kErk) {
      const Vec src = lv.C * (c_hist_ * lv.eta) + lv.K * r;
      for (int m = 0; m < steps; ++m) u = lv.P * u - src;
    } else {
      for (int m = 0; m < steps; ++m) {
        const Vec resid = lv.T * u - cb_ * lv.eta - r;
        u -= ej_kappa_ * (lv.Jinv * resid);
      }
    }
    return u;
  }

  Vec apply_T(int l, const Vec& u) const { return levels_[l].T * u; }
  Vec history_term(int l) const { return cb_ * levels_[l].eta; }
  Vec restrict_down(int l, const Vec& v) const { return transfers_.rho[l - 1] * v; }
  Vec prolong_up(int l, const Vec& v) const { return transfers_.pi[l] * v; }

  /// Pseudo-time steady state of the fine level: T u = C_B * anchor.
  Vec steady_state() const {
    return levels_[p_].T.partialPivLu().solve(cb_ * levels_[p_].eta);
  }

  /// Projects a fine-level state onto the eigenmode coordinates (W constant
  /// across the run).
  Vec mode_coefficients(const Vec& u) const {
    return levels_[p_].bloch.W.partialPivLu().solve(u);
  }

 private:
  struct Level {
    fr::FrOperatorSet ops;
    fr::BlochOperator bloch;
    double dtau = 0.0;
    double rho_P = 0.0;
    Mat P, C, K, T, Jinv;
    Vec eta;
  };

  int p_;
  dual::DualTimeConfig cfg_;
  double f_tau_ = 1.0;
  Smoother smoother_;
  double ej_kappa_;
  TransferOperators transfers_;
  std::vector<Level> levels_;
  cplx omega_{0.0, 0.0};
  cplx c_hist_{0.0, 0.0};
  cplx cb_{0.0, 0.0};
};

/// Free-function form of the per-level smoother.
inline Vec smooth(const FourierSystem& sys, int level, int steps, const Vec& u0,
                  const Vec& r) {
  return sys.smooth(level, steps, u0, r);
}

// ---------------------------------------------------------------------------
// Contraction and measured runs
// ---------------------------------------------------------------------------

/// Per-fine-iteration geometric contraction rate of a cycle.
inline double contraction(double before, double after, const CycleSpec& spec) {
  if (before <= 0.0)
    throw InvalidInput("contraction: before-norm must be positive");
  const int n = std::max(spec.fine_steps(), 1);
  return std::pow(after / before, 1.0 / n);
}

/// Difference form of the contraction factor. The base can be negative, in
/// which case the fractional power is not real and NaN is returned; the ratio
/// form above is the primary definition.
inline double contraction_difference_form(double before, double after,
                                          const CycleSpec& spec, int p) {
  const int n = std::max(spec.fine_steps(), 1);
  return std::pow((after - before) / (p + 1), 1.0 / n);
}

struct CycleSample {
  int cycle = 0;
  double tau_fine = 0.0;      // cumulative fine-level pseudo time
  int fine_steps = 0;         // cumulative fine-level smoothing steps
  double err_steady = 0.0;    // distance to the pseudo-time steady state
  double err_analytic = 0.0;  // distance to the exact advanced wave
  double beta_primary = 0.0;
  double beta_secondary = 0.0;
};

struct CycleRun {
  std::vector<CycleSample> samples;  // samples[0] is the initial state
  Vec final_state;
};

/// Runs repeated cycles within one physical step from the wave initial state,
/// recording errors and mode energies after each cycle. Stops early once the
/// steady-state error drops below `stop_below` (if positive).
inline CycleRun run_cycles(const FourierSystem& sys, const CycleSpec& spec,
                           int n_cycles, double stop_below = -1.0) {
  const bool multilevel = std::any_of(
      spec.legs.begin(), spec.legs.end(),
      [&](const CycleLeg& leg) { return leg.level != sys.degree(); });
  if (multilevel && std::abs(spec.f_tau - sys.f_tau()) > 1e-12)
    throw InvalidInput("run_cycles: cycle f_tau differs from the system scaling");
  const Vec u_n = sys.anchor(sys.degree());
  const Vec u_star = sys.steady_state();
  const cplx exact_step = std::exp(-iunit * sys.omega() * sys.config().dt);

  CycleRun run;
  Vec u = u_n;
  auto record = [&](int cycle, int steps_done, double tau) {
    CycleSample s;
    s.cycle = cycle;
    s.tau_fine = tau;
    s.fine_steps = steps_done;
    s.err_steady = (u - u_star).norm();
    s.err_analytic = (u - exact_step * u_n).norm();
    const Vec beta = sys.mode_coefficients(u);
    s.beta_primary = std::abs(beta[0]);
    s.beta_secondary = beta.size() > 1 ? std::abs(beta[1]) : 0.0;
    run.samples.push_back(s);
  };
  record(0, 0, 0.0);

  const int per_cycle = spec.fine_steps();
  const double tau_per_cycle = per_cycle * sys.dtau(sys.degree());
  for (int c = 1; c <= n_cycles; ++c) {
    u = run_cycle(sys, spec, u);
    record(c, c * per_cycle, c * tau_per_cycle);
    if (stop_below > 0.0 && run.samples.back().err_steady < stop_below) break;
  }
  run.final_state = u;
  return run;
}

/// Initial contraction factor: one cycle from the wave initial state.
inline double initial_contraction(const FourierSystem& sys, const CycleSpec& spec) {
  const auto run = run_cycles(sys, spec, 1);
  return contraction(run.samples[0].err_steady, run.samples[1].err_steady, spec);
}

}  // namespace frmg::pmg
