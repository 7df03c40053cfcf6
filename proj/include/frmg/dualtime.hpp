#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "frmg/fr_ops.hpp"
#include "frmg/schemes.hpp"
#include "frmg/types.hpp"

namespace frmg::dual {

/// Dual-time configuration: BDF physical stepping, ERK pseudo stepping.
struct DualTimeConfig {
  double dt = 0.0;
  double dtau = 0.0;
  int M = 1;  // pseudo steps per physical step
  schemes::BdfScheme bdf;
  schemes::ButcherTableau tab;

  void validate() const {
    if (dt <= 0.0 || dtau <= 0.0)
      throw InvalidInput("DualTimeConfig: dt and dtau must be positive");
    if (!(dtau < dt))
      throw InvalidInput("DualTimeConfig: dtau must be smaller than dt (ratio " +
                         std::to_string(dtau / dt) + ")");
    if (M < 0) throw InvalidInput("DualTimeConfig: M must be nonnegative");
  }
};

/// Exact advection-diffusion dispersion: omega = k (1 - i mu k).
inline cplx dispersion_omega(double k, double mu) {
  return cplx(k, 0.0) * (cplx(1.0, 0.0) - iunit * mu * k);
}

/// History factor sum_{l=0}^{s-1} B_{l+1} exp(i omega l dt) of the BDF source
/// under an analytic (fully converged) time history.
inline cplx history_factor(const schemes::BdfScheme& bdf, cplx omega, double dt) {
  cplx sum{0.0, 0.0};
  for (int l = 0; l < bdf.s; ++l)
    sum += bdf.B[l + 1] * std::exp(iunit * omega * (static_cast<double>(l) * dt));
  return sum;
}

/// One-wavenumber propagators of the dual-time update:
///   u_{m+1} = P u_m - C sum_l B_{l+1} u_{n-l} - K r.
/// R_M is the M-step map applied to u_{n+1,0} under analytic history, with
/// S_M = sum_{m<M} P^m accumulated iteratively (no resolvent inversion).
struct PropagatorSet {
  Mat P, C, K;
  Mat S_M;
  Mat R_M;
  cplx C_B{0.0, 0.0};     // (1/(dt B0)) sum_l B_{l+1} e^{i omega l dt}
  cplx c_hist{0.0, 0.0};  // dt B0 C_B
  double rho_P = 0.0;     // spectral radius of P
};

/// Evaluates a real-coefficient polynomial of the matrix X by Horner steps.
inline Mat eval_poly_matrix(const RVec& coeffs, const Mat& x) {
  const int n = static_cast<int>(x.rows());
  Mat acc = Mat::Zero(n, n);
  for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j) {
    acc = acc * x;
    acc += coeffs[j] * Mat::Identity(n, n);
  }
  return acc;
}

inline PropagatorSet build_propagators(const fr::BlochOperator& op,
                                       const DualTimeConfig& cfg, cplx omega,
                                       bool enforce_stability = true) {
  cfg.validate();
  const auto coeffs = schemes::stability_polynomial(cfg.tab, cfg.bdf, cfg.dtau / cfg.dt);
  const Mat x = cfg.dtau * op.Q;
  const int n = static_cast<int>(x.rows());

  PropagatorSet ps;
  ps.P = eval_poly_matrix(coeffs.gamma, x);
  ps.C = eval_poly_matrix(coeffs.kappa, x);
  ps.K = (cfg.dt * cfg.bdf.B[0]) * ps.C;

  // P is a polynomial in Q, so its spectrum is the polynomial of Q's spectrum.
  ps.rho_P = 0.0;
  for (int j = 0; j < op.eigQ.size(); ++j)
    ps.rho_P = std::max(ps.rho_P,
                        std::abs(schemes::eval_poly(coeffs.gamma, cfg.dtau * op.eigQ[j])));
  if (enforce_stability && ps.rho_P >= 1.0) {
    std::ostringstream msg;
    msg << "build_propagators: pseudo-step unstable, rho(P) = " << ps.rho_P
        << " at dtau = " << cfg.dtau;
    throw NumericalError(msg.str());
  }

  ps.c_hist = history_factor(cfg.bdf, omega, cfg.dt);
  ps.C_B = ps.c_hist / (cfg.dt * cfg.bdf.B[0]);

  Mat pm = Mat::Identity(n, n);  // P^m
  ps.S_M = Mat::Zero(n, n);
  for (int m = 0; m < cfg.M; ++m) {
    ps.S_M += pm;
    pm = ps.P * pm;
  }
  ps.R_M = pm - ps.S_M * ps.C * ps.c_hist;
  return ps;
}

/// Pseudo-time Jacobian part T = Q - I/(dt B0); the pseudo residual of state
/// u with history anchor u0 is T u - C_B u0.
inline Mat pseudo_time_operator(const fr::BlochOperator& op, const DualTimeConfig& cfg) {
  const int n = static_cast<int>(op.Q.rows());
  return op.Q - (1.0 / (cfg.dt * cfg.bdf.B[0])) * Mat::Identity(n, n);
}

/// Scalar M-step amplification u_{n+1,M}/u_n for eigenvalue lambda, with the
/// BDF history modeled by explicit factors hist[l] = u_{n-l}/u_n. The sum
/// over pseudo steps is accumulated directly, so the result is defined also
/// where |P| >= 1.
inline cplx scalar_amplification(cplx lambda, const DualTimeConfig& cfg,
                                 const std::vector<cplx>& hist) {
  if (static_cast<int>(hist.size()) != cfg.bdf.s)
    throw InvalidInput("scalar_amplification: history length must equal the BDF order");
  const auto coeffs = schemes::stability_polynomial(cfg.tab, cfg.bdf, cfg.dtau / cfg.dt);
  const cplx z = lambda * cfg.dtau;
  const cplx p = schemes::eval_poly(coeffs.gamma, z);
  const cplx c = schemes::eval_poly(coeffs.kappa, z);
  cplx src{0.0, 0.0};
  for (int l = 0; l < cfg.bdf.s; ++l) src += cfg.bdf.B[l + 1] * hist[l];

  cplx pm{1.0, 0.0};  // P^m
  cplx s{0.0, 0.0};   // sum_{m<M} P^m
  for (int m = 0; m < cfg.M; ++m) {
    s += pm;
    pm *= p;
  }
  return pm - s * c * src;
}

/// Amplification with the history of the underlying mode itself,
/// u_{n-l} = exp(lambda l dt) u_n, as used for stability contours.
inline cplx scalar_amplification(cplx lambda, const DualTimeConfig& cfg) {
  std::vector<cplx> hist(cfg.bdf.s);
  for (int l = 0; l < cfg.bdf.s; ++l)
    hist[l] = std::exp(lambda * (static_cast<double>(l) * cfg.dt));
  return scalar_amplification(lambda, cfg, hist);
}

/// Amplification under the Bloch-wave history exp(i omega l dt); this is the
/// scalar route to the eigenvalues of R_M.
inline cplx scalar_amplification_bloch(cplx lambda, const DualTimeConfig& cfg,
                                       cplx omega) {
  std::vector<cplx> hist(cfg.bdf.s);
  for (int l = 0; l < cfg.bdf.s; ++l)
    hist[l] = std::exp(iunit * omega * (static_cast<double>(l) * cfg.dt));
  return scalar_amplification(lambda, cfg, hist);
}

/// Coupled space-time resolution limit and wavenumber normalization.
struct NyquistInfo {
  double k_nq = 0.0;
  double normalize(double k) const { return M_PI * k / k_nq; }
  double denormalize(double khat) const { return khat * k_nq / M_PI; }
};

inline NyquistInfo nyquist(int p, double h, double dt) {
  if (p < 0 || h <= 0.0 || dt <= 0.0)
    throw InvalidInput("nyquist: arguments must be positive");
  NyquistInfo info;
  info.k_nq = std::min(M_PI / dt, (p + 1) * M_PI / h);
  return info;
}

/// Fully discrete error after M pseudo steps of physical step n:
///   e = exp(i(k x - omega n dt)) (R_M - exp(-i omega dt) I) W beta,
/// with the element offset taken as zero. The norm is phase-invariant up to
/// the analytic decay carried by omega.
struct DiscreteError {
  Vec e;
  double norm = 0.0;
};

inline DiscreteError discrete_error(const PropagatorSet& props,
                                    const fr::BlochOperator& op, cplx omega,
                                    double dt, int n = 0) {
  const Vec wb = op.wave_vector();  // W beta
  DiscreteError out;
  out.e = props.R_M * wb - std::exp(-iunit * omega * dt) * wb;
  out.e *= std::exp(-iunit * omega * (static_cast<double>(n) * dt));
  out.norm = out.e.norm();
  return out;
}

/// Cached per-wavenumber spectrum for stability sweeps: the eigenvalues of Q
/// and the history factor at that wavenumber.
struct KPoint {
  double k = 0.0;
  Vec eigQ;
  cplx c_hist{0.0, 0.0};
};

/// Log-spaced wavenumber grid over [k_nq/span, k_nq].
inline std::vector<double> log_k_grid(double k_nq, int n_k, double span = 1e3) {
  if (n_k < 1) throw InvalidInput("log_k_grid: n_k must be >= 1");
  std::vector<double> ks(n_k);
  if (n_k == 1) {
    ks[0] = k_nq;
    return ks;
  }
  for (int i = 0; i < n_k; ++i)
    ks[i] = k_nq * std::pow(span, static_cast<double>(i + 1 - n_k) / (n_k - 1));
  ks.back() = k_nq;
  return ks;
}

inline std::vector<KPoint> spectrum_sweep(const fr::FrOperatorSet& base, double h,
                                          double mu, const std::vector<double>& ks,
                                          const schemes::BdfScheme& bdf, double dt) {
  std::vector<KPoint> pts;
  pts.reserve(ks.size());
  for (double k : ks) {
    const auto op = fr::build_bloch(base, h, mu, k);
    KPoint pt;
    pt.k = k;
    pt.eigQ = op.eigQ;
    pt.c_hist = history_factor(bdf, dispersion_omega(k, mu), dt);
    pts.push_back(std::move(pt));
  }
  return pts;
}

enum class StabilityMode {
  kExplicit,  // plain ERK von Neumann bound |R(z)| <= 1
  kCoupled,   // rho(R_M) <= |sum B_{l+1} e^{i omega l dt}|
};

/// Worst stability margin over the wavenumber sweep at the given dtau;
/// nonpositive means stable.
inline double stability_margin(const std::vector<KPoint>& sweep,
                               const DualTimeConfig& cfg, double dtau,
                               StabilityMode mode) {
  double margin = -std::numeric_limits<double>::infinity();
  const auto coeffs = schemes::stability_polynomial(cfg.tab, cfg.bdf,
                                                    dtau / cfg.dt);
  const RVec rpoly = schemes::erk_polynomial(cfg.tab);
  for (const auto& pt : sweep) {
    for (int j = 0; j < pt.eigQ.size(); ++j) {
      const cplx z = dtau * pt.eigQ[j];
      if (mode == StabilityMode::kExplicit) {
        margin = std::max(margin, std::abs(schemes::eval_poly(rpoly, z)) - 1.0);
      } else {
        const cplx p = schemes::eval_poly(coeffs.gamma, z);
        const cplx c = schemes::eval_poly(coeffs.kappa, z);
        cplx pm{1.0, 0.0};
        cplx s{0.0, 0.0};
        for (int m = 0; m < cfg.M; ++m) {
          s += pm;
          pm *= p;
        }
        const cplx amp = pm - s * c * pt.c_hist;
        margin = std::max(margin, std::abs(amp) - std::abs(pt.c_hist));
      }
    }
  }
  return margin;
}

/// Supremum of the stable pseudo-step set over the swept wavenumbers, found
/// by bisection on the worst-case margin to a relative tolerance of 1e-4.
/// Margins within kMarginSlack of zero count as stable: neutrally stable
/// modes sit exactly on the boundary as dtau -> 0 and would otherwise flap
/// on eigenvalue roundoff.
inline constexpr double kMarginSlack = 1e-12;

inline double dtau_max(const std::vector<KPoint>& sweep, const DualTimeConfig& cfg,
                       StabilityMode mode, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo))
    throw InvalidInput("dtau_max: need 0 < lo < hi bracket");
  const auto stable = [&](double dtau) {
    return stability_margin(sweep, cfg, dtau, mode) <= kMarginSlack;
  };
  // With viscosity the history bound can dip below one, making the stable set
  // a band bounded away from zero; locate its upper edge by a coarse
  // geometric scan before bisecting.
  if (stable(hi)) return hi;
  constexpr int kScan = 64;
  double a = -1.0, b = hi;
  for (int i = kScan - 1; i >= 0; --i) {
    const double d = lo * std::pow(hi / lo, static_cast<double>(i) / kScan);
    if (stable(d)) {
      a = d;
      break;
    }
    b = d;
  }
  if (a < 0.0)
    throw NumericalError("dtau_max: no stable dtau in the search bracket");
  while ((b - a) > 1e-4 * b) {
    const double mid = 0.5 * (a + b);
    if (stable(mid))
      a = mid;
    else
      b = mid;
  }
  return a;
}

}  // namespace frmg::dual
