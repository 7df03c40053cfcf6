// Acceptance runner: executes every acceptance criterion at its pinned
// tolerance and prints one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "frmg/config.hpp"
#include "frmg/dualtime.hpp"
#include "frmg/fr_ops.hpp"
#include "frmg/pmg.hpp"
#include "frmg/quadrature.hpp"
#include "frmg/sweeps.hpp"
#include "frmg/timedomain.hpp"
#include "helpers.hpp"

using namespace frmg;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

dual::DualTimeConfig make_cfg(double dt, double dtau, int m, int bdf_order,
                              const schemes::ButcherTableau& tab) {
  dual::DualTimeConfig cfg;
  cfg.dt = dt;
  cfg.dtau = dtau;
  cfg.M = m;
  cfg.bdf = schemes::make_bdf(bdf_order);
  cfg.tab = tab;
  return cfg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Interpolated cumulative fine pseudo-time at which the steady-state error
// first crosses the threshold (log-linear between cycle samples).
double crossing_tau(const pmg::CycleRun& run, double threshold) {
  for (size_t i = 1; i < run.samples.size(); ++i) {
    const auto& a = run.samples[i - 1];
    const auto& b = run.samples[i];
    if (b.err_steady < threshold && a.err_steady >= threshold) {
      const double f = (std::log(a.err_steady) - std::log(threshold)) /
                       (std::log(a.err_steady) - std::log(b.err_steady));
      return a.tau_fine + f * (b.tau_fine - a.tau_fine);
    }
  }
  return -1.0;
}

// ---------------------------------------------------------------------------

Check criterion_1_scheme_identity() {
  Check c;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> uk(0.2, 12.0), ua(0.5, 1.0),
      um(0.0, 1.0), ut(0.05, 1.0), ur(0.01, 0.5), uz(-1.0, 1.0);
  const std::vector<schemes::ButcherTableau> tabs = {schemes::make_ssprk3(),
                                                     test::merson5()};
  int draws = 0;
  for (int trial = 0; trial < 1000 && c.ok; ++trial) {
    const auto& tab = tabs[trial % 2];
    const int bdf_order = 1 + trial % 3;
    const int p = 1 + trial % 4;
    const double dt = ut(rng);
    const auto cfg = make_cfg(dt, ur(rng) * dt, 1, bdf_order, tab);

    // scalar-polynomial identity at a random point on the unit disk
    const auto sc = schemes::stability_polynomial(tab, cfg.bdf, cfg.dtau / dt);
    const auto rp = schemes::erk_polynomial(tab);
    cplx z{uz(rng), uz(rng)};
    const cplx lhs = schemes::eval_poly(sc.gamma, z) + schemes::eval_poly(sc.kappa, z);
    c.expect(std::abs(lhs - schemes::eval_poly(rp, z)) < 1e-10,
             "scalar identity failed");

    // matrix identity against the literal stage recursion
    const auto ops = fr::build_fr_operators(p, ua(rng), ua(rng));
    const auto op = fr::build_bloch(ops, 1.0, um(rng), uk(rng));
    const auto props = dual::build_propagators(
        op, cfg, dual::dispersion_omega(op.k, op.mu), false);
    const Mat r_lit = test::erk_update_matrix(tab, op.Q, cfg.dtau);
    c.expect((props.P + props.C - r_lit).norm() <= 1e-10 * r_lit.norm(),
             "matrix identity failed");
    ++draws;
  }
  c.detail = std::to_string(draws) + " draws" + (c.ok ? "" : "; " + c.detail);
  return c;
}

Check criterion_2_fourier_timedomain() {
  Check c;
  double worst = 0.0;
  for (int p : {3, 4}) {
    for (double khat : {M_PI / 16.0, M_PI / 8.0}) {
      for (double mu : {0.0, 0.5}) {
        const auto cfg = make_cfg(0.07, 0.007, 1, 2, schemes::make_ssprk3());
        const double knq = std::min(M_PI / cfg.dt, (p + 1) * M_PI);
        const double k = khat * knq / M_PI;
        const auto dev =
            td::fourier_deviation(p, 1.0, mu, 1.0, 0.5, k, cfg, 32, 200);
        worst = std::max(worst, dev.max_rel_dev);
      }
    }
  }
  c.expect(worst < 1e-8, "max deviation " + fmt(worst));
  c.detail = "max rel deviation " + fmt(worst);
  return c;
}

Check criterion_3_closed_form() {
  Check c;
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> uk(0.3, 9.0), ua(0.5, 1.0), um(0.0, 0.6),
      ut(0.05, 0.4), ur(0.01, 0.15);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + trial % 5;
    const int m = 1 + trial % 5;
    auto cfg = make_cfg(ut(rng), 0.0, m, 1 + trial % 3, schemes::make_ssprk3());
    std::unique_ptr<pmg::FourierSystem> sys_ptr;
    // redraw on an unstable pseudo step or a near-defective random operator;
    // keep mu k^2 dt moderate so the history factor stays O(1) and the
    // entrywise comparison is not dominated by roundoff amplification
    for (int attempt = 0; attempt < 40 && !sys_ptr; ++attempt) {
      cfg.dtau = ur(rng) * cfg.dt;
      const double k = uk(rng);
      const double mu = std::min(um(rng), 2.0 / (k * k * cfg.dt));
      try {
        sys_ptr = std::make_unique<pmg::FourierSystem>(p, 1.0, mu, ua(rng),
                                                       ua(rng), k, cfg);
      } catch (const NumericalError&) {
      }
    }
    if (!sys_ptr) {
      c.expect(false, "could not build a stable configuration");
      continue;
    }
    const auto& sys = *sys_ptr;

    pmg::CycleSpec spec{1.0, {{p, m}, {p - 1, m}, {p, m}}};
    pmg::CycleState st;
    const Vec u0 = sys.anchor(p);  // equivalence is anchored on u_{n+1,0} = u_n
    pmg::run_cycle(sys, spec, u0, &st);

    const int nf = p + 1, nc = p;
    const cplx cb = sys.cb(), ch = sys.history_factor_scalar();
    Mat pmf = Mat::Identity(nf, nf), smf = Mat::Zero(nf, nf);
    Mat pmc = Mat::Identity(nc, nc), smc = Mat::Zero(nc, nc);
    for (int j = 0; j < m; ++j) {
      smf += pmf;
      pmf = sys.P(p) * pmf;
      smc += pmc;
      pmc = sys.P(p - 1) * pmc;
    }
    const Mat r_fine = pmf - smf * sys.C(p) * ch;
    const RMat rho = sys.transfers().rho[p - 1];
    const Mat rho_rm = rho * r_fine;
    const Mat fine_resid = sys.T(p) * r_fine - cb * Mat::Identity(nf, nf);
    const Mat closed =
        pmc * rho_rm -
        smc * (sys.K(p - 1) * ((sys.T(p - 1) - cb * Mat::Identity(nc, nc)) * rho_rm) -
               sys.K(p - 1) * (rho * fine_resid) + sys.K(p - 1) * cb * rho_rm);
    const Vec expect = closed * u0;
    const double err =
        (st.u[p - 1] - expect).cwiseAbs().maxCoeff() /
        std::max(1.0, expect.cwiseAbs().maxCoeff());
    worst = std::max(worst, err);
  }
  c.expect(worst <= 1e-10, "max entrywise deviation " + fmt(worst));
  c.detail = "max entrywise deviation " + fmt(worst);
  return c;
}

Check criterion_4_cycle_ordering() {
  Check c;
  const int p = 4;
  const auto cfg = make_cfg(0.07, 0.007, 1, 2, schemes::make_ssprk3());
  const double knq = std::min(M_PI / cfg.dt, (p + 1) * M_PI);
  for (double khat : {M_PI / 8.0, M_PI / 16.0}) {
    const double k = khat * knq / M_PI;
    pmg::FourierSystem sys(p, 1.0, 0.5, 1.0, 0.5, k, cfg);
    auto tau_for = [&](const pmg::CycleSpec& spec) {
      const auto run = pmg::run_cycles(sys, spec, 6000, 1e-7);
      return crossing_tau(run, 1e-6);
    };
    const double t_base = tau_for(pmg::make_single_level(p, 1));
    const double t_v1 = tau_for(pmg::make_preset("v", p, 1));
    const double t_v3 = tau_for(pmg::make_preset("v", p, 3));
    const double t_vap = tau_for(pmg::make_preset("vap", p, 1));
    const std::string at = " at khat=pi/" + fmt(M_PI / khat);
    c.expect(t_vap > 0 && t_v1 > 0 && t_v3 > 0 && t_base > 0,
             "threshold not reached" + at);
    c.expect(t_vap < t_v1, "vap " + fmt(t_vap) + " !< v1 " + fmt(t_v1) + at);
    c.expect(t_v1 < t_v3, "v1 " + fmt(t_v1) + " !< v3 " + fmt(t_v3) + at);
    c.expect(t_v3 < t_base, "v3 " + fmt(t_v3) + " !< base " + fmt(t_base) + at);
    if (khat == M_PI / 16.0)
      c.detail = "tau(vap/v1/v3/base) = " + fmt(t_vap) + "/" + fmt(t_v1) + "/" +
                 fmt(t_v3) + "/" + fmt(t_base);
  }
  return c;
}

std::vector<double> contraction_grid() {
  std::vector<double> ratios;
  for (double r = 2.0; r < 64.0; r *= 1.12) ratios.push_back(r);
  for (double r = 64.0; r <= 2048.0; r *= 2.0) ratios.push_back(r);
  return ratios;
}

Check criterion_5_contraction_improvement() {
  Check c;
  const int p = 4;
  const auto tab = schemes::make_ssprk3();
  const auto bdf = schemes::make_bdf(2);
  // dtau = 0.078 x explicit pure-advection limit
  const auto ops = fr::build_fr_operators(p, 1.0, 0.5);
  auto ref = make_cfg(1.0, 0.1, 1, 2, tab);
  const auto sweep_a = dual::spectrum_sweep(
      ops, 1.0, 0.0, dual::log_k_grid((p + 1) * M_PI, 64), bdf, ref.dt);
  const double dtau =
      0.078 * dual::dtau_max(sweep_a, ref, dual::StabilityMode::kExplicit, 1e-8, 0.5);
  const double k = (p + 1) * M_PI / 16.0;

  const auto grid = contraction_grid();
  const auto sweep = sweeps::sweep_contraction(p, 1.0, 0.1, 1.0, 0.5, k, dtau,
                                               bdf, tab, pmg::make_preset("vap", p, 1),
                                               grid, 2);
  double min_ratio = 2.0;
  for (const auto& pt : sweep.points)
    min_ratio = std::min(min_ratio, pt.gamma_pmg / pt.gamma_base);
  c.expect(min_ratio <= 0.95, "min gamma ratio " + fmt(min_ratio) + " > 0.95");
  c.expect(sweep.argbest > 0 &&
               sweep.argbest + 1 < static_cast<int>(sweep.points.size()),
           "benefit maximum is not interior");
  const auto& tail = sweep.points.back();
  c.expect(tail.gamma_pmg / tail.gamma_base > 0.97,
           "benefit does not fade at large dt/dtau");
  c.detail = "min gamma(vap)/gamma(base) = " + fmt(min_ratio) +
             ", best at dt/dtau = " + fmt(sweep.points[sweep.argbest].ratio);
  return c;
}

Check criterion_6_bdf3_shift() {
  Check c;
  const auto tab = schemes::make_ssprk3();
  for (int p : {3, 4}) {
    const auto ops = fr::build_fr_operators(p, 1.0, 0.5);
    auto ref = make_cfg(1.0, 0.1, 1, 2, tab);
    const auto sweep_a = dual::spectrum_sweep(
        ops, 1.0, 0.0, dual::log_k_grid((p + 1) * M_PI, 64), ref.bdf, ref.dt);
    const double dtau = 0.078 * dual::dtau_max(sweep_a, ref,
                                               dual::StabilityMode::kExplicit,
                                               1e-8, 0.5);
    const double k = (p + 1) * M_PI / 16.0;
    const auto grid = contraction_grid();
    double best_ratio[2] = {0.0, 0.0};
    for (int ord : {2, 3}) {
      const auto sweep = sweeps::sweep_contraction(
          p, 1.0, 0.1, 1.0, 0.5, k, dtau, schemes::make_bdf(ord), tab,
          pmg::make_preset("vap", p, 1), grid, 2);
      best_ratio[ord - 2] = sweep.points[sweep.argbest].ratio;
    }
    c.expect(best_ratio[1] > best_ratio[0],
             "p=" + std::to_string(p) + ": argmax BDF3 " + fmt(best_ratio[1]) +
                 " !> BDF2 " + fmt(best_ratio[0]));
    c.detail += (c.detail.empty() ? "" : ", ") + std::string("p=") +
                std::to_string(p) + ": " + fmt(best_ratio[0]) + " -> " +
                fmt(best_ratio[1]);
  }
  return c;
}

Check criterion_7_stability_validation() {
  Check c;
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> ua(0.5, 1.0), u01(0.0, 1.0);
  const int n_elem = 16;
  // Random family: first-order physical stepping (one history level, so the
  // stability set is exact for the march; deeper history feedback, which the
  // analytic form neglects, shifts the true limit outside a 5% bracket), and
  // dt <= 0.5 so every Bloch bin of the 16-element grid lies inside
  // (0, k_Nq] and the swept set covers the whole discrete spectrum.
  for (int trial = 0; trial < 10; ++trial) {
    const int p = 2 + trial % 3;
    const int m = 1 + static_cast<int>(u01(rng) * 7.99);
    const double dt = 0.33 + 0.17 * u01(rng);
    const double alpha_a = ua(rng);
    auto cfg = make_cfg(dt, dt / 1000.0, m, 1, schemes::make_ssprk3());
    const td::Grid1D grid{n_elem, 1.0, p};
    const auto ops = fr::build_fr_operators(p, alpha_a, 0.5);

    const double knq = std::min(M_PI / dt, (p + 1) * M_PI / grid.h);
    std::vector<double> ks;
    for (int j = 1; j <= n_elem; ++j) {
      const double k = 2.0 * M_PI * j / grid.length();
      if (k <= knq + 1e-12) ks.push_back(k);
    }
    if (static_cast<int>(ks.size()) != n_elem) {
      c.expect(false, "wavenumber set does not cover the grid at trial " +
                          std::to_string(trial));
      continue;
    }
    const auto sweep = dual::spectrum_sweep(ops, grid.h, 0.0, ks, cfg.bdf, dt);
    double dmax = 0.0;
    try {
      dmax = dual::dtau_max(sweep, cfg, dual::StabilityMode::kCoupled, 1e-7,
                            std::min(10.0 / ((p + 1) * (p + 1)), 0.95 * dt));
    } catch (const NumericalError& e) {
      c.expect(false, std::string("no stable bracket: ") + e.what());
      continue;
    }

    std::normal_distribution<double> g(0.0, 1.0);
    Vec u0(grid.size());
    for (int i = 0; i < grid.size(); ++i) u0[i] = cplx{g(rng), g(rng)};

    auto run = [&](double dtau) {
      auto cc = cfg;
      cc.dtau = dtau;
      td::PhysicalSystem sys(grid, 0.0, alpha_a, 0.5, cc);
      std::vector<Vec> hist(cc.bdf.s, u0);
      Vec u = u0;
      bool diverged = false;
      double maxg = 1.0;
      int steps = 0;
      while (steps < 500 && !diverged) {
        sys.set_fine_history(hist);
        const td::StepResult st = sys.advance(std::nullopt, m);
        steps += st.pseudo_steps_done;
        u = st.u;
        maxg = std::max(maxg, u.norm() / u0.norm());
        diverged = st.diverged || maxg > 1e6;
        hist.insert(hist.begin(), u);
        hist.pop_back();
      }
      return std::pair{diverged, maxg};
    };

    const auto hot = run(1.05 * dmax);
    const auto cold = run(0.95 * dmax);
    c.expect(hot.first, "no divergence at 1.05 dtau_max (trial " +
                            std::to_string(trial) + ", growth " +
                            fmt(hot.second) + ")");
    c.expect(!cold.first && cold.second < 3.0,
             "not bounded at 0.95 dtau_max (trial " + std::to_string(trial) +
                 ", growth " + fmt(cold.second) + ")");
  }
  c.detail = "10 random configurations" + (c.detail.empty() ? "" : "; " + c.detail);
  return c;
}

Check criterion_8_mode_energy() {
  Check c;
  const int p = 4;
  const auto cfg = make_cfg(0.07, 0.007, 1, 2, schemes::make_ssprk3());
  const double knq = std::min(M_PI / cfg.dt, (p + 1) * M_PI);
  const double k = (M_PI / 16.0) * knq / M_PI;
  pmg::FourierSystem sys(p, 1.0, 0.5, 1.0, 0.5, k, cfg);

  const auto base = pmg::run_cycles(sys, pmg::make_single_level(p, 2), 8);
  const auto v3 = pmg::run_cycles(sys, pmg::make_preset("v", p, 3), 8);
  const auto vap = pmg::run_cycles(sys, pmg::make_preset("vap", p, 1), 8);

  // primary-mode decrease per cycle, averaged over cycles 2..5
  auto mean_drop = [](const pmg::CycleRun& run) {
    double acc = 0.0;
    for (int cyc = 2; cyc <= 5; ++cyc)
      acc += run.samples[cyc - 1].beta_primary - run.samples[cyc].beta_primary;
    return acc / 4.0;
  };
  const double drop_vap = mean_drop(vap), drop_v3 = mean_drop(v3);
  c.expect(drop_vap > drop_v3, "primary decrease vap " + fmt(drop_vap) +
                                   " !> v3 " + fmt(drop_v3));
  // the redistribution phase: once the asymmetric cycle has converged its
  // secondary energy settles back to the steady content, so compare during
  // the first cycles
  for (int cyc = 1; cyc <= 3; ++cyc)
    c.expect(vap.samples[cyc].beta_secondary > base.samples[cyc].beta_secondary,
             "secondary energy vap !> base at cycle " + std::to_string(cyc));
  c.detail = "primary drop/cycle vap " + fmt(drop_vap) + " vs v3 " +
             fmt(drop_v3) + "; secondary at c1: vap " +
             fmt(vap.samples[1].beta_secondary) + " vs base " +
             fmt(base.samples[1].beta_secondary) +
             (c.detail.empty() ? "" : "; " + c.detail);
  return c;
}

Check criterion_9_ftau() {
  Check c;
  const int p = 4;
  const auto cfg = make_cfg(0.07, 0.007, 1, 2, schemes::make_ssprk3());
  const double knq = std::min(M_PI / cfg.dt, (p + 1) * M_PI);
  const double k = (M_PI / 8.0) * knq / M_PI;

  auto run_with = [&](const char* preset, double f_tau, int n_cycles) {
    pmg::FourierSystem sys(p, 1.0, 0.5, 1.0, 0.5, k, cfg, f_tau);
    return pmg::run_cycles(sys, pmg::make_preset(preset, p, 1, f_tau), n_cycles);
  };
  const auto v1_f1 = run_with("v", 1.0, 400);
  const auto v1_f11 = run_with("v", 1.1, 400);
  const auto vap_f11 = run_with("vap", 1.1, 400);

  const double t_f1 = crossing_tau(v1_f1, 1e-4);
  const double t_f11 = crossing_tau(v1_f11, 1e-4);
  c.expect(t_f11 > 0 && t_f1 > 0 && t_f11 < t_f1,
           "f_tau=1.1 not faster to 1e-4 (tau " + fmt(t_f11) + " vs " + fmt(t_f1) +
               ")");

  auto floor_of = [](const pmg::CycleRun& run) {
    double lo = 1e300;
    for (const auto& s : run.samples) lo = std::min(lo, s.err_steady);
    return lo;
  };
  const double fl_f1 = floor_of(v1_f1);
  const double fl_f11 = floor_of(v1_f11);
  const double fl_vap = floor_of(vap_f11);
  c.expect(fl_f11 > 2.0 * fl_f1, "f_tau=1.1 floor " + fmt(fl_f11) +
                                     " not above the f_tau=1 floor " + fmt(fl_f1));
  c.expect(fl_vap < 0.5 * fl_f11,
           "extra prolongation smoothing does not lower the floor (" +
               fmt(fl_vap) + " vs " + fmt(fl_f11) + ")");
  c.detail = "tau to 1e-4: " + fmt(t_f11) + " (f=1.1) vs " + fmt(t_f1) +
             " (f=1); floors f1/f1.1/vap1.1 = " + fmt(fl_f1) + "/" + fmt(fl_f11) +
             "/" + fmt(fl_vap) + (c.detail.empty() ? "" : "; " + c.detail);
  return c;
}

Check criterion_10_ej() {
  Check c;
  const std::vector<double> dts{0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
  for (int p : {3, 4}) {
    std::vector<double> g_plain, g_v1, g_v3, g_vap;
    for (double dt : dts) {
      const auto cfg = make_cfg(dt, dt / 10.0, 1, 2, schemes::make_ssprk3());
      pmg::FourierSystem sys(p, 1.0, 0.1, 1.0, 0.5, M_PI / 100.0, cfg, 1.0,
                             pmg::Smoother::kEj, 0.5);
      g_plain.push_back(pmg::initial_contraction(sys, pmg::make_single_level(p, 1)));
      g_v1.push_back(pmg::initial_contraction(sys, pmg::make_preset("v", p, 1)));
      g_v3.push_back(pmg::initial_contraction(sys, pmg::make_preset("v", p, 3)));
      g_vap.push_back(pmg::initial_contraction(sys, pmg::make_preset("vap", p, 1)));
    }
    if (p == 3) {
      for (size_t i = 0; i < dts.size(); ++i) {
        c.expect(g_v1[i] < g_plain[i],
                 "p=3 v1 !< plain at dt=" + fmt(dts[i]));
        c.expect(g_vap[i] < g_plain[i],
                 "p=3 vap !< plain at dt=" + fmt(dts[i]));
      }
    } else {
      for (size_t i = 0; i < dts.size(); ++i)
        c.expect(g_v1[i] < g_plain[i], "p=4 v1 !< plain at dt=" + fmt(dts[i]));
      c.expect(g_v1[0] < g_vap[0], "p=4 small dt: v1 !< vap");
      c.expect(g_v1[0] < g_v3[0], "p=4 small dt: v1 !< v3");
      c.detail = "p=4 dt=0.05: plain/v1/v3/vap = " + fmt(g_plain[0]) + "/" +
                 fmt(g_v1[0]) + "/" + fmt(g_v3[0]) + "/" + fmt(g_vap[0]);
    }
  }
  return c;
}

Check criterion_11_operator_suite() {
  Check c;
  std::mt19937 rng(55);
  std::uniform_real_distribution<double> ua(0.5, 1.0);
  for (int p = 0; p <= 6; ++p) {
    const auto ops = fr::build_fr_operators(p, 1.0, 0.5);
    // differentiation exactness
    for (int n = 0; n <= p; ++n) {
      RVec mono(p + 1), dmono(p + 1);
      for (int i = 0; i <= p; ++i) {
        mono[i] = std::pow(ops.x[i], n);
        dmono[i] = n == 0 ? 0.0 : n * std::pow(ops.x[i], n - 1);
      }
      c.expect(((ops.D * mono) - dmono).cwiseAbs().maxCoeff() <= 1e-10,
               "differentiation exactness p=" + std::to_string(p));
    }
    // composition identities at a random common upwinding
    const double al = ua(rng);
    const auto opsr = fr::build_fr_operators(p, al, al);
    c.expect((opsr.Bm2 - opsr.Cm * opsr.Cm).norm() < 1e-12 &&
                 (opsr.B0 - (opsr.Cm * opsr.Cp + opsr.C0 * opsr.C0 +
                             opsr.Cp * opsr.Cm)).norm() < 1e-12 &&
                 (opsr.Bp2 - opsr.Cp * opsr.Cp).norm() < 1e-12,
             "composition identities p=" + std::to_string(p));
    // Bloch consistency on a periodic grid
    const td::Grid1D grid{12, 1.0, p};
    const double k = 2.0 * M_PI * 2.0 / grid.length();
    const auto op = fr::build_bloch(ops, grid.h, 0.3, k);
    const Vec u = td::sample_wave(grid, ops, k);
    const Vec res = td::residual(u, 0.3, ops, grid);
    for (int e = 0; e < grid.n_elem; ++e) {
      const Vec block = u.segment(e * (p + 1), p + 1);
      c.expect((res.segment(e * (p + 1), p + 1) - op.Q * block).norm() <=
                   1e-10 * std::max(1.0, (op.Q * block).norm()),
               "Bloch consistency p=" + std::to_string(p));
    }
  }
  // transfer identities
  const auto t = pmg::build_transfers(6);
  for (int i = 0; i < 6; ++i) {
    std::normal_distribution<double> g(0.0, 1.0);
    RVec u(i + 1);
    for (int j = 0; j <= i; ++j) u[j] = g(rng);
    c.expect(((t.rho[i] * (t.pi[i] * u)) - u).cwiseAbs().maxCoeff() < 1e-12,
             "rho(pi(u)) != u at level " + std::to_string(i));
  }
  for (int p = 2; p <= 6; ++p) {
    const RVec xf = quad::gauss_legendre_points(p + 1);
    RVec lp(p + 1);
    for (int j = 0; j <= p; ++j) lp[j] = quad::legendre(p, xf[j]).first;
    const auto tp = pmg::build_transfers(p);
    c.expect((tp.rho[p - 1] * lp).cwiseAbs().maxCoeff() < 1e-12,
             "top Legendre mode not annihilated at p=" + std::to_string(p));
  }
  c.detail = "orders 0..6";
  return c;
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* label;
    std::function<Check()> run;
  };
  const std::vector<Item> items = {
      {1, "scheme identity P + C = R (scalar and matrix)", criterion_1_scheme_identity},
      {2, "Fourier vs time-domain pseudo-step errors", criterion_2_fourier_timedomain},
      {3, "one-level cycle closed-form equivalence", criterion_3_closed_form},
      {4, "cycle convergence ordering (vap < v1 < v3 < base)", criterion_4_cycle_ordering},
      {5, "contraction improvement of the asymmetric cycle", criterion_5_contraction_improvement},
      {6, "BDF3 shifts the peak-benefit ratio upward", criterion_6_bdf3_shift},
      {7, "stability limit validated by the physical solver", criterion_7_stability_validation},
      {8, "mode-energy redistribution ordering", criterion_8_mode_energy},
      {9, "coarse-level pseudo-step scaling behavior", criterion_9_ftau},
      {10, "element Jacobi multigrid contraction ordering", criterion_10_ej},
      {11, "operator unit suite (orders 0..6)", criterion_11_operator_suite},
  };

  int failures = 0;
  for (const auto& item : items) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = item.run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] %2d. %s (%.2fs)%s%s\n", c.ok ? "PASS" : "FAIL", item.id,
                item.label, secs, c.detail.empty() ? "" : " -- ",
                c.detail.c_str());
    if (!c.ok) ++failures;
  }
  return failures;
}
