// frmg: Fourier analysis of p-multigrid accelerated dual-time stepping for
// 1D flux-reconstruction advection-diffusion, with a physical-space solver
// for cross-checks. Subcommands write CSV datasets; see docs/FORMATS.md.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "frmg/config.hpp"
#include "frmg/dualtime.hpp"
#include "frmg/fr_ops.hpp"
#include "frmg/pmg.hpp"
#include "frmg/sweeps.hpp"
#include "frmg/timedomain.hpp"

using namespace frmg;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out_dir = ".";
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  unsigned seed = 12345;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "path to a JSON config file");
  cmd->add_option("--preset", opts.preset, "named preset from the configs directory");
  cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--jobs", opts.jobs, "worker pool size")->capture_default_str();
  cmd->add_option("--seed", opts.seed, "seed for randomized subcommands")
      ->capture_default_str();
}

config::ProblemConfig resolve(const CommonOpts& opts) {
  nlohmann::json j = nlohmann::json::object();
  if (!opts.config_path.empty())
    j = config::load_json_file(opts.config_path);
  else if (!opts.preset.empty())
    j = config::load_json_file(config::preset_path(opts.preset));
  auto cfg = config::parse_config(j);
  std::cout << "resolved config: " << cfg.resolved.dump() << "\n";
  return cfg;
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  return opts.out_dir + "/" + name;
}

void dump_matrix_csv(const Mat& m, const std::string& path) {
  sweeps::CsvTable t({"row", "col", "re", "im"});
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      t.add_row({static_cast<double>(i), static_cast<double>(j), m(i, j).real(),
                 m(i, j).imag()});
  t.write(path);
}

void dump_matrix_csv(const RMat& m, const std::string& path) {
  dump_matrix_csv(Mat(m.cast<cplx>()), path);
}

int run_operators(const CommonOpts& opts, const config::ProblemConfig& cfg) {
  const auto ops = fr::build_fr_operators(cfg.p, cfg.alpha_a, cfg.alpha_d);
  dump_matrix_csv(ops.D, out_path(opts, "D.csv"));
  dump_matrix_csv(ops.Cm, out_path(opts, "C_minus.csv"));
  dump_matrix_csv(ops.C0, out_path(opts, "C_zero.csv"));
  dump_matrix_csv(ops.Cp, out_path(opts, "C_plus.csv"));
  dump_matrix_csv(ops.Bm2, out_path(opts, "B_minus2.csv"));
  dump_matrix_csv(ops.Bm, out_path(opts, "B_minus.csv"));
  dump_matrix_csv(ops.B0, out_path(opts, "B_zero.csv"));
  dump_matrix_csv(ops.Bp, out_path(opts, "B_plus.csv"));
  dump_matrix_csv(ops.Bp2, out_path(opts, "B_plus2.csv"));
  sweeps::CsvTable vecs({"node", "x", "gL", "gR", "lL", "lR"});
  for (int i = 0; i <= cfg.p; ++i)
    vecs.add_row({static_cast<double>(i), ops.x[i], ops.gL[i], ops.gR[i],
                  ops.lL[i], ops.lR[i]});
  vecs.write(out_path(opts, "point_data.csv"));
  if (cfg.k > 0.0) {
    const auto op = fr::build_bloch(ops, cfg.h, cfg.mu, cfg.k);
    dump_matrix_csv(op.Qa, out_path(opts, "Q_adv.csv"));
    dump_matrix_csv(op.Qd, out_path(opts, "Q_diff.csv"));
    dump_matrix_csv(op.Q, out_path(opts, "Q.csv"));
    dump_matrix_csv(op.W, out_path(opts, "W.csv"));
    sweeps::CsvTable eig({"mode", "lambda_re", "lambda_im", "beta_abs"});
    for (int i = 0; i <= cfg.p; ++i)
      eig.add_row({static_cast<double>(i), op.LambdaQ[i].real(),
                   op.LambdaQ[i].imag(), std::abs(op.beta[i])});
    eig.write(out_path(opts, "spectrum.csv"));
  }
  std::cout << "wrote operator matrices to " << opts.out_dir << "\n";
  return 0;
}

int run_stability(const CommonOpts& opts, const config::ProblemConfig& cfg) {
  sweeps::StabilityGrid grid;
  grid.x0 = cfg.sweep.value("lambda_x_min", -6.0);
  grid.x1 = cfg.sweep.value("lambda_x_max", 1.0);
  grid.y0 = cfg.sweep.value("lambda_y_min", -5.0);
  grid.y1 = cfg.sweep.value("lambda_y_max", 5.0);
  grid.nx = cfg.sweep.value("nx", 401);
  grid.ny = cfg.sweep.value("ny", 401);
  std::vector<int> m_list = cfg.sweep.value("m_list", std::vector<int>{1, 10});
  auto table = sweeps::sweep_stability(cfg.dualtime(), m_list, grid, opts.jobs);
  table.write(out_path(opts, "stability.csv"));
  std::cout << "wrote " << table.row_count() << " contour segments\n";
  return 0;
}

int run_cfl(const CommonOpts& opts, const config::ProblemConfig& cfg) {
  const std::string mode = cfg.sweep.value("mode", std::string("explicit"));
  const int n_k = cfg.sweep.value("n_k", 64);
  if (mode == "explicit") {
    const auto orders = cfg.sweep.value("orders", std::vector<int>{2, 3, 4, 5, 6});
    const auto mus = cfg.sweep.value(
        "mu_list", std::vector<double>{0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0});
    auto table = sweeps::sweep_cfl_explicit(orders, mus, cfg.h, cfg.alpha_a,
                                            cfg.alpha_d, cfg.dualtime(), n_k,
                                            opts.jobs);
    table.write(out_path(opts, "cfl.csv"));
    std::cout << "wrote " << table.row_count() << " explicit CFL rows\n";
  } else if (mode == "coupled") {
    const auto m_list = cfg.sweep.value("m_list", std::vector<int>{1, 10, 20});
    std::vector<double> dt_list;
    if (cfg.sweep.contains("dt_list")) {
      dt_list = cfg.sweep.at("dt_list").get<std::vector<double>>();
    } else {
      const double lo = cfg.sweep.value("dt_min", 0.05);
      const double hi = cfg.sweep.value("dt_max", 2.0);
      const int n = cfg.sweep.value("n_dt", 25);
      for (int i = 0; i < n; ++i)
        dt_list.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    }
    auto table =
        sweeps::sweep_cfl_coupled(cfg.p, cfg.h, cfg.mu, cfg.alpha_a, cfg.alpha_d,
                                  m_list, dt_list, cfg.dualtime(), n_k, opts.jobs);
    table.write(out_path(opts, "cfl.csv"));
    std::cout << "wrote " << table.row_count() << " coupled CFL rows\n";
  } else {
    throw InvalidInput("cfl: sweep.mode must be \"explicit\" or \"coupled\"");
  }
  return 0;
}

int run_error(const CommonOpts& opts, const config::ProblemConfig& cfg) {
  if (cfg.k <= 0.0) throw InvalidInput("error: config needs space.k or space.khat");
  const int n_steps = cfg.sweep.value("pseudo_steps", 200);
  const auto ops = fr::build_fr_operators(cfg.p, cfg.alpha_a, cfg.alpha_d);
  const auto op = fr::build_bloch(ops, cfg.h, cfg.mu, cfg.k);
  const cplx omega = dual::dispersion_omega(cfg.k, cfg.mu);
  auto dcfg = cfg.dualtime();
  dcfg.M = 1;
  const auto props = dual::build_propagators(op, dcfg, omega);
  const Vec u0 = op.wave_vector();
  const Vec usrc = props.C * (props.c_hist * u0);
  const Vec ustar = dual::pseudo_time_operator(op, dcfg)
                        .partialPivLu()
                        .solve(props.C_B * u0);
  const cplx exact = std::exp(-iunit * omega * cfg.dt);

  sweeps::CsvTable table({"step", "tau", "err_analytic", "err_steady"});
  table.set_meta("k", cfg.k);
  table.set_meta("khat", M_PI * cfg.k / cfg.k_nyquist());
  table.set_meta("dt", cfg.dt);
  table.set_meta("dtau", cfg.dtau);
  table.set_meta("mu", cfg.mu);
  Vec u = u0;
  for (int s = 0; s <= n_steps; ++s) {
    table.add_row({static_cast<double>(s), s * cfg.dtau,
                   (u - exact * u0).norm(), (u - ustar).norm()});
    u = props.P * u - usrc;
  }
  table.write(out_path(opts, "error.csv"));
  std::cout << "wrote " << table.row_count() << " error rows\n";
  return 0;
}

int run_cycle_like(const CommonOpts& opts, const config::ProblemConfig& cfg,
                   const std::string& filename) {
  if (cfg.k <= 0.0)
    throw InvalidInput("cycle-run: config needs space.k or space.khat");
  if (!cfg.cycle) throw InvalidInput("cycle-run: config needs a cycle section");
  const int n_cycles = cfg.sweep.value("cycles", 200);
  const double stop = cfg.sweep.value("stop_below", -1.0);
  pmg::FourierSystem sys(cfg.p, cfg.h, cfg.mu, cfg.alpha_a, cfg.alpha_d, cfg.k,
                         cfg.dualtime(), cfg.cycle->f_tau);
  const auto run = pmg::run_cycles(sys, *cfg.cycle, n_cycles, stop);
  sweeps::CsvTable table({"cycle", "tau", "fine_steps", "err_steady",
                          "err_analytic", "beta_primary", "beta_secondary"});
  table.set_meta("k", cfg.k);
  table.set_meta("f_tau", cfg.cycle->f_tau);
  table.set_meta("fine_steps_per_cycle", static_cast<double>(cfg.cycle->fine_steps()));
  for (const auto& s : run.samples)
    table.add_row({static_cast<double>(s.cycle), s.tau_fine,
                   static_cast<double>(s.fine_steps), s.err_steady,
                   s.err_analytic, s.beta_primary, s.beta_secondary});
  table.write(out_path(opts, filename));
  std::cout << "wrote " << table.row_count() << " cycle rows\n";
  return 0;
}

/// Explicit von Neumann limit for pure advection at this order and upwinding,
/// the normalization used by the contraction sweeps.
double advective_dtau_max(const config::ProblemConfig& cfg) {
  const auto ops = fr::build_fr_operators(cfg.p, cfg.alpha_a, cfg.alpha_d);
  const double knq = (cfg.p + 1) * M_PI / cfg.h;
  dual::DualTimeConfig ref;
  ref.dt = 1.0;
  ref.dtau = 0.1;
  ref.M = 1;
  ref.bdf = cfg.bdf;
  ref.tab = cfg.tab;
  const auto sweep = dual::spectrum_sweep(ops, cfg.h, 0.0,
                                          dual::log_k_grid(knq, 64), ref.bdf,
                                          ref.dt);
  return dual::dtau_max(sweep, ref, dual::StabilityMode::kExplicit, 1e-8,
                        10.0 * cfg.h / ((cfg.p + 1) * (cfg.p + 1)));
}

int run_contraction(const CommonOpts& opts, const config::ProblemConfig& cfg) {
  if (cfg.k <= 0.0)
    throw InvalidInput("contraction: config needs space.k or space.khat");
  if (!cfg.cycle) throw InvalidInput("contraction: config needs a cycle section");
  const std::string smoother_name = cfg.sweep.value("smoother", std::string("erk"));
  const auto smoother =
      smoother_name == "ej" ? pmg::Smoother::kEj : pmg::Smoother::kErk;
  const double ej_kappa = cfg.sweep.value("ej_kappa", 0.5);
  double dtau = cfg.dtau;
  if (cfg.sweep.contains("dtau_fraction_of_advective_max"))
    dtau = cfg.sweep.at("dtau_fraction_of_advective_max").get<double>() *
           advective_dtau_max(cfg);
  std::vector<double> ratios;
  if (cfg.sweep.contains("ratios")) {
    ratios = cfg.sweep.at("ratios").get<std::vector<double>>();
  } else if (cfg.sweep.contains("dt_list")) {
    ratios = cfg.sweep.at("dt_list").get<std::vector<double>>();
  } else {
    const double lo = cfg.sweep.value("ratio_min", 2.0);
    const double hi = cfg.sweep.value("ratio_max", 2048.0);
    const int n = cfg.sweep.value("n_ratio", 40);
    for (int i = 0; i < n; ++i)
      ratios.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  }
  const auto sweep = sweeps::sweep_contraction(
      cfg.p, cfg.h, cfg.mu, cfg.alpha_a, cfg.alpha_d, cfg.k, dtau, cfg.bdf,
      cfg.tab, *cfg.cycle, ratios, opts.jobs, smoother, ej_kappa);
  auto table = sweeps::contraction_table(sweep);
  table.set_meta("k", cfg.k);
  table.set_meta("dtau", dtau);
  table.set_meta("smoother", smoother_name == "ej" ? 1.0 : 0.0);
  table.write(out_path(opts, "contraction.csv"));
  std::cout << "wrote " << table.row_count() << " contraction rows";
  if (sweep.argbest >= 0)
    std::cout << "; best benefit " << sweeps::CsvTable::format(
                     sweep.points[sweep.argbest].gamma_base /
                     sweep.points[sweep.argbest].gamma_pmg)
              << " at dt/dtau = " << sweep.points[sweep.argbest].ratio;
  std::cout << "\n";
  return 0;
}

int run_verify(const CommonOpts& opts, const config::ProblemConfig& cfg) {
  if (cfg.k <= 0.0) throw InvalidInput("verify: config needs space.k or space.khat");
  const int n_elem = cfg.sweep.value("n_elem", 32);
  const int n_steps = cfg.sweep.value("pseudo_steps", 200);
  const double tol = cfg.sweep.value("tolerance", 1e-8);
  td::Grid1D grid{n_elem, cfg.h, cfg.p};
  const double k = td::snap_wavenumber(cfg.k, grid);
  if (std::abs(k - cfg.k) > 1e-12 * std::max(1.0, cfg.k))
    std::cout << "note: snapped k to the grid wavenumber "
              << sweeps::CsvTable::format(k) << "\n";
  const auto dev = td::fourier_deviation(cfg.p, cfg.h, cfg.mu, cfg.alpha_a,
                                         cfg.alpha_d, k, cfg.dualtime(), n_elem,
                                         n_steps);
  sweeps::CsvTable table({"step", "err_fourier", "err_physical"});
  table.set_meta("k", k);
  table.set_meta("n_elem", static_cast<double>(n_elem));
  for (size_t s = 0; s < dev.fourier_norms.size(); ++s)
    table.add_row({static_cast<double>(s + 1), dev.fourier_norms[s],
                   dev.physical_norms[s]});
  table.write(out_path(opts, "verify.csv"));

  // snapshot of the physical end state
  const auto ops = fr::build_fr_operators(cfg.p, cfg.alpha_a, cfg.alpha_d);
  sweeps::CsvTable snap({"element", "node", "x", "re_u", "im_u"});
  snap.set_meta("pseudo_steps", static_cast<double>(n_steps));
  for (int e = 0; e < n_elem; ++e)
    for (int j = 0; j <= cfg.p; ++j) {
      const cplx u = dev.final_state[e * (cfg.p + 1) + j];
      snap.add_row({static_cast<double>(e), static_cast<double>(j),
                    td::node_x(grid, ops.x, e, j), u.real(), u.imag()});
    }
  snap.write(out_path(opts, "snapshot.csv"));
  std::cout << "max relative deviation over " << n_steps
            << " pseudo steps: " << sweeps::CsvTable::format(dev.max_rel_dev)
            << (dev.max_rel_dev <= tol ? "  (PASS)" : "  (FAIL)") << "\n";
  return dev.max_rel_dev <= tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier analysis of p-multigrid accelerated dual-time stepping "
               "for 1D flux-reconstruction advection-diffusion"};
  app.require_subcommand(1);

  std::map<std::string, CommonOpts> opts;
  std::map<std::string, CLI::App*> cmds;
  for (const char* name :
       {"operators", "stability", "cfl", "error", "contraction", "modes",
        "cycle-run", "verify"}) {
    cmds[name] = app.add_subcommand(name);
    add_common(cmds[name], opts[name]);
  }
  cmds["operators"]->description(
      "dump FR and Bloch operator matrices as CSV "
      "(columns row,col,re,im; point_data.csv: node,x,gL,gR,lL,lR)");
  cmds["stability"]->description(
      "|amplification|=1 contours over a lambda grid "
      "(columns m,seg_x0,seg_y0,seg_x1,seg_y1)");
  cmds["cfl"]->description(
      "maximum stable pseudo-step sweeps; explicit mode columns p,mu,dtau_max, "
      "coupled mode columns m,dt,dtau_max");
  cmds["error"]->description(
      "per-pseudo-step error history at one wavenumber "
      "(columns step,tau,err_analytic,err_steady)");
  cmds["contraction"]->description(
      "cycle vs base contraction over dt/dtau (columns dt_over_dtau,"
      "gamma_base,gamma_pmg,benefit,argbest)");
  cmds["modes"]->description(
      "per-cycle mode energies (columns cycle,tau,fine_steps,err_steady,"
      "err_analytic,beta_primary,beta_secondary)");
  cmds["cycle-run"]->description(
      "per-cycle error and mode-energy history (columns cycle,tau,fine_steps,"
      "err_steady,err_analytic,beta_primary,beta_secondary)");
  cmds["verify"]->description(
      "Fourier vs physical-space cross-check (verify.csv: step,err_fourier,"
      "err_physical; snapshot.csv: element,node,x,re_u,im_u)");

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& [name, cmd] : cmds) {
      if (!cmd->parsed()) continue;
      const auto cfg = resolve(opts[name]);
      if (name == "operators") return run_operators(opts[name], cfg);
      if (name == "stability") return run_stability(opts[name], cfg);
      if (name == "cfl") return run_cfl(opts[name], cfg);
      if (name == "error") return run_error(opts[name], cfg);
      if (name == "contraction") return run_contraction(opts[name], cfg);
      if (name == "modes" ) return run_cycle_like(opts[name], cfg, "modes.csv");
      if (name == "cycle-run") return run_cycle_like(opts[name], cfg, "cycle_run.csv");
      if (name == "verify") return run_verify(opts[name], cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
