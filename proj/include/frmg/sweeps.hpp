#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "frmg/dualtime.hpp"
#include "frmg/pmg.hpp"
#include "frmg/types.hpp"

namespace frmg::sweeps {

/// Applies fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to preallocated slots so output order is independent of timing.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

/// CSV table with a `# key=value` config echo header. All floating-point
/// values are printed with 17 significant digits so reruns are byte-identical.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  void set_meta(const std::string& key, const std::string& value) {
    meta_.emplace_back(key, value);
  }
  void set_meta(const std::string& key, double value) {
    meta_.emplace_back(key, format(value));
  }

  void add_row(const std::vector<double>& row) {
    if (row.size() != columns_.size())
      throw InvalidInput("CsvTable: row width does not match columns");
    rows_.push_back(row);
  }

  static std::string format(double v) {
    if (v == 0.0) v = 0.0;  // normalize the sign of zero for reproducibility
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : meta_) out += "# " + k + "=" + v + "\n";
    for (size_t c = 0; c < columns_.size(); ++c)
      out += (c ? "," : "") + columns_[c];
    out += "\n";
    for (const auto& row : rows_) {
      for (size_t c = 0; c < row.size(); ++c)
        out += (c ? "," : "") + format(row[c]);
      out += "\n";
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw NumericalError("cannot open output file " + path);
    f << to_string();
  }

  size_t row_count() const { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<double>> rows_;
};

// ---------------------------------------------------------------------------
// Marching squares
// ---------------------------------------------------------------------------

struct Segment {
  double x0, y0, x1, y1;
};

/// Extracts the iso-contour of a scalar field sampled on a rectangular grid
/// (field[i*ny + j] at (xs[i], ys[j])) by marching squares with linear
/// interpolation; ambiguous saddles split on the cell-center average.
inline std::vector<Segment> marching_squares(const std::vector<double>& field,
                                             const std::vector<double>& xs,
                                             const std::vector<double>& ys,
                                             double iso) {
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());
  std::vector<Segment> segs;
  auto at = [&](int i, int j) { return field[i * ny + j]; };
  auto lerp = [&](double a, double b, double fa, double fb) {
    return a + (iso - fa) / (fb - fa) * (b - a);
  };
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      const double f00 = at(i, j), f10 = at(i + 1, j);
      const double f01 = at(i, j + 1), f11 = at(i + 1, j + 1);
      int code = 0;
      if (f00 > iso) code |= 1;
      if (f10 > iso) code |= 2;
      if (f11 > iso) code |= 4;
      if (f01 > iso) code |= 8;
      if (code == 0 || code == 15) continue;
      // edge intersection points: bottom, right, top, left
      const double xb = lerp(xs[i], xs[i + 1], f00, f10), yb = ys[j];
      const double xr = xs[i + 1], yr = lerp(ys[j], ys[j + 1], f10, f11);
      const double xt = lerp(xs[i], xs[i + 1], f01, f11), yt = ys[j + 1];
      const double xl = xs[i], yl = lerp(ys[j], ys[j + 1], f00, f01);
      auto add = [&](double ax, double ay, double bx, double by) {
        segs.push_back({ax, ay, bx, by});
      };
      switch (code) {
        case 1: case 14: add(xl, yl, xb, yb); break;
        case 2: case 13: add(xb, yb, xr, yr); break;
        case 3: case 12: add(xl, yl, xr, yr); break;
        case 4: case 11: add(xr, yr, xt, yt); break;
        case 6: case 9:  add(xb, yb, xt, yt); break;
        case 7: case 8:  add(xl, yl, xt, yt); break;
        case 5: case 10: {
          const double center = 0.25 * (f00 + f10 + f01 + f11);
          const bool link = (center > iso) == (code == 5);
          if (link) {
            add(xl, yl, xb, yb);
            add(xr, yr, xt, yt);
          } else {
            add(xl, yl, xt, yt);
            add(xb, yb, xr, yr);
          }
          break;
        }
        default: break;
      }
    }
  }
  return segs;
}

// ---------------------------------------------------------------------------
// Stability-region sweep
// ---------------------------------------------------------------------------

struct StabilityGrid {
  double x0 = -6.0, x1 = 1.0;
  double y0 = -5.0, y1 = 5.0;
  int nx = 401, ny = 401;
};

/// |amplification| = 1 contours of the coupled update over a rectangular
/// lambda grid, one contour set per pseudo-step count in `m_list`.
/// Columns: m, x0, y0, x1, y1 (one row per contour segment).
inline CsvTable sweep_stability(const dual::DualTimeConfig& base,
                                const std::vector<int>& m_list,
                                const StabilityGrid& grid, int jobs) {
  CsvTable table({"m", "seg_x0", "seg_y0", "seg_x1", "seg_y1"});
  table.set_meta("dt", base.dt);
  table.set_meta("dtau", base.dtau);
  table.set_meta("grid", std::to_string(grid.nx) + "x" + std::to_string(grid.ny));
  std::vector<double> xs(grid.nx), ys(grid.ny);
  for (int i = 0; i < grid.nx; ++i)
    xs[i] = grid.x0 + (grid.x1 - grid.x0) * i / (grid.nx - 1);
  for (int j = 0; j < grid.ny; ++j)
    ys[j] = grid.y0 + (grid.y1 - grid.y0) * j / (grid.ny - 1);

  for (int m : m_list) {
    dual::DualTimeConfig cfg = base;
    cfg.M = m;
    std::vector<double> field(grid.nx * grid.ny);
    parallel_for(grid.nx, jobs, [&](int i) {
      for (int j = 0; j < grid.ny; ++j)
        field[i * grid.ny + j] =
            std::abs(dual::scalar_amplification(cplx(xs[i], ys[j]), cfg));
    });
    const auto segs = marching_squares(field, xs, ys, 1.0);
    if (segs.empty())
      std::fprintf(stderr, "warning: empty |amp|=1 contour for m=%d\n", m);
    for (const auto& s : segs)
      table.add_row({static_cast<double>(m), s.x0, s.y0, s.x1, s.y1});
  }
  return table;
}

// ---------------------------------------------------------------------------
// CFL sweeps
// ---------------------------------------------------------------------------

/// Explicit von Neumann limits: dtau_max(p, mu) for plain ERK time stepping.
/// Columns: p, mu, dtau_max.
inline CsvTable sweep_cfl_explicit(const std::vector<int>& orders,
                                   const std::vector<double>& mu_list,
                                   double h, double alpha_a, double alpha_d,
                                   const dual::DualTimeConfig& base, int n_k,
                                   int jobs) {
  CsvTable table({"p", "mu", "dtau_max"});
  table.set_meta("h", h);
  table.set_meta("alpha_a", alpha_a);
  table.set_meta("alpha_d", alpha_d);
  struct Task {
    int p;
    double mu;
  };
  std::vector<Task> tasks;
  for (int p : orders)
    for (double mu : mu_list) tasks.push_back({p, mu});
  std::vector<double> out(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), jobs, [&](int t) {
    const auto ops = fr::build_fr_operators(tasks[t].p, alpha_a, alpha_d);
    const double knq = (tasks[t].p + 1) * M_PI / h;
    const auto sweep = dual::spectrum_sweep(ops, h, tasks[t].mu,
                                            dual::log_k_grid(knq, n_k),
                                            base.bdf, base.dt);
    out[t] = dual::dtau_max(sweep, base, dual::StabilityMode::kExplicit, 1e-8,
                            10.0 * h / ((tasks[t].p + 1) * (tasks[t].p + 1)));
  });
  for (size_t t = 0; t < tasks.size(); ++t)
    table.add_row({static_cast<double>(tasks[t].p), tasks[t].mu, out[t]});
  return table;
}

/// Coupled limits: dtau_max(dt; m) for the dual-time update with the
/// wavenumber swept over (0, k_Nq(dt)]. Columns: m, dt, dtau_max.
inline CsvTable sweep_cfl_coupled(int p, double h, double mu,
                                  double alpha_a, double alpha_d,
                                  const std::vector<int>& m_list,
                                  const std::vector<double>& dt_list,
                                  const dual::DualTimeConfig& base, int n_k,
                                  int jobs) {
  CsvTable table({"m", "dt", "dtau_max"});
  table.set_meta("p", static_cast<double>(p));
  table.set_meta("h", h);
  table.set_meta("mu", mu);
  const auto ops = fr::build_fr_operators(p, alpha_a, alpha_d);
  struct Task {
    int m;
    double dt;
  };
  std::vector<Task> tasks;
  for (int m : m_list)
    for (double dt : dt_list) tasks.push_back({m, dt});
  std::vector<double> out(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), jobs, [&](int t) {
    dual::DualTimeConfig cfg = base;
    cfg.dt = tasks[t].dt;
    cfg.M = tasks[t].m;
    const double knq = std::min(M_PI / cfg.dt, (p + 1) * M_PI / h);
    const auto sweep = dual::spectrum_sweep(ops, h, mu, dual::log_k_grid(knq, n_k),
                                            cfg.bdf, cfg.dt);
    out[t] = dual::dtau_max(sweep, cfg, dual::StabilityMode::kCoupled, 1e-8,
                            10.0 * h / ((p + 1) * (p + 1)));
  });
  for (size_t t = 0; t < tasks.size(); ++t)
    table.add_row({static_cast<double>(tasks[t].m), tasks[t].dt, out[t]});
  return table;
}

// ---------------------------------------------------------------------------
// Contraction sweep
// ---------------------------------------------------------------------------

struct ContractionPoint {
  double ratio = 0.0;       // dt/dtau
  double gamma_base = 0.0;  // per-fine-step rate, plain dual time
  double gamma_pmg = 0.0;   // same for the multigrid cycle
};

struct ContractionSweep {
  std::vector<ContractionPoint> points;
  int argbest = -1;  // index of the largest base/pmg benefit
};

/// Initial contraction factors of the base scheme and a cycle over a grid of
/// dt/dtau ratios at fixed dtau (ERK smoothing), or over dt directly (element
/// Jacobi smoothing, which has no pseudo step). Points where the pseudo
/// stepping itself is unstable are skipped.
inline ContractionSweep sweep_contraction(int p, double h, double mu,
                                          double alpha_a, double alpha_d,
                                          double k, double dtau,
                                          const schemes::BdfScheme& bdf,
                                          const schemes::ButcherTableau& tab,
                                          const pmg::CycleSpec& cycle,
                                          const std::vector<double>& ratios,
                                          int jobs,
                                          pmg::Smoother smoother = pmg::Smoother::kErk,
                                          double ej_kappa = 0.5) {
  ContractionSweep out;
  out.points.resize(ratios.size());
  std::vector<char> ok(ratios.size(), 0);
  parallel_for(static_cast<int>(ratios.size()), jobs, [&](int i) {
    dual::DualTimeConfig cfg;
    if (smoother == pmg::Smoother::kErk) {
      cfg.dt = ratios[i] * dtau;
      cfg.dtau = dtau;
    } else {
      cfg.dt = ratios[i];     // EJ sweeps physical dt directly
      cfg.dtau = ratios[i] / 10.0;  // unused by the EJ update
    }
    cfg.M = 1;
    cfg.bdf = bdf;
    cfg.tab = tab;
    try {
      pmg::FourierSystem sys(p, h, mu, alpha_a, alpha_d, k, cfg, cycle.f_tau,
                             smoother, ej_kappa);
      ContractionPoint pt;
      pt.ratio = ratios[i];
      pt.gamma_base =
          pmg::initial_contraction(sys, pmg::make_single_level(p, 1));
      pt.gamma_pmg = pmg::initial_contraction(sys, cycle);
      out.points[i] = pt;
      ok[i] = 1;
    } catch (const NumericalError&) {
      ok[i] = 0;
    }
  });
  std::vector<ContractionPoint> kept;
  for (size_t i = 0; i < ratios.size(); ++i)
    if (ok[i]) kept.push_back(out.points[i]);
  out.points = std::move(kept);
  double best = -1.0;
  for (size_t i = 0; i < out.points.size(); ++i) {
    const double benefit = out.points[i].gamma_base / out.points[i].gamma_pmg;
    if (benefit > best) {
      best = benefit;
      out.argbest = static_cast<int>(i);
    }
  }
  return out;
}

inline CsvTable contraction_table(const ContractionSweep& sweep) {
  CsvTable table({"dt_over_dtau", "gamma_base", "gamma_pmg", "benefit", "argbest"});
  for (size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& pt = sweep.points[i];
    table.add_row({pt.ratio, pt.gamma_base, pt.gamma_pmg,
                   pt.gamma_base / pt.gamma_pmg,
                   static_cast<double>(static_cast<int>(i) == sweep.argbest)});
  }
  return table;
}

}  // namespace frmg::sweeps
