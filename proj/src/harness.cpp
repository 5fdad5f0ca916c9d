#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>

#include "fgd/harness.hpp"
#include "fgd/numdiff.hpp"
#include "fgd/plot.hpp"
#include "fgd/sampling.hpp"

namespace fgd {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
      .count();
}

std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("FGD_OUT_DIR"); env && *env) return env;
  return "fgd_out";
}

std::filesystem::path prepare_output_dir(const RunConfig& cfg) {
  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);
  RunConfig resolved = cfg;
  resolved.output_dir = dir;
  write_resolved_config(resolved, dir / (to_string(cfg.experiment) + "_resolved.cfg"));
  return dir;
}

double eta_at_epoch(const RunConfig& cfg, std::size_t epoch) {
  double eta = cfg.fgd.eta;
  for (std::size_t boundary : cfg.lr_decay_epochs) {
    if (epoch >= boundary) eta *= cfg.lr_decay_factor;
  }
  return eta;
}

}  // namespace

// ---------------------------------------------------------------------------
// toy experiment
// ---------------------------------------------------------------------------

ToySeedResult run_toy_seed(const RunConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix v = random_matrix(cfg.n, cfg.p, rng);
  const Problem problem = nearest_orthogonal_problem(v);
  const auto [w0, f0] = nearest_orthogonal_closed_form(v);

  const Matrix theta0 = random_orthonormal(cfg.n, cfg.p, rng);
  State s = fgd_init(theta0, problem.grad_at(theta0));

  ToySeedResult result;
  result.seed = seed;
  result.f0 = f0;

  auto record = [&](long epoch, std::int64_t wall) {
    MetricsRow row;
    row.step = epoch;
    row.epoch = epoch;
    row.loss = problem.loss_at(s.theta);
    row.loss_gap = row.loss - f0;
    row.v_value = lyapunov_v(s, cfg.fgd.k);
    row.stiefel_dist = stiefel_distance(s.theta);
    row.tangency = tangency_residual(s);
    row.wall_ns = wall;
    result.rows.push_back(row);
  };

  record(0, 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    FgdConfig step_cfg = cfg.fgd;
    step_cfg.eta = eta_at_epoch(cfg, epoch);
    const auto t0 = Clock::now();
    s = fgd_step(s, problem.grad_at, step_cfg);
    record(static_cast<long>(epoch), elapsed_ns(t0));
  }

  result.final_loss_gap = *result.rows.back().loss_gap;
  result.final_dist = result.rows.back().stiefel_dist;
  result.max_dist = 0.0;
  for (const MetricsRow& r : result.rows)
    result.max_dist = std::max(result.max_dist, r.stiefel_dist);
  result.pass = result.final_loss_gap <= kToyFinalGapMax &&
                result.max_dist <= kToyMaxDistMax;
  return result;
}

int run_toy(const RunConfig& cfg) {
  const std::filesystem::path dir = prepare_output_dir(cfg);

  std::vector<std::future<ToySeedResult>> futures;
  futures.reserve(cfg.num_seeds);
  for (std::size_t i = 0; i < cfg.num_seeds; ++i) {
    const std::uint64_t seed = cfg.seed + i;
    futures.push_back(std::async(std::launch::async,
                                 [&cfg, seed] { return run_toy_seed(cfg, seed); }));
  }
  std::vector<ToySeedResult> results;
  results.reserve(cfg.num_seeds);
  for (auto& f : futures) results.push_back(f.get());

  std::ofstream summary(dir / "toy_summary.csv");
  summary << "seed,f0,final_loss_gap,final_dist,max_dist,pass\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  bool all_pass = true;
  for (const ToySeedResult& r : results) {
    write_metrics_csv(r.rows, dir / ("toy_seed_" + std::to_string(r.seed) + ".csv"),
                      false);
    summary << r.seed << ',' << num(r.f0) << ',' << num(r.final_loss_gap) << ','
            << num(r.final_dist) << ',' << num(r.max_dist) << ','
            << (r.pass ? "true" : "false") << '\n';
    all_pass = all_pass && r.pass;
    std::cout << "toy seed " << r.seed << ": final f-f0 = " << r.final_loss_gap
              << ", max distance = " << r.max_dist
              << (r.pass ? "" : "  [threshold exceeded]") << '\n';
  }

  if (cfg.plot) {
    std::vector<PlotSeries> gap_series, dist_series;
    for (const ToySeedResult& r : results) {
      PlotSeries gs{"seed " + std::to_string(r.seed), {}};
      PlotSeries ds{"seed " + std::to_string(r.seed), {}};
      for (const MetricsRow& row : r.rows) {
        gs.points.emplace_back(static_cast<double>(row.epoch),
                               std::max(*row.loss_gap, 1e-16));
        ds.points.emplace_back(static_cast<double>(row.epoch),
                               std::max(row.stiefel_dist, 1e-16));
      }
      gap_series.push_back(std::move(gs));
      dist_series.push_back(std::move(ds));
    }
    write_line_chart_svg(dir / "toy_loss_gap.svg", "Distance gap to the optimum",
                         "epoch", "f(W) - f0", gap_series, true);
    write_line_chart_svg(dir / "toy_distance.svg", "Distance to the Stiefel manifold",
                         "epoch", "||W^T W - I||", dist_series, true);
  }
  return all_pass ? kExitOk : kExitAcceptanceFail;
}

// ---------------------------------------------------------------------------
// decay experiment (exponential convergence of V)
// ---------------------------------------------------------------------------

DecayResult run_decay_core(const RunConfig& cfg) {
  Rng rng(cfg.seed);
  const Matrix theta_base = random_orthonormal(cfg.n, cfg.p, rng);
  Matrix phi_tan = tangent_project(theta_base, random_matrix(cfg.n, cfg.p, rng));
  const double tn = frobenius_norm(phi_tan);
  if (tn > 1e-300) phi_tan *= 0.3 / tn;

  State s0(theta_base, phi_tan);
  if (cfg.decay_start == "perturbed") {
    Matrix e_theta = random_matrix(cfg.n, cfg.p, rng);
    e_theta *= 1.0 / frobenius_norm(e_theta);
    Matrix e_phi = random_matrix(cfg.n, cfg.p, rng);
    e_phi *= 1.0 / frobenius_norm(e_phi);
    // V scales quadratically in the perturbation size near the bundle, so a
    // multiplicative correction lands inside [v0_lo, v0_hi] quickly.
    double eps = 0.01;
    const double target = std::sqrt(cfg.v0_lo * cfg.v0_hi);
    for (int iter = 0; iter < 100; ++iter) {
      const State trial(theta_base + eps * e_theta, phi_tan + eps * e_phi);
      const double v = lyapunov_v(trial, cfg.fgd.k);
      if (v >= cfg.v0_lo && v <= cfg.v0_hi) {
        s0 = trial;
        break;
      }
      const double factor = std::sqrt(target / std::max(v, 1e-300));
      eps *= std::clamp(factor, 0.25, 4.0);
    }
    const double v_check = lyapunov_v(s0, cfg.fgd.k);
    if (v_check < cfg.v0_lo || v_check > cfg.v0_hi) {
      throw Error("run_decay: could not place V(0) inside [" +
                  std::to_string(cfg.v0_lo) + ", " + std::to_string(cfg.v0_hi) +
                  "], got " + std::to_string(v_check));
    }
  }

  const FieldParams params = field_params(cfg.fgd);
  const VectorField field = [&params](const State& s, const Matrix& g) {
    return field_feedback_full(s, g, params);
  };
  const Trajectory traj = integrate(field, s0, zero_gradient(), cfg.h, cfg.t_end,
                                    rk4_step, cfg.fgd.k);

  DecayResult out;
  out.v0 = traj.v_values.front();
  out.times = traj.times;
  out.v_values = traj.v_values;
  out.predicted.reserve(traj.times.size());
  for (double t : traj.times)
    out.predicted.push_back(out.v0 * std::exp(-cfg.fgd.alpha * t));
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double v = traj.v_values[i];
    out.max_v = std::max(out.max_v, v);
    out.max_abs_dev = std::max(out.max_abs_dev, std::abs(v - out.v0));
    if (out.v0 > 0.0 && v > 0.0) {
      out.max_log_err =
          std::max(out.max_log_err, std::abs(std::log(v) - std::log(out.predicted[i])));
    }
  }
  return out;
}

int run_decay(const RunConfig& cfg) {
  const std::filesystem::path dir = prepare_output_dir(cfg);
  const DecayResult r = run_decay_core(cfg);

  {
    std::ofstream out(dir / "decay.csv");
    out << "t,v,predicted\n";
    char buf[128];
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", r.times[i],
                    r.v_values[i], r.predicted[i]);
      out << buf << '\n';
    }
  }

  char num[48];
  bool pass = false;
  std::string verdict;
  if (cfg.decay_start == "on_bundle") {
    pass = r.max_v <= 1e-12;
    std::snprintf(num, sizeof(num), "%.6g", r.max_v);
    verdict = "max V = " + std::string(num) + " (bound 1e-12)";
  } else if (cfg.fgd.alpha == 0.0) {
    pass = r.max_abs_dev <= 1e-10;
    std::snprintf(num, sizeof(num), "%.6g", r.max_abs_dev);
    verdict = "max |V - V0| = " + std::string(num) + " (bound 1e-10)";
  } else {
    pass = r.max_log_err <= 1e-3;
    std::snprintf(num, sizeof(num), "%.6g", r.max_log_err);
    verdict = "max |ln V + alpha t - ln V0| = " + std::string(num) +
              " (bound 1e-3)";
  }
  std::ofstream summary(dir / "decay_summary.txt");
  summary << "v0 = " << r.v0 << "\n" << verdict << "\n"
          << (pass ? "pass" : "fail") << "\n";
  std::cout << "decay: V(0) = " << r.v0 << ", " << verdict
            << (pass ? "" : "  [threshold exceeded]") << '\n';

  if (cfg.plot) {
    PlotSeries measured{"V(t)", {}};
    PlotSeries predicted{"V(0) exp(-alpha t)", {}};
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      measured.points.emplace_back(r.times[i], std::max(r.v_values[i], 1e-18));
      predicted.points.emplace_back(r.times[i], std::max(r.predicted[i], 1e-18));
    }
    write_line_chart_svg(dir / "decay.svg", "Lyapunov decay", "t", "V",
                         {measured, predicted}, true);
  }
  return pass ? kExitOk : kExitAcceptanceFail;
}

// ---------------------------------------------------------------------------
// invariance experiment (constraint preservation of the bundle field)
// ---------------------------------------------------------------------------

InvarianceResult run_invariance_core(const RunConfig& cfg) {
  Rng rng(cfg.seed);
  Matrix a = sym(random_matrix(cfg.n, cfg.n, rng));
  a *= 3.0 / frobenius_norm(a);
  const Problem problem = trace_min_problem(a);

  const Matrix theta0 = random_orthonormal(cfg.n, cfg.p, rng);
  Matrix phi0 = tangent_project(theta0, random_matrix(cfg.n, cfg.p, rng));
  const double pn = frobenius_norm(phi0);
  if (pn > 1e-300) phi0 *= 1.0 / pn;
  const State s0(theta0, phi0);

  const FieldParams params = field_params(cfg.fgd);
  const VectorField field = [&params](const State& s, const Matrix& g) {
    return field_tangent_bundle(s, g, params);
  };

  auto max_drift = [&](double h, double* max_tangency, Trajectory* keep) {
    const Trajectory traj =
        integrate(field, s0, problem.grad_at, h, cfg.t_end, rk4_step, cfg.fgd.k);
    double drift = 0.0, tang = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      drift = std::max(drift, traj.distances[i]);
      tang = std::max(tang, tangency_residual(traj.states[i]));
    }
    if (max_tangency) *max_tangency = tang;
    if (keep) *keep = traj;
    return drift;
  };

  InvarianceResult out;
  out.max_drift_h = max_drift(cfg.h, &out.max_tangency_h, &out.trajectory);
  out.max_drift_half_h = max_drift(cfg.h / 2.0, nullptr, nullptr);
  out.drift_ratio = out.max_drift_half_h > 0.0
                        ? out.max_drift_h / out.max_drift_half_h
                        : std::numeric_limits<double>::infinity();
  return out;
}

int run_invariance(const RunConfig& cfg) {
  const std::filesystem::path dir = prepare_output_dir(cfg);
  const InvarianceResult r = run_invariance_core(cfg);
  {
    std::ofstream out(dir / "invariance.csv");
    out << "t,stiefel_dist,tangency\n";
    char buf[128];
    for (std::size_t i = 0; i < r.trajectory.times.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", r.trajectory.times[i],
                    r.trajectory.distances[i],
                    tangency_residual(r.trajectory.states[i]));
      out << buf << '\n';
    }
  }
  const bool pass = r.max_drift_h <= 1e-9 && r.drift_ratio >= 8.0 &&
                    r.drift_ratio <= 32.0;
  std::ofstream summary(dir / "invariance_summary.txt");
  summary << "max_drift(h) = " << r.max_drift_h << "\n"
          << "max_drift(h/2) = " << r.max_drift_half_h << "\n"
          << "ratio = " << r.drift_ratio << " (order-4 band [8, 32])\n"
          << "max_tangency(h) = " << r.max_tangency_h << "\n"
          << (pass ? "pass" : "fail") << "\n";
  std::cout << "invariance: max drift " << r.max_drift_h << " at h = " << cfg.h
            << ", halving ratio " << r.drift_ratio
            << (pass ? "" : "  [threshold exceeded]") << '\n';
  return pass ? kExitOk : kExitAcceptanceFail;
}

// ---------------------------------------------------------------------------
// bench experiment (step cost scaling)
// ---------------------------------------------------------------------------

namespace {

double median_step_ns(std::size_t n, std::size_t p, const FgdConfig& fgd,
                      std::uint64_t seed, int samples) {
  Rng rng(seed);
  const Matrix theta = random_orthonormal(n, p, rng);
  Matrix phi = tangent_project(theta, random_matrix(n, p, rng));
  const double pn = frobenius_norm(phi);
  if (pn > 1e-300) phi *= 0.5 / pn;
  const State s0(theta, phi);
  Matrix g0 = random_matrix(n, p, rng);
  g0 *= 0.1 / frobenius_norm(g0);
  const GradProvider grad = [&g0](const Matrix&) { return g0; };

  for (int i = 0; i < 2; ++i) (void)fgd_step(s0, grad, fgd);
  std::vector<double> times;
  times.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const auto t0 = Clock::now();
    (void)fgd_step(s0, grad, fgd);
    times.push_back(static_cast<double>(elapsed_ns(t0)));
  }
  std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
  return times[times.size() / 2];
}

double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& [x, y] : pts) {
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

BenchResult run_bench_core(const RunConfig& cfg) {
  BenchResult out;
  FgdConfig fgd = cfg.fgd;
  fgd.inverse_mode = InverseMode::neumann;
  fgd.eta = 0.01;

  const std::size_t n_sweep[] = {256, 512, 1024, 2048};
  const std::size_t p_sweep[] = {16, 32, 64, 128};

  std::vector<std::pair<double, double>> n_points, p_points;
  for (std::size_t n : n_sweep) {
    const double t = median_step_ns(n, 64, fgd, cfg.seed, 21);
    out.points.push_back({"n", n, 64, t});
    n_points.emplace_back(static_cast<double>(n), t);
  }
  for (std::size_t p : p_sweep) {
    const double t = median_step_ns(2048, p, fgd, cfg.seed, 21);
    out.points.push_back({"p", 2048, p, t});
    p_points.emplace_back(static_cast<double>(p), t);
  }
  out.n_exponent = loglog_slope(n_points);
  out.p_exponent = loglog_slope(p_points);

  out.neumann_ns_p128 = p_points.back().second;
  FgdConfig exact = fgd;
  exact.inverse_mode = InverseMode::exact;
  out.exact_ns_p128 = median_step_ns(2048, 128, exact, cfg.seed, 11);
  return out;
}

int run_bench(const RunConfig& cfg) {
  const std::filesystem::path dir = prepare_output_dir(cfg);
  const BenchResult r = run_bench_core(cfg);
  {
    std::ofstream out(dir / "bench.csv");
    out << "sweep,n,p,median_ns\n";
    for (const BenchPoint& pt : r.points) {
      out << pt.sweep << ',' << pt.n << ',' << pt.p << ','
          << static_cast<long long>(pt.median_ns) << '\n';
    }
  }
  const bool pass = r.n_exponent >= 0.8 && r.n_exponent <= 1.3 &&
                    r.p_exponent >= 1.5 && r.p_exponent <= 2.6 &&
                    r.exact_ns_p128 > r.neumann_ns_p128;
  std::ofstream summary(dir / "bench_summary.txt");
  summary << "n_exponent = " << r.n_exponent << " (band [0.8, 1.3])\n"
          << "p_exponent = " << r.p_exponent << " (band [1.5, 2.6])\n"
          << "neumann median at p=128: " << r.neumann_ns_p128 << " ns\n"
          << "exact   median at p=128: " << r.exact_ns_p128 << " ns\n"
          << "exact/neumann ratio = " << r.exact_ns_p128 / r.neumann_ns_p128 << "\n"
          << (pass ? "pass" : "fail") << "\n";
  std::cout << "bench: n-exponent " << r.n_exponent << ", p-exponent "
            << r.p_exponent << ", exact/neumann ratio "
            << r.exact_ns_p128 / r.neumann_ns_p128
            << (pass ? "" : "  [outside bands]") << '\n';
  return pass ? kExitOk : kExitAcceptanceFail;
}

// ---------------------------------------------------------------------------
// verify experiment (property battery)
// ---------------------------------------------------------------------------

namespace {

struct DimsDraw {
  std::size_t n, p;
};

DimsDraw draw_dims(Rng& rng) {
  const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform() * 7.0);  // 4..10
  const std::size_t pmax = std::min<std::size_t>(n, 5);
  const std::size_t p = 2 + static_cast<std::size_t>(rng.uniform() *
                                                     static_cast<double>(pmax - 1));
  return {n, std::min(p, pmax)};
}

LyapunovParams draw_k(Rng& rng) {
  return {0.1 + 9.9 * rng.uniform(), 0.1 + 9.9 * rng.uniform()};
}

State draw_state_with_v(std::size_t n, std::size_t p, Rng& rng,
                        const LyapunovParams& k, double min_v) {
  for (int tries = 0; tries < 50; ++tries) {
    State s = random_state_in_neighborhood(n, p, rng);
    if (lyapunov_v(s, k) >= min_v) return s;
  }
  throw Error("draw_state_with_v: sampling failed");
}

}  // namespace

std::vector<PropertyResult> run_verify_battery(std::uint64_t seed,
                                               bool corrupt_feedback) {
  std::vector<PropertyResult> results;
  Rng rng(seed);

  {
    PropertyResult r{"projection-idempotence", 200, 0.0, 1e-12, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const auto [n, p] = draw_dims(rng);
      const Matrix x = random_orthonormal(n, p, rng);
      const Matrix m = random_matrix(n, p, rng);
      const Matrix p1 = tangent_project(x, m);
      const Matrix p2 = tangent_project(x, p1);
      r.worst = std::max(r.worst,
                         frobenius_norm(p2 - p1) / std::max(1.0, frobenius_norm(m)));
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  {
    PropertyResult r{"projection-tangency", 200, 0.0, 1e-10, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const auto [n, p] = draw_dims(rng);
      const Matrix x = random_orthonormal(n, p, rng);
      const Matrix m = random_matrix(n, p, rng);
      const Matrix proj = tangent_project(x, m);
      const double res = frobenius_norm(sym(matmul(x.transpose(), proj)));
      r.worst = std::max(r.worst, res / std::max(1.0, frobenius_norm(m)));
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  {
    PropertyResult r{"lyapunov-gradient-finite-difference", 100, 0.0, 1e-6, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const auto [n, p] = draw_dims(rng);
      const LyapunovParams k = draw_k(rng);
      const State s = random_state_in_neighborhood(n, p, rng);
      const auto [gt, gp] = lyapunov_grad_v(s, k);
      const Matrix fd_t = fd_gradient(
          [&](const Matrix& th) { return lyapunov_v(State(th, s.phi), k); },
          s.theta);
      const Matrix fd_p = fd_gradient(
          [&](const Matrix& ph) { return lyapunov_v(State(s.theta, ph), k); },
          s.phi);
      r.worst = std::max({r.worst, relative_gap(gt, fd_t), relative_gap(gp, fd_p)});
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  {
    PropertyResult r{"x-field-preserves-v", 1000, 0.0, 1e-10, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const auto [n, p] = draw_dims(rng);
      const State s = random_state_in_neighborhood(n, p, rng);
      const FieldParams params{0.1 + 1.9 * rng.uniform(), rng.uniform(), 1.0,
                               InverseMode::exact};
      const Matrix g = random_matrix(n, p, rng);
      const auto [gt, gp] = lyapunov_grad_v(s);
      const auto [xt, xp] = field_extended_x(s, g, params);
      const double ip = frobenius_inner(gt, xt) + frobenius_inner(gp, xp);
      const double scale = std::max(
          1.0, std::sqrt(frobenius_inner(gt, gt) + frobenius_inner(gp, gp)) *
                   std::sqrt(frobenius_inner(xt, xt) + frobenius_inner(xp, xp)));
      r.worst = std::max(r.worst, std::abs(ip) / scale);
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  {
    PropertyResult r{"metric-recovers-v", 1000, 0.0, 1e-8, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const auto [n, p] = draw_dims(rng);
      const LyapunovParams k = draw_k(rng);
      const State s = draw_state_with_v(n, p, rng, k, 1e-8);
      const auto [gt, gp] = lyapunov_grad_v(s, k);
      const auto [lt, lp] = metric_l_apply(s, gt, gp, k, InverseMode::exact);
      const double ip = frobenius_inner(gt, lt) + frobenius_inner(gp, lp);
      const double v = lyapunov_v(s, k);
      r.worst = std::max(r.worst, std::abs(ip - v) / v);
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  {
    PropertyResult r{"feedback-equals-alpha-l-gradv", 500, 0.0, 1e-10, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const auto [n, p] = draw_dims(rng);
      const LyapunovParams k = draw_k(rng);
      const State s = random_state_in_neighborhood(n, p, rng);
      const double alpha = 0.5 + 19.5 * rng.uniform();
      const FieldParams params{1.0, 0.0, alpha, InverseMode::exact};
      auto [ft, fp] = feedback_term(s, params);
      if (corrupt_feedback) {  // fault injection hook for the report contract
        ft *= -1.0;
        fp *= -1.0;
      }
      const auto [gt, gp] = lyapunov_grad_v(s, k);
      const auto [lt, lp] = metric_l_apply(s, gt, gp, k, InverseMode::exact);
      const double diff = std::sqrt(frobenius_inner(ft - alpha * lt, ft - alpha * lt) +
                                    frobenius_inner(fp - alpha * lp, fp - alpha * lp));
      const double scale = std::max(
          1.0, std::sqrt(frobenius_inner(ft, ft) + frobenius_inner(fp, fp)));
      r.worst = std::max(r.worst, diff / scale);
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  {
    // Bound normalized so pass means lhs <= d^2/(1-d) on every draw.
    PropertyResult r{"neumann-truncation-bound", 1000, 0.0, 1.0, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const std::size_t p = 2 + static_cast<std::size_t>(rng.uniform() * 5.0);
      const double d = 0.5 * (1.0 - rng.uniform());  // (0, 0.5]
      const Matrix g = random_gram_at_distance(p, rng, d);
      const Matrix neumann = 2.0 * Matrix::identity(p) - g;
      const double lhs = frobenius_norm(neumann - invert_spd(g));
      const double bound = d * d / (1.0 - d);
      r.worst = std::max(r.worst, lhs / bound);
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  {
    PropertyResult r{"field-consistency-on-bundle", 300, 0.0, 1e-10, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const auto [n, p] = draw_dims(rng);
      const State s = random_state_on_bundle(n, p, rng);
      const Matrix g = random_matrix(n, p, rng);
      const FieldParams params{0.1 + 1.9 * rng.uniform(), rng.uniform(),
                               0.5 + 19.5 * rng.uniform(), InverseMode::exact};
      const auto f1 = field_tangent_bundle(s, g, params);
      const auto f2 = field_extended_x(s, g, params);
      const auto f3 = field_feedback_full(s, g, params);
      const double norm1 = std::sqrt(frobenius_inner(f1.first, f1.first) +
                                     frobenius_inner(f1.second, f1.second));
      const double d12 =
          std::sqrt(frobenius_inner(f1.first - f2.first, f1.first - f2.first) +
                    frobenius_inner(f1.second - f2.second, f1.second - f2.second));
      const double d13 =
          std::sqrt(frobenius_inner(f1.first - f3.first, f1.first - f3.first) +
                    frobenius_inner(f1.second - f3.second, f1.second - f3.second));
      r.worst = std::max(r.worst, std::max(d12, d13) / std::max(1.0, norm1));
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  {
    PropertyResult r{"decay-rate-identity", 500, 0.0, 1e-8, false};
    for (std::size_t i = 0; i < r.count; ++i) {
      const auto [n, p] = draw_dims(rng);
      const LyapunovParams k{1.0, 1.0};
      const State s = draw_state_with_v(n, p, rng, k, 1e-8);
      const double alpha = 0.5 + 19.5 * rng.uniform();
      const FieldParams params{0.1 + 1.9 * rng.uniform(), rng.uniform(), alpha,
                               InverseMode::exact};
      const Matrix g = random_matrix(n, p, rng);
      const auto [gt, gp] = lyapunov_grad_v(s, k);
      const auto [ft, fp] = field_feedback_full(s, g, params);
      const double ip = frobenius_inner(gt, ft) + frobenius_inner(gp, fp);
      const double v = lyapunov_v(s, k);
      r.worst = std::max(r.worst, std::abs(ip + alpha * v) / (alpha * v));
    }
    r.pass = r.worst <= r.tol;
    results.push_back(r);
  }

  return results;
}

int run_verify(const RunConfig& cfg) {
  const std::filesystem::path dir = prepare_output_dir(cfg);
  const auto results = run_verify_battery(cfg.seed, cfg.corrupt_feedback);
  std::ofstream report(dir / "verify_report.txt");
  bool all_pass = true;
  for (const PropertyResult& r : results) {
    const std::string line = std::string(r.pass ? "pass" : "FAIL") + "  " + r.name +
                             "  samples=" + std::to_string(r.count) +
                             "  worst=" + std::to_string(r.worst) +
                             "  tol=" + std::to_string(r.tol);
    std::cout << line << '\n';
    report << line << '\n';
    all_pass = all_pass && r.pass;
  }
  return all_pass ? kExitOk : kExitAcceptanceFail;
}

// ---------------------------------------------------------------------------
// mlp experiment
// ---------------------------------------------------------------------------

namespace {

std::vector<MetricsRow> train_mlp(const RunConfig& cfg, const Dataset& train,
                                  const Dataset& test, std::vector<ParamGroup>& groups) {
  const MultiGradProvider provider = mlp_grad_provider(train);
  std::vector<MetricsRow> rows;
  rows.reserve(cfg.epochs + 1);

  auto record = [&](long epoch, std::int64_t wall) {
    const MlpModel m = model_from_groups(groups);
    MetricsRow row;
    row.step = epoch;
    row.epoch = epoch;
    row.loss = mlp_loss(m, train);
    row.v_value = lyapunov_v(groups[0].state, cfg.fgd.k);
    row.stiefel_dist = stiefel_distance(groups[0].state.theta);
    row.tangency = tangency_residual(groups[0].state);
    row.wall_ns = wall;
    row.test_acc = mlp_accuracy(m, test);
    rows.push_back(row);
  };

  record(0, 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    optimizer_apply(groups, provider, cfg.fgd, eta_at_epoch(cfg, epoch));
    record(static_cast<long>(epoch), elapsed_ns(t0));
  }
  return rows;
}

}  // namespace

MlpRunResult run_mlp_core(const RunConfig& cfg) {
  const Dataset train = make_two_moons(cfg.train_size, cfg.noise, cfg.seed);
  const Dataset test = make_two_moons(cfg.test_size, cfg.noise, cfg.seed + 1000003);
  const MlpModel model0 = MlpModel::init(2, cfg.hidden, 2, cfg.seed + 7);

  MlpRunResult out;
  std::vector<ParamGroup> fgd_groups = mlp_param_groups(model0, train, true);
  out.fgd_rows = train_mlp(cfg, train, test, fgd_groups);
  out.fgd_model = model_from_groups(fgd_groups);
  out.fgd_final_dist = stiefel_distance(fgd_groups[0].state.theta);
  out.fgd_test_acc = *out.fgd_rows.back().test_acc;

  std::vector<ParamGroup> sgd_groups = mlp_param_groups(model0, train, false);
  out.sgd_rows = train_mlp(cfg, train, test, sgd_groups);
  out.sgd_final_dist = stiefel_distance(sgd_groups[0].state.theta);
  out.sgd_test_acc = *out.sgd_rows.back().test_acc;
  return out;
}

int run_mlp(const RunConfig& cfg) {
  const std::filesystem::path dir = prepare_output_dir(cfg);
  const MlpRunResult r = run_mlp_core(cfg);

  write_metrics_csv(r.fgd_rows, dir / "mlp_fgd.csv", true);
  write_metrics_csv(r.sgd_rows, dir / "mlp_sgd.csv", true);
  save_mlp_model(r.fgd_model, dir / "mlp_model.bin");
  write_dataset_csv(make_two_moons(cfg.train_size, cfg.noise, cfg.seed),
                    dir / "mlp_train_data.csv");

  const bool pass = r.fgd_test_acc >= kMlpMinAccuracy &&
                    r.fgd_final_dist <= kMlpFgdMaxDist &&
                    r.sgd_final_dist > kMlpSgdMinDist;
  std::ofstream summary(dir / "mlp_summary.txt");
  summary << "fgd_test_accuracy = " << r.fgd_test_acc << "\n"
          << "sgd_test_accuracy = " << r.sgd_test_acc << "\n"
          << "fgd_final_orthogonal_distance = " << r.fgd_final_dist << "\n"
          << "sgd_final_orthogonal_distance = " << r.sgd_final_dist << "\n"
          << (pass ? "pass" : "fail") << "\n";
  std::cout << "mlp: FGD accuracy " << r.fgd_test_acc << " (distance "
            << r.fgd_final_dist << "), SGD accuracy " << r.sgd_test_acc
            << " (distance " << r.sgd_final_dist << ")"
            << (pass ? "" : "  [threshold exceeded]") << '\n';

  if (cfg.plot) {
    PlotSeries fgd_dist{"FGD", {}}, sgd_dist{"SGD", {}};
    for (const MetricsRow& row : r.fgd_rows)
      fgd_dist.points.emplace_back(static_cast<double>(row.epoch),
                                   std::max(row.stiefel_dist, 1e-16));
    for (const MetricsRow& row : r.sgd_rows)
      sgd_dist.points.emplace_back(static_cast<double>(row.epoch),
                                   std::max(row.stiefel_dist, 1e-16));
    write_line_chart_svg(dir / "mlp_distance.svg",
                         "Hidden-layer distance to the Stiefel manifold", "epoch",
                         "||W^T W - I||", {fgd_dist, sgd_dist}, true);
  }
  return pass ? kExitOk : kExitAcceptanceFail;
}

int run_experiment(const RunConfig& cfg) {
  try {
    switch (cfg.experiment) {
      case Experiment::toy: return run_toy(cfg);
      case Experiment::decay: return run_decay(cfg);
      case Experiment::invariance: return run_invariance(cfg);
      case Experiment::bench: return run_bench(cfg);
      case Experiment::mlp: return run_mlp(cfg);
      case Experiment::verify: return run_verify(cfg);
    }
    return kExitConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const Error& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNumericalAbort;
  }
}

}  // namespace fgd
