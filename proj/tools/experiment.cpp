#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "specel/observability.hpp"

namespace specel::exp {

namespace {

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::ofstream open_csv(const ExperimentConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.output_dir);
  std::ofstream out(c.output_dir / name);
  if (!out) throw std::runtime_error("cannot write " + (c.output_dir / name).string());
  return out;
}

InitialData resolve(const ExperimentConfig& c, InitialData fallback) {
  const InitialData k = parse_initial(c.initial);
  return k == InitialData::Auto ? fallback : k;
}

ElasticState initial_state(const ElasticPropagator& p, InitialData kind, std::mt19937_64& rng) {
  switch (kind) {
    case InitialData::Zero:
      return ElasticState(p.grid());
    case InitialData::Sine:
      return ElasticState(sine_displacement(p.grid()), VectorField(p.grid()));
    default:
      return random_data(p, rng);
  }
}

// ---- quad ----

struct QuadRow {
  int N = 0;
  Eigen::VectorXd weights;
  double endpoint_err = 0, sum_err = 0, symmetry_err = 0, exactness_err = 0, diff1_err = 0, diff2_err = 0;
  NormRatioRange norm1, norm2;
  bool pass = false;
};

QuadRow check_rule(int N, bool corrupt, int samples, std::uint64_t seed) {
  LglRule r = lgl_rule(N);
  if (corrupt) r.weights.array() += 1e-6;
  QuadRow row;
  row.N = N;
  row.weights = r.weights;
  const double wend = 2.0 / (N * (N + 1.0));
  row.endpoint_err = std::max(std::abs(r.weights[0] - wend), std::abs(r.weights[N] - wend));
  row.sum_err = std::abs(r.weights.sum() - 2.0);
  for (int k = 0; k <= N; ++k) row.symmetry_err = std::max(row.symmetry_err, std::abs(r.nodes[k] + r.nodes[N - k]));
  for (int p = 0; p <= 2 * N - 1; ++p) {
    const Eigen::ArrayXd xp = r.nodes.array().pow(p);
    const double q = (r.weights.array() * xp).sum();
    const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
    const double scale = std::max(std::abs(exact), (r.weights.array() * xp.abs()).sum());
    row.exactness_err = std::max(row.exactness_err, std::abs(q - exact) / scale);
  }
  row.diff1_err = (r.diff1 * Eigen::VectorXd::Ones(N + 1)).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd dd = r.diff1 * r.diff1;
  for (int p = 1; p <= N; ++p) {
    const Eigen::VectorXd xp = r.nodes.array().pow(p).matrix();
    const Eigen::VectorXd dp = (p * r.nodes.array().pow(p - 1)).matrix();
    row.diff1_err = std::max(row.diff1_err, (r.diff1 * xp - dp).cwiseAbs().maxCoeff() / (double(N) * N));
    const double s2 = std::max(1.0, (dd * xp).cwiseAbs().maxCoeff());
    row.diff2_err = std::max(row.diff2_err, ((r.diff2 - dd) * xp).cwiseAbs().maxCoeff() / s2);
  }
  row.norm1 = norm_equivalence_report(TensorGrid(1, N), samples, seed);
  row.norm2 = norm_equivalence_report(TensorGrid(2, N), samples, seed + 1);
  const auto in_range = [&](const NormRatioRange& n, int d) {
    return n.min_ratio >= 1 - 1e-10 && n.max_ratio <= norm_equivalence_upper(d, N) + 1e-10;
  };
  row.pass = row.endpoint_err <= 1e-13 && row.sum_err <= 1e-12 && row.symmetry_err <= 1e-13 &&
             row.exactness_err <= 1e-12 && row.diff1_err <= 1e-10 && row.diff2_err <= 1e-9 && in_range(row.norm1, 1) &&
             in_range(row.norm2, 2);
  return row;
}

}  // namespace

InitialData parse_initial(const std::string& s) {
  const std::string v = lower(s);
  if (v == "auto") return InitialData::Auto;
  if (v == "sine") return InitialData::Sine;
  if (v == "random") return InitialData::Random;
  if (v == "zero") return InitialData::Zero;
  throw std::invalid_argument("unknown initial data '" + s + "' (expected auto, sine, random or zero)");
}

std::string to_string(InitialData k) {
  switch (k) {
    case InitialData::Auto:
      return "auto";
    case InitialData::Sine:
      return "sine";
    case InitialData::Random:
      return "random";
    default:
      return "zero";
  }
}

void ExperimentConfig::validate() const {
  if (d < 1 || d > 3) throw std::invalid_argument("d must be 1, 2 or 3");
  for (int n : N)
    if (n < 2) throw std::invalid_argument("N must be at least 2");
  material().validate();
  TimeGridSpec{T, dt, parse_scheme(scheme)}.validate();
  if (tol <= 0) throw std::invalid_argument("tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  if (weight_g < 0) throw std::invalid_argument("weight_g must be non-negative");
  if (workers < 1) throw std::invalid_argument("workers must be positive");
  if (samples < 1) throw std::invalid_argument("samples must be positive");
  if (lanczos_iter < 0) throw std::invalid_argument("lanczos_iter must be non-negative");
  if (final_tol <= 0 || energy_tol <= 0) throw std::invalid_argument("tolerances must be positive");
  for (double t : observe_T)
    if (!(t > 0)) throw std::invalid_argument("observe_T entries must be positive");
  if (!gamma_faces.empty()) {
    std::vector<int> g = gamma_faces;
    std::sort(g.begin(), g.end());
    std::vector<int> expected(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) expected[static_cast<std::size_t>(j)] = j + 1;
    if (g != expected) throw std::invalid_argument("gamma_faces must be the faces {x_j = +1}, ids 1..d");
  }
  parse_initial(initial);
}

TimeGridSpec ExperimentConfig::time_spec(double horizon) const { return TimeGridSpec{horizon, dt, parse_scheme(scheme)}; }

std::vector<int> ExperimentConfig::degrees(const std::vector<int>& fallback) const { return N.empty() ? fallback : N; }

std::mt19937_64 stream(std::uint64_t seed, int N, int sample) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(N), static_cast<std::uint32_t>(sample)};
  return std::mt19937_64(seq);
}

ElasticState random_data(const ElasticPropagator& prop, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd u(prop.dofs()), v(prop.dofs());
  for (Index i = 0; i < u.size(); ++i) u[i] = nd(rng);
  for (Index i = 0; i < v.size(); ++i) v[i] = nd(rng);
  return ElasticState(prop.unpack(u), prop.unpack(v));
}

VectorField sine_displacement(GridPtr grid) {
  VectorField u(grid);
  const double pi = std::numbers::pi;
  for (Index i : grid->interior_indices()) {
    double v = 0.2;
    for (int a = 0; a < grid->dim(); ++a) v *= std::sin(pi * (grid->coordinates()(i, a) + 1) / 2);
    u.values.row(i).setConstant(v);
  }
  return u;
}

void run_parallel(int count, int workers, const std::function<void(int)>& job) {
  const int k = std::max(1, std::min(workers, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v == 0.0 ? 0.0 : v);
  return buf;
}

int cmd_quad(const ExperimentConfig& c, std::ostream& log, bool corrupt_weights) {
  std::vector<int> fallback;
  for (int n = 2; n <= 64; ++n) fallback.push_back(n);
  const auto degrees = c.degrees(fallback);
  std::vector<QuadRow> rows(degrees.size());
  run_parallel(static_cast<int>(degrees.size()), c.workers, [&](int i) {
    const int N = degrees[static_cast<std::size_t>(i)];
    rows[static_cast<std::size_t>(i)] = check_rule(N, corrupt_weights, c.samples, c.seed + static_cast<std::uint64_t>(N));
  });

  auto out = open_csv(c, "quad_report.csv");
  out << "N,weights,endpoint_weight_err,weight_sum_err,symmetry_err,exactness_err,diff1_err,diff2_err,"
         "norm_min_d1,norm_max_d1,norm_min_d2,norm_max_d2,pass\n";
  bool ok = true;
  char line[160];
  std::snprintf(line, sizeof line, "%4s  %-10s %-10s %-10s %-10s %-10s %s\n", "N", "endpoint", "sum", "exact", "diff1",
                "diff2", "status");
  log << line;
  for (const auto& r : rows) {
    out << r.N << ',';
    for (Index k = 0; k < r.weights.size(); ++k) out << (k ? " " : "") << fmt(r.weights[k]);
    out << ',' << fmt(r.endpoint_err) << ',' << fmt(r.sum_err) << ',' << fmt(r.symmetry_err) << ','
        << fmt(r.exactness_err) << ',' << fmt(r.diff1_err) << ',' << fmt(r.diff2_err) << ',' << fmt(r.norm1.min_ratio)
        << ',' << fmt(r.norm1.max_ratio) << ',' << fmt(r.norm2.min_ratio) << ',' << fmt(r.norm2.max_ratio) << ','
        << (r.pass ? "PASS" : "FAIL") << '\n';
    std::snprintf(line, sizeof line, "%4d  %-10.2e %-10.2e %-10.2e %-10.2e %-10.2e %s\n", r.N, r.endpoint_err,
                  r.sum_err, r.exactness_err, r.diff1_err, r.diff2_err, r.pass ? "PASS" : "FAIL");
    log << line;
    ok = ok && r.pass;
  }
  log << (ok ? "all invariants hold\n" : "invariant failure\n");
  return ok ? 0 : 1;
}

int cmd_energy(const ExperimentConfig& c, std::ostream& log) {
  const auto degrees = c.degrees({10});
  const InitialData kind = resolve(c, InitialData::Random);
  const TimeGridSpec spec = c.time_spec(c.T);
  const int samples = kind == InitialData::Random ? c.samples : 1;
  const int jobs = static_cast<int>(degrees.size()) * samples;
  std::vector<std::vector<double>> traces(static_cast<std::size_t>(jobs));
  std::vector<std::string> failures(static_cast<std::size_t>(jobs));
  run_parallel(jobs, c.workers, [&](int j) {
    const int N = degrees[static_cast<std::size_t>(j / samples)];
    ElasticPropagator p(make_grid(c.d, N), c.material(), spec);
    auto rng = stream(c.seed, N, j % samples);
    auto& e = traces[static_cast<std::size_t>(j)];
    try {
      integrate_adjoint(p, initial_state(p, kind, rng),
                        [&](int, const ElasticState& s) { e.push_back(discrete_energy(s, c.material())); });
    } catch (const InstabilityError& err) {
      std::ostringstream msg;
      msg << "N=" << N << ": " << err.what() << " (dt=" << p.dt() << ", RK4 stability limit ~" << p.rk4_step_limit()
          << ")";
      failures[static_cast<std::size_t>(j)] = msg.str();
    }
  });

  bool unstable = false;
  for (const auto& f : failures)
    if (!f.empty()) {
      log << "instability: " << f << '\n';
      unstable = true;
    }
  if (unstable) return 1;

  auto out = open_csv(c, "energy_trace.csv");
  out << "N,sample,t,E,rel_drift\n";
  double worst = 0.0;
  for (int j = 0; j < jobs; ++j) {
    const int N = degrees[static_cast<std::size_t>(j / samples)];
    const auto& e = traces[static_cast<std::size_t>(j)];
    const double e0 = e.front();
    double drift = 0.0;
    for (std::size_t n = 0; n < e.size(); ++n) {
      const double rel = e0 > 0 ? std::abs(e[n] - e0) / e0 : std::abs(e[n]);
      drift = std::max(drift, rel);
      out << N << ',' << j % samples << ',' << fmt(static_cast<double>(n) * spec.step()) << ',' << fmt(e[n]) << ','
          << fmt(rel) << '\n';
    }
    log << "N=" << N << " sample " << j % samples << ": E0=" << e0 << " max relative drift " << drift << '\n';
    worst = std::max(worst, drift);
  }
  const bool ok = spec.scheme != Scheme::Newmark || worst <= c.energy_tol;
  log << "max relative drift " << worst << (ok ? "" : " exceeds energy_tol") << '\n';
  return ok ? 0 : 1;
}

int cmd_observe(const ExperimentConfig& c, std::ostream& log) {
  const auto degrees = c.degrees({6, 10, 14});
  const InitialData kind = resolve(c, InitialData::Random);
  const int samples = kind == InitialData::Random ? c.samples : 1;
  const Material m = c.material();
  const auto nT = static_cast<int>(c.observe_T.size());
  const int cells = static_cast<int>(degrees.size()) * nT;

  struct Cell {
    std::vector<ObservabilityReport> reports;
    std::vector<MultiplierDiagnostics> diagnostics;
    double worst = std::numeric_limits<double>::quiet_NaN();
    int worst_iterations = 0;
  };
  std::vector<Cell> out_cells(static_cast<std::size_t>(cells));
  run_parallel(cells, c.workers, [&](int j) {
    const int N = degrees[static_cast<std::size_t>(j / nT)];
    const double T = c.observe_T[static_cast<std::size_t>(j % nT)];
    ElasticPropagator p(make_grid(c.d, N), m, c.time_spec(T));
    auto& cell = out_cells[static_cast<std::size_t>(j)];
    for (int s = 0; s < samples; ++s) {
      auto rng = stream(c.seed, N, s);
      const ElasticState init = initial_state(p, kind, rng);
      const auto traj = record_trajectory(p, init);
      cell.reports.push_back(observe_trajectory(p, init));
      cell.diagnostics.push_back(multiplier_diagnostics(traj, m, p.dt()));
    }
    if (p.spec().scheme == Scheme::Newmark) {
      const auto wc =
          c.lanczos_iter > 0 ? worst_case_ratio(p, c.lanczos_iter, {}, c.seed) : worst_case_ratio_exact(p);
      cell.worst = wc.ratio;
      cell.worst_iterations = static_cast<int>(wc.history.size());
    }
  });

  auto scan = open_csv(c, "observe_scan.csv");
  scan << "N,T,seed,lhs,term_traction,term_second,ratio,threshold\n";
  auto diag = open_csv(c, "diagnostics.csv");
  diag << "N,T,seed,X,Y,interior_energy_integral,boundary_flux_integral,source_coupling_integral,energy0,bound_slack,"
          "identity_slack\n";
  auto worst = open_csv(c, "observe_worst.csv");
  worst << "N,T,worst_ratio,iterations,threshold\n";
  bool ok = true;
  for (int j = 0; j < cells; ++j) {
    const int N = degrees[static_cast<std::size_t>(j / nT)];
    const double T = c.observe_T[static_cast<std::size_t>(j % nT)];
    const auto& cell = out_cells[static_cast<std::size_t>(j)];
    double min_ratio = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      const auto& r = cell.reports[static_cast<std::size_t>(s)];
      scan << N << ',' << fmt(T) << ',' << s << ',' << fmt(r.lhs_norm_sq) << ',' << fmt(r.term_traction) << ','
           << fmt(r.term_second) << ',' << fmt(r.ratio) << ',' << fmt(r.threshold) << '\n';
      const auto& md = cell.diagnostics[static_cast<std::size_t>(s)];
      diag << N << ',' << fmt(T) << ',' << s << ',' << fmt(md.X) << ',' << fmt(md.Y) << ','
           << fmt(md.interior_energy_integral) << ',' << fmt(md.boundary_flux_integral) << ','
           << fmt(md.source_coupling_integral) << ',' << fmt(md.energy0) << ',' << fmt(md.bound_slack) << ','
           << fmt(md.identity_slack) << '\n';
      if (std::isfinite(r.ratio)) min_ratio = std::min(min_ratio, r.ratio);
      if (md.bound_slack < -1e-6 * md.energy0) ok = false;
    }
    const double thr = observability_threshold(c.d, N, m);
    worst << N << ',' << fmt(T) << ',' << fmt(cell.worst) << ',' << cell.worst_iterations << ',' << fmt(thr) << '\n';
    log << "N=" << N << " T=" << T << " threshold=" << thr << " min random ratio=" << min_ratio;
    if (std::isfinite(cell.worst)) log << " worst-case ratio=" << cell.worst;
    log << '\n';
  }
  if (!ok) log << "multiplier bound violated\n";
  return ok ? 0 : 1;
}

int cmd_control(const ExperimentConfig& c, std::ostream& log) {
  const auto degrees = c.degrees({10, 20, 40});
  const InitialData kind = resolve(c, InitialData::Sine);
  const TimeGridSpec spec = c.time_spec(c.T);
  const auto count = static_cast<int>(degrees.size());
  std::vector<ControlResult> results(static_cast<std::size_t>(count));
  std::vector<ControlNorms> norms(static_cast<std::size_t>(count));
  std::mutex log_mutex;
  run_parallel(count, c.workers, [&](int j) {
    const int N = degrees[static_cast<std::size_t>(j)];
    auto grid = make_grid(c.d, N);
    ElasticPropagator p(grid, c.material(), spec);
    auto rng = stream(c.seed, N, 0);
    const ElasticState init = initial_state(p, kind, rng);
    ControlOptions o;
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    o.weight_g = c.weight_g;
    o.progress = [&, N](int it, double r) {
      if (it % 10 == 0) {
        std::lock_guard lock(log_mutex);
        log << "N=" << N << " iteration " << it << " relative residual " << r << '\n' << std::flush;
      }
    };
    auto& r = results[static_cast<std::size_t>(j)];
    r = solve_control(init.displacement, init.velocity, p, o);
    norms[static_cast<std::size_t>(j)] = control_norms(r);
  });

  auto table = open_csv(c, "table1.csv");
  table << "N,f_norm,g_norm,final_state_norm_rel,cg_iterations\n";
  bool ok = true;
  for (int j = 0; j < count; ++j) {
    const auto& r = results[static_cast<std::size_t>(j)];
    const int N = degrees[static_cast<std::size_t>(j)];
    table << N << ',' << fmt(r.f_norm) << ',' << fmt(r.g_norm) << ',' << fmt(r.final_state_norm_rel) << ','
          << r.cg_iterations << '\n';
    const bool row_ok = r.final_state_norm_rel <= c.final_tol;
    log << "N=" << N << " |f|=" << r.f_norm << " |g|=" << r.g_norm << " final=" << r.final_state_norm_rel
        << " iterations=" << r.cg_iterations << (r.converged ? "" : " (not converged)") << (row_ok ? "" : " FAILED")
        << '\n';
    ok = ok && row_ok;
  }

  auto fig = open_csv(c, "figure1.csv");
  fig << 't';
  for (int N : degrees) fig << ",N" << N;
  fig << '\n';
  for (int n = 0; n <= spec.steps(); ++n) {
    fig << fmt(n * spec.step());
    for (const auto& nm : norms) fig << ',' << fmt(nm.f_trace[static_cast<std::size_t>(n)]);
    fig << '\n';
  }

  auto trace = open_csv(c, "control_trace.csv");
  trace << "N,t,face_id";
  for (int a = 1; a <= c.d; ++a) trace << ",k" << a;
  for (int a = 1; a <= c.d; ++a) trace << ",f" << a;
  for (int a = 1; a <= c.d; ++a) trace << ",g" << a;
  trace << '\n';
  for (int j = 0; j < count; ++j) {
    const auto& r = results[static_cast<std::size_t>(j)];
    const auto& g = *r.grid;
    for (int n = 0; n <= r.steps; ++n) {
      const std::string t = fmt(n * r.dt);
      for (int face = 1; face <= g.face_count(); ++face) {
        const auto& idx = g.face_indices(face);
        const auto& gv = r.g[static_cast<std::size_t>(n)][static_cast<std::size_t>(face - 1)];
        for (std::size_t q = 0; q < idx.size(); ++q) {
          trace << degrees[static_cast<std::size_t>(j)] << ',' << t << ',' << face;
          for (int k : g.multi_index(idx[q])) trace << ',' << k;
          for (int a = 0; a < c.d; ++a) trace << ',' << fmt(r.f[static_cast<std::size_t>(n)](idx[q], a));
          for (int a = 0; a < c.d; ++a) trace << ',' << fmt(gv(static_cast<Index>(q), a));
          trace << '\n';
        }
      }
    }
  }
  return ok ? 0 : 1;
}

}  // namespace specel::exp
