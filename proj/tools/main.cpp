#include <iostream>

#include <CLI11.hpp>

#include "experiment.hpp"

int main(int argc, char** argv) {
  using specel::exp::ExperimentConfig;
  ExperimentConfig c;
  std::string out_dir = c.output_dir.string();
  bool corrupt = false;

  CLI::App app{"Spectral elasticity experiments: quadrature, energy, observability and HUM control"};
  app.set_config("--config", "", "Key-value configuration file (TOML/INI syntax)");
  app.option_defaults()->always_capture_default();
  app.add_option("--d", c.d, "Space dimension (1, 2 or 3)");
  app.add_option("--N", c.N, "Polynomial degree(s); empty uses the subcommand default");
  app.add_option("--lambda", c.lambda, "Lame parameter lambda");
  app.add_option("--mu", c.mu, "Lame parameter mu");
  app.add_option("--T", c.T, "Final time (energy, control)");
  app.add_option("--dt", c.dt, "Time step");
  app.add_option("--scheme", c.scheme, "Time integrator: newmark or rk4");
  app.add_option("--seed", c.seed, "Random seed");
  app.add_option("--tol", c.tol, "Relative residual tolerance of the control solver");
  app.add_option("--max-iter,--max_iter", c.max_iter, "Iteration cap of the control solver");
  app.add_option("--weight-g,--weight_g", c.weight_g, "Weight of the auxiliary face controls g");
  app.add_option("--gamma-faces,--gamma_faces", c.gamma_faces, "Dirichlet control faces (must be 1..d)");
  app.add_option("--out,--output-dir,--output_dir", out_dir, "Output directory for CSV files");
  app.add_option("--workers", c.workers, "Concurrent jobs");
  app.add_option("--initial", c.initial, "Initial data: auto, sine, random or zero");
  app.add_option("--samples", c.samples, "Random data sets per degree");
  app.add_option("--observe-T,--observe_T", c.observe_T, "Observation times scanned by observe");
  app.add_option("--lanczos-iter,--lanczos_iter", c.lanczos_iter, "Lanczos iterations for the worst-case ratio");
  app.add_option("--final-tol,--final_tol", c.final_tol, "Bound on the relative final state of a control run");
  app.add_option("--energy-tol,--energy_tol", c.energy_tol, "Bound on the relative energy drift (Newmark)");
  app.require_subcommand(1);
  app.fallthrough();

  auto* quad = app.add_subcommand("quad", "LGL rule and tensor-grid invariant suite");
  quad->add_flag("--corrupt-weights", corrupt, "Perturb the weights by 1e-6 (negative control)");
  auto* energy = app.add_subcommand("energy", "Discrete energy trace");
  auto* observe = app.add_subcommand("observe", "Observability ratio scan and multiplier diagnostics");
  auto* control = app.add_subcommand("control", "HUM boundary control");

  CLI11_PARSE(app, argc, argv);
  c.output_dir = out_dir;
  try {
    c.validate();
    if (*quad) return specel::exp::cmd_quad(c, std::cout, corrupt);
    if (*energy) return specel::exp::cmd_energy(c, std::cout);
    if (*observe) return specel::exp::cmd_observe(c, std::cout);
    if (*control) return specel::exp::cmd_control(c, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
