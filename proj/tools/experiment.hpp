#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "specel/control_hum.hpp"

namespace specel::exp {

/// Initial data used by the energy, observe and control runs.
enum class InitialData { Auto, Sine, Random, Zero };

InitialData parse_initial(const std::string& s);
std::string to_string(InitialData k);

struct ExperimentConfig {
  int d = 2;
  /// Empty: per-command default (quad 2..64, energy 10, observe 6 10 14, control 10 20 40).
  std::vector<int> N;
  double lambda = 0.5;
  double mu = 4.0;
  double T = 3.0;
  double dt = 0.01;
  std::string scheme = "newmark";
  std::uint64_t seed = 1;
  double tol = 1e-6;
  int max_iter = 200;
  double weight_g = 0.25;
  /// Faces carrying the Dirichlet control; only {1, ..., d} is supported.
  std::vector<int> gamma_faces;
  std::filesystem::path output_dir = ".";
  int workers = 1;
  std::string initial = "auto";
  /// Random data sets per N (energy, observe).
  int samples = 10;
  /// Observation times scanned by `observe`.
  std::vector<double> observe_T{13.0};
  /// Lanczos iterations for the worst-case ratio; 0 uses the dense eigensolver.
  int lanczos_iter = 0;
  /// Final-state bound for a successful control run.
  double final_tol = 1e-3;
  /// Relative drift bound checked by `energy` under Newmark.
  double energy_tol = 1e-8;

  void validate() const;
  Material material() const { return Material{lambda, mu}; }
  TimeGridSpec time_spec(double horizon) const;
  std::vector<int> degrees(const std::vector<int>& fallback) const;
};

/// Reproducible stream for (seed, N, sample); independent of scheduling.
std::mt19937_64 stream(std::uint64_t seed, int N, int sample);

/// Standard-normal interior displacement and velocity.
ElasticState random_data(const ElasticPropagator& prop, std::mt19937_64& rng);
/// u0 = 0.2 sin(pi (x1 + 1)/2) ... sin(pi (xd + 1)/2) (1, ..., 1) at interior nodes.
VectorField sine_displacement(GridPtr grid);

/// Runs jobs 0..count-1 on up to `workers` threads.
void run_parallel(int count, int workers, const std::function<void(int)>& job);

/// Full-precision scientific notation.
std::string fmt(double v);

/// Subcommands. Each writes its CSV files to config.output_dir, logs to `log`
/// and returns the process exit code.
int cmd_quad(const ExperimentConfig& c, std::ostream& log, bool corrupt_weights = false);
int cmd_energy(const ExperimentConfig& c, std::ostream& log);
int cmd_observe(const ExperimentConfig& c, std::ostream& log);
int cmd_control(const ExperimentConfig& c, std::ostream& log);

}  // namespace specel::exp
