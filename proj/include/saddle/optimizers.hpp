#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "saddle/linalg.hpp"
#include "saddle/objective.hpp"

namespace saddle {

enum class Method { gd, sam };
enum class RhoMode { constant, normalized };
enum class GradSource { plain, sam };

struct OptimConfig {
  Method method = Method::gd;
  double eta = 1e-3;
  double rho = 0.0;
  RhoMode rho_mode = RhoMode::constant;
  bool momentum = false;
  double gamma = 0.0;  // momentum coefficient
  double tau = 0.0;    // dampening
  std::size_t batch_size = 1;
  bool full_batch = false;  // use the exact expectation instead of sampling
  std::size_t max_steps = 1000;
  std::uint64_t seed = 0;
  double grad_eps = 1e-12;
  double grad_tol = 1e-10;
  double divergence_norm = 1e8;
  // Record every `record_stride` steps; 0 keeps only the first and last record.
  std::size_t record_stride = 1;

  // Throws std::invalid_argument on eta <= 0, rho < 0, gamma outside [0, 1),
  // tau outside [0, 1], batch_size == 0 or grad_eps <= 0.
  void validate() const;
};

std::string to_string(Method m);
std::string to_string(RhoMode m);
Method parse_method(std::string_view s);
RhoMode parse_rho_mode(std::string_view s);

// Momentum buffer m_t. Continuous-time correspondence with dt = eta:
// friction phi = (1 - gamma) / dt, mass M = dt / (1 - tau).
struct MomentumState {
  Vector m;

  static MomentumState zeros(std::size_t n) { return {Vector(n, 0.0)}; }
  static double friction(const OptimConfig& cfg) { return (1.0 - cfg.gamma) / cfg.eta; }
  static double mass(const OptimConfig& cfg) { return cfg.eta / (1.0 - cfg.tau); }
};

struct SamStep {
  Vector w_p;
  Vector w_next;
  Vector grad_w;
  Vector grad_wp;
};

struct MomentumStep {
  Vector w_next;
  MomentumState state;
};

struct SgdStep {
  Vector w_next;
  Vector w_p;
  std::vector<std::size_t> draws;  // sample indices, empty for full batch
  Vector batch_grad;               // mini-batch gradient at w
  Vector batch_grad_p;             // mini-batch gradient at w_p
};

// w - eta * grad(w). Throws Divergence on a non-finite gradient.
Vector gd_step(const Objective& obj, std::span<const double> w, double eta);

// Perturbed point for the configured radius mode. In normalized mode a
// gradient with norm below grad_eps leaves the point unperturbed.
Vector sam_perturbation(std::span<const double> w, std::span<const double> grad,
                        const OptimConfig& cfg);

SamStep sam_step(const Objective& obj, std::span<const double> w, const OptimConfig& cfg);

// m <- gamma m + (1 - tau) g; w <- w - eta m, with g taken at w or at w_p.
MomentumStep momentum_step(const Objective& obj, std::span<const double> w,
                           const MomentumState& state, const OptimConfig& cfg,
                           GradSource source);

// One GD or SAM step (per cfg.method) on a mini-batch drawn with replacement.
// The same batch is used at w and at w_p.
SgdStep sgd_step(const StochasticObjective& obj, std::span<const double> w,
                 const OptimConfig& cfg, std::mt19937_64& rng);

// Cosine of the angle between g1 and g2; nullopt when either norm < grad_eps.
std::optional<double> grad_cosine(std::span<const double> g1, std::span<const double> g2,
                                  double grad_eps = 1e-12);

struct StepRecord {
  std::size_t t = 0;
  Point w;
  Point w_p;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::optional<double> grad_cosine;
};

enum class Termination { max_steps, grad_tolerance, diverged };
std::string to_string(Termination t);

struct Trajectory {
  std::vector<StepRecord> records;
  OptimConfig config;
  Termination termination = Termination::max_steps;

  const StepRecord& last() const { return records.back(); }
};

// Iterates the configured rule (GD, SAM, optionally with momentum) from w0.
// Stops after max_steps, when the gradient norm drops below grad_tol, or when
// the iterate leaves the divergence ball.
Trajectory run_trajectory(const Objective& obj, const OptimConfig& cfg, std::span<const double> w0);

// Mini-batch counterpart. Records carry the expected loss and gradient norm;
// grad_cosine compares the mini-batch gradients at w and w_p. No gradient
// tolerance stop.
Trajectory run_stochastic_trajectory(const StochasticObjective& obj, const OptimConfig& cfg,
                                     std::span<const double> w0);

// CSV with header t,w1..wn,wp1..wpn,loss,grad_norm,grad_cosine. Undefined
// cosines are written as "nan".
std::string trajectory_csv(const Trajectory& traj);

}  // namespace saddle
