#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "saddle/linalg.hpp"

namespace saddle {

// Quadratic model of the loss around a saddle d: H = Q diag(lambda) Q^T.
struct SaddleModel {
  Vector eigenvalues;
  Matrix q;  // orthonormal eigenvectors as columns
  double eta = 0.1;
  double batch = 1.0;
  double rho = 0.0;
  double gamma = 0.0;
  double tau = 0.0;

  static SaddleModel diagonal(Vector eigenvalues, double eta, double batch, double rho);

  std::size_t dimension() const { return eigenvalues.size(); }
  // lambda (1 + rho lambda)^2, the effective linear drift rate per direction.
  double rate(std::size_t j) const;
  Matrix hessian() const;
  // Throws ContractViolation unless it is a hyperbolic saddle with valid
  // hyper-parameters.
  void validate() const;
};

enum class SigmaBranch { closed_form, removable_limit };

struct SigmaSq {
  double value = 0.0;
  SigmaBranch branch = SigmaBranch::closed_form;
};

// Variance of the escape coordinate after time t:
//   eta |lambda| / (2 B a) * (1 - exp(-2 a t)),  a = lambda (1 + rho lambda)^2,
// switching to the a -> 0 limit eta |lambda| t / B when 1 + rho lambda = 0.
SigmaSq sigma_sq_detail(double t, double lambda, double eta, double batch, double rho);
double sigma_sq(double t, double lambda, double eta, double batch, double rho);

// First-order reduction of the MSD by the perturbation: 2 eta t^2 |lambda|^3 rho / B.
double msd_gap(double t, double lambda, double eta, double batch, double rho);

struct MomentumConstants {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
};

MomentumConstants momentum_constants(double t, double lambda, double eta, double rho);

// MSD with heavy-ball momentum gamma (no dampening):
//   C1 (1 - e^{-C2 (1-g)})^2 / ((1-g)^3 B) + C3 (1 - e^{-C4/(1-g)}) / ((1-g) B).
// For 1 - gamma < 1e-9 the 1/((1-gamma) B) asymptote is returned (infinity
// when C4 <= 0, where the second term blows up instead).
double msd_momentum(double t, double lambda, double eta, double batch, double rho, double gamma);
double msd_momentum_asymptote(double t, double lambda, double eta, double batch, double rho, double gamma);

// Linearized SAM drift -Q diag(a_j) Q^T offset.
Vector sde_drift(std::span<const double> offset, const SaddleModel& model);

// Q diag(eta |lambda_j| / (2B)) Q^T.
Matrix diffusion_matrix(const SaddleModel& model);

struct DiffusionForecast {
  std::vector<double> times;
  std::vector<Vector> sigma_sq;  // [time][direction]
  MomentumConstants constants_at_end;  // for direction 0

  // Q diag(sigma_sq(times[k])) Q^T
  Matrix covariance(const SaddleModel& model, std::size_t k) const;
};

DiffusionForecast forecast(const SaddleModel& model, std::span<const double> times);

struct MsdEstimate {
  double mean = 0.0;
  std::size_t count = 0;
  double std_error = 0.0;   // from the spread of group means
  double half_width = 0.0;  // 1.96 * std_error
};

struct SdeOptions {
  double t_end = 1.0;
  double dt = 0.0;  // 0 selects min(1e-3, 0.01 / max rate)
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  bool with_momentum = false;
  double noise_scale = 1.0;
  std::vector<double> checkpoints;  // extra reporting times in (0, t_end]
  std::size_t groups = 20;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct SdeResult {
  std::vector<double> times;               // checkpoints, always ending at t_end
  std::vector<std::vector<MsdEstimate>> msd;  // [time][direction] in eigencoordinates
  Matrix second_moment;  // E[offset offset^T] at t_end, original coordinates
  double dt = 0.0;
  std::size_t steps = 0;

  const std::vector<MsdEstimate>& final() const { return msd.back(); }
};

double default_dt(const SaddleModel& model, bool with_momentum);

// Euler-Maruyama in eigencoordinates from the saddle (zero offset):
//   dx_j = -a_j x_j dt + sqrt(eta |lambda_j| / B) dW_j.
// The momentum form integrates M dv = (-phi v - a_j x_j) dt + sqrt(eta |lambda_j| / B) dW_j
// with phi = (1 - gamma) / eta and M = eta / (1 - tau). Each path draws from its
// own generator seeded from (seed, path), so results do not depend on threads.
// Throws StepSizeError when dt times the fastest rate exceeds 0.1.
SdeResult simulate_sde(const SaddleModel& model, const SdeOptions& opts);

// Paired difference MSD(model) - MSD(model with rho_alt), both driven by the
// same noise on every path. Reported per direction at t_end.
std::vector<MsdEstimate> simulate_msd_difference(const SaddleModel& model, double rho_alt,
                                                 const SdeOptions& opts);

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

// Rows of `t,direction,sigma_sq_closed,msd_mc,ci_halfwidth`.
std::string forecast_csv(const SaddleModel& model, const SdeResult& mc);

}  // namespace saddle
