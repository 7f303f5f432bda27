#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saddle/linalg.hpp"
#include "saddle/objective.hpp"

namespace saddle {

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // column j pairs with values[j]
};

// Cyclic Jacobi rotations. Stops once the off-diagonal Frobenius norm drops
// below 1e-12 * max(1, ||H||_F). Each eigenvector is signed so that its
// largest-magnitude component is positive.
//
// Throws ContractViolation when H is not square or not symmetric to 1e-9
// (scaled by max(1, max |h_ij|)).
EigenDecomposition eigendecompose(const Matrix& h);

// Eigenvalues with |lambda| below this are treated as zero.
inline constexpr double kDegenerateEigenvalue = 1e-8;

struct AttractorVerdict {
  Vector condition;         // lambda_j + rho * lambda_j^2
  std::vector<bool> flags;  // condition_j >= 0
  bool attractor = false;   // every negative eigenvalue satisfies its flag
};

// Saddle becomes an attractor of the SAM flow when lambda + rho lambda^2 >= 0
// for all negative eigenvalues. Requires rho >= 0.
AttractorVerdict attractor_condition(std::span<const double> eigenvalues, double rho);

struct SpectralReport {
  Vector eigenvalues;
  Matrix eigenvectors;
  int index = 0;  // number of eigenvalues below -kDegenerateEigenvalue
  bool degenerate = false;

  // nullopt for degenerate (non-hyperbolic) points.
  std::optional<AttractorVerdict> attractor(double rho) const;
};

SpectralReport spectral_report(const Matrix& h);

struct CriticalPoint {
  Point location;
  double grad_norm_at_solution = 0.0;
  SpectralReport spectral;
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iterations = 100;
  int max_halvings = 30;
  double dedup_distance = 1e-6;
};

struct CriticalPointSearch {
  std::vector<CriticalPoint> points;
  std::size_t failed_seeds = 0;
};

// Damped Newton on grad = 0 from every seed; step halved while the gradient
// norm would increase. Seeds that hit a singular Hessian, exhaust the
// iteration budget or cannot make progress count as failed.
CriticalPointSearch find_critical_points(const Objective& obj, std::span<const Point> seeds,
                                         const NewtonOptions& opts = {});

std::vector<Point> seed_grid(double lo_x, double hi_x, double lo_y, double hi_y, std::size_t nx,
                             std::size_t ny);

struct GridSpec {
  double x_min = -1.0, x_max = 1.0;
  double y_min = 0.0, y_max = 2.0;
  std::size_t nx = 200, ny = 200;

  double x(std::size_t i) const;
  double y(std::size_t j) const;
};

struct FieldCell {
  double x = 0.0, y = 0.0;
  double lam1 = 0.0, lam2 = 0.0;    // ascending Hessian eigenvalues
  double cond1 = 0.0, cond2 = 0.0;  // lambda + rho lambda^2
  bool finite = true;
};

// lambda + rho lambda^2 for both Hessian eigenvalues of a 2-D objective over a
// node grid (row-major in y, then x). Non-finite Hessians are flagged.
std::vector<FieldCell> eigen_condition_field(const Objective& obj, const GridSpec& grid, double rho);

std::string field_csv(std::span<const FieldCell> cells);

}  // namespace saddle
