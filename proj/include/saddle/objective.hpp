#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "saddle/linalg.hpp"

namespace saddle {

using Point = Vector;

struct ObjectiveEval {
  double value = 0.0;
  Vector gradient;
  std::optional<Matrix> hessian;
};

// Smooth loss with exact analytic derivatives.
//
// The raw virtuals skip input validation so that optimizer inner loops stay
// allocation-light; `evaluate` is the checked entry point.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string_view id() const = 0;
  virtual std::size_t dimension() const = 0;

  virtual double value(std::span<const double> p) const = 0;
  virtual void gradient_into(std::span<const double> p, std::span<double> out) const = 0;
  virtual Matrix hessian(std::span<const double> p) const = 0;

  // Throws InvalidPoint on dimension mismatch or non-finite input.
  ObjectiveEval evaluate(std::span<const double> p, bool with_hessian = true) const;
  Vector gradient(std::span<const double> p) const;

  void check_point(std::span<const double> p) const;
};

// f(x, y) = (1.5 - x + xy)^2 + (2.25 - x + xy^2)^2 + (2.625 - x + xy^3)^2
class Beale final : public Objective {
 public:
  std::string_view id() const override { return "beale"; }
  std::size_t dimension() const override { return 2; }
  double value(std::span<const double> p) const override;
  void gradient_into(std::span<const double> p, std::span<double> out) const override;
  Matrix hessian(std::span<const double> p) const override;
};

// f(x, y) = x^2 - y^2
class QuadraticSaddle final : public Objective {
 public:
  std::string_view id() const override { return "quadratic_saddle"; }
  std::size_t dimension() const override { return 2; }
  double value(std::span<const double> p) const override;
  void gradient_into(std::span<const double> p, std::span<double> out) const override;
  Matrix hessian(std::span<const double> p) const override;
};

// f(w) = offset + 1/2 (w - center)^T H (w - center) for a fixed symmetric H.
class Quadratic final : public Objective {
 public:
  Quadratic(Matrix hessian, Point center, double offset = 0.0);

  std::string_view id() const override { return "quadratic"; }
  std::size_t dimension() const override { return center_.size(); }
  double value(std::span<const double> p) const override;
  void gradient_into(std::span<const double> p, std::span<double> out) const override;
  Matrix hessian(std::span<const double> p) const override;

  const Point& center() const { return center_; }

 private:
  Matrix h_;
  Point center_;
  double offset_;
};

// Expected squared error of the one-neuron network y_hat = w2 * (w1 * x)^2
// with x = 1 and y uniform on {-1, 2}. Closed form u^2 - u + 2.5, u = w2 w1^2.
class ToyNnExpected final : public Objective {
 public:
  std::string_view id() const override { return "toy_nn"; }
  std::size_t dimension() const override { return 2; }
  double value(std::span<const double> p) const override;
  void gradient_into(std::span<const double> p, std::span<double> out) const override;
  Matrix hessian(std::span<const double> p) const override;
};

struct Sample {
  double label = 0.0;
  double probability = 0.0;
};

// Loss defined as an expectation over a finite, labeled sample space.
class StochasticObjective {
 public:
  virtual ~StochasticObjective() = default;

  virtual std::span<const Sample> samples() const = 0;
  virtual const Objective& expected() const = 0;
  virtual void sample_gradient_into(std::span<const double> p, std::size_t sample,
                                    std::span<double> out) const = 0;
  virtual ObjectiveEval per_sample(std::span<const double> p, std::size_t sample) const = 0;
};

class ToyNn final : public StochasticObjective {
 public:
  ToyNn();

  std::span<const Sample> samples() const override { return samples_; }
  const Objective& expected() const override { return expected_; }
  void sample_gradient_into(std::span<const double> p, std::size_t sample,
                            std::span<double> out) const override;
  ObjectiveEval per_sample(std::span<const double> p, std::size_t sample) const override;

  // (w2 w1^2 - label)^2 with derivatives; label must be -1 or 2.
  ObjectiveEval evaluate_label(std::span<const double> p, double label) const;

 private:
  std::vector<Sample> samples_;
  ToyNnExpected expected_;
};

// Distance-like residual to the toy network's minima manifold {w2 w1^2 = 1/2}.
double toy_nn_minimum_residual(std::span<const double> p);

// Objective lookup by config/CLI id: "beale", "quadratic_saddle", "toy_nn".
std::unique_ptr<Objective> make_objective(std::string_view id);

struct FiniteDiffReport {
  double gradient_error = 0.0;
  double hessian_error = 0.0;
  bool gradient_absolute = false;  // analytic gradient below the floor
  bool hessian_absolute = false;
};

// Central differences of value (for the gradient) and of the analytic gradient
// (for the Hessian), compared entrywise. The error is max |analytic - fd|
// divided by max(max |analytic|, abs_floor); below the floor the comparison is
// absolute.
FiniteDiffReport finite_diff_check(const Objective& obj, std::span<const double> p, double h,
                                   double abs_floor = 1e-10);

}  // namespace saddle
