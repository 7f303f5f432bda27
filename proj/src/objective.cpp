#include "saddle/objective.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "saddle/errors.hpp"

namespace saddle {

void Objective::check_point(std::span<const double> p) const {
  if (p.size() != dimension())
    throw InvalidPoint(fmt::format("{}: expected dimension {}, got {}", id(), dimension(), p.size()));
  if (!all_finite(p)) throw InvalidPoint(fmt::format("{}: non-finite coordinate", id()));
}

ObjectiveEval Objective::evaluate(std::span<const double> p, bool with_hessian) const {
  check_point(p);
  ObjectiveEval e;
  e.value = value(p);
  e.gradient.resize(dimension());
  gradient_into(p, e.gradient);
  if (with_hessian) e.hessian = hessian(p);
  return e;
}

Vector Objective::gradient(std::span<const double> p) const {
  check_point(p);
  Vector g(dimension());
  gradient_into(p, g);
  return g;
}

// --- Beale -----------------------------------------------------------------

namespace {

constexpr double kBealeC[3] = {1.5, 2.25, 2.625};

}  // namespace

double Beale::value(std::span<const double> p) const {
  const double x = p[0], y = p[1];
  double f = 0.0, yi = 1.0;
  for (double c : kBealeC) {
    yi *= y;
    const double r = c - x + x * yi;
    f += r * r;
  }
  return f;
}

void Beale::gradient_into(std::span<const double> p, std::span<double> out) const {
  const double x = p[0], y = p[1];
  double gx = 0.0, gy = 0.0;
  double yprev = 1.0;  // y^(i-1)
  for (int i = 1; i <= 3; ++i) {
    const double yi = yprev * y;
    const double r = kBealeC[i - 1] - x + x * yi;
    gx += 2.0 * r * (yi - 1.0);
    gy += 2.0 * r * (i * x * yprev);
    yprev = yi;
  }
  out[0] = gx;
  out[1] = gy;
}

Matrix Beale::hessian(std::span<const double> p) const {
  const double x = p[0], y = p[1];
  double hxx = 0.0, hxy = 0.0, hyy = 0.0;
  double yprev = 1.0, yprev2 = 0.0;  // y^(i-1), y^(i-2)
  for (int i = 1; i <= 3; ++i) {
    const double yi = yprev * y;
    const double r = kBealeC[i - 1] - x + x * yi;
    const double rx = yi - 1.0;
    const double ry = i * x * yprev;
    const double rxy = i * yprev;
    const double ryy = i * (i - 1) * x * yprev2;
    hxx += 2.0 * rx * rx;
    hxy += 2.0 * (rx * ry + r * rxy);
    hyy += 2.0 * (ry * ry + r * ryy);
    yprev2 = yprev;
    yprev = yi;
  }
  Matrix h(2, 2);
  h(0, 0) = hxx;
  h(0, 1) = h(1, 0) = hxy;
  h(1, 1) = hyy;
  return h;
}

// --- x^2 - y^2 ---------------------------------------------------------------

double QuadraticSaddle::value(std::span<const double> p) const { return p[0] * p[0] - p[1] * p[1]; }

void QuadraticSaddle::gradient_into(std::span<const double> p, std::span<double> out) const {
  out[0] = 2.0 * p[0];
  out[1] = -2.0 * p[1];
}

Matrix QuadraticSaddle::hessian(std::span<const double>) const {
  const double d[2] = {2.0, -2.0};
  return Matrix::diagonal(d);
}

// --- general quadratic -------------------------------------------------------

Quadratic::Quadratic(Matrix hessian, Point center, double offset)
    : h_(std::move(hessian)), center_(std::move(center)), offset_(offset) {
  if (!h_.square() || h_.rows() != center_.size())
    throw std::invalid_argument("Quadratic: Hessian shape does not match center");
  if (asymmetry(h_) > 1e-12) throw std::invalid_argument("Quadratic: Hessian is not symmetric");
}

double Quadratic::value(std::span<const double> p) const {
  const Vector d = subtract(p, center_);
  return offset_ + 0.5 * dot(d, h_ * std::span<const double>(d));
}

void Quadratic::gradient_into(std::span<const double> p, std::span<double> out) const {
  const std::size_t n = center_.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += h_(i, j) * (p[j] - center_[j]);
    out[i] = s;
  }
}

Matrix Quadratic::hessian(std::span<const double>) const { return h_; }

// --- toy network -------------------------------------------------------------

namespace {

// u = w2 w1^2 and its derivatives.
struct ToyU {
  double u, du1, du2;
};

ToyU toy_u(std::span<const double> p) {
  const double w1 = p[0], w2 = p[1];
  return {w2 * w1 * w1, 2.0 * w2 * w1, w1 * w1};
}

// Hessian of s(u) where s' = ds and s'' = dds.
Matrix toy_hessian(std::span<const double> p, double ds, double dds) {
  const double w1 = p[0], w2 = p[1];
  const ToyU t = toy_u(p);
  Matrix h(2, 2);
  h(0, 0) = dds * t.du1 * t.du1 + ds * 2.0 * w2;
  h(0, 1) = h(1, 0) = dds * t.du1 * t.du2 + ds * 2.0 * w1;
  h(1, 1) = dds * t.du2 * t.du2;
  return h;
}

}  // namespace

double ToyNnExpected::value(std::span<const double> p) const {
  const double u = toy_u(p).u;
  return u * u - u + 2.5;
}

void ToyNnExpected::gradient_into(std::span<const double> p, std::span<double> out) const {
  const ToyU t = toy_u(p);
  const double ds = 2.0 * t.u - 1.0;
  out[0] = ds * t.du1;
  out[1] = ds * t.du2;
}

Matrix ToyNnExpected::hessian(std::span<const double> p) const {
  return toy_hessian(p, 2.0 * toy_u(p).u - 1.0, 2.0);
}

ToyNn::ToyNn() : samples_{{-1.0, 0.5}, {2.0, 0.5}} {}

void ToyNn::sample_gradient_into(std::span<const double> p, std::size_t sample,
                                 std::span<double> out) const {
  const ToyU t = toy_u(p);
  const double ds = 2.0 * (t.u - samples_[sample].label);
  out[0] = ds * t.du1;
  out[1] = ds * t.du2;
}

ObjectiveEval ToyNn::per_sample(std::span<const double> p, std::size_t sample) const {
  if (sample >= samples_.size())
    throw InvalidSample(fmt::format("toy_nn: sample index {} out of range", sample));
  return evaluate_label(p, samples_[sample].label);
}

ObjectiveEval ToyNn::evaluate_label(std::span<const double> p, double label) const {
  expected_.check_point(p);
  if (label != -1.0 && label != 2.0)
    throw InvalidSample(fmt::format("toy_nn: label {} is not in {{-1, 2}}", label));
  const ToyU t = toy_u(p);
  const double r = t.u - label;
  ObjectiveEval e;
  e.value = r * r;
  e.gradient = {2.0 * r * t.du1, 2.0 * r * t.du2};
  e.hessian = toy_hessian(p, 2.0 * r, 2.0);
  return e;
}

double toy_nn_minimum_residual(std::span<const double> p) { return std::abs(toy_u(p).u - 0.5); }

std::unique_ptr<Objective> make_objective(std::string_view id) {
  if (id == "beale") return std::make_unique<Beale>();
  if (id == "quadratic_saddle") return std::make_unique<QuadraticSaddle>();
  if (id == "toy_nn") return std::make_unique<ToyNnExpected>();
  throw std::invalid_argument(fmt::format("unknown objective id '{}'", id));
}

// --- finite differences ------------------------------------------------------

FiniteDiffReport finite_diff_check(const Objective& obj, std::span<const double> p, double h,
                                   double abs_floor) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  obj.check_point(p);
  const std::size_t n = obj.dimension();
  for (double c : p)
    if (c + h == c || c - h == c)
      throw DegenerateStep(fmt::format("finite_diff_check: step {} vanishes against coordinate {}", h, c));

  const ObjectiveEval exact = obj.evaluate(p, true);
  Vector fd_grad(n);
  Matrix fd_hess(n, n);
  Vector q(p.begin(), p.end());
  Vector gp(n), gm(n);
  for (std::size_t j = 0; j < n; ++j) {
    q[j] = p[j] + h;
    const double fp = obj.value(q);
    obj.gradient_into(q, gp);
    q[j] = p[j] - h;
    const double fm = obj.value(q);
    obj.gradient_into(q, gm);
    q[j] = p[j];
    fd_grad[j] = (fp - fm) / (2.0 * h);
    for (std::size_t i = 0; i < n; ++i) fd_hess(i, j) = (gp[i] - gm[i]) / (2.0 * h);
  }

  FiniteDiffReport r;
  double gscale = 0.0, gdiff = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    gscale = std::max(gscale, std::abs(exact.gradient[i]));
    gdiff = std::max(gdiff, std::abs(exact.gradient[i] - fd_grad[i]));
  }
  r.gradient_absolute = gscale < abs_floor;
  r.gradient_error = r.gradient_absolute ? gdiff : gdiff / gscale;

  double hscale = 0.0, hdiff = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      hscale = std::max(hscale, std::abs((*exact.hessian)(i, j)));
      hdiff = std::max(hdiff, std::abs((*exact.hessian)(i, j) - fd_hess(i, j)));
    }
  r.hessian_absolute = hscale < abs_floor;
  r.hessian_error = r.hessian_absolute ? hdiff : hdiff / hscale;
  return r;
}

}  // namespace saddle
