#include "saddle/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <stdexcept>

#include "saddle/errors.hpp"

namespace saddle {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// A <- J^T A J and V <- V J for the rotation zeroing a(p, q).
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const std::size_t n = a.rows();
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p), akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k), aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = a(q, p) = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p), vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenDecomposition eigendecompose(const Matrix& h) {
  if (!h.square()) throw ContractViolation("eigendecompose: matrix is not square");
  const std::size_t n = h.rows();
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(h(i, j)));
  if (!std::isfinite(scale)) throw ContractViolation("eigendecompose: non-finite entries");
  if (asymmetry(h) > 1e-9 * scale) throw ContractViolation("eigendecompose: matrix is not symmetric");

  Matrix a = h;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (h(i, j) + h(j, i));
  Matrix v = Matrix::identity(n);
  const double stop = 1e-12 * std::max(1.0, frobenius_norm(a));

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm(a) >= stop; ++sweep)
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        if (a(p, q) != 0.0) rotate(a, v, p, q);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a(src, src);
    std::size_t big = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(big, src))) big = k;
    const double sign = v(big, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * v(k, src);
  }
  return out;
}

AttractorVerdict attractor_condition(std::span<const double> eigenvalues, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("attractor_condition: rho must be >= 0");
  AttractorVerdict v;
  v.attractor = true;
  for (double lam : eigenvalues) {
    const double cond = lam + rho * lam * lam;
    v.condition.push_back(cond);
    v.flags.push_back(cond >= 0.0);
    if (lam < 0.0 && cond < 0.0) v.attractor = false;
  }
  return v;
}

std::optional<AttractorVerdict> SpectralReport::attractor(double rho) const {
  if (degenerate) return std::nullopt;
  return attractor_condition(eigenvalues, rho);
}

SpectralReport spectral_report(const Matrix& h) {
  EigenDecomposition e = eigendecompose(h);
  SpectralReport r;
  for (double lam : e.values) {
    if (lam < -kDegenerateEigenvalue) ++r.index;
    if (std::abs(lam) < kDegenerateEigenvalue) r.degenerate = true;
  }
  r.eigenvalues = std::move(e.values);
  r.eigenvectors = std::move(e.vectors);
  return r;
}

namespace {

std::optional<Point> newton_solve(const Objective& obj, Point w, const NewtonOptions& opts) {
  const std::size_t n = obj.dimension();
  Vector g(n), trial_g(n), step;
  obj.gradient_into(w, g);
  double gnorm = norm(g);
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (!std::isfinite(gnorm)) return std::nullopt;
    if (gnorm < opts.tol) return w;
    if (!solve_linear(obj.hessian(w), scaled(g, -1.0), step)) return std::nullopt;
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k, alpha *= 0.5) {
      Point trial = w;
      axpy(alpha, step, trial);
      obj.gradient_into(trial, trial_g);
      const double tn = norm(trial_g);
      if (std::isfinite(tn) && tn <= gnorm) {
        w = std::move(trial);
        g = trial_g;
        gnorm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) return std::nullopt;
  }
  return gnorm < opts.tol ? std::optional<Point>(w) : std::nullopt;
}

}  // namespace

CriticalPointSearch find_critical_points(const Objective& obj, std::span<const Point> seeds,
                                         const NewtonOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("find_critical_points: tol must be positive");
  CriticalPointSearch out;
  for (const Point& seed : seeds) {
    obj.check_point(seed);
    const std::optional<Point> sol = newton_solve(obj, seed, opts);
    if (!sol) {
      ++out.failed_seeds;
      continue;
    }
    const bool duplicate = std::any_of(out.points.begin(), out.points.end(), [&](const CriticalPoint& c) {
      return distance(c.location, *sol) < opts.dedup_distance;
    });
    if (duplicate) continue;
    const ObjectiveEval e = obj.evaluate(*sol, true);
    out.points.push_back({*sol, norm(e.gradient), spectral_report(*e.hessian)});
  }
  return out;
}

std::vector<Point> seed_grid(double lo_x, double hi_x, double lo_y, double hi_y, std::size_t nx,
                             std::size_t ny) {
  std::vector<Point> seeds;
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = nx > 1 ? lo_x + (hi_x - lo_x) * i / (nx - 1) : lo_x;
      const double y = ny > 1 ? lo_y + (hi_y - lo_y) * j / (ny - 1) : lo_y;
      seeds.push_back({x, y});
    }
  return seeds;
}

double GridSpec::x(std::size_t i) const {
  return nx > 1 ? x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(nx - 1) : x_min;
}

double GridSpec::y(std::size_t j) const {
  return ny > 1 ? y_min + (y_max - y_min) * static_cast<double>(j) / static_cast<double>(ny - 1) : y_min;
}

std::vector<FieldCell> eigen_condition_field(const Objective& obj, const GridSpec& grid, double rho) {
  if (obj.dimension() != 2) throw ContractViolation("eigen_condition_field: objective must be 2-D");
  if (!(rho >= 0.0)) throw std::invalid_argument("eigen_condition_field: rho must be >= 0");
  std::vector<FieldCell> cells;
  cells.reserve(grid.nx * grid.ny);
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      FieldCell c;
      c.x = grid.x(i);
      c.y = grid.y(j);
      const Point p{c.x, c.y};
      const Matrix h = obj.hessian(p);
      const bool finite = std::isfinite(h(0, 0)) && std::isfinite(h(0, 1)) &&
                          std::isfinite(h(1, 0)) && std::isfinite(h(1, 1));
      if (!finite) {
        c.finite = false;
        c.lam1 = c.lam2 = c.cond1 = c.cond2 = NAN;
      } else {
        const EigenDecomposition e = eigendecompose(h);
        c.lam1 = e.values[0];
        c.lam2 = e.values[1];
        c.cond1 = c.lam1 + rho * c.lam1 * c.lam1;
        c.cond2 = c.lam2 + rho * c.lam2 * c.lam2;
      }
      cells.push_back(c);
    }
  return cells;
}

std::string field_csv(std::span<const FieldCell> cells) {
  std::string out = "x,y,lam1,lam2,cond1,cond2\n";
  for (const FieldCell& c : cells)
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", c.x, c.y, c.lam1, c.lam2,
                       c.cond1, c.cond2);
  return out;
}

}  // namespace saddle
