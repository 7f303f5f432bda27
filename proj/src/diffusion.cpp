#include "saddle/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "saddle/errors.hpp"

namespace saddle {

SaddleModel SaddleModel::diagonal(Vector eigenvalues, double eta, double batch, double rho) {
  SaddleModel m;
  m.q = Matrix::identity(eigenvalues.size());
  m.eigenvalues = std::move(eigenvalues);
  m.eta = eta;
  m.batch = batch;
  m.rho = rho;
  return m;
}

double SaddleModel::rate(std::size_t j) const {
  const double lam = eigenvalues[j];
  const double f = 1.0 + rho * lam;
  return lam * f * f;
}

Matrix SaddleModel::hessian() const { return q * Matrix::diagonal(eigenvalues) * q.transpose(); }

void SaddleModel::validate() const {
  const std::size_t n = eigenvalues.size();
  if (n == 0) throw ContractViolation("SaddleModel: no eigenvalues");
  if (q.rows() != n || q.cols() != n) throw ContractViolation("SaddleModel: Q has the wrong shape");
  if (frobenius_norm(q.transpose() * q - Matrix::identity(n)) > 1e-9)
    throw ContractViolation("SaddleModel: Q is not orthonormal");
  bool negative = false;
  for (double lam : eigenvalues) {
    if (!std::isfinite(lam) || std::abs(lam) <= 1e-8)
      throw ContractViolation("SaddleModel: eigenvalues must be finite and nonzero");
    negative = negative || lam < 0.0;
  }
  if (!negative) throw ContractViolation("SaddleModel: no negative eigenvalue");
  if (!(eta > 0.0) || !(batch >= 1.0) || !(rho >= 0.0))
    throw ContractViolation("SaddleModel: need eta > 0, B >= 1, rho >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0) || !(tau >= 0.0 && tau < 1.0))
    throw ContractViolation("SaddleModel: gamma and tau must lie in [0, 1)");
}

namespace {

void check_common(double t, double eta, double batch) {
  if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (!(batch >= 1.0)) throw std::invalid_argument("B must be >= 1");
}

// (1 - exp(-k x)) / k, continuous at k = 0.
double one_minus_exp_over(double k, double x) {
  if (k == 0.0) return x;
  return -std::expm1(-k * x) / k;
}

}  // namespace

SigmaSq sigma_sq_detail(double t, double lambda, double eta, double batch, double rho) {
  check_common(t, eta, batch);
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  const double f = 1.0 + rho * lambda;
  const double a = lambda * f * f;
  const double scale = eta * std::abs(lambda) / batch;
  if (a == 0.0) return {scale * t, SigmaBranch::removable_limit};
  return {scale * one_minus_exp_over(2.0 * a, t), SigmaBranch::closed_form};
}

double sigma_sq(double t, double lambda, double eta, double batch, double rho) {
  return sigma_sq_detail(t, lambda, eta, batch, rho).value;
}

double msd_gap(double t, double lambda, double eta, double batch, double rho) {
  check_common(t, eta, batch);
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  const double l = std::abs(lambda);
  return 2.0 * eta * t * t * l * l * l * rho / batch;
}

MomentumConstants momentum_constants(double t, double lambda, double eta, double rho) {
  const double f = 1.0 + rho * lambda;
  const double a = lambda * f * f;
  MomentumConstants c;
  c.c1 = eta * eta * std::abs(lambda) / 2.0;
  c.c2 = eta / t;
  c.c3 = eta * std::abs(lambda) / (2.0 * a);
  c.c4 = 2.0 * a * t;
  return c;
}

double msd_momentum_asymptote(double t, double lambda, double eta, double batch, double rho, double gamma) {
  const MomentumConstants c = momentum_constants(t, lambda, eta, rho);
  if (!(c.c4 > 0.0)) return std::numeric_limits<double>::infinity();
  const double eps = 1.0 - gamma;
  return (c.c1 * c.c2 * c.c2 + c.c3) / (eps * batch);
}

double msd_momentum(double t, double lambda, double eta, double batch, double rho, double gamma) {
  check_common(t, eta, batch);
  if (!(t > 0.0)) throw std::invalid_argument("msd_momentum: t must be > 0");
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  const double eps = 1.0 - gamma;
  if (eps < 1e-9) return msd_momentum_asymptote(t, lambda, eta, batch, rho, gamma);

  const MomentumConstants c = momentum_constants(t, lambda, eta, rho);
  const double first = -std::expm1(-c.c2 * eps);
  const double term1 = c.c1 * first * first / (eps * eps * eps * batch);
  // C3 (1 - e^{-C4/eps}) with C3 = eta |lambda| / (2a), C4 = 2 a t.
  const double f = 1.0 + rho * lambda;
  const double a = lambda * f * f;
  const double term2 = eta * std::abs(lambda) * one_minus_exp_over(2.0 * a, t / eps) / (eps * batch);
  return term1 + term2;
}

Vector sde_drift(std::span<const double> offset, const SaddleModel& model) {
  const std::size_t n = model.dimension();
  if (offset.size() != n) throw std::invalid_argument("sde_drift: dimension mismatch");
  Vector z(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) z[j] += model.q(i, j) * offset[i];
    z[j] *= -model.rate(j);
  }
  return model.q * z;
}

Matrix diffusion_matrix(const SaddleModel& model) {
  Vector d(model.dimension());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = model.eta * std::abs(model.eigenvalues[j]) / (2.0 * model.batch);
  return model.q * Matrix::diagonal(d) * model.q.transpose();
}

Matrix DiffusionForecast::covariance(const SaddleModel& model, std::size_t k) const {
  return model.q * Matrix::diagonal(sigma_sq.at(k)) * model.q.transpose();
}

DiffusionForecast forecast(const SaddleModel& model, std::span<const double> times) {
  model.validate();
  DiffusionForecast f;
  for (double t : times) {
    Vector s(model.dimension());
    for (std::size_t j = 0; j < s.size(); ++j)
      s[j] = sigma_sq(t, model.eigenvalues[j], model.eta, model.batch, model.rho);
    f.times.push_back(t);
    f.sigma_sq.push_back(std::move(s));
  }
  if (!times.empty() && times.back() > 0.0)
    f.constants_at_end = momentum_constants(times.back(), model.eigenvalues[0], model.eta, model.rho);
  return f;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Fastest decay/growth rate of the discretized system in direction j.
double stiffness(const SaddleModel& m, std::size_t j, bool momentum) {
  const double a = m.rate(j);
  if (!momentum) return std::abs(a);
  const double mass = m.eta / (1.0 - m.tau);
  const double phi = (1.0 - m.gamma) / m.eta;
  const double b = phi / mass, c = a / mass;
  const std::complex<double> disc = std::sqrt(std::complex<double>(b * b - 4.0 * c, 0.0));
  return std::max(std::abs((-b + disc) / 2.0), std::abs((-b - disc) / 2.0));
}

double max_stiffness(const SaddleModel& m, bool momentum) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.dimension(); ++j) s = std::max(s, stiffness(m, j, momentum));
  return s;
}

struct Plan {
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<std::size_t> checkpoint_steps;  // ascending, last == steps
  std::vector<double> times;
};

Plan make_plan(const SaddleModel& model, const SdeOptions& opts) {
  model.validate();
  if (!(opts.t_end > 0.0)) throw std::invalid_argument("simulate_sde: t_end must be > 0");
  if (opts.n_paths < 100) throw std::invalid_argument("simulate_sde: need at least 100 paths");
  if (opts.groups < 2 || opts.groups > opts.n_paths)
    throw std::invalid_argument("simulate_sde: groups must lie in [2, n_paths]");
  if (opts.dt < 0.0 || !std::isfinite(opts.dt)) throw std::invalid_argument("simulate_sde: dt must be > 0");

  Plan p;
  const double requested = opts.dt > 0.0 ? opts.dt : default_dt(model, opts.with_momentum);
  p.steps = static_cast<std::size_t>(std::ceil(opts.t_end / requested - 1e-9));
  p.dt = opts.t_end / static_cast<double>(p.steps);
  const double stiff = max_stiffness(model, opts.with_momentum);
  if (p.dt * stiff > 0.1)
    throw StepSizeError(fmt::format("simulate_sde: dt={:.3g} too large for rate {:.3g} (need dt*rate <= 0.1)",
                                    p.dt, stiff));

  std::vector<std::size_t> steps;
  for (double t : opts.checkpoints) {
    if (!(t > 0.0 && t <= opts.t_end)) throw std::invalid_argument("simulate_sde: checkpoint outside (0, t_end]");
    steps.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t / p.dt))));
  }
  steps.push_back(p.steps);
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  p.checkpoint_steps = steps;
  for (std::size_t s : steps) p.times.push_back(static_cast<double>(s) * p.dt);
  return p;
}

// One path of one or two coupled-noise systems. out[c][j] receives x_j^2 at
// checkpoint c for the first system minus (when rates_alt is given) the second.
struct PathRunner {
  const SaddleModel& model;
  const Plan& plan;
  bool momentum;
  double noise_scale;
  const Vector* rates_alt;

  void run(std::uint64_t seed, std::vector<Vector>& out, Vector& x_end) const {
    const std::size_t n = model.dimension();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = plan.dt;
    const double sqdt = std::sqrt(dt);
    Vector sig(n), a(n);
    for (std::size_t j = 0; j < n; ++j) {
      sig[j] = noise_scale * std::sqrt(model.eta * std::abs(model.eigenvalues[j]) / model.batch) * sqdt;
      a[j] = model.rate(j);
    }
    const double mass = model.eta / (1.0 - model.tau);
    const double phi = (1.0 - model.gamma) / model.eta;
    Vector x(n, 0.0), v(n, 0.0), x2(n, 0.0), v2(n, 0.0);

    std::size_t next = 0;
    for (std::size_t k = 1; k <= plan.steps; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        const double dw = sig[j] * normal(rng);
        if (momentum) {
          v[j] += ((-phi * v[j] - a[j] * x[j]) * dt + dw) / mass;
          x[j] += v[j] * dt;
          if (rates_alt) {
            v2[j] += ((-phi * v2[j] - (*rates_alt)[j] * x2[j]) * dt + dw) / mass;
            x2[j] += v2[j] * dt;
          }
        } else {
          x[j] += -a[j] * x[j] * dt + dw;
          if (rates_alt) x2[j] += -(*rates_alt)[j] * x2[j] * dt + dw;
        }
      }
      if (k == plan.checkpoint_steps[next]) {
        for (std::size_t j = 0; j < n; ++j) out[next][j] = x[j] * x[j] - (rates_alt ? x2[j] * x2[j] : 0.0);
        ++next;
      }
    }
    x_end = x;
  }
};

struct Accumulated {
  std::vector<std::vector<Vector>> group_sums;  // [group][checkpoint][direction]
  std::vector<std::size_t> group_counts;
  Matrix second_moment;
};

Accumulated accumulate(const SaddleModel& model, const Plan& plan, const SdeOptions& opts, const Vector* rates_alt) {
  const std::size_t n = model.dimension();
  const std::size_t nc = plan.checkpoint_steps.size();
  const std::size_t groups = opts.groups;
  Accumulated acc;
  acc.group_sums.assign(groups, std::vector<Vector>(nc, Vector(n, 0.0)));
  acc.group_counts.assign(groups, 0);
  std::vector<Matrix> group_moment(groups, Matrix(n, n));

  const PathRunner runner{model, plan, opts.with_momentum, opts.noise_scale, rates_alt};
  auto work_group = [&](std::size_t g) {
    const std::size_t begin = g * opts.n_paths / groups;
    const std::size_t end = (g + 1) * opts.n_paths / groups;
    std::vector<Vector> out(nc, Vector(n));
    Vector x_end;
    for (std::size_t p = begin; p < end; ++p) {
      runner.run(path_seed(opts.seed, p), out, x_end);
      for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t j = 0; j < n; ++j) acc.group_sums[g][c][j] += out[c][j];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) group_moment[g](i, j) += x_end[i] * x_end[j];
    }
    acc.group_counts[g] = end - begin;
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, groups));
  if (threads <= 1) {
    for (std::size_t g = 0; g < groups; ++g) work_group(g);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t g = t; g < groups; g += threads) work_group(g);
      });
    for (auto& th : pool) th.join();
  }

  acc.second_moment = Matrix(n, n);
  for (std::size_t g = 0; g < groups; ++g) acc.second_moment = acc.second_moment + group_moment[g];
  acc.second_moment = (1.0 / static_cast<double>(opts.n_paths)) * acc.second_moment;
  return acc;
}

MsdEstimate summarize(const Accumulated& acc, std::size_t c, std::size_t j) {
  const std::size_t groups = acc.group_counts.size();
  MsdEstimate e;
  double total = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    total += acc.group_sums[g][c][j];
    e.count += acc.group_counts[g];
  }
  e.mean = total / static_cast<double>(e.count);
  double ss = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double gm = acc.group_sums[g][c][j] / static_cast<double>(acc.group_counts[g]);
    ss += (gm - e.mean) * (gm - e.mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(groups - 1));
  e.std_error = sd / std::sqrt(static_cast<double>(groups));
  e.half_width = 1.96 * e.std_error;
  return e;
}

}  // namespace

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
  return splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632be59bd9b4e019ULL));
}

double default_dt(const SaddleModel& model, bool with_momentum) {
  const double s = max_stiffness(model, with_momentum);
  return s > 0.0 ? std::min(1e-3, 0.01 / s) : 1e-3;
}

SdeResult simulate_sde(const SaddleModel& model, const SdeOptions& opts) {
  const Plan plan = make_plan(model, opts);
  const Accumulated acc = accumulate(model, plan, opts, nullptr);
  SdeResult r;
  r.times = plan.times;
  r.dt = plan.dt;
  r.steps = plan.steps;
  for (std::size_t c = 0; c < plan.times.size(); ++c) {
    std::vector<MsdEstimate> row;
    for (std::size_t j = 0; j < model.dimension(); ++j) row.push_back(summarize(acc, c, j));
    r.msd.push_back(std::move(row));
  }
  r.second_moment = model.q * acc.second_moment * model.q.transpose();
  return r;
}

std::vector<MsdEstimate> simulate_msd_difference(const SaddleModel& model, double rho_alt, const SdeOptions& opts) {
  SaddleModel alt = model;
  alt.rho = rho_alt;
  alt.validate();
  const Plan plan = make_plan(model, opts);
  if (plan.dt * max_stiffness(alt, opts.with_momentum) > 0.1)
    throw StepSizeError("simulate_msd_difference: dt too large for the alternative model");
  Vector rates(model.dimension());
  for (std::size_t j = 0; j < rates.size(); ++j) rates[j] = alt.rate(j);
  const Accumulated acc = accumulate(model, plan, opts, &rates);
  std::vector<MsdEstimate> out;
  const std::size_t last = plan.times.size() - 1;
  for (std::size_t j = 0; j < model.dimension(); ++j) out.push_back(summarize(acc, last, j));
  return out;
}

std::string forecast_csv(const SaddleModel& model, const SdeResult& mc) {
  std::string out = "t,direction,sigma_sq_closed,msd_mc,ci_halfwidth\n";
  for (std::size_t c = 0; c < mc.times.size(); ++c)
    for (std::size_t j = 0; j < model.dimension(); ++j) {
      const double closed = sigma_sq(mc.times[c], model.eigenvalues[j], model.eta, model.batch, model.rho);
      out += fmt::format("{:.17g},{},{:.17g},{:.17g},{:.17g}\n", mc.times[c], j, closed, mc.msd[c][j].mean,
                         mc.msd[c][j].half_width);
    }
  return out;
}

}  // namespace saddle
