#include "saddle/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

#include "saddle/errors.hpp"

namespace saddle {

void OptimConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("OptimConfig: eta must be > 0");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw std::invalid_argument("OptimConfig: rho must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("OptimConfig: gamma must lie in [0, 1)");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("OptimConfig: tau must lie in [0, 1]");
  if (batch_size == 0) throw std::invalid_argument("OptimConfig: batch_size must be positive");
  if (!(grad_eps > 0.0)) throw std::invalid_argument("OptimConfig: grad_eps must be positive");
}

std::string to_string(Method m) { return m == Method::gd ? "gd" : "sam"; }
std::string to_string(RhoMode m) { return m == RhoMode::constant ? "constant" : "normalized"; }

Method parse_method(std::string_view s) {
  if (s == "gd" || s == "sgd") return Method::gd;
  if (s == "sam") return Method::sam;
  throw std::invalid_argument(fmt::format("unknown method '{}'", s));
}

RhoMode parse_rho_mode(std::string_view s) {
  if (s == "constant") return RhoMode::constant;
  if (s == "normalized") return RhoMode::normalized;
  throw std::invalid_argument(fmt::format("unknown rho mode '{}'", s));
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::max_steps: return "max-steps";
    case Termination::grad_tolerance: return "grad-tolerance";
    case Termination::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

void require_finite_gradient(std::span<const double> g) {
  if (!all_finite(g)) throw Divergence("non-finite gradient");
}

// Shared update: given the gradient actually used for the step, advance w and
// (optionally) the momentum buffer in place.
void apply_update(std::span<double> w, std::span<const double> g, const OptimConfig& cfg,
                  MomentumState* state) {
  if (state == nullptr) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = w[i] - cfg.eta * g[i];
    return;
  }
  const double keep = 1.0 - cfg.tau;
  for (std::size_t i = 0; i < w.size(); ++i) {
    state->m[i] = cfg.gamma * state->m[i] + keep * g[i];
    w[i] = w[i] - cfg.eta * state->m[i];
  }
}

bool diverged(std::span<const double> w, const OptimConfig& cfg) {
  return !all_finite(w) || norm(w) > cfg.divergence_norm;
}

}  // namespace

Vector gd_step(const Objective& obj, std::span<const double> w, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("gd_step: eta must be > 0");
  const Vector g = obj.gradient(w);
  require_finite_gradient(g);
  Vector next(w.begin(), w.end());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = next[i] - eta * g[i];
  return next;
}

Vector sam_perturbation(std::span<const double> w, std::span<const double> grad,
                        const OptimConfig& cfg) {
  Vector wp(w.begin(), w.end());
  if (cfg.rho == 0.0) return wp;
  double scale = cfg.rho;
  if (cfg.rho_mode == RhoMode::normalized) {
    const double gn = norm(grad);
    if (gn < cfg.grad_eps) return wp;
    scale = cfg.rho / gn;
  }
  axpy(scale, grad, wp);
  return wp;
}

SamStep sam_step(const Objective& obj, std::span<const double> w, const OptimConfig& cfg) {
  cfg.validate();
  SamStep s;
  s.grad_w = obj.gradient(w);
  require_finite_gradient(s.grad_w);
  s.w_p = sam_perturbation(w, s.grad_w, cfg);
  if (!all_finite(s.w_p)) throw Divergence("non-finite perturbed point");
  s.grad_wp = Vector(obj.dimension());
  obj.gradient_into(s.w_p, s.grad_wp);
  require_finite_gradient(s.grad_wp);
  s.w_next.assign(w.begin(), w.end());
  apply_update(s.w_next, s.grad_wp, cfg, nullptr);
  return s;
}

MomentumStep momentum_step(const Objective& obj, std::span<const double> w,
                           const MomentumState& state, const OptimConfig& cfg,
                           GradSource source) {
  cfg.validate();
  if (state.m.size() != w.size())
    throw std::invalid_argument("momentum_step: buffer dimension does not match the point");
  Vector g = obj.gradient(w);
  require_finite_gradient(g);
  if (source == GradSource::sam) {
    const Vector wp = sam_perturbation(w, g, cfg);
    obj.gradient_into(wp, g);
    require_finite_gradient(g);
  }
  MomentumStep out{Vector(w.begin(), w.end()), state};
  apply_update(out.w_next, g, cfg, &out.state);
  return out;
}

namespace {

std::discrete_distribution<std::size_t> sample_distribution(const StochasticObjective& obj) {
  std::vector<double> probs;
  for (const Sample& s : obj.samples()) probs.push_back(s.probability);
  return std::discrete_distribution<std::size_t>(probs.begin(), probs.end());
}

void batch_gradient(const StochasticObjective& obj, std::span<const double> p,
                    std::span<const std::size_t> draws, bool full_batch, std::span<double> out,
                    std::span<double> scratch) {
  std::fill(out.begin(), out.end(), 0.0);
  if (full_batch) {
    const auto samples = obj.samples();
    for (std::size_t k = 0; k < samples.size(); ++k) {
      obj.sample_gradient_into(p, k, scratch);
      axpy(samples[k].probability, scratch, out);
    }
    return;
  }
  for (std::size_t k : draws) {
    obj.sample_gradient_into(p, k, scratch);
    axpy(1.0, scratch, out);
  }
  const double inv = 1.0 / static_cast<double>(draws.size());
  for (double& v : out) v *= inv;
}

void sgd_step_into(const StochasticObjective& obj, std::span<const double> w,
                   const OptimConfig& cfg, std::mt19937_64& rng,
                   std::discrete_distribution<std::size_t>& dist, SgdStep& s, Vector& scratch) {
  const std::size_t n = w.size();
  s.draws.clear();
  if (!cfg.full_batch)
    for (std::size_t b = 0; b < cfg.batch_size; ++b) s.draws.push_back(dist(rng));
  s.batch_grad.resize(n);
  s.batch_grad_p.resize(n);
  scratch.resize(n);
  batch_gradient(obj, w, s.draws, cfg.full_batch, s.batch_grad, scratch);
  require_finite_gradient(s.batch_grad);
  if (cfg.method == Method::sam) {
    s.w_p = sam_perturbation(w, s.batch_grad, cfg);
    batch_gradient(obj, s.w_p, s.draws, cfg.full_batch, s.batch_grad_p, scratch);
    require_finite_gradient(s.batch_grad_p);
  } else {
    s.w_p.assign(w.begin(), w.end());
    s.batch_grad_p = s.batch_grad;
  }
}

}  // namespace

SgdStep sgd_step(const StochasticObjective& obj, std::span<const double> w,
                 const OptimConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  obj.expected().check_point(w);
  auto dist = sample_distribution(obj);
  SgdStep s;
  Vector scratch;
  sgd_step_into(obj, w, cfg, rng, dist, s, scratch);
  s.w_next.assign(w.begin(), w.end());
  apply_update(s.w_next, s.batch_grad_p, cfg, nullptr);
  return s;
}

std::optional<double> grad_cosine(std::span<const double> g1, std::span<const double> g2,
                                  double grad_eps) {
  if (g1.size() != g2.size()) throw std::invalid_argument("grad_cosine: dimension mismatch");
  const double n1 = norm(g1), n2 = norm(g2);
  if (n1 < grad_eps || n2 < grad_eps) return std::nullopt;
  return std::clamp(dot(g1, g2) / (n1 * n2), -1.0, 1.0);
}

namespace {

bool should_record(std::size_t t, std::size_t stride) {
  if (t == 0) return true;
  return stride != 0 && t % stride == 0;
}

StepRecord diverged_record(std::size_t t, std::span<const double> w, double loss) {
  return {t, Vector(w.begin(), w.end()), Vector(w.begin(), w.end()), loss, NAN, std::nullopt};
}

}  // namespace

Trajectory run_trajectory(const Objective& obj, const OptimConfig& cfg, std::span<const double> w0) {
  cfg.validate();
  obj.check_point(w0);
  Trajectory traj{{}, cfg, Termination::max_steps};
  const std::size_t n = obj.dimension();
  Vector w(w0.begin(), w0.end());
  Vector grad_w(n), grad_wp(n), wp;
  std::optional<MomentumState> state;
  if (cfg.momentum) state = MomentumState::zeros(n);

  for (std::size_t t = 0;; ++t) {
    obj.gradient_into(w, grad_w);
    if (!all_finite(grad_w)) {
      traj.termination = Termination::diverged;
      traj.records.push_back(diverged_record(t, w, obj.value(w)));
      break;
    }
    const double gnorm = norm(grad_w);
    if (cfg.method == Method::sam) {
      wp = sam_perturbation(w, grad_w, cfg);
      obj.gradient_into(wp, grad_wp);
    } else {
      wp = w;
      grad_wp = grad_w;
    }
    const bool converged = gnorm < cfg.grad_tol;
    const bool exhausted = t >= cfg.max_steps;
    if (converged) traj.termination = Termination::grad_tolerance;
    if (should_record(t, cfg.record_stride) || converged || exhausted)
      traj.records.push_back({t, w, wp, obj.value(w), gnorm, grad_cosine(grad_w, grad_wp, cfg.grad_eps)});
    if (converged || exhausted) break;

    if (!all_finite(grad_wp)) {
      traj.termination = Termination::diverged;
      traj.records.push_back(diverged_record(t + 1, w, NAN));
      break;
    }
    apply_update(w, grad_wp, cfg, state ? &*state : nullptr);
    if (diverged(w, cfg)) {
      traj.termination = Termination::diverged;
      traj.records.push_back(diverged_record(t + 1, w, all_finite(w) ? obj.value(w) : NAN));
      break;
    }
  }
  return traj;
}

Trajectory run_stochastic_trajectory(const StochasticObjective& obj, const OptimConfig& cfg,
                                     std::span<const double> w0) {
  cfg.validate();
  const Objective& expected = obj.expected();
  expected.check_point(w0);
  Trajectory traj{{}, cfg, Termination::max_steps};
  const std::size_t n = expected.dimension();
  std::mt19937_64 rng(cfg.seed);
  auto dist = sample_distribution(obj);
  Vector w(w0.begin(), w0.end());
  Vector scratch, grad_exp(n);
  SgdStep s;
  std::optional<MomentumState> state;
  if (cfg.momentum) state = MomentumState::zeros(n);

  for (std::size_t t = 0;; ++t) {
    const bool exhausted = t >= cfg.max_steps;
    if (exhausted) {
      // Final record: no batch is drawn, so it carries no perturbation.
      expected.gradient_into(w, grad_exp);
      traj.records.push_back({t, w, w, expected.value(w), norm(grad_exp), std::nullopt});
      break;
    }
    try {
      sgd_step_into(obj, w, cfg, rng, dist, s, scratch);
    } catch (const Divergence&) {
      traj.termination = Termination::diverged;
      traj.records.push_back(diverged_record(t, w, NAN));
      break;
    }
    if (should_record(t, cfg.record_stride)) {
      expected.gradient_into(w, grad_exp);
      traj.records.push_back({t, w, s.w_p, expected.value(w), norm(grad_exp),
                              grad_cosine(s.batch_grad, s.batch_grad_p, cfg.grad_eps)});
    }
    apply_update(w, s.batch_grad_p, cfg, state ? &*state : nullptr);
    if (diverged(w, cfg)) {
      traj.termination = Termination::diverged;
      traj.records.push_back(diverged_record(t + 1, w, all_finite(w) ? expected.value(w) : NAN));
      break;
    }
  }
  return traj;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  const std::size_t n = traj.records.empty() ? 0 : traj.records.front().w.size();
  for (std::size_t i = 1; i <= n; ++i) out += fmt::format(",w{}", i);
  for (std::size_t i = 1; i <= n; ++i) out += fmt::format(",wp{}", i);
  out += ",loss,grad_norm,grad_cosine\n";
  for (const StepRecord& r : traj.records) {
    out += fmt::format("{}", r.t);
    for (double v : r.w) out += fmt::format(",{:.17g}", v);
    for (double v : r.w_p) out += fmt::format(",{:.17g}", v);
    out += fmt::format(",{:.17g},{:.17g},", r.loss, r.grad_norm);
    out += r.grad_cosine ? fmt::format("{:.17g}", *r.grad_cosine) : std::string("nan");
    out += '\n';
  }
  return out;
}

}  // namespace saddle
