#include "saddle/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

#include "saddle/errors.hpp"

namespace saddle {

namespace {

void field_into(const Objective& obj, const FlowSpec& spec, std::span<const double> w, std::span<double> out,
                std::span<double> scratch) {
  obj.gradient_into(w, out);
  if (spec.kind == FlowKind::sam && spec.rho != 0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) scratch[i] = w[i] + spec.rho * out[i];
    obj.gradient_into(scratch, out);
  }
  for (double& v : out) v = -v;
}

bool outside(std::span<const double> w, double limit) { return !all_finite(w) || norm(w) > limit; }

}  // namespace

Vector flow_field(const Objective& obj, std::span<const double> w, const FlowSpec& spec) {
  Vector out(w.size()), scratch(w.size());
  field_into(obj, spec, w, out, scratch);
  return out;
}

void rk4_step(const Objective& obj, const FlowSpec& spec, std::span<double> w, double h) {
  const std::size_t n = w.size();
  Vector k1(n), k2(n), k3(n), k4(n), tmp(n), scratch(n);
  field_into(obj, spec, w, k1, scratch);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * h * k1[i];
  field_into(obj, spec, tmp, k2, scratch);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * h * k2[i];
  field_into(obj, spec, tmp, k3, scratch);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + h * k3[i];
  field_into(obj, spec, tmp, k4, scratch);
  for (std::size_t i = 0; i < n; ++i) w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

FlowPath integrate_flow(const Objective& obj, std::span<const double> w0, const FlowSpec& spec,
                        double t_end, const FlowOptions& opts) {
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate_flow: t_end must be positive");
  if (!(opts.h > 0.0)) throw std::invalid_argument("integrate_flow: h must be positive");
  obj.check_point(w0);

  FlowPath path;
  path.spec = spec;
  Point w(w0.begin(), w0.end());
  path.times.push_back(0.0);
  path.points.push_back(w);

  const auto steps = static_cast<std::size_t>(std::ceil(t_end / opts.h - 1e-9));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * opts.h;
    const double h = k == steps ? t_end - t_prev : opts.h;
    Point next = w;
    rk4_step(obj, spec, next, h);
    if (outside(next, opts.divergence_norm)) {
      path.diverged = true;
      if (path.times.back() != t_prev) {
        path.times.push_back(t_prev);
        path.points.push_back(w);
      }
      return path;
    }
    w = std::move(next);
    const double t = k == steps ? t_end : static_cast<double>(k) * opts.h;
    if (k == steps || (opts.record_stride != 0 && k % opts.record_stride == 0)) {
      path.times.push_back(t);
      path.points.push_back(w);
    }
  }
  return path;
}

std::string flow_csv(const FlowPath& path) {
  std::string out = "t";
  const std::size_t n = path.points.empty() ? 0 : path.points.front().size();
  for (std::size_t i = 1; i <= n; ++i) out += fmt::format(",w{}", i);
  out += '\n';
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    out += fmt::format("{:.17g}", path.times[k]);
    for (double v : path.points[k]) out += fmt::format(",{:.17g}", v);
    out += '\n';
  }
  return out;
}

KnownMinimum KnownMinimum::at_point(std::string name, Point p) {
  return {std::move(name), [p = std::move(p)](std::span<const double> w) { return saddle::distance(w, p); }};
}

std::string to_string(const BasinLabel& label) {
  switch (label.kind) {
    case BasinLabel::Kind::minimum: return fmt::format("min:{}", label.id);
    case BasinLabel::Kind::diverged: return "diverged";
    case BasinLabel::Kind::saddle_trapped: return fmt::format("saddle:{}", label.id);
    case BasinLabel::Kind::unclassified: return "unclassified";
  }
  return "unclassified";
}

BasinLabel classify_basin(const Objective& obj, std::span<const double> w0,
                          std::span<const KnownMinimum> minima, const BasinOptions& opts) {
  if (!(opts.h > 0.0) || !(opts.t_max > 0.0))
    throw std::invalid_argument("classify_basin: h and t_max must be positive");
  obj.check_point(w0);
  const FlowSpec gd{FlowKind::gd, 0.0};
  Point w(w0.begin(), w0.end());
  BasinLabel label;

  auto captured = [&](double t) {
    for (std::size_t m = 0; m < minima.size(); ++m)
      if (minima[m].distance(w) < opts.capture_radius) {
        label = {BasinLabel::Kind::minimum, static_cast<int>(m), w, t};
        return true;
      }
    return false;
  };

  const auto steps = static_cast<std::size_t>(std::ceil(opts.t_max / opts.h - 1e-9));
  if (captured(0.0)) return label;
  for (std::size_t k = 1; k <= steps; ++k) {
    rk4_step(obj, gd, w, opts.h);
    const double t = static_cast<double>(k) * opts.h;
    if (outside(w, opts.divergence_norm)) return {BasinLabel::Kind::diverged, -1, w, t};
    if (captured(t)) return label;
  }
  for (std::size_t s = 0; s < opts.saddles.size(); ++s)
    if (distance(w, opts.saddles[s]) < opts.capture_radius)
      return {BasinLabel::Kind::saddle_trapped, static_cast<int>(s), w, opts.t_max};
  return {BasinLabel::Kind::unclassified, -1, w, opts.t_max};
}

std::pair<FlowPath, FlowPath> unstable_manifold_probe(const Objective& obj, const CriticalPoint& saddle,
                                                      double eps, double t_end, const FlowOptions& opts) {
  if (saddle.spectral.index < 1)
    throw ContractViolation("unstable_manifold_probe: critical point has no unstable direction");
  const Vector dir = saddle.spectral.eigenvectors.column(0);
  Point plus = saddle.location, minus = saddle.location;
  axpy(eps, dir, plus);
  axpy(-eps, dir, minus);
  const FlowSpec gd{FlowKind::gd, 0.0};
  return {integrate_flow(obj, plus, gd, t_end, opts), integrate_flow(obj, minus, gd, t_end, opts)};
}

std::string to_string(CaseKind k) {
  switch (k) {
    case CaseKind::case_i: return "Case-I";
    case CaseKind::case_ii: return "Case-II";
    case CaseKind::case_iii_i: return "Case-III-i";
    case CaseKind::case_iii_ii: return "Case-III-ii";
    case CaseKind::unclassified: return "unclassified";
  }
  return "unclassified";
}

namespace {

double alternation_over(std::span<const StepRecord> records) {
  std::size_t pairs = 0, flips = 0;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const auto& a = records[k - 1].grad_cosine;
    const auto& b = records[k].grad_cosine;
    if (!a || !b) continue;
    ++pairs;
    if ((*a < 0.0) != (*b < 0.0)) ++flips;
  }
  return pairs == 0 ? 0.0 : static_cast<double>(flips) / static_cast<double>(pairs);
}

}  // namespace

double cosine_alternation_rate(const Trajectory& traj, std::size_t tail) {
  const std::span<const StepRecord> all(traj.records);
  const std::size_t take = std::min(tail, all.size());
  return alternation_over(all.subspan(all.size() - take));
}

std::vector<WindowCase> classify_case(const Trajectory& traj, std::span<const double> saddle, double rho,
                                      const BasinClassifier& basin, const CaseOptions& opts) {
  if (opts.window == 0) throw std::invalid_argument("classify_case: window must be positive");
  const std::span<const StepRecord> recs(traj.records);
  const std::size_t n = recs.size();

  std::vector<BasinLabel> basin_w(n), basin_wp(n);
  for (std::size_t k = 0; k < n; ++k) {
    basin_w[k] = basin(recs[k].w);
    basin_wp[k] = recs[k].w_p == recs[k].w ? basin_w[k] : basin(recs[k].w_p);
  }

  std::vector<WindowCase> out;
  for (std::size_t start = 0; start < n; start += opts.window) {
    const std::size_t len = std::min(opts.window, n - start);
    WindowCase wc;
    wc.first_t = recs[start].t;
    wc.last_t = recs[start + len - 1].t;
    if (len < opts.window) {
      out.push_back(wc);
      continue;
    }
    std::size_t crossings = 0, returns = 0;
    double dist_sum = 0.0;
    for (std::size_t k = start; k < start + len; ++k) {
      dist_sum += distance(recs[k].w, saddle);
      if (basin_wp[k].same_basin(basin_w[k])) continue;
      ++crossings;
      const BasinLabel& next = k + 1 < n ? basin_w[k + 1] : basin_w[k];
      if (next.same_basin(basin_w[k])) ++returns;
    }
    CaseEvidence& ev = wc.evidence;
    ev.crossing_fraction = static_cast<double>(crossings) / static_cast<double>(len);
    ev.return_fraction = crossings == 0 ? 0.0 : static_cast<double>(returns) / static_cast<double>(crossings);
    ev.cosine_alternation = alternation_over(recs.subspan(start, len));
    ev.mean_saddle_distance = dist_sum / static_cast<double>(len);
    ev.approaching = distance(recs[start + len - 1].w, saddle) < distance(recs[start].w, saddle);

    if (ev.crossing_fraction > opts.crossing_majority)
      wc.label = ev.cosine_alternation >= opts.alternation_threshold ? CaseKind::case_iii_ii : CaseKind::case_iii_i;
    else if (ev.mean_saddle_distance < opts.reach_factor * rho && ev.approaching)
      wc.label = CaseKind::case_ii;
    else
      wc.label = CaseKind::case_i;
    out.push_back(wc);
  }
  return out;
}

}  // namespace saddle
