#include "saddle/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <json.hpp>
#include <numbers>
#include <random>
#include <stdexcept>

#include "saddle/diffusion.hpp"
#include "saddle/dynamics.hpp"
#include "saddle/objective.hpp"
#include "saddle/spectral.hpp"

namespace saddle {

namespace fs = std::filesystem;
using nlohmann::json;

Check make_check(std::string name, double value, std::string comparator, double threshold) {
  bool pass = false;
  if (comparator == "<") pass = value < threshold;
  else if (comparator == "<=") pass = value <= threshold;
  else if (comparator == ">") pass = value > threshold;
  else if (comparator == ">=") pass = value >= threshold;
  else throw std::invalid_argument(fmt::format("unknown comparator '{}'", comparator));
  return {std::move(name), value, threshold, std::move(comparator), pass};
}

namespace {

json config_object(const OptimConfig& cfg) {
  return json{{"method", to_string(cfg.method)},
              {"eta", cfg.eta},
              {"rho", cfg.rho},
              {"rho_mode", to_string(cfg.rho_mode)},
              {"momentum", cfg.momentum},
              {"gamma", cfg.gamma},
              {"tau", cfg.tau},
              {"batch_size", cfg.batch_size},
              {"full_batch", cfg.full_batch},
              {"max_steps", cfg.max_steps},
              {"seed", cfg.seed},
              {"grad_eps", cfg.grad_eps},
              {"grad_tol", cfg.grad_tol},
              {"divergence_norm", cfg.divergence_norm},
              {"record_stride", cfg.record_stride}};
}

}  // namespace

std::string optim_config_json(const OptimConfig& cfg) { return config_object(cfg).dump(); }

bool RunReport::all_pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check& RunReport::check(std::string_view name) const {
  for (const Check& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range(fmt::format("no check named '{}' in {}", name, scenario));
}

namespace {

class Params {
 public:
  Params(const ConfigMap& defaults, const ConfigMap& overrides) : values_(defaults) {
    for (const auto& [k, v] : overrides) {
      auto it = values_.find(k);
      if (it == values_.end()) throw std::invalid_argument(fmt::format("unknown parameter '{}'", k));
      it->second = v;
    }
  }

  const ConfigMap& resolved() const { return values_; }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::logic_error(fmt::format("parameter '{}' not declared", key));
    return it->second;
  }

  double num(const std::string& key) const { return parse_double(key, str(key)); }

  std::size_t count(const std::string& key) const {
    const double v = num(key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15)
      throw std::invalid_argument(fmt::format("parameter '{}' must be a nonnegative integer", key));
    return static_cast<std::size_t>(v);
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string& s = str(key);
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty() || s[0] == '-')
      throw std::invalid_argument(fmt::format("parameter '{}' must be an unsigned integer, got '{}'", key, s));
    return v;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::string_view s = str(key);
    while (!s.empty()) {
      const auto comma = s.find(',');
      out.push_back(parse_double(key, std::string(s.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      s.remove_prefix(comma + 1);
    }
    if (out.empty()) throw std::invalid_argument(fmt::format("parameter '{}' must be a nonempty list", key));
    return out;
  }

 private:
  static double parse_double(const std::string& key, const std::string& raw) {
    const auto b = raw.find_first_not_of(' ');
    const auto e = raw.find_last_not_of(' ');
    const std::string s = b == std::string::npos ? std::string() : raw.substr(b, e - b + 1);
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (s.empty() || pos != s.size() || !std::isfinite(v))
      throw std::invalid_argument(fmt::format("parameter '{}' must be a finite number, got '{}'", key, raw));
    return v;
  }

  ConfigMap values_;
};

struct Context {
  fs::path out_dir;
  std::map<std::string, std::string> file_hashes;
  std::vector<Check> checks;

  void emit(const std::string& name, const std::string& contents) {
    write_atomic(out_dir / name, contents);
    file_hashes[name] = hex64(fnv1a64(contents));
  }
  void check(std::string name, double value, std::string comparator, double threshold) {
    checks.push_back(make_check(std::move(name), value, std::move(comparator), threshold));
  }
};

std::string g(double v) { return fmt::format("{:g}", v); }

const Point kBealeMinimum{3.0, 0.5};
const Point kBealeSaddle{0.0, 1.0};

OptimConfig beale_config(const Params& p, Method method, double rho, std::size_t steps) {
  OptimConfig cfg;
  cfg.method = method;
  cfg.eta = p.num("eta");
  cfg.rho = rho;
  cfg.rho_mode = parse_rho_mode(p.str("rho_mode"));
  cfg.max_steps = steps;
  cfg.record_stride = p.count("record_stride");
  return cfg;
}

void run_fig1(const Params& p, Context& ctx) {
  const Beale beale;
  const Point start{p.num("start_x"), p.num("start_y")};

  const std::vector<Point> seeds = seed_grid(-4, 4, -4, 4, 17, 17);
  const CriticalPointSearch found = find_critical_points(beale, seeds);
  json points = json::array();
  double saddle_gap = INFINITY;
  for (const CriticalPoint& c : found.points) {
    json flags = json::object();
    for (double r : p.list("rhos"))
      if (auto v = c.spectral.attractor(r)) flags[g(r)] = v->attractor;
    points.push_back({{"location", c.location},
                      {"eigenvalues", c.spectral.eigenvalues},
                      {"index", c.spectral.index},
                      {"grad_norm", c.grad_norm_at_solution},
                      {"attractor", flags}});
    if (c.spectral.index == 1) saddle_gap = std::min(saddle_gap, distance(c.location, kBealeSaddle));
  }
  ctx.emit("critical_points.json", json{{"points", points}, {"failed_seeds", found.failed_seeds}}.dump(2) + "\n");
  ctx.check("saddle_found_at_0_1", saddle_gap, "<", 1e-6);

  json configs = json::object();
  const OptimConfig gd_cfg = beale_config(p, Method::gd, 0.0, p.count("gd_steps"));
  configs["gd"] = config_object(gd_cfg);
  const Trajectory gd = run_trajectory(beale, gd_cfg, start);
  ctx.emit("gd_trajectory.csv", trajectory_csv(gd));
  ctx.check("gd_distance_to_minimum", distance(gd.last().w, kBealeMinimum), "<", 1e-2);

  for (double rho : p.list("rhos")) {
    const OptimConfig cfg = beale_config(p, Method::sam, rho, p.count("sam_steps"));
    configs[fmt::format("sam_rho_{}", g(rho))] = config_object(cfg);
    const Trajectory sam = run_trajectory(beale, cfg, start);
    ctx.emit(fmt::format("sam_rho_{}.csv", g(rho)), trajectory_csv(sam));
    ctx.check(fmt::format("sam_rho_{}_distance_to_saddle", g(rho)), distance(sam.last().w, kBealeSaddle), "<", 0.1);
  }
  ctx.emit("configs.json", configs.dump(2) + "\n");
}

BasinClassifier beale_basins(const Objective& obj) {
  auto minima = std::make_shared<std::vector<KnownMinimum>>();
  minima->push_back(KnownMinimum::at_point("beale_global", kBealeMinimum));
  BasinOptions opts;
  opts.saddles = {kBealeSaddle};
  return [&obj, minima, opts](std::span<const double> w) { return classify_basin(obj, w, *minima, opts); };
}

void run_fig4(const Params& p, Context& ctx) {
  const Beale beale;
  const Point start{p.num("start_x"), p.num("start_y")};
  OptimConfig cfg;
  cfg.method = Method::sam;
  cfg.eta = p.num("eta");
  cfg.rho = p.num("rho");
  cfg.rho_mode = parse_rho_mode(p.str("rho_mode"));
  cfg.max_steps = p.count("max_steps");
  cfg.record_stride = 1;
  const Trajectory sam = run_trajectory(beale, cfg, start);

  std::string cos_csv = "t,grad_cosine,loss,saddle_distance\n";
  for (const StepRecord& r : sam.records)
    cos_csv += fmt::format("{},{},{:.17g},{:.17g}\n", r.t, r.grad_cosine ? fmt::format("{:.17g}", *r.grad_cosine) : "nan",
                           r.loss, distance(r.w, kBealeSaddle));
  ctx.emit("cosine.csv", cos_csv);

  const std::size_t tail = std::min(p.count("case_tail"), sam.records.size());
  Trajectory last = sam;
  last.records.assign(sam.records.end() - static_cast<std::ptrdiff_t>(tail), sam.records.end());
  CaseOptions copts;
  copts.window = p.count("window");
  copts.alternation_threshold = p.num("alternation_threshold");
  const std::vector<WindowCase> windows = classify_case(last, kBealeSaddle, cfg.rho, beale_basins(beale), copts);

  std::string case_csv = "first_t,last_t,label,crossing_fraction,return_fraction,cosine_alternation,mean_saddle_distance\n";
  std::size_t classified = 0, oscillating = 0;
  for (const WindowCase& w : windows) {
    case_csv += fmt::format("{},{},{},{:.6g},{:.6g},{:.6g},{:.6g}\n", w.first_t, w.last_t, to_string(w.label),
                            w.evidence.crossing_fraction, w.evidence.return_fraction, w.evidence.cosine_alternation,
                            w.evidence.mean_saddle_distance);
    if (w.label == CaseKind::unclassified) continue;
    ++classified;
    if (w.label == CaseKind::case_iii_ii) ++oscillating;
  }
  ctx.emit("case_windows.csv", case_csv);

  ctx.check("sam_distance_to_saddle", distance(sam.last().w, kBealeSaddle), "<", 0.1);
  ctx.check("case_iii_ii_fraction", classified ? static_cast<double>(oscillating) / classified : 0.0, ">", 0.5);
  ctx.check("cosine_alternation_final", cosine_alternation_rate(sam, p.count("cosine_tail")), ">",
            p.num("alternation_threshold"));
}

void run_fig5(const Params& p, Context& ctx) {
  const QuadraticSaddle quad;
  const Point origin{0.0, 0.0};
  const double rho = p.num("rho");
  const auto verdict = spectral_report(quad.hessian(origin)).attractor(rho);
  ctx.check("attractor_condition_holds", verdict && verdict->attractor ? 1.0 : 0.0, ">=", 1.0);

  FlowOptions fo;
  fo.h = p.num("h");
  fo.record_stride = p.count("flow_stride");
  OptimConfig cfg;
  cfg.eta = p.num("eta");
  cfg.max_steps = p.count("max_steps");
  cfg.record_stride = p.count("record_stride");
  json configs = json::object();

  // The configured start and its mirror across the stable axis.
  for (const double sign : {1.0, -1.0}) {
    const Point start{p.num("start_x"), sign * p.num("start_y")};
    const std::string tag = sign > 0 ? "" : "_mirror";
    const FlowPath gd_flow = integrate_flow(quad, start, {FlowKind::gd, 0.0}, p.num("t_end"), fo);
    const FlowPath sam_flow = integrate_flow(quad, start, {FlowKind::sam, rho}, p.num("t_end"), fo);
    ctx.emit("gd_flow" + tag + ".csv", flow_csv(gd_flow));
    ctx.emit("sam_flow" + tag + ".csv", flow_csv(sam_flow));
    ctx.check("sam_flow_distance_to_saddle" + tag, distance(sam_flow.end(), origin), "<", 1e-3);
    ctx.check("gd_flow_final_abs_y" + tag, std::abs(gd_flow.end()[1]), ">", 1.0);

    cfg.method = Method::sam;
    cfg.rho = rho;
    const Trajectory sam = run_trajectory(quad, cfg, start);
    configs["sam" + tag] = config_object(cfg);
    cfg.method = Method::gd;
    cfg.rho = 0.0;
    const Trajectory gd = run_trajectory(quad, cfg, start);
    configs["gd" + tag] = config_object(cfg);
    ctx.emit("sam_discrete" + tag + ".csv", trajectory_csv(sam));
    ctx.emit("gd_discrete" + tag + ".csv", trajectory_csv(gd));

    double gd_max_y = 0.0;
    for (const StepRecord& r : gd.records)
      if (std::isfinite(r.w[1])) gd_max_y = std::max(gd_max_y, std::abs(r.w[1]));
    ctx.check("sam_discrete_distance_to_saddle" + tag, distance(sam.last().w, origin), "<", 1e-3);
    ctx.check("sam_discrete_steps" + tag, static_cast<double>(sam.last().t), "<=", 1e5);
    ctx.check("gd_discrete_max_abs_y" + tag, gd_max_y, ">", 1.0);
  }
  ctx.emit("configs.json", configs.dump(2) + "\n");
}

void run_fig6(const Params& p, Context& ctx) {
  const Beale beale;
  GridSpec grid;
  grid.x_min = p.num("x_min");
  grid.x_max = p.num("x_max");
  grid.y_min = p.num("y_min");
  grid.y_max = p.num("y_max");
  grid.nx = p.count("nx");
  grid.ny = p.count("ny");
  const std::vector<FieldCell> cells = eigen_condition_field(beale, grid, p.num("rho"));
  ctx.emit("field.csv", field_csv(cells));

  const double radius = p.num("radius");
  double worst = INFINITY;
  std::size_t inside = 0, nonfinite = 0;
  for (const FieldCell& c : cells) {
    if (!c.finite) ++nonfinite;
    if (std::hypot(c.x - kBealeSaddle[0], c.y - kBealeSaddle[1]) > radius) continue;
    ++inside;
    worst = std::min({worst, c.finite ? c.cond1 : -INFINITY, c.finite ? c.cond2 : -INFINITY});
  }
  ctx.check("cells_near_saddle", static_cast<double>(inside), ">", 0.0);
  ctx.check("min_condition_near_saddle", inside ? worst : -INFINITY, ">", 0.0);
  ctx.check("nonfinite_cells", static_cast<double>(nonfinite), "<=", 0.0);
}

void run_fig7(const Params& p, Context& ctx) {
  ToyNnOptions o;
  o.eta = p.num("eta");
  o.steps = p.count("steps");
  o.batch = p.count("batch");
  o.rho_mode = parse_rho_mode(p.str("rho_mode"));
  o.seeds = p.count("seeds");
  o.seed = p.u64("seed");
  o.saturation_w1 = p.num("saturation_w1");
  o.saturation_loss = p.num("saturation_loss");

  const double rho = p.num("rho");
  const std::vector<double> sweep_rhos = p.list("sweep");
  std::vector<double> rhos{0.0, rho};
  for (double r : sweep_rhos)
    if (std::find(rhos.begin(), rhos.end(), r) == rhos.end()) rhos.push_back(r);
  const std::vector<ToyNnSummary> all = toy_nn_sweep(rhos, o);
  auto summary_for = [&](double r) -> const ToyNnSummary& {
    return all[static_cast<std::size_t>(std::find(rhos.begin(), rhos.end(), r) - rhos.begin())];
  };

  std::string pts = "method,rho,index,w1_init,w2_init,w1,w2,loss,saturated,diverged\n";
  for (const ToyNnSummary* s : {&all[0], &all[1]})
    for (const ToyNnRun& r : s->runs)
      pts += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", s->rho == 0.0 ? "sgd" : "sam",
                         g(s->rho), r.index, r.w0[0], r.w0[1], r.w_final[0], r.w_final[1], r.loss, int(r.saturated),
                         int(r.diverged));
  ctx.emit("converged_points.csv", pts);

  std::vector<ToyNnSummary> sweep;
  for (double r : sweep_rhos) sweep.push_back(summary_for(r));
  std::vector<ToyNnSummary> with_sgd{all[0]};
  with_sgd.insert(with_sgd.end(), sweep.begin(), sweep.end());
  ctx.emit("sweep.csv", toy_nn_sweep_csv(with_sgd));

  const ToyNnSummary& sgd = all[0];
  const ToyNnSummary& sam = all[1];
  ctx.check("sgd_mean_loss", sgd.mean_loss, "<", 2.30);
  ctx.check("saturation_excess", sam.saturated_fraction - 3.0 * sgd.saturated_fraction, ">", 0.0);
  double worst = -INFINITY;
  for (std::size_t k = 0; k + 1 < sweep.size(); ++k) {
    const double se = std::hypot(sweep[k].std_error, sweep[k + 1].std_error);
    const double drop = sweep[k].mean_loss - sweep[k + 1].mean_loss;
    worst = std::max(worst, se > 0.0 ? drop / se : (drop > 0.0 ? INFINITY : 0.0));
  }
  ctx.check("sweep_max_drop_in_se", sweep.size() > 1 ? worst : 0.0, "<=", 1.0);
  ctx.check("largest_rho_mean_loss", sweep.back().mean_loss, ">", 2.45);
}

void run_thm1(const Params& p, Context& ctx) {
  std::mt19937_64 rng(p.u64("seed"));
  std::uniform_real_distribution<double> lam_neg(p.num("lam_min"), p.num("lam_max"));
  std::uniform_real_distribution<double> rho_dist(0.0, p.num("rho_max"));
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  const std::size_t trials = p.count("trials");
  const double t_end = p.num("t_end"), offset = p.num("offset"), radius = p.num("radius");
  const double boundary = p.num("boundary");
  FlowOptions fo;
  fo.h = p.num("h");
  fo.record_stride = 0;

  std::string csv = "lam1,lam2,theta,rho,condition,predicted,converged,final_distance,excluded\n";
  std::size_t evaluated = 0, agree = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double l1 = -lam_neg(rng), l2 = lam_neg(rng), rho = rho_dist(rng), th = angle(rng);
    const double c = std::cos(th), s = std::sin(th);
    Matrix q(2, 2);
    q(0, 0) = c;
    q(1, 0) = s;
    q(0, 1) = -s;
    q(1, 1) = c;
    const Matrix h = q * Matrix::diagonal(Vector{l1, l2}) * q.transpose();
    const Quadratic quad(h, {0.0, 0.0});
    const SpectralReport rep = spectral_report(quad.hessian(Point{0.0, 0.0}));
    const bool predicted = attractor_condition(rep.eigenvalues, rho).attractor;
    const Vector dir = rep.eigenvectors.column(0);
    const FlowPath path = integrate_flow(quad, scaled(dir, offset), {FlowKind::sam, rho}, t_end, fo);
    const double dist = path.diverged ? INFINITY : norm(path.end());
    const bool converged = dist < radius;
    const double cond = l1 + rho * l1 * l1;
    const bool excluded = std::abs(cond) < boundary;
    if (!excluded) {
      ++evaluated;
      if (predicted == converged) ++agree;
    }
    csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{:.17g},{}\n", l1, l2, th, rho, cond,
                       int(predicted), int(converged), dist, int(excluded));
  }
  ctx.emit("attractor_trials.csv", csv);
  ctx.check("agreement_rate", evaluated ? static_cast<double>(agree) / evaluated : 0.0, ">=", 0.99);
}

void run_thm2(const Params& p, Context& ctx) {
  const double eta = p.num("eta"), batch = p.num("batch"), t_end = p.num("t_end");
  SdeOptions so;
  so.t_end = t_end;
  so.dt = p.num("dt");
  so.n_paths = p.count("paths");
  const std::size_t nc = p.count("checkpoints");
  for (std::size_t k = 1; k < nc; ++k) so.checkpoints.push_back(t_end * static_cast<double>(k) / nc);

  const std::uint64_t base_seed = p.u64("seed");
  std::uint64_t config = 0;
  for (double lam : p.list("lambdas"))
    for (double rho : p.list("rhos")) {
      const SaddleModel model = SaddleModel::diagonal({lam}, eta, batch, rho);
      so.seed = path_seed(base_seed, config++);
      const SdeResult mc = simulate_sde(model, so);
      ctx.emit(fmt::format("msd_lam_{}_rho_{}.csv", g(lam), g(rho)), forecast_csv(model, mc));
      const MsdEstimate& e = mc.final()[0];
      const double closed = sigma_sq(t_end, lam, eta, batch, rho);
      ctx.check(fmt::format("mc_error_in_se_lam_{}_rho_{}", g(lam), g(rho)), std::abs(e.mean - closed) / e.std_error,
                "<", 3.0);
    }
}

void run_cor1(const Params& p, Context& ctx) {
  const double lam = p.num("lambda"), rho = p.num("rho"), eta = p.num("eta"), batch = p.num("batch");
  const double t = p.num("t_end");
  SdeOptions so;
  so.t_end = t;
  so.dt = p.num("dt");
  so.n_paths = p.count("paths");
  so.seed = p.u64("seed");
  const SaddleModel sgd = SaddleModel::diagonal({lam}, eta, batch, 0.0);
  const MsdEstimate gap = simulate_msd_difference(sgd, rho, so)[0];
  const double first_order = msd_gap(t, lam, eta, batch, rho);
  const double exact = sigma_sq(t, lam, eta, batch, 0.0) - sigma_sq(t, lam, eta, batch, rho);
  ctx.emit("gap.csv", fmt::format("lambda,rho,eta,batch,t,gap_mc,gap_se,gap_closed_exact,gap_first_order\n"
                                  "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                                  lam, rho, eta, batch, t, gap.mean, gap.std_error, exact, first_order));
  ctx.check("gap_mc", gap.mean, ">", 0.0);
  ctx.check("gap_mc_relative_error", std::abs(gap.mean - first_order) / first_order, "<", 0.25);
  ctx.check("closed_form_relative_error", std::abs(exact - first_order) / first_order, "<", 0.2);
}

void run_thm3(const Params& p, Context& ctx) {
  std::mt19937_64 rng(p.u64("seed"));
  std::uniform_real_distribution<double> lam_d(p.num("lam_min"), p.num("lam_max"));
  std::uniform_real_distribution<double> eta_d(0.01, 0.5), rho_d(0.0, 1.0), t_d(0.5, 5.0);
  const std::vector<double> gammas = p.list("gammas"), batches = p.list("batches");
  const double eps = p.num("asymptote_eps");
  const std::size_t draws = p.count("draws");

  std::string csv = "draw,lambda,eta,rho,t,gamma,batch,msd\n";
  std::size_t gamma_ok = 0, batch_ok = 0;
  double worst_asym = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    const double lam = lam_d(rng), eta = eta_d(rng), rho = rho_d(rng), t = t_d(rng);
    for (double gm : gammas)
      for (double b : batches)
        csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:g},{:g},{:.17g}\n", d, lam, eta, rho, t, gm, b,
                           msd_momentum(t, lam, eta, b, rho, gm));
    bool up = true;
    for (std::size_t k = 0; k + 1 < gammas.size(); ++k)
      up = up && msd_momentum(t, lam, eta, 1.0, rho, gammas[k + 1]) > msd_momentum(t, lam, eta, 1.0, rho, gammas[k]);
    bool down = true;
    for (std::size_t k = 0; k + 1 < batches.size(); ++k)
      down = down && msd_momentum(t, lam, eta, batches[k + 1], rho, 0.5) < msd_momentum(t, lam, eta, batches[k], rho, 0.5);
    gamma_ok += up;
    batch_ok += down;
    const double gamma = 1.0 - eps;
    const double v = msd_momentum(t, lam, eta, 1.0, rho, gamma);
    const double a = msd_momentum_asymptote(t, lam, eta, 1.0, rho, gamma);
    worst_asym = std::max(worst_asym, std::abs(v - a) / a);
  }
  ctx.emit("momentum_sweep.csv", csv);
  ctx.check("gamma_monotone_fraction", draws ? static_cast<double>(gamma_ok) / draws : 0.0, ">=", 1.0);
  ctx.check("batch_monotone_fraction", draws ? static_cast<double>(batch_ok) / draws : 0.0, ">=", 1.0);
  ctx.check("asymptote_max_relative_error", worst_asym, "<", 0.01);
}

using Runner = std::function<void(const Params&, Context&)>;

struct Entry {
  ScenarioInfo info;
  Runner run;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    const ConfigMap beale_start{{"start_x", "-0.5"}, {"start_y", "0.5"}, {"eta", "1e-4"}, {"rho_mode", "constant"}};
    auto with = [](ConfigMap base, ConfigMap extra) {
      base.insert(extra.begin(), extra.end());
      return base;
    };
    std::vector<Entry> e{
        {{"fig1_beale", "Beale: GD reaches the global minimum, constant-rho SAM stalls at the (0,1) saddle",
          with(beale_start, {{"gd_steps", "300000"}, {"sam_steps", "100000"}, {"rhos", "0.05,0.1,0.2"},
                             {"record_stride", "100"}, {"seed", "0"}})},
         run_fig1},
        {{"fig4_cosine", "Beale SAM near the saddle: gradient cosine trace and Case windows",
          with(beale_start, {{"rho", "0.1"}, {"max_steps", "100000"}, {"case_tail", "1000"}, {"cosine_tail", "1000"},
                             {"window", "100"}, {"alternation_threshold", "0.4"}, {"seed", "0"}})},
         run_fig4},
        {{"fig5_flows", "Quadratic saddle: GD and SAM flows plus discrete runs from near the stable manifold",
          {{"start_x", "-3"}, {"start_y", "-0.01"}, {"rho", "1.0"}, {"eta", "0.01"}, {"t_end", "10"}, {"h", "1e-3"},
           {"flow_stride", "10"}, {"max_steps", "100000"}, {"record_stride", "10"}, {"seed", "0"}}},
         run_fig5},
        {{"fig6_heatmap", "Beale: lambda + rho lambda^2 for both Hessian eigenvalues on a grid",
          {{"x_min", "-1"}, {"x_max", "1"}, {"y_min", "0"}, {"y_max", "2"}, {"nx", "200"}, {"ny", "200"},
           {"rho", "0.1"}, {"radius", "0.05"}, {"seed", "0"}}},
         run_fig6},
        {{"fig7_toynn", "Toy network: SGD vs normalized SAM converged points and the rho sweep",
          {{"seeds", "1000"}, {"eta", "0.01"}, {"steps", "10000"}, {"batch", "1"}, {"rho", "0.1"},
           {"rho_mode", "normalized"}, {"sweep", "0.01,0.05,0.1,0.2,0.5"}, {"saturation_w1", "0.05"},
           {"saturation_loss", "2.45"}, {"seed", "0"}}},
         run_fig7},
        {{"thm1_attractor", "Random index-one quadratics: attractor condition vs SAM flow convergence",
          {{"trials", "1000"}, {"lam_min", "1"}, {"lam_max", "10"}, {"rho_max", "2"}, {"t_end", "20"},
           {"offset", "1e-2"}, {"radius", "1e-3"}, {"boundary", "1e-3"}, {"h", "1e-3"}, {"seed", "0"}}},
         run_thm1},
        {{"thm2_mc", "Euler-Maruyama MSD near a saddle vs the closed-form variance",
          {{"lambdas", "-2,-0.5"}, {"rhos", "0,0.1,0.5"}, {"eta", "0.1"}, {"batch", "1"}, {"t_end", "0.25"},
           {"dt", "1e-4"}, {"paths", "100000"}, {"checkpoints", "5"}, {"seed", "0"}}},
         run_thm2},
        {{"cor1_gap", "Paired-noise MSD reduction from the perturbation vs its first-order formula",
          {{"lambda", "-2"}, {"rho", "0.1"}, {"eta", "0.1"}, {"batch", "1"}, {"t_end", "0.005"}, {"dt", "1e-5"},
           {"paths", "100000"}, {"seed", "0"}}},
         run_cor1},
        {{"thm3_sweep", "Momentum MSD: monotonicity in gamma and B, and the 1/((1-gamma)B) asymptote",
          {{"draws", "100"}, {"lam_min", "0.1"}, {"lam_max", "10"}, {"gammas", "0,0.5,0.9,0.99"},
           {"batches", "1,8,64,512"}, {"asymptote_eps", "1e-4"}, {"seed", "0"}}},
         run_thm3},
    };
    std::sort(e.begin(), e.end(), [](const Entry& a, const Entry& b) { return a.info.id < b.info.id; });
    return e;
  }();
  return entries;
}

const Entry& find_entry(std::string_view id) {
  for (const Entry& e : registry())
    if (e.info.id == id) return e;
  throw std::invalid_argument(fmt::format("unknown scenario '{}'", id));
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> infos = [] {
    std::vector<ScenarioInfo> v;
    for (const Entry& e : registry()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

const ScenarioInfo& find_scenario(std::string_view id) { return find_entry(id).info; }

std::string list_scenarios() {
  std::string out;
  for (const ScenarioInfo& s : scenario_catalog()) out += fmt::format("{:<16} {}\n", s.id, s.description);
  return out;
}

std::string report_json(const RunReport& report) {
  json checks = json::array();
  for (const Check& c : report.checks)
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"comparator", c.comparator},
                      {"pass", c.pass}});
  return json{{"scenario", report.scenario},
              {"checks", checks},
              {"pass", report.all_pass()},
              {"wall_clock_seconds", report.wall_seconds},
              {"manifest_hash", report.manifest_hash},
              {"files", report.files}}
             .dump(2) +
         "\n";
}

RunReport run_scenario(std::string_view id, const ConfigMap& overrides, const fs::path& out_dir) {
  const Entry& entry = find_entry(id);
  const Params params(entry.info.defaults, overrides);
  params.u64("seed");  // every scenario declares one; reject bad values even where unused
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw std::runtime_error(fmt::format("cannot create output directory {}", out_dir.string()));

  Context ctx;
  ctx.out_dir = out_dir;
  const auto start = std::chrono::steady_clock::now();
  entry.run(params, ctx);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string manifest =
      json{{"scenario", entry.info.id}, {"params", params.resolved()}, {"files", ctx.file_hashes}}.dump(2) + "\n";
  ctx.emit("manifest.json", manifest);

  RunReport report;
  report.scenario = entry.info.id;
  report.checks = std::move(ctx.checks);
  report.wall_seconds = wall;
  report.manifest_hash = hex64(fnv1a64(manifest));
  for (const auto& [name, hash] : ctx.file_hashes) report.files.push_back(name);
  write_atomic(out_dir / "report.json", report_json(report));
  report.files.push_back("report.json");
  return report;
}

std::vector<ToyNnSummary> toy_nn_sweep(std::span<const double> rhos, const ToyNnOptions& opts) {
  if (opts.seeds < 100) throw std::invalid_argument("toy_nn_sweep: need at least 100 seeds");
  const ToyNn toy;
  std::vector<Point> starts;
  std::uniform_real_distribution<double> w1(-0.1, 0.1), w2(0.0, 1.0);
  for (std::size_t s = 0; s < opts.seeds; ++s) {
    std::mt19937_64 rng(path_seed(opts.seed, s));
    const double a = w1(rng);
    starts.push_back({a, w2(rng)});
  }

  std::vector<ToyNnSummary> out;
  for (double rho : rhos) {
    if (!(rho >= 0.0)) throw std::invalid_argument("toy_nn_sweep: rho must be >= 0");
    ToyNnSummary sum;
    sum.rho = rho;
    OptimConfig cfg;
    cfg.method = rho > 0.0 ? Method::sam : Method::gd;
    cfg.eta = opts.eta;
    cfg.rho = rho;
    cfg.rho_mode = opts.rho_mode;
    cfg.batch_size = opts.batch;
    cfg.max_steps = opts.steps;
    cfg.record_stride = 0;
    double total = 0.0;
    std::size_t saturated = 0;
    for (std::size_t s = 0; s < opts.seeds; ++s) {
      cfg.seed = path_seed(opts.seed ^ 0xa5a5a5a5a5a5a5a5ULL, s);
      const Trajectory tr = run_stochastic_trajectory(toy, cfg, starts[s]);
      ToyNnRun run;
      run.index = s;
      run.w0 = starts[s];
      run.w_final = tr.last().w;
      run.loss = tr.last().loss;
      run.diverged = tr.termination == Termination::diverged;
      run.saturated = !run.diverged && std::abs(run.w_final[0]) < opts.saturation_w1 && run.loss > opts.saturation_loss;
      if (run.diverged) {
        ++sum.diverged;
      } else {
        ++sum.count;
        total += run.loss;
        saturated += run.saturated;
      }
      sum.runs.push_back(std::move(run));
    }
    if (sum.count > 0) {
      const double n = static_cast<double>(sum.count);
      sum.mean_loss = total / n;
      double ss = 0.0;
      for (const ToyNnRun& r : sum.runs)
        if (!r.diverged) ss += (r.loss - sum.mean_loss) * (r.loss - sum.mean_loss);
      const double var = sum.count > 1 ? ss / (n - 1.0) : 0.0;
      sum.std_error = std::sqrt(var / n);
      sum.saturated_fraction = static_cast<double>(saturated) / n;
    } else {
      sum.mean_loss = NAN;
    }
    out.push_back(std::move(sum));
  }
  return out;
}

std::string toy_nn_sweep_csv(std::span<const ToyNnSummary> sweep) {
  std::string out = "rho,mean_loss,std_error,saturated_fraction,converged,diverged\n";
  for (const ToyNnSummary& s : sweep)
    out += fmt::format("{:g},{:.17g},{:.17g},{:.17g},{},{}\n", s.rho, s.mean_loss, s.std_error, s.saturated_fraction,
                       s.count, s.diverged);
  return out;
}

}  // namespace saddle
