// End-to-end acceptance run. One PASS/FAIL line per criterion; exit status is
// the number of failures. Thresholds live here, independent of the scenario
// code, and every check value is re-judged against them.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "saddle/diffusion.hpp"
#include "saddle/objective.hpp"
#include "saddle/optimizers.hpp"
#include "saddle/scenarios.hpp"
#include "saddle/spectral.hpp"

using namespace saddle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

fs::path out_root() {
  static const fs::path p = fs::temp_directory_path() / fmt::format("saddle_scope_acceptance_{}", ::getpid());
  return p;
}

RunReport run(const std::string& id, const ConfigMap& overrides = {}) {
  return run_scenario(id, overrides, out_root() / id);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void budget(Outcome& o, double seconds, double limit) {
  o.require(seconds < limit, fmt::format("runtime {:.2f}s < {}s", seconds, limit));
}

Outcome quadratic_trap() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const QuadraticSaddle q;
  const Point start{-3.0, -0.01};
  OptimConfig sam;
  sam.method = Method::sam;
  sam.rho = 1.0;
  sam.eta = 0.01;
  sam.max_steps = 100000;
  sam.record_stride = 0;
  sam.grad_tol = 0.0;
  const Trajectory s = run_trajectory(q, sam, start);
  // First step at which the iterate is inside the 1e-3 ball.
  std::size_t reached = 0;
  {
    Point w = start;
    for (std::size_t k = 1; k <= sam.max_steps; ++k) {
      w = sam_step(q, w, sam).w_next;
      if (norm(w) < 1e-3) {
        reached = k;
        break;
      }
    }
  }
  OptimConfig gd = sam;
  gd.method = Method::gd;
  gd.rho = 0.0;
  gd.record_stride = 1;
  gd.max_steps = 100000;
  const Trajectory g = run_trajectory(q, gd, start);
  double max_y = 0.0;
  for (const StepRecord& r : g.records) max_y = std::max(max_y, std::abs(r.w[1]));
  o.require(norm(s.last().w) < 1e-3, fmt::format("sam final distance {:.3g} < 1e-3", norm(s.last().w)));
  o.require(reached > 0, fmt::format("sam inside 1e-3 after {} steps (<= 1e5)", reached));
  o.require(max_y > 1.0, fmt::format("gd max |y| {:.3g} > 1", max_y));
  budget(o, seconds_since(t0), 5.0);
  return o;
}

Outcome attractor_oracle() {
  Outcome o;
  const RunReport r = run("thm1_attractor");
  const double rate = r.check("agreement_rate").value;
  o.require(rate >= 0.99, fmt::format("agreement {:.4f} >= 0.99", rate));
  budget(o, r.wall_seconds, 60.0);
  return o;
}

Outcome beale_trapping() {
  Outcome o;
  const RunReport f1 = run("fig1_beale", {{"rhos", "0.1"}});
  const RunReport f4 = run("fig4_cosine", {{"rho", "0.1"}});
  const double gd = f1.check("gd_distance_to_minimum").value;
  const double sam = f4.check("sam_distance_to_saddle").value;
  const double cases = f4.check("case_iii_ii_fraction").value;
  const double alt = f4.check("cosine_alternation_final").value;
  o.require(gd < 1e-2, fmt::format("gd distance to (3,0.5) {:.3g} < 1e-2", gd));
  o.require(sam < 1e-1, fmt::format("sam distance to (0,1) {:.3g} < 1e-1", sam));
  o.require(cases > 0.5, fmt::format("oscillating-crossing window fraction {:.3g} > 0.5", cases));
  o.require(alt > 0.4, fmt::format("final cosine alternation {:.3g} > 0.4", alt));
  budget(o, f1.wall_seconds + f4.wall_seconds, 30.0);
  return o;
}

Outcome msd_monte_carlo() {
  Outcome o;
  const RunReport r = run("thm2_mc");
  double worst = 0.0;
  int configs = 0;
  for (const Check& c : r.checks)
    if (c.name.rfind("mc_error_in_se_", 0) == 0) {
      worst = std::max(worst, c.value);
      ++configs;
    }
  o.require(configs == 6, fmt::format("{} configurations", configs));
  o.require(worst < 3.0, fmt::format("worst |MC - closed| / SE {:.3g} < 3", worst));
  budget(o, r.wall_seconds, 120.0);
  return o;
}

Outcome paired_gap() {
  Outcome o;
  const RunReport r = run("cor1_gap");
  const double gap = r.check("gap_mc").value;
  const double rel = r.check("gap_mc_relative_error").value;
  o.require(gap > 0.0, fmt::format("paired gap {:.4g} > 0", gap));
  o.require(rel < 0.25, fmt::format("relative error vs first order {:.3g} < 0.25", rel));
  budget(o, r.wall_seconds, 120.0);
  return o;
}

Outcome momentum_properties() {
  Outcome o;
  const RunReport r = run("thm3_sweep");
  const double g = r.check("gamma_monotone_fraction").value;
  const double b = r.check("batch_monotone_fraction").value;
  const double a = r.check("asymptote_max_relative_error").value;
  o.require(g >= 1.0, fmt::format("increasing in gamma for {:.0f}% of draws", 100 * g));
  o.require(b >= 1.0, fmt::format("decreasing in B for {:.0f}% of draws", 100 * b));
  o.require(a < 0.01, fmt::format("asymptote error {:.3g} < 0.01", a));
  budget(o, r.wall_seconds, 1.0);
  return o;
}

Outcome toy_network() {
  Outcome o;
  const RunReport r = run("fig7_toynn");
  const double sgd = r.check("sgd_mean_loss").value;
  const double excess = r.check("saturation_excess").value;
  const double drop = r.check("sweep_max_drop_in_se").value;
  o.require(sgd < 2.30, fmt::format("sgd mean loss {:.4f} < 2.30", sgd));
  o.require(excess > 0.0, fmt::format("sam saturated - 3 x sgd saturated {:.3f} > 0", excess));
  o.require(drop <= 1.0, fmt::format("largest sweep drop {:.3g} SE <= 1", drop));
  budget(o, r.wall_seconds, 120.0);
  return o;
}

Outcome condition_field() {
  Outcome o;
  const RunReport r = run("fig6_heatmap");
  const double cells = r.check("cells_near_saddle").value;
  const double worst = r.check("min_condition_near_saddle").value;
  o.require(cells > 0.0, fmt::format("{:.0f} cells within 0.05 of (0,1)", cells));
  o.require(worst > 0.0, fmt::format("smallest condition there {:.4g} > 0", worst));
  budget(o, r.wall_seconds, 30.0);
  return o;
}

bool same_bits(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  return true;
}

Outcome degeneracy_and_oracles() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Beale beale;
  const QuadraticSaddle quad;
  const ToyNnExpected toy;
  const std::vector<const Objective*> objectives{&beale, &quad, &toy};

  int sam_gd_bad = 0, momentum_bad = 0;
  for (const Objective* obj : objectives)
    for (int i = 0; i < 20; ++i) {
      const Point w0{u(rng), u(rng)};
      OptimConfig gd;
      gd.eta = 1e-3;
      gd.max_steps = 200;
      OptimConfig sam = gd;
      sam.method = Method::sam;
      OptimConfig mom = gd;
      mom.momentum = true;
      const Trajectory a = run_trajectory(*obj, gd, w0), b = run_trajectory(*obj, sam, w0),
                       c = run_trajectory(*obj, mom, w0);
      if (a.records.size() != b.records.size() || a.records.size() != c.records.size()) {
        ++sam_gd_bad;
        continue;
      }
      for (std::size_t k = 0; k < a.records.size(); ++k) {
        sam_gd_bad += !same_bits(a.records[k].w, b.records[k].w);
        momentum_bad += !same_bits(a.records[k].w, c.records[k].w);
      }
    }
  o.require(sam_gd_bad == 0, fmt::format("rho=0 SAM vs GD mismatches {}", sam_gd_bad));
  o.require(momentum_bad == 0, fmt::format("gamma=0 momentum vs plain mismatches {}", momentum_bad));

  int fd_bad = 0;
  for (const Objective* obj : objectives)
    for (int i = 0; i < 100; ++i) {
      const Point p{u(rng), u(rng)};
      const FiniteDiffReport r = finite_diff_check(*obj, p, 1e-5, 1e-10);
      fd_bad += !(r.gradient_error < 1e-6) || !(r.hessian_error < 1e-6);
    }
  o.require(fd_bad == 0, fmt::format("finite-difference failures {}", fd_bad));

  double worst_rec = 0.0;
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = dim(rng);
    Matrix h(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = r; c < n; ++c) h(r, c) = h(c, r) = 10.0 * u(rng);
    const EigenDecomposition e = eigendecompose(h);
    const Matrix back = e.vectors * Matrix::diagonal(e.values) * e.vectors.transpose();
    worst_rec = std::max(worst_rec, frobenius_norm(back - h) / std::max(1.0, frobenius_norm(h)));
  }
  o.require(worst_rec < 1e-9, fmt::format("eigen reconstruction {:.2g} < 1e-9", worst_rec));
  budget(o, seconds_since(t0), 30.0);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int index;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "quadratic_saddle_trap", quadratic_trap},
      {2, "attractor_condition_oracle", attractor_oracle},
      {3, "beale_trapping", beale_trapping},
      {4, "msd_monte_carlo", msd_monte_carlo},
      {5, "perturbation_msd_gap", paired_gap},
      {6, "momentum_msd_properties", momentum_properties},
      {7, "toy_network_saturation", toy_network},
      {8, "condition_field_near_saddle", condition_field},
      {9, "degeneracy_and_oracles", degeneracy_and_oracles},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt::format("exception: {}", e.what());
    }
    failed += !o.pass;
    fmt::print("{} {} {}: {}\n", o.pass ? "PASS" : "FAIL", c.index, c.name, o.detail);
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(out_root(), ec);
  fmt::print("{} of {} criteria pass\n", criteria.size() - failed, criteria.size());
  return failed;
}
