#include <doctest.h>

#include <cmath>
#include <random>

#include "saddle/dynamics.hpp"
#include "saddle/errors.hpp"
#include "saddle/objective.hpp"
#include "saddle/spectral.hpp"

using namespace saddle;

namespace {

CriticalPoint critical_at(const Objective& obj, Point p) {
  CriticalPoint c;
  c.location = p;
  c.spectral = spectral_report(obj.hessian(p));
  return c;
}

// Records on the line y = 0 whose w_p always lands across x = 0.
Trajectory synthetic(std::size_t n, bool alternate) {
  Trajectory t;
  for (std::size_t k = 0; k < n; ++k) {
    StepRecord r;
    r.t = k;
    r.w = Point{1.0, 0.0};
    r.w_p = Point{-1.0, 0.0};
    r.grad_cosine = alternate && k % 2 ? -0.5 : 0.5;
    t.records.push_back(r);
  }
  return t;
}

BasinLabel sign_basin(std::span<const double> w) {
  BasinLabel b;
  b.kind = BasinLabel::Kind::minimum;
  b.id = w[0] > 0 ? 0 : 1;
  return b;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("flow field on the quadratic saddle") {
    CHECK(flow_field(QuadraticSaddle(), Point{1.0, 1.0}, {FlowKind::gd, 0.0}) == Vector{-2.0, 2.0});
    const Vector sam = flow_field(QuadraticSaddle(), Point{1.0, 1.0}, {FlowKind::sam, 1.0});
    CHECK(sam[0] == doctest::Approx(-6.0));
    CHECK(sam[1] == doctest::Approx(-2.0));
  }

  TEST_CASE("sam flow with rho = 1 contracts to the saddle, gd flow escapes") {
    const FlowPath sam = integrate_flow(QuadraticSaddle(), Point{-3.0, -0.01}, {FlowKind::sam, 1.0}, 10.0);
    CHECK(norm(sam.end()) < 1e-3);
    CHECK(sam.times.back() == 10.0);
    const FlowPath gd = integrate_flow(QuadraticSaddle(), Point{-3.0, -0.01}, {FlowKind::gd, 0.0}, 10.0);
    CHECK(std::abs(gd.end()[1]) > 1.0);
  }

  TEST_CASE("the last step lands exactly on t_end") {
    FlowOptions opts;
    opts.h = 0.3;
    const FlowPath p = integrate_flow(QuadraticSaddle(), Point{1.0, 0.0}, {FlowKind::gd, 0.0}, 1.0, opts);
    CHECK(p.times.back() == 1.0);
    CHECK(p.times.size() == 5);  // 0, .3, .6, .9, 1
    opts.record_stride = 0;
    CHECK(integrate_flow(QuadraticSaddle(), Point{1.0, 0.0}, {FlowKind::gd, 0.0}, 1.0, opts).times.size() == 2);
  }

  TEST_CASE("rk4 error shrinks at fourth order") {
    // y' = 2y, exact y0 e^{2t}; the local error model is |y| t |mu|^5 h^4 / 120.
    auto err = [](double h) {
      FlowOptions opts;
      opts.h = h;
      const FlowPath p = integrate_flow(QuadraticSaddle(), Point{0.0, 1.0}, {FlowKind::gd, 0.0}, 1.0, opts);
      return std::abs(p.end()[1] - std::exp(2.0));
    };
    const double e1 = err(0.1), e2 = err(0.05);
    const double model = std::exp(2.0) * 1.0 * 32.0 * 1e-4 / 120.0;
    CHECK(e1 < 2.0 * model);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
  }

  TEST_CASE("property: halving h moves beale flow endpoints by less than the error model") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(0.5, 1.5);
    for (int i = 0; i < 20; ++i) {
      const Point w0{ux(rng), uy(rng)};
      FlowOptions a, b;
      a.h = 2e-3;
      b.h = 1e-3;
      const FlowPath pa = integrate_flow(Beale(), w0, {FlowKind::gd, 0.0}, 1.0, a);
      const FlowPath pb = integrate_flow(Beale(), w0, {FlowKind::gd, 0.0}, 1.0, b);
      if (pa.diverged || pb.diverged) continue;
      CHECK(distance(pa.end(), pb.end()) < 1e-5 * std::max(1.0, norm(pa.end())));
    }
  }

  TEST_CASE("divergence truncates the flow") {
    const FlowPath p = integrate_flow(QuadraticSaddle(), Point{0.0, 1.0}, {FlowKind::gd, 0.0}, 50.0);
    CHECK(p.diverged);
    CHECK(p.times.back() < 50.0);
  }

  TEST_CASE("flow csv header") {
    const FlowPath p = integrate_flow(QuadraticSaddle(), Point{1.0, 0.0}, {FlowKind::gd, 0.0}, 0.01);
    const std::string csv = flow_csv(p);
    CHECK(csv.substr(0, csv.find('\n')) == "t,w1,w2");
  }

  TEST_CASE("basin labels") {
    const std::vector<KnownMinimum> minima{KnownMinimum::at_point("global", Point{3.0, 0.5})};
    const BasinLabel near = classify_basin(Beale(), Point{2.5, 0.4}, minima);
    CHECK(near.kind == BasinLabel::Kind::minimum);
    CHECK(near.id == 0);
    CHECK(to_string(near) == "min:0");

    BasinOptions opts;
    opts.saddles = {Point{0.0, 1.0}};
    const BasinLabel stuck = classify_basin(Beale(), Point{0.0, 1.0}, minima, opts);
    CHECK(stuck.kind == BasinLabel::Kind::saddle_trapped);
    CHECK(to_string(stuck) == "saddle:0");

    const BasinLabel gone = classify_basin(QuadraticSaddle(), Point{0.0, 1.0}, {});
    CHECK(gone.kind == BasinLabel::Kind::diverged);

    const BasinLabel bounded = classify_basin(QuadraticSaddle(), Point{1.0, 0.0}, {});
    CHECK(bounded.kind == BasinLabel::Kind::unclassified);
    BasinOptions with_saddle;
    with_saddle.saddles = {Point{0.0, 0.0}};
    CHECK(classify_basin(QuadraticSaddle(), Point{1.0, 0.0}, {}, with_saddle).kind ==
          BasinLabel::Kind::saddle_trapped);
  }

  TEST_CASE("property: beale basin labels are stable when h is halved") {
    const std::vector<KnownMinimum> minima{KnownMinimum::at_point("global", Point{3.0, 0.5})};
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> ux(-1.0, 4.0), uy(-1.0, 2.0);
    BasinOptions coarse, fine;
    fine.h = coarse.h / 2;
    int mismatch = 0;
    const int n = 100;
    for (int i = 0; i < n; ++i) {
      const Point w{ux(rng), uy(rng)};
      if (!classify_basin(Beale(), w, minima, coarse).same_basin(classify_basin(Beale(), w, minima, fine))) ++mismatch;
    }
    CHECK(mismatch < n / 20);
  }

  TEST_CASE("unstable manifold probe") {
    const auto [minus, plus] = unstable_manifold_probe(QuadraticSaddle(), critical_at(QuadraticSaddle(), {0.0, 0.0}), 1e-3);
    CHECK(minus.diverged);
    CHECK(plus.diverged);
    CHECK(minus.end()[1] * plus.end()[1] < 0.0);
    CHECK(std::abs(minus.end()[0]) < 1e-12);

    const auto [a, b] = unstable_manifold_probe(Beale(), critical_at(Beale(), {0.0, 1.0}), 1e-3, 50.0);
    const Point& tail_a = a.end();
    const Point& tail_b = b.end();
    CHECK((distance(tail_a, Point{3.0, 0.5}) < 1e-3 || distance(tail_b, Point{3.0, 0.5}) < 1e-3));

    CHECK_THROWS_AS(unstable_manifold_probe(Beale(), critical_at(Beale(), {3.0, 0.5}), 1e-3), ContractViolation);
  }

  TEST_CASE("case labels on synthetic trajectories") {
    const std::vector<WindowCase> ii = classify_case(synthetic(250, true), Point{0.0, 0.0}, 0.1, sign_basin);
    REQUIRE(ii.size() == 3);
    CHECK(ii[0].label == CaseKind::case_iii_ii);
    CHECK(ii[1].label == CaseKind::case_iii_ii);
    CHECK(ii[2].label == CaseKind::unclassified);
    CHECK(ii[0].evidence.crossing_fraction == 1.0);
    CHECK(ii[0].evidence.cosine_alternation == 1.0);
    CHECK(to_string(ii[0].label) == "Case-III-ii");

    const std::vector<WindowCase> i = classify_case(synthetic(100, false), Point{0.0, 0.0}, 0.1, sign_basin);
    REQUIRE(i.size() == 1);
    CHECK(i[0].label == CaseKind::case_iii_i);
    CHECK(i[0].evidence.cosine_alternation == 0.0);
    CHECK(to_string(CaseKind::case_ii) == "Case-II");
    CHECK_THROWS(classify_case(synthetic(10, true), Point{0.0, 0.0}, 0.1, sign_basin, CaseOptions{0, 0.4, 10.0, 0.5}));
  }

  TEST_CASE("gd on beale far from the saddle is Case-I") {
    const std::vector<KnownMinimum> minima{KnownMinimum::at_point("global", Point{3.0, 0.5})};
    BasinClassifier basin = [&](std::span<const double> w) { return classify_basin(Beale(), w, minima); };
    OptimConfig cfg;
    cfg.eta = 1e-3;
    cfg.max_steps = 199;
    const Trajectory t = run_trajectory(Beale(), cfg, Point{2.0, 0.3});
    const std::vector<WindowCase> w = classify_case(t, Point{0.0, 1.0}, 0.1, basin);
    REQUIRE(w.size() == 2);
    CHECK(w[0].label == CaseKind::case_i);
    CHECK(w[1].label == CaseKind::case_i);
    CHECK(w[0].evidence.crossing_fraction == 0.0);

    cfg.method = Method::sam;
    cfg.rho = 0.01;
    const Trajectory s = run_trajectory(Beale(), cfg, Point{2.0, 0.3});
    CHECK(classify_case(s, Point{0.0, 1.0}, 0.01, basin)[0].label == CaseKind::case_i);
  }

  TEST_CASE("cosine alternation rate") {
    CHECK(cosine_alternation_rate(synthetic(50, true), 1000) == 1.0);
    CHECK(cosine_alternation_rate(synthetic(50, false), 1000) == 0.0);
    Trajectory t = synthetic(10, true);
    for (std::size_t k = 0; k < 5; ++k) t.records[k].grad_cosine.reset();
    CHECK(cosine_alternation_rate(t, 1000) == 1.0);
  }
}
