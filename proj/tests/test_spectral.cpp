#include <doctest.h>

#include <cmath>
#include <random>

#include "saddle/errors.hpp"
#include "saddle/objective.hpp"
#include "saddle/spectral.hpp"
#include "support.hpp"

using namespace saddle;

namespace {

double reconstruction_error(const Matrix& h, const EigenDecomposition& e) {
  const Matrix r = e.vectors * Matrix::diagonal(e.values) * e.vectors.transpose();
  return frobenius_norm(r - h) / std::max(1.0, frobenius_norm(h));
}

double orthogonality_error(const Matrix& v) {
  return frobenius_norm(v.transpose() * v - Matrix::identity(v.rows()));
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("diagonal and 2x2 examples") {
    const EigenDecomposition d = eigendecompose(Matrix::diagonal(Vector{3.0, -1.0, 2.0}));
    CHECK(d.values == Vector{-1.0, 2.0, 3.0});

    Matrix h(2, 2);
    h(0, 0) = 2.0;
    h(0, 1) = h(1, 0) = 1.0;
    h(1, 1) = 2.0;
    const EigenDecomposition e = eigendecompose(h);
    CHECK(e.values[0] == doctest::Approx(1.0));
    CHECK(e.values[1] == doctest::Approx(3.0));
    CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(std::sqrt(0.5)));
    // largest component positive
    for (std::size_t j = 0; j < 2; ++j) {
      const double a = e.vectors(0, j), b = e.vectors(1, j);
      CHECK((std::abs(a) >= std::abs(b) ? a : b) > 0.0);
    }
  }

  TEST_CASE("asymmetric or non-square input is a contract violation") {
    Matrix h(2, 2);
    h(0, 1) = 1.0;
    CHECK_THROWS_AS(eigendecompose(h), ContractViolation);
    CHECK_THROWS_AS(eigendecompose(Matrix(2, 3)), ContractViolation);
    h(1, 0) = 1.0 + 1e-12;
    CHECK_NOTHROW(eigendecompose(h));
  }

  TEST_CASE("property: random symmetric matrices reconstruct and stay orthogonal") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> dim(1, 8);
    double worst_rec = 0.0, worst_orth = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Matrix h = testing_support::random_symmetric(dim(rng), rng, i % 3 == 0 ? 100.0 : 1.0);
      const EigenDecomposition e = eigendecompose(h);
      worst_rec = std::max(worst_rec, reconstruction_error(h, e));
      worst_orth = std::max(worst_orth, orthogonality_error(e.vectors));
      for (std::size_t k = 1; k < e.values.size(); ++k) REQUIRE(e.values[k - 1] <= e.values[k]);
    }
    CHECK(worst_rec < 1e-9);
    CHECK(worst_orth < 1e-10);
  }

  TEST_CASE("attractor condition examples") {
    const Vector lam{-2.0, 2.0};
    CHECK_FALSE(attractor_condition(lam, 0.0).attractor);
    CHECK_FALSE(attractor_condition(lam, 0.49).attractor);
    const AttractorVerdict at = attractor_condition(lam, 0.5);
    CHECK(at.attractor);
    CHECK(at.condition[0] == 0.0);
    CHECK(at.condition[1] == 4.0);
    CHECK(attractor_condition(lam, 1.0).attractor);
    CHECK(attractor_condition(Vector{1.0, 2.0}, 0.0).attractor);
    CHECK_THROWS(attractor_condition(lam, -0.1));
  }

  TEST_CASE("property: attractor iff rho |lambda| >= 1 for every negative eigenvalue") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> neg(-10.0, -0.1), pos(0.1, 10.0), rho(0.0, 2.0);
    int mismatches = 0;
    for (int i = 0; i < 2000; ++i) {
      const Vector lam{neg(rng), pos(rng), neg(rng)};
      const double r = rho(rng);
      const bool expected = r * std::abs(lam[0]) >= 1.0 && r * std::abs(lam[2]) >= 1.0;
      const double margin = std::min(std::abs(r * std::abs(lam[0]) - 1.0), std::abs(r * std::abs(lam[2]) - 1.0));
      if (margin < 1e-12) continue;
      if (attractor_condition(lam, r).attractor != expected) ++mismatches;
    }
    CHECK(mismatches == 0);
  }

  TEST_CASE("property: once an attractor, larger rho keeps it one") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-5.0, 5.0), rho(0.0, 2.0);
    for (int i = 0; i < 500; ++i) {
      const Vector lam{u(rng), u(rng)};
      double r1 = rho(rng), r2 = rho(rng);
      if (r1 > r2) std::swap(r1, r2);
      if (attractor_condition(lam, r1).attractor) CHECK(attractor_condition(lam, r2).attractor);
    }
  }

  TEST_CASE("spectral report index and degeneracy") {
    const SpectralReport s = spectral_report(Beale().hessian(Point{0.0, 1.0}));
    CHECK(s.index == 1);
    CHECK_FALSE(s.degenerate);
    CHECK(s.eigenvalues[0] == doctest::Approx(-27.75));
    CHECK(s.eigenvalues[1] == doctest::Approx(27.75));
    CHECK(s.attractor(1.0 / 27.75 + 1e-9)->attractor);
    CHECK_FALSE(s.attractor(0.03)->attractor);

    const SpectralReport flat = spectral_report(ToyNnExpected().hessian(Point{0.0, 0.5}));
    CHECK(flat.degenerate);
    CHECK_FALSE(flat.attractor(0.5).has_value());
  }

  TEST_CASE("newton finds the beale saddle and global minimum") {
    const std::vector<Point> seeds = seed_grid(-1.0, 4.0, -0.5, 1.5, 11, 9);
    const CriticalPointSearch found = find_critical_points(Beale(), seeds);
    bool saddle = false, minimum = false;
    for (const CriticalPoint& c : found.points) {
      CHECK(c.grad_norm_at_solution < 1e-10);
      if (distance(c.location, Point{0.0, 1.0}) < 1e-8) {
        saddle = true;
        CHECK(c.spectral.index == 1);
      }
      if (distance(c.location, Point{3.0, 0.5}) < 1e-8) {
        minimum = true;
        CHECK(c.spectral.index == 0);
      }
    }
    CHECK(saddle);
    CHECK(minimum);
    for (std::size_t i = 0; i < found.points.size(); ++i)
      for (std::size_t j = i + 1; j < found.points.size(); ++j)
        CHECK(distance(found.points[i].location, found.points[j].location) > 1e-6);
  }

  TEST_CASE("newton on the quadratic saddle") {
    const std::vector<Point> seeds{Point{1.0, 1.0}, Point{-2.0, 0.5}};
    const CriticalPointSearch found = find_critical_points(QuadraticSaddle(), seeds);
    REQUIRE(found.points.size() == 1);
    CHECK(norm(found.points[0].location) < 1e-12);
    CHECK(found.points[0].spectral.index == 1);
    CHECK(found.points[0].spectral.eigenvalues == Vector{-2.0, 2.0});
  }

  TEST_CASE("condition field on the quadratic is constant") {
    GridSpec grid;
    grid.x_min = -1.0, grid.x_max = 1.0, grid.y_min = -1.0, grid.y_max = 1.0;
    grid.nx = grid.ny = 5;
    const std::vector<FieldCell> cells = eigen_condition_field(QuadraticSaddle(), grid, 0.25);
    REQUIRE(cells.size() == 25);
    for (const FieldCell& c : cells) {
      CHECK(c.cond1 == doctest::Approx(-2.0 + 0.25 * 4.0));
      CHECK(c.cond2 == doctest::Approx(2.0 + 0.25 * 4.0));
      CHECK(c.finite);
    }
    CHECK(cells[1].x == doctest::Approx(-0.5));
    CHECK(cells[5].y == doctest::Approx(-0.5));
    const std::string csv = field_csv(cells);
    CHECK(csv.substr(0, csv.find('\n')).find(',') != std::string::npos);
  }

  TEST_CASE("condition field at rho = 0 is the eigenvalues") {
    GridSpec grid;
    grid.nx = grid.ny = 7;
    for (const FieldCell& c : eigen_condition_field(Beale(), grid, 0.0)) {
      CHECK(c.cond1 == c.lam1);
      CHECK(c.cond2 == c.lam2);
      CHECK(c.lam1 <= c.lam2);
    }
  }
}
