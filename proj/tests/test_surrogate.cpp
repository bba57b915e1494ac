#include <cmath>
#include <set>

#include "doctest.h"
#include "mdao/surrogate.hpp"

using namespace mdao;

namespace {

DesignSpace unit_space(int d) {
  DesignSpace s;
  for (int k = 0; k < d; ++k) s.variables.push_back({"x" + std::to_string(k + 1), 0, 1, "-"});
  return s;
}

DesignSpace case_space() {
  return DesignSpace{{{"panelEfficiency", 0.25, 0.55, "-"},
                      {"wingArea", 100, 250, "m2"},
                      {"fuselageLength", 32, 40, "m"},
                      {"fuselageDiameter", 3, 4.5, "m"},
                      {"semiWingSpan", 14, 22, "m"},
                      {"semiTailSpan", 5, 8, "m"}}};
}

double branin(const Eigen::VectorXd& x) {
  const double pi = M_PI;
  double a = x(1) - 5.1 / (4 * pi * pi) * x(0) * x(0) + 5 / pi * x(0) - 6;
  return a * a + 10 * (1 - 1 / (8 * pi)) * std::cos(x(0)) + 10;
}

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }

Eigen::VectorXd evaluate(const Eigen::MatrixXd& x, const std::function<double(const Eigen::VectorXd&)>& f) {
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = f(x.row(i).transpose());
  return y;
}

}  // namespace

TEST_CASE("lhs_sample") {
  SUBCASE("stratification n=4, d=2") {
    Eigen::MatrixXd x = lhs_sample(unit_space(2), 4, 1);
    for (int k = 0; k < 2; ++k) {
      std::set<int> strata;
      for (int i = 0; i < 4; ++i) strata.insert(static_cast<int>(std::floor(x(i, k) * 4)));
      CHECK(strata == std::set<int>{0, 1, 2, 3});
    }
  }
  SUBCASE("seeded determinism") {
    CHECK(lhs_sample(case_space(), 20, 42) == lhs_sample(case_space(), 20, 42));
    CHECK(lhs_sample(case_space(), 20, 42) != lhs_sample(case_space(), 20, 43));
  }
  SUBCASE("case-study bounds") {
    DesignSpace s = case_space();
    Eigen::MatrixXd x = lhs_sample(s, 60, 7);
    CHECK(x.rows() == 60);
    CHECK(x.cols() == 6);
    for (Eigen::Index i = 0; i < 60; ++i) CHECK(s.contains(x.row(i).transpose()));
  }
  SUBCASE("property: every column is a stratum permutation") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      int n = 2 + static_cast<int>(seed % 17);
      DesignSpace s = case_space();
      Eigen::MatrixXd x = lhs_sample(s, n, seed);
      for (std::size_t k = 0; k < s.dim(); ++k) {
        std::set<int> strata;
        for (int i = 0; i < n; ++i) {
          double u = (x(i, static_cast<Eigen::Index>(k)) - s.variables[k].lower) / (s.variables[k].upper - s.variables[k].lower);
          strata.insert(std::min(static_cast<int>(std::floor(u * n)), n - 1));
        }
        CHECK(static_cast<int>(strata.size()) == n);
      }
    }
  }
  CHECK_THROWS_AS(lhs_sample(unit_space(2), 1, 0), DomainError);
  CHECK_THROWS_AS(lhs_sample(DesignSpace{{{"bad", 1, 1, ""}}}, 4, 0), DomainError);
}

TEST_CASE("kriging interpolation") {
  SUBCASE("identity on three points") {
    Eigen::MatrixXd x(3, 1);
    x << 0, 0.5, 1;
    Eigen::VectorXd y = x.col(0);
    auto m = fit_kriging(unit_space(1), x, y);
    CHECK(m.predict(v1(0.5)).mean == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(std::abs(m.predict(v1(0.5)).mean - 0.5) <= 1e-8);
  }
  SUBCASE("constant outputs") {
    Eigen::MatrixXd x = lhs_sample(unit_space(2), 8, 3);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(8, 4.25);
    auto m = fit_kriging(unit_space(2), x, y);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd p(2);
      p << rng.uniform(), rng.uniform();
      Prediction pr = m.predict(p);
      CHECK(pr.mean == doctest::Approx(4.25).epsilon(1e-12));
      CHECK(pr.sd <= 1e-9);
    }
  }
  SUBCASE("property: exact at training points, non-negative variance") {
    DesignSpace s = case_space();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Eigen::MatrixXd x = lhs_sample(s, 20, seed);
      Eigen::VectorXd y = evaluate(x, [](const Eigen::VectorXd& p) {
        return 100 * p(0) * p(0) + std::sin(p(1) / 30) * 40 + p(2) * p(3) - 0.5 * p(4) + std::cos(p(5));
      });
      auto m = fit_kriging(s, x, y);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Prediction p = m.predict(x.row(i).transpose());
        CHECK(std::abs(p.mean - y(i)) <= 1e-8 * (1 + std::abs(y(i))));
        CHECK(p.sd <= 1e-6 * m.process_sd());
      }
      Rng rng(seed);
      for (int i = 0; i < 2000; ++i) {
        Eigen::VectorXd u(6);
        for (int k = 0; k < 6; ++k) u(k) = rng.uniform();
        CHECK(m.predict(s.from_unit(u)).sd >= 0);
      }
    }
  }
  SUBCASE("far field tends to the trend and process deviation") {
    // alternating outputs drive the correlation length to its lower limit
    Eigen::MatrixXd x(8, 1);
    x << 0, 0.04, 0.08, 0.12, 0.16, 0.2, 0.24, 0.28;
    Eigen::VectorXd y(8);
    y << 1, -1, 1.5, -0.5, 1, -1.2, 0.8, -1;
    auto m = fit_kriging(unit_space(1), x, y);
    CHECK(m.theta()(0) > 100);
    Prediction far = m.predict(v1(1));
    CHECK(far.mean == doctest::Approx(m.trend()).epsilon(1e-9));
    CHECK(far.sd == doctest::Approx(m.process_sd()).epsilon(1e-9));
  }
  SUBCASE("mirror-symmetric data gives mirrored predictions") {
    Eigen::MatrixXd x(6, 1);
    x << 0, 0.15, 0.35, 0.65, 0.85, 1;
    Eigen::VectorXd y(6);
    y << 2, -1, 0.5, 0.5, -1, 2;
    auto m = fit_kriging(unit_space(1), x, y);
    for (double t = 0; t <= 0.5; t += 0.01) {
      Prediction a = m.predict(v1(t)), b = m.predict(v1(1 - t));
      CHECK(std::abs(a.mean - b.mean) <= 1e-10);
      CHECK(std::abs(a.sd - b.sd) <= 1e-10);
    }
  }
  SUBCASE("errors and nugget repair") {
    Eigen::MatrixXd x(2, 1);
    x << 0, 1;
    CHECK_THROWS_AS(fit_kriging(unit_space(1), x, Eigen::VectorXd::Ones(2)), DomainError);
    Eigen::MatrixXd dup(4, 1);
    dup << 0, 0.5, 0.5, 1;
    Eigen::VectorXd y(4);
    y << 0, 1, 1, 0;
    auto m = fit_kriging(unit_space(1), dup, y);
    CHECK(m.predict(v1(0.5)).mean == doctest::Approx(1).epsilon(1e-3));
    Eigen::VectorXd bad = y;
    bad(0) = std::nan("");
    CHECK_THROWS_AS(fit_kriging(unit_space(1), dup, bad), DomainError);
  }
}

TEST_CASE("kriging leave-one-out on Branin") {
  DesignSpace s{{{"x1", -5, 10, ""}, {"x2", 0, 15, ""}}};
  Eigen::MatrixXd x = lhs_sample(s, 20, 1);
  Eigen::VectorXd y = evaluate(x, branin);
  auto m = fit_kriging(s, x, y);
  Eigen::VectorXd loo = m.leave_one_out();
  double rmse = std::sqrt((loo - y).squaredNorm() / 20);
  double range = y.maxCoeff() - y.minCoeff();
  MESSAGE("Branin LOO RMSE / sample range = " << rmse / range);
  CHECK(rmse <= 0.05 * range);

  // the fold predictions agree with a model fitted on 19 points at the same theta
  for (Eigen::Index i : {0, 7, 19}) {
    Eigen::MatrixXd xt(19, 2);
    Eigen::VectorXd yt(19);
    for (Eigen::Index j = 0, r = 0; j < 20; ++j) {
      if (j == i) continue;
      xt.row(r) = x.row(j);
      yt(r++) = y(j);
    }
    double direct = 0;
    {
      Eigen::MatrixXd u(19, 2);
      for (Eigen::Index a = 0; a < 19; ++a) u.row(a) = s.to_unit(xt.row(a).transpose()).transpose();
      Eigen::VectorXd ui = s.to_unit(x.row(i).transpose());
      Eigen::MatrixXd rr(19, 19);
      Eigen::VectorXd c(19);
      for (Eigen::Index a = 0; a < 19; ++a) {
        c(a) = std::exp(-((u.row(a).transpose() - ui).array().square() * m.theta().array()).sum());
        for (Eigen::Index b = 0; b < 19; ++b) {
          rr(a, b) = std::exp(-((u.row(a) - u.row(b)).array().square() * m.theta().transpose().array()).sum()) +
                     (a == b ? m.nugget() : 0);
        }
      }
      Eigen::VectorXd ones = Eigen::VectorXd::Ones(19);
      Eigen::VectorXd ri1 = rr.ldlt().solve(ones), riy = rr.ldlt().solve(yt);
      double mu = ones.dot(riy) / ones.dot(ri1);
      direct = mu + c.dot(rr.ldlt().solve(yt - mu * ones));
    }
    CHECK(loo(i) == doctest::Approx(direct).epsilon(1e-6));
  }
}

TEST_CASE("expected improvement") {
  CHECK(expected_improvement(1.5, 0, 1.5) == 0);
  CHECK(expected_improvement(0, 1, 0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  CHECK(expected_improvement(0.2, 0, 1.0) == doctest::Approx(0.8));
  CHECK(normal_cdf(0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    double mu = (rng.uniform() - 0.5) * 200, sd = rng.uniform() * 50, best = (rng.uniform() - 0.5) * 200;
    CHECK(expected_improvement(mu, sd, best) >= 0);
    CHECK(expected_improvement(std::max(mu, best), 0, best) == 0);
  }
}

TEST_CASE("probability of feasibility") {
  Bound le0{std::nullopt, 0.0};
  CHECK(probability_within({0, 1}, le0) == doctest::Approx(0.5).epsilon(1e-15));
  Bound band{8.0, 10.5};
  CHECK(probability_within({9, 1e-12}, band) == 1);
  CHECK(probability_within({9, 0}, band) == 1);
  CHECK(probability_within({11, 0}, band) == 0);
  CHECK(probability_within({9.25, 0.5}, band) == doctest::Approx(normal_cdf(2.5) - normal_cdf(-2.5)));
  CHECK(probability_feasible({{0, 1}, {0, 1}}, {le0, le0}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(probability_feasible({{0, 1}}, {}), DomainError);
}

TEST_CASE("propose_infill") {
  DesignSpace s = unit_space(1);
  Eigen::MatrixXd existing(2, 1);
  existing << 0, 1;
  Acquisition bump = [](const Eigen::VectorXd& x) { return std::exp(-(x(0) - 0.7) * (x(0) - 0.7) / 0.01); };
  Eigen::VectorXd x = propose_infill(bump, s, existing, 3);
  CHECK(x(0) == doctest::Approx(0.7).epsilon(2e-4));
  for (double t = 0; t <= 1; t += 0.001) CHECK(bump(x) >= bump(v1(t)) - 1e-6);
  CHECK(propose_infill(bump, s, existing, 3) == x);

  Acquisition flat = [](const Eigen::VectorXd&) { return 0.0; };
  Eigen::VectorXd far = propose_infill(flat, s, existing, 3);
  CHECK(far(0) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("run_optimization on a constrained 1-D quadratic") {
  // maximize -(x - 0.8)^2 subject to x <= 0.6: optimum at x = 0.6
  OptimizationProblem p;
  p.space = unit_space(1);
  p.constraints = {ConstraintSpec{"g", Bound{std::nullopt, 0.6}, nullptr}};
  p.evaluator = [](const Eigen::VectorXd& x) {
    EvaluationResult r;
    r.objective = -(x(0) - 0.8) * (x(0) - 0.8);
    r.constraints = {x(0)};
    return r;
  };
  auto rep = run_optimization(p, 3, 13, 11);
  REQUIRE(rep.samples.size() == 13);
  REQUIRE(rep.best.has_value());
  double xb = rep.samples[*rep.best].x(0);
  MESSAGE("constrained optimum found at x = " << xb);
  CHECK(std::abs(xb - 0.6) <= 1e-2);
  CHECK(xb <= 0.6 * (1 + 1e-6));
  for (std::size_t i = 1; i < rep.best_history.size(); ++i) {
    if (!std::isnan(rep.best_history[i - 1])) CHECK(rep.best_history[i] >= rep.best_history[i - 1]);
  }
}

TEST_CASE("run_optimization contracts") {
  OptimizationProblem p;
  p.space = DesignSpace{{{"a", 0, 1, ""}, {"b", -2, 2, ""}}};
  p.constraints = {ConstraintSpec{"sum", Bound{std::nullopt, 0.5},
                                  [](const Eigen::VectorXd& x) { return x(0) + 0.25 * x(1); }},
                   ConstraintSpec{"q", Bound{0.1, std::nullopt}, nullptr}};
  p.evaluator = [](const Eigen::VectorXd& x) {
    EvaluationResult r;
    if (x(0) > 0.95) {
      r.ok = false;
      r.status = "infeasible";
      r.constraints = {x(0) + 0.25 * x(1), 0};
      return r;
    }
    r.objective = x(0) * x(0) - 0.1 * x(1);
    r.constraints = {x(0) + 0.25 * x(1), 1 - x(1) * x(1) / 4};
    return r;
  };

  SUBCASE("budget equal to the initial design is the DoE best") {
    auto rep = run_optimization(p, 8, 8, 5);
    auto doe = evaluate_doe(p, lhs_sample(p.space, 8, 5));
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < doe.size(); ++i) {
      if (doe[i].feasible && (!best || doe[i].result.objective > doe[*best].result.objective)) best = i;
    }
    CHECK(rep.best == best);
  }
  SUBCASE("monotone trace and determinism") {
    auto a = run_optimization(p, 6, 16, 9);
    auto b = run_optimization(p, 6, 16, 9);
    REQUIRE(a.samples.size() == 16);
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].x == b.samples[i].x);
    for (std::size_t i = 1; i < a.best_history.size(); ++i) {
      if (!std::isnan(a.best_history[i - 1])) CHECK(a.best_history[i] >= a.best_history[i - 1]);
    }
    REQUIRE(a.best.has_value());
    const Sample& best = a.samples[*a.best];
    CHECK(best.result.constraints[0] <= 0.5 * (1 + 1e-6));
    CHECK(best.result.constraints[1] >= 0.1 * (1 - 1e-6));
  }
  SUBCASE("no feasible point") {
    OptimizationProblem q = p;
    q.constraints[1].bound = Bound{5.0, std::nullopt};
    auto rep = run_optimization(q, 4, 6, 1);
    CHECK(rep.no_feasible());
    CHECK(rep.least_violation < rep.samples.size());
    CHECK(rep.samples[rep.least_violation].result.ok);
  }
  CHECK_THROWS_AS(run_optimization(p, 3, 10, 1), DomainError);
  CHECK_THROWS_AS(run_optimization(p, 8, 6, 1), DomainError);
}

TEST_CASE("property: infill is invariant to rescaling one variable") {
  auto make = [](double scale) {
    OptimizationProblem p;
    p.space = DesignSpace{{{"a", 0, 1, ""}, {"b", 0, scale, ""}}};
    p.constraints = {ConstraintSpec{"g", Bound{std::nullopt, 0.7}, nullptr}};
    p.evaluator = [scale](const Eigen::VectorXd& x) {
      double b = x(1) / scale;
      EvaluationResult r;
      r.objective = std::sin(3 * x(0)) + b * (1 - b);
      r.constraints = {x(0) * b + 0.3};
      return r;
    };
    return p;
  };
  auto a = run_optimization(make(1), 6, 10, 21);
  auto b = run_optimization(make(4), 6, 10, 21);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(b.samples[i].x(0) == doctest::Approx(a.samples[i].x(0)).epsilon(1e-9));
    CHECK(b.samples[i].x(1) / 4 == doctest::Approx(a.samples[i].x(1)).epsilon(1e-9));
  }
}

TEST_CASE("Sobol first-order indices") {
  DesignSpace s = unit_space(2);
  SUBCASE("f = x1") {
    auto r = sobol_indices([](const Eigen::VectorXd& x) { return x(0); }, s, 4096, 1);
    CHECK(r.first_order[0] == doctest::Approx(1).epsilon(0.05));
    CHECK(std::abs(r.first_order[1]) <= 0.05);
    CHECK_FALSE(r.degenerate);
  }
  SUBCASE("f = 3 x1 + x2") {
    auto r = sobol_indices([](const Eigen::VectorXd& x) { return 3 * x(0) + x(1); }, s, 4096, 2);
    CHECK(std::abs(r.first_order[0] - 0.9) <= 0.05);
    CHECK(std::abs(r.first_order[1] - 0.1) <= 0.05);
  }
  SUBCASE("surrogate of f = x1 and f = 3 x1 + x2") {
    Eigen::MatrixXd x = lhs_sample(s, 12, 4);
    auto m1 = fit_kriging(s, x, evaluate(x, [](const Eigen::VectorXd& p) { return p(0); }));
    auto r1 = sobol_indices([&](const Eigen::VectorXd& p) { return m1.mean(p); }, s, 4096, 3);
    CHECK(std::abs(r1.first_order[0] - 1) <= 0.05);
    CHECK(std::abs(r1.first_order[1]) <= 0.05);
    auto m2 = fit_kriging(s, x, evaluate(x, [](const Eigen::VectorXd& p) { return 3 * p(0) + p(1); }));
    auto r2 = sobol_indices([&](const Eigen::VectorXd& p) { return m2.mean(p); }, s, 4096, 3);
    CHECK(std::abs(r2.first_order[0] - 0.9) <= 0.05);
    CHECK(std::abs(r2.first_order[1] - 0.1) <= 0.05);
  }
  SUBCASE("Ishigami function") {
    // closed-form first-order indices for a = 7, b = 0.1
    const double pi = M_PI, a = 7, b = 0.1;
    double v1 = 0.5 * std::pow(1 + b * std::pow(pi, 4) / 5, 2);
    double v2 = a * a / 8;
    double total = v1 + v2 + b * b * std::pow(pi, 8) / 18 - b * b * std::pow(pi, 8) / 50;
    DesignSpace cube{{{"x1", -pi, pi, ""}, {"x2", -pi, pi, ""}, {"x3", -pi, pi, ""}}};
    auto r = sobol_indices(
        [&](const Eigen::VectorXd& x) {
          return std::sin(x(0)) + a * std::sin(x(1)) * std::sin(x(1)) + b * std::pow(x(2), 4) * std::sin(x(0));
        },
        cube, 4096, 8);
    CHECK(std::abs(r.first_order[0] - v1 / total) <= 0.05);
    CHECK(std::abs(r.first_order[1] - v2 / total) <= 0.05);
    CHECK(std::abs(r.first_order[2]) <= 0.05);
  }
  SUBCASE("degenerate variance and determinism") {
    auto r = sobol_indices([](const Eigen::VectorXd&) { return 3.0; }, s, 1024, 1);
    CHECK(r.degenerate);
    CHECK(r.first_order == std::vector<double>{0, 0});
    auto f = [](const Eigen::VectorXd& x) { return x(0) * x(1) + x(1); };
    CHECK(sobol_indices(f, s, 1024, 9).first_order == sobol_indices(f, s, 1024, 9).first_order);
  }
}
