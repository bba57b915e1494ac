#include <cmath>
#include <limits>

#include "mdao/surrogate.hpp"

namespace mdao {

namespace {

Sample classify(const OptimizationProblem& problem, const Eigen::VectorXd& x, EvaluationResult r, bool from_doe) {
  if (r.constraints.size() != problem.constraints.size()) {
    throw DomainError("evaluator returned " + std::to_string(r.constraints.size()) + " constraint values, expected " +
                      std::to_string(problem.constraints.size()));
  }
  Sample s{x, std::move(r), false, from_doe};
  s.feasible = s.result.ok;
  for (std::size_t i = 0; i < problem.constraints.size() && s.feasible; ++i) {
    s.feasible = problem.constraints[i].bound.contains(s.result.constraints[i], problem.feasibility_slack);
  }
  return s;
}

double total_violation(const OptimizationProblem& problem, const Sample& s) {
  if (!s.result.ok) return std::numeric_limits<double>::infinity();
  double v = 0;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) v += problem.constraints[i].bound.violation(s.result.constraints[i]);
  return v;
}

/// Stand-in value for a constraint output at an infeasible evaluation: the
/// worst observed value pushed beyond the bound.
double penalty_value(const Bound& b, const std::vector<double>& observed) {
  if (b.upper) {
    double worst = *b.upper + 0.05 * std::max(std::abs(*b.upper), 1.0);
    for (double v : observed) worst = std::max(worst, v);
    return worst;
  }
  double worst = b.lower ? *b.lower - 0.05 * std::max(std::abs(*b.lower), 1.0) : 0.0;
  for (double v : observed) worst = std::min(worst, v);
  return worst;
}

}  // namespace

std::vector<Sample> evaluate_doe(const OptimizationProblem& problem, const Eigen::MatrixXd& points) {
  std::vector<Sample> out;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::VectorXd x = points.row(i).transpose();
    out.push_back(classify(problem, x, problem.evaluator(x), true));
  }
  return out;
}

OptimizationReport run_optimization(const OptimizationProblem& problem, int n_init, int budget, std::uint64_t seed,
                                    const InfillOptions& infill) {
  validate(problem.space);
  const auto d = static_cast<int>(problem.space.dim());
  if (n_init < d + 2) throw DomainError("initial design needs at least d + 2 = " + std::to_string(d + 2) + " points");
  if (budget < n_init) throw DomainError("budget must be at least the initial design size");

  OptimizationReport rep;
  rep.seed = seed;
  rep.budget = budget;

  double best_value = std::numeric_limits<double>::quiet_NaN();
  auto record = [&](Sample s) {
    rep.samples.push_back(std::move(s));
    const Sample& last = rep.samples.back();
    const std::size_t idx = rep.samples.size() - 1;
    if (last.feasible && (!rep.best || last.result.objective > best_value)) {
      rep.best = idx;
      best_value = last.result.objective;
    }
    rep.best_history.push_back(best_value);
  };

  for (auto& s : evaluate_doe(problem, lhs_sample(problem.space, n_init, seed))) record(std::move(s));

  for (int cycle = 1; static_cast<int>(rep.samples.size()) < budget; ++cycle) {
    const std::size_t n = rep.samples.size();
    Eigen::MatrixXd all_x(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i) all_x.row(static_cast<Eigen::Index>(i)) = rep.samples[i].x.transpose();

    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < n; ++i) {
      if (rep.samples[i].result.ok) ok.push_back(i);
    }

    std::optional<KrigingModel> objective;
    if (static_cast<int>(ok.size()) >= d + 2) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(ok.size()), d);
      Eigen::VectorXd y(static_cast<Eigen::Index>(ok.size()));
      for (std::size_t i = 0; i < ok.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = rep.samples[ok[i]].x.transpose();
        y(static_cast<Eigen::Index>(i)) = -rep.samples[ok[i]].result.objective;
      }
      objective = KrigingModel::fit(problem.space, x, y);
    }

    std::vector<std::pair<std::size_t, KrigingModel>> modeled;
    for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
      if (problem.constraints[c].analytic) continue;
      std::vector<double> observed;
      for (std::size_t i : ok) observed.push_back(rep.samples[i].result.constraints[c]);
      double penalty = penalty_value(problem.constraints[c].bound, observed);
      Eigen::VectorXd y(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        y(static_cast<Eigen::Index>(i)) = rep.samples[i].result.ok ? rep.samples[i].result.constraints[c] : penalty;
      }
      modeled.emplace_back(c, KrigingModel::fit(problem.space, all_x, y));
    }

    const bool have_incumbent = rep.best.has_value() && objective.has_value();
    const double incumbent = have_incumbent ? -best_value : 0.0;
    Acquisition acq = [&](const Eigen::VectorXd& x) {
      double violation = 0;
      for (const auto& c : problem.constraints) {
        if (c.analytic) violation += c.bound.violation(c.analytic(x));
      }
      if (violation > 0) return -violation;
      double pf = 1;
      for (const auto& [c, model] : modeled) pf *= probability_within(model.predict(x), problem.constraints[c].bound);
      if (!have_incumbent) return pf;
      Prediction p = objective->predict(x);
      return expected_improvement(p.mean, p.sd, incumbent) * pf;
    };

    std::uint64_t cycle_seed = seed + 1000003ULL * static_cast<std::uint64_t>(cycle);
    Eigen::VectorXd next = propose_infill(acq, problem.space, all_x, cycle_seed, infill);
    Eigen::VectorXd next_u = problem.space.to_unit(next);
    for (std::size_t i = 0; i < n; ++i) {
      if ((problem.space.to_unit(rep.samples[i].x) - next_u).norm() < 1e-6) {
        next = propose_infill([](const Eigen::VectorXd&) { return 0.0; }, problem.space, all_x, cycle_seed, infill);
        break;
      }
    }
    record(classify(problem, next, problem.evaluator(next), false));
  }

  if (!rep.best) {
    double least = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
      double v = total_violation(problem, rep.samples[i]);
      if (v < least) {
        least = v;
        rep.least_violation = i;
      }
    }
  }
  return rep;
}

}  // namespace mdao
