#pragma once

// Surrogate-based constrained optimization: Latin hypercube sampling,
// ordinary kriging, expected improvement times probability of feasibility,
// the infill loop, and first-order Sobol indices on a cheap model.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mdao/error.hpp"

namespace mdao {

/// mt19937_64 with platform-independent uniform draws (the standard
/// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }  // [0, 1)
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

struct Variable {
  std::string name;
  double lower;
  double upper;
  std::string unit;
};

struct DesignSpace {
  std::vector<Variable> variables;

  std::size_t dim() const { return variables.size(); }
  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
  bool contains(const Eigen::VectorXd& x) const;
};

/// Throws DomainError if a variable has lower >= upper or the space is empty.
void validate(const DesignSpace& space);

/// n x d points in physical units; one point per stratum in every column.
/// The best of 10 seeded restarts by minimum pairwise distance is kept.
Eigen::MatrixXd lhs_sample(const DesignSpace& space, int n, std::uint64_t seed);

struct Prediction {
  double mean;
  double sd;
};

class KrigingModel {
 public:
  /// Rows of `x` are training points in physical units.
  static KrigingModel fit(const DesignSpace& space, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

  Prediction predict(const Eigen::VectorXd& x) const;
  double mean(const Eigen::VectorXd& x) const;

  const Eigen::VectorXd& theta() const { return theta_; }
  double nugget() const { return nugget_; }
  /// Trend constant and process standard deviation in output units.
  double trend() const { return y_shift_ + y_scale_ * mu_; }
  double process_sd() const { return y_scale_ * std::sqrt(sigma2_); }
  double log_likelihood() const { return log_likelihood_; }

  /// Cross-validation: prediction of each training output from the others,
  /// keeping the fitted correlation parameters and re-estimating the trend.
  Eigen::VectorXd leave_one_out() const;

 private:
  Eigen::VectorXd correlations(const Eigen::VectorXd& u) const;

  DesignSpace space_;
  Eigen::MatrixXd u_;  // normalized training inputs
  Eigen::VectorXd theta_;
  double nugget_ = 0;
  double y_shift_ = 0;
  double y_scale_ = 1;
  double mu_ = 0;
  double sigma2_ = 0;
  double log_likelihood_ = 0;
  Eigen::VectorXd ys_;     // standardized training outputs
  Eigen::VectorXd alpha_;  // R^-1 (y - mu)
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

inline KrigingModel fit_kriging(const DesignSpace& space, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return KrigingModel::fit(space, x, y);
}

double normal_pdf(double z);
double normal_cdf(double z);

/// Expected improvement below `best` for a minimization problem.
double expected_improvement(double mean, double sd, double best);

struct Bound {
  std::optional<double> lower;
  std::optional<double> upper;

  bool contains(double v, double relative_slack = 0) const;
  /// Distance outside the bound, relative to the bound magnitude; 0 inside.
  double violation(double v) const;
};

double probability_within(const Prediction& p, const Bound& b);
double probability_feasible(const std::vector<Prediction>& predictions, const std::vector<Bound>& bounds);

using Acquisition = std::function<double(const Eigen::VectorXd& x)>;

struct InfillOptions {
  int starts = 64;
  double min_step = 1e-4;  // fraction of each variable range
};

/// Maximizes `acquisition` by seeded multistart coordinate pattern search in
/// the unit hypercube. When no start finds a positive value, returns the
/// candidate farthest from `existing` (rows, physical units).
Eigen::VectorXd propose_infill(const Acquisition& acquisition, const DesignSpace& space,
                               const Eigen::MatrixXd& existing, std::uint64_t seed, const InfillOptions& options = {});

/// Constraint on an evaluator output. Analytic constraints are evaluated
/// exactly at candidate points and never modeled.
struct ConstraintSpec {
  std::string name;
  Bound bound;
  std::function<double(const Eigen::VectorXd& x)> analytic;
};

struct EvaluationResult {
  bool ok = true;  // false for an infeasible evaluation signal
  double objective = 0;  // maximized
  std::vector<double> constraints;
  std::string status = "ok";
};

using Evaluator = std::function<EvaluationResult(const Eigen::VectorXd& x)>;

struct Sample {
  Eigen::VectorXd x;
  EvaluationResult result;
  bool feasible = false;
  bool from_doe = true;
};

struct OptimizationReport {
  std::vector<Sample> samples;
  std::optional<std::size_t> best;  // index of best feasible sample
  std::size_t least_violation = 0;  // when no feasible sample exists
  std::vector<double> best_history;  // best feasible objective after each evaluation (NaN before the first)
  std::uint64_t seed = 0;
  int budget = 0;
  bool no_feasible() const { return !best.has_value(); }
};

struct OptimizationProblem {
  DesignSpace space;
  std::vector<ConstraintSpec> constraints;
  Evaluator evaluator;
  double feasibility_slack = 1e-6;  // relative
};

OptimizationReport run_optimization(const OptimizationProblem& problem, int n_init, int budget, std::uint64_t seed,
                                    const InfillOptions& infill = {});

/// Evaluates a design of experiments with the problem's evaluator.
std::vector<Sample> evaluate_doe(const OptimizationProblem& problem, const Eigen::MatrixXd& points);

struct SobolResult {
  std::vector<double> first_order;
  double variance = 0;
  bool degenerate = false;
};

/// First-order indices by the pick-freeze estimator with 2 N (d + 1)
/// evaluations of `f` (physical units).
SobolResult sobol_indices(const std::function<double(const Eigen::VectorXd&)>& f, const DesignSpace& space, int n,
                          std::uint64_t seed);

}  // namespace mdao
