#pragma once

// The solar-powered aircraft design problem assembled end to end: the five
// shipped competences formalized into a converged-MDA plan, bound to the
// analytic models, and wrapped as an optimization problem over the six
// design variables with its three constraints.

#include <string>

#include "mdao/disciplines.hpp"
#include "mdao/executor.hpp"
#include "mdao/surrogate.hpp"

namespace mdao {

/// Design variables in optimizer order with the tree path each one sets.
struct DesignVariable {
  Variable variable;
  ParameterPath path;
};
const std::vector<DesignVariable>& case_study_variables();
DesignSpace case_study_space();

/// g1 fuselage slenderness, g2 wing aspect ratio (both analytic), mtow (modeled).
std::vector<ConstraintSpec> case_study_constraints(const Constants& c);

/// Objective, design variables and constraint outputs of the problem graph.
ProblemGraph case_study_fpg(const ProblemGraph& rcg);

struct CaseStudy {
  Constants constants;
  ArchitectedProblem problem;
  BoundRun run;
  /// Plan-external inputs: mission, design variables and panel efficiency.
  ParameterTree inputs;
};

/// Mission, baseline design and the lower-bound panel efficiency.
ParameterTree baseline_inputs(const Constants& c);

CaseStudy make_case_study(const std::vector<CompetenceSpec>& specs, const Constants& c, ParameterTree inputs);

/// Loads the competences of `<data_dir>/competences`, architects the plan
/// and binds it to the analytic models. `inputs` defaults to the baseline
/// design read from `<data_dir>/baseline.xml`.
CaseStudy load_case_study(const std::string& data_dir, const Constants& c);

/// Drops every value produced by a plan step, leaving the plan-external inputs.
ParameterTree external_inputs(const ParameterTree& tree, const WorkflowPlan& plan, const ProblemGraph& graph);

ParameterTree design_tree(const ParameterTree& inputs, const Eigen::VectorXd& x);

struct DesignEvaluation {
  EvaluationResult result;
  RunRecord record;
};

/// Converged MDA at design point x. Infeasible or unconverged analyses
/// come back with result.ok = false and the reason in result.status.
DesignEvaluation evaluate_design(const CaseStudy& study, const Eigen::VectorXd& x);

OptimizationProblem case_study_problem(const CaseStudy& study);

}  // namespace mdao
