#pragma once

// Executes a workflow plan over a parameter tree: steps before the MDA loop
// run once, the loop runs Gauss-Seidel sweeps until the convergence
// variables settle, and the remaining steps run once on the result. Each
// iteration is stamped with its number as tree version and may be written
// to a snapshot file.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdao/evaluation.hpp"
#include "mdao/formalize.hpp"

namespace mdao {

struct BoundStep {
  std::string name;
  std::set<ParameterPath> outputs;
  CompetenceFunction function;
};

struct BoundRun {
  WorkflowPlan plan;
  std::vector<BoundStep> before_loop;
  std::vector<BoundStep> loop;
  std::vector<BoundStep> after_loop;
};

/// Binds every plan step to a registered function. Throws DomainError
/// listing all unbound steps.
BoundRun plan_execution(const WorkflowPlan& plan, const ProblemGraph& graph, const CompetenceRegistry& registry);

struct RunOptions {
  std::string run_id = "run";
  /// Run directory; snapshots go to `<dir>/snapshots/iter_<k>.xml`. Empty
  /// keeps the run in memory.
  std::string directory;
  double relaxation = 1.0;
};

struct RunRecord {
  std::string run_id;
  int iterations = 0;
  bool converged = false;
  bool feasible = true;
  std::string infeasible_reason;
  std::vector<double> residual_history;
  double wall_time = 0;  // s
  ParameterTree final_tree;
  std::vector<std::string> warnings;
};

RunRecord run_mda(const BoundRun& run, const ParameterTree& input, const RunOptions& options = {});

/// One Gauss-Seidel sweep of the loop body, without relaxation.
Evaluation<ParameterTree> sweep(const BoundRun& run, const ParameterTree& tree);

/// max over `vars` of |after - before| / max(|before|, 1); missing values count as 0.
double relative_change(const ParameterTree& before, const ParameterTree& after, const std::set<ParameterPath>& vars);

/// Writes `<directory>/snapshots/iter_<k>.xml` with tree version k.
std::string snapshot_state(const std::string& directory, int iteration, const ParameterTree& tree);

/// Machine-readable run log (runId, iterations, converged, feasible,
/// infeasibleReason, residualHistory, wallTime, finalValues).
std::string run_log_json(const RunRecord& record);

}  // namespace mdao
