#pragma once

// Graph formalization of an MDO system. Competences (tools with declared
// input/output parameters) are assembled into a bipartite repository graph,
// reduced to the graph of one design problem, and finally ordered into an
// executable plan whose coupled part runs as a converged Gauss-Seidel loop.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdao/datamodel.hpp"

namespace mdao {

struct CompetenceSpec {
  std::string name;
  std::string owner;
  std::string description;
  std::set<ParameterPath> inputs;
  std::set<ParameterPath> outputs;

  bool operator==(const CompetenceSpec&) const = default;
};

/// Throws DomainError when outputs are empty or overlap the inputs.
void validate(const CompetenceSpec& spec);

CompetenceSpec parse_competence(std::string_view xml_text);
std::string serialize_competence(const CompetenceSpec& spec);

struct CompetenceCatalogue {
  std::vector<CompetenceSpec> specs;
  std::vector<std::string> warnings;  // paths outside the parameter dictionary
};

/// Parses and validates competence documents. Duplicate names and invalid
/// specs throw DomainError; unknown parameter paths only produce warnings.
CompetenceCatalogue load_competences(const std::vector<std::string>& xml_documents);
/// Loads every `*.xml` file of a directory in file-name order.
CompetenceCatalogue load_competence_dir(const std::string& directory);

enum class GraphStage { rcg, fpg, architected };
std::string_view to_string(GraphStage stage);
GraphStage parse_stage(std::string_view text);

/// Feedback edges are parameter -> consumer edges cut to make the plan acyclic.
struct ParameterEdge {
  ParameterPath parameter;
  std::string competence;

  auto operator<=>(const ParameterEdge&) const = default;
  bool operator==(const ParameterEdge&) const = default;
};

struct ProblemGraph {
  GraphStage stage = GraphStage::rcg;
  std::vector<CompetenceSpec> competences;  // sorted by name
  std::map<ParameterPath, std::vector<std::string>> collisions;  // RCG only: path -> producers
  std::optional<ParameterPath> objective;
  std::set<ParameterPath> design_variables;
  std::set<ParameterPath> constraint_outputs;
  std::set<ParameterEdge> feedback_edges;

  std::set<ParameterPath> parameters() const;
  /// parameter -> consumer edges
  std::set<ParameterEdge> input_edges() const;
  /// producer -> parameter edges, stored as (parameter, producer)
  std::set<ParameterEdge> output_edges() const;
  const CompetenceSpec* find(std::string_view name) const;
  std::vector<std::string> producers(const ParameterPath& p) const;

  bool operator==(const ProblemGraph&) const = default;
};

/// Repository graph. Parameters with more than one producer are recorded in
/// `collisions`; they are resolved later, never here.
ProblemGraph build_rcg(std::vector<CompetenceSpec> specs);

/// Problem graph for one objective. `collision_choices` maps every colliding
/// path to the competence that keeps producing it. Competences that reach
/// neither the objective nor a constraint output are pruned.
ProblemGraph build_fpg(const ProblemGraph& rcg, const ParameterPath& objective,
                       const std::set<ParameterPath>& design_variables,
                       const std::set<ParameterPath>& constraint_outputs,
                       const std::map<ParameterPath, std::string>& collision_choices);

/// Collision choices file: `<choices><choice path=".." competence=".."/></choices>`.
std::map<ParameterPath, std::string> parse_choices(std::string_view xml_text);
std::string serialize_choices(const std::map<ParameterPath, std::string>& choices);

enum class WrapperKind { none, doe, optimizer };
std::string_view to_string(WrapperKind kind);
WrapperKind parse_wrapper(std::string_view text);

struct WorkflowPlan {
  std::vector<std::string> ordered_steps;
  std::vector<std::string> mda_loop;  // in execution order
  std::set<ParameterPath> convergence_vars;
  double tolerance = 1e-6;
  int max_iterations = 50;
  WrapperKind wrapper = WrapperKind::none;

  bool operator==(const WorkflowPlan&) const = default;
};

struct ArchitectureOptions {
  std::string pattern = "converged-mda-gs";
  double tolerance = 1e-6;
  int max_iterations = 50;
  WrapperKind wrapper = WrapperKind::none;
  /// Competence that opens every loop iteration; falls back to the
  /// lexicographically smallest loop member when absent from the loop.
  std::string loop_head = "sizing";
};

struct ArchitectedProblem {
  WorkflowPlan plan;
  ProblemGraph graph;  // stage architected, feedback edges filled
};

ArchitectedProblem apply_architecture(const ProblemGraph& fpg, const ArchitectureOptions& options = {});

/// Workflow document (steps, loop, convergence, feedback, wrapper and the
/// full problem graph). A graph without a plan is written for RCG/FPG stages.
std::string export_workflow(const WorkflowPlan* plan, const ProblemGraph& graph);
inline std::string export_workflow(const WorkflowPlan& plan, const ProblemGraph& graph) {
  return export_workflow(&plan, graph);
}

struct WorkflowDocument {
  std::optional<WorkflowPlan> plan;
  ProblemGraph graph;
};

/// Throws StructuralError naming the offending element path.
WorkflowDocument import_workflow(std::string_view xml_text);

std::string export_dot(const ProblemGraph& graph);
/// Square text grid: competences on the diagonal, cell (row, column) lists
/// the parameters the column competence passes to the row competence.
std::string export_matrix(const ProblemGraph& graph, const std::vector<std::string>& order = {});

/// Order used for display: plan order when available, otherwise by name.
std::vector<std::string> competence_names(const ProblemGraph& graph);

}  // namespace mdao
