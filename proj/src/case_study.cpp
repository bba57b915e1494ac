#include "mdao/case_study.hpp"

#include <filesystem>

namespace mdao {

const std::vector<DesignVariable>& case_study_variables() {
  static const std::vector<DesignVariable> vars{
      {{"panelEfficiency", 0.25, 0.55, "-"}, paths::panel_efficiency},
      {{"wingArea", 100, 250, "m2"}, paths::design_wing_area},
      {{"fuselageLength", 32, 40, "m"}, paths::design_fuselage_length},
      {{"fuselageDiameter", 3, 4.5, "m"}, paths::design_fuselage_diameter},
      {{"semiWingSpan", 14, 22, "m"}, paths::design_semi_wing_span},
      {{"semiTailSpan", 5, 8, "m"}, paths::design_semi_tail_span},
  };
  return vars;
}

DesignSpace case_study_space() {
  DesignSpace s;
  for (const auto& v : case_study_variables()) s.variables.push_back(v.variable);
  return s;
}

namespace {

Geometry geometry_of(const Eigen::VectorXd& x) {
  return Geometry{x(1), x(4), x(2), x(3), x(5)};
}

}  // namespace

std::vector<ConstraintSpec> case_study_constraints(const Constants& c) {
  return {
      {"g1", Bound{8.0, 10.5}, [](const Eigen::VectorXd& x) { return geometry_of(x).fuselage_ratio(); }},
      {"g2", Bound{6.0, 15.0}, [](const Eigen::VectorXd& x) { return geometry_of(x).aspect_ratio(); }},
      {"mtow", Bound{std::nullopt, c.target_mtow}, nullptr},
  };
}

ProblemGraph case_study_fpg(const ProblemGraph& rcg) {
  std::set<ParameterPath> dvs;
  for (const auto& v : case_study_variables()) dvs.insert(v.path);
  return build_fpg(rcg, paths::fuel_saved, dvs, {paths::mtow}, {});
}

ParameterTree external_inputs(const ParameterTree& tree, const WorkflowPlan& plan, const ProblemGraph& graph) {
  ParameterTree out = tree;
  for (const auto& step : plan.ordered_steps) {
    const CompetenceSpec* spec = graph.find(step);
    if (!spec) continue;
    for (const auto& p : spec->outputs) {
      if (out.contains(p)) out = erase_value(out, p);
    }
  }
  return out;
}

ParameterTree baseline_inputs(const Constants& c) {
  Mission m;
  Geometry g = baseline_geometry(c);
  ParameterTree t;
  t = set_value(t, paths::range, ParameterValue::real(m.range, "m"));
  t = set_value(t, paths::payload, ParameterValue::real(m.payload, "kg"));
  t = set_value(t, paths::cruise_mach, ParameterValue::real(m.cruise_mach, "-"));
  t = set_value(t, paths::cruise_altitude, ParameterValue::real(m.cruise_altitude, "m"));
  Eigen::VectorXd x(6);
  x << case_study_variables()[0].variable.lower, g.wing_area, g.fuselage_length, g.fuselage_diameter,
      g.semi_wing_span, g.semi_tail_span;
  return design_tree(t, x);
}

CaseStudy make_case_study(const std::vector<CompetenceSpec>& specs, const Constants& c, ParameterTree inputs) {
  CaseStudy s;
  s.constants = c;
  s.problem = apply_architecture(case_study_fpg(build_rcg(specs)));
  s.run = plan_execution(s.problem.plan, s.problem.graph, case_study_registry(c));
  s.inputs = external_inputs(inputs, s.problem.plan, s.problem.graph);
  return s;
}

CaseStudy load_case_study(const std::string& data_dir, const Constants& c) {
  namespace fs = std::filesystem;
  auto catalogue = load_competence_dir((fs::path(data_dir) / "competences").string());
  return make_case_study(catalogue.specs, c, read_tree_file((fs::path(data_dir) / "baseline.xml").string()));
}

ParameterTree design_tree(const ParameterTree& inputs, const Eigen::VectorXd& x) {
  const auto& vars = case_study_variables();
  if (x.size() != static_cast<Eigen::Index>(vars.size())) {
    throw DomainError("design point needs " + std::to_string(vars.size()) + " values");
  }
  ParameterTree t = inputs;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (t.contains(vars[i].path)) t = erase_value(t, vars[i].path);
    t = set_value(t, vars[i].path, ParameterValue::real(x(static_cast<Eigen::Index>(i)), vars[i].variable.unit));
  }
  return t;
}

DesignEvaluation evaluate_design(const CaseStudy& study, const Eigen::VectorXd& x) {
  DesignEvaluation e;
  e.record = run_mda(study.run, design_tree(study.inputs, x));
  Geometry g = geometry_of(x);
  e.result.constraints = {g.fuselage_ratio(), g.aspect_ratio(), 0.0};
  if (!e.record.feasible) {
    e.result.ok = false;
    e.result.status = "infeasible: " + e.record.infeasible_reason;
    return e;
  }
  if (!e.record.converged) {
    e.result.ok = false;
    e.result.status = "unconverged";
    return e;
  }
  e.result.objective = get_real(e.record.final_tree, paths::fuel_saved);
  e.result.constraints[2] = get_real(e.record.final_tree, paths::mtow);
  return e;
}

OptimizationProblem case_study_problem(const CaseStudy& study) {
  OptimizationProblem p;
  p.space = case_study_space();
  p.constraints = case_study_constraints(study.constants);
  p.evaluator = [&study](const Eigen::VectorXd& x) { return evaluate_design(study, x).result; };
  return p;
}

}  // namespace mdao
