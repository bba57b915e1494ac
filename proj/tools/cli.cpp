#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdao/case_study.hpp"
#include "mdao/xml.hpp"

namespace mdao::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Domain outcome that maps to exit code 3.
struct Unconverged {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ------------------------------------------------------------ options

struct Common {
  std::string data_dir = MDAO_DATA_DIR;
  std::string constants;
  bool no_sps = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_no_sps) {
  cmd->add_option("--data-dir", c.data_dir, "Directory with competences/, baseline.xml and constants.xml")
      ->capture_default_str();
  cmd->add_option("--constants", c.constants, "Constants file (default: $MDAO_FORGE_CONSTANTS, then <data-dir>/constants.xml)");
  if (with_no_sps) cmd->add_flag("--no-sps", c.no_sps, "Switch the solar power system off (baseline aircraft)");
}

Constants load_constants(const Common& c) {
  std::string path = c.constants;
  if (path.empty()) {
    if (const char* env = std::getenv("MDAO_FORGE_CONSTANTS"); env && *env) path = env;
  }
  if (path.empty()) path = (fs::path(c.data_dir) / "constants.xml").string();
  Constants k = read_constants_file(path);
  return c.no_sps ? k.without_sps() : k;
}

std::string competence_dir(const Common& c, const std::string& tools) {
  return tools.empty() ? (fs::path(c.data_dir) / "competences").string() : tools;
}

CompetenceCatalogue load_catalogue(const std::string& dir, std::ostream& err) {
  auto cat = load_competence_dir(dir);
  for (const auto& w : cat.warnings) err << "warning: " << w << "\n";
  return cat;
}

// ------------------------------------------------------------ CSV

std::string status_word(const Sample& s) {
  if (!s.result.ok) return s.result.status.substr(0, s.result.status.find(':'));
  return s.feasible ? "feasible" : "violated";
}

std::string doe_csv(const DesignSpace& space, const std::vector<Sample>& samples) {
  std::ostringstream out;
  for (const auto& v : space.variables) out << v.name << ",";
  out << "fuelSaved,g1,g2,mtow,status\n";
  for (const auto& s : samples) {
    for (Eigen::Index k = 0; k < s.x.size(); ++k) out << number(s.x(k)) << ",";
    const auto& c = s.result.constraints;
    out << (s.result.ok ? number(s.result.objective) : "") << "," << number(c[0]) << "," << number(c[1]) << ","
        << (s.result.ok ? number(c[2]) : "") << "," << status_word(s) << "\n";
  }
  return out.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(v)) {
    throw ParseError(where + ": '" + text + "' is not a number", 0, 0);
  }
  return v;
}

struct DoeTable {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

/// Rows with an objective value; rows of failed analyses are skipped.
DoeTable read_doe(const std::string& path, const DesignSpace& space) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file", 1, 1);
  auto header = split(line);
  const std::size_t d = space.dim();
  if (header.size() < d + 1) throw StructuralError(path + ": header has too few columns");
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k] != space.variables[k].name) {
      throw StructuralError(path + ": column " + std::to_string(k + 1) + " is '" + header[k] + "', expected '" +
                            space.variables[k].name + "'");
    }
  }
  if (header[d] != "fuelSaved") throw StructuralError(path + ": column " + std::to_string(d + 1) + " must be fuelSaved");
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError(path + ": expected " + std::to_string(header.size()) + " cells", line_no, 1);
    }
    if (cells[d].empty()) continue;
    std::vector<double> row;
    for (std::size_t k = 0; k <= d; ++k) row.push_back(parse_number(cells[k], path + ":" + std::to_string(line_no)));
    rows.push_back(std::move(row));
  }
  DoeTable t;
  t.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  t.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) t.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    t.y(static_cast<Eigen::Index>(i)) = rows[i][d];
  }
  return t;
}

struct SobolRow {
  std::string variable;
  double s1;
};

std::vector<SobolRow> read_sobol(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "variable,S1") throw ParseError(path + ": missing 'variable,S1' header", 1, 1);
  std::vector<SobolRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != 2 || cells[0].empty()) throw ParseError(path + ": expected 'name,value'", line_no, 1);
    rows.push_back({cells[0], parse_number(cells[1], path + ":" + std::to_string(line_no))});
  }
  if (rows.empty()) throw StructuralError(path + ": no sensitivity rows");
  return rows;
}

std::vector<std::size_t> ranking(const std::vector<SobolRow>& rows) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rows[a].s1 > rows[b].s1; });
  return order;
}

std::string sobol_svg(const std::vector<SobolRow>& rows) {
  const int bar_height = 24, gap = 12, label_width = 150, plot_width = 400, top = 40;
  const int height = top + static_cast<int>(rows.size()) * (bar_height + gap) + 20;
  const int width = label_width + plot_width + 80;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  out << "  <text x=\"10\" y=\"22\" font-size=\"15\">First-order Sobol indices of fuelSaved</text>\n";
  out << "  <line x1=\"" << label_width << "\" y1=\"" << top - 6 << "\" x2=\"" << label_width << "\" y2=\""
      << height - 14 << "\" stroke=\"#444\"/>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int y = top + static_cast<int>(i) * (bar_height + gap);
    const double w = std::clamp(rows[i].s1, 0.0, 1.0) * plot_width;
    out << "  <text x=\"" << label_width - 8 << "\" y=\"" << y + 17 << "\" text-anchor=\"end\">"
        << xml::escape(rows[i].variable, false) << "</text>\n";
    out << "  <rect class=\"bar\" x=\"" << label_width << "\" y=\"" << y << "\" width=\"" << fixed(w, 2)
        << "\" height=\"" << bar_height << "\" fill=\"#3b6ea8\"/>\n";
    out << "  <text x=\"" << fixed(label_width + w + 6, 2) << "\" y=\"" << y + 17 << "\">" << fixed(rows[i].s1, 3)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// ------------------------------------------------------------ report

json named_point(const DesignSpace& space, const Eigen::VectorXd& x) {
  json j = json::object();
  for (std::size_t k = 0; k < space.dim(); ++k) j[space.variables[k].name] = x(static_cast<Eigen::Index>(k));
  return j;
}

json constraint_values(const std::vector<ConstraintSpec>& specs, const EvaluationResult& r) {
  json j = json::object();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    j[specs[i].name] = (r.ok || specs[i].analytic) ? json(r.constraints[i]) : json(nullptr);
  }
  return j;
}

std::string report_json(const OptimizationProblem& problem, const OptimizationReport& rep, int n_init) {
  json j;
  const Sample& best = rep.samples[rep.best ? *rep.best : rep.least_violation];
  j["feasibleFound"] = !rep.no_feasible();
  j["bestPoint"] = named_point(problem.space, best.x);
  j["bestObjective"] = best.result.ok ? json(best.result.objective) : json(nullptr);
  j["constraints"] = constraint_values(problem.constraints, best.result);
  json history = json::array();
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    const Sample& s = rep.samples[i];
    json h;
    h["evaluation"] = i + 1;
    h["phase"] = s.from_doe ? "doe" : "infill";
    h["point"] = named_point(problem.space, s.x);
    h["fuelSaved"] = s.result.ok ? json(s.result.objective) : json(nullptr);
    h["constraints"] = constraint_values(problem.constraints, s.result);
    h["status"] = status_word(s);
    if (!s.result.ok) h["reason"] = s.result.status;
    h["bestFeasible"] = number_or_null(rep.best_history[i]);
    history.push_back(std::move(h));
  }
  j["history"] = std::move(history);
  j["seed"] = rep.seed;
  j["budget"] = rep.budget;
  j["nInit"] = n_init;
  return j.dump(2) + "\n";
}

const json& field(const json& j, const char* name, const std::string& path) {
  if (!j.is_object() || !j.contains(name)) throw StructuralError(path + ": missing field '" + name + "'");
  return j.at(name);
}

std::string report_text(const json& report, const std::string& path, const std::vector<SobolRow>* sobol) {
  std::ostringstream out;
  const json& point = field(report, "bestPoint", path);
  const json& objective = field(report, "bestObjective", path);
  const json& constraints = field(report, "constraints", path);
  const json& history = field(report, "history", path);
  if (!point.is_object() || !constraints.is_object() || !history.is_array()) {
    throw StructuralError(path + ": bestPoint/constraints must be objects and history an array");
  }
  bool feasible = report.value("feasibleFound", true);
  out << "Optimization report (seed " << field(report, "seed", path).dump() << ", budget "
      << field(report, "budget", path).dump() << ", " << history.size() << " evaluations)\n";
  out << (feasible ? "Best feasible design\n" : "No feasible design found; least-violation design\n");
  for (const auto& [name, value] : point.items()) {
    if (!value.is_number()) throw StructuralError(path + ": bestPoint." + name + " is not a number");
    char line[128];
    std::snprintf(line, sizeof line, "  %-18s %12.4f\n", name.c_str(), value.get<double>());
    out << line;
  }
  out << "\n";
  if (objective.is_number()) {
    char line[128];
    std::snprintf(line, sizeof line, "  %-18s %12.4f kg\n", "fuelSaved", objective.get<double>());
    out << line;
  }
  for (const auto& [name, value] : constraints.items()) {
    char line[128];
    if (value.is_number()) {
      std::snprintf(line, sizeof line, "  %-18s %12.4f\n", name.c_str(), value.get<double>());
    } else {
      std::snprintf(line, sizeof line, "  %-18s %12s\n", name.c_str(), "n/a");
    }
    out << line;
  }
  if (sobol) {
    out << "\nFirst-order sensitivity of fuelSaved (descending)\n";
    for (std::size_t i : ranking(*sobol)) {
      char line[128];
      std::snprintf(line, sizeof line, "  %-18s %8.3f\n", (*sobol)[i].variable.c_str(), (*sobol)[i].s1);
      out << line;
    }
  }
  return out.str();
}

// ------------------------------------------------------------ commands

int cmd_validate(const std::string& file, std::ostream& out, std::ostream& err) {
  const std::string text = read_file(file);
  const xml::Element root = xml::parse(text);
  if (root.name == "workflow") {
    auto doc = import_workflow(text);
    out << file << ": workflow with " << doc.graph.competences.size() << " competences"
        << (doc.plan ? " and an execution plan" : "") << "\n";
    return ok;
  }
  if (root.name == "competence") {
    auto spec = parse_competence(text);
    validate(spec);
    for (const auto& p : spec.inputs) {
      if (!in_dictionary(p)) err << "warning: " << p.str() << " is not in the parameter dictionary\n";
    }
    for (const auto& p : spec.outputs) {
      if (!in_dictionary(p)) err << "warning: " << p.str() << " is not in the parameter dictionary\n";
    }
    out << file << ": competence '" << spec.name << "'\n";
    return ok;
  }
  if (root.name == "constants") {
    parse_constants(text);
    out << file << ": constants\n";
    return ok;
  }
  if (root.name == "choices") {
    out << file << ": " << parse_choices(text).size() << " collision choice(s)\n";
    return ok;
  }
  ParameterTree tree = parse_tree(text);
  std::vector<std::string> unknown;
  for (const auto& [path, entry] : tree.entries()) {
    if (!in_dictionary(path)) unknown.push_back(path.str());
  }
  if (!unknown.empty()) {
    for (const auto& u : unknown) err << "error: " << u << " is not in the parameter dictionary\n";
    return invalid;
  }
  out << file << ": " << tree.size() << " parameters, version " << tree.version() << "\n";
  return ok;
}

void write_graph_outputs(const ProblemGraph& g, const std::string& dot, const std::string& matrix,
                         const std::string& out_file, const WorkflowPlan* plan, std::ostream& out) {
  if (!dot.empty()) {
    write_file(dot, export_dot(g));
    out << "wrote " << dot << "\n";
  }
  if (!matrix.empty()) {
    write_file(matrix, export_matrix(g, plan ? plan->ordered_steps : std::vector<std::string>{}));
    out << "wrote " << matrix << "\n";
  }
  if (!out_file.empty()) {
    write_file(out_file, export_workflow(plan, g));
    out << "wrote " << out_file << "\n";
  }
}

void print_graph_summary(const ProblemGraph& g, std::ostream& out) {
  out << to_string(g.stage) << ": " << g.competences.size() << " competences, " << g.parameters().size()
      << " parameters\n";
  for (const auto& c : g.competences) out << "  " << c.name << "\n";
  for (const auto& [path, producers] : g.collisions) {
    out << "collision on " << path.str() << ":";
    for (const auto& p : producers) out << " " << p;
    out << "\n";
  }
}

void print_plan(const WorkflowPlan& plan, std::ostream& out) {
  auto join = [](const auto& items) {
    std::string s;
    for (const auto& i : items) s += (s.empty() ? "" : " -> ") + i;
    return s;
  };
  out << "steps: " << join(plan.ordered_steps) << "\n";
  out << "mda loop: " << (plan.mda_loop.empty() ? std::string("(none)") : join(plan.mda_loop)) << "\n";
  out << "convergence:";
  for (const auto& p : plan.convergence_vars) out << " " << p.str();
  out << " (tolerance " << plan.tolerance << ", max " << plan.max_iterations << " iterations)\n";
}

std::set<ParameterPath> to_paths(const std::vector<std::string>& items) {
  std::set<ParameterPath> out;
  for (const auto& i : items) out.insert(ParameterPath(i));
  return out;
}

CLI::App* deepest(CLI::App* app) {
  for (;;) {
    auto subs = app->get_subcommands();
    if (subs.empty()) return app;
    app = subs.front();
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Desk-scale MDAO toolchain for the solar-powered aircraft case study", "mdao-forge"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;

  std::string validate_file;
  auto* validate_cmd = app.add_subcommand("validate", "Check a tree, competence, workflow, constants or choices file");
  validate_cmd->add_option("file", validate_file, "File to check")->required();

  auto* graph_cmd = app.add_subcommand("graph", "Build repository or problem graphs");
  graph_cmd->require_subcommand(1);
  std::string tools_dir, dot_file, matrix_file, graph_out, objective, choices_file;
  std::vector<std::string> design_vars, constraint_outputs;
  auto* rcg_cmd = graph_cmd->add_subcommand("rcg", "Repository competence graph of a tool directory");
  auto* fpg_cmd = graph_cmd->add_subcommand("fpg", "Problem graph for one objective");
  for (auto* c : {rcg_cmd, fpg_cmd}) {
    c->add_option("--tools", tools_dir, "Directory of competence XML files (default: <data-dir>/competences)");
    c->add_option("--data-dir", common.data_dir, "Data directory")->capture_default_str();
    c->add_option("--dot", dot_file, "Write Graphviz DOT");
    c->add_option("--matrix", matrix_file, "Write the design structure matrix as text");
    c->add_option("--out", graph_out, "Write the graph as a workflow document");
  }
  fpg_cmd->add_option("--objective", objective, "Objective parameter path")->required();
  fpg_cmd->add_option("--choices", choices_file, "Collision choices file");
  fpg_cmd->add_option("--design-var", design_vars, "Design variable path (default: the case-study variables)");
  fpg_cmd->add_option("--constraint", constraint_outputs, "Constraint output path (default: MTOW)");

  auto* arch_cmd = app.add_subcommand("arch", "Apply an MDAO architecture");
  arch_cmd->require_subcommand(1);
  auto* apply_cmd = arch_cmd->add_subcommand("apply", "Turn a problem graph into an executable plan");
  std::string pattern = "converged-mda-gs", fpg_file, arch_out, wrapper = "none";
  double tolerance = 1e-6;
  int max_iterations = 50;
  apply_cmd->add_option("--pattern", pattern, "Architecture pattern")->capture_default_str();
  apply_cmd->add_option("--fpg", fpg_file, "Problem graph document (default: case-study problem)");
  apply_cmd->add_option("--tools", tools_dir, "Competence directory for the default problem");
  apply_cmd->add_option("--data-dir", common.data_dir, "Data directory")->capture_default_str();
  apply_cmd->add_option("--tolerance", tolerance, "MDA convergence tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  apply_cmd->add_option("--max-iterations", max_iterations, "MDA iteration budget")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  apply_cmd->add_option("--wrapper", wrapper, "none, doe or optimizer")->capture_default_str();
  apply_cmd->add_option("--out", arch_out, "Workflow file to write")->required();
  apply_cmd->add_option("--dot", dot_file, "Write Graphviz DOT");
  apply_cmd->add_option("--matrix", matrix_file, "Write the design structure matrix as text");

  auto* run_cmd = app.add_subcommand("run", "Execute workflows");
  run_cmd->require_subcommand(1);
  auto* mda_cmd = run_cmd->add_subcommand("mda", "Converge the MDA of a workflow on a data file");
  std::string workflow_file, data_file, outdir = "run", run_id = "run";
  double relaxation = 1.0;
  mda_cmd->add_option("--workflow", workflow_file, "Workflow file (default: case-study plan)");
  mda_cmd->add_option("--data", data_file, "Input tree (default: <data-dir>/baseline.xml)");
  mda_cmd->add_option("--outdir", outdir, "Run directory root")->capture_default_str();
  mda_cmd->add_option("--run-id", run_id, "Run name")->capture_default_str();
  mda_cmd->add_option("--relaxation", relaxation, "Relaxation factor on the convergence variables")
      ->capture_default_str()
      ->check(CLI::Range(1e-3, 1.0));
  add_common(mda_cmd, common, true);

  int n_points = 0, n_init = 20, budget = 0, n_sobol = 4096;
  std::uint64_t seed = 42;
  std::string out_file, doe_out, doe_file;

  auto* doe_cmd = app.add_subcommand("doe", "Design of experiments");
  doe_cmd->require_subcommand(1);
  auto* doe_run = doe_cmd->add_subcommand("run", "Evaluate a Latin hypercube over the design space");
  doe_run->add_option("--n", n_points, "Number of points")->required()->check(CLI::Range(2, 100000));
  doe_run->add_option("--seed", seed, "Random seed")->capture_default_str();
  doe_run->add_option("--out", out_file, "CSV file to write")->required();
  add_common(doe_run, common, true);

  auto* opt_cmd = app.add_subcommand("opt", "Surrogate-based optimization");
  opt_cmd->require_subcommand(1);
  auto* opt_run = opt_cmd->add_subcommand("run", "Initial design plus constrained expected-improvement infill");
  opt_run->add_option("--init", n_init, "Initial design size")->capture_default_str()->check(CLI::PositiveNumber);
  opt_run->add_option("--budget", budget, "Total number of evaluations")->required()->check(CLI::PositiveNumber);
  opt_run->add_option("--seed", seed, "Random seed")->capture_default_str();
  opt_run->add_option("--out", out_file, "Report JSON to write")->required();
  opt_run->add_option("--doe-out", doe_out, "Also write every evaluation as CSV");
  add_common(opt_run, common, true);

  auto* sens_cmd = app.add_subcommand("sens", "Sensitivity analysis");
  sens_cmd->require_subcommand(1);
  auto* sens_run = sens_cmd->add_subcommand("run", "First-order Sobol indices of a kriging fit of a DoE");
  sens_run->add_option("--doe", doe_file, "DoE CSV")->required();
  sens_run->add_option("--out", out_file, "CSV file to write")->required();
  sens_run->add_option("--n", n_sobol, "Base sample size")->capture_default_str()->check(CLI::Range(1024, 1 << 22));
  sens_run->add_option("--seed", seed, "Random seed")->capture_default_str();

  auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate the empty mass fraction on the baseline aircraft");
  double target = 0;
  std::string cal_out;
  cal_cmd->add_option("--target", target, "Target MTOW in kg (default: from the constants)")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--out", cal_out, "Write the calibrated constants file");
  cal_cmd->add_option("--data", data_file, "Tree holding the mission (default: <data-dir>/baseline.xml)");
  add_common(cal_cmd, common, false);

  auto* report_cmd = app.add_subcommand("report", "Summarize an optimization report");
  std::string report_file, sobol_file, svg_file;
  report_cmd->add_option("--report", report_file, "Report JSON")->required();
  report_cmd->add_option("--sobol", sobol_file, "Sobol CSV to include");
  report_cmd->add_option("--svg", svg_file, "Write a bar chart of the Sobol indices")->needs("--sobol");

  auto* baseline_cmd = app.add_subcommand("baseline", "Write the converged baseline aircraft without solar panels");
  baseline_cmd->add_option("--out", out_file, "Tree file to write")->required();
  add_common(baseline_cmd, common, false);

  auto* stubs_cmd = app.add_subcommand("stubs", "Split a tree into per-tool input/output stubs");
  std::string stubs_dir;
  stubs_cmd->add_option("--data", data_file, "Source tree")->required();
  stubs_cmd->add_option("--tools", tools_dir, "Competence directory (default: <data-dir>/competences)");
  stubs_cmd->add_option("--data-dir", common.data_dir, "Data directory")->capture_default_str();
  stubs_cmd->add_option("--outdir", stubs_dir, "Directory for <tool>.xml stubs")->required();

  std::vector<const char*> argv{"mdao-forge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << deepest(&app)->help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << deepest(&app)->help();
    return usage;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_file, out, err);

    if (*rcg_cmd) {
      auto cat = load_catalogue(competence_dir(common, tools_dir), err);
      auto g = build_rcg(cat.specs);
      print_graph_summary(g, out);
      write_graph_outputs(g, dot_file, matrix_file, graph_out, nullptr, out);
      return ok;
    }

    if (*fpg_cmd) {
      auto cat = load_catalogue(competence_dir(common, tools_dir), err);
      std::map<ParameterPath, std::string> choices;
      if (!choices_file.empty()) choices = parse_choices(read_file(choices_file));
      std::set<ParameterPath> dvs = to_paths(design_vars);
      if (design_vars.empty()) {
        for (const auto& v : case_study_variables()) dvs.insert(v.path);
      }
      std::set<ParameterPath> cons = constraint_outputs.empty() ? std::set{paths::mtow} : to_paths(constraint_outputs);
      auto g = build_fpg(build_rcg(cat.specs), ParameterPath(objective), dvs, cons, choices);
      print_graph_summary(g, out);
      write_graph_outputs(g, dot_file, matrix_file, graph_out, nullptr, out);
      return ok;
    }

    if (*apply_cmd) {
      ProblemGraph fpg;
      if (fpg_file.empty()) {
        fpg = case_study_fpg(build_rcg(load_catalogue(competence_dir(common, tools_dir), err).specs));
      } else {
        fpg = import_workflow(read_file(fpg_file)).graph;
      }
      ArchitectureOptions opt;
      opt.pattern = pattern;
      opt.tolerance = tolerance;
      opt.max_iterations = max_iterations;
      opt.wrapper = parse_wrapper(wrapper);
      auto arch = apply_architecture(fpg, opt);
      print_plan(arch.plan, out);
      write_graph_outputs(arch.graph, dot_file, matrix_file, arch_out, &arch.plan, out);
      return ok;
    }

    if (*mda_cmd) {
      Constants c = load_constants(common);
      ArchitectedProblem arch;
      if (workflow_file.empty()) {
        arch = apply_architecture(case_study_fpg(build_rcg(load_catalogue(competence_dir(common, ""), err).specs)));
      } else {
        auto doc = import_workflow(read_file(workflow_file));
        if (!doc.plan) throw StructuralError(workflow_file + ": workflow has no execution plan (run 'arch apply' first)");
        arch = {*doc.plan, doc.graph};
      }
      if (data_file.empty()) data_file = (fs::path(common.data_dir) / "baseline.xml").string();
      auto bound = plan_execution(arch.plan, arch.graph, case_study_registry(c));
      auto inputs = external_inputs(read_tree_file(data_file), arch.plan, arch.graph);
      fs::path run_dir = fs::path(outdir) / run_id;
      fs::create_directories(run_dir);
      auto rec = run_mda(bound, inputs, RunOptions{run_id, run_dir.string(), relaxation});
      write_file((run_dir / "log.json").string(), run_log_json(rec));
      for (const auto& w : rec.warnings) err << "warning: " << w << "\n";
      out << "run " << run_id << ": " << rec.iterations << " iteration(s), "
          << (rec.converged ? "converged" : rec.feasible ? "not converged" : "infeasible") << "\n";
      for (const auto& p : {paths::mtow, paths::fuel_saved, paths::empty_mass}) {
        if (auto v = find_value(rec.final_tree, p)) out << "  " << p.str() << " = " << number(v->as_real()) << "\n";
      }
      out << "log: " << (run_dir / "log.json").string() << "\n";
      if (!rec.feasible) throw Unconverged{"analysis infeasible: " + rec.infeasible_reason};
      if (!rec.converged) throw Unconverged{"MDA did not converge in " + std::to_string(rec.iterations) + " iterations"};
      return ok;
    }

    if (*doe_run) {
      auto study = load_case_study(common.data_dir, load_constants(common));
      auto problem = case_study_problem(study);
      auto samples = evaluate_doe(problem, lhs_sample(problem.space, n_points, seed));
      write_file(out_file, doe_csv(problem.space, samples));
      auto count = [&](auto pred) { return std::count_if(samples.begin(), samples.end(), pred); };
      out << samples.size() << " evaluations, " << count([](const Sample& s) { return s.feasible; }) << " feasible, "
          << count([](const Sample& s) { return !s.result.ok; }) << " failed analyses\nwrote " << out_file << "\n";
      return ok;
    }

    if (*opt_run) {
      auto study = load_case_study(common.data_dir, load_constants(common));
      auto problem = case_study_problem(study);
      auto rep = run_optimization(problem, n_init, budget, seed);
      write_file(out_file, report_json(problem, rep, n_init));
      if (!doe_out.empty()) write_file(doe_out, doe_csv(problem.space, rep.samples));
      out << "wrote " << out_file << "\n";
      if (rep.no_feasible()) throw Unconverged{"no feasible design in " + std::to_string(budget) + " evaluations"};
      const Sample& b = rep.samples[*rep.best];
      out << "best fuelSaved " << number(b.result.objective) << " kg at";
      for (std::size_t k = 0; k < problem.space.dim(); ++k) {
        out << " " << problem.space.variables[k].name << "=" << number(b.x(static_cast<Eigen::Index>(k)));
      }
      out << "\n";
      return ok;
    }

    if (*sens_run) {
      auto space = case_study_space();
      auto table = read_doe(doe_file, space);
      auto model = KrigingModel::fit(space, table.x, table.y);
      auto res = sobol_indices([&](const Eigen::VectorXd& x) { return model.mean(x); }, space, n_sobol, seed);
      if (res.degenerate) err << "warning: objective variance is zero; all indices reported as 0\n";
      std::vector<SobolRow> rows;
      std::ostringstream csv;
      csv << "variable,S1\n";
      for (std::size_t k = 0; k < space.dim(); ++k) {
        rows.push_back({space.variables[k].name, res.first_order[k]});
        csv << space.variables[k].name << "," << number(res.first_order[k]) << "\n";
      }
      write_file(out_file, csv.str());
      out << "first-order indices from " << table.y.size() << " samples (most influential first):\n";
      for (std::size_t i : ranking(rows)) out << "  " << rows[i].variable << " " << fixed(rows[i].s1, 3) << "\n";
      out << "wrote " << out_file << "\n";
      return ok;
    }

    if (*cal_cmd) {
      Constants base = load_constants(common);
      if (data_file.empty()) data_file = (fs::path(common.data_dir) / "baseline.xml").string();
      Mission m = mission_from(read_tree_file(data_file), base);
      if (target == 0) target = base.target_mtow;
      Constants c = calibrate_baseline(m, baseline_geometry(base), target, base);
      c.target_mtow = target;
      auto check = baseline_fixed_point(baseline_geometry(c), m, c.without_sps(), *c.fixed_empty_fraction);
      out << "fixedEmptyFraction = " << number(*c.fixed_empty_fraction) << "\n";
      if (check.feasible()) out << "baseline mtow = " << number(check->mtow) << " kg (target " << number(target) << ")\n";
      if (!cal_out.empty()) {
        write_file(cal_out, serialize_constants(c));
        out << "wrote " << cal_out << "\n";
      }
      return ok;
    }

    if (*report_cmd) {
      json report;
      try {
        report = json::parse(read_file(report_file));
      } catch (const json::parse_error& e) {
        throw ParseError(report_file + ": " + e.what(), 0, 0);
      }
      std::vector<SobolRow> rows;
      if (!sobol_file.empty()) rows = read_sobol(sobol_file);
      out << report_text(report, report_file, sobol_file.empty() ? nullptr : &rows);
      if (!svg_file.empty()) {
        write_file(svg_file, sobol_svg(rows));
        out << "wrote " << svg_file << "\n";
      }
      return ok;
    }

    if (*baseline_cmd) {
      Constants c = load_constants(common);
      auto cat = load_catalogue(competence_dir(common, ""), err);
      auto study = make_case_study(cat.specs, c.without_sps(), baseline_inputs(c));
      auto rec = run_mda(study.run, study.inputs);
      if (!rec.converged) throw Unconverged{"baseline MDA did not converge"};
      write_file(out_file, serialize_tree(rec.final_tree.with_version(0)));
      out << "baseline converged in " << rec.iterations << " iterations, mtow "
          << number(get_real(rec.final_tree, paths::mtow)) << " kg\nwrote " << out_file << "\n";
      return ok;
    }

    if (*stubs_cmd) {
      auto tree = read_tree_file(data_file);
      auto cat = load_catalogue(competence_dir(common, tools_dir), err);
      fs::create_directories(stubs_dir);
      for (const auto& spec : cat.specs) {
        ParameterTree stub(tree.root_name(), tree.version());
        for (const auto* group : {&spec.inputs, &spec.outputs}) {
          for (const auto& p : *group) {
            const auto& entry = tree.entries().find(p);
            if (entry == tree.entries().end()) throw NotFoundError(data_file + " lacks " + p.str(), "");
            stub = set_value(stub, p, entry->second.value, entry->second.provenance);
          }
        }
        auto file = (fs::path(stubs_dir) / (spec.name + ".xml")).string();
        write_file(file, serialize_tree(stub));
        out << "wrote " << file << " (" << stub.size() << " parameters)\n";
      }
      return ok;
    }
  } catch (const Unconverged& u) {
    err << "error: " << u.message << "\n";
    return unconverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return invalid;
  }
  err << app.help();
  return usage;
}

}  // namespace mdao::cli
