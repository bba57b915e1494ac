#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mdao/formalize.hpp"
#include "mdao/xml.hpp"

namespace mdao {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string attr(std::string_view s) { return xml::escape(s, true); }

}  // namespace

std::string export_workflow(const WorkflowPlan* plan, const ProblemGraph& graph) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<workflow stage=\"" << to_string(graph.stage) << "\"";
  if (plan) out << " pattern=\"converged-mda-gs\"";
  out << ">\n";

  out << "  <competences>\n";
  for (const auto& c : graph.competences) {
    out << "    <competence name=\"" << attr(c.name) << "\" owner=\"" << attr(c.owner) << "\">\n";
    if (!c.description.empty()) out << "      <description>" << xml::escape(c.description, false) << "</description>\n";
    for (const auto& p : c.inputs) out << "      <in>" << p.str() << "</in>\n";
    for (const auto& p : c.outputs) out << "      <out>" << p.str() << "</out>\n";
    out << "    </competence>\n";
  }
  out << "  </competences>\n";

  if (!graph.collisions.empty()) {
    out << "  <collisions>\n";
    for (const auto& [path, producers] : graph.collisions) {
      out << "    <collision path=\"" << path.str() << "\">\n";
      for (const auto& p : producers) out << "      <producer>" << xml::escape(p, false) << "</producer>\n";
      out << "    </collision>\n";
    }
    out << "  </collisions>\n";
  }

  if (graph.objective || !graph.design_variables.empty() || !graph.constraint_outputs.empty()) {
    out << "  <problem>\n";
    if (graph.objective) out << "    <objective>" << graph.objective->str() << "</objective>\n";
    for (const auto& p : graph.design_variables) out << "    <designVariable>" << p.str() << "</designVariable>\n";
    for (const auto& p : graph.constraint_outputs) out << "    <constraint>" << p.str() << "</constraint>\n";
    out << "  </problem>\n";
  }

  if (plan) {
    out << "  <steps>\n";
    for (const auto& s : plan->ordered_steps) out << "    <step name=\"" << attr(s) << "\"/>\n";
    out << "  </steps>\n";
    out << "  <mdaLoop>\n";
    for (const auto& s : plan->mda_loop) out << "    <step name=\"" << attr(s) << "\"/>\n";
    out << "  </mdaLoop>\n";
    out << "  <convergence tolerance=\"" << format_double(plan->tolerance) << "\" maxIterations=\""
        << plan->max_iterations << "\">\n";
    for (const auto& p : plan->convergence_vars) out << "    <variable>" << p.str() << "</variable>\n";
    out << "  </convergence>\n";
    out << "  <wrapper kind=\"" << to_string(plan->wrapper) << "\"/>\n";
  }
  if (!graph.feedback_edges.empty() || plan) {
    out << "  <feedback>\n";
    for (const auto& e : graph.feedback_edges) {
      out << "    <edge from=\"" << e.parameter.str() << "\" to=\"" << attr(e.competence) << "\"/>\n";
    }
    out << "  </feedback>\n";
  }
  out << "</workflow>\n";
  return out.str();
}

namespace {

class Importer {
 public:
  WorkflowDocument run(const xml::Element& root) {
    if (root.name != "workflow") fail("workflow", "expected <workflow> root, found <" + root.name + ">");
    WorkflowDocument doc;
    ProblemGraph& g = doc.graph;
    g.stage = parse_stage_at("workflow/@stage", required(root, "stage", "workflow"));

    const xml::Element* comps = root.child("competences");
    if (!comps) fail("workflow/competences", "missing element");
    for (const auto& c : comps->children) {
      const std::string where = "workflow/competences/" + c.name;
      if (c.name != "competence") fail(where, "unexpected element");
      CompetenceSpec spec;
      spec.name = required(c, "name", where);
      spec.owner = c.attribute("owner").value_or("");
      for (const auto& item : c.children) {
        const std::string iw = where + "[@name='" + spec.name + "']/" + item.name;
        if (item.name == "in") {
          spec.inputs.insert(path_at(iw, item.trimmed_text()));
        } else if (item.name == "out") {
          spec.outputs.insert(path_at(iw, item.trimmed_text()));
        } else if (item.name == "description") {
          spec.description = item.trimmed_text();
        } else {
          fail(iw, "unexpected element");
        }
      }
      try {
        validate(spec);
      } catch (const DomainError& e) {
        fail(where, e.what());
      }
      if (g.find(spec.name)) fail(where, "duplicate competence '" + spec.name + "'");
      g.competences.push_back(std::move(spec));
    }
    std::sort(g.competences.begin(), g.competences.end(), [](const auto& a, const auto& b) { return a.name < b.name; });

    if (const xml::Element* cols = root.child("collisions")) {
      for (const auto* col : cols->children_named("collision")) {
        auto p = path_at("workflow/collisions/collision/@path", required(*col, "path", "workflow/collisions/collision"));
        std::vector<std::string> producers;
        for (const auto* pr : col->children_named("producer")) producers.push_back(known(pr->trimmed_text(), g, "workflow/collisions/collision/producer"));
        g.collisions.emplace(p, std::move(producers));
      }
    }

    if (const xml::Element* prob = root.child("problem")) {
      for (const auto& item : prob->children) {
        const std::string where = "workflow/problem/" + item.name;
        if (item.name == "objective") {
          g.objective = path_at(where, item.trimmed_text());
        } else if (item.name == "designVariable") {
          g.design_variables.insert(path_at(where, item.trimmed_text()));
        } else if (item.name == "constraint") {
          g.constraint_outputs.insert(path_at(where, item.trimmed_text()));
        } else {
          fail(where, "unexpected element");
        }
      }
    }

    if (const xml::Element* fb = root.child("feedback")) {
      for (const auto& e : fb->children) {
        const std::string where = "workflow/feedback/" + e.name;
        if (e.name != "edge") fail(where, "unexpected element");
        ParameterEdge edge{path_at(where + "/@from", required(e, "from", where)),
                           known(required(e, "to", where), g, where + "/@to")};
        const CompetenceSpec* consumer = g.find(edge.competence);
        if (!consumer->inputs.count(edge.parameter)) {
          fail(where, "'" + edge.competence + "' does not consume '" + edge.parameter.str() + "'");
        }
        g.feedback_edges.insert(std::move(edge));
      }
    }

    const xml::Element* steps = root.child("steps");
    if (steps) {
      WorkflowPlan plan;
      for (const auto& s : steps->children) {
        if (s.name != "step") fail("workflow/steps/" + s.name, "unexpected element");
        plan.ordered_steps.push_back(known(required(s, "name", "workflow/steps/step"), g, "workflow/steps/step/@name"));
      }
      if (const xml::Element* loop = root.child("mdaLoop")) {
        for (const auto& s : loop->children) {
          if (s.name != "step") fail("workflow/mdaLoop/" + s.name, "unexpected element");
          std::string n = known(required(s, "name", "workflow/mdaLoop/step"), g, "workflow/mdaLoop/step/@name");
          if (std::find(plan.ordered_steps.begin(), plan.ordered_steps.end(), n) == plan.ordered_steps.end()) {
            fail("workflow/mdaLoop/step", "loop member '" + n + "' is not a workflow step");
          }
          plan.mda_loop.push_back(std::move(n));
        }
      }
      const xml::Element* conv = root.child("convergence");
      if (!conv) fail("workflow/convergence", "missing element");
      plan.tolerance = number_at("workflow/convergence/@tolerance", required(*conv, "tolerance", "workflow/convergence"));
      double iters = number_at("workflow/convergence/@maxIterations",
                               required(*conv, "maxIterations", "workflow/convergence"));
      if (!(plan.tolerance > 0)) fail("workflow/convergence/@tolerance", "must be positive");
      if (iters < 1 || iters != std::floor(iters)) fail("workflow/convergence/@maxIterations", "must be a positive integer");
      plan.max_iterations = static_cast<int>(iters);
      for (const auto* v : conv->children_named("variable")) {
        plan.convergence_vars.insert(path_at("workflow/convergence/variable", v->trimmed_text()));
      }
      if (const xml::Element* w = root.child("wrapper")) {
        try {
          plan.wrapper = parse_wrapper(required(*w, "kind", "workflow/wrapper"));
        } catch (const DomainError& e) {
          fail("workflow/wrapper/@kind", e.what());
        }
      }
      for (const auto& v : plan.convergence_vars) {
        bool produced = false;
        for (const auto& m : plan.mda_loop) produced = produced || g.find(m)->outputs.count(v);
        if (!produced) fail("workflow/convergence/variable", "'" + v.str() + "' is not an output of an MDA loop member");
      }
      doc.plan = std::move(plan);
    }
    return doc;
  }

 private:
  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw StructuralError("workflow schema violation at " + where + ": " + what);
  }

  static std::string required(const xml::Element& e, std::string_view key, const std::string& where) {
    auto v = e.attribute(key);
    if (!v) fail(where, "missing attribute '" + std::string(key) + "'");
    return *v;
  }

  static ParameterPath path_at(const std::string& where, const std::string& text) {
    try {
      return ParameterPath(text);
    } catch (const DomainError& e) {
      fail(where, e.what());
    }
  }

  static double number_at(const std::string& where, const std::string& text) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) fail(where, "'" + text + "' is not a number");
    return v;
  }

  static GraphStage parse_stage_at(const std::string& where, const std::string& text) {
    try {
      return parse_stage(text);
    } catch (const DomainError& e) {
      fail(where, e.what());
    }
  }

  static std::string known(const std::string& name, const ProblemGraph& g, const std::string& where) {
    if (!g.find(name)) fail(where, "unknown competence '" + name + "'");
    return name;
  }
};

}  // namespace

WorkflowDocument import_workflow(std::string_view xml_text) { return Importer{}.run(xml::parse(xml_text)); }

std::map<ParameterPath, std::string> parse_choices(std::string_view xml_text) {
  xml::Element root = xml::parse(xml_text);
  if (root.name != "choices") throw StructuralError("choices: root element must be <choices>, found <" + root.name + ">");
  std::map<ParameterPath, std::string> out;
  for (const auto& c : root.children) {
    if (c.name != "choice") throw StructuralError("choices/" + c.name + ": unexpected element");
    auto path = c.attribute("path");
    auto competence = c.attribute("competence");
    if (!path || !competence) throw StructuralError("choices/choice: needs path and competence attributes");
    if (!out.emplace(ParameterPath(*path), *competence).second) {
      throw StructuralError("choices/choice: path '" + *path + "' chosen twice");
    }
  }
  return out;
}

std::string serialize_choices(const std::map<ParameterPath, std::string>& choices) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (choices.empty()) {
    out << "<choices/>\n";
    return out.str();
  }
  out << "<choices>\n";
  for (const auto& [path, competence] : choices) {
    out << "  <choice path=\"" << attr(path.str()) << "\" competence=\"" << attr(competence) << "\"/>\n";
  }
  out << "</choices>\n";
  return out.str();
}

}  // namespace mdao
