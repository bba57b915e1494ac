#include <algorithm>
#include <sstream>

#include "mdao/formalize.hpp"

namespace mdao {

namespace {

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string competence_id(const std::string& name) { return quoted("c:" + name); }
std::string parameter_id(const ParameterPath& p) { return quoted("p:" + p.str()); }

}  // namespace

std::string export_dot(const ProblemGraph& graph) {
  std::ostringstream out;
  out << "digraph " << to_string(graph.stage) << " {\n";
  if (graph.competences.empty()) {
    out << "}\n";
    return out.str();
  }
  out << "  rankdir=LR;\n";
  for (const auto& c : graph.competences) {
    out << "  " << competence_id(c.name) << " [shape=box, label=" << quoted(c.name) << "];\n";
  }
  for (const auto& p : graph.parameters()) {
    out << "  " << parameter_id(p) << " [shape=ellipse, label=" << quoted(p.str());
    if (graph.objective && *graph.objective == p) {
      out << ", peripheries=2";
    } else if (graph.design_variables.count(p)) {
      out << ", style=filled, fillcolor=lightgrey";
    } else if (graph.collisions.count(p)) {
      out << ", color=red";
    }
    out << "];\n";
  }
  for (const auto& e : graph.output_edges()) {
    out << "  " << competence_id(e.competence) << " -> " << parameter_id(e.parameter) << ";\n";
  }
  for (const auto& e : graph.input_edges()) {
    out << "  " << parameter_id(e.parameter) << " -> " << competence_id(e.competence);
    if (graph.feedback_edges.count(e)) out << " [style=dashed]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string export_matrix(const ProblemGraph& graph, const std::vector<std::string>& order_in) {
  std::vector<std::string> order = order_in.empty() ? competence_names(graph) : order_in;
  const std::size_t n = order.size();
  std::vector<std::vector<std::string>> cells(n, std::vector<std::string>(n, "."));
  for (std::size_t r = 0; r < n; ++r) {
    const CompetenceSpec* consumer = graph.find(order[r]);
    if (!consumer) throw DomainError("matrix order names unknown competence '" + order[r] + "'");
    cells[r][r] = "[" + consumer->name + "]";
    for (std::size_t c = 0; c < n; ++c) {
      if (c == r) continue;
      const CompetenceSpec* producer = graph.find(order[c]);
      if (!producer) throw DomainError("matrix order names unknown competence '" + order[c] + "'");
      std::string cell;
      for (const auto& p : consumer->inputs) {
        if (!producer->outputs.count(p)) continue;
        if (!cell.empty()) cell += ",";
        cell += p.leaf_name();
      }
      if (!cell.empty()) cells[r][c] = cell;
    }
  }
  std::vector<std::size_t> width(n, 1);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) width[c] = std::max(width[c], cells[r][c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (c) out << " | ";
      out << cells[r][c];
      if (c + 1 < n) out << std::string(width[c] - cells[r][c].size(), ' ');
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace mdao
