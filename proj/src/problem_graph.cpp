#include <algorithm>
#include <deque>
#include <functional>
#include <queue>

#include "mdao/formalize.hpp"

namespace mdao {

std::string_view to_string(GraphStage stage) {
  switch (stage) {
    case GraphStage::rcg: return "RCG";
    case GraphStage::fpg: return "FPG";
    case GraphStage::architected: return "ARCHITECTED";
  }
  return "?";
}

GraphStage parse_stage(std::string_view text) {
  if (text == "RCG") return GraphStage::rcg;
  if (text == "FPG") return GraphStage::fpg;
  if (text == "ARCHITECTED") return GraphStage::architected;
  throw DomainError("unknown graph stage '" + std::string(text) + "'");
}

std::string_view to_string(WrapperKind kind) {
  switch (kind) {
    case WrapperKind::none: return "none";
    case WrapperKind::doe: return "doe";
    case WrapperKind::optimizer: return "optimizer";
  }
  return "?";
}

WrapperKind parse_wrapper(std::string_view text) {
  if (text == "none") return WrapperKind::none;
  if (text == "doe") return WrapperKind::doe;
  if (text == "optimizer") return WrapperKind::optimizer;
  throw DomainError("unknown wrapper kind '" + std::string(text) + "'");
}

std::set<ParameterPath> ProblemGraph::parameters() const {
  std::set<ParameterPath> out;
  for (const auto& c : competences) {
    out.insert(c.inputs.begin(), c.inputs.end());
    out.insert(c.outputs.begin(), c.outputs.end());
  }
  return out;
}

std::set<ParameterEdge> ProblemGraph::input_edges() const {
  std::set<ParameterEdge> out;
  for (const auto& c : competences) {
    for (const auto& p : c.inputs) out.insert({p, c.name});
  }
  return out;
}

std::set<ParameterEdge> ProblemGraph::output_edges() const {
  std::set<ParameterEdge> out;
  for (const auto& c : competences) {
    for (const auto& p : c.outputs) out.insert({p, c.name});
  }
  return out;
}

const CompetenceSpec* ProblemGraph::find(std::string_view name) const {
  for (const auto& c : competences) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<std::string> ProblemGraph::producers(const ParameterPath& p) const {
  std::vector<std::string> out;
  for (const auto& c : competences) {
    if (c.outputs.count(p)) out.push_back(c.name);
  }
  return out;
}

ProblemGraph build_rcg(std::vector<CompetenceSpec> specs) {
  if (specs.empty()) throw DomainError("a repository graph needs at least one competence");
  std::sort(specs.begin(), specs.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 0; i < specs.size(); ++i) {
    validate(specs[i]);
    if (i && specs[i].name == specs[i - 1].name) throw DomainError("duplicate competence name '" + specs[i].name + "'");
  }
  ProblemGraph g;
  g.stage = GraphStage::rcg;
  g.competences = std::move(specs);
  for (const auto& p : g.parameters()) {
    auto prod = g.producers(p);
    if (prod.size() > 1) g.collisions.emplace(p, std::move(prod));
  }
  return g;
}

ProblemGraph build_fpg(const ProblemGraph& rcg, const ParameterPath& objective,
                       const std::set<ParameterPath>& design_variables,
                       const std::set<ParameterPath>& constraint_outputs,
                       const std::map<ParameterPath, std::string>& collision_choices) {
  // Resolve collisions by trimming the outputs of the losing producers.
  std::vector<CompetenceSpec> specs = rcg.competences;
  for (const auto& [path, producers] : rcg.collisions) {
    auto it = collision_choices.find(path);
    if (it == collision_choices.end()) {
      std::string names;
      for (const auto& p : producers) names += (names.empty() ? "" : ", ") + p;
      throw DomainError("unresolved competence collision on '" + path.str() + "' (producers: " + names + ")");
    }
    if (std::find(producers.begin(), producers.end(), it->second) == producers.end()) {
      throw DomainError("collision choice '" + it->second + "' does not produce '" + path.str() + "'");
    }
    for (auto& s : specs) {
      if (s.name != it->second) s.outputs.erase(path);
    }
  }

  ProblemGraph resolved;
  resolved.competences = specs;
  if (resolved.producers(objective).empty()) {
    throw DomainError("objective '" + objective.str() + "' is not produced by any competence");
  }
  for (const auto& c : constraint_outputs) {
    if (resolved.producers(c).empty()) {
      throw DomainError("constraint output '" + c.str() + "' is not produced by any competence");
    }
  }

  // Backward reachability from the objective and constraint outputs.
  std::set<std::string> retained;
  std::set<ParameterPath> visited;
  std::deque<ParameterPath> frontier;
  frontier.push_back(objective);
  for (const auto& c : constraint_outputs) frontier.push_back(c);
  while (!frontier.empty()) {
    ParameterPath p = frontier.front();
    frontier.pop_front();
    if (!visited.insert(p).second) continue;
    for (const auto& s : specs) {
      if (!s.outputs.count(p) || !retained.insert(s.name).second) continue;
      for (const auto& in : s.inputs) frontier.push_back(in);
    }
  }

  ProblemGraph fpg;
  fpg.stage = GraphStage::fpg;
  for (auto& s : specs) {
    if (!retained.count(s.name)) continue;
    if (s.outputs.empty()) continue;
    fpg.competences.push_back(s);
  }
  for (const auto& dv : design_variables) {
    auto prod = fpg.producers(dv);
    if (!prod.empty()) {
      throw DomainError("design variable '" + dv.str() + "' is produced by competence '" + prod.front() + "'");
    }
  }
  fpg.objective = objective;
  fpg.design_variables = design_variables;
  fpg.constraint_outputs = constraint_outputs;
  return fpg;
}

namespace {

using Adjacency = std::map<std::string, std::set<std::string>>;

// Competence coupling projection: a -> b when b consumes an output of a.
Adjacency coupling(const ProblemGraph& g, const std::set<ParameterEdge>& cut = {}) {
  Adjacency adj;
  for (const auto& c : g.competences) adj[c.name];
  for (const auto& consumer : g.competences) {
    for (const auto& p : consumer.inputs) {
      if (cut.count({p, consumer.name})) continue;
      for (const auto& producer : g.producers(p)) adj[producer].insert(consumer.name);
    }
  }
  return adj;
}

// Tarjan's strongly connected components; components come out with members sorted.
std::vector<std::vector<std::string>> strongly_connected(const Adjacency& adj) {
  std::map<std::string, int> index, low;
  std::set<std::string> on_stack;
  std::vector<std::string> stack;
  std::vector<std::vector<std::string>> out;
  int counter = 0;
  std::function<void(const std::string&)> visit = [&](const std::string& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto& w : adj.at(v)) {
      if (!index.count(w)) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.count(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::string> comp;
      std::string w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (const auto& [v, _] : adj) {
    if (!index.count(v)) visit(v);
  }
  return out;
}

// Kahn's algorithm restricted to `nodes`, lexicographic tie-break. Returns
// the order and leaves unplaced nodes (cycle members) out of it.
std::vector<std::string> kahn(const std::set<std::string>& nodes, const Adjacency& adj) {
  std::map<std::string, int> indegree;
  for (const auto& n : nodes) indegree[n] = 0;
  for (const auto& n : nodes) {
    for (const auto& m : adj.at(n)) {
      if (nodes.count(m)) ++indegree[m];
    }
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [n, d] : indegree) {
    if (d == 0) ready.push(n);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string n = ready.top();
    ready.pop();
    order.push_back(n);
    for (const auto& m : adj.at(n)) {
      if (nodes.count(m) && --indegree[m] == 0) ready.push(m);
    }
  }
  return order;
}

}  // namespace

ArchitectedProblem apply_architecture(const ProblemGraph& fpg, const ArchitectureOptions& options) {
  if (options.pattern != "converged-mda-gs") {
    throw DomainError("unsupported architecture pattern '" + options.pattern + "' (supported: converged-mda-gs)");
  }
  if (fpg.stage != GraphStage::fpg) throw DomainError("architecture requires an FPG-stage graph");
  if (!(options.tolerance > 0)) throw DomainError("convergence tolerance must be positive");
  if (options.max_iterations < 1) throw DomainError("maxIterations must be at least 1");

  const Adjacency full = coupling(fpg);
  auto components = strongly_connected(full);
  std::vector<std::vector<std::string>> loops;
  for (const auto& comp : components) {
    if (comp.size() > 1) loops.push_back(comp);
  }
  if (loops.size() > 1) {
    throw DomainError("converged-mda-gs supports a single coupled group; found " + std::to_string(loops.size()));
  }

  std::set<ParameterEdge> feedback;
  std::vector<std::string> loop_order;
  if (!loops.empty()) {
    std::set<std::string> members(loops.front().begin(), loops.front().end());
    std::string head = members.count(options.loop_head) ? options.loop_head : *members.begin();
    // Cut every intra-loop edge into the current head, then order the rest.
    // Should another cycle survive, the smallest remaining member becomes the
    // next head.
    std::set<std::string> remaining = members;
    while (!remaining.empty()) {
      for (const auto& p : fpg.find(head)->inputs) {
        for (const auto& producer : fpg.producers(p)) {
          if (remaining.count(producer)) feedback.insert({p, head});
        }
      }
      Adjacency adj = coupling(fpg, feedback);
      std::vector<std::string> placed;
      placed.push_back(head);
      remaining.erase(head);
      // Nodes whose remaining predecessors are all placed can run now.
      auto order = kahn(remaining, adj);
      for (const auto& n : order) {
        placed.push_back(n);
        remaining.erase(n);
      }
      loop_order.insert(loop_order.end(), placed.begin(), placed.end());
      if (!remaining.empty()) head = *remaining.begin();
    }
  }

  // Condensation order: the loop is a single super node.
  const Adjacency cut = coupling(fpg, feedback);
  std::set<std::string> loop_members(loop_order.begin(), loop_order.end());
  const std::string loop_key = loop_order.empty() ? std::string{} : loop_order.front();
  Adjacency condensed;
  auto key = [&](const std::string& n) { return loop_members.count(n) ? loop_key : n; };
  for (const auto& [n, succ] : cut) {
    condensed[key(n)];
    for (const auto& m : succ) {
      if (key(m) != key(n)) condensed[key(n)].insert(key(m));
    }
  }
  std::set<std::string> supernodes;
  for (const auto& [n, _] : condensed) supernodes.insert(n);
  auto super_order = kahn(supernodes, condensed);
  if (super_order.size() != supernodes.size()) throw DomainError("internal error: condensation is not acyclic");

  ArchitectedProblem out;
  for (const auto& n : super_order) {
    if (!loop_order.empty() && n == loop_key) {
      out.plan.ordered_steps.insert(out.plan.ordered_steps.end(), loop_order.begin(), loop_order.end());
    } else {
      out.plan.ordered_steps.push_back(n);
    }
  }
  out.plan.mda_loop = loop_order;
  for (const auto& e : feedback) out.plan.convergence_vars.insert(e.parameter);
  out.plan.tolerance = options.tolerance;
  out.plan.max_iterations = options.max_iterations;
  out.plan.wrapper = options.wrapper;

  out.graph = fpg;
  out.graph.stage = GraphStage::architected;
  out.graph.feedback_edges = feedback;
  return out;
}

std::vector<std::string> competence_names(const ProblemGraph& graph) {
  std::vector<std::string> names;
  for (const auto& c : graph.competences) names.push_back(c.name);
  return names;
}

}  // namespace mdao
