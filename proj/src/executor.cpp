#include "mdao/executor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>

#include "json.hpp"

namespace mdao {

BoundRun plan_execution(const WorkflowPlan& plan, const ProblemGraph& graph, const CompetenceRegistry& registry) {
  BoundRun run;
  run.plan = plan;
  std::vector<std::string> missing;
  std::set<std::string> loop(plan.mda_loop.begin(), plan.mda_loop.end());
  std::map<std::string, BoundStep> bound;
  for (const auto& name : plan.ordered_steps) {
    auto fn = registry.find(name);
    const CompetenceSpec* spec = graph.find(name);
    if (fn == registry.end() || !spec) {
      missing.push_back(name);
      continue;
    }
    bound[name] = BoundStep{name, spec->outputs, fn->second};
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DomainError("no competence bound for plan step(s): " + list);
  }
  bool seen_loop = false;
  for (const auto& name : plan.ordered_steps) {
    if (loop.count(name)) {
      seen_loop = true;
    } else {
      (seen_loop ? run.after_loop : run.before_loop).push_back(bound.at(name));
    }
  }
  for (const auto& name : plan.mda_loop) {
    if (!bound.count(name)) throw DomainError("loop member '" + name + "' is not a plan step");
    run.loop.push_back(bound.at(name));
  }
  return run;
}

namespace {

Evaluation<ParameterTree> apply(const BoundStep& step, const ParameterTree& tree) {
  auto out = step.function(tree);
  if (!out.feasible()) return out;
  ParameterTree next = tree;
  for (const auto& [path, entry] : out->entries()) {
    if (!step.outputs.count(path)) continue;
    next = set_value(next, path, entry.value, entry.provenance ? entry.provenance : step.name);
  }
  return Evaluation<ParameterTree>::ok(std::move(next));
}

Evaluation<ParameterTree> apply_all(const std::vector<BoundStep>& steps, ParameterTree tree) {
  for (const auto& s : steps) {
    auto next = apply(s, tree);
    if (!next.feasible()) return next;
    tree = std::move(*next.value);
  }
  return Evaluation<ParameterTree>::ok(std::move(tree));
}

double value_or_zero(const ParameterTree& t, const ParameterPath& p) {
  auto v = find_value(t, p);
  return v ? v->as_real() : 0.0;
}

}  // namespace

Evaluation<ParameterTree> sweep(const BoundRun& run, const ParameterTree& tree) { return apply_all(run.loop, tree); }

double relative_change(const ParameterTree& before, const ParameterTree& after, const std::set<ParameterPath>& vars) {
  double worst = 0;
  for (const auto& p : vars) {
    double old = value_or_zero(before, p);
    worst = std::max(worst, std::abs(value_or_zero(after, p) - old) / std::max(std::abs(old), 1.0));
  }
  return worst;
}

std::string snapshot_state(const std::string& directory, int iteration, const ParameterTree& tree) {
  namespace fs = std::filesystem;
  fs::path dir = fs::path(directory) / "snapshots";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create snapshot directory '" + dir.string() + "': " + ec.message());
  fs::path file = dir / ("iter_" + std::to_string(iteration) + ".xml");
  write_tree_file(file.string(), tree.with_version(static_cast<std::uint64_t>(iteration)));
  return file.string();
}

RunRecord run_mda(const BoundRun& run, const ParameterTree& input, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.run_id = options.run_id;
  rec.final_tree = input;

  auto finish = [&]() -> RunRecord& {
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
  };
  auto snapshot = [&](int k, const ParameterTree& t) {
    if (options.directory.empty()) return;
    try {
      snapshot_state(options.directory, k, t);
    } catch (const Error& e) {
      rec.warnings.push_back(e.what());
    }
  };
  auto halt = [&](const Evaluation<ParameterTree>& failed) -> RunRecord& {
    rec.feasible = false;
    rec.converged = false;
    rec.infeasible_reason = failed.infeasible_reason;
    return finish();
  };

  if (run.plan.ordered_steps.empty()) {
    rec.converged = true;
    return finish();
  }

  auto pre = apply_all(run.before_loop, input);
  if (!pre.feasible()) return halt(pre);
  ParameterTree tree = std::move(*pre.value);

  if (run.loop.empty()) {
    auto post = apply_all(run.after_loop, tree);
    if (!post.feasible()) return halt(post);
    rec.iterations = 1;
    rec.converged = true;
    rec.final_tree = post->with_version(1);
    snapshot(1, rec.final_tree);
    return finish();
  }

  const auto& vars = run.plan.convergence_vars;
  for (const auto& p : vars) {
    if (!tree.contains(p)) tree = set_value(tree, p, ParameterValue::real(0));
  }

  ParameterTree best = tree;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= run.plan.max_iterations; ++k) {
    auto next = sweep(run, tree);
    if (!next.feasible()) {
      rec.iterations = k;
      rec.final_tree = tree;
      return halt(next);
    }
    ParameterTree updated = std::move(*next.value);
    if (options.relaxation != 1.0) {
      for (const auto& p : vars) {
        double old = value_or_zero(tree, p);
        auto fresh = get_value(updated, p);
        double relaxed = old + options.relaxation * (fresh.as_real() - old);
        updated = set_value(updated, p, ParameterValue::real(relaxed, fresh.unit()));
      }
    }
    double residual = relative_change(tree, updated, vars);
    tree = updated.with_version(static_cast<std::uint64_t>(k));
    rec.iterations = k;
    rec.residual_history.push_back(residual);
    snapshot(k, tree);
    if (residual < best_residual) {
      best_residual = residual;
      best = tree;
    }
    if (residual <= run.plan.tolerance) {
      rec.converged = true;
      break;
    }
  }

  auto post = apply_all(run.after_loop, rec.converged ? tree : best);
  if (!post.feasible()) return halt(post);
  rec.final_tree = std::move(*post.value);
  return finish();
}

std::string run_log_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["runId"] = r.run_id;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["feasible"] = r.feasible;
  j["infeasibleReason"] = r.infeasible_reason;
  j["residualHistory"] = r.residual_history;
  j["wallTime"] = r.wall_time;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (const auto& [path, entry] : r.final_tree.entries()) {
    const auto& v = entry.value;
    if (v.kind() == ValueKind::real || v.kind() == ValueKind::integer) values[path.str()] = v.as_real();
  }
  j["finalValues"] = values;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

}  // namespace mdao
