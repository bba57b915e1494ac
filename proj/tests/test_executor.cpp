#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "mdao/case_study.hpp"

using namespace mdao;
namespace fs = std::filesystem;

namespace {

const std::vector<CompetenceSpec>& shipped_specs() {
  static const auto specs = load_competence_dir(MDAO_DATA_DIR "/competences").specs;
  return specs;
}

CaseStudy zero_sps_study() { return make_case_study(shipped_specs(), Constants{}.without_sps(), baseline_inputs(Constants{})); }

CaseStudy sps_study() { return make_case_study(shipped_specs(), Constants{}, baseline_inputs(Constants{})); }

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("mdao_executor_" + name);
  fs::remove_all(dir);
  return dir;
}

std::set<ParameterPath> loop_outputs(const BoundRun& run) {
  std::set<ParameterPath> out;
  for (const auto& s : run.loop) out.insert(s.outputs.begin(), s.outputs.end());
  return out;
}

CompetenceSpec spec(std::string name, std::vector<std::string> in, std::vector<std::string> out) {
  CompetenceSpec s;
  s.name = std::move(name);
  for (auto& p : in) s.inputs.insert(ParameterPath(p));
  for (auto& p : out) s.outputs.insert(ParameterPath(p));
  return s;
}

CompetenceFunction constant_output(const std::string& path, double value, int* calls) {
  return [=](const ParameterTree&) {
    ++*calls;
    return Evaluation<ParameterTree>::ok(set_value(ParameterTree{}, ParameterPath(path), ParameterValue::real(value)));
  };
}

}  // namespace

TEST_CASE("plan_execution binds steps and reports missing ones") {
  auto study = sps_study();
  CHECK(study.run.before_loop.size() == 1);
  CHECK(study.run.before_loop[0].name == "calibration");
  REQUIRE(study.run.loop.size() == 4);
  CHECK(study.run.loop[0].name == "sizing");
  CHECK(study.run.after_loop.empty());

  SUBCASE("unregistered step is named") {
    auto plan = study.problem.plan;
    auto graph = study.problem.graph;
    graph.competences.push_back(spec("ghost", {"cpacs/vehicle/weights/mtow"}, {"cpacs/vehicle/ghost/value"}));
    plan.ordered_steps.push_back("ghost");
    try {
      plan_execution(plan, graph, case_study_registry(Constants{}));
      FAIL("expected an error");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
  SUBCASE("several missing steps are all listed") {
    CompetenceRegistry partial = case_study_registry(Constants{});
    partial.erase("sps");
    partial.erase("propulsion");
    try {
      plan_execution(study.problem.plan, study.problem.graph, partial);
      FAIL("expected an error");
    } catch (const DomainError& e) {
      std::string msg = e.what();
      CHECK(msg.find("sps") != std::string::npos);
      CHECK(msg.find("propulsion") != std::string::npos);
    }
  }
}

TEST_CASE("empty plan returns the input tree") {
  auto rec = run_mda(plan_execution(WorkflowPlan{}, ProblemGraph{}, {}), baseline_inputs(Constants{}));
  CHECK(rec.converged);
  CHECK(rec.iterations == 0);
  CHECK(rec.final_tree == baseline_inputs(Constants{}));
}

TEST_CASE("zero-SPS configuration converges to the calibrated baseline") {
  Constants c = Constants{}.without_sps();
  auto study = zero_sps_study();
  auto rec = run_mda(study.run, study.inputs);
  REQUIRE(rec.feasible);
  CHECK(rec.converged);
  CHECK(rec.iterations <= 50);
  CHECK(rec.residual_history.size() == static_cast<std::size_t>(rec.iterations));
  CHECK(rec.residual_history.back() <= study.problem.plan.tolerance);
  CHECK(rec.final_tree.version() == static_cast<std::uint64_t>(rec.iterations));
  CHECK(get_real(rec.final_tree, paths::fuel_saved) == 0.0);

  double mtow = get_real(rec.final_tree, paths::mtow);
  CHECK(std::abs(mtow - c.target_mtow) / c.target_mtow < 1e-3);

  // The standalone fixed point with the same calibrated fraction is an
  // independent route to the same aircraft.
  double fraction = get_real(rec.final_tree, paths::empty_mass_fraction);
  auto fp = baseline_fixed_point(baseline_geometry(c), Mission{}, c, fraction);
  REQUIRE(fp.feasible());
  CHECK(std::abs(mtow - fp->mtow) / fp->mtow < 1e-5);
  CHECK(std::abs(fp->mtow - c.target_mtow) / c.target_mtow < 1e-6);
  MESSAGE("zero-SPS MDA iterations: " << rec.iterations);
}

TEST_CASE("iteration cap stops an unconverged run") {
  auto study = zero_sps_study();
  study.run.plan.max_iterations = 1;
  auto rec = run_mda(study.run, study.inputs);
  CHECK_FALSE(rec.converged);
  CHECK(rec.feasible);
  CHECK(rec.iterations == 1);
  CHECK(rec.residual_history.size() == 1);
  CHECK(rec.final_tree.version() == 1);
}

TEST_CASE("snapshots are versioned, parseable and touch only loop outputs") {
  auto study = sps_study();
  study.run.plan.max_iterations = 3;
  auto dir = fresh_dir("snapshots");
  RunOptions opt;
  opt.directory = dir.string();
  auto rec = run_mda(study.run, study.inputs, opt);
  REQUIRE(rec.iterations == 3);
  CHECK(rec.warnings.empty());

  std::vector<ParameterTree> snaps;
  for (int k = 1; k <= 3; ++k) {
    auto file = dir / "snapshots" / ("iter_" + std::to_string(k) + ".xml");
    REQUIRE(fs::exists(file));
    snaps.push_back(read_tree_file(file.string()));
    CHECK(snaps.back().version() == static_cast<std::uint64_t>(k));
  }
  CHECK_FALSE(fs::exists(dir / "snapshots" / "iter_4.xml"));
  CHECK(snaps[2] == rec.final_tree);

  for (int k = 1; k <= 3; ++k) {
    auto capped = study.run;
    capped.plan.max_iterations = k;
    CHECK(run_mda(capped, study.inputs).final_tree == snaps[static_cast<std::size_t>(k - 1)]);
  }

  auto allowed = loop_outputs(study.run);
  for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
    auto changed = changed_paths(snaps[k], snaps[k + 1]);
    CHECK_FALSE(changed.empty());
    for (const auto& p : changed) CHECK_MESSAGE(allowed.count(p), p.str());
  }
  fs::remove_all(dir);
}

TEST_CASE("unwritable run directory leaves the run in memory") {
  auto dir = fresh_dir("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  auto study = zero_sps_study();
  RunOptions opt;
  opt.directory = (dir / "file" / "run").string();
  auto rec = run_mda(study.run, study.inputs, opt);
  CHECK(rec.converged);
  CHECK_FALSE(rec.warnings.empty());
  CHECK(rec.final_tree.same_content(run_mda(study.run, study.inputs).final_tree));
  fs::remove_all(dir);
}

TEST_CASE("identical inputs give identical records") {
  auto study = sps_study();
  auto a = run_mda(study.run, study.inputs);
  auto b = run_mda(study.run, study.inputs);
  CHECK(a.final_tree == b.final_tree);
  CHECK(a.residual_history == b.residual_history);
  CHECK(a.iterations == b.iterations);
  auto ja = nlohmann::json::parse(run_log_json(a));
  auto jb = nlohmann::json::parse(run_log_json(b));
  ja.erase("wallTime");
  jb.erase("wallTime");
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("converged tree is a fixed point of one more sweep") {
  for (auto study : {zero_sps_study(), sps_study()}) {
    auto rec = run_mda(study.run, study.inputs);
    REQUIRE(rec.converged);
    auto again = sweep(study.run, rec.final_tree);
    REQUIRE(again.feasible());
    CHECK(relative_change(rec.final_tree, *again, study.run.plan.convergence_vars) <= 1e-6);
  }
}

TEST_CASE("feed-forward plan completes in exactly one sweep") {
  auto graph = build_rcg({spec("a", {"cpacs/x"}, {"cpacs/y"}), spec("b", {"cpacs/y"}, {"cpacs/z"})});
  auto arch = apply_architecture(build_fpg(graph, ParameterPath("cpacs/z"), {ParameterPath("cpacs/x")}, {}, {}));
  CHECK(arch.plan.mda_loop.empty());
  int calls_a = 0, calls_b = 0;
  CompetenceRegistry reg;
  reg["a"] = constant_output("cpacs/y", 2, &calls_a);
  reg["b"] = constant_output("cpacs/z", 3, &calls_b);
  auto rec = run_mda(plan_execution(arch.plan, arch.graph, reg),
                     set_value(ParameterTree{}, ParameterPath("cpacs/x"), ParameterValue::real(1)));
  CHECK(rec.converged);
  CHECK(rec.iterations == 1);
  CHECK(calls_a == 1);
  CHECK(calls_b == 1);
  CHECK(get_real(rec.final_tree, ParameterPath("cpacs/z")) == 3);
  CHECK(rec.final_tree.version() == 1);
}

TEST_CASE("under-relaxation reaches the same fixed point") {
  auto study = sps_study();
  auto plain = run_mda(study.run, study.inputs);
  RunOptions opt;
  opt.relaxation = 0.8;
  study.run.plan.max_iterations = 200;
  auto relaxed = run_mda(study.run, study.inputs, opt);
  REQUIRE(plain.converged);
  REQUIRE(relaxed.converged);
  double a = get_real(plain.final_tree, paths::mtow);
  double b = get_real(relaxed.final_tree, paths::mtow);
  CHECK(std::abs(a - b) / a < 1e-4);
}

TEST_CASE("infeasible discipline halts the loop") {
  auto study = sps_study();
  int calls = 0;
  for (auto& s : study.run.loop) {
    if (s.name != "sps") continue;
    s.function = [&calls](const ParameterTree&) {
      ++calls;
      return Evaluation<ParameterTree>::infeasible("panel layout impossible");
    };
  }
  auto rec = run_mda(study.run, study.inputs);
  CHECK_FALSE(rec.feasible);
  CHECK_FALSE(rec.converged);
  CHECK(rec.iterations == 1);
  CHECK(calls == 1);
  CHECK(rec.infeasible_reason == "panel layout impossible");
}

TEST_CASE("run log carries the record fields") {
  auto study = zero_sps_study();
  auto rec = run_mda(study.run, study.inputs, RunOptions{"baseline", "", 1.0});
  auto j = nlohmann::json::parse(run_log_json(rec));
  CHECK(j["runId"] == "baseline");
  CHECK(j["iterations"] == rec.iterations);
  CHECK(j["converged"] == true);
  CHECK(j["residualHistory"].size() == rec.residual_history.size());
  CHECK(j.contains("wallTime"));
  CHECK(j["finalValues"]["cpacs/vehicle/weights/mtow"].get<double>() == get_real(rec.final_tree, paths::mtow));
}

TEST_CASE("relative change uses a floor of one") {
  ParameterTree a, b;
  ParameterPath p("cpacs/v");
  a = set_value(a, p, ParameterValue::real(0.5));
  b = set_value(b, p, ParameterValue::real(0.6));
  CHECK(relative_change(a, b, {p}) == doctest::Approx(0.1));
  a = set_value(ParameterTree{}, p, ParameterValue::real(200));
  b = set_value(ParameterTree{}, p, ParameterValue::real(201));
  CHECK(relative_change(a, b, {p}) == doctest::Approx(0.005));
  CHECK(relative_change(ParameterTree{}, b, {p}) == doctest::Approx(201));
}
