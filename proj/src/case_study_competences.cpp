#include "mdao/disciplines.hpp"

namespace mdao {

namespace {

using Result = Evaluation<ParameterTree>;

class Outputs {
 public:
  explicit Outputs(std::string tool) : tool_(std::move(tool)) {}
  Outputs& put(const ParameterPath& p, double v, const char* unit) {
    tree_ = set_value(tree_, p, ParameterValue::real(v, unit), tool_);
    return *this;
  }
  Result done() const { return Result::ok(tree_); }

 private:
  std::string tool_;
  ParameterTree tree_;
};

double real_or(const ParameterTree& t, const ParameterPath& p, double fallback) {
  auto v = find_value(t, p);
  return v ? v->as_real() : fallback;
}

Result calibration(const ParameterTree& in, const Constants& c) {
  double fraction;
  if (c.fixed_empty_fraction) {
    fraction = *c.fixed_empty_fraction;
  } else {
    Mission m = mission_from(in, c);
    fraction = *calibrate_baseline(m, baseline_geometry(c), c.target_mtow, c).fixed_empty_fraction;
  }
  return Outputs("calibration").put(paths::empty_mass_fraction, fraction, "-").done();
}

Result sizing(const ParameterTree& in, const Constants& c) {
  Geometry g{get_real(in, paths::design_wing_area), get_real(in, paths::design_semi_wing_span),
             get_real(in, paths::design_fuselage_length), get_real(in, paths::design_fuselage_diameter),
             get_real(in, paths::design_semi_tail_span)};
  Mission m = mission_from(in, c);
  auto w = size_aircraft(g, real_or(in, paths::empty_mass, 0), real_or(in, paths::fuel_saved, 0), m, c);
  if (!w.feasible()) return Result::infeasible("sizing: " + w.infeasible_reason);
  return Outputs("sizing")
      .put(paths::wing_area, g.wing_area, "m2")
      .put(paths::wing_semi_span, g.semi_wing_span, "m")
      .put(paths::fuselage_length, g.fuselage_length, "m")
      .put(paths::fuselage_diameter, g.fuselage_diameter, "m")
      .put(paths::tail_semi_span, g.semi_tail_span, "m")
      .put(paths::mtow, w->mtow, "kg")
      .put(paths::fuel_mass, w->fuel_mass, "kg")
      .done();
}

Result sps(const ParameterTree& in, const Constants& c) {
  Geometry g;
  g.wing_area = get_real(in, paths::wing_area);
  g.fuselage_length = get_real(in, paths::fuselage_length);
  g.fuselage_diameter = get_real(in, paths::fuselage_diameter);
  SpsState s = analyze_sps(g, get_real(in, paths::panel_efficiency), c);
  return Outputs("sps")
      .put(paths::panel_area, s.panel_area, "m2")
      .put(paths::power_cruise, s.power_cruise, "W")
      .put(paths::power_ground, s.power_ground, "W")
      .put(paths::sps_mass, s.mass, "kg")
      .done();
}

Result propulsion(const ParameterTree& in, const Constants& c) {
  Mission m;
  m.range = get_real(in, paths::range);
  m.cruise_mach = get_real(in, paths::cruise_mach);
  m.cruise_altitude = get_real(in, paths::cruise_altitude);
  m.ground_time = c.ground_time;
  m.mlw_fraction = c.mlw_fraction;
  SpsState s;
  s.power_cruise = get_real(in, paths::power_cruise);
  s.power_ground = get_real(in, paths::power_ground);
  return Outputs("propulsion").put(paths::fuel_saved, compute_fuel_saved(s, m, c), "kg").done();
}

Result aerostructure(const ParameterTree& in, const Constants& c) {
  Geometry g;
  g.wing_area = get_real(in, paths::wing_area);
  g.semi_wing_span = get_real(in, paths::wing_semi_span);
  auto r = analyze_aerostructure(g, get_real(in, paths::mtow), get_real(in, paths::sps_mass), c,
                                 get_real(in, paths::empty_mass_fraction));
  if (!r.feasible()) return Result::infeasible("aerostructure: " + r.infeasible_reason);
  return Outputs("aerostructure")
      .put(paths::empty_mass, r->empty_mass, "kg")
      .put(paths::max_von_mises, r->structure.max_von_mises, "Pa")
      .put(paths::tip_displacement, r->structure.tip_displacement, "m")
      .put(paths::wall_thickness, r->structure.wall_thickness, "m")
      .put(paths::wing_mass, r->structure.wing_mass, "kg")
      .done();
}

}  // namespace

CompetenceRegistry case_study_registry(const Constants& c) {
  CompetenceRegistry r;
  r["calibration"] = [c](const ParameterTree& t) { return calibration(t, c); };
  r["sizing"] = [c](const ParameterTree& t) { return sizing(t, c); };
  r["sps"] = [c](const ParameterTree& t) { return sps(t, c); };
  r["propulsion"] = [c](const ParameterTree& t) { return propulsion(t, c); };
  r["aerostructure"] = [c](const ParameterTree& t) { return aerostructure(t, c); };
  return r;
}

}  // namespace mdao
