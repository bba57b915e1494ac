#include "mdao/disciplines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdao {

namespace {

constexpr double kGravity = 9.80665;
constexpr double kGamma = 1.4;
constexpr double kGasConstant = 287.05287;

void require_positive(const Geometry& g) {
  if (!(g.wing_area > 0 && g.semi_wing_span > 0 && g.fuselage_length > 0 && g.fuselage_diameter > 0 &&
        g.semi_tail_span > 0)) {
    throw DomainError("geometry values must be positive");
  }
}

}  // namespace

Constants Constants::without_sps() const {
  Constants c = *this;
  c.duty_cruise = 0;
  c.duty_ground = 0;
  c.areal_density = 0;
  return c;
}

void validate(const Mission& m) {
  if (!(m.range > 0 && m.payload > 0 && m.cruise_mach > 0 && m.cruise_altitude > 0 && m.ground_time > 0)) {
    throw DomainError("mission values must be positive");
  }
  if (!(m.mlw_fraction > 0 && m.mlw_fraction <= 1)) throw DomainError("mlw fraction must lie in (0, 1]");
}

Geometry baseline_geometry(const Constants& c) {
  return {c.baseline_wing_area, c.baseline_semi_wing_span, c.baseline_fuselage_length, c.baseline_fuselage_diameter,
          c.baseline_semi_tail_span};
}

Mission mission_from(const ParameterTree& tree, const Constants& c) {
  Mission m;
  m.range = get_real(tree, paths::range);
  m.payload = get_real(tree, paths::payload);
  m.cruise_mach = get_real(tree, paths::cruise_mach);
  m.cruise_altitude = get_real(tree, paths::cruise_altitude);
  m.mlw_fraction = c.mlw_fraction;
  m.ground_time = c.ground_time;
  validate(m);
  return m;
}

double speed_of_sound(double altitude) {
  if (!(altitude >= 0 && altitude <= 32000)) throw DomainError("altitude outside the 0-32 km atmosphere model");
  double temperature;
  if (altitude <= 11000) {
    temperature = 288.15 - 0.0065 * altitude;
  } else if (altitude <= 20000) {
    temperature = 216.65;
  } else {
    temperature = 216.65 + 0.001 * (altitude - 20000);
  }
  return std::sqrt(kGamma * kGasConstant * temperature);
}

double cruise_speed(const Mission& m) { return m.cruise_mach * speed_of_sound(m.cruise_altitude); }

double fuel_fraction(const Geometry& g, const Mission& m, const Constants& c) {
  double lift_to_drag = c.lift_to_drag_factor * std::sqrt(g.aspect_ratio());
  double x = m.range * c.tsfc / (cruise_speed(m) * lift_to_drag);
  return (1 - std::exp(-x)) * (1 + c.reserve_fraction);
}

Evaluation<WeightState> size_aircraft(const Geometry& g, double empty_mass, double fuel_saved, const Mission& m,
                                      const Constants& c) {
  require_positive(g);
  double ff = fuel_fraction(g, m, c);
  if (!(ff < 1)) return Evaluation<WeightState>::infeasible("fuel fraction reaches 1");
  WeightState w;
  w.empty_mass = empty_mass;
  w.fuel_saved = fuel_saved;
  w.mtow = (empty_mass + m.payload - fuel_saved) / (1 - ff);
  w.fuel_mass = ff * w.mtow - fuel_saved;
  if (!std::isfinite(w.mtow) || w.mtow <= 0) return Evaluation<WeightState>::infeasible("non-physical mtow");
  if (w.fuel_mass < 0) return Evaluation<WeightState>::infeasible("negative fuel mass");
  return Evaluation<WeightState>::ok(w);
}

SpsState analyze_sps(const Geometry& g, double panel_efficiency, const Constants& c) {
  if (!(panel_efficiency > 0 && panel_efficiency < 1)) {
    throw DomainError("panel efficiency " + std::to_string(panel_efficiency) + " outside (0, 1)");
  }
  require_positive(g);
  SpsState s;
  s.panel_efficiency = panel_efficiency;
  s.panel_area = c.wing_usable_fraction * g.wing_area +
                 c.fuselage_usable_fraction * g.fuselage_length * g.fuselage_diameter;
  double peak = c.irradiance * s.panel_area * panel_efficiency;
  s.power_cruise = peak * c.duty_cruise;
  s.power_ground = peak * c.duty_ground;
  s.mass = c.areal_density * s.panel_area;
  return s;
}

double compute_fuel_saved(const SpsState& sps, const Mission& m, const Constants& c) {
  constexpr double kJoulesPerKwh = 3.6e6;
  double cruise_time = m.range / cruise_speed(m);
  double cruise = std::min(sps.power_cruise, c.offtake_power) * cruise_time / kJoulesPerKwh * c.fuel_per_shaft_energy;
  double ground = std::min(sps.power_ground, c.apu_power) * m.ground_time / kJoulesPerKwh * c.fuel_per_apu_energy;
  return cruise + ground;
}

namespace {

struct Box {
  double half_lift;    // N, per side
  double root_moment;  // N m
  double width;
  double height;
};

Box wing_box(const Geometry& g, double mtow, const Constants& c) {
  Box b;
  b.half_lift = c.load_factor * kGravity * mtow / 2;
  b.root_moment = b.half_lift * g.semi_wing_span / 3;
  double chord = g.wing_area / (2 * g.semi_wing_span);
  b.width = c.box_width_fraction * chord;
  b.height = c.box_height_fraction * chord;
  return b;
}

}  // namespace

BoxResponse box_response(const Geometry& g, double mtow, double t, const Constants& c) {
  Box b = wing_box(g, mtow, c);
  double inner_w = std::max(b.width - 2 * t, 0.0);
  double inner_h = std::max(b.height - 2 * t, 0.0);
  double inertia = (b.width * std::pow(b.height, 3) - inner_w * std::pow(inner_h, 3)) / 12;
  double bending = b.root_moment * (b.height / 2) / inertia;
  double shear = b.half_lift / (2 * b.height * t);
  BoxResponse r;
  r.von_mises = std::sqrt(bending * bending + 3 * shear * shear);
  r.tip_displacement = 11 * b.half_lift * std::pow(g.semi_wing_span, 3) / (60 * c.youngs_modulus * inertia);
  return r;
}

Evaluation<AerostructureResult> analyze_aerostructure(const Geometry& g, double mtow, double sps_mass,
                                                      const Constants& c, std::optional<double> empty_fraction) {
  std::optional<double> fraction = empty_fraction ? empty_fraction : c.fixed_empty_fraction;
  if (!fraction) throw DomainError("fixed empty fraction is not calibrated");
  if (!(g.wing_area > 0 && g.semi_wing_span > 0 && mtow > 0 && sps_mass >= 0)) {
    throw DomainError("aerostructure needs positive geometry and masses");
  }
  Box box = wing_box(g, mtow, c);
  const double tip_limit = c.tip_displacement_fraction * g.semi_wing_span;
  auto admissible = [&](double t) {
    BoxResponse r = box_response(g, mtow, t, c);
    return r.von_mises <= c.allowable_stress && r.tip_displacement <= tip_limit;
  };
  double lo = c.min_wall_thickness;
  double hi = std::min(c.max_wall_thickness, std::min(box.width, box.height) / 2);
  if (!(lo < hi) || !admissible(hi)) {
    return Evaluation<AerostructureResult>::infeasible("no admissible wing box wall thickness");
  }
  double t = lo;
  if (!admissible(lo)) {
    while (hi - lo > 1e-9) {
      double mid = 0.5 * (lo + hi);
      (admissible(mid) ? hi : lo) = mid;
    }
    t = hi;
  }
  BoxResponse r = box_response(g, mtow, t, c);
  double section = box.width * box.height - (box.width - 2 * t) * (box.height - 2 * t);
  AerostructureResult out;
  out.structure.max_von_mises = r.von_mises;
  out.structure.tip_displacement = r.tip_displacement;
  out.structure.wall_thickness = t;
  out.structure.wing_mass = 2 * c.material_density * section * g.semi_wing_span;
  out.empty_mass = out.structure.wing_mass + *fraction * mtow + sps_mass;
  return Evaluation<AerostructureResult>::ok(out);
}

Evaluation<WeightState> baseline_fixed_point(const Geometry& g, const Mission& m, const Constants& c,
                                             double empty_fraction) {
  double empty = 0;
  for (int k = 0; k < 1000; ++k) {
    auto w = size_aircraft(g, empty, 0, m, c);
    if (!w.feasible()) return w;
    auto s = analyze_aerostructure(g, w->mtow, 0, c, empty_fraction);
    if (!s.feasible()) return Evaluation<WeightState>::infeasible(s.infeasible_reason);
    double next = s->empty_mass;
    if (!std::isfinite(next) || next > 1e9) return Evaluation<WeightState>::infeasible("sizing loop diverges");
    if (std::abs(next - empty) <= 1e-13 * std::max(std::abs(next), 1.0)) return size_aircraft(g, next, 0, m, c);
    empty = next;
  }
  return Evaluation<WeightState>::infeasible("sizing loop does not settle");
}

Constants calibrate_baseline(const Mission& m, const Geometry& baseline, double target_mtow, Constants c) {
  validate(m);
  if (!(target_mtow > m.payload)) throw DomainError("target mtow must exceed the payload");
  const Constants bare = c.without_sps();
  auto residual = [&](double f) {
    auto w = baseline_fixed_point(baseline, m, bare, f);
    return w.feasible() ? w->mtow - target_mtow : std::numeric_limits<double>::infinity();
  };
  double lo = 0.3, hi = 0.7;
  double r_lo = residual(lo), r_hi = residual(hi);
  if (!(r_lo <= 0 && r_hi >= 0)) {
    throw CalibrationError("no empty fraction in [0.3, 0.7] closes mtow " + std::to_string(target_mtow) +
                               " (residual " + std::to_string(r_lo) + " kg at 0.3, " + std::to_string(r_hi) +
                               " kg at 0.7)",
                           r_lo, r_hi);
  }
  while (hi - lo > 1e-8 * 0.5 * (lo + hi)) {
    double mid = 0.5 * (lo + hi);
    (residual(mid) > 0 ? hi : lo) = mid;
  }
  c.fixed_empty_fraction = 0.5 * (lo + hi);
  return c;
}

}  // namespace mdao
