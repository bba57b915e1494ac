#pragma once

// Analytic models of the solar-powered aircraft case study: sizing,
// solar power system, propulsion fuel saving, wing box structure and the
// calibration of the baseline. All models are pure functions of their
// arguments and of an immutable constants record.

#include <optional>
#include <string>
#include <string_view>

#include "mdao/evaluation.hpp"

namespace mdao {

struct Constants {
  // solar power system
  double irradiance = 1000.0;  // W/m2
  double duty_cruise = 0.5;
  double duty_ground = 0.5;
  double areal_density = 2.0;  // kg/m2
  double wing_usable_fraction = 0.5;
  double fuselage_usable_fraction = 0.25;
  // fuel saving
  double offtake_power = 60e3;          // W
  double apu_power = 100e3;             // W
  double fuel_per_shaft_energy = 0.09;  // kg/kWh
  double fuel_per_apu_energy = 0.2;     // kg/kWh
  double ground_time = 3600.0;          // s
  // sizing
  double lift_to_drag_factor = 5.2;  // L/D = factor * sqrt(AR)
  double tsfc = 1.528e-4;            // 1/s, thrust specific fuel consumption times g
  double reserve_fraction = 0.05;
  double mlw_fraction = 0.9;
  // wing box
  double load_factor = 2.5;
  double allowable_stress = 233e6;  // Pa
  double tip_displacement_fraction = 0.1;
  double youngs_modulus = 70e9;    // Pa
  double material_density = 2700;  // kg/m3
  double box_width_fraction = 0.5;
  double box_height_fraction = 0.2;
  double min_wall_thickness = 1e-4;  // m
  double max_wall_thickness = 0.2;   // m
  // baseline aircraft used by the calibration
  double target_mtow = 67585;  // kg
  double baseline_wing_area = 113;
  double baseline_semi_wing_span = 17.5;
  double baseline_fuselage_length = 38;
  double baseline_fuselage_diameter = 3.7;
  double baseline_semi_tail_span = 6.5;
  std::optional<double> fixed_empty_fraction;

  /// Same constants with the solar power system switched off
  /// (no duty, no panel mass).
  Constants without_sps() const;

  bool operator==(const Constants&) const = default;
};

Constants parse_constants(std::string_view xml_text);
std::string serialize_constants(const Constants& c);
Constants read_constants_file(const std::string& path);
void write_constants_file(const std::string& path, const Constants& c);

struct Mission {
  double range = 5556e3;  // m
  double payload = 16329;  // kg
  double cruise_mach = 0.78;
  double cruise_altitude = 10972.8;  // m
  double mlw_fraction = 0.9;
  double ground_time = 3600;  // s
};

/// Throws DomainError unless every field is positive and mlw_fraction <= 1.
void validate(const Mission& m);

struct Geometry {
  double wing_area = 113;
  double semi_wing_span = 17.5;
  double fuselage_length = 38;
  double fuselage_diameter = 3.7;
  double semi_tail_span = 6.5;

  double aspect_ratio() const { return 4 * semi_wing_span * semi_wing_span / wing_area; }
  double fuselage_ratio() const { return fuselage_length / fuselage_diameter; }
};

Geometry baseline_geometry(const Constants& c);
Mission mission_from(const ParameterTree& tree, const Constants& c);

struct SpsState {
  double panel_efficiency = 0;
  double panel_area = 0;       // m2
  double power_cruise = 0;     // W
  double power_ground = 0;     // W
  double mass = 0;             // kg
};

struct WeightState {
  double mtow = 0;
  double empty_mass = 0;
  double fuel_mass = 0;
  double fuel_saved = 0;
};

struct StructuralResult {
  double max_von_mises = 0;     // Pa
  double tip_displacement = 0;  // m
  double wing_mass = 0;         // kg
  double wall_thickness = 0;    // m
};

struct AerostructureResult {
  StructuralResult structure;
  double empty_mass = 0;
};

/// ISA speed of sound, valid up to 32 km.
double speed_of_sound(double altitude);
double cruise_speed(const Mission& m);

/// Breguet fuel fraction (reserves included) at the given geometry.
double fuel_fraction(const Geometry& g, const Mission& m, const Constants& c);

Evaluation<WeightState> size_aircraft(const Geometry& g, double empty_mass, double fuel_saved, const Mission& m,
                                      const Constants& c);

SpsState analyze_sps(const Geometry& g, double panel_efficiency, const Constants& c);

double compute_fuel_saved(const SpsState& sps, const Mission& m, const Constants& c);

/// Stress and tip deflection of the wing box at a given wall thickness.
struct BoxResponse {
  double von_mises = 0;
  double tip_displacement = 0;
};
BoxResponse box_response(const Geometry& g, double mtow, double thickness, const Constants& c);

/// Sizes the wall thickness to the smallest value meeting the stress and
/// deflection limits. `empty_fraction` overrides the calibrated constant.
Evaluation<AerostructureResult> analyze_aerostructure(const Geometry& g, double mtow, double sps_mass,
                                                      const Constants& c,
                                                      std::optional<double> empty_fraction = std::nullopt);

/// Zero-SPS coupled sizing/structure fixed point for a given empty fraction.
Evaluation<WeightState> baseline_fixed_point(const Geometry& g, const Mission& m, const Constants& c,
                                             double empty_fraction);

/// Solves for the fixed empty fraction that closes the baseline at
/// `target_mtow`. Throws CalibrationError when [0.3, 0.7] holds no root.
Constants calibrate_baseline(const Mission& m, const Geometry& baseline, double target_mtow, Constants c);

class CalibrationError : public DomainError {
 public:
  CalibrationError(std::string what, double residual_low, double residual_high)
      : DomainError(std::move(what)), residual_low_(residual_low), residual_high_(residual_high) {}
  double residual_low() const { return residual_low_; }
  double residual_high() const { return residual_high_; }

 private:
  double residual_low_;
  double residual_high_;
};

/// Tree adapters of the five models, keyed by competence name. Each reads
/// the declared inputs and returns a tree holding only its outputs.
CompetenceRegistry case_study_registry(const Constants& c);

}  // namespace mdao
