#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mdao/disciplines.hpp"
#include "mdao/xml.hpp"

namespace mdao {

namespace {

struct Field {
  const char* name;
  const char* unit;
  double Constants::*member;
};

constexpr std::array kFields{
    Field{"irradiance", "W/m2", &Constants::irradiance},
    Field{"dutyCruise", "-", &Constants::duty_cruise},
    Field{"dutyGround", "-", &Constants::duty_ground},
    Field{"arealDensity", "kg/m2", &Constants::areal_density},
    Field{"wingUsableFraction", "-", &Constants::wing_usable_fraction},
    Field{"fuselageUsableFraction", "-", &Constants::fuselage_usable_fraction},
    Field{"offtakePower", "W", &Constants::offtake_power},
    Field{"apuPower", "W", &Constants::apu_power},
    Field{"fuelPerShaftEnergy", "kg/kWh", &Constants::fuel_per_shaft_energy},
    Field{"fuelPerApuEnergy", "kg/kWh", &Constants::fuel_per_apu_energy},
    Field{"groundTime", "s", &Constants::ground_time},
    Field{"liftToDragFactor", "-", &Constants::lift_to_drag_factor},
    Field{"tsfc", "1/s", &Constants::tsfc},
    Field{"reserveFraction", "-", &Constants::reserve_fraction},
    Field{"mlwFraction", "-", &Constants::mlw_fraction},
    Field{"loadFactor", "-", &Constants::load_factor},
    Field{"allowableStress", "Pa", &Constants::allowable_stress},
    Field{"tipDisplacementFraction", "-", &Constants::tip_displacement_fraction},
    Field{"youngsModulus", "Pa", &Constants::youngs_modulus},
    Field{"materialDensity", "kg/m3", &Constants::material_density},
    Field{"boxWidthFraction", "-", &Constants::box_width_fraction},
    Field{"boxHeightFraction", "-", &Constants::box_height_fraction},
    Field{"minWallThickness", "m", &Constants::min_wall_thickness},
    Field{"maxWallThickness", "m", &Constants::max_wall_thickness},
    Field{"targetMtow", "kg", &Constants::target_mtow},
    Field{"baselineWingArea", "m2", &Constants::baseline_wing_area},
    Field{"baselineSemiWingSpan", "m", &Constants::baseline_semi_wing_span},
    Field{"baselineFuselageLength", "m", &Constants::baseline_fuselage_length},
    Field{"baselineFuselageDiameter", "m", &Constants::baseline_fuselage_diameter},
    Field{"baselineSemiTailSpan", "m", &Constants::baseline_semi_tail_span},
};

constexpr const char* kFixedEmptyFraction = "fixedEmptyFraction";

double parse_number(const xml::Element& e) {
  std::string text = e.trimmed_text();
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ParseError("constant '" + e.name + "' is not a finite number: '" + text + "'", e.line, e.column);
  }
  return v;
}

std::string format(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

Constants parse_constants(std::string_view xml_text) {
  xml::Element root = xml::parse(xml_text);
  if (root.name != "constants") throw StructuralError("expected <constants> root, found <" + root.name + ">");
  Constants c;
  for (const auto& e : root.children) {
    if (e.name == kFixedEmptyFraction) {
      c.fixed_empty_fraction = parse_number(e);
      continue;
    }
    const Field* field = nullptr;
    for (const auto& f : kFields) {
      if (e.name == f.name) field = &f;
    }
    if (!field) throw StructuralError("unknown constant '" + e.name + "' (line " + std::to_string(e.line) + ")");
    c.*(field->member) = parse_number(e);
  }
  return c;
}

std::string serialize_constants(const Constants& c) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<constants>\n";
  for (const auto& f : kFields) {
    out << "  <" << f.name << " unit=\"" << f.unit << "\">" << format(c.*(f.member)) << "</" << f.name << ">\n";
  }
  if (c.fixed_empty_fraction) {
    out << "  <" << kFixedEmptyFraction << " unit=\"-\">" << format(*c.fixed_empty_fraction) << "</"
        << kFixedEmptyFraction << ">\n";
  }
  out << "</constants>\n";
  return out.str();
}

Constants read_constants_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open constants file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_constants(buf.str());
}

void write_constants_file(const std::string& path, const Constants& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write constants file '" + path + "'");
  out << serialize_constants(c);
  if (!out) throw Error("failed writing constants file '" + path + "'");
}

}  // namespace mdao
