#include "mdao/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mdao/xml.hpp"

namespace mdao {

// ---------------------------------------------------------------- paths

bool ParameterPath::valid_token(std::string_view token) {
  if (token.empty() || !std::isalpha(static_cast<unsigned char>(token.front()))) return false;
  return std::all_of(token.begin(), token.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

ParameterPath::ParameterPath(std::string_view text) {
  if (text.empty()) throw DomainError("empty parameter path");
  std::size_t start = 0;
  for (;;) {
    std::size_t slash = text.find('/', start);
    std::string_view token = text.substr(start, slash == std::string_view::npos ? text.npos : slash - start);
    if (!valid_token(token)) {
      throw DomainError("invalid token '" + std::string(token) + "' in parameter path '" + std::string(text) + "'");
    }
    segments_.emplace_back(token);
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
}

ParameterPath::ParameterPath(std::vector<std::string> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw DomainError("empty parameter path");
  for (const auto& s : segments_) {
    if (!valid_token(s)) throw DomainError("invalid token '" + s + "' in parameter path");
  }
}

std::string ParameterPath::str() const {
  std::string out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i) out += '/';
    out += segments_[i];
  }
  return out;
}

ParameterPath ParameterPath::parent() const {
  if (segments_.size() < 2) return ParameterPath{};
  ParameterPath p;
  p.segments_.assign(segments_.begin(), segments_.end() - 1);
  return p;
}

ParameterPath ParameterPath::child(std::string_view token) const {
  if (!valid_token(token)) throw DomainError("invalid path token '" + std::string(token) + "'");
  ParameterPath p = *this;
  p.segments_.emplace_back(token);
  return p;
}

bool ParameterPath::is_proper_prefix_of(const ParameterPath& other) const {
  if (segments_.size() >= other.segments_.size()) return false;
  return std::equal(segments_.begin(), segments_.end(), other.segments_.begin());
}

// ---------------------------------------------------------------- values

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::real: return "real";
    case ValueKind::integer: return "integer";
    case ValueKind::text: return "text";
    case ValueKind::boolean: return "boolean";
  }
  return "?";
}

ParameterValue ParameterValue::real(double v, std::optional<std::string> unit) {
  if (!std::isfinite(v)) throw DomainError("real parameter values must be finite");
  ParameterValue out;
  out.payload_ = v;
  out.unit_ = std::move(unit);
  return out;
}

ParameterValue ParameterValue::integer(std::int64_t v, std::optional<std::string> unit) {
  ParameterValue out;
  out.payload_ = v;
  out.unit_ = std::move(unit);
  return out;
}

ParameterValue ParameterValue::text(std::string v, std::optional<std::string> unit) {
  ParameterValue out;
  out.payload_ = std::move(v);
  out.unit_ = std::move(unit);
  return out;
}

ParameterValue ParameterValue::boolean(bool v, std::optional<std::string> unit) {
  ParameterValue out;
  out.payload_ = v;
  out.unit_ = std::move(unit);
  return out;
}

ValueKind ParameterValue::kind() const { return static_cast<ValueKind>(payload_.index()); }

double ParameterValue::as_real() const {
  if (const auto* d = std::get_if<double>(&payload_)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&payload_)) return static_cast<double>(*i);
  throw DomainError("value of kind " + std::string(to_string(kind())) + " is not numeric");
}

std::int64_t ParameterValue::as_integer() const {
  if (const auto* i = std::get_if<std::int64_t>(&payload_)) return *i;
  throw DomainError("value of kind " + std::string(to_string(kind())) + " is not an integer");
}

const std::string& ParameterValue::as_text() const {
  if (const auto* s = std::get_if<std::string>(&payload_)) return *s;
  throw DomainError("value of kind " + std::string(to_string(kind())) + " is not text");
}

bool ParameterValue::as_boolean() const {
  if (const auto* b = std::get_if<bool>(&payload_)) return *b;
  throw DomainError("value of kind " + std::string(to_string(kind())) + " is not boolean");
}

namespace {

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

bool looks_integer(std::string_view s) {
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<std::int64_t> parse_integer(std::string_view s) {
  if (!looks_integer(s)) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  // from_chars would accept "inf"/"nan"; only plain decimal forms count as real.
  if (s.empty() || !(std::isdigit(static_cast<unsigned char>(s.front())) || s.front() == '-' || s.front() == '.')) {
    return std::nullopt;
  }
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

ValueKind inferred_kind(std::string_view s) {
  if (s == "true" || s == "false") return ValueKind::boolean;
  if (parse_integer(s)) return ValueKind::integer;
  if (parse_real(s)) return ValueKind::real;
  return ValueKind::text;
}

}  // namespace

std::string ParameterValue::payload_text() const {
  switch (kind()) {
    case ValueKind::real: return format_real(std::get<double>(payload_));
    case ValueKind::integer: return std::to_string(std::get<std::int64_t>(payload_));
    case ValueKind::text: return std::get<std::string>(payload_);
    case ValueKind::boolean: return std::get<bool>(payload_) ? "true" : "false";
  }
  return {};
}

std::string describe(const ParameterValue& value) {
  std::string s = std::string(to_string(value.kind())) + " " + value.payload_text();
  if (value.unit()) s += " [" + *value.unit() + "]";
  return s;
}

// ---------------------------------------------------------------- tree

ParameterTree::ParameterTree(std::string root_name, std::uint64_t version)
    : root_name_(std::move(root_name)), version_(version) {
  if (!ParameterPath::valid_token(root_name_)) throw DomainError("invalid root name '" + root_name_ + "'");
}

ParameterTree ParameterTree::with_version(std::uint64_t version) const {
  ParameterTree t = *this;
  t.version_ = version;
  return t;
}

bool ParameterTree::same_content(const ParameterTree& other) const {
  if (root_name_ != other.root_name_ || version_ != other.version_ || entries_.size() != other.entries_.size()) {
    return false;
  }
  return std::equal(entries_.begin(), entries_.end(), other.entries_.begin(), [](const auto& a, const auto& b) {
    return a.first == b.first && a.second.value == b.second.value;
  });
}

namespace {

// Nearest stored ancestor: the longest prefix of `path` that is a leaf or an
// interior node of the tree. Falls back to the root name.
std::string nearest_ancestor(const ParameterTree& tree, const ParameterPath& path) {
  const auto& entries = tree.entries();
  const auto& segs = path.segments();
  for (std::size_t len = segs.size(); len > 0; --len) {
    ParameterPath prefix(std::vector<std::string>(segs.begin(), segs.begin() + static_cast<long>(len)));
    auto it = entries.lower_bound(prefix);
    if (it != entries.end() && (it->first == prefix || prefix.is_proper_prefix_of(it->first))) {
      return prefix.str();
    }
  }
  return tree.root_name();
}

void check_insertable(const ParameterTree::EntryMap& entries, const ParameterPath& path) {
  const auto& segs = path.segments();
  for (std::size_t len = 1; len < segs.size(); ++len) {
    ParameterPath prefix(std::vector<std::string>(segs.begin(), segs.begin() + static_cast<long>(len)));
    if (entries.count(prefix)) {
      throw StructuralError("path '" + path.str() + "' passes through leaf '" + prefix.str() + "'");
    }
  }
  auto it = entries.upper_bound(path);
  if (it != entries.end() && path.is_proper_prefix_of(it->first)) {
    throw StructuralError("path '" + path.str() + "' is an interior node (e.g. of '" + it->first.str() + "')");
  }
}

}  // namespace

std::optional<ParameterValue> find_value(const ParameterTree& tree, const ParameterPath& path) {
  auto it = tree.entries().find(path);
  if (it == tree.entries().end()) return std::nullopt;
  return it->second.value;
}

const ParameterValue& get_value(const ParameterTree& tree, const ParameterPath& path) {
  auto it = tree.entries().find(path);
  if (it == tree.entries().end()) {
    std::string ancestor = nearest_ancestor(tree, path);
    throw NotFoundError("no parameter at '" + path.str() + "' (nearest existing ancestor '" + ancestor + "')",
                        ancestor);
  }
  return it->second.value;
}

double get_real(const ParameterTree& tree, const ParameterPath& path) {
  try {
    return get_value(tree, path).as_real();
  } catch (const NotFoundError&) {
    throw;
  } catch (const DomainError& e) {
    throw DomainError("'" + path.str() + "': " + e.what());
  }
}

ParameterTree set_value(const ParameterTree& tree, const ParameterPath& path, ParameterValue value,
                        std::optional<std::string> provenance) {
  if (path.empty()) throw DomainError("cannot set the empty path");
  if (path.depth() < 2 || path.segments().front() != tree.root_name()) {
    throw StructuralError("path '" + path.str() + "' must lie below root '" + tree.root_name() + "'");
  }
  ParameterTree out = tree;
  auto it = out.entries_.find(path);
  if (it == out.entries_.end()) {
    check_insertable(out.entries_, path);
    out.entries_.emplace(path, TreeEntry{std::move(value), std::move(provenance)});
  } else {
    it->second = TreeEntry{std::move(value), std::move(provenance)};
  }
  return out;
}

ParameterTree erase_value(const ParameterTree& tree, const ParameterPath& path) {
  ParameterTree out = tree;
  out.entries_.erase(path);
  return out;
}

// ---------------------------------------------------------------- XML

namespace {

void collect(const xml::Element& el, std::vector<std::string>& stack, ParameterTree& tree) {
  stack.push_back(el.name);
  ParameterPath path{std::vector<std::string>(stack.begin(), stack.end())};
  if (!ParameterPath::valid_token(el.name)) {
    throw StructuralError("invalid element name '" + el.name + "' at line " + std::to_string(el.line));
  }
  if (!el.children.empty()) {
    if (el.has_text()) throw StructuralError("mixed content (text and child elements) at '" + path.str() + "'");
    for (const auto& c : el.children) collect(c, stack, tree);
  } else {
    std::string text = el.trimmed_text();
    std::optional<std::string> unit = el.attribute("unit");
    auto type = el.attribute("type");
    ValueKind kind = type ? ValueKind::text : inferred_kind(text);
    if (type) {
      if (*type == "real") {
        kind = ValueKind::real;
      } else if (*type == "integer") {
        kind = ValueKind::integer;
      } else if (*type == "boolean") {
        kind = ValueKind::boolean;
      } else if (*type != "text") {
        throw StructuralError("unknown type '" + *type + "' at '" + path.str() + "'");
      }
    }
    ParameterValue value;
    auto bad = [&]() -> StructuralError {
      return StructuralError("value '" + text + "' is not a valid " + std::string(to_string(kind)) + " at '" +
                             path.str() + "'");
    };
    switch (kind) {
      case ValueKind::real: {
        auto v = parse_real(text);
        if (!v) throw bad();
        value = ParameterValue::real(*v, unit);
        break;
      }
      case ValueKind::integer: {
        auto v = parse_integer(text);
        if (!v) throw bad();
        value = ParameterValue::integer(*v, unit);
        break;
      }
      case ValueKind::boolean:
        if (text != "true" && text != "false") throw bad();
        value = ParameterValue::boolean(text == "true", unit);
        break;
      case ValueKind::text: value = ParameterValue::text(text, unit); break;
    }
    if (tree.contains(path)) throw StructuralError("duplicate leaf '" + path.str() + "'");
    tree = set_value(tree, path, std::move(value), el.attribute("source"));
  }
  stack.pop_back();
}

}  // namespace

ParameterTree parse_tree(std::string_view xml_text) {
  xml::Element root = xml::parse(xml_text);
  std::uint64_t version = 0;
  if (auto v = root.attribute("version")) {
    auto parsed = parse_integer(*v);
    if (!parsed || *parsed < 0) throw StructuralError("root attribute version must be a non-negative integer");
    version = static_cast<std::uint64_t>(*parsed);
  }
  if (!ParameterPath::valid_token(root.name)) throw StructuralError("invalid root element name '" + root.name + "'");
  if (root.has_text()) throw StructuralError("root element '" + root.name + "' carries text content");
  ParameterTree tree(root.name, version);
  std::vector<std::string> stack{root.name};
  for (const auto& c : root.children) collect(c, stack, tree);
  return tree;
}

std::string serialize_tree(const ParameterTree& tree) {
  std::ostringstream out;
  const std::string& root = tree.root_name();
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<" << root << " version=\"" << tree.version() << "\"";
  if (tree.empty()) {
    out << "/>\n";
    return out.str();
  }
  out << ">\n";
  auto indent = [&](std::size_t depth) { out << std::string(2 * depth, ' '); };
  // Open interior elements below the root.
  std::vector<std::string> open;
  for (const auto& [path, entry] : tree.entries()) {
    const auto& segs = path.segments();
    std::vector<std::string> interior(segs.begin() + 1, segs.end() - 1);
    std::size_t common = 0;
    while (common < open.size() && common < interior.size() && open[common] == interior[common]) ++common;
    while (open.size() > common) {
      indent(open.size());
      out << "</" << open.back() << ">\n";
      open.pop_back();
    }
    for (std::size_t i = common; i < interior.size(); ++i) {
      indent(open.size() + 1);
      out << "<" << interior[i] << ">\n";
      open.push_back(interior[i]);
    }
    indent(open.size() + 1);
    const ParameterValue& v = entry.value;
    out << "<" << segs.back();
    if (v.unit()) out << " unit=\"" << xml::escape(*v.unit(), true) << "\"";
    std::string text = v.payload_text();
    if (v.kind() == ValueKind::text && (inferred_kind(text) != ValueKind::text || text != xml::trim(text))) {
      out << " type=\"text\"";
    }
    if (entry.provenance) out << " source=\"" << xml::escape(*entry.provenance, true) << "\"";
    if (text.empty()) {
      out << "/>\n";
    } else {
      out << ">" << xml::escape(text, false) << "</" << segs.back() << ">\n";
    }
  }
  while (!open.empty()) {
    indent(open.size());
    out << "</" << open.back() << ">\n";
    open.pop_back();
  }
  out << "</" << root << ">\n";
  return out.str();
}

ParameterTree read_tree_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_tree(buf.str());
}

void write_tree_file(const std::string& path, const ParameterTree& tree) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << serialize_tree(tree);
  if (!out) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------- merge

MergeConflictError::MergeConflictError(std::vector<MergeConflict> conflicts)
    : Error([&] {
        std::string msg = "strict merge conflict on " + std::to_string(conflicts.size()) + " path(s):";
        for (const auto& c : conflicts) {
          msg += "\n  " + c.path.str() + ": " + describe(c.base_value) + " vs " + describe(c.update_value);
        }
        return msg;
      }()),
      conflicts_(std::move(conflicts)) {}

ParameterTree merge_trees(const ParameterTree& base, const ParameterTree& update, MergePolicy policy) {
  if (base.root_name() != update.root_name()) {
    throw StructuralError("cannot merge trees with roots '" + base.root_name() + "' and '" + update.root_name() + "'");
  }
  std::vector<MergeConflict> conflicts;
  ParameterTree out = base.with_version(std::max(base.version(), update.version()));
  for (const auto& [path, entry] : update.entries()) {
    auto existing = find_value(out, path);
    if (existing && policy == MergePolicy::strict) {
      if (!(*existing == entry.value)) conflicts.push_back({path, *existing, entry.value});
      continue;
    }
    out = set_value(out, path, entry.value, entry.provenance);
  }
  if (!conflicts.empty()) throw MergeConflictError(std::move(conflicts));
  return out;
}

std::vector<ParameterPath> changed_paths(const ParameterTree& before, const ParameterTree& after) {
  std::vector<ParameterPath> out;
  auto a = before.entries().begin();
  auto b = after.entries().begin();
  while (a != before.entries().end() || b != after.entries().end()) {
    if (b == after.entries().end() || (a != before.entries().end() && a->first < b->first)) {
      out.push_back(a->first);
      ++a;
    } else if (a == before.entries().end() || b->first < a->first) {
      out.push_back(b->first);
      ++b;
    } else {
      if (!(a->second.value == b->second.value)) out.push_back(a->first);
      ++a;
      ++b;
    }
  }
  return out;
}

// ---------------------------------------------------------------- dictionary

namespace paths {
const ParameterPath design_wing_area{"cpacs/design/wingArea"};
const ParameterPath design_semi_wing_span{"cpacs/design/semiWingSpan"};
const ParameterPath design_fuselage_length{"cpacs/design/fuselageLength"};
const ParameterPath design_fuselage_diameter{"cpacs/design/fuselageDiameter"};
const ParameterPath design_semi_tail_span{"cpacs/design/semiTailSpan"};
const ParameterPath wing_area{"cpacs/vehicle/geometry/wing/area"};
const ParameterPath wing_semi_span{"cpacs/vehicle/geometry/wing/semiSpan"};
const ParameterPath fuselage_length{"cpacs/vehicle/geometry/fuselage/length"};
const ParameterPath fuselage_diameter{"cpacs/vehicle/geometry/fuselage/diameter"};
const ParameterPath tail_semi_span{"cpacs/vehicle/geometry/tail/semiSpan"};
const ParameterPath panel_efficiency{"cpacs/vehicle/sps/panelEfficiency"};
const ParameterPath panel_area{"cpacs/vehicle/sps/panelArea"};
const ParameterPath power_cruise{"cpacs/vehicle/sps/availablePowerCruise"};
const ParameterPath power_ground{"cpacs/vehicle/sps/availablePowerGround"};
const ParameterPath sps_mass{"cpacs/vehicle/sps/mass"};
const ParameterPath fuel_saved{"cpacs/vehicle/propulsion/fuelSaved"};
const ParameterPath empty_mass{"cpacs/vehicle/structure/emptyMass"};
const ParameterPath max_von_mises{"cpacs/vehicle/structure/maxVonMises"};
const ParameterPath tip_displacement{"cpacs/vehicle/structure/tipDisplacement"};
const ParameterPath wing_mass{"cpacs/vehicle/structure/wingMass"};
const ParameterPath wall_thickness{"cpacs/vehicle/structure/wallThickness"};
const ParameterPath mtow{"cpacs/vehicle/weights/mtow"};
const ParameterPath fuel_mass{"cpacs/vehicle/weights/fuelMass"};
const ParameterPath empty_mass_fraction{"cpacs/toolspecific/calibration/emptyMassFraction"};
const ParameterPath range{"cpacs/mission/range"};
const ParameterPath payload{"cpacs/mission/payload"};
const ParameterPath cruise_mach{"cpacs/mission/cruiseMach"};
const ParameterPath cruise_altitude{"cpacs/mission/cruiseAltitude"};
}  // namespace paths

const std::vector<DictionaryEntry>& parameter_dictionary() {
  static const std::vector<DictionaryEntry> dictionary = {
      {paths::design_wing_area, "m2", "wing reference area (design variable)"},
      {paths::design_semi_wing_span, "m", "semi wing span (design variable)"},
      {paths::design_fuselage_length, "m", "fuselage length (design variable)"},
      {paths::design_fuselage_diameter, "m", "fuselage diameter (design variable)"},
      {paths::design_semi_tail_span, "m", "semi tail span (design variable)"},
      {paths::wing_area, "m2", "wing reference area"},
      {paths::wing_semi_span, "m", "semi wing span"},
      {paths::fuselage_length, "m", "fuselage length"},
      {paths::fuselage_diameter, "m", "fuselage diameter"},
      {paths::tail_semi_span, "m", "semi tail span"},
      {paths::panel_efficiency, "-", "solar panel efficiency (design variable)"},
      {paths::panel_area, "m2", "installed solar panel area"},
      {paths::power_cruise, "W", "solar power available in cruise"},
      {paths::power_ground, "W", "solar power available on ground"},
      {paths::sps_mass, "kg", "solar power system mass"},
      {paths::fuel_saved, "kg", "fuel saved by solar power"},
      {paths::empty_mass, "kg", "operating empty mass"},
      {paths::max_von_mises, "Pa", "maximum von Mises stress in the wing box"},
      {paths::tip_displacement, "m", "wing tip displacement"},
      {paths::wing_mass, "kg", "wing structural mass"},
      {paths::wall_thickness, "m", "wing box wall thickness"},
      {paths::mtow, "kg", "maximum take-off mass"},
      {paths::fuel_mass, "kg", "mission fuel mass"},
      {paths::empty_mass_fraction, "-", "calibrated non-wing empty mass fraction of MTOW"},
      {paths::range, "m", "design range"},
      {paths::payload, "kg", "design payload"},
      {paths::cruise_mach, "-", "cruise Mach number"},
      {paths::cruise_altitude, "m", "initial cruise altitude"},
  };
  return dictionary;
}

bool in_dictionary(const ParameterPath& path) {
  const auto& d = parameter_dictionary();
  return std::any_of(d.begin(), d.end(), [&](const DictionaryEntry& e) { return e.path == path; });
}

}  // namespace mdao
