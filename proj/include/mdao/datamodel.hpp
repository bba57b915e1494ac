#pragma once

// Central exchange model: a hierarchical parameter tree addressed by
// slash-separated paths, with a deterministic XML form. Every competence
// reads and writes this structure; trees are immutable values and all
// mutating operations return a new tree.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mdao/error.hpp"

namespace mdao {

class ParameterPath {
 public:
  ParameterPath() = default;
  /// Accepts `a/b/c`; throws DomainError on empty paths or bad tokens.
  explicit ParameterPath(std::string_view text);
  explicit ParameterPath(std::vector<std::string> segments);

  static bool valid_token(std::string_view token);

  const std::vector<std::string>& segments() const { return segments_; }
  std::size_t depth() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }
  std::string str() const;
  const std::string& leaf_name() const { return segments_.back(); }

  ParameterPath parent() const;
  ParameterPath child(std::string_view token) const;
  /// True when this path is a strict prefix of `other`.
  bool is_proper_prefix_of(const ParameterPath& other) const;

  auto operator<=>(const ParameterPath&) const = default;
  bool operator==(const ParameterPath&) const = default;

 private:
  std::vector<std::string> segments_;
};

enum class ValueKind { real, integer, text, boolean };

std::string_view to_string(ValueKind kind);

class ParameterValue {
 public:
  ParameterValue() : payload_(std::string{}) {}

  /// Throws DomainError for NaN or infinite payloads.
  static ParameterValue real(double v, std::optional<std::string> unit = std::nullopt);
  static ParameterValue integer(std::int64_t v, std::optional<std::string> unit = std::nullopt);
  static ParameterValue text(std::string v, std::optional<std::string> unit = std::nullopt);
  static ParameterValue boolean(bool v, std::optional<std::string> unit = std::nullopt);

  ValueKind kind() const;
  const std::optional<std::string>& unit() const { return unit_; }

  /// Numeric view; integers widen to double. Throws DomainError otherwise.
  double as_real() const;
  std::int64_t as_integer() const;
  const std::string& as_text() const;
  bool as_boolean() const;

  /// Text form as written to XML (reals always carry a '.' or exponent).
  std::string payload_text() const;

  bool operator==(const ParameterValue&) const = default;

 private:
  std::variant<double, std::int64_t, std::string, bool> payload_;
  std::optional<std::string> unit_;
};

std::string describe(const ParameterValue& value);

struct TreeEntry {
  ParameterValue value;
  std::optional<std::string> provenance;

  bool operator==(const TreeEntry&) const = default;
};

class ParameterTree {
 public:
  using EntryMap = std::map<ParameterPath, TreeEntry>;

  explicit ParameterTree(std::string root_name = "cpacs", std::uint64_t version = 0);

  const std::string& root_name() const { return root_name_; }
  std::uint64_t version() const { return version_; }
  const EntryMap& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const ParameterPath& path) const { return entries_.count(path) != 0; }

  ParameterTree with_version(std::uint64_t version) const;

  /// Same root, version and values, provenance ignored.
  bool same_content(const ParameterTree& other) const;

  bool operator==(const ParameterTree&) const = default;

 private:
  friend ParameterTree set_value(const ParameterTree&, const ParameterPath&, ParameterValue,
                                 std::optional<std::string>);
  friend ParameterTree erase_value(const ParameterTree&, const ParameterPath&);

  std::string root_name_;
  std::uint64_t version_;
  EntryMap entries_;
};

ParameterTree parse_tree(std::string_view xml_text);
std::string serialize_tree(const ParameterTree& tree);

ParameterTree read_tree_file(const std::string& path);
void write_tree_file(const std::string& path, const ParameterTree& tree);

/// Throws NotFoundError naming the nearest existing ancestor (a stored leaf
/// or an interior node of the tree).
const ParameterValue& get_value(const ParameterTree& tree, const ParameterPath& path);
double get_real(const ParameterTree& tree, const ParameterPath& path);
std::optional<ParameterValue> find_value(const ParameterTree& tree, const ParameterPath& path);

/// Returns a copy with `path` set. Throws StructuralError if the path would
/// pass through an existing leaf or replace an existing subtree.
ParameterTree set_value(const ParameterTree& tree, const ParameterPath& path, ParameterValue value,
                        std::optional<std::string> provenance = std::nullopt);
ParameterTree erase_value(const ParameterTree& tree, const ParameterPath& path);

enum class MergePolicy { strict, overwrite };

struct MergeConflict {
  ParameterPath path;
  ParameterValue base_value;
  ParameterValue update_value;
};

class MergeConflictError : public Error {
 public:
  explicit MergeConflictError(std::vector<MergeConflict> conflicts);
  const std::vector<MergeConflict>& conflicts() const { return conflicts_; }

 private:
  std::vector<MergeConflict> conflicts_;
};

/// Union of entries. Under `overwrite` the update wins on shared paths; under
/// `strict` unequal shared values raise MergeConflictError listing all of them.
/// The result keeps the larger of the two versions.
ParameterTree merge_trees(const ParameterTree& base, const ParameterTree& update, MergePolicy policy);

/// Paths whose entries differ (added, removed or changed value) between two trees.
std::vector<ParameterPath> changed_paths(const ParameterTree& before, const ParameterTree& after);

struct DictionaryEntry {
  ParameterPath path;
  std::string unit;
  std::string description;
};

/// The project-wide parameter dictionary; every shipped file stays inside it.
const std::vector<DictionaryEntry>& parameter_dictionary();
bool in_dictionary(const ParameterPath& path);

/// Well-known paths of the dictionary.
namespace paths {
extern const ParameterPath design_wing_area;
extern const ParameterPath design_semi_wing_span;
extern const ParameterPath design_fuselage_length;
extern const ParameterPath design_fuselage_diameter;
extern const ParameterPath design_semi_tail_span;
extern const ParameterPath wing_area;
extern const ParameterPath wing_semi_span;
extern const ParameterPath fuselage_length;
extern const ParameterPath fuselage_diameter;
extern const ParameterPath tail_semi_span;
extern const ParameterPath panel_efficiency;
extern const ParameterPath panel_area;
extern const ParameterPath power_cruise;
extern const ParameterPath power_ground;
extern const ParameterPath sps_mass;
extern const ParameterPath fuel_saved;
extern const ParameterPath empty_mass;
extern const ParameterPath max_von_mises;
extern const ParameterPath tip_displacement;
extern const ParameterPath wing_mass;
extern const ParameterPath wall_thickness;
extern const ParameterPath mtow;
extern const ParameterPath fuel_mass;
extern const ParameterPath empty_mass_fraction;
extern const ParameterPath range;
extern const ParameterPath payload;
extern const ParameterPath cruise_mach;
extern const ParameterPath cruise_altitude;
}  // namespace paths

}  // namespace mdao
