#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mdao/datamodel.hpp"
#include "mdao/xml.hpp"

using namespace mdao;

namespace {

ParameterPath P(const char* s) { return ParameterPath(s); }

// Random trees over a small alphabet so that shared prefixes are common.
ParameterTree random_tree(std::mt19937_64& rng, std::size_t n_entries, const std::string& prefix_token = "") {
  static const char* tokens[] = {"a", "b", "wing", "fuselage", "x1", "Area", "k_2"};
  std::uniform_int_distribution<int> tok(0, 6);
  std::uniform_int_distribution<int> depth(1, 4);
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_real_distribution<double> real(-1e6, 1e6);
  ParameterTree tree("cpacs", rng() % 7);
  for (std::size_t i = 0; i < n_entries * 4 && tree.size() < n_entries; ++i) {
    std::vector<std::string> segs{"cpacs"};
    if (!prefix_token.empty()) segs.push_back(prefix_token);
    int d = depth(rng);
    for (int k = 0; k < d; ++k) segs.emplace_back(tokens[tok(rng)]);
    ParameterPath path(segs);
    ParameterValue value;
    switch (kind(rng)) {
      case 0: value = ParameterValue::real(real(rng), std::string("m")); break;
      case 1: value = ParameterValue::integer(static_cast<std::int64_t>(rng() % 100000) - 50000); break;
      case 2: value = ParameterValue::text(rng() % 2 ? "12" : "solar & <panel>", std::string("-")); break;
      default: value = ParameterValue::boolean(rng() % 2 == 0); break;
    }
    try {
      tree = set_value(tree, path, value, rng() % 3 == 0 ? std::optional<std::string>("tool") : std::nullopt);
    } catch (const StructuralError&) {
      // prefix collision with an earlier entry; skip
    }
  }
  return tree;
}

}  // namespace

TEST_CASE("parameter paths validate tokens") {
  CHECK(P("cpacs/vehicle/geometry/wing/area").depth() == 5);
  CHECK(P("a/b").str() == "a/b");
  CHECK_THROWS_AS(ParameterPath("a//b"), DomainError);
  CHECK_THROWS_AS(ParameterPath("/a"), DomainError);
  CHECK_THROWS_AS(ParameterPath("a/1b"), DomainError);
  CHECK_THROWS_AS(ParameterPath(""), DomainError);
  CHECK(P("a/b").is_proper_prefix_of(P("a/b/c")));
  CHECK_FALSE(P("a/b").is_proper_prefix_of(P("a/b")));
}

TEST_CASE("real values must be finite") {
  CHECK_THROWS_AS(ParameterValue::real(std::nan("")), DomainError);
  CHECK_THROWS_AS(ParameterValue::real(INFINITY), DomainError);
}

TEST_CASE("parse_tree maps nesting to paths") {
  auto t = parse_tree(R"(<cpacs version="3"><a><b unit="m">2.5</b></a></cpacs>)");
  CHECK(t.version() == 3);
  CHECK(t.size() == 1);
  const auto& v = get_value(t, P("cpacs/a/b"));
  CHECK(v.kind() == ValueKind::real);
  CHECK(v.as_real() == 2.5);
  CHECK(v.unit() == std::optional<std::string>("m"));

  auto empty = parse_tree("<cpacs/>");
  CHECK(empty.empty());
  CHECK(empty.version() == 0);
}

TEST_CASE("parse_tree infers kinds and honours explicit type") {
  auto t = parse_tree(
      "<cpacs><i>42</i><r>1e3</r><b>true</b><s>hello</s><n type=\"text\">12</n><e/></cpacs>");
  CHECK(get_value(t, P("cpacs/i")).kind() == ValueKind::integer);
  CHECK(get_value(t, P("cpacs/r")).kind() == ValueKind::real);
  CHECK(get_value(t, P("cpacs/b")).as_boolean());
  CHECK(get_value(t, P("cpacs/s")).as_text() == "hello");
  CHECK(get_value(t, P("cpacs/n")).as_text() == "12");
  CHECK(get_value(t, P("cpacs/e")).as_text().empty());
  CHECK(get_value(t, P("cpacs/i")).as_real() == 42.0);
}

TEST_CASE("parse errors carry line and column") {
  try {
    parse_tree("<cpacs>\n  <a>1</b>\n</cpacs>");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 1);
  }
  CHECK_THROWS_AS(parse_tree("<cpacs><a>1</a>"), ParseError);
  CHECK_THROWS_AS(parse_tree(""), ParseError);
  CHECK_THROWS_AS(parse_tree("<cpacs/><other/>"), ParseError);
  CHECK_THROWS_AS(parse_tree("<cpacs a=1/>"), ParseError);
}

TEST_CASE("mixed content is a structural error naming the path") {
  try {
    parse_tree("<cpacs><a>text<b>1</b></a></cpacs>");
    FAIL("expected a structural error");
  } catch (const StructuralError& e) {
    CHECK(std::string(e.what()).find("cpacs/a") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_tree("<cpacs><a>1</a><a>2</a></cpacs>"), StructuralError);
  CHECK_THROWS_AS(parse_tree("<cpacs version=\"-1\"/>"), StructuralError);
}

TEST_CASE("serialize_tree orders siblings lexicographically") {
  ParameterTree t;
  t = set_value(t, P("cpacs/a/c"), ParameterValue::integer(2));
  t = set_value(t, P("cpacs/a/b"), ParameterValue::integer(1));
  std::string xml = serialize_tree(t);
  CHECK(xml.find("<b>") < xml.find("<c>"));
  CHECK(serialize_tree(t) == xml);

  std::string empty = serialize_tree(ParameterTree{});
  CHECK(empty.find("<cpacs version=\"0\"/>") != std::string::npos);
  CHECK(parse_tree(empty) == ParameterTree{});
}

TEST_CASE("get and set values") {
  ParameterTree t;
  t = set_value(t, P("cpacs/a/b"), ParameterValue::real(1.0, std::string("kg")));
  CHECK(get_value(t, P("cpacs/a/b")) == ParameterValue::real(1.0, std::string("kg")));
  CHECK(t.version() == 0);

  try {
    get_value(t, P("cpacs/a/b/zzz"));
    FAIL("expected not-found");
  } catch (const NotFoundError& e) {
    CHECK(e.nearest_ancestor() == "cpacs/a/b");
  }
  try {
    get_value(t, P("cpacs/a/q"));
    FAIL("expected not-found");
  } catch (const NotFoundError& e) {
    CHECK(e.nearest_ancestor() == "cpacs/a");
  }
  CHECK_THROWS_AS(set_value(t, P("cpacs/a/b/c"), ParameterValue::integer(1)), StructuralError);
  CHECK_THROWS_AS(set_value(t, P("cpacs/a"), ParameterValue::integer(1)), StructuralError);
  CHECK_THROWS_AS(set_value(t, P("other/a"), ParameterValue::integer(1)), StructuralError);
}

TEST_CASE("merge_trees") {
  ParameterTree a, b;
  a = set_value(a, P("cpacs/x/a"), ParameterValue::integer(1));
  a = set_value(a, P("cpacs/x/b"), ParameterValue::integer(2));
  b = set_value(b, P("cpacs/y/c"), ParameterValue::integer(3), std::string("toolB"));

  SUBCASE("disjoint union") {
    auto m = merge_trees(a, b, MergePolicy::strict);
    CHECK(m.size() == a.size() + b.size());
  }
  SUBCASE("strict conflict lists every path") {
    auto c = set_value(ParameterTree{}, P("cpacs/x/a"), ParameterValue::integer(5));
    c = set_value(c, P("cpacs/x/b"), ParameterValue::integer(6));
    try {
      merge_trees(a, c, MergePolicy::strict);
      FAIL("expected conflict");
    } catch (const MergeConflictError& e) {
      REQUIRE(e.conflicts().size() == 2);
      CHECK(e.conflicts()[0].path == P("cpacs/x/a"));
      CHECK(e.conflicts()[0].base_value.as_integer() == 1);
      CHECK(e.conflicts()[0].update_value.as_integer() == 5);
      CHECK(std::string(e.what()).find("cpacs/x/b") != std::string::npos);
    }
  }
  SUBCASE("overwrite: update wins and records provenance") {
    auto c = set_value(ParameterTree{}, P("cpacs/x/a"), ParameterValue::integer(5), std::string("sizing"));
    auto m = merge_trees(a, c, MergePolicy::overwrite);
    CHECK(get_value(m, P("cpacs/x/a")).as_integer() == 5);
    CHECK(m.entries().at(P("cpacs/x/a")).provenance == std::optional<std::string>("sizing"));
  }
  SUBCASE("root mismatch and structural collisions") {
    CHECK_THROWS_AS(merge_trees(a, ParameterTree("other"), MergePolicy::strict), StructuralError);
    auto c = set_value(ParameterTree{}, P("cpacs/x/a/deeper"), ParameterValue::integer(5));
    CHECK_THROWS_AS(merge_trees(a, c, MergePolicy::overwrite), StructuralError);
  }
}

TEST_CASE("changed_paths") {
  ParameterTree a, b;
  a = set_value(a, P("cpacs/p"), ParameterValue::integer(1));
  a = set_value(a, P("cpacs/q"), ParameterValue::integer(1));
  b = set_value(b, P("cpacs/q"), ParameterValue::integer(2));
  b = set_value(b, P("cpacs/r"), ParameterValue::integer(2));
  auto d = changed_paths(a, b);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == P("cpacs/p"));
  CHECK(d[1] == P("cpacs/q"));
  CHECK(d[2] == P("cpacs/r"));
}

TEST_CASE("property: parse(serialize(t)) == t") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    ParameterTree t = random_tree(rng, 1 + trial % 25);
    std::string xml = serialize_tree(t);
    ParameterTree back = parse_tree(xml);
    REQUIRE(back == t);
    CHECK(serialize_tree(back) == xml);
  }
}

TEST_CASE("property: disjoint merge is associative, overwrite merge idempotent") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_tree(rng, 8, "ta");
    auto b = random_tree(rng, 8, "tb");
    auto c = random_tree(rng, 8, "tc");
    auto left = merge_trees(merge_trees(a, b, MergePolicy::strict), c, MergePolicy::strict);
    auto right = merge_trees(a, merge_trees(b, c, MergePolicy::strict), MergePolicy::strict);
    CHECK(left == right);
    CHECK(merge_trees(a, a, MergePolicy::overwrite).same_content(a));
  }
}

TEST_CASE("dictionary paths are unique and valid") {
  const auto& d = parameter_dictionary();
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d[i].path.segments().front() == "cpacs");
    for (std::size_t j = i + 1; j < d.size(); ++j) CHECK_FALSE(d[i].path == d[j].path);
  }
}

TEST_CASE("shipped baseline file") {
  const std::string file = MDAO_DATA_DIR "/baseline.xml";
  auto tree = read_tree_file(file);
  CHECK(tree.version() == 0);
  auto area = get_value(tree, P("cpacs/vehicle/geometry/wing/area"));
  CHECK(area.as_real() == 113);
  CHECK(area.unit() == "m2");
  auto length = get_value(tree, P("cpacs/vehicle/geometry/fuselage/length"));
  CHECK(length.as_real() == 38);
  CHECK(length.unit() == "m");
  for (const auto& e : parameter_dictionary()) CHECK_MESSAGE(tree.contains(e.path), e.path.str());
  for (const auto& [path, entry] : tree.entries()) CHECK_MESSAGE(in_dictionary(path), path.str());

  std::ifstream in(file, std::ios::binary);
  std::string original((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string once = serialize_tree(parse_tree(original));
  CHECK(serialize_tree(parse_tree(once)) == once);
  CHECK(once == original);
}

TEST_CASE("merging the tool stubs rebuilds the whole dictionary") {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(MDAO_DATA_DIR "/stubs")) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  REQUIRE(files.size() == 5);
  ParameterTree merged;
  std::size_t total = 0;
  for (const auto& f : files) {
    auto stub = read_tree_file(f.string());
    CHECK(stub.size() > 0);
    total += stub.size();
    merged = merge_trees(merged, stub, MergePolicy::strict);
  }
  CHECK(total > merged.size());
  CHECK(merged.size() == parameter_dictionary().size());
  for (const auto& e : parameter_dictionary()) CHECK_MESSAGE(merged.contains(e.path), e.path.str());
  CHECK(merged.same_content(read_tree_file(MDAO_DATA_DIR "/baseline.xml")));
}
