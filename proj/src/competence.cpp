#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdao/formalize.hpp"
#include "mdao/xml.hpp"

namespace mdao {

void validate(const CompetenceSpec& spec) {
  if (spec.name.empty() || !ParameterPath::valid_token(spec.name)) {
    throw DomainError("competence name '" + spec.name + "' must be a plain identifier");
  }
  if (spec.outputs.empty()) throw DomainError("competence '" + spec.name + "' declares no outputs");
  for (const auto& p : spec.inputs) {
    if (spec.outputs.count(p)) {
      throw DomainError("competence '" + spec.name + "' declares '" + p.str() + "' as both input and output");
    }
  }
}

CompetenceSpec parse_competence(std::string_view xml_text) {
  xml::Element root = xml::parse(xml_text);
  if (root.name != "competence") throw StructuralError("expected <competence> root, found <" + root.name + ">");
  CompetenceSpec spec;
  auto name = root.attribute("name");
  if (!name) throw StructuralError("competence/@name is missing");
  spec.name = *name;
  spec.owner = root.attribute("owner").value_or("");
  for (const auto& child : root.children) {
    auto read_path = [&]() {
      try {
        return ParameterPath(child.trimmed_text());
      } catch (const DomainError& e) {
        throw StructuralError("competence/" + child.name + " (line " + std::to_string(child.line) + "): " + e.what());
      }
    };
    if (child.name == "in") {
      spec.inputs.insert(read_path());
    } else if (child.name == "out") {
      spec.outputs.insert(read_path());
    } else if (child.name == "description") {
      spec.description = child.trimmed_text();
    } else {
      throw StructuralError("unexpected element competence/" + child.name);
    }
  }
  return spec;
}

std::string serialize_competence(const CompetenceSpec& spec) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<competence name=\"" << xml::escape(spec.name, true) << "\" owner=\"" << xml::escape(spec.owner, true)
      << "\">\n";
  if (!spec.description.empty()) out << "  <description>" << xml::escape(spec.description, false) << "</description>\n";
  for (const auto& p : spec.inputs) out << "  <in>" << p.str() << "</in>\n";
  for (const auto& p : spec.outputs) out << "  <out>" << p.str() << "</out>\n";
  out << "</competence>\n";
  return out.str();
}

CompetenceCatalogue load_competences(const std::vector<std::string>& xml_documents) {
  CompetenceCatalogue cat;
  for (const auto& doc : xml_documents) {
    CompetenceSpec spec = parse_competence(doc);
    validate(spec);
    for (const auto& existing : cat.specs) {
      if (existing.name == spec.name) throw DomainError("duplicate competence name '" + spec.name + "'");
    }
    auto warn = [&](const ParameterPath& p) {
      if (!in_dictionary(p)) {
        cat.warnings.push_back("competence '" + spec.name + "': path '" + p.str() + "' is not in the parameter dictionary");
      }
    };
    for (const auto& p : spec.inputs) warn(p);
    for (const auto& p : spec.outputs) warn(p);
    cat.specs.push_back(std::move(spec));
  }
  return cat;
}

CompetenceCatalogue load_competence_dir(const std::string& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) throw Error("'" + directory + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::string> docs;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    docs.push_back(buf.str());
  }
  return load_competences(docs);
}

}  // namespace mdao
