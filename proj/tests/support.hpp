#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "svcsub/model.hpp"
#include "svcsub/ontology.hpp"
#include "svcsub/registry.hpp"

namespace svcsub::test {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(SVCSUB_FIXTURES) / rel;
}

inline Ontology printer_ontology() { return Ontology::load_file(fixture("ontologies/printer.json")); }
inline Ontology document_ontology() { return Ontology::load_file(fixture("ontologies/document.json")); }
inline Service service(const std::string& name) { return load_service(fixture("services/" + name + ".json")); }
inline ApplicationProfile profile(const std::string& name) {
  return load_profile(fixture("profiles/" + name + ".json"));
}

inline const Operation& only_op(const Service& s) { return s.interface.operations.at(0); }

// Minimal operation builder for hand-made cases.
inline Operation make_op(const std::string& ontology, const std::string& name, const std::string& cpt,
                         const std::vector<std::string>& inputs, const std::string& output) {
  Operation op;
  op.capability = {name, {ontology, cpt}};
  for (std::size_t i = 0; i < inputs.size(); ++i)
    op.inputs.push_back({"in" + std::to_string(i), {"xsd", "string"}, {ontology, inputs[i]}});
  if (!output.empty()) op.output = OutputSpec{{"xsd", "string"}, {ontology, output}};
  return op;
}

inline QuantitativeProperty qn(std::string name, double v, Order o) { return {std::move(name), v, o}; }

}  // namespace svcsub::test
