#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "svcsub/ontology.hpp"

namespace svcsub {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntactic type. Carried through but never compared.
struct TypeRef {
  std::string language;
  std::string name;

  bool operator==(const TypeRef&) const = default;
};

struct Parameter {
  std::string name;
  TypeRef type;
  ConceptRef semantic;

  bool operator==(const Parameter&) const = default;
};

struct OutputSpec {
  TypeRef type;
  ConceptRef semantic;

  bool operator==(const OutputSpec&) const = default;
};

struct NamedConcept {
  std::string name;
  ConceptRef semantic;

  bool operator==(const NamedConcept&) const = default;
};

/// Order applied to a quantitative value: '>'/'>=' mean bigger is better,
/// '<'/'<=' mean smaller is better.
enum class Order { Less, Greater, LessEqual, GreaterEqual };

std::string_view to_string(Order o);
std::optional<Order> parse_order(std::string_view s);
/// '<=' folds onto '<' and '>=' onto '>'.
Order direction(Order o);

struct QualitativeProperty {
  std::string name;
  ConceptRef semantic;

  bool operator==(const QualitativeProperty&) const = default;
};

struct QuantitativeProperty {
  std::string name;
  double value = 0.0;
  Order order = Order::Less;

  bool operator==(const QuantitativeProperty&) const = default;
};

using Property = std::variant<QualitativeProperty, QuantitativeProperty>;

const std::string& property_name(const Property& p);

struct Operation {
  NamedConcept capability;  // the operation's concept; its name is the call name
  std::vector<Parameter> inputs;
  std::optional<OutputSpec> output;
  std::vector<Property> nfps;

  const std::string& name() const noexcept { return capability.name; }
  const Property* find_property(std::string_view name) const;

  bool operator==(const Operation&) const = default;
};

struct Interface {
  std::vector<Operation> operations;

  std::size_t size() const noexcept { return operations.size(); }
  const Operation* find(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const Interface&) const = default;
};

struct Service {
  std::string id;
  Interface interface;
  std::map<std::string, std::string> metadata;

  bool operator==(const Service&) const = default;
};

/// An unresolved semantic reference found by validate_service.
struct Diagnostic {
  std::string path;  // e.g. "interface.operations[0].inputs[1].semantic"
  ConceptRef concept_ref;
  std::string message;
};

Operation parse_operation(const nlohmann::json& doc, const std::string& path = "operation");
Interface parse_interface(const nlohmann::json& doc, const std::string& path = "interface");
Service parse_service(const nlohmann::json& doc);
Service parse_service(std::string_view text);
Service load_service(const std::filesystem::path& path);

/// Loads every *.json descriptor under `dir`, sorted by file name.
std::vector<Service> load_services(const std::filesystem::path& dir);

nlohmann::json to_json(const Operation& op);
nlohmann::json to_json(const Interface& ifc);
nlohmann::json to_json(const Service& s);

std::vector<Diagnostic> validate_service(const Service& s, const Ontology& o);
std::vector<Diagnostic> validate_interface(const Interface& ifc, const Ontology& o,
                                           const std::string& path = "interface");

}  // namespace svcsub
