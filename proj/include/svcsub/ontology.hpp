#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace svcsub {

/// Four-valued concept/operation/interface match. Declaration order is the
/// ranking order: lower is better.
enum class MatchValue : std::uint8_t { Exact = 0, PlugIn = 1, Subsume = 2, Fail = 3 };

std::string_view to_string(MatchValue v);
std::optional<MatchValue> parse_match_value(std::string_view s);

/// The weaker of two match values.
constexpr MatchValue worst(MatchValue a, MatchValue b) { return a < b ? b : a; }

struct ConceptRef {
  std::string ontology;
  std::string name;

  auto operator<=>(const ConceptRef&) const = default;
};

std::string to_string(const ConceptRef& ref);

class OntologyError : public std::runtime_error {
 public:
  enum class Kind { Parse, Cycle, DanglingReference, Unresolved };

  OntologyError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Concept distance per match value. Must stay in [0,1] and strictly increase
/// along Exact < PlugIn < Subsume < Fail.
struct DistanceTable {
  double exact = 0.0;
  double plugin = 0.2;
  double subsume = 0.8;
  double fail = 1.0;

  void validate() const;
  double operator()(MatchValue v) const;
};

/// Immutable concept hierarchy. Subsumption edges point parent -> child and
/// form a DAG; equivalence links merge concepts into classes, and the
/// hierarchy is evaluated on those classes.
class Ontology {
 public:
  Ontology(std::string id, std::vector<std::string> concepts,
           std::vector<std::pair<std::string, std::string>> subsumption,
           std::vector<std::pair<std::string, std::string>> equivalences = {});

  static Ontology from_json(const nlohmann::json& doc);
  static Ontology parse(std::string_view text);
  static Ontology load_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& concepts() const noexcept { return names_; }
  const std::vector<std::pair<std::string, std::string>>& subsumption() const noexcept {
    return edges_;
  }
  const std::vector<std::pair<std::string, std::string>>& equivalences() const noexcept {
    return equivalences_;
  }

  bool contains(std::string_view name) const;
  bool resolves(const ConceptRef& ref) const;
  ConceptRef ref(std::string name) const { return {id_, std::move(name)}; }

  /// True when `ancestor` is a strict super-concept of `descendant`
  /// (transitively, modulo equivalence).
  bool subsumes(std::string_view ancestor, std::string_view descendant) const;
  bool equivalent(std::string_view a, std::string_view b) const;

  /// Concepts without sub-concepts.
  std::vector<std::string> leaves() const;

  /// Exact when equal or equivalent, PlugIn when `n` is a super-concept of
  /// `m`, Subsume when it is a sub-concept, Fail otherwise. Refs naming
  /// different ontologies are Fail; unknown concepts throw Unresolved.
  MatchValue match(const ConceptRef& n, const ConceptRef& m) const;
  double distance(const ConceptRef& n, const ConceptRef& m) const;

  const DistanceTable& distance_table() const noexcept { return table_; }
  Ontology with_distance_table(DistanceTable table) const;

 private:
  std::uint32_t index_of(std::string_view name) const;
  std::uint32_t resolve(const ConceptRef& ref) const;
  bool class_is_ancestor(std::uint32_t anc, std::uint32_t desc) const;

  std::string id_;
  std::vector<std::string> names_;
  std::vector<std::pair<std::string, std::string>> edges_;
  std::vector<std::pair<std::string, std::string>> equivalences_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::uint32_t> class_of_;
  std::vector<bool> has_children_;
  // ancestors_[c] is a bitset over classes holding every strict ancestor of c.
  std::vector<std::vector<std::uint64_t>> ancestors_;
  DistanceTable table_;
};

}  // namespace svcsub
