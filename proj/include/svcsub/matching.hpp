#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "svcsub/assignment.hpp"
#include "svcsub/model.hpp"
#include "svcsub/ontology.hpp"

namespace svcsub {

class MatchingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bijection over inputs: target[k] is the rhs input paired with lhs input k.
struct InputPairing {
  std::vector<std::size_t> target;

  bool operator==(const InputPairing&) const = default;
};

/// Non-negative weights summing to 1 (within 1e-9).
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights);
  static WeightVector uniform(std::size_t n);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const noexcept { return weights_; }

 private:
  std::vector<double> weights_;
};

/// None when input counts differ or output presence differs. Otherwise every
/// input bijection for arities up to kMaxEnumeration, or only the positional
/// pairing above that (cost-optimal selection needs an ontology and happens in
/// match_operations).
std::optional<std::vector<InputPairing>> comparable_operations(const Operation& lhs,
                                                               const Operation& rhs);

struct ItemMatches {
  MatchValue capability = MatchValue::Fail;
  std::vector<MatchValue> inputs;  // in lhs input order, under the pairing
  MatchValue output = MatchValue::Fail;
};

struct OperationMatch {
  MatchValue value = MatchValue::Fail;
  bool comparable = false;
  InputPairing pairing;
  ItemMatches items;
  std::vector<std::string> warnings;  // unresolved semantic references
};

/// M(lhs, rhs). PlugIn means lhs's concepts are super-concepts of rhs's, so
/// lhs can stand in for rhs. The pairing is the best-class one, ties broken by
/// minimal distance under uniform item weights.
OperationMatch match_operations(const Ontology& o, const Operation& lhs, const Operation& rhs);
bool equivalent_operations(const Ontology& o, const Operation& lhs, const Operation& rhs);
bool almost_equivalent_operations(const Ontology& o, const Operation& lhs, const Operation& rhs);

struct OperationPair {
  std::size_t lhs = 0;
  std::size_t rhs = 0;

  bool operator==(const OperationPair&) const = default;
};

struct InterfaceMatch {
  MatchValue value = MatchValue::Fail;
  std::vector<OperationPair> pairing;
  std::vector<OperationMatch> operations;  // parallel to pairing
};

/// Full interface match over a bijection of operations. Fail when the
/// operation counts differ.
InterfaceMatch match_interfaces(const Ontology& o, const Interface& lhs, const Interface& rhs);

/// Match quantified over `subset` (operation names of lhs), each injectively
/// paired with an rhs operation. Throws MatchingError on unknown names.
InterfaceMatch match_interfaces_over(const Ontology& o, const Interface& lhs, const Interface& rhs,
                                     std::span<const std::string> subset);

/// Whether lhs can serve the `required` operations of rhs: each required rhs
/// operation gets a distinct lhs operation, graded by M(lhs op, rhs op).
/// Throws MatchingError on unknown names.
InterfaceMatch match_interfaces_covering(const Ontology& o, const Interface& lhs,
                                         const Interface& rhs,
                                         std::span<const std::string> required);

bool equivalent_interfaces(const Ontology& o, const Interface& lhs, const Interface& rhs);
bool almost_equivalent_interfaces(const Ontology& o, const Interface& lhs, const Interface& rhs);

/// Weighted concept distance between two comparable operations. Weight layout
/// is [concept, input_1 .. input_n, output], so |w| = 2 + |inputs|. Uses the
/// best-class pairing, ties broken by distance under `w`.
double operation_distance(const Ontology& o, const Operation& lhs, const Operation& rhs,
                          const WeightVector& w);

/// sum_k op_weights[k] * operation_distance(lhs op k, f(lhs op k)). Item
/// weights default to uniform per operation when `item_weights` is empty.
double interface_distance(const Ontology& o, const Interface& lhs, const Interface& rhs,
                          const WeightVector& op_weights,
                          std::span<const WeightVector> item_weights = {});

}  // namespace svcsub
