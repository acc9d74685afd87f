#include "svcsub/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace svcsub {

namespace {

class SafeMatcher {
 public:
  explicit SafeMatcher(const Ontology& o) : o_(o) {}

  MatchValue operator()(const ConceptRef& a, const ConceptRef& b) {
    try {
      return o_.match(a, b);
    } catch (const OntologyError& e) {
      warnings_.insert(e.what());
      return MatchValue::Fail;
    }
  }

  double distance(MatchValue v) const { return o_.distance_table()(v); }
  std::vector<std::string> warnings() const { return {warnings_.begin(), warnings_.end()}; }

 private:
  const Ontology& o_;
  std::set<std::string> warnings_;
};

struct Evaluated {
  OperationMatch match;
  double distance = 1.0;
};

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
}

bool same_shape(const Operation& lhs, const Operation& rhs) {
  return lhs.inputs.size() == rhs.inputs.size() && lhs.output.has_value() == rhs.output.has_value();
}

// weights: [concept, inputs..., output]
Evaluated evaluate(const Ontology& o, const Operation& lhs, const Operation& rhs,
                   std::span<const double> weights) {
  SafeMatcher m(o);
  Evaluated out;
  auto& r = out.match;
  r.items.capability = m(lhs.capability.semantic, rhs.capability.semantic);
  r.comparable = same_shape(lhs, rhs);
  if (lhs.output && rhs.output)
    r.items.output = m(lhs.output->semantic, rhs.output->semantic);
  else
    r.items.output = (lhs.output.has_value() == rhs.output.has_value()) ? MatchValue::Exact
                                                                         : MatchValue::Fail;
  if (!r.comparable) {
    r.value = MatchValue::Fail;
    r.warnings = m.warnings();
    return out;
  }

  const std::size_t n = lhs.inputs.size();
  CellMatrix cells(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      const auto v = m(lhs.inputs[k].semantic, rhs.inputs[l].semantic);
      cells.at(k, l) = {v, weights[1 + k] * m.distance(v)};
    }
  const auto a = best_assignment(cells, worst(r.items.capability, r.items.output));
  r.value = a.value;
  r.pairing.target = a.columns;
  r.items.inputs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) r.items.inputs.push_back(cells.at(k, a.columns[k]).value);
  out.distance = weights[0] * m.distance(r.items.capability) + a.cost +
                 weights[n + 1] * m.distance(r.items.output);
  r.warnings = m.warnings();
  return out;
}

Evaluated evaluate_uniform(const Ontology& o, const Operation& lhs, const Operation& rhs) {
  const auto w = uniform_weights(2 + lhs.inputs.size());
  return evaluate(o, lhs, rhs, w);
}

struct Solved {
  InterfaceMatch match;
  double cost = 0.0;
};

// Rows are operations of one side (lhs when rows_on_lhs), columns every
// operation of the other side. op_weights/item_weights are indexed by lhs
// operation; null/empty means uniform distance, unweighted.
Solved solve(const Ontology& o, const Interface& lhs, const Interface& rhs,
             const std::vector<std::size_t>& rows, bool rows_on_lhs,
             const WeightVector* op_weights, std::span<const WeightVector> item_weights) {
  const auto& col_side = rows_on_lhs ? rhs : lhs;
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = col_side.size();
  Solved out;
  if (n_rows > n_cols) {
    out.match.value = MatchValue::Fail;
    out.cost = 1.0;
    return out;
  }

  std::vector<Evaluated> evals;
  evals.reserve(n_rows * n_cols);
  CellMatrix cells(n_rows, n_cols);
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < n_cols; ++c) {
      const std::size_t li = rows_on_lhs ? rows[r] : c;
      const std::size_t ri = rows_on_lhs ? c : rows[r];
      const auto& lop = lhs.operations[li];
      const auto& rop = rhs.operations[ri];
      Evaluated e = item_weights.empty() ? evaluate_uniform(o, lop, rop)
                                         : evaluate(o, lop, rop, item_weights[li].values());
      const double w = op_weights ? (*op_weights)[li] : 1.0;
      cells.at(r, c) = {e.match.value, w * e.distance};
      evals.push_back(std::move(e));
    }

  const auto a = best_assignment(cells);
  out.match.value = a.value;
  out.cost = a.cost;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::size_t c = a.columns[r];
    out.match.pairing.push_back(rows_on_lhs ? OperationPair{rows[r], c} : OperationPair{c, rows[r]});
    out.match.operations.push_back(std::move(evals[r * n_cols + c].match));
  }
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

std::vector<std::size_t> resolve_names(const Interface& ifc, std::span<const std::string> names,
                                       const char* side) {
  if (names.empty()) throw MatchingError("operation subset must not be empty");
  std::vector<std::size_t> rows;
  std::set<std::size_t> seen;
  for (const auto& name : names) {
    auto idx = ifc.index_of(name);
    if (!idx)
      throw MatchingError(std::string("unknown operation '") + name + "' in " + side + " interface");
    if (seen.insert(*idx).second) rows.push_back(*idx);
  }
  return rows;
}

}  // namespace

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("weights must be finite and non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("weights must sum to 1 (got " + std::to_string(sum) + ")");
}

WeightVector WeightVector::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform weights need at least one entry");
  return WeightVector(uniform_weights(n));
}

std::optional<std::vector<InputPairing>> comparable_operations(const Operation& lhs,
                                                               const Operation& rhs) {
  if (!same_shape(lhs, rhs)) return std::nullopt;
  const std::size_t n = lhs.inputs.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<InputPairing> out;
  if (n > kMaxEnumeration) {
    out.push_back({perm});
    return out;
  }
  do {
    out.push_back({perm});
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

OperationMatch match_operations(const Ontology& o, const Operation& lhs, const Operation& rhs) {
  return evaluate_uniform(o, lhs, rhs).match;
}

bool equivalent_operations(const Ontology& o, const Operation& lhs, const Operation& rhs) {
  return match_operations(o, lhs, rhs).value == MatchValue::Exact;
}

bool almost_equivalent_operations(const Ontology& o, const Operation& lhs, const Operation& rhs) {
  return match_operations(o, lhs, rhs).value == MatchValue::PlugIn;
}

InterfaceMatch match_interfaces(const Ontology& o, const Interface& lhs, const Interface& rhs) {
  if (lhs.size() != rhs.size()) return {};
  return solve(o, lhs, rhs, all_rows(lhs.size()), true, nullptr, {}).match;
}

InterfaceMatch match_interfaces_over(const Ontology& o, const Interface& lhs, const Interface& rhs,
                                     std::span<const std::string> subset) {
  return solve(o, lhs, rhs, resolve_names(lhs, subset, "first"), true, nullptr, {}).match;
}

InterfaceMatch match_interfaces_covering(const Ontology& o, const Interface& lhs,
                                         const Interface& rhs,
                                         std::span<const std::string> required) {
  return solve(o, lhs, rhs, resolve_names(rhs, required, "second"), false, nullptr, {}).match;
}

bool equivalent_interfaces(const Ontology& o, const Interface& lhs, const Interface& rhs) {
  return match_interfaces(o, lhs, rhs).value == MatchValue::Exact;
}

bool almost_equivalent_interfaces(const Ontology& o, const Interface& lhs, const Interface& rhs) {
  return match_interfaces(o, lhs, rhs).value == MatchValue::PlugIn;
}

double operation_distance(const Ontology& o, const Operation& lhs, const Operation& rhs,
                          const WeightVector& w) {
  if (w.size() != 2 + lhs.inputs.size())
    throw MatchingError("operation weight vector needs " + std::to_string(2 + lhs.inputs.size()) +
                        " entries (concept, inputs, output), got " + std::to_string(w.size()));
  if (!same_shape(lhs, rhs))
    throw MatchingError("operations '" + lhs.name() + "' and '" + rhs.name() +
                        "' are not comparable");
  return evaluate(o, lhs, rhs, w.values()).distance;
}

double interface_distance(const Ontology& o, const Interface& lhs, const Interface& rhs,
                          const WeightVector& op_weights,
                          std::span<const WeightVector> item_weights) {
  if (lhs.size() != rhs.size())
    throw MatchingError("interfaces are not comparable: " + std::to_string(lhs.size()) + " vs " +
                        std::to_string(rhs.size()) + " operations");
  if (op_weights.size() != lhs.size())
    throw MatchingError("operation weight vector needs " + std::to_string(lhs.size()) +
                        " entries, got " + std::to_string(op_weights.size()));
  if (!item_weights.empty()) {
    if (item_weights.size() != lhs.size())
      throw MatchingError("item weights must be given for every operation");
    for (std::size_t k = 0; k < lhs.size(); ++k)
      if (item_weights[k].size() != 2 + lhs.operations[k].inputs.size())
        throw MatchingError("item weights for operation '" + lhs.operations[k].name() +
                            "' need " + std::to_string(2 + lhs.operations[k].inputs.size()) +
                            " entries");
  }
  return solve(o, lhs, rhs, all_rows(lhs.size()), true, &op_weights, item_weights).cost;
}

}  // namespace svcsub
