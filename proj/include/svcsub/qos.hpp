#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "svcsub/matching.hpp"
#include "svcsub/model.hpp"
#include "svcsub/ontology.hpp"

namespace svcsub {

class QosError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sample {
  std::string owner;
  double value = 0.0;
};

/// Values of one quantitative property across the operations compared in a
/// single decision. Mean and standard deviation divide by N.
class Population {
 public:
  Population(std::string property, Order order, std::vector<Sample> samples);

  const std::string& property() const noexcept { return property_; }
  Order order() const noexcept { return order_; }  // '<' or '>' after folding
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  double mean() const noexcept { return mean_; }
  double stddev() const noexcept { return stddev_; }

 private:
  std::string property_;
  Order order_;
  std::vector<Sample> samples_;
  double mean_ = 0.0;
  double stddev_ = 0.0;
};

using PopulationSet = std::map<std::string, Population, std::less<>>;

/// One contributor to a population: an owner label and its operation.
struct Contributor {
  std::string owner;
  const Operation* operation = nullptr;
};

/// Groups quantitative properties of the contributors by name. Throws
/// QosError when owners disagree on a property's direction.
PopulationSet build_populations(std::span<const Contributor> contributors);

/// (value - mean) / stddev; 0 when the population has no spread.
double z_score(const Population& pop, double value);

/// Maps the z-score into [0,1], saturating outside [-2, 2]. For '<' small
/// values map near 0; for '>' large values map near 0.
double eta(const Population& pop, double value);

/// |eta(a) - eta(b)|.
double qn_degree(const Population& pop, double a, double b);

/// Concept distance from the candidate's concept to the reference's concept.
double ql_degree(const Ontology& o, const QualitativeProperty& candidate,
                 const QualitativeProperty& reference);

/// Per-property weights keyed by name, non-negative, summing to 1.
class QosWeights {
 public:
  QosWeights() = default;
  explicit QosWeights(std::map<std::string, double, std::less<>> weights);
  static QosWeights uniform(std::span<const std::string> names);
  /// Uniform over the reference operation's property names.
  static QosWeights uniform_for(const Operation& reference);

  bool empty() const noexcept { return weights_.empty(); }
  const std::map<std::string, double, std::less<>>& values() const noexcept { return weights_; }
  std::optional<double> find(std::string_view name) const;

  /// Keeps only `names`, renormalised; uniform over `names` when none of
  /// them carry weight.
  QosWeights restricted_to(std::span<const std::string> names) const;

 private:
  std::map<std::string, double, std::less<>> weights_;
};

struct DegreeTerm {
  std::string property;
  bool quantitative = false;
  bool missing = false;  // no same-kind counterpart in the candidate
  double weight = 0.0;
  double degree = 1.0;
  std::optional<double> z_reference, z_candidate;
  std::optional<double> eta_reference, eta_candidate;
  std::optional<MatchValue> concept_match;
};

struct QosBreakdown {
  double total = 0.0;
  std::vector<DegreeTerm> terms;
};

/// How close `candidate` is to `reference` in QoS terms: the weighted sum of
/// per-property degrees over the reference's properties. Empty weights mean
/// uniform. A property without a same-kind counterpart contributes 1.
QosBreakdown qos_breakdown(const Ontology& o, const Operation& reference,
                           const Operation& candidate, const QosWeights& weights,
                           const PopulationSet& pops);
double qos_degree(const Ontology& o, const Operation& reference, const Operation& candidate,
                  const QosWeights& weights, const PopulationSet& pops);

/// Weighted mean of operation degrees over `pairing` (lhs = candidate
/// operation, rhs = reference operation). weights and pops are indexed by
/// reference operation; op_weights defaults to uniform.
double service_qos_degree(const Ontology& o, const Service& reference, const Service& candidate,
                          std::span<const OperationPair> pairing,
                          std::span<const QosWeights> weights,
                          std::span<const PopulationSet> pops,
                          const WeightVector* op_weights = nullptr);

}  // namespace svcsub
