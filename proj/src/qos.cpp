#include "svcsub/qos.hpp"

#include <algorithm>
#include <cmath>

namespace svcsub {

Population::Population(std::string property, Order order, std::vector<Sample> samples)
    : property_(std::move(property)), order_(direction(order)), samples_(std::move(samples)) {
  if (samples_.empty()) throw QosError("population for '" + property_ + "' is empty");
  double sum = 0.0;
  for (const auto& s : samples_) {
    if (!std::isfinite(s.value))
      throw QosError("population for '" + property_ + "' holds a non-finite value");
    sum += s.value;
  }
  const auto n = static_cast<double>(samples_.size());
  mean_ = sum / n;
  double sq = 0.0;
  for (const auto& s : samples_) sq += (s.value - mean_) * (s.value - mean_);
  stddev_ = std::sqrt(sq / n);
}

PopulationSet build_populations(std::span<const Contributor> contributors) {
  std::map<std::string, std::pair<Order, std::vector<Sample>>, std::less<>> grouped;
  for (const auto& c : contributors) {
    for (const auto& np : c.operation->nfps) {
      const auto* qn = std::get_if<QuantitativeProperty>(&np);
      if (!qn) continue;
      const auto dir = direction(qn->order);
      auto [it, inserted] = grouped.try_emplace(qn->name, dir, std::vector<Sample>{});
      if (!inserted && it->second.first != dir)
        throw QosError("operator disagreement for property '" + qn->name + "' (owner '" + c.owner +
                       "')");
      it->second.second.push_back({c.owner, qn->value});
    }
  }
  PopulationSet out;
  for (auto& [name, entry] : grouped)
    out.emplace(name, Population(name, entry.first, std::move(entry.second)));
  return out;
}

double z_score(const Population& pop, double value) {
  if (pop.stddev() == 0.0) return 0.0;
  return (value - pop.mean()) / pop.stddev();
}

double eta(const Population& pop, double value) {
  const double z = z_score(pop, value);
  double e = 0.0;
  if (pop.order() == Order::Less) {
    e = z < -2.0 ? 0.0 : z > 2.0 ? 1.0 : z / 4.0 + 0.5;
  } else {
    e = z < -2.0 ? 1.0 : z > 2.0 ? 0.0 : 0.5 - z / 4.0;
  }
  return std::clamp(e, 0.0, 1.0);
}

double qn_degree(const Population& pop, double a, double b) {
  return std::abs(eta(pop, a) - eta(pop, b));
}

double ql_degree(const Ontology& o, const QualitativeProperty& candidate,
                 const QualitativeProperty& reference) {
  if (candidate.name != reference.name)
    throw QosError("qualitative degree between different properties '" + candidate.name +
                   "' and '" + reference.name + "'");
  return o.distance(candidate.semantic, reference.semantic);
}

QosWeights::QosWeights(std::map<std::string, double, std::less<>> weights)
    : weights_(std::move(weights)) {
  double sum = 0.0;
  for (const auto& [name, w] : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw QosError("weight for '" + name + "' must be finite and non-negative");
    sum += w;
  }
  if (!weights_.empty() && std::abs(sum - 1.0) > 1e-9)
    throw QosError("QoS weights must sum to 1 (got " + std::to_string(sum) + ")");
}

QosWeights QosWeights::uniform(std::span<const std::string> names) {
  std::map<std::string, double, std::less<>> w;
  for (const auto& n : names) w[n] = 0.0;
  for (auto& [n, v] : w) v = 1.0 / static_cast<double>(w.size());
  QosWeights out;
  out.weights_ = std::move(w);
  return out;
}

QosWeights QosWeights::uniform_for(const Operation& reference) {
  std::vector<std::string> names;
  for (const auto& np : reference.nfps) names.push_back(property_name(np));
  return uniform(names);
}

std::optional<double> QosWeights::find(std::string_view name) const {
  auto it = weights_.find(name);
  if (it == weights_.end()) return std::nullopt;
  return it->second;
}

QosWeights QosWeights::restricted_to(std::span<const std::string> names) const {
  std::map<std::string, double, std::less<>> w;
  double sum = 0.0;
  for (const auto& n : names) {
    const double v = find(n).value_or(0.0);
    w[n] = v;
    sum += v;
  }
  if (sum <= 0.0) return uniform(names);
  for (auto& [n, v] : w) v /= sum;
  QosWeights out;
  out.weights_ = std::move(w);
  return out;
}

QosBreakdown qos_breakdown(const Ontology& o, const Operation& reference,
                           const Operation& candidate, const QosWeights& weights,
                           const PopulationSet& pops) {
  const QosWeights effective = weights.empty() ? QosWeights::uniform_for(reference) : weights;
  for (const auto& [name, w] : effective.values())
    if (!reference.find_property(name))
      throw QosError("weight given for '" + name + "' which operation '" + reference.name() +
                     "' does not declare");

  QosBreakdown out;
  for (const auto& np : reference.nfps) {
    DegreeTerm term;
    term.property = property_name(np);
    const auto w = effective.find(term.property);
    if (!w) throw QosError("no weight for property '" + term.property + "'");
    term.weight = *w;
    const Property* other = candidate.find_property(term.property);

    if (const auto* ref_qn = std::get_if<QuantitativeProperty>(&np)) {
      term.quantitative = true;
      auto pit = pops.find(term.property);
      if (pit == pops.end())
        throw QosError("no population for quantitative property '" + term.property + "'");
      const auto& pop = pit->second;
      if (direction(ref_qn->order) != pop.order())
        throw QosError("operator disagreement for property '" + term.property + "'");
      term.z_reference = z_score(pop, ref_qn->value);
      term.eta_reference = eta(pop, ref_qn->value);
      const auto* cand_qn = other ? std::get_if<QuantitativeProperty>(other) : nullptr;
      if (!cand_qn) {
        term.missing = true;
        term.degree = 1.0;
      } else {
        if (direction(cand_qn->order) != pop.order())
          throw QosError("operator disagreement for property '" + term.property + "'");
        term.z_candidate = z_score(pop, cand_qn->value);
        term.eta_candidate = eta(pop, cand_qn->value);
        term.degree = std::abs(*term.eta_reference - *term.eta_candidate);
      }
    } else {
      const auto& ref_ql = std::get<QualitativeProperty>(np);
      const auto* cand_ql = other ? std::get_if<QualitativeProperty>(other) : nullptr;
      if (!cand_ql) {
        term.missing = true;
        term.degree = 1.0;
      } else {
        term.concept_match = o.match(cand_ql->semantic, ref_ql.semantic);
        term.degree = ql_degree(o, *cand_ql, ref_ql);
      }
    }
    out.total += term.weight * term.degree;
    out.terms.push_back(std::move(term));
  }
  return out;
}

double qos_degree(const Ontology& o, const Operation& reference, const Operation& candidate,
                  const QosWeights& weights, const PopulationSet& pops) {
  return qos_breakdown(o, reference, candidate, weights, pops).total;
}

double service_qos_degree(const Ontology& o, const Service& reference, const Service& candidate,
                          std::span<const OperationPair> pairing,
                          std::span<const QosWeights> weights,
                          std::span<const PopulationSet> pops, const WeightVector* op_weights) {
  if (pairing.empty())
    throw QosError("no operation pairing between '" + candidate.id + "' and '" + reference.id + "'");
  const std::size_t n = reference.interface.size();
  if (weights.size() != n || pops.size() != n)
    throw QosError("per-operation weights and populations must cover every reference operation");
  if (op_weights && op_weights->size() != n)
    throw QosError("operation weights must cover every reference operation");
  double num = 0.0;
  double den = 0.0;
  for (const auto& p : pairing) {
    if (p.rhs >= n || p.lhs >= candidate.interface.size())
      throw QosError("operation pairing out of range");
    const double w = op_weights ? (*op_weights)[p.rhs] : 1.0;
    num += w * qos_degree(o, reference.interface.operations[p.rhs],
                          candidate.interface.operations[p.lhs], weights[p.rhs], pops[p.rhs]);
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace svcsub
