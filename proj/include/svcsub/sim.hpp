#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "svcsub/model.hpp"
#include "svcsub/ontology.hpp"
#include "svcsub/registry.hpp"

namespace svcsub {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeded source shared by the generators. Conversions are done by hand so
/// that output does not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform();                             // [0, 1)
  double uniform(double lo, double hi);         // [lo, hi)
  std::size_t index(std::size_t n);             // [0, n)
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct NfpRange {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  Order order = Order::Less;
};

struct PopulationConfig {
  std::uint64_t ontology_seed = 1;
  std::size_t families = 4;       // disjoint concept trees; services of one family are comparable
  std::size_t tree_depth = 3;
  std::size_t branching = 3;      // children per node drawn from [1, branching]
  std::size_t aliases = 1;        // concepts declared equivalent to each tree root
  std::size_t max_operations = 2;
  std::size_t max_inputs = 2;
  std::vector<NfpRange> ranges = {{"nbPage", 1.0, 100.0, Order::Greater},
                                  {"price", 1.0, 50.0, Order::Less}};
  std::string qualitative = "access";  // drawn from leaves of the channel tree
};

struct SyntheticEnvironment {
  Ontology ontology;
  std::vector<Service> services;
};

/// Ontology with id "synthetic": per family a capability, input and output
/// tree, plus a shared channel tree for qualitative properties.
Ontology generate_ontology(const PopulationConfig& config);

/// n services with ids svc-0000, svc-0001, ...; deterministic in (config, seed).
SyntheticEnvironment generate_population(std::size_t n, const PopulationConfig& config,
                                         std::uint64_t seed);

enum class EventKind { Register, Unregister, Bind };

std::string_view to_string(EventKind k);

struct TraceEvent {
  LogicalTime at = 0;
  EventKind kind = EventKind::Register;
  std::variant<Service, ApplicationProfile, std::string> payload;  // descriptor, profile, id
};

struct ChurnTrace {
  std::vector<TraceEvent> events;
};

/// Checks timestamp order and that every unregister names an id that is
/// registered at that point of the trace. Throws SimError.
void validate_trace(const ChurnTrace& trace);

/// JSON array of {at, kind, payload}. A string payload of a register or bind
/// event is a file path, relative to `base`.
ChurnTrace parse_trace(const nlohmann::json& doc, const std::filesystem::path& base = {});
ChurnTrace load_trace(const std::filesystem::path& path);
nlohmann::json to_json(const ChurnTrace& trace);

struct TraceConfig {
  std::size_t events = 500;
  std::size_t apps = 4;
  double initial_fraction = 0.5;  // share of the population registered up front
  double departure_rate = 0.45;
  double rebind_rate = 0.02;
};

/// Random churn over `env.services`. Profiles copy one service's interface
/// with perturbed NFP values.
ChurnTrace generate_trace(const SyntheticEnvironment& env, const TraceConfig& config,
                          std::uint64_t seed);

struct Stat {
  std::size_t count = 0;
  double mean = 0.0;
  double p95 = 0.0;
};

Stat summarize(std::vector<double> samples);

struct EventRecord {
  std::size_t index = 0;
  LogicalTime at = 0;
  EventKind kind = EventKind::Register;
  std::string subject;  // service id, or app id for bind
  std::vector<RebindDecision> decisions;
  std::optional<SubstitutionPlan> plan;  // departures only
  std::vector<std::string> diagnostics;
  double match_us = 0.0;
  double latency_us = 0.0;
};

struct RunReport {
  std::vector<EventRecord> events;
  Stat match;
  Stat plan;
  std::vector<Binding> bindings;

  /// {decisions[], timings{match, plan}, bindings{}}.
  nlohmann::json to_json() const;
  /// Same as to_json() without any wall-clock field.
  nlohmann::json decisions_json() const;
};

struct SimConfig {
  RegistryConfig registry;
};

/// Replays the trace serially through a fresh registry. Registry errors are
/// recorded as diagnostics on the event.
RunReport run_scenario(const ChurnTrace& trace, const Ontology& ontology,
                       const SimConfig& config = {});

/// Parses "name=value" items (each may also hold comma-separated pairs).
/// Values must be finite, non-negative and sum to 1. Throws SimError.
std::map<std::string, double, std::less<>> parse_weight_pairs(std::span<const std::string> items);

struct BenchRow {
  std::size_t services = 0;
  double pairwise_match_ms = 0.0;  // every ordered pair of distinct services
  double departure_ms = 0.0;       // one unregister event, plan included
  double departure_match_ms = 0.0;
  double departure_qos_ms = 0.0;   // departure time outside matching
};

/// Rows at n/10, 2n/10, ..., n services (at least one row).
std::vector<BenchRow> bench(std::size_t n, std::uint64_t seed,
                            const PopulationConfig& config = {});

}  // namespace svcsub
