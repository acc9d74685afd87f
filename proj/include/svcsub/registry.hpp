#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "svcsub/matching.hpp"
#include "svcsub/model.hpp"
#include "svcsub/ontology.hpp"
#include "svcsub/qos.hpp"

namespace svcsub {

using LogicalTime = std::uint64_t;

class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BindingMode { Direct, Subset, SubsumeFallback, Proxied };
enum class Tier { Equivalent, AlmostEquivalent, Subset, Subsume, Proxy };

std::string_view to_string(BindingMode m);
std::string_view to_string(Tier t);

/// What an application needs: the operations it calls, with the QoS values it
/// would like (the synthetic reference service), and how it weighs them.
struct ApplicationProfile {
  std::string app;
  Interface required;
  std::vector<std::string> operations;  // names in `required` the app uses; empty = all
  std::map<std::string, double, std::less<>> weights;  // by NFP name; empty = uniform
};

ApplicationProfile parse_profile(const nlohmann::json& doc);
ApplicationProfile load_profile(const std::filesystem::path& path);
nlohmann::json to_json(const ApplicationProfile& p);

struct Binding {
  std::string app;
  std::optional<std::string> service;  // empty while proxied
  LogicalTime bound_at = 0;
  BindingMode mode = BindingMode::Proxied;
  std::optional<double> degree;              // QoS degree at the last decision
  std::vector<std::string> used_operations;  // operations of the bound service in use
};

struct Candidate {
  std::string service;
  MatchValue match = MatchValue::Fail;
  double degree = 1.0;
  std::vector<OperationPair> pairing;   // lhs = candidate operation, rhs = reference operation
  std::vector<std::string> operations;  // reference operations covered (subset tier only)
};

/// Tiered replacement candidates for one reference service, each tier sorted
/// by ascending QoS degree (earlier registration first on ties).
struct SubstitutionPlan {
  std::string subject;
  std::vector<Candidate> equivalent;
  std::vector<Candidate> almost;
  std::vector<Candidate> subset;
  std::vector<Candidate> subsume;
  bool proxy = false;

  /// Head of the first non-empty tier.
  std::optional<std::pair<Tier, const Candidate*>> best() const;
  const std::vector<Candidate>& tier(Tier t) const;
  nlohmann::json to_json() const;
};

struct CallRecord {
  std::string app;
  std::string operation;
  std::string payload;
  LogicalTime at = 0;
};

/// Bounded FIFO of calls addressed to a vanished interface.
class ProxyQueue {
 public:
  ProxyQueue(std::size_t capacity, LogicalTime timeout);

  /// False when the queue is full.
  bool push(CallRecord call);

  struct Flush {
    std::vector<CallRecord> delivered;
    std::size_t expired = 0;
  };
  /// Empties the queue in arrival order, dropping calls older than the timeout.
  Flush drain(LogicalTime now);

  std::size_t size() const noexcept { return calls_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  LogicalTime timeout_;
  std::deque<CallRecord> calls_;
};

enum class CallRoute { Forwarded, Queued, Rejected };

struct CallOutcome {
  CallRoute route = CallRoute::Rejected;
  std::optional<std::string> service;
};

struct RebindDecision {
  std::string event;    // register | unregister | bind
  std::string service;  // subject of the event (service id, or app id for bind)
  std::string app;
  std::optional<std::string> previous;
  std::optional<std::string> chosen;
  Tier tier = Tier::Proxy;
  BindingMode mode = BindingMode::Proxied;
  std::optional<double> degree;
  bool rebound = false;
  std::vector<CallRecord> flushed;
  std::size_t expired = 0;

  nlohmann::json to_json() const;
};

struct Departure {
  SubstitutionPlan plan;  // uniform weights, all operations
  std::vector<RebindDecision> rebinds;
};

struct EventTiming {
  double match_us = 0.0;  // candidate tiering (semantic matching)
  double total_us = 0.0;  // whole event
};

struct RegistryConfig {
  std::size_t proxy_capacity = 1024;
  LogicalTime proxy_timeout = std::numeric_limits<LogicalTime>::max();
};

/// Live service set and application bindings. Single writer: every mutating
/// call is one atomic event; a throwing call leaves the state untouched.
class Registry {
 public:
  explicit Registry(Ontology ontology, RegistryConfig config = {});

  /// Adds `s` and moves applications to it where it is a strict QoS
  /// improvement over an equivalent or almost-equivalent incumbent. Proxied
  /// and degraded bindings are re-planned.
  std::vector<RebindDecision> register_service(Service s, LogicalTime now = 0);

  /// Removes the service and rebinds every application using it to the best
  /// candidate tier, or to a proxy.
  Departure unregister_service(std::string_view id, LogicalTime now = 0);

  /// Binds (or re-binds) an application to the interface-satisfying service
  /// closest to its profile.
  RebindDecision bind(ApplicationProfile profile, LogicalTime now = 0);

  /// Replacement plan for a registered or departed service, without side
  /// effects. Profile operations, when given, must name operations of that
  /// service.
  SubstitutionPlan plan_for(std::string_view id, const ApplicationProfile* profile = nullptr) const;

  /// Routes a call from an application: forwarded when bound, queued when
  /// proxied.
  CallOutcome call(std::string_view app, std::string operation, std::string payload,
                   LogicalTime now);

  const Ontology& ontology() const noexcept { return ontology_; }
  const Service* find_service(std::string_view id) const;
  const Service* find_departed(std::string_view id) const;
  std::vector<std::string> service_ids() const;  // registration order
  const Binding* binding(std::string_view app) const;
  std::vector<Binding> bindings() const;  // sorted by app id
  std::size_t queued_calls(std::string_view app) const;
  const EventTiming& last_timing() const noexcept { return timing_; }

  /// One JSON line per decision: {event, service, app, chosen, tier, degree,
  /// latency_us}.
  void set_event_log(std::ostream* log) noexcept { log_ = log; }

 private:
  struct Entry {
    Service service;
    std::uint64_t seq = 0;
  };
  struct AppState {
    ApplicationProfile profile;
    Service reference;
    Binding binding;
    ProxyQueue queue;
  };
  struct Pending {
    std::string app;
    Binding binding;
    RebindDecision decision;
  };

  SubstitutionPlan compute_plan(const Service& reference, std::span<const std::string> used,
                                const std::map<std::string, double, std::less<>>& weights,
                                std::string_view exclude) const;
  std::optional<Pending> on_appearance(const AppState& state, const Service& s,
                                       LogicalTime now) const;
  Pending on_departure(const AppState& state, const Service& departed, LogicalTime now) const;
  Binding binding_from(const AppState& state, Tier tier, const Candidate& c,
                       const Service& reference, LogicalTime now) const;
  void apply(Pending& p, LogicalTime now);
  void log(const std::vector<RebindDecision>& decisions) const;
  std::uint64_t seq_of(std::string_view id) const;

  Ontology ontology_;
  RegistryConfig config_;
  std::map<std::string, Entry, std::less<>> services_;
  std::vector<std::string> order_;
  std::map<std::string, Service, std::less<>> departed_;
  std::map<std::string, AppState, std::less<>> apps_;
  std::uint64_t next_seq_ = 0;
  mutable double match_us_ = 0.0;
  EventTiming timing_;
  std::ostream* log_ = nullptr;
};

}  // namespace svcsub
