#include "svcsub/registry.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

namespace svcsub {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

BindingMode mode_for(Tier t) {
  switch (t) {
    case Tier::Equivalent:
    case Tier::AlmostEquivalent: return BindingMode::Direct;
    case Tier::Subset: return BindingMode::Subset;
    case Tier::Subsume: return BindingMode::SubsumeFallback;
    case Tier::Proxy: return BindingMode::Proxied;
  }
  return BindingMode::Proxied;
}

bool satisfies(MatchValue v) { return v == MatchValue::Exact || v == MatchValue::PlugIn; }

std::vector<std::string> operation_names(const Interface& ifc) {
  std::vector<std::string> out;
  out.reserve(ifc.size());
  for (const auto& op : ifc.operations) out.push_back(op.name());
  return out;
}

std::vector<std::string> property_names(const Operation& op) {
  std::vector<std::string> out;
  for (const auto& np : op.nfps) out.push_back(property_name(np));
  return out;
}

struct Located {
  Tier tier;
  const Candidate* candidate;
};

std::optional<Located> locate(const SubstitutionPlan& plan, std::string_view id) {
  for (auto t : {Tier::Equivalent, Tier::AlmostEquivalent, Tier::Subset, Tier::Subsume})
    for (const auto& c : plan.tier(t))
      if (c.service == id) return Located{t, &c};
  return std::nullopt;
}

std::string describe(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += "; ";
    out += d.path + ": " + d.message;
  }
  return out;
}

nlohmann::json candidate_json(const Candidate& c) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : c.pairing) pairs.push_back({p.lhs, p.rhs});
  nlohmann::json j = {{"service", c.service},
                      {"match", std::string(to_string(c.match))},
                      {"degree", c.degree},
                      {"pairing", pairs}};
  if (!c.operations.empty()) j["operations"] = c.operations;
  return j;
}

}  // namespace

std::string_view to_string(BindingMode m) {
  switch (m) {
    case BindingMode::Direct: return "direct";
    case BindingMode::Subset: return "subset";
    case BindingMode::SubsumeFallback: return "subsume-fallback";
    case BindingMode::Proxied: return "proxied";
  }
  return "proxied";
}

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::Equivalent: return "equivalent";
    case Tier::AlmostEquivalent: return "almost";
    case Tier::Subset: return "subset";
    case Tier::Subsume: return "subsume";
    case Tier::Proxy: return "proxy";
  }
  return "proxy";
}

ApplicationProfile parse_profile(const nlohmann::json& doc) {
  if (!doc.is_object()) throw RegistryError("profile must be a JSON object");
  ApplicationProfile p;
  if (!doc.contains("app") || !doc.at("app").is_string() || doc.at("app").get<std::string>().empty())
    throw RegistryError("profile requires a non-empty string field 'app'");
  p.app = doc.at("app").get<std::string>();
  if (!doc.contains("required")) throw RegistryError("profile requires field 'required'");
  try {
    p.required = parse_interface(doc.at("required"), "required");
  } catch (const ModelError& e) {
    throw RegistryError(std::string("profile: ") + e.what());
  }
  if (doc.contains("operations")) {
    const auto& ops = doc.at("operations");
    if (!ops.is_array()) throw RegistryError("profile 'operations' must be an array");
    for (const auto& o : ops) {
      if (!o.is_string()) throw RegistryError("profile operation names must be strings");
      p.operations.push_back(o.get<std::string>());
    }
  }
  if (doc.contains("weights")) {
    const auto& w = doc.at("weights");
    if (!w.is_object()) throw RegistryError("profile 'weights' must be an object");
    for (const auto& [k, v] : w.items()) {
      if (!v.is_number()) throw RegistryError("weight '" + k + "' must be a number");
      p.weights[k] = v.get<double>();
    }
  }
  try {
    QosWeights check(p.weights);
  } catch (const QosError& e) {
    throw RegistryError(std::string("profile: ") + e.what());
  }
  return p;
}

ApplicationProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RegistryError("cannot open profile '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw RegistryError(path.filename().string() + ": " + e.what());
  }
  return parse_profile(doc);
}

nlohmann::json to_json(const ApplicationProfile& p) {
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [k, v] : p.weights) weights[k] = v;
  return {{"app", p.app}, {"required", to_json(p.required)}, {"operations", p.operations},
          {"weights", weights}};
}

std::optional<std::pair<Tier, const Candidate*>> SubstitutionPlan::best() const {
  for (auto t : {Tier::Equivalent, Tier::AlmostEquivalent, Tier::Subset, Tier::Subsume}) {
    const auto& list = tier(t);
    if (!list.empty()) return std::make_pair(t, &list.front());
  }
  return std::nullopt;
}

const std::vector<Candidate>& SubstitutionPlan::tier(Tier t) const {
  static const std::vector<Candidate> none;
  switch (t) {
    case Tier::Equivalent: return equivalent;
    case Tier::AlmostEquivalent: return almost;
    case Tier::Subset: return subset;
    case Tier::Subsume: return subsume;
    case Tier::Proxy: return none;
  }
  return none;
}

nlohmann::json SubstitutionPlan::to_json() const {
  auto list = [](const std::vector<Candidate>& cs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cs) arr.push_back(candidate_json(c));
    return arr;
  };
  return {{"subject", subject},   {"equivalent", list(equivalent)}, {"almost", list(almost)},
          {"subset", list(subset)}, {"subsume", list(subsume)},       {"proxy", proxy}};
}

ProxyQueue::ProxyQueue(std::size_t capacity, LogicalTime timeout)
    : capacity_(capacity), timeout_(timeout) {}

bool ProxyQueue::push(CallRecord call) {
  if (calls_.size() >= capacity_) return false;
  calls_.push_back(std::move(call));
  return true;
}

ProxyQueue::Flush ProxyQueue::drain(LogicalTime now) {
  Flush out;
  while (!calls_.empty()) {
    auto call = std::move(calls_.front());
    calls_.pop_front();
    if (now >= call.at && now - call.at > timeout_)
      ++out.expired;
    else
      out.delivered.push_back(std::move(call));
  }
  return out;
}

nlohmann::json RebindDecision::to_json() const {
  nlohmann::json j = {{"event", event},
                      {"service", service},
                      {"app", app},
                      {"previous", previous ? nlohmann::json(*previous) : nlohmann::json()},
                      {"chosen", chosen ? nlohmann::json(*chosen) : nlohmann::json()},
                      {"tier", std::string(svcsub::to_string(tier))},
                      {"mode", std::string(svcsub::to_string(mode))},
                      {"degree", degree ? nlohmann::json(*degree) : nlohmann::json()},
                      {"rebound", rebound}};
  if (!flushed.empty() || expired > 0) {
    j["flushed"] = flushed.size();
    j["expired"] = expired;
  }
  return j;
}

Registry::Registry(Ontology ontology, RegistryConfig config)
    : ontology_(std::move(ontology)), config_(config) {}

const Service* Registry::find_service(std::string_view id) const {
  auto it = services_.find(id);
  return it == services_.end() ? nullptr : &it->second.service;
}

const Service* Registry::find_departed(std::string_view id) const {
  auto it = departed_.find(id);
  return it == departed_.end() ? nullptr : &it->second;
}

std::vector<std::string> Registry::service_ids() const { return order_; }

const Binding* Registry::binding(std::string_view app) const {
  auto it = apps_.find(app);
  return it == apps_.end() ? nullptr : &it->second.binding;
}

std::vector<Binding> Registry::bindings() const {
  std::vector<Binding> out;
  out.reserve(apps_.size());
  for (const auto& [app, state] : apps_) out.push_back(state.binding);
  return out;
}

std::size_t Registry::queued_calls(std::string_view app) const {
  auto it = apps_.find(app);
  return it == apps_.end() ? 0 : it->second.queue.size();
}

std::uint64_t Registry::seq_of(std::string_view id) const {
  auto it = services_.find(id);
  return it == services_.end() ? std::numeric_limits<std::uint64_t>::max() : it->second.seq;
}

SubstitutionPlan Registry::compute_plan(const Service& reference,
                                        std::span<const std::string> used,
                                        const std::map<std::string, double, std::less<>>& weights,
                                        std::string_view exclude) const {
  const auto used_names =
      used.empty() ? operation_names(reference.interface)
                   : std::vector<std::string>(used.begin(), used.end());
  const bool all_used = used_names.size() == reference.interface.size();

  struct Tiered {
    Tier tier;
    Candidate candidate;
    const Service* service;
  };
  std::vector<Tiered> tiered;

  const auto t0 = Clock::now();
  for (const auto& id : order_) {
    if (id == exclude || id == reference.id) continue;
    const auto& cand = services_.find(id)->second.service;
    InterfaceMatch full;
    if (cand.interface.size() == reference.interface.size())
      full = match_interfaces(ontology_, cand.interface, reference.interface);
    if (satisfies(full.value)) {
      const auto t = full.value == MatchValue::Exact ? Tier::Equivalent : Tier::AlmostEquivalent;
      tiered.push_back({t, {id, full.value, 1.0, full.pairing, {}}, &cand});
      continue;
    }
    InterfaceMatch cover;
    if (all_used && cand.interface.size() == reference.interface.size())
      cover = full;
    else
      cover = match_interfaces_covering(ontology_, cand.interface, reference.interface, used_names);
    if (satisfies(cover.value)) {
      tiered.push_back({Tier::Subset, {id, cover.value, 1.0, cover.pairing, used_names}, &cand});
    } else if (full.value == MatchValue::Subsume) {
      tiered.push_back({Tier::Subsume, {id, full.value, 1.0, full.pairing, {}}, &cand});
    } else if (cover.value == MatchValue::Subsume) {
      tiered.push_back({Tier::Subsume, {id, cover.value, 1.0, cover.pairing, used_names}, &cand});
    }
  }
  match_us_ += micros_since(t0);

  // Populations per reference operation: the reference plus every paired
  // candidate operation.
  const std::size_t n_ops = reference.interface.size();
  std::vector<std::vector<Contributor>> contributors(n_ops);
  for (std::size_t r = 0; r < n_ops; ++r)
    contributors[r].push_back({reference.id, &reference.interface.operations[r]});
  for (const auto& t : tiered)
    for (const auto& p : t.candidate.pairing)
      contributors[p.rhs].push_back({t.candidate.service, &t.service->interface.operations[p.lhs]});

  const QosWeights profile_weights(weights);
  std::vector<PopulationSet> pops;
  std::vector<QosWeights> op_weights;
  pops.reserve(n_ops);
  op_weights.reserve(n_ops);
  for (std::size_t r = 0; r < n_ops; ++r) {
    pops.push_back(build_populations(contributors[r]));
    op_weights.push_back(
        profile_weights.restricted_to(property_names(reference.interface.operations[r])));
  }

  SubstitutionPlan plan;
  plan.subject = reference.id;
  for (auto& t : tiered) {
    t.candidate.degree = service_qos_degree(ontology_, reference, *t.service, t.candidate.pairing,
                                            op_weights, pops);
    switch (t.tier) {
      case Tier::Equivalent: plan.equivalent.push_back(std::move(t.candidate)); break;
      case Tier::AlmostEquivalent: plan.almost.push_back(std::move(t.candidate)); break;
      case Tier::Subset: plan.subset.push_back(std::move(t.candidate)); break;
      case Tier::Subsume: plan.subsume.push_back(std::move(t.candidate)); break;
      case Tier::Proxy: break;
    }
  }
  auto by_degree = [this](const Candidate& a, const Candidate& b) {
    if (a.degree != b.degree) return a.degree < b.degree;
    return seq_of(a.service) < seq_of(b.service);
  };
  for (auto* list : {&plan.equivalent, &plan.almost, &plan.subset, &plan.subsume})
    std::stable_sort(list->begin(), list->end(), by_degree);
  plan.proxy = plan.equivalent.empty() && plan.almost.empty() && plan.subset.empty() &&
               plan.subsume.empty();
  return plan;
}

Binding Registry::binding_from(const AppState& state, Tier tier, const Candidate& c,
                               const Service& reference, LogicalTime now) const {
  Binding b;
  b.app = state.binding.app;
  b.service = c.service;
  b.bound_at = now;
  b.mode = mode_for(tier);
  b.degree = c.degree;
  const auto& cand = services_.find(c.service)->second.service;
  for (const auto& p : c.pairing) {
    (void)reference;
    b.used_operations.push_back(cand.interface.operations[p.lhs].name());
  }
  return b;
}

std::optional<Registry::Pending> Registry::on_appearance(const AppState& state, const Service& s,
                                                         LogicalTime now) const {
  const Binding& b = state.binding;
  if (b.mode == BindingMode::Direct) {
    const auto* incumbent = find_service(*b.service);
    if (!incumbent) return std::nullopt;
    const auto m = match_interfaces(ontology_, s.interface, incumbent->interface);
    if (!satisfies(m.value)) return std::nullopt;
  }

  const auto plan =
      compute_plan(state.reference, state.profile.operations, state.profile.weights, "");
  std::optional<Located> current;
  if (b.service) current = locate(plan, *b.service);

  std::optional<Located> target;
  if (b.mode == BindingMode::Direct) {
    auto mine = locate(plan, s.id);
    if (mine && mine->tier != Tier::Subsume &&
        (!current || mine->candidate->degree < current->candidate->degree))
      target = mine;
  } else if (auto best = plan.best()) {
    const Located head{best->first, best->second};
    if (!current)
      target = head;
    else if (head.candidate->service != current->candidate->service &&
             (head.tier < current->tier ||
              (head.tier == current->tier && head.candidate->degree < current->candidate->degree)))
      target = head;
  }

  Pending p{state.profile.app, b, {}};
  auto& d = p.decision;
  d.event = "register";
  d.service = s.id;
  d.app = state.profile.app;
  d.previous = b.service;
  if (target) {
    p.binding = binding_from(state, target->tier, *target->candidate, state.reference, now);
    d.rebound = true;
    d.chosen = target->candidate->service;
    d.tier = target->tier;
    d.mode = p.binding.mode;
    d.degree = target->candidate->degree;
  } else {
    d.chosen = b.service;
    d.tier = current ? current->tier : Tier::Proxy;
    d.mode = b.mode;
    d.degree = current ? std::optional<double>(current->candidate->degree) : b.degree;
  }
  return p;
}

Registry::Pending Registry::on_departure(const AppState& state, const Service& departed,
                                         LogicalTime now) const {
  const auto plan =
      compute_plan(departed, state.binding.used_operations, state.profile.weights, departed.id);
  Pending p{state.profile.app, state.binding, {}};
  auto& d = p.decision;
  d.event = "unregister";
  d.service = departed.id;
  d.app = state.profile.app;
  d.previous = departed.id;
  d.rebound = true;
  if (auto best = plan.best()) {
    p.binding = binding_from(state, best->first, *best->second, departed, now);
    d.chosen = best->second->service;
    d.tier = best->first;
    d.mode = p.binding.mode;
    d.degree = best->second->degree;
  } else {
    p.binding.service.reset();
    p.binding.mode = BindingMode::Proxied;
    p.binding.bound_at = now;
    p.binding.degree.reset();
    p.binding.used_operations.clear();
    d.tier = Tier::Proxy;
    d.mode = BindingMode::Proxied;
  }
  return p;
}

void Registry::apply(Pending& p, LogicalTime now) {
  auto& state = apps_.find(p.app)->second;
  const bool was_proxied = state.binding.mode == BindingMode::Proxied;
  state.binding = p.binding;
  if (was_proxied && p.binding.mode != BindingMode::Proxied) {
    auto flush = state.queue.drain(now);
    p.decision.flushed = std::move(flush.delivered);
    p.decision.expired = flush.expired;
  }
}

void Registry::log(const std::vector<RebindDecision>& decisions) const {
  if (!log_) return;
  for (const auto& d : decisions) {
    nlohmann::json line = {{"event", d.event},
                           {"service", d.service},
                           {"app", d.app},
                           {"chosen", d.chosen ? nlohmann::json(*d.chosen) : nlohmann::json()},
                           {"tier", std::string(to_string(d.tier))},
                           {"degree", d.degree ? nlohmann::json(*d.degree) : nlohmann::json()},
                           {"latency_us", timing_.total_us}};
    *log_ << line.dump() << '\n';
  }
}

std::vector<RebindDecision> Registry::register_service(Service s, LogicalTime now) {
  const auto t0 = Clock::now();
  match_us_ = 0.0;
  if (services_.contains(s.id)) throw RegistryError("service '" + s.id + "' is already registered");
  if (s.interface.operations.empty())
    throw RegistryError("service '" + s.id + "' publishes no operations");
  if (auto diags = validate_service(s, ontology_); !diags.empty())
    throw RegistryError("service '" + s.id + "' failed validation: " + describe(diags));

  const std::string id = s.id;
  services_.emplace(id, Entry{std::move(s), next_seq_++});
  order_.push_back(id);

  std::vector<Pending> pending;
  try {
    const auto& added = services_.find(id)->second.service;
    for (const auto& [app, state] : apps_)
      if (auto p = on_appearance(state, added, now)) pending.push_back(std::move(*p));
  } catch (...) {
    services_.erase(id);
    order_.pop_back();
    --next_seq_;
    throw;
  }
  departed_.erase(id);

  std::vector<RebindDecision> out;
  out.reserve(pending.size());
  for (auto& p : pending) {
    if (p.decision.rebound) apply(p, now);
    out.push_back(std::move(p.decision));
  }
  timing_ = {match_us_, micros_since(t0)};
  log(out);
  return out;
}

Departure Registry::unregister_service(std::string_view id, LogicalTime now) {
  const auto t0 = Clock::now();
  match_us_ = 0.0;
  auto it = services_.find(id);
  if (it == services_.end())
    throw RegistryError("service '" + std::string(id) + "' is not registered");
  const Service departed = it->second.service;

  Departure out;
  out.plan = compute_plan(departed, {}, {}, departed.id);
  std::vector<Pending> pending;
  for (const auto& [app, state] : apps_)
    if (state.binding.mode != BindingMode::Proxied && state.binding.service == departed.id)
      pending.push_back(on_departure(state, departed, now));

  services_.erase(it);
  order_.erase(std::find(order_.begin(), order_.end(), departed.id));
  departed_.insert_or_assign(departed.id, departed);
  for (auto& p : pending) {
    apply(p, now);
    out.rebinds.push_back(std::move(p.decision));
  }
  timing_ = {match_us_, micros_since(t0)};
  log(out.rebinds);
  return out;
}

RebindDecision Registry::bind(ApplicationProfile profile, LogicalTime now) {
  const auto t0 = Clock::now();
  match_us_ = 0.0;
  if (profile.app.empty()) throw RegistryError("profile needs an application id");
  if (profile.required.operations.empty())
    throw RegistryError("profile for '" + profile.app + "' requires no operations");
  if (auto diags = validate_interface(profile.required, ontology_, "required"); !diags.empty())
    throw RegistryError("profile for '" + profile.app + "' failed validation: " + describe(diags));
  for (const auto& name : profile.operations)
    if (!profile.required.find(name))
      throw RegistryError("profile for '" + profile.app + "' uses unknown operation '" + name + "'");
  try {
    QosWeights check(profile.weights);
  } catch (const QosError& e) {
    throw RegistryError("profile for '" + profile.app + "': " + e.what());
  }

  Service reference{"sk:" + profile.app, profile.required, {}};
  const auto plan = compute_plan(reference, profile.operations, profile.weights, "");

  std::optional<Located> chosen;
  for (auto t : {Tier::Equivalent, Tier::AlmostEquivalent, Tier::Subset})
    for (const auto& c : plan.tier(t)) {
      if (!chosen || c.degree < chosen->candidate->degree ||
          (c.degree == chosen->candidate->degree &&
           seq_of(c.service) < seq_of(chosen->candidate->service)))
        chosen = Located{t, &c};
    }

  const std::string app = profile.app;
  auto existing = apps_.find(app);
  std::optional<std::string> previous;
  if (existing != apps_.end()) previous = existing->second.binding.service;

  AppState fresh{std::move(profile), std::move(reference), {}, {config_.proxy_capacity, config_.proxy_timeout}};
  fresh.binding.app = app;
  fresh.binding.bound_at = now;
  Pending p{app, fresh.binding, {}};
  if (chosen)
    p.binding = binding_from(fresh, chosen->tier, *chosen->candidate, fresh.reference, now);

  auto& d = p.decision;
  d.event = "bind";
  d.service = app;
  d.app = app;
  d.previous = previous;
  d.rebound = true;
  d.chosen = p.binding.service;
  d.tier = chosen ? chosen->tier : Tier::Proxy;
  d.mode = p.binding.mode;
  d.degree = p.binding.degree;

  if (existing != apps_.end()) {
    existing->second.profile = std::move(fresh.profile);
    existing->second.reference = std::move(fresh.reference);
  } else {
    apps_.emplace(app, std::move(fresh));
  }
  apply(p, now);
  timing_ = {match_us_, micros_since(t0)};
  std::vector<RebindDecision> one{p.decision};
  log(one);
  return p.decision;
}

SubstitutionPlan Registry::plan_for(std::string_view id, const ApplicationProfile* profile) const {
  const Service* reference = find_service(id);
  if (!reference) reference = find_departed(id);
  if (!reference) throw RegistryError("unknown service '" + std::string(id) + "'");
  static const std::map<std::string, double, std::less<>> no_weights;
  std::span<const std::string> used;
  if (profile) {
    for (const auto& name : profile->operations)
      if (!reference->interface.find(name))
        throw RegistryError("profile operation '" + name + "' is not published by '" +
                            reference->id + "'");
    used = profile->operations;
  }
  return compute_plan(*reference, used, profile ? profile->weights : no_weights, reference->id);
}

CallOutcome Registry::call(std::string_view app, std::string operation, std::string payload,
                           LogicalTime now) {
  auto it = apps_.find(app);
  if (it == apps_.end()) throw RegistryError("unknown application '" + std::string(app) + "'");
  auto& state = it->second;
  if (state.binding.mode != BindingMode::Proxied) return {CallRoute::Forwarded, state.binding.service};
  const bool queued =
      state.queue.push({std::string(app), std::move(operation), std::move(payload), now});
  return {queued ? CallRoute::Queued : CallRoute::Rejected, std::nullopt};
}

}  // namespace svcsub
