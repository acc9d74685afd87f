#include "svcsub/sim.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace svcsub {

namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

constexpr const char* kOntologyId = "synthetic";
constexpr std::array<const char*, 3> kRoles = {"cap", "in", "out"};

struct Node {
  std::string name;
  std::size_t parent = 0;  // self for the root
  std::size_t depth = 0;
  bool leaf = true;
};

using Tree = std::vector<Node>;

Tree grow_tree(const std::string& prefix, const PopulationConfig& config, Rng& rng) {
  Tree t;
  t.push_back({prefix + ".0", 0, 0, true});
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].depth >= config.tree_depth) continue;
    const std::size_t kids = 1 + rng.index(std::max<std::size_t>(config.branching, 1));
    for (std::size_t k = 0; k < kids; ++k) {
      t[i].leaf = false;
      t.push_back({prefix + "." + std::to_string(t.size()), i, t[i].depth + 1, true});
    }
  }
  return t;
}

// Trees are grown from the ontology seed alone, so generate_ontology and
// generate_population agree on the layout.
struct Layout {
  std::vector<std::array<Tree, 3>> families;
  Tree channel;
};

Layout build_layout(const PopulationConfig& config) {
  if (config.families == 0) throw SimError("population config needs at least one family");
  Rng rng(config.ontology_seed);
  Layout l;
  for (std::size_t f = 0; f < config.families; ++f) {
    std::array<Tree, 3> trees;
    for (std::size_t r = 0; r < 3; ++r)
      trees[r] = grow_tree("f" + std::to_string(f) + "." + kRoles[r], config, rng);
    l.families.push_back(std::move(trees));
  }
  l.channel = grow_tree("ch", config, rng);
  return l;
}

std::string alias_name(const Tree& t, std::size_t k) { return t[0].name + "~" + std::to_string(k); }

// Random leaf, then a random number of steps towards the root. Roots are
// sometimes replaced by one of their aliases.
std::string pick_concept(const Tree& t, const PopulationConfig& config, Rng& rng) {
  std::vector<std::size_t> leaves;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].leaf) leaves.push_back(i);
  std::size_t node = leaves[rng.index(leaves.size())];
  std::size_t up = rng.index(t[node].depth + 1);
  while (up-- > 0) node = t[node].parent;
  if (node == 0 && config.aliases > 0 && rng.chance(0.5))
    return alias_name(t, rng.index(config.aliases));
  return t[node].name;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

const TypeRef kStringType{"xsd", "string"};

}  // namespace

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw SimError("cannot draw an index from an empty range");
  return static_cast<std::size_t>(engine_() % n);
}

Ontology generate_ontology(const PopulationConfig& config) {
  const auto layout = build_layout(config);
  std::vector<std::string> concepts;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::pair<std::string, std::string>> eqs;
  auto add_tree = [&](const Tree& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      concepts.push_back(t[i].name);
      if (i != 0) edges.emplace_back(t[t[i].parent].name, t[i].name);
    }
    for (std::size_t k = 0; k < config.aliases; ++k) {
      concepts.push_back(alias_name(t, k));
      eqs.emplace_back(t[0].name, alias_name(t, k));
    }
  };
  for (const auto& fam : layout.families)
    for (const auto& t : fam) add_tree(t);
  add_tree(layout.channel);
  return Ontology(kOntologyId, std::move(concepts), std::move(edges), std::move(eqs));
}

SyntheticEnvironment generate_population(std::size_t n, const PopulationConfig& config,
                                         std::uint64_t seed) {
  if (n == 0) throw SimError("population size must be at least 1");
  if (config.max_operations == 0 || config.max_inputs == 0)
    throw SimError("population config needs at least one operation and one input");
  for (const auto& r : config.ranges)
    if (!(r.min <= r.max) || !std::isfinite(r.min) || !std::isfinite(r.max))
      throw SimError("invalid range for property '" + r.name + "'");

  const auto layout = build_layout(config);
  std::vector<std::string> channel_leaves;
  for (const auto& node : layout.channel)
    if (node.leaf) channel_leaves.push_back(node.name);

  SyntheticEnvironment env{generate_ontology(config), {}};
  Rng rng(seed);
  env.services.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "svc-%04zu", i);
    const std::size_t f = rng.index(config.families);
    const auto& trees = layout.families[f];
    Service s;
    s.id = id;
    s.metadata["family"] = std::to_string(f);
    const std::size_t n_ops = 1 + f % config.max_operations;
    for (std::size_t j = 0; j < n_ops; ++j) {
      Operation op;
      op.capability = {"op" + std::to_string(j),
                       {kOntologyId, pick_concept(trees[0], config, rng)}};
      const std::size_t n_in = 1 + (f + j) % config.max_inputs;
      for (std::size_t k = 0; k < n_in; ++k)
        op.inputs.push_back({"in" + std::to_string(k), kStringType,
                             {kOntologyId, pick_concept(trees[1], config, rng)}});
      op.output = OutputSpec{kStringType, {kOntologyId, pick_concept(trees[2], config, rng)}};
      for (const auto& r : config.ranges)
        op.nfps.emplace_back(QuantitativeProperty{r.name, round2(rng.uniform(r.min, r.max)), r.order});
      if (!config.qualitative.empty())
        op.nfps.emplace_back(QualitativeProperty{
            config.qualitative, {kOntologyId, channel_leaves[rng.index(channel_leaves.size())]}});
      s.interface.operations.push_back(std::move(op));
    }
    env.services.push_back(std::move(s));
  }
  return env;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Register: return "register";
    case EventKind::Unregister: return "unregister";
    case EventKind::Bind: return "bind";
  }
  return "register";
}

void validate_trace(const ChurnTrace& trace) {
  std::set<std::string, std::less<>> live;
  LogicalTime last = 0;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& ev = trace.events[i];
    const auto where = "event[" + std::to_string(i) + "]";
    if (i > 0 && ev.at < last)
      throw SimError(where + ": timestamp " + std::to_string(ev.at) + " precedes " +
                     std::to_string(last));
    last = ev.at;
    switch (ev.kind) {
      case EventKind::Register: {
        const auto* s = std::get_if<Service>(&ev.payload);
        if (!s) throw SimError(where + ": register needs a service descriptor");
        live.insert(s->id);
        break;
      }
      case EventKind::Unregister: {
        const auto* id = std::get_if<std::string>(&ev.payload);
        if (!id) throw SimError(where + ": unregister needs a service id");
        if (live.erase(*id) == 0)
          throw SimError(where + ": unregister of '" + *id + "' which is not registered");
        break;
      }
      case EventKind::Bind:
        if (!std::holds_alternative<ApplicationProfile>(ev.payload))
          throw SimError(where + ": bind needs an application profile");
        break;
    }
  }
}

ChurnTrace parse_trace(const json& doc, const std::filesystem::path& base) {
  if (!doc.is_array()) throw SimError("trace must be a JSON array of events");
  ChurnTrace trace;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    const auto where = "event[" + std::to_string(i) + "]";
    if (!e.is_object()) throw SimError(where + ": expected an object");
    if (!e.contains("at") || !e.at("at").is_number_unsigned())
      throw SimError(where + ": 'at' must be a non-negative integer");
    if (!e.contains("kind") || !e.at("kind").is_string())
      throw SimError(where + ": 'kind' must be a string");
    if (!e.contains("payload")) throw SimError(where + ": missing 'payload'");
    TraceEvent ev;
    ev.at = e.at("at").get<LogicalTime>();
    const auto kind = e.at("kind").get<std::string>();
    const auto& payload = e.at("payload");
    try {
      if (kind == "register") {
        ev.kind = EventKind::Register;
        if (payload.is_string())
          ev.payload = load_service(base / payload.get<std::string>());
        else
          ev.payload = parse_service(payload);
      } else if (kind == "bind") {
        ev.kind = EventKind::Bind;
        if (payload.is_string())
          ev.payload = load_profile(base / payload.get<std::string>());
        else
          ev.payload = parse_profile(payload);
      } else if (kind == "unregister") {
        ev.kind = EventKind::Unregister;
        if (!payload.is_string()) throw SimError("unregister payload must be a service id");
        ev.payload = payload.get<std::string>();
      } else {
        throw SimError("unknown event kind '" + kind + "'");
      }
    } catch (const ModelError& ex) {
      throw SimError(where + ": " + ex.what());
    } catch (const RegistryError& ex) {
      throw SimError(where + ": " + ex.what());
    } catch (const SimError& ex) {
      throw SimError(where + ": " + ex.what());
    }
    trace.events.push_back(std::move(ev));
  }
  validate_trace(trace);
  return trace;
}

ChurnTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SimError("cannot open trace '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SimError(path.filename().string() + ": " + e.what());
  }
  return parse_trace(doc, path.parent_path());
}

json to_json(const ChurnTrace& trace) {
  json out = json::array();
  for (const auto& ev : trace.events) {
    json payload;
    if (const auto* s = std::get_if<Service>(&ev.payload))
      payload = to_json(*s);
    else if (const auto* p = std::get_if<ApplicationProfile>(&ev.payload))
      payload = to_json(*p);
    else
      payload = std::get<std::string>(ev.payload);
    out.push_back({{"at", ev.at}, {"kind", std::string(to_string(ev.kind))}, {"payload", payload}});
  }
  return out;
}

ChurnTrace generate_trace(const SyntheticEnvironment& env, const TraceConfig& config,
                          std::uint64_t seed) {
  if (env.services.empty()) throw SimError("trace generation needs at least one service");
  Rng rng(seed);
  ChurnTrace trace;
  LogicalTime now = 0;
  std::vector<std::size_t> live;
  std::vector<std::size_t> idle(env.services.size());
  for (std::size_t i = 0; i < idle.size(); ++i) idle[i] = i;

  auto push = [&](EventKind kind, std::variant<Service, ApplicationProfile, std::string> payload) {
    trace.events.push_back({now, kind, std::move(payload)});
    now += 1 + rng.index(3);
  };
  auto register_one = [&] {
    const std::size_t k = rng.index(idle.size());
    const std::size_t svc = idle[k];
    idle.erase(idle.begin() + static_cast<std::ptrdiff_t>(k));
    live.push_back(svc);
    push(EventKind::Register, env.services[svc]);
  };
  auto unregister_one = [&] {
    const std::size_t k = rng.index(live.size());
    const std::size_t svc = live[k];
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
    idle.push_back(svc);
    push(EventKind::Unregister, env.services[svc].id);
  };
  auto profile_for = [&](std::size_t app) {
    ApplicationProfile p;
    p.app = "app" + std::to_string(app);
    p.required = env.services[rng.index(env.services.size())].interface;
    std::vector<std::string> names;
    for (auto& op : p.required.operations)
      for (auto& np : op.nfps) {
        if (auto* qn = std::get_if<QuantitativeProperty>(&np)) qn->value = round2(qn->value * rng.uniform(0.8, 1.2));
        names.push_back(property_name(np));
      }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    if (!names.empty() && rng.chance(0.5)) {
      std::vector<double> raw;
      double sum = 0.0;
      for (std::size_t i = 0; i < names.size(); ++i) {
        raw.push_back(0.05 + rng.uniform());
        sum += raw.back();
      }
      for (std::size_t i = 0; i < names.size(); ++i) p.weights[names[i]] = raw[i] / sum;
    }
    return p;
  };

  const auto initial = std::min(
      config.events,
      static_cast<std::size_t>(std::ceil(config.initial_fraction * static_cast<double>(env.services.size()))));
  for (std::size_t i = 0; i < initial && !idle.empty(); ++i) register_one();
  for (std::size_t a = 0; a < config.apps && trace.events.size() < config.events; ++a)
    push(EventKind::Bind, profile_for(a));
  while (trace.events.size() < config.events) {
    if (config.apps > 0 && rng.chance(config.rebind_rate))
      push(EventKind::Bind, profile_for(rng.index(config.apps)));
    else if (idle.empty() || (!live.empty() && rng.chance(config.departure_rate)))
      unregister_one();
    else
      register_one();
  }
  return trace;
}

Stat summarize(std::vector<double> samples) {
  Stat s;
  s.count = samples.size();
  if (samples.empty()) return s;
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
  s.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

namespace {

json stat_json(const Stat& s) { return {{"count", s.count}, {"mean_us", s.mean}, {"p95_us", s.p95}}; }

json event_json(const EventRecord& e, bool timings) {
  json decisions = json::array();
  for (const auto& d : e.decisions) decisions.push_back(d.to_json());
  json j = {{"index", e.index},
            {"at", e.at},
            {"kind", std::string(to_string(e.kind))},
            {"subject", e.subject},
            {"rebinds", decisions},
            {"diagnostics", e.diagnostics}};
  if (e.plan) j["plan"] = e.plan->to_json();
  if (timings) {
    j["match_us"] = e.match_us;
    j["latency_us"] = e.latency_us;
  }
  return j;
}

json bindings_json(const std::vector<Binding>& bindings) {
  json out = json::object();
  for (const auto& b : bindings)
    out[b.app] = {{"service", b.service ? json(*b.service) : json()},
                  {"mode", std::string(to_string(b.mode))},
                  {"bound_at", b.bound_at},
                  {"degree", b.degree ? json(*b.degree) : json()},
                  {"used_operations", b.used_operations}};
  return out;
}

}  // namespace

json RunReport::to_json() const {
  json decisions = json::array();
  for (const auto& e : events) decisions.push_back(event_json(e, true));
  return {{"decisions", decisions},
          {"timings", {{"match", stat_json(match)}, {"plan", stat_json(plan)}}},
          {"bindings", bindings_json(bindings)}};
}

json RunReport::decisions_json() const {
  json decisions = json::array();
  for (const auto& e : events) decisions.push_back(event_json(e, false));
  return {{"decisions", decisions}, {"bindings", bindings_json(bindings)}};
}

RunReport run_scenario(const ChurnTrace& trace, const Ontology& ontology, const SimConfig& config) {
  validate_trace(trace);
  Registry registry(ontology, config.registry);
  RunReport report;
  std::vector<double> match_samples;
  std::vector<double> plan_samples;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto& ev = trace.events[i];
    EventRecord rec;
    rec.index = i;
    rec.at = ev.at;
    rec.kind = ev.kind;
    const auto t0 = Clock::now();
    try {
      switch (ev.kind) {
        case EventKind::Register: {
          const auto& s = std::get<Service>(ev.payload);
          rec.subject = s.id;
          rec.decisions = registry.register_service(s, ev.at);
          break;
        }
        case EventKind::Unregister: {
          rec.subject = std::get<std::string>(ev.payload);
          auto dep = registry.unregister_service(rec.subject, ev.at);
          rec.plan = std::move(dep.plan);
          rec.decisions = std::move(dep.rebinds);
          break;
        }
        case EventKind::Bind: {
          const auto& p = std::get<ApplicationProfile>(ev.payload);
          rec.subject = p.app;
          rec.decisions.push_back(registry.bind(p, ev.at));
          break;
        }
      }
      rec.match_us = registry.last_timing().match_us;
    } catch (const std::exception& e) {
      rec.diagnostics.push_back(e.what());
    }
    rec.latency_us = micros_since(t0);
    match_samples.push_back(rec.match_us);
    plan_samples.push_back(rec.latency_us);
    report.events.push_back(std::move(rec));
  }
  report.match = summarize(std::move(match_samples));
  report.plan = summarize(std::move(plan_samples));
  report.bindings = registry.bindings();
  return report;
}

std::map<std::string, double, std::less<>> parse_weight_pairs(std::span<const std::string> items) {
  std::map<std::string, double, std::less<>> out;
  double sum = 0.0;
  for (const auto& item : items) {
    std::size_t pos = 0;
    while (pos <= item.size()) {
      const auto comma = std::min(item.find(',', pos), item.size());
      const auto pair = item.substr(pos, comma - pos);
      pos = comma + 1;
      if (pair.empty()) continue;
      const auto eq = pair.find('=');
      if (eq == std::string::npos || eq == 0)
        throw SimError("weight '" + pair + "' is not of the form name=value");
      const auto name = pair.substr(0, eq);
      const auto text = pair.substr(eq + 1);
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
      } catch (const std::exception&) {
        throw SimError("weight '" + pair + "' has a malformed value");
      }
      if (!std::isfinite(v) || v < 0.0) throw SimError("weight '" + pair + "' must be finite and non-negative");
      if (!out.emplace(name, v).second) throw SimError("weight '" + name + "' given twice");
      sum += v;
    }
  }
  if (!out.empty() && std::abs(sum - 1.0) > 1e-9)
    throw SimError("weights must sum to 1 (got " + std::to_string(sum) + ")");
  return out;
}

std::vector<BenchRow> bench(std::size_t n, std::uint64_t seed, const PopulationConfig& config) {
  const auto env = generate_population(n, config, seed);
  std::vector<std::size_t> sizes;
  const std::size_t step = std::max<std::size_t>(n / 10, 1);
  for (std::size_t m = step; m < n; m += step) sizes.push_back(m);
  sizes.push_back(n);

  std::vector<BenchRow> rows;
  for (std::size_t m : sizes) {
    BenchRow row;
    row.services = m;
    auto t0 = Clock::now();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) (void)match_interfaces(env.ontology, env.services[i].interface, env.services[j].interface);
    row.pairwise_match_ms = micros_since(t0) / 1000.0;

    Registry registry(env.ontology);
    for (std::size_t i = 0; i < m; ++i) registry.register_service(env.services[i], i);
    (void)registry.unregister_service(env.services[0].id, m);
    row.departure_ms = registry.last_timing().total_us / 1000.0;
    row.departure_match_ms = registry.last_timing().match_us / 1000.0;
    row.departure_qos_ms = row.departure_ms - row.departure_match_ms;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace svcsub
