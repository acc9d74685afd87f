#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svcsub/matching.hpp"
#include "svcsub/model.hpp"
#include "svcsub/ontology.hpp"
#include "svcsub/qos.hpp"
#include "svcsub/registry.hpp"
#include "svcsub/sim.hpp"

namespace fs = std::filesystem;
using namespace svcsub;

namespace {

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : "-"; }

Service load_checked(const fs::path& path, const Ontology& o) {
  auto s = load_service(path);
  if (auto diags = validate_service(s, o); !diags.empty()) {
    std::string msg = path.string() + ": unresolved semantic references";
    for (const auto& d : diags) msg += "\n  " + d.path + ": " + d.message;
    throw ModelError(msg);
  }
  return s;
}

std::string describe(const Operation& lhs, const Operation& rhs, const OperationMatch& m) {
  std::ostringstream out;
  out << "  " << lhs.name() << " -> " << rhs.name() << ": " << to_string(m.value);
  if (!m.comparable) {
    out << " (not comparable: " << lhs.inputs.size() << " vs " << rhs.inputs.size() << " inputs)";
    return out.str();
  }
  out << "\n    concept " << lhs.capability.semantic.name << " / " << rhs.capability.semantic.name
      << ": " << to_string(m.items.capability);
  for (std::size_t k = 0; k < lhs.inputs.size(); ++k) {
    const auto& a = lhs.inputs[k];
    const auto& b = rhs.inputs[m.pairing.target[k]];
    out << "\n    input " << a.name << " (" << a.semantic.name << ") / " << b.name << " ("
        << b.semantic.name << "): " << to_string(m.items.inputs[k]);
  }
  if (lhs.output)
    out << "\n    output " << lhs.output->semantic.name << " / " << rhs.output->semantic.name << ": "
        << to_string(m.items.output);
  for (const auto& w : m.warnings) out << "\n    warning: " << w;
  return out.str();
}

int cmd_match(const std::string& a, const std::string& b, const std::string& ont) {
  const auto o = Ontology::load_file(ont);
  const auto lhs = load_checked(a, o);
  const auto rhs = load_checked(b, o);
  const auto m = match_interfaces(o, lhs.interface, rhs.interface);
  std::cout << to_string(m.value) << "\n";
  if (m.pairing.empty()) {
    std::cout << "  interfaces differ in size: " << lhs.interface.size() << " vs "
              << rhs.interface.size() << " operations\n";
    return 0;
  }
  for (std::size_t i = 0; i < m.pairing.size(); ++i)
    std::cout << describe(lhs.interface.operations[m.pairing[i].lhs],
                          rhs.interface.operations[m.pairing[i].rhs], m.operations[i])
              << "\n";
  return 0;
}

int cmd_distance(const std::string& a, const std::string& b, const std::string& ont,
                 const std::vector<std::string>& weights, const std::vector<std::string>& items) {
  const auto o = Ontology::load_file(ont);
  const auto lhs = load_checked(a, o);
  const auto rhs = load_checked(b, o);
  const auto& ops = lhs.interface.operations;

  std::vector<double> op_w(ops.size(), 1.0 / static_cast<double>(ops.size()));
  if (const auto named = parse_weight_pairs(weights); !named.empty()) {
    for (const auto& [name, v] : named)
      if (!lhs.interface.find(name))
        throw SimError("weight for unknown operation '" + name + "' of " + lhs.id);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      auto it = named.find(ops[i].name());
      op_w[i] = it == named.end() ? 0.0 : it->second;
    }
  }

  std::vector<WeightVector> item_w;
  if (const auto named = parse_weight_pairs(items); !named.empty()) {
    if (ops.size() != 1) throw SimError("--item-weights needs a single-operation first service");
    std::vector<double> w;
    auto take = [&](const std::string& key) {
      auto it = named.find(key);
      return it == named.end() ? 0.0 : it->second;
    };
    std::set<std::string> known = {"concept", "output"};
    w.push_back(take("concept"));
    for (const auto& in : ops[0].inputs) {
      w.push_back(take(in.name));
      known.insert(in.name);
    }
    w.push_back(take("output"));
    for (const auto& [name, v] : named)
      if (!known.contains(name)) throw SimError("unknown item '" + name + "' in --item-weights");
    item_w.emplace_back(std::move(w));
  }

  const double d = interface_distance(o, lhs.interface, rhs.interface, WeightVector(op_w), item_w);
  std::cout << fmt(d) << "\n";
  return 0;
}

int cmd_qos(const std::string& a, const std::string& b, const std::string& ont,
            const std::string& population, const std::vector<std::string>& weights) {
  const auto o = Ontology::load_file(ont);
  const auto ref = load_checked(a, o);
  const auto cand = load_checked(b, o);
  const auto named = parse_weight_pairs(weights);

  std::vector<Service> members;
  if (!population.empty())
    for (auto& s : load_services(population))
      if (s.id != ref.id && s.id != cand.id) members.push_back(std::move(s));
  members.push_back(cand);

  const auto pairing = match_interfaces(o, cand.interface, ref.interface).pairing;
  if (pairing.empty())
    throw SimError("interfaces of " + cand.id + " and " + ref.id + " differ in size");

  const std::size_t n = ref.interface.size();
  std::vector<std::vector<Contributor>> contributors(n);
  for (std::size_t r = 0; r < n; ++r) contributors[r].push_back({ref.id, &ref.interface.operations[r]});
  for (const auto& s : members) {
    if (s.interface.size() != n) continue;
    for (const auto& p : match_interfaces(o, s.interface, ref.interface).pairing)
      contributors[p.rhs].push_back({s.id, &s.interface.operations[p.lhs]});
  }

  const QosWeights base(named);
  std::vector<PopulationSet> pops;
  std::vector<QosWeights> op_weights;
  for (std::size_t r = 0; r < n; ++r) {
    pops.push_back(build_populations(contributors[r]));
    std::vector<std::string> names;
    for (const auto& np : ref.interface.operations[r].nfps) names.push_back(property_name(np));
    op_weights.push_back(base.restricted_to(names));
  }

  for (const auto& p : pairing) {
    const auto& rop = ref.interface.operations[p.rhs];
    const auto& cop = cand.interface.operations[p.lhs];
    std::cout << rop.name() << " (" << ref.id << ") vs " << cop.name() << " (" << cand.id << ")\n";
    for (const auto& [name, pop] : pops[p.rhs]) {
      std::cout << "  population " << name << ": n=" << pop.samples().size()
                << " mean=" << fmt(pop.mean()) << " stddev=" << fmt(pop.stddev()) << "\n";
      for (const auto& s : pop.samples())
        std::cout << "    " << s.owner << " value=" << fmt(s.value, 2)
                  << " z=" << fmt(z_score(pop, s.value)) << " eta=" << fmt(eta(pop, s.value)) << "\n";
    }
    const auto br = qos_breakdown(o, rop, cop, op_weights[p.rhs], pops[p.rhs]);
    std::cout << "  property     weight  z_ref    eta_ref  z_cand   eta_cand degree\n";
    for (const auto& t : br.terms) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-12s %-7s %-8s %-8s %-8s %-8s %s", t.property.c_str(),
                    fmt(t.weight).c_str(), opt_fmt(t.z_reference).c_str(),
                    opt_fmt(t.eta_reference).c_str(), opt_fmt(t.z_candidate).c_str(),
                    opt_fmt(t.eta_candidate).c_str(), fmt(t.degree).c_str());
      std::cout << line;
      if (t.missing) std::cout << " (missing)";
      if (t.concept_match) std::cout << " (" << to_string(*t.concept_match) << ")";
      std::cout << "\n";
    }
    std::cout << "  operation degree " << fmt(br.total) << "\n";
  }
  const double total = service_qos_degree(o, ref, cand, pairing, op_weights, pops);
  std::cout << "qos-degree " << fmt(total) << "\n";
  return 0;
}

void print_plan(const SubstitutionPlan& plan) {
  std::cout << "plan for " << plan.subject << "\n";
  for (auto t : {Tier::Equivalent, Tier::AlmostEquivalent, Tier::Subset, Tier::Subsume}) {
    const auto& list = plan.tier(t);
    std::cout << "  " << to_string(t) << ":";
    if (list.empty()) std::cout << " (none)";
    std::cout << "\n";
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::cout << "    " << i + 1 << ". " << list[i].service << " degree " << fmt(list[i].degree)
                << " [" << to_string(list[i].match) << "]";
      if (!list[i].operations.empty()) {
        std::cout << " over";
        for (const auto& op : list[i].operations) std::cout << " " << op;
      }
      std::cout << "\n";
    }
  }
  std::cout << "  proxy: " << (plan.proxy ? "yes" : "no") << "\n";
}

int cmd_explain(const std::string& svc, const std::string& ont, const std::string& env,
                const std::string& profile_path, bool as_json) {
  Registry reg(Ontology::load_file(ont));
  const auto subject = load_service(svc);
  LogicalTime t = 0;
  for (auto& s : load_services(env))
    if (s.id != subject.id) reg.register_service(std::move(s), t++);
  reg.register_service(subject, t++);
  std::optional<ApplicationProfile> profile;
  if (!profile_path.empty()) profile = load_profile(profile_path);
  const auto plan = reg.plan_for(subject.id, profile ? &*profile : nullptr);
  if (as_json)
    std::cout << plan.to_json().dump(2) << "\n";
  else
    print_plan(plan);
  return 0;
}

int cmd_simulate(const std::string& trace_path, const std::string& ont, const std::string& report,
                 std::size_t capacity, LogicalTime timeout) {
  const auto o = Ontology::load_file(ont);
  const auto trace = load_trace(trace_path);
  SimConfig cfg;
  cfg.registry.proxy_capacity = capacity;
  cfg.registry.proxy_timeout = timeout;
  const auto r = run_scenario(trace, o, cfg);
  const auto doc = r.to_json().dump(2);
  if (report.empty() || report == "-") {
    std::cout << doc << "\n";
  } else {
    std::ofstream out(report);
    if (!out) throw SimError("cannot write report '" + report + "'");
    out << doc << "\n";
    std::cout << r.events.size() << " events, " << r.bindings.size() << " bindings, report written to "
              << report << "\n";
  }
  return 0;
}

int cmd_bench(std::size_t n, std::uint64_t seed) {
  const auto rows = bench(n, seed);
  std::cout << "services  pairwise_match_ms  departure_ms  departure_match_ms  departure_qos_ms\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%8zu  %17.3f  %12.3f  %18.3f  %16.3f", r.services,
                  r.pairwise_match_ms, r.departure_ms, r.departure_match_ms, r.departure_qos_ms);
    std::cout << line << "\n";
  }
  std::cout << "reference points from the original prototype (online reasoner): matching 12 s and "
               "55 s, departure plan 47 ms for 100 services\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic service matching, QoS degrees and substitution planning"};
  app.require_subcommand(1);

  std::string a, b, ontology, population, env, profile, trace, report;
  std::vector<std::string> weights, item_weights;
  bool as_json = false;
  std::size_t n = 100, capacity = 1024;
  std::uint64_t seed = 42;
  LogicalTime timeout = std::numeric_limits<LogicalTime>::max();
  int rc = 0;

  auto* match = app.add_subcommand("match", "Match class of two services, with the pairing");
  match->add_option("svcA", a, "first service descriptor")->required()->check(CLI::ExistingFile);
  match->add_option("svcB", b, "second service descriptor")->required()->check(CLI::ExistingFile);
  match->add_option("--ontology", ontology, "ontology file")->required()->check(CLI::ExistingFile);
  match->callback([&] { rc = cmd_match(a, b, ontology); });

  auto* dist = app.add_subcommand("distance", "Semantic distance from svcA to svcB");
  dist->add_option("svcA", a)->required()->check(CLI::ExistingFile);
  dist->add_option("svcB", b)->required()->check(CLI::ExistingFile);
  dist->add_option("--ontology", ontology)->required()->check(CLI::ExistingFile);
  dist->add_option("--weights", weights, "operation weights of svcA, name=value");
  dist->add_option("--item-weights", item_weights,
                   "item weights (concept, input names, output) for a single-operation svcA");
  dist->callback([&] { rc = cmd_distance(a, b, ontology, weights, item_weights); });

  auto* qos = app.add_subcommand("qos-degree", "QoS degree of svcB to the reference svcA");
  qos->add_option("svcA", a, "reference service")->required()->check(CLI::ExistingFile);
  qos->add_option("svcB", b, "candidate service")->required()->check(CLI::ExistingFile);
  qos->add_option("--ontology", ontology)->required()->check(CLI::ExistingFile);
  qos->add_option("--population", population, "directory of services forming the population")
      ->check(CLI::ExistingDirectory);
  qos->add_option("--weights", weights, "property weights, name=value");
  qos->callback([&] { rc = cmd_qos(a, b, ontology, population, weights); });

  auto* explain = app.add_subcommand("explain", "Substitution plan for a service");
  explain->add_option("svc", a)->required()->check(CLI::ExistingFile);
  explain->add_option("--ontology", ontology)->required()->check(CLI::ExistingFile);
  explain->add_option("--env", env, "directory of registered services")->required()->check(CLI::ExistingDirectory);
  explain->add_option("--profile", profile, "application profile")->check(CLI::ExistingFile);
  explain->add_flag("--json", as_json);
  explain->callback([&] { rc = cmd_explain(a, ontology, env, profile, as_json); });

  auto* sim = app.add_subcommand("simulate", "Replay a churn trace");
  sim->add_option("--trace", trace)->required()->check(CLI::ExistingFile);
  sim->add_option("--ontology", ontology)->required()->check(CLI::ExistingFile);
  sim->add_option("--report", report, "output file ('-' for stdout)");
  sim->add_option("--proxy-capacity", capacity)->check(CLI::PositiveNumber);
  sim->add_option("--proxy-timeout", timeout, "logical time units");
  sim->callback([&] { rc = cmd_simulate(trace, ontology, report, capacity, timeout); });

  auto* bch = app.add_subcommand("bench", "Timing table over generated populations");
  bch->add_option("--n", n, "largest population")->check(CLI::PositiveNumber);
  bch->add_option("--seed", seed);
  bch->callback([&] { rc = cmd_bench(n, seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
