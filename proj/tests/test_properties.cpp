#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"
#include "svcsub/assignment.hpp"
#include "svcsub/matching.hpp"
#include "svcsub/qos.hpp"
#include "svcsub/registry.hpp"
#include "svcsub/sim.hpp"

using namespace svcsub;
using namespace svcsub::test;

namespace {

constexpr int kCases = 1000;

// Random ontology together with an independent reachability oracle over its
// equivalence classes.
struct RandomOntology {
  std::vector<std::string> names;
  std::vector<std::size_t> cls;                // class id per concept
  std::vector<std::vector<bool>> reach;        // reach[a][b]: class a strictly above class b
  std::optional<Ontology> onto;

  bool above(std::size_t a, std::size_t b) const { return reach[cls[a]][cls[b]]; }
  bool same(std::size_t a, std::size_t b) const { return cls[a] == cls[b]; }

  MatchValue oracle(std::size_t n, std::size_t m) const {
    if (same(n, m)) return MatchValue::Exact;
    if (above(n, m)) return MatchValue::PlugIn;
    if (above(m, n)) return MatchValue::Subsume;
    return MatchValue::Fail;
  }
};

std::size_t find(std::vector<std::size_t>& p, std::size_t x) {
  while (p[x] != x) x = p[x] = p[p[x]];
  return x;
}

RandomOntology random_ontology(std::mt19937_64& rng, std::size_t n) {
  RandomOntology r;
  for (std::size_t i = 0; i < n; ++i) r.names.push_back("c" + std::to_string(i));
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::pair<std::string, std::string>> eqs, edges;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t n_eq = rng() % (n / 3 + 1);
  for (std::size_t k = 0; k < n_eq; ++k) {
    const auto a = pick(rng), b = pick(rng);
    if (a == b) continue;
    eqs.emplace_back(r.names[a], r.names[b]);
    parent[find(parent, a)] = find(parent, b);
  }
  // Class ids ordered by smallest member so that edges from lower to higher
  // class ids cannot form a cycle.
  std::vector<std::size_t> rep(n);
  for (std::size_t i = 0; i < n; ++i) rep[i] = find(parent, i);
  std::vector<std::size_t> class_of_rep(n, n);
  std::size_t classes = 0;
  r.cls.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (class_of_rep[rep[i]] == n) class_of_rep[rep[i]] = classes++;
    r.cls[i] = class_of_rep[rep[i]];
  }
  r.reach.assign(classes, std::vector<bool>(classes, false));
  std::bernoulli_distribution edge(2.0 / static_cast<double>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (r.cls[a] < r.cls[b] && edge(rng)) {
        edges.emplace_back(r.names[a], r.names[b]);
        r.reach[r.cls[a]][r.cls[b]] = true;
      }
  for (std::size_t k = 0; k < classes; ++k)
    for (std::size_t i = 0; i < classes; ++i)
      if (r.reach[i][k])
        for (std::size_t j = 0; j < classes; ++j)
          if (r.reach[k][j]) r.reach[i][j] = true;
  r.onto.emplace("rand", r.names, edges, eqs);
  return r;
}

MatchValue m(const Ontology& o, const std::string& a, const std::string& b) {
  return o.match(o.ref(a), o.ref(b));
}

}  // namespace

TEST(Properties, MatchAgreesWithReachabilityOracle) {
  std::mt19937_64 rng(1001);
  for (int c = 0; c < kCases; ++c) {
    const auto r = random_ontology(rng, 4 + rng() % 12);
    const auto& o = *r.onto;
    const std::size_t n = r.names.size();
    for (int t = 0; t < 8; ++t) {
      const auto a = rng() % n, b = rng() % n;
      ASSERT_EQ(m(o, r.names[a], r.names[b]), r.oracle(a, b)) << "case " << c;
    }
  }
}

TEST(Properties, EquivalenceIsAnEquivalenceRelation) {
  std::mt19937_64 rng(1002);
  for (int c = 0; c < kCases; ++c) {
    const auto r = random_ontology(rng, 4 + rng() % 10);
    const auto& o = *r.onto;
    const std::size_t n = r.names.size();
    const auto& a = r.names[rng() % n];
    const auto& b = r.names[rng() % n];
    const auto& d = r.names[rng() % n];
    ASSERT_TRUE(o.equivalent(a, a));
    ASSERT_EQ(o.equivalent(a, b), o.equivalent(b, a));
    if (o.equivalent(a, b) && o.equivalent(b, d)) ASSERT_TRUE(o.equivalent(a, d));
  }
}

TEST(Properties, SubsumptionIsAStrictOrder) {
  std::mt19937_64 rng(1003);
  for (int c = 0; c < kCases; ++c) {
    const auto r = random_ontology(rng, 4 + rng() % 10);
    const auto& o = *r.onto;
    const std::size_t n = r.names.size();
    for (const auto& a : r.names) ASSERT_FALSE(o.subsumes(a, a));
    for (int t = 0; t < 8; ++t) {
      const auto& a = r.names[rng() % n];
      const auto& b = r.names[rng() % n];
      const auto& d = r.names[rng() % n];
      ASSERT_FALSE(o.subsumes(a, b) && o.subsumes(b, a));
      if (o.subsumes(a, b) && o.subsumes(b, d)) ASSERT_TRUE(o.subsumes(a, d));
    }
  }
}

TEST(Properties, PlugInAndSubsumeAreDual) {
  std::mt19937_64 rng(1004);
  for (int c = 0; c < kCases; ++c) {
    const auto r = random_ontology(rng, 4 + rng() % 10);
    const auto& o = *r.onto;
    const std::size_t n = r.names.size();
    const auto& a = r.names[rng() % n];
    const auto& b = r.names[rng() % n];
    const auto ab = m(o, a, b), ba = m(o, b, a);
    ASSERT_EQ(ab == MatchValue::PlugIn, ba == MatchValue::Subsume);
    ASSERT_EQ(ab == MatchValue::Exact, ba == MatchValue::Exact);
    ASSERT_EQ(ab == MatchValue::Fail, ba == MatchValue::Fail);
  }
}

TEST(Properties, OperationMatchEqualsBijectionOracle) {
  std::mt19937_64 rng(1005);
  for (int c = 0; c < kCases; ++c) {
    const auto r = random_ontology(rng, 5 + rng() % 8);
    const auto& o = *r.onto;
    const std::size_t n = r.names.size();
    const std::size_t arity = rng() % 5;  // 0..4
    auto draw = [&] { return rng() % n; };
    const auto cap_l = draw(), cap_r = draw(), out_l = draw(), out_r = draw();
    std::vector<std::size_t> in_l(arity), in_r(arity);
    for (auto& x : in_l) x = draw();
    for (auto& x : in_r) x = draw();
    auto names = [&](const std::vector<std::size_t>& idx) {
      std::vector<std::string> out;
      for (auto i : idx) out.push_back(r.names[i]);
      return out;
    };
    const auto lhs = make_op("rand", "l", r.names[cap_l], names(in_l), r.names[out_l]);
    const auto rhs = make_op("rand", "r", r.names[cap_r], names(in_r), r.names[out_r]);

    const auto fixed = worst(r.oracle(cap_l, cap_r), r.oracle(out_l, out_r));
    std::vector<std::size_t> perm(arity);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    MatchValue best = MatchValue::Fail;
    do {
      MatchValue v = fixed;
      for (std::size_t k = 0; k < arity; ++k) v = worst(v, r.oracle(in_l[k], in_r[perm[k]]));
      best = std::min(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_EQ(match_operations(o, lhs, rhs).value, best) << "case " << c;
  }
}

TEST(Properties, EnumerationAndThresholdRoutesAgree) {
  std::mt19937_64 rng(1006);
  const MatchValue values[] = {MatchValue::Exact, MatchValue::PlugIn, MatchValue::Subsume,
                               MatchValue::Fail};
  for (int c = 0; c < kCases; ++c) {
    const std::size_t rows = 1 + rng() % 6;
    const std::size_t cols = rows + rng() % (7 - rows);
    CellMatrix cells(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const auto v = values[rng() % 4];
        cells.at(i, j) = {v, static_cast<double>(rng() % 1000) / 1000.0};
      }
    const auto floor = values[rng() % 3];
    const auto e = enumerate_assignment(cells, floor);
    const auto t = threshold_assignment(cells, floor);
    ASSERT_EQ(e.value, t.value) << "case " << c;
    ASSERT_NEAR(e.cost, t.cost, 1e-9) << "case " << c;
    std::vector<std::size_t> used = t.columns;
    std::sort(used.begin(), used.end());
    ASSERT_EQ(std::adjacent_find(used.begin(), used.end()), used.end());
  }
}

TEST(Properties, EtaStaysInUnitInterval) {
  std::mt19937_64 rng(1007);
  std::uniform_real_distribution<double> val(-1e3, 1e3);
  for (int c = 0; c < kCases; ++c) {
    std::vector<Sample> s;
    const std::size_t n = 1 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) s.push_back({"s" + std::to_string(i), val(rng)});
    const Population p("x", rng() % 2 ? Order::Less : Order::Greater, s);
    for (int t = 0; t < 5; ++t) {
      const double e = eta(p, t == 0 ? s[0].value : val(rng) * 10.0);
      ASSERT_GE(e, 0.0);
      ASSERT_LE(e, 1.0);
    }
  }
}

TEST(Properties, ZScoresAreStandardised) {
  std::mt19937_64 rng(1008);
  std::uniform_real_distribution<double> val(0.0, 500.0);
  for (int c = 0; c < kCases; ++c) {
    std::vector<Sample> s;
    const std::size_t n = 2 + rng() % 30;
    for (std::size_t i = 0; i < n; ++i) s.push_back({"s", val(rng)});
    const Population p("x", Order::Less, s);
    double sum = 0.0, sq = 0.0;
    for (const auto& x : s) {
      const double z = z_score(p, x.value);
      sum += z;
      sq += z * z;
    }
    ASSERT_NEAR(sum / static_cast<double>(n), 0.0, 1e-9);
    ASSERT_NEAR(std::sqrt(sq / static_cast<double>(n)), 1.0, 1e-9);
  }
}

TEST(Properties, QosDegreeBoundedAndZeroOnSelf) {
  std::mt19937_64 rng(1009);
  const auto o = printer_ontology();
  const std::vector<std::string> channels = {"wireless", "wifi", "bluetooth"};
  std::uniform_real_distribution<double> val(0.0, 200.0);
  auto random_op = [&] {
    Operation op;
    if (rng() % 4) op.nfps.emplace_back(qn("price", val(rng), Order::Less));
    if (rng() % 4) op.nfps.emplace_back(qn("nbPage", val(rng), Order::Greater));
    if (rng() % 4) op.nfps.emplace_back(QualitativeProperty{"access", o.ref(channels[rng() % 3])});
    return op;
  };
  for (int c = 0; c < kCases; ++c) {
    const auto ref = random_op();
    const auto cand = random_op();
    std::vector<Operation> others;
    for (int i = 0; i < 3; ++i) others.push_back(random_op());
    std::vector<Contributor> cs = {{"ref", &ref}, {"cand", &cand}};
    for (const auto& x : others) cs.push_back({"other", &x});
    const auto pops = build_populations(cs);
    const double d = qos_degree(o, ref, cand, {}, pops);
    ASSERT_GE(d, 0.0);
    ASSERT_LE(d, 1.0);
    ASSERT_DOUBLE_EQ(qos_degree(o, ref, ref, {}, pops), 0.0);
  }
}

TEST(Properties, PlanTiersAreSortedByDegree) {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < kCases; ++seed) {
    const auto env = generate_population(30, {}, 2000 + seed);
    Registry reg(env.ontology);
    for (const auto& s : env.services) reg.register_service(s);
    for (const auto& s : env.services) {
      const auto plan = reg.plan_for(s.id);
      for (auto t : {Tier::Equivalent, Tier::AlmostEquivalent, Tier::Subset, Tier::Subsume}) {
        const auto& tier = plan.tier(t);
        for (std::size_t i = 1; i < tier.size(); ++i)
          ASSERT_LE(tier[i - 1].degree, tier[i].degree) << s.id;
        for (const auto& c : tier) ASSERT_NE(c.service, s.id);
      }
      ASSERT_EQ(plan.proxy, !plan.best().has_value());
      ++checked;
    }
  }
}

TEST(Properties, ChurnLeavesNoDanglingBindings) {
  int checked = 0, bound = 0, departures_of_bound = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto env = generate_population(40, {}, 3000 + seed);
    const auto trace = generate_trace(env, {}, 4000 + seed);
    ASSERT_EQ(trace.events.size(), 500u);
    Registry reg(env.ontology);
    for (const auto& ev : trace.events) {
      if (const auto* s = std::get_if<Service>(&ev.payload)) reg.register_service(*s, ev.at);
      else if (const auto* p = std::get_if<ApplicationProfile>(&ev.payload)) reg.bind(*p, ev.at);
      else departures_of_bound += !reg.unregister_service(std::get<std::string>(ev.payload), ev.at).rebinds.empty();
      for (const auto& b : reg.bindings()) {
        if (b.mode == BindingMode::Proxied) {
          ASSERT_FALSE(b.service);
        } else {
          ASSERT_TRUE(b.service);
          ASSERT_NE(reg.find_service(*b.service), nullptr) << *b.service << " is gone";
          ++bound;
        }
      }
      ++checked;
    }
  }
  EXPECT_GE(checked, kCases);
  EXPECT_GT(bound, 0);
  EXPECT_GT(departures_of_bound, 0);
}

TEST(Properties, EqualQualityNeverTriggersRebinding) {
  int checked = 0, evaluated = 0;
  for (std::uint64_t seed = 0; checked < kCases; ++seed) {
    const auto env = generate_population(12, {}, 5000 + seed);
    Registry reg(env.ontology);
    for (const auto& s : env.services) reg.register_service(s);
    for (const auto& s : env.services) {
      const std::string app = "app-" + s.id;
      reg.bind(ApplicationProfile{app, s.interface, {}, {}});
    }
    for (const auto& b : reg.bindings()) {
      if (!b.service || b.mode != BindingMode::Direct) continue;
      auto clone = *reg.find_service(*b.service);
      clone.id = "clone-" + std::to_string(checked);
      const auto before = reg.bindings();
      for (const auto& d : reg.register_service(clone)) {
        const auto it = std::find_if(before.begin(), before.end(),
                                     [&](const Binding& x) { return x.app == d.app; });
        ASSERT_NE(it, before.end());
        // A clone is only ever as good as its original, never strictly better.
        if (it->service == b.service && it->mode == BindingMode::Direct) {
          ASSERT_FALSE(d.rebound) << d.app;
          ++evaluated;
        }
      }
      reg.unregister_service(clone.id);
      ++checked;
    }
  }
  EXPECT_GE(evaluated, kCases);
}
