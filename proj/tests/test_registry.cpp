#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "svcsub/registry.hpp"

using namespace svcsub;
using namespace svcsub::test;

namespace {

class RegistryTest : public ::testing::Test {
 protected:
  Registry reg{printer_ontology()};

  void add(const std::string& name, LogicalTime at = 0) { reg.register_service(service(name), at); }

  std::vector<std::string> ids(const std::vector<Candidate>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.service);
    return out;
  }
};

Service renamed(Service s, const std::string& id) {
  s.id = id;
  return s;
}

}  // namespace

TEST_F(RegistryTest, AppearanceRebindsOnStrictImprovement) {
  add("impression", 0);
  const auto bound = reg.bind(profile("app-impression"), 1);
  EXPECT_EQ(bound.chosen, "impression");
  EXPECT_EQ(bound.tier, Tier::Equivalent);
  EXPECT_EQ(reg.binding("app")->mode, BindingMode::Direct);

  const auto after_printer = reg.register_service(service("printer"), 2);
  ASSERT_EQ(after_printer.size(), 1u);
  EXPECT_FALSE(after_printer[0].rebound);
  EXPECT_EQ(reg.binding("app")->service, "impression");

  const auto after_printing = reg.register_service(service("printing"), 3);
  ASSERT_EQ(after_printing.size(), 1u);
  const auto& d = after_printing[0];
  EXPECT_TRUE(d.rebound);
  EXPECT_EQ(d.previous, "impression");
  EXPECT_EQ(d.chosen, "printing");
  EXPECT_EQ(d.tier, Tier::AlmostEquivalent);
  ASSERT_TRUE(d.degree);
  EXPECT_NEAR(*d.degree, 0.224, 0.01);
  EXPECT_EQ(reg.binding("app")->service, "printing");
  EXPECT_EQ(reg.binding("app")->bound_at, 3u);
}

TEST_F(RegistryTest, AppearanceWithoutBindingsDecidesNothing) {
  add("printing");
  EXPECT_TRUE(reg.register_service(service("impression")).empty());
}

TEST_F(RegistryTest, AppearanceOfUnrelatedServiceIsIgnored) {
  add("impression");
  reg.bind(profile("app-impression"));
  EXPECT_TRUE(reg.register_service(service("stapler")).empty());
  // Impression does not replace Printing-like services: M(impression, printing) is Subsume.
  add("printing");
  EXPECT_EQ(reg.binding("app")->service, "printing");
  EXPECT_TRUE(reg.register_service(renamed(service("laser"), "laser")).empty());
}

TEST_F(RegistryTest, TiesKeepTheIncumbent) {
  add("printing");
  reg.bind(profile("app-printing"));
  ASSERT_EQ(reg.binding("app1")->service, "printing");
  const auto ds = reg.register_service(renamed(service("printing"), "printing-copy"));
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_FALSE(ds[0].rebound);
  EXPECT_EQ(reg.binding("app1")->service, "printing");
}

TEST_F(RegistryTest, ProxyQueuesCallsAndFlushesOnAppearance) {
  const auto d = reg.bind(profile("app-printing"), 0);
  EXPECT_EQ(d.mode, BindingMode::Proxied);
  EXPECT_FALSE(d.chosen);
  EXPECT_EQ(reg.call("app1", "Printing", "page-1", 1).route, CallRoute::Queued);
  EXPECT_EQ(reg.call("app1", "Printing", "page-2", 2).route, CallRoute::Queued);
  EXPECT_EQ(reg.queued_calls("app1"), 2u);

  const auto ds = reg.register_service(service("printing"), 5);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_TRUE(ds[0].rebound);
  EXPECT_EQ(ds[0].mode, BindingMode::Direct);
  ASSERT_EQ(ds[0].flushed.size(), 2u);
  EXPECT_EQ(ds[0].flushed[0].payload, "page-1");
  EXPECT_EQ(ds[0].flushed[1].payload, "page-2");
  EXPECT_EQ(reg.queued_calls("app1"), 0u);
  const auto out = reg.call("app1", "Printing", "page-3", 6);
  EXPECT_EQ(out.route, CallRoute::Forwarded);
  EXPECT_EQ(out.service, "printing");
}

TEST_F(RegistryTest, DepartureEqualWeightsPicksImpression) {
  add("printing");
  add("impression");
  add("printer");
  reg.bind(profile("app-printing"));
  ASSERT_EQ(reg.binding("app1")->service, "printing");
  const auto dep = reg.unregister_service("printing", 9);
  EXPECT_EQ(ids(dep.plan.subsume), (std::vector<std::string>{"impression", "printer"}));
  ASSERT_EQ(dep.rebinds.size(), 1u);
  EXPECT_EQ(dep.rebinds[0].chosen, "impression");
  EXPECT_EQ(dep.rebinds[0].tier, Tier::Subsume);
  const auto* b = reg.binding("app1");
  EXPECT_EQ(b->service, "impression");
  EXPECT_EQ(b->mode, BindingMode::SubsumeFallback);
  EXPECT_EQ(b->used_operations, (std::vector<std::string>{"Impression"}));
  EXPECT_EQ(reg.find_departed("printing")->id, "printing");
}

TEST_F(RegistryTest, DeparturePriceWeightsPicksPrinter) {
  add("printing");
  add("impression");
  add("printer");
  reg.bind(profile("app-printing-price"));
  const auto dep = reg.unregister_service("printing");
  ASSERT_EQ(dep.rebinds.size(), 1u);
  EXPECT_EQ(dep.rebinds[0].chosen, "printer");
}

TEST_F(RegistryTest, PlanForListsSubsumeCandidatesInOrder) {
  add("printing");
  add("impression");
  add("printer");
  const auto plan = reg.plan_for("printing");
  EXPECT_TRUE(plan.equivalent.empty());
  EXPECT_TRUE(plan.almost.empty());
  EXPECT_TRUE(plan.subset.empty());
  EXPECT_EQ(ids(plan.subsume), (std::vector<std::string>{"impression", "printer"}));
  EXPECT_LE(plan.subsume[0].degree, plan.subsume[1].degree);
  EXPECT_FALSE(plan.proxy);
  // Pure: nothing changed.
  EXPECT_EQ(reg.service_ids().size(), 3u);
}

TEST_F(RegistryTest, PlanForAlmostEquivalentCandidates) {
  add("printing");
  add("impression");
  add("printer");
  const auto plan = reg.plan_for("impression");
  EXPECT_EQ(ids(plan.almost), (std::vector<std::string>{"printing", "printer"}));
  EXPECT_LE(plan.almost[0].degree, plan.almost[1].degree);
}

TEST_F(RegistryTest, PlanForSubsumeOnlyEnvironment) {
  add("printing");
  add("laser");
  const auto plan = reg.plan_for("printing");
  EXPECT_TRUE(plan.equivalent.empty());
  EXPECT_TRUE(plan.almost.empty());
  EXPECT_EQ(ids(plan.subsume), (std::vector<std::string>{"laser"}));
}

TEST_F(RegistryTest, DepartureWithoutCandidatesGoesToProxy) {
  add("stapler");
  const auto dep = reg.unregister_service("stapler");
  EXPECT_TRUE(dep.plan.proxy);
  EXPECT_TRUE(dep.rebinds.empty());
  EXPECT_TRUE(reg.plan_for("stapler").proxy);
}

TEST_F(RegistryTest, BoundAppFallsBackToProxyWhenAlone) {
  add("printing");
  reg.bind(profile("app-printing"));
  const auto dep = reg.unregister_service("printing");
  ASSERT_EQ(dep.rebinds.size(), 1u);
  EXPECT_EQ(dep.rebinds[0].tier, Tier::Proxy);
  EXPECT_EQ(reg.binding("app1")->mode, BindingMode::Proxied);
  EXPECT_FALSE(reg.binding("app1")->service);
}

TEST_F(RegistryTest, SubsetTierCoversUsedOperations) {
  add("ifc1");
  add("ifc3");
  const ApplicationProfile p{"scanner-app", service("ifc1").interface, {"op1_ifc1"}, {}};
  reg.bind(p);
  // ifc2 relates to op1 only through Subsume.
  add("ifc2");
  const auto plan = reg.plan_for("ifc1", &p);
  EXPECT_TRUE(plan.subset.empty());
  EXPECT_EQ(ids(plan.subsume), (std::vector<std::string>{"ifc3", "ifc2"}));
  EXPECT_EQ(plan.subsume[1].operations, (std::vector<std::string>{"op1_ifc1"}));

  // A three-operation reference can be covered by ifc1 over two of them.
  const ApplicationProfile wide{"wide", service("ifc2").interface, {"op1_ifc2", "op3_ifc2"}, {}};
  const auto plan2 = reg.plan_for("ifc2", &wide);
  EXPECT_EQ(ids(plan2.subset), (std::vector<std::string>{"ifc1", "ifc3"}));
  EXPECT_EQ(plan2.subset[0].match, MatchValue::PlugIn);
}

TEST_F(RegistryTest, SubsumeFallbackIsReevaluatedOnAppearance) {
  add("printing");
  add("impression");
  reg.bind(profile("app-printing"));
  reg.unregister_service("printing");
  ASSERT_EQ(reg.binding("app1")->mode, BindingMode::SubsumeFallback);
  const auto ds = reg.register_service(service("printing"));
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_TRUE(ds[0].rebound);
  EXPECT_EQ(reg.binding("app1")->service, "printing");
  EXPECT_EQ(reg.binding("app1")->mode, BindingMode::Direct);
}

TEST_F(RegistryTest, BindChoosesLowerDegree) {
  add("impression");
  add("printer");
  add("printing");
  const auto d = reg.bind(profile("app-impression"));
  // Only impression is Exact; printing and printer are almost-equivalent, and
  // printing is QoS-closer than impression under price-heavy weights.
  EXPECT_EQ(d.chosen, "printing");
  ASSERT_TRUE(d.degree);
  EXPECT_NEAR(*d.degree, 0.2224, 1e-3);
}

TEST_F(RegistryTest, BindSingleCandidate) {
  add("printer");
  const auto d = reg.bind(profile("app-impression"));
  EXPECT_EQ(d.chosen, "printer");
}

TEST_F(RegistryTest, BindWithNoCandidatesIsProxied) {
  const auto d = reg.bind(profile("app-impression"));
  EXPECT_EQ(d.mode, BindingMode::Proxied);
  EXPECT_EQ(reg.binding("app")->mode, BindingMode::Proxied);
}

TEST_F(RegistryTest, Errors) {
  add("printing");
  EXPECT_THROW(add("printing"), RegistryError);
  auto bad = service("printer");
  bad.interface.operations[0].inputs[0].semantic.name = "ghost";
  EXPECT_THROW(reg.register_service(bad), RegistryError);
  EXPECT_THROW(reg.unregister_service("nobody"), RegistryError);
  EXPECT_THROW(reg.plan_for("nobody"), RegistryError);
  auto p = profile("app-printing");
  p.weights = {{"price", 1.0}};
  EXPECT_NO_THROW(reg.bind(p));
  p.weights = {{"price", 0.5}, {"nbPage", 0.7}};
  EXPECT_THROW(reg.bind(p), RegistryError);
  p.weights.clear();
  p.operations = {"Nope"};
  EXPECT_THROW(reg.bind(p), RegistryError);
  EXPECT_THROW(reg.call("ghost-app", "x", "", 0), RegistryError);
  EXPECT_EQ(reg.service_ids(), (std::vector<std::string>{"printing"}));
}

TEST_F(RegistryTest, AppearThenDisappearRestoresBindings) {
  add("impression");
  add("printer");
  reg.bind(profile("app-impression"));
  const auto before = *reg.binding("app");
  add("stapler");
  reg.unregister_service("stapler");
  const auto after = *reg.binding("app");
  EXPECT_EQ(after.service, before.service);
  EXPECT_EQ(after.degree, before.degree);
  EXPECT_EQ(after.mode, before.mode);
}

TEST_F(RegistryTest, EventLogWritesOneLinePerDecision) {
  std::ostringstream log;
  reg.set_event_log(&log);
  add("impression");
  reg.bind(profile("app-impression"));
  add("printing");
  std::istringstream in(log.str());
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 2u);
  for (const auto* key : {"event", "service", "app", "chosen", "tier", "degree", "latency_us"})
    EXPECT_TRUE(lines[1].contains(key)) << key;
  EXPECT_EQ(lines[1]["chosen"], "printing");
  EXPECT_EQ(lines[1]["event"], "register");
}

TEST(ProxyQueue, CapacityAndTimeout) {
  ProxyQueue q(2, 10);
  EXPECT_TRUE(q.push({"a", "op", "1", 0}));
  EXPECT_TRUE(q.push({"a", "op", "2", 15}));
  EXPECT_FALSE(q.push({"a", "op", "3", 16}));
  EXPECT_EQ(q.size(), 2u);
  const auto f = q.drain(20);
  EXPECT_EQ(f.expired, 1u);
  ASSERT_EQ(f.delivered.size(), 1u);
  EXPECT_EQ(f.delivered[0].payload, "2");
  EXPECT_EQ(q.size(), 0u);
}

TEST(ProxyQueue, RejectedWhenFull) {
  Registry reg(printer_ontology(), RegistryConfig{1, 100});
  reg.bind(profile("app-printing"));
  EXPECT_EQ(reg.call("app1", "Printing", "a", 0).route, CallRoute::Queued);
  EXPECT_EQ(reg.call("app1", "Printing", "b", 0).route, CallRoute::Rejected);
}

TEST(Profile, ParseErrors) {
  using nlohmann::json;
  EXPECT_THROW(parse_profile(json::array()), RegistryError);
  EXPECT_THROW(parse_profile(json{{"app", "x"}}), RegistryError);
  auto doc = to_json(profile("app-impression"));
  EXPECT_EQ(parse_profile(doc).weights.at("price"), 0.6);
  doc["weights"]["price"] = 0.9;
  EXPECT_THROW(parse_profile(doc), RegistryError);
  doc = to_json(profile("app-impression"));
  doc["operations"] = json::array({1});
  EXPECT_THROW(parse_profile(doc), RegistryError);
}
