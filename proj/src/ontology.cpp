#include "svcsub/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace svcsub {

namespace {

constexpr std::string_view kMatchNames[] = {"Exact", "PlugIn", "Subsume", "Fail"};

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

std::vector<std::pair<std::string, std::string>> read_pairs(const nlohmann::json& doc,
                                                            const char* key) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!doc.contains(key)) return out;
  const auto& arr = doc.at(key);
  if (!arr.is_array())
    throw OntologyError(OntologyError::Kind::Parse, std::string("'") + key + "' must be an array");
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
      throw OntologyError(OntologyError::Kind::Parse,
                          std::string("'") + key + "' entries must be [string, string] pairs");
    out.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
  }
  return out;
}

}  // namespace

std::string_view to_string(MatchValue v) { return kMatchNames[static_cast<int>(v)]; }

std::optional<MatchValue> parse_match_value(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (kMatchNames[i] == s) return static_cast<MatchValue>(i);
  return std::nullopt;
}

std::string to_string(const ConceptRef& ref) { return ref.ontology + ":" + ref.name; }

void DistanceTable::validate() const {
  const double v[] = {exact, plugin, subsume, fail};
  for (double x : v)
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("concept distances must lie in [0,1]");
  if (!(exact < plugin && plugin < subsume && subsume < fail))
    throw std::invalid_argument("concept distances must strictly increase Exact<PlugIn<Subsume<Fail");
}

double DistanceTable::operator()(MatchValue v) const {
  switch (v) {
    case MatchValue::Exact: return exact;
    case MatchValue::PlugIn: return plugin;
    case MatchValue::Subsume: return subsume;
    case MatchValue::Fail: return fail;
  }
  return fail;
}

Ontology::Ontology(std::string id, std::vector<std::string> concepts,
                   std::vector<std::pair<std::string, std::string>> subsumption,
                   std::vector<std::pair<std::string, std::string>> equivalences)
    : id_(std::move(id)),
      names_(std::move(concepts)),
      edges_(std::move(subsumption)),
      equivalences_(std::move(equivalences)) {
  const auto n = static_cast<std::uint32_t>(names_.size());
  index_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!index_.emplace(names_[i], i).second)
      throw OntologyError(OntologyError::Kind::Parse, "duplicate concept '" + names_[i] + "'");
  }

  auto endpoint = [&](const std::string& name, const char* what) {
    auto it = index_.find(name);
    if (it == index_.end())
      throw OntologyError(OntologyError::Kind::DanglingReference,
                          std::string(what) + " names undeclared concept '" + name + "'");
    return it->second;
  };

  std::vector<std::uint32_t> uf(n);
  std::iota(uf.begin(), uf.end(), 0u);
  for (const auto& [a, b] : equivalences_) {
    auto ra = find_root(uf, endpoint(a, "equivalence"));
    auto rb = find_root(uf, endpoint(b, "equivalence"));
    if (ra != rb) uf[std::max(ra, rb)] = std::min(ra, rb);
  }

  // Dense class ids in first-appearance order.
  class_of_.assign(n, 0);
  std::vector<std::uint32_t> dense(n, UINT32_MAX);
  std::uint32_t classes = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto r = find_root(uf, i);
    if (dense[r] == UINT32_MAX) dense[r] = classes++;
    class_of_[i] = dense[r];
  }

  has_children_.assign(n, false);
  std::vector<std::vector<std::uint32_t>> children(classes);
  std::vector<std::uint32_t> indegree(classes, 0);
  for (const auto& [parent, child] : edges_) {
    auto p = endpoint(parent, "subsumption edge");
    auto c = endpoint(child, "subsumption edge");
    has_children_[p] = true;
    auto cp = class_of_[p];
    auto cc = class_of_[c];
    if (cp == cc)
      throw OntologyError(OntologyError::Kind::Cycle,
                          "subsumption edge " + parent + " -> " + child + " closes a cycle");
    children[cp].push_back(cc);
    ++indegree[cc];
  }

  // Kahn's algorithm; ancestors propagate along the topological order.
  const std::size_t words = (classes + 63) / 64;
  ancestors_.assign(classes, std::vector<std::uint64_t>(words, 0));
  std::vector<std::uint32_t> queue;
  queue.reserve(classes);
  for (std::uint32_t c = 0; c < classes; ++c)
    if (indegree[c] == 0) queue.push_back(c);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    auto c = queue[head];
    for (auto child : children[c]) {
      auto& anc = ancestors_[child];
      const auto& mine = ancestors_[c];
      for (std::size_t w = 0; w < words; ++w) anc[w] |= mine[w];
      anc[c / 64] |= std::uint64_t{1} << (c % 64);
      if (--indegree[child] == 0) queue.push_back(child);
    }
  }
  if (queue.size() != classes) {
    std::string culprit;
    for (std::uint32_t i = 0; i < n && culprit.empty(); ++i)
      if (indegree[class_of_[i]] != 0) culprit = names_[i];
    throw OntologyError(OntologyError::Kind::Cycle,
                        "subsumption cycle through concept '" + culprit + "'");
  }
}

Ontology Ontology::from_json(const nlohmann::json& doc) {
  using K = OntologyError::Kind;
  if (!doc.is_object()) throw OntologyError(K::Parse, "ontology document must be a JSON object");
  if (!doc.contains("id") || !doc.at("id").is_string())
    throw OntologyError(K::Parse, "ontology document requires string field 'id'");
  std::vector<std::string> concepts;
  if (doc.contains("concepts")) {
    const auto& arr = doc.at("concepts");
    if (!arr.is_array()) throw OntologyError(K::Parse, "'concepts' must be an array");
    for (const auto& c : arr) {
      if (!c.is_string()) throw OntologyError(K::Parse, "concept names must be strings");
      concepts.push_back(c.get<std::string>());
    }
  }
  return Ontology(doc.at("id").get<std::string>(), std::move(concepts),
                  read_pairs(doc, "subsumption"), read_pairs(doc, "equivalences"));
}

Ontology Ontology::parse(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw OntologyError(OntologyError::Kind::Parse, e.what());
  }
  return from_json(doc);
}

Ontology Ontology::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw OntologyError(OntologyError::Kind::Parse, "cannot open ontology '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

nlohmann::json Ontology::to_json() const {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : edges_) edges.push_back({a, b});
  nlohmann::json eqs = nlohmann::json::array();
  for (const auto& [a, b] : equivalences_) eqs.push_back({a, b});
  return {{"id", id_}, {"concepts", names_}, {"subsumption", edges}, {"equivalences", eqs}};
}

bool Ontology::contains(std::string_view name) const {
  return index_.find(std::string(name)) != index_.end();
}

bool Ontology::resolves(const ConceptRef& ref) const {
  return ref.ontology == id_ && contains(ref.name);
}

std::uint32_t Ontology::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    throw OntologyError(OntologyError::Kind::Unresolved,
                        "concept '" + std::string(name) + "' not in ontology '" + id_ + "'");
  return it->second;
}

std::uint32_t Ontology::resolve(const ConceptRef& ref) const {
  if (ref.ontology != id_)
    throw OntologyError(OntologyError::Kind::Unresolved,
                        "ontology '" + ref.ontology + "' is not loaded (have '" + id_ + "')");
  return index_of(ref.name);
}

bool Ontology::class_is_ancestor(std::uint32_t anc, std::uint32_t desc) const {
  return (ancestors_[desc][anc / 64] >> (anc % 64)) & 1u;
}

bool Ontology::subsumes(std::string_view ancestor, std::string_view descendant) const {
  return class_is_ancestor(class_of_[index_of(ancestor)], class_of_[index_of(descendant)]);
}

bool Ontology::equivalent(std::string_view a, std::string_view b) const {
  return class_of_[index_of(a)] == class_of_[index_of(b)];
}

std::vector<std::string> Ontology::leaves() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (!has_children_[i]) out.push_back(names_[i]);
  return out;
}

MatchValue Ontology::match(const ConceptRef& n, const ConceptRef& m) const {
  if (n.ontology != m.ontology) return MatchValue::Fail;
  auto cn = class_of_[resolve(n)];
  auto cm = class_of_[resolve(m)];
  if (cn == cm) return MatchValue::Exact;
  if (class_is_ancestor(cn, cm)) return MatchValue::PlugIn;
  if (class_is_ancestor(cm, cn)) return MatchValue::Subsume;
  return MatchValue::Fail;
}

double Ontology::distance(const ConceptRef& n, const ConceptRef& m) const {
  return table_(match(n, m));
}

Ontology Ontology::with_distance_table(DistanceTable table) const {
  table.validate();
  Ontology copy = *this;
  copy.table_ = table;
  return copy;
}

}  // namespace svcsub
