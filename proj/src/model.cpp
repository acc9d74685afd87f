#include "svcsub/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace svcsub {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ModelError(path + ": " + msg);
}

const json& require(const json& doc, const char* key, const std::string& path) {
  if (!doc.is_object()) fail(path, "expected an object");
  auto it = doc.find(key);
  if (it == doc.end()) fail(path, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& doc, const char* key, const std::string& path) {
  const auto& v = require(doc, key, path);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

ConceptRef read_semantic(const json& doc, const std::string& path) {
  return {require_string(doc, "ontology", path), require_string(doc, "semantic", path)};
}

TypeRef read_type(const json& doc, const std::string& path) {
  const auto& t = require(doc, "type", path);
  const auto tp = path + ".type";
  return {require_string(t, "language", tp), require_string(t, "name", tp)};
}

json semantic_json(const ConceptRef& c) { return {{"ontology", c.ontology}, {"semantic", c.name}}; }

json type_json(const TypeRef& t) { return {{"language", t.language}, {"name", t.name}}; }

void check_ref(const ConceptRef& ref, const Ontology& o, const std::string& path,
               std::vector<Diagnostic>& out) {
  if (o.resolves(ref)) return;
  std::string msg = ref.ontology != o.id()
                        ? "ontology '" + ref.ontology + "' is not loaded"
                        : "concept '" + ref.name + "' not found in ontology '" + o.id() + "'";
  out.push_back({path, ref, std::move(msg)});
}

}  // namespace

std::string_view to_string(Order o) {
  switch (o) {
    case Order::Less: return "<";
    case Order::Greater: return ">";
    case Order::LessEqual: return "<=";
    case Order::GreaterEqual: return ">=";
  }
  return "<";
}

std::optional<Order> parse_order(std::string_view s) {
  if (s == "<") return Order::Less;
  if (s == ">") return Order::Greater;
  if (s == "<=" || s == "≤") return Order::LessEqual;
  if (s == ">=" || s == "≥") return Order::GreaterEqual;
  return std::nullopt;
}

Order direction(Order o) {
  switch (o) {
    case Order::LessEqual: return Order::Less;
    case Order::GreaterEqual: return Order::Greater;
    default: return o;
  }
}

const std::string& property_name(const Property& p) {
  return std::visit([](const auto& x) -> const std::string& { return x.name; }, p);
}

const Property* Operation::find_property(std::string_view name) const {
  for (const auto& p : nfps)
    if (property_name(p) == name) return &p;
  return nullptr;
}

const Operation* Interface::find(std::string_view name) const {
  auto idx = index_of(name);
  return idx ? &operations[*idx] : nullptr;
}

std::optional<std::size_t> Interface::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < operations.size(); ++i)
    if (operations[i].name() == name) return i;
  return std::nullopt;
}

Operation parse_operation(const json& doc, const std::string& path) {
  Operation op;
  const auto& cpt = require(doc, "concept", path);
  op.capability = {require_string(cpt, "name", path + ".concept"),
                   read_semantic(cpt, path + ".concept")};

  if (doc.contains("inputs")) {
    const auto& inputs = doc.at("inputs");
    if (!inputs.is_array()) fail(path + ".inputs", "expected an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto ip = path + ".inputs[" + std::to_string(i) + "]";
      Parameter p{require_string(inputs[i], "name", ip), read_type(inputs[i], ip),
                  read_semantic(inputs[i], ip)};
      if (!seen.insert(p.name).second) fail(ip, "duplicate input name '" + p.name + "'");
      op.inputs.push_back(std::move(p));
    }
  }

  if (doc.contains("output") && !doc.at("output").is_null()) {
    const auto& out = doc.at("output");
    op.output = OutputSpec{read_type(out, path + ".output"), read_semantic(out, path + ".output")};
  }

  if (doc.contains("nfps")) {
    const auto& nfps = doc.at("nfps");
    if (!nfps.is_array()) fail(path + ".nfps", "expected an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < nfps.size(); ++i) {
      const auto np = path + ".nfps[" + std::to_string(i) + "]";
      const auto kind = require_string(nfps[i], "kind", np);
      auto name = require_string(nfps[i], "name", np);
      if (!seen.insert(name).second) fail(np, "duplicate property name '" + name + "'");
      if (kind == "qualitative") {
        op.nfps.emplace_back(QualitativeProperty{std::move(name), read_semantic(nfps[i], np)});
      } else if (kind == "quantitative") {
        const auto& v = require(nfps[i], "value", np);
        if (!v.is_number()) fail(np + ".value", "expected a number");
        const double value = v.get<double>();
        if (!std::isfinite(value)) fail(np + ".value", "value must be finite");
        const auto op_text = require_string(nfps[i], "operator", np);
        auto order = parse_order(op_text);
        if (!order) fail(np + ".operator", "unknown operator '" + op_text + "'");
        op.nfps.emplace_back(QuantitativeProperty{std::move(name), value, *order});
      } else {
        fail(np + ".kind", "expected 'qualitative' or 'quantitative', got '" + kind + "'");
      }
    }
  }
  return op;
}

Interface parse_interface(const json& doc, const std::string& path) {
  const auto& ops = require(doc, "operations", path);
  if (!ops.is_array()) fail(path + ".operations", "expected an array");
  if (ops.empty()) fail(path + ".operations", "an interface needs at least one operation");
  Interface ifc;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto op_path = path + ".operations[" + std::to_string(i) + "]";
    auto op = parse_operation(ops[i], op_path);
    if (!seen.insert(op.name()).second)
      fail(op_path, "duplicate operation concept name '" + op.name() + "'");
    ifc.operations.push_back(std::move(op));
  }
  return ifc;
}

Service parse_service(const json& doc) {
  Service s;
  s.id = require_string(doc, "id", "service");
  if (s.id.empty()) fail("service.id", "must not be empty");
  s.interface = parse_interface(require(doc, "interface", "service"), "interface");
  if (doc.contains("metadata")) {
    const auto& md = doc.at("metadata");
    if (!md.is_object()) fail("metadata", "expected an object");
    for (const auto& [k, v] : md.items())
      s.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return s;
}

Service parse_service(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("service: ") + e.what());
  }
  return parse_service(doc);
}

Service load_service(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open service descriptor '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_service(std::string_view(buf.str()));
  } catch (const ModelError& e) {
    throw ModelError(path.filename().string() + ": " + e.what());
  }
}

std::vector<Service> load_services(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Service> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_service(f));
  return out;
}

json to_json(const Operation& op) {
  json cpt = semantic_json(op.capability.semantic);
  cpt["name"] = op.capability.name;
  json inputs = json::array();
  for (const auto& p : op.inputs) {
    json j = semantic_json(p.semantic);
    j["name"] = p.name;
    j["type"] = type_json(p.type);
    inputs.push_back(std::move(j));
  }
  json nfps = json::array();
  for (const auto& np : op.nfps) {
    if (const auto* ql = std::get_if<QualitativeProperty>(&np)) {
      json j = semantic_json(ql->semantic);
      j["kind"] = "qualitative";
      j["name"] = ql->name;
      nfps.push_back(std::move(j));
    } else {
      const auto& qn = std::get<QuantitativeProperty>(np);
      nfps.push_back({{"kind", "quantitative"},
                      {"name", qn.name},
                      {"value", qn.value},
                      {"operator", std::string(to_string(qn.order))}});
    }
  }
  json out = {{"concept", cpt}, {"inputs", inputs}, {"nfps", nfps}};
  if (op.output) {
    json o = semantic_json(op.output->semantic);
    o["type"] = type_json(op.output->type);
    out["output"] = std::move(o);
  }
  return out;
}

json to_json(const Interface& ifc) {
  json ops = json::array();
  for (const auto& op : ifc.operations) ops.push_back(to_json(op));
  return {{"operations", ops}};
}

json to_json(const Service& s) {
  json out = {{"id", s.id}, {"interface", to_json(s.interface)}};
  if (!s.metadata.empty()) out["metadata"] = s.metadata;
  return out;
}

std::vector<Diagnostic> validate_interface(const Interface& ifc, const Ontology& o,
                                           const std::string& path) {
  std::vector<Diagnostic> out;
  for (std::size_t i = 0; i < ifc.operations.size(); ++i) {
    const auto& op = ifc.operations[i];
    const auto op_path = path + ".operations[" + std::to_string(i) + "]";
    check_ref(op.capability.semantic, o, op_path + ".concept.semantic", out);
    for (std::size_t k = 0; k < op.inputs.size(); ++k)
      check_ref(op.inputs[k].semantic, o, op_path + ".inputs[" + std::to_string(k) + "].semantic",
                out);
    if (op.output) check_ref(op.output->semantic, o, op_path + ".output.semantic", out);
    for (std::size_t k = 0; k < op.nfps.size(); ++k)
      if (const auto* ql = std::get_if<QualitativeProperty>(&op.nfps[k]))
        check_ref(ql->semantic, o, op_path + ".nfps[" + std::to_string(k) + "].semantic", out);
  }
  return out;
}

std::vector<Diagnostic> validate_service(const Service& s, const Ontology& o) {
  return validate_interface(s.interface, o, "interface");
}

}  // namespace svcsub
