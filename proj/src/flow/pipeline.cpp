#include "noetic/flow/pipeline.hpp"

#include "noetic/io/recording.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

namespace noetic::flow {

namespace {

const char* const kPortNames[] = {"raw-stream", "epochs", "features", "labels", "model", "spectrum", "events", "frame"};

std::string quote(const std::string& s) { return "'" + s + "'"; }

std::string known_kinds() {
  std::string out;
  for (const auto& k : node_catalog()) out += (out.empty() ? "" : ", ") + k.kind;
  return out;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

}  // namespace

std::string to_string(PortType t) { return kPortNames[static_cast<int>(t)]; }

PortType port_type_from_string(const std::string& s) {
  for (int i = 0; i < 8; ++i)
    if (s == kPortNames[i]) return static_cast<PortType>(i);
  throw SpecError("unknown port type '" + s + "'");
}

std::string to_string(ParamType t) {
  switch (t) {
    case ParamType::number: return "number";
    case ParamType::integer: return "integer";
    case ParamType::boolean: return "boolean";
    case ParamType::string: return "string";
    case ParamType::number_list: return "number list";
    case ParamType::string_list: return "string list";
    case ParamType::channel_list: return "channel list";
    case ParamType::object: return "object";
  }
  return "?";
}

const ParamDecl* NodeKindInfo::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

std::optional<std::size_t> NodeKindInfo::input_index(const std::string& port) const {
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i].name == port) return i;
  return std::nullopt;
}

std::optional<std::size_t> NodeKindInfo::output_index(const std::string& port) const {
  for (std::size_t i = 0; i < outputs.size(); ++i)
    if (outputs[i].name == port) return i;
  return std::nullopt;
}

const NodeKindInfo* find_kind(const std::string& kind) {
  for (const auto& k : node_catalog())
    if (k.kind == kind) return &k;
  return nullptr;
}

nlohmann::json catalog_to_json() {
  auto out = nlohmann::json::array();
  for (const auto& k : node_catalog()) {
    nlohmann::json j{{"kind", k.kind},
                     {"role", k.role == NodeRole::source ? "source" : k.role == NodeRole::sink ? "sink" : "transform"},
                     {"help", k.help},
                     {"online", k.online}};
    auto ports = [](const std::vector<PortDecl>& v) {
      auto a = nlohmann::json::array();
      for (const auto& p : v) a.push_back({{"name", p.name}, {"type", to_string(p.type)}});
      return a;
    };
    j["inputs"] = ports(k.inputs);
    j["outputs"] = ports(k.outputs);
    auto params = nlohmann::json::array();
    for (const auto& p : k.params) {
      nlohmann::json pj{{"name", p.name}, {"type", to_string(p.type)}, {"tunable", p.tunable}, {"help", p.help}};
      if (p.default_value.is_null())
        pj["required"] = true;
      else
        pj["default"] = p.default_value;
      if (p.min) pj["min"] = *p.min;
      if (p.max) pj["max"] = *p.max;
      if (!p.choices.empty()) pj["choices"] = p.choices;
      params.push_back(pj);
    }
    j["params"] = params;
    out.push_back(j);
  }
  return out;
}

PipelineError::PipelineError(std::string source, std::vector<Detail> details)
    : SpecError([&] {
        std::string msg = source + ": ";
        if (details.empty()) return msg + "invalid pipeline";
        if (!details.front().node.empty()) msg += "node " + quote(details.front().node) + ": ";
        msg += details.front().message;
        if (details.size() > 1) msg += " (and " + std::to_string(details.size() - 1) + " more)";
        return msg;
      }()),
      source_(std::move(source)),
      details_(std::move(details)) {}

nlohmann::json PipelineError::to_json() const {
  auto d = nlohmann::json::array();
  for (const auto& x : details_) {
    nlohmann::json j{{"message", x.message}};
    j["node"] = x.node.empty() ? nlohmann::json(nullptr) : nlohmann::json(x.node);
    d.push_back(j);
  }
  return {{"error", what()}, {"source", source_}, {"details", d}};
}

const NodeDoc* PipelineDoc::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

NodeDoc* PipelineDoc::node(const std::string& id) {
  for (auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

std::string check_param(const ParamDecl& decl, const nlohmann::json& v) {
  const std::string want = "expected " + to_string(decl.type);
  auto range = [&](double x) -> std::string {
    if (!std::isfinite(x)) return "value must be finite";
    char buf[64];
    if (decl.min && x < *decl.min) {
      std::snprintf(buf, sizeof buf, "%g", *decl.min);
      return "value must be >= " + std::string(buf);
    }
    if (decl.max && x > *decl.max) {
      std::snprintf(buf, sizeof buf, "%g", *decl.max);
      return "value must be <= " + std::string(buf);
    }
    return {};
  };
  switch (decl.type) {
    case ParamType::number:
      if (!v.is_number()) return want;
      return range(v.get<double>());
    case ParamType::integer:
      if (!v.is_number_integer()) return want;
      return range(v.get<double>());
    case ParamType::boolean:
      return v.is_boolean() ? "" : want;
    case ParamType::string:
      if (!v.is_string()) return want;
      if (!decl.choices.empty() &&
          std::find(decl.choices.begin(), decl.choices.end(), v.get<std::string>()) == decl.choices.end())
        return "value " + quote(v.get<std::string>()) + " not one of " + join(decl.choices, "|");
      return {};
    case ParamType::number_list:
      if (!v.is_array()) return want;
      for (const auto& x : v) {
        if (!x.is_number()) return want;
        if (auto e = range(x.get<double>()); !e.empty()) return e;
      }
      return {};
    case ParamType::string_list:
      if (!v.is_array()) return want;
      for (const auto& x : v)
        if (!x.is_string()) return want;
      return {};
    case ParamType::channel_list: {
      if (!v.is_array()) return want + " (names or indices)";
      bool names = false, indices = false;
      for (const auto& x : v) {
        if (x.is_string())
          names = true;
        else if (x.is_number_unsigned() || (x.is_number_integer() && x.get<long long>() >= 0))
          indices = true;
        else
          return want + " (names or non-negative indices)";
      }
      if (names && indices) return "channel list mixes names and indices";
      return {};
    }
    case ParamType::object:
      return v.is_object() ? "" : want;
  }
  return want;
}

nlohmann::json resolved_params(const NodeKindInfo& info, const nlohmann::json& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& p : info.params)
    if (!p.default_value.is_null()) out[p.name] = p.default_value;
  for (auto it = params.begin(); it != params.end(); ++it) out[it.key()] = it.value();
  return out;
}

namespace {

// Document-level checks shared by parsing and graph validation.
void check_doc(const PipelineDoc& doc, std::vector<PipelineError::Detail>& errors) {
  if (doc.version != 1) errors.push_back({"", "unsupported pipeline version " + std::to_string(doc.version)});
  std::set<std::string> seen;
  for (const auto& n : doc.nodes) {
    if (n.id.empty()) {
      errors.push_back({"", "node with empty id"});
      continue;
    }
    if (!seen.insert(n.id).second) errors.push_back({n.id, "duplicate node id " + quote(n.id)});
    const auto* info = find_kind(n.kind);
    if (info == nullptr) {
      errors.push_back({n.id, "unknown kind " + quote(n.kind) + "; known kinds: " + known_kinds()});
      continue;
    }
    if (!n.params.is_object()) {
      errors.push_back({n.id, "params must be an object"});
      continue;
    }
    for (auto it = n.params.begin(); it != n.params.end(); ++it) {
      const auto* decl = info->param(it.key());
      if (decl == nullptr) {
        std::vector<std::string> names;
        for (const auto& p : info->params) names.push_back(p.name);
        errors.push_back({n.id, "unknown param " + quote(it.key()) + " for " + n.kind +
                                    (names.empty() ? " (takes no params)" : " (known: " + join(names, ", ") + ")")});
        continue;
      }
      if (auto e = check_param(*decl, it.value()); !e.empty())
        errors.push_back({n.id, "param " + quote(it.key()) + ": " + e});
    }
    for (const auto& p : info->params)
      if (p.default_value.is_null() && !n.params.contains(p.name))
        errors.push_back({n.id, "missing required param " + quote(p.name)});
  }
  for (const auto& e : doc.edges) {
    const std::string label = e.from + "." + e.from_port + " -> " + e.to + "." + e.to_port;
    const auto* a = doc.node(e.from);
    const auto* b = doc.node(e.to);
    if (a == nullptr) errors.push_back({e.from, "edge " + label + ": unknown source node " + quote(e.from)});
    if (b == nullptr) errors.push_back({e.to, "edge " + label + ": unknown target node " + quote(e.to)});
    if (a != nullptr)
      if (const auto* info = find_kind(a->kind); info && !info->output_index(e.from_port))
        errors.push_back({e.from, "edge " + label + ": " + a->kind + " has no output port " + quote(e.from_port)});
    if (b != nullptr)
      if (const auto* info = find_kind(b->kind); info && !info->input_index(e.to_port))
        errors.push_back({e.to, "edge " + label + ": " + b->kind + " has no input port " + quote(e.to_port)});
  }
}

std::string get_string(const nlohmann::json& j, const char* key, const std::string& where,
                       std::vector<PipelineError::Detail>& errors, const std::string& node = {}) {
  if (!j.contains(key) || !j[key].is_string()) {
    errors.push_back({node, where + ": missing or non-string " + quote(key)});
    return {};
  }
  return j[key].get<std::string>();
}

}  // namespace

PipelineDoc pipeline_from_json(const nlohmann::json& j, const std::string& source) {
  std::vector<PipelineError::Detail> errors;
  PipelineDoc doc;
  doc.source = source;
  if (!j.is_object()) throw PipelineError(source, {{"", "pipeline document must be a JSON object"}});
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "version" && it.key() != "nodes" && it.key() != "edges" && it.key() != "seed" && it.key() != "ui")
      errors.push_back({"", "unknown top-level key " + quote(it.key())});
  if (j.contains("version")) {
    if (j["version"].is_number_integer())
      doc.version = j["version"].get<int>();
    else
      errors.push_back({"", "version must be an integer"});
  }
  if (j.contains("seed")) {
    if (j["seed"].is_number_unsigned() || (j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      doc.seed = j["seed"].get<std::uint64_t>();
    else
      errors.push_back({"", "seed must be a non-negative integer"});
  }
  if (j.contains("ui")) doc.ui = j["ui"];

  const auto nodes = j.value("nodes", nlohmann::json::array());
  if (!nodes.is_array()) errors.push_back({"", "nodes must be an array"});
  for (std::size_t i = 0; nodes.is_array() && i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (!n.is_object()) {
      errors.push_back({"", where + " must be an object"});
      continue;
    }
    NodeDoc nd;
    nd.id = get_string(n, "id", where, errors);
    nd.kind = get_string(n, "kind", where, errors, nd.id);
    if (n.contains("params")) nd.params = n["params"];
    for (auto it = n.begin(); it != n.end(); ++it)
      if (it.key() != "id" && it.key() != "kind" && it.key() != "params")
        errors.push_back({nd.id, where + ": unknown key " + quote(it.key())});
    doc.nodes.push_back(std::move(nd));
  }
  const auto edges = j.value("edges", nlohmann::json::array());
  if (!edges.is_array()) errors.push_back({"", "edges must be an array"});
  for (std::size_t i = 0; edges.is_array() && i < edges.size(); ++i) {
    const auto& e = edges[i];
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!e.is_object()) {
      errors.push_back({"", where + " must be an object"});
      continue;
    }
    EdgeDoc ed;
    ed.from = get_string(e, "from", where, errors);
    ed.from_port = get_string(e, "from_port", where, errors, ed.from);
    ed.to = get_string(e, "to", where, errors);
    ed.to_port = get_string(e, "to_port", where, errors, ed.to);
    for (auto it = e.begin(); it != e.end(); ++it)
      if (it.key() != "from" && it.key() != "from_port" && it.key() != "to" && it.key() != "to_port")
        errors.push_back({"", where + ": unknown key " + quote(it.key())});
    doc.edges.push_back(std::move(ed));
  }
  if (errors.empty()) check_doc(doc, errors);
  if (!errors.empty()) throw PipelineError(source, std::move(errors));
  return doc;
}

PipelineDoc parse_pipeline(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw PipelineError(source, {{"", std::string("invalid JSON: ") + e.what()}});
  }
  return pipeline_from_json(j, source);
}

PipelineDoc load_pipeline(const std::string& path) { return parse_pipeline(io::read_file(path), path); }

nlohmann::json pipeline_to_json(const PipelineDoc& doc, bool include_ui) {
  nlohmann::json j;
  j["version"] = doc.version;
  j["seed"] = doc.seed;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : doc.nodes) j["nodes"].push_back({{"id", n.id}, {"kind", n.kind}, {"params", n.params}});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : doc.edges)
    j["edges"].push_back({{"from", e.from}, {"from_port", e.from_port}, {"to", e.to}, {"to_port", e.to_port}});
  if (include_ui && !doc.ui.is_null()) j["ui"] = doc.ui;
  return j;
}

std::string save_pipeline(const PipelineDoc& doc) { return pipeline_to_json(doc).dump(2) + "\n"; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string pipeline_hash(const PipelineDoc& doc) { return sha256_hex(pipeline_to_json(doc, false).dump(2) + "\n"); }

std::optional<std::size_t> FlowGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].doc.id == id) return i;
  return std::nullopt;
}

FlowGraph validate_graph(const PipelineDoc& doc) {
  std::vector<PipelineError::Detail> errors;
  check_doc(doc, errors);
  if (!errors.empty()) throw PipelineError(doc.source, std::move(errors));

  FlowGraph g;
  g.doc = doc;
  std::map<std::string, std::size_t> index;
  for (const auto& n : doc.nodes) {
    GraphNode gn;
    gn.doc = n;
    gn.info = find_kind(n.kind);
    gn.params = resolved_params(*gn.info, n.params);
    gn.inputs.assign(gn.info->inputs.size(), Connection{SIZE_MAX, 0});
    gn.outputs.resize(gn.info->outputs.size());
    index[n.id] = g.nodes.size();
    g.nodes.push_back(std::move(gn));
  }

  for (const auto& e : doc.edges) {
    const std::size_t a = index[e.from], b = index[e.to];
    auto& src = g.nodes[a];
    auto& dst = g.nodes[b];
    const std::size_t op = *src.info->output_index(e.from_port);
    const std::size_t ip = *dst.info->input_index(e.to_port);
    const auto& out_decl = src.info->outputs[op];
    const auto& in_decl = dst.info->inputs[ip];
    const std::string label = e.from + "." + e.from_port + " -> " + e.to + "." + e.to_port;
    if (out_decl.type != in_decl.type) {
      errors.push_back({e.to, "type mismatch on edge " + label + ": output port " + e.from + "." + e.from_port + " is " +
                                  to_string(out_decl.type) + " but input port " + e.to + "." + e.to_port + " expects " +
                                  to_string(in_decl.type)});
      continue;
    }
    if (dst.inputs[ip].node != SIZE_MAX) {
      errors.push_back({e.to, "input port " + e.to + "." + e.to_port + " is connected more than once"});
      continue;
    }
    dst.inputs[ip] = {a, op};
    src.outputs[op].push_back({b, ip});
  }
  for (const auto& n : g.nodes)
    for (std::size_t i = 0; i < n.inputs.size(); ++i)
      if (n.inputs[i].node == SIZE_MAX)
        errors.push_back({n.doc.id, "input port " + n.doc.id + "." + n.info->inputs[i].name + " (" +
                                        to_string(n.info->inputs[i].type) + ") is not connected"});
  if (!errors.empty()) throw PipelineError(doc.source, std::move(errors));

  // Kahn's algorithm; ready nodes leave in lexicographic id order.
  std::vector<std::size_t> indegree(g.nodes.size(), 0);
  for (const auto& n : g.nodes)
    for (const auto& outs : n.outputs)
      for (const auto& c : outs) ++indegree[c.node];
  using Item = std::pair<std::string, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (indegree[i] == 0) ready.push({g.nodes[i].doc.id, i});
  while (!ready.empty()) {
    const auto i = ready.top().second;
    ready.pop();
    g.order.push_back(i);
    for (const auto& outs : g.nodes[i].outputs)
      for (const auto& c : outs)
        if (--indegree[c.node] == 0) ready.push({g.nodes[c.node].doc.id, c.node});
  }
  if (g.order.size() != g.nodes.size()) {
    // Walk predecessors among the remaining nodes until one repeats.
    std::size_t cur = SIZE_MAX;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (indegree[i] > 0 && (cur == SIZE_MAX || g.nodes[i].doc.id < g.nodes[cur].doc.id)) cur = i;
    std::vector<std::size_t> path;
    std::vector<int> pos(g.nodes.size(), -1);
    while (pos[cur] < 0) {
      pos[cur] = static_cast<int>(path.size());
      path.push_back(cur);
      for (const auto& c : g.nodes[cur].inputs)
        if (indegree[c.node] > 0) {
          cur = c.node;
          break;
        }
    }
    // path walks predecessors; the cycle is path[pos[cur]..] reversed
    std::vector<std::string> cycle;
    for (auto i = path.size(); i-- > static_cast<std::size_t>(pos[cur]);) cycle.push_back(g.nodes[path[i]].doc.id);
    std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
    cycle.push_back(cycle.front());
    throw PipelineError(doc.source, {{cycle.front(), "cycle: " + join(cycle, " -> ")}});
  }

  for (const auto& n : g.nodes)
    for (const auto& p : n.info->params)
      if (p.tunable) g.tunables.emplace_back(n.doc.id, p.name);
  return g;
}

}  // namespace noetic::flow
