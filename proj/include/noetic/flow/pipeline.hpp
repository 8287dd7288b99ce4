#pragma once

#include "noetic/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace noetic::flow {

enum class PortType { raw_stream, epochs, features, labels, model, spectrum, events, frame };

std::string to_string(PortType t);
PortType port_type_from_string(const std::string& s);

enum class ParamType { number, integer, boolean, string, number_list, string_list, channel_list, object };

std::string to_string(ParamType t);

struct ParamDecl {
  std::string name;
  ParamType type = ParamType::number;
  nlohmann::json default_value;  // null: required
  bool tunable = false;
  std::string help;
  std::optional<double> min, max;
  std::vector<std::string> choices;
};

struct PortDecl {
  std::string name;
  PortType type = PortType::raw_stream;
};

enum class NodeRole { source, transform, sink };

struct NodeKindInfo {
  std::string kind;
  NodeRole role = NodeRole::transform;
  std::string help;
  std::vector<PortDecl> inputs;
  std::vector<PortDecl> outputs;
  std::vector<ParamDecl> params;
  bool online = true;  // usable in streaming sessions

  const ParamDecl* param(const std::string& name) const;
  std::optional<std::size_t> input_index(const std::string& port) const;
  std::optional<std::size_t> output_index(const std::string& port) const;
};

/// Every registered node kind, sorted by name.
const std::vector<NodeKindInfo>& node_catalog();
const NodeKindInfo* find_kind(const std::string& kind);
nlohmann::json catalog_to_json();

// Document errors. `details` carries one entry per problem with node ids
// where they apply; what() is the first one prefixed by the source path.
class PipelineError : public SpecError {
 public:
  struct Detail {
    std::string node;
    std::string message;
  };
  PipelineError(std::string source, std::vector<Detail> details);
  const std::vector<Detail>& details() const { return details_; }
  const std::string& source() const { return source_; }
  nlohmann::json to_json() const;

 private:
  std::string source_;
  std::vector<Detail> details_;
};

struct NodeDoc {
  std::string id;
  std::string kind;
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const NodeDoc&) const = default;
};

struct EdgeDoc {
  std::string from;
  std::string from_port;
  std::string to;
  std::string to_port;

  bool operator==(const EdgeDoc&) const = default;
};

struct PipelineDoc {
  int version = 1;
  std::vector<NodeDoc> nodes;
  std::vector<EdgeDoc> edges;
  std::uint64_t seed = 0;
  nlohmann::json ui;  // layout extension; kept verbatim, excluded from the hash
  std::string source = "<memory>";

  const NodeDoc* node(const std::string& id) const;
  NodeDoc* node(const std::string& id);
  bool operator==(const PipelineDoc& o) const {
    return version == o.version && nodes == o.nodes && edges == o.edges && seed == o.seed && ui == o.ui;
  }
};

PipelineDoc parse_pipeline(const std::string& text, const std::string& source = "<memory>");
PipelineDoc pipeline_from_json(const nlohmann::json& j, const std::string& source = "<memory>");
PipelineDoc load_pipeline(const std::string& path);

nlohmann::json pipeline_to_json(const PipelineDoc& doc, bool include_ui = true);
/// Sorted keys, 2-space indent, LF line ends, trailing newline.
std::string save_pipeline(const PipelineDoc& doc);
/// Hex SHA-256 of the canonical text without the ui block.
std::string pipeline_hash(const PipelineDoc& doc);

/// Checks one value against a parameter declaration; returns an error message or empty.
std::string check_param(const ParamDecl& decl, const nlohmann::json& value);
/// Declared defaults merged with the document's params.
nlohmann::json resolved_params(const NodeKindInfo& info, const nlohmann::json& params);

struct Connection {
  std::size_t node = 0;
  std::size_t port = 0;
};

struct GraphNode {
  NodeDoc doc;
  const NodeKindInfo* info = nullptr;
  nlohmann::json params;                              // with defaults
  std::vector<Connection> inputs;                     // per input port
  std::vector<std::vector<Connection>> outputs;       // per output port
};

struct FlowGraph {
  PipelineDoc doc;
  std::vector<GraphNode> nodes;  // document order
  std::vector<std::size_t> order;
  std::vector<std::pair<std::string, std::string>> tunables;  // (node id, param)

  std::optional<std::size_t> index_of(const std::string& id) const;
};

FlowGraph validate_graph(const PipelineDoc& doc);

std::string sha256_hex(std::string_view bytes);

}  // namespace noetic::flow
