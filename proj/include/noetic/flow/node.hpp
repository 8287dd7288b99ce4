#pragma once

#include "noetic/flow/packets.hpp"
#include "noetic/flow/pipeline.hpp"
#include "noetic/io/recording.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace noetic::flow {

enum class Mode { offline, online };

struct NodeContext {
  std::string id;
  std::string kind;
  nlohmann::json params;  // defaults applied
  std::uint64_t seed = 0;  // derived from the document seed and the node id
  Mode mode = Mode::offline;
};

class Outbox {
 public:
  void emit(std::size_t port, Packet p) { packets.emplace_back(port, std::move(p)); }
  void plot(PlotFrame f) { plots.push_back(std::move(f)); }
  void decide(DecisionRow d) { decisions.push_back(std::move(d)); }

  std::vector<std::pair<std::size_t, Packet>> packets;
  std::vector<PlotFrame> plots;
  std::vector<DecisionRow> decisions;
};

class Node {
 public:
  explicit Node(NodeContext ctx) : ctx_(std::move(ctx)) {}
  virtual ~Node() = default;

  virtual void on_input(std::size_t port, const Packet& p, Outbox& out) = 0;
  /// Called once after the last input, in topological order.
  virtual void on_end(Outbox&) {}
  /// Applies a tunable parameter between frames. The value is already schema-checked.
  virtual void set_param(const std::string& name, const nlohmann::json& value);
  /// Sink result; null for nodes without one.
  virtual nlohmann::json result() const { return nullptr; }
  /// Bytes to write when the node has a "path" param.
  virtual std::optional<std::string> file_bytes() const { return std::nullopt; }

  const NodeContext& context() const { return ctx_; }
  const std::string& id() const { return ctx_.id; }

 protected:
  [[noreturn]] void fail(const std::string& message) const;
  const nlohmann::json& param(const std::string& name) const { return ctx_.params.at(name); }

  NodeContext ctx_;
};

// Sources forward chunks the engine hands them. Offline runs ask them for a
// whole recording; online sessions feed frames instead.
class SourceNode : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override { out.emit(0, p); }
  virtual io::Recording load() const = 0;
  std::size_t chunk() const { return param("chunk").get<std::size_t>(); }
};

using NodeFactory = std::function<std::unique_ptr<Node>(NodeContext)>;

struct NodeEntry {
  NodeKindInfo info;
  NodeFactory factory;
};

std::unique_ptr<Node> create_node(const NodeContext& ctx);

// Per-family registration used to build the catalog.
void register_source_nodes(std::vector<NodeEntry>& out);
void register_preprocess_nodes(std::vector<NodeEntry>& out);
void register_feature_nodes(std::vector<NodeEntry>& out);
void register_classify_nodes(std::vector<NodeEntry>& out);
void register_sink_nodes(std::vector<NodeEntry>& out);

// Shorthand for declaring catalog entries.
ParamDecl number_param(std::string name, double def, std::string help, std::optional<double> min = std::nullopt,
                       std::optional<double> max = std::nullopt, bool tunable = false);
ParamDecl integer_param(std::string name, long long def, std::string help, std::optional<double> min = std::nullopt,
                        std::optional<double> max = std::nullopt, bool tunable = false);
ParamDecl choice_param(std::string name, std::string def, std::vector<std::string> choices, std::string help,
                       bool tunable = false);
ParamDecl param(std::string name, ParamType type, nlohmann::json def, std::string help, bool tunable = false);

/// Raw chunk from a whole block, with every marker attached.
std::shared_ptr<const RawChunk> whole_block_chunk(const SignalBlock& block, const std::vector<Marker>& markers,
                                                  const std::string& subject_tag = {});

/// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view s);

}  // namespace noetic::flow
