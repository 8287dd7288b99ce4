#pragma once

#include "noetic/flow/node.hpp"
#include "noetic/flow/pipeline.hpp"
#include "noetic/flow/plot_bus.hpp"
#include "noetic/io/recording.hpp"
#include "noetic/io/wire.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace noetic::flow {

class NodeError : public Error {
 public:
  NodeError(std::string node, const std::string& cause)
      : Error("node '" + node + "': " + cause), node_(std::move(node)) {}
  const std::string& node() const { return node_; }

 private:
  std::string node_;
};

struct NodeStats {
  std::string id;
  std::string kind;
  std::size_t calls = 0;
  double p50_us = 0.0, p95_us = 0.0, max_us = 0.0;
};

struct Summary {
  std::size_t frames_in = 0;
  std::size_t frames_consumed = 0;
  std::size_t malformed = 0;
  std::vector<std::string> malformed_reasons;  // first few
  std::size_t data_frames = 0;
  std::size_t samples = 0;
  double frame_p50_us = 0.0, frame_p95_us = 0.0, frame_max_us = 0.0;  // data frames only
  double wall_s = 0.0;
  std::vector<NodeStats> nodes;
  std::uint64_t plot_frames = 0;
  std::uint64_t plot_frames_dropped = 0;
  std::size_t decisions = 0;

  nlohmann::json to_json() const;
};

struct RunOptions {
  std::optional<io::Recording> recording;  // replaces the single source's own data
  std::filesystem::path out_dir;           // base for relative sink paths
  bool write_files = true;
  std::string session_id = "offline";
  std::size_t keep_plots = 256;  // most recent plot frames kept in the result
};

struct RunResult {
  std::map<std::string, nlohmann::json> outputs;  // node id -> result
  std::map<std::string, std::string> files;       // node id -> file bytes
  std::vector<DecisionRow> decisions;
  std::vector<PlotFrame> plots;
  Summary summary;

  nlohmann::json to_json() const;
};

RunResult run_offline(const FlowGraph& graph, const RunOptions& options = {});

class Executor;

// Streaming execution. Not thread-safe: one owner feeds frames, applies
// parameter updates and stops; observers read the plot bus.
class Session {
 public:
  Session(const FlowGraph& graph, RunOptions options);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  struct FrameResult {
    std::vector<PlotFrame> plots;
    std::vector<DecisionRow> decisions;
    bool malformed = false;
  };

  FrameResult on_frame(const io::WireFrame& frame);
  /// One encoded frame; undecodable bytes count as malformed.
  FrameResult on_bytes(std::string_view encoded);

  /// Applies a tunable parameter before the next frame; returns that frame's index.
  std::uint64_t update_param(const std::string& node, const std::string& name, const nlohmann::json& value);

  RunResult stop();

  bool ended() const { return ended_; }
  bool stopped() const { return stopped_; }
  std::uint64_t frames_in() const { return summary_.frames_in; }
  PlotBus& bus();
  const FlowGraph& graph() const;
  /// The source node, for callers that replay its data as frames.
  const SourceNode& source() const;

 private:
  FrameResult malformed(const std::string& why);
  void end_stream(FrameResult& r);

  std::unique_ptr<Executor> exec_;
  std::size_t source_ = 0;
  std::shared_ptr<StreamInfo> info_;
  std::vector<Marker> pending_markers_;
  std::size_t sample_counter_ = 0;
  bool ended_ = false, stopped_ = false;
  Summary summary_;
  std::vector<double> frame_us_;
  std::optional<RunResult> final_;
};

std::unique_ptr<Session> start_online(const FlowGraph& graph, RunOptions options = {});

/// Frames a live producer would send for the graph's single source.
std::vector<io::WireFrame> source_frames(const FlowGraph& graph, const std::optional<io::Recording>& recording = std::nullopt);

}  // namespace noetic::flow
