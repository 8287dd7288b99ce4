#pragma once

#include "noetic/flow/engine.hpp"
#include "noetic/gateway/store.hpp"
#include "noetic/gateway/tcp.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace noetic::gateway {

enum class SessionState { created, running, stopped };
std::string to_string(SessionState s);

// Where a live session takes its frames from. kind "pipeline" replays the
// data of the pipeline's own source node.
struct SourceSpec {
  std::string kind = "pipeline";  // pipeline | file | synth | tcp
  std::string path;               // file
  double fs = 0.0;                // file, CSV only
  nlohmann::json synth;           // synth
  std::string host = "127.0.0.1";
  int port = 0;                   // tcp
  double speed = 0.0;             // replay pacing, x real time; 0 = unpaced
  std::size_t chunk = 0;          // replay ticks per frame; 0 = the source node's chunk

  static SourceSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class HttpError : public Error {
 public:
  HttpError(int status, const std::string& message, nlohmann::json body = nullptr)
      : Error(message), status_(status), body_(std::move(body)) {}
  int status() const { return status_; }
  nlohmann::json body() const;

 private:
  int status_;
  nlohmann::json body_;
};

// One streaming session: a worker thread owns the engine session and takes
// frames and parameter updates from bounded queues.
class LiveSession {
 public:
  LiveSession(std::string id, std::string pipeline_id, const flow::FlowGraph& graph, SourceSpec source,
              flow::RunOptions options);
  ~LiveSession();

  const std::string& id() const { return id_; }
  SessionState state() const;

  /// Binds the source and starts streaming; 409 unless created, 422 if the source fails.
  void start();
  /// Queued to the worker; returns the index of the frame the update applies before.
  std::uint64_t update_param(const std::string& node, const std::string& param, const nlohmann::json& value);
  /// Returns the run result; 409 unless running.
  flow::RunResult stop();
  /// Stops whatever the state; used on shutdown.
  void abort();

  flow::PlotBus& bus() { return session_->bus(); }
  nlohmann::json descriptor() const;

 private:
  struct Command {
    std::string node, param;
    nlohmann::json value;
    std::promise<std::uint64_t> done;
  };

  void feed(std::vector<io::WireFrame> frames, double speed);
  void read_tcp();
  void work();
  bool push_frame(io::WireFrame f);
  void halt();

  std::string id_, pipeline_id_, pipeline_hash_;
  SourceSpec source_;
  std::unique_ptr<flow::Session> session_;
  std::unique_ptr<TcpFrameSource> tcp_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<io::WireFrame> frames_;
  std::deque<Command> commands_;
  bool feed_done_ = false;
  bool stop_ = false;
  SessionState state_ = SessionState::created;
  std::string started_at_;
  std::optional<std::string> source_error_;
  std::optional<flow::RunResult> result_;
  std::atomic<std::uint64_t> frames_in_{0};
  std::atomic<bool> ended_{false};

  std::thread feeder_, worker_;
  std::mutex stop_mu_;

  static constexpr std::size_t kFrameQueue = 256;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  explicit Service(PipelineStore& store) : store_(store) {}
  ~Service();

  Response handle(const std::string& method, const std::string& target, const std::string& body);
  std::shared_ptr<LiveSession> session(const std::string& id) const;
  void shutdown();

 private:
  Response route(const std::string& method, const std::vector<std::string>& parts, const std::string& body);
  Response create_session(const nlohmann::json& req);

  PipelineStore& store_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Path segments of a request target, query string removed.
std::vector<std::string> split_path(const std::string& target);
/// Value of one query parameter, if present.
std::optional<std::string> query_param(const std::string& target, const std::string& name);

}  // namespace noetic::gateway
