#include "noetic/gateway/service.hpp"

#include "noetic/io/synth.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

namespace noetic::gateway {

using json = nlohmann::json;

std::string to_string(SessionState s) {
  switch (s) {
    case SessionState::created: return "created";
    case SessionState::running: return "running";
    case SessionState::stopped: return "stopped";
  }
  return "?";
}

json HttpError::body() const {
  if (!body_.is_null()) return body_;
  return {{"error", what()}};
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw HttpError(400, what + ": unknown key '" + k + "'");
  }
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json node_error_body(const flow::NodeError& e) {
  return {{"error", e.what()}, {"details", json::array({{{"node", e.node()}, {"message", e.what()}}})}};
}

}  // namespace

SourceSpec SourceSpec::from_json(const json& j) {
  if (!j.is_object()) throw HttpError(400, "source must be an object");
  check_keys(j, {"kind", "path", "fs", "spec", "host", "port", "speed", "chunk"}, "source");
  SourceSpec s;
  try {
    s.kind = j.value("kind", std::string("pipeline"));
    s.path = j.value("path", std::string());
    s.fs = j.value("fs", 0.0);
    s.synth = j.value("spec", json::object());
    s.host = j.value("host", std::string("127.0.0.1"));
    s.port = j.value("port", 0);
    s.speed = j.value("speed", 0.0);
    s.chunk = j.value("chunk", std::size_t{0});
  } catch (const json::exception& e) {
    throw HttpError(400, std::string("source: ") + e.what());
  }
  if (s.kind != "pipeline" && s.kind != "file" && s.kind != "synth" && s.kind != "tcp")
    throw HttpError(400, "source kind must be pipeline, file, synth or tcp");
  if (s.kind == "file" && s.path.empty()) throw HttpError(400, "file source needs a path");
  if (s.kind == "tcp" && (s.port <= 0 || s.port > 65535)) throw HttpError(400, "tcp source needs a port");
  if (!(s.speed >= 0.0)) throw HttpError(400, "speed must be >= 0");
  return s;
}

json SourceSpec::to_json() const {
  json j{{"kind", kind}};
  if (kind == "file") {
    j["path"] = path;
    if (fs > 0.0) j["fs"] = fs;
  }
  if (kind == "synth") j["spec"] = synth;
  if (kind == "tcp") {
    j["host"] = host;
    j["port"] = port;
  }
  if (kind != "tcp") {
    j["speed"] = speed;
    if (chunk > 0) j["chunk"] = chunk;
  }
  return j;
}

LiveSession::LiveSession(std::string id, std::string pipeline_id, const flow::FlowGraph& graph, SourceSpec source,
                         flow::RunOptions options)
    : id_(std::move(id)), pipeline_id_(std::move(pipeline_id)), source_(std::move(source)) {
  options.session_id = id_;
  session_ = flow::start_online(graph, std::move(options));
  pipeline_hash_ = flow::pipeline_hash(graph.doc);
}

LiveSession::~LiveSession() { abort(); }

SessionState LiveSession::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

void LiveSession::start() {
  std::lock_guard stop_lock(stop_mu_);
  {
    std::lock_guard lock(mu_);
    if (state_ != SessionState::created)
      throw HttpError(409, "session '" + id_ + "' is " + to_string(state_) + "; only a created session can start");
  }
  const auto& src = session_->source();
  const auto& node = session_->graph().nodes[*session_->graph().index_of(src.context().id)];
  std::vector<io::WireFrame> frames;
  try {
    auto from = [&](const io::Recording& rec) {
      return io::recording_to_frames(rec, source_.chunk > 0 ? source_.chunk : src.chunk());
    };
    if (source_.kind == "pipeline" && node.doc.kind == "source.stream") {
      tcp_ = std::make_unique<TcpFrameSource>(node.params.at("host").get<std::string>(),
                                              node.params.at("port").get<int>());
    } else if (source_.kind == "pipeline") {
      frames = from(src.load());
    } else if (source_.kind == "file") {
      const bool csv = source_.fs > 0.0 || (source_.path.size() > 4 && source_.path.substr(source_.path.size() - 4) == ".csv");
      frames = from(csv ? io::read_csv(source_.path, source_.fs) : io::read_recording(source_.path));
    } else if (source_.kind == "synth") {
      frames = from(io::synth_recording(io::synth_spec_from_json(source_.synth)));
    } else {
      tcp_ = std::make_unique<TcpFrameSource>(source_.host, source_.port);
    }
  } catch (const HttpError&) {
    throw;
  } catch (const std::exception& e) {
    throw HttpError(422, std::string("cannot bind source: ") + e.what());
  }
  {
    std::lock_guard lock(mu_);
    state_ = SessionState::running;
    started_at_ = utc_now();
  }
  worker_ = std::thread([this] { work(); });
  if (tcp_)
    feeder_ = std::thread([this] { read_tcp(); });
  else
    feeder_ = std::thread([this, f = std::move(frames), speed = source_.speed]() mutable { feed(std::move(f), speed); });
}

bool LiveSession::push_frame(io::WireFrame f) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return stop_ || frames_.size() < kFrameQueue; });
  if (stop_) return false;
  frames_.push_back(std::move(f));
  cv_.notify_all();
  return true;
}

void LiveSession::feed(std::vector<io::WireFrame> frames, double speed) {
  const auto due = frame_schedule(frames);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (speed > 0.0) {
      const auto at = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(due[i] / speed));
      std::unique_lock lock(mu_);
      if (cv_.wait_until(lock, at, [&] { return stop_; })) break;
    }
    if (!push_frame(std::move(frames[i]))) break;
  }
  std::lock_guard lock(mu_);
  feed_done_ = true;
  cv_.notify_all();
}

void LiveSession::read_tcp() {
  try {
    while (auto f = tcp_->next())
      if (!push_frame(std::move(*f))) break;
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    source_error_ = e.what();
  }
  tcp_->close();
  std::lock_guard lock(mu_);
  feed_done_ = true;
  cv_.notify_all();
}

void LiveSession::work() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [&] { return stop_ || !commands_.empty() || !frames_.empty(); });
    while (!commands_.empty()) {
      auto cmd = std::move(commands_.front());
      commands_.pop_front();
      lock.unlock();
      try {
        cmd.done.set_value(session_->update_param(cmd.node, cmd.param, cmd.value));
      } catch (...) {
        cmd.done.set_exception(std::current_exception());
      }
      lock.lock();
    }
    if (stop_) break;
    if (frames_.empty()) continue;
    auto frame = std::move(frames_.front());
    frames_.pop_front();
    cv_.notify_all();
    lock.unlock();
    session_->on_frame(frame);
    frames_in_ = session_->frames_in();
    ended_ = session_->ended();
    lock.lock();
  }
  for (auto& cmd : commands_)
    cmd.done.set_exception(std::make_exception_ptr(HttpError(409, "session '" + id_ + "' stopped")));
  commands_.clear();
  lock.unlock();
  auto r = session_->stop();
  lock.lock();
  result_ = std::move(r);
}

std::uint64_t LiveSession::update_param(const std::string& node, const std::string& param, const json& value) {
  std::future<std::uint64_t> done;
  {
    std::lock_guard lock(mu_);
    if (state_ != SessionState::running)
      throw HttpError(409, "session '" + id_ + "' is " + to_string(state_) + "; parameters change only while running");
    Command cmd{node, param, value, {}};
    done = cmd.done.get_future();
    commands_.push_back(std::move(cmd));
  }
  cv_.notify_all();
  return done.get();
}

void LiveSession::halt() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  if (tcp_) tcp_->close();
  if (feeder_.joinable()) feeder_.join();
  if (worker_.joinable()) worker_.join();
}

flow::RunResult LiveSession::stop() {
  std::lock_guard stop_lock(stop_mu_);
  {
    std::lock_guard lock(mu_);
    if (state_ != SessionState::running)
      throw HttpError(409, "session '" + id_ + "' is " + to_string(state_) + "; only a running session can stop");
  }
  halt();
  std::lock_guard lock(mu_);
  state_ = SessionState::stopped;
  return *result_;
}

void LiveSession::abort() {
  std::lock_guard stop_lock(stop_mu_);
  SessionState s;
  {
    std::lock_guard lock(mu_);
    s = state_;
  }
  if (s == SessionState::running) halt();
  if (s == SessionState::created) result_ = session_->stop();
  std::lock_guard lock(mu_);
  state_ = SessionState::stopped;
}

json LiveSession::descriptor() const {
  std::lock_guard lock(mu_);
  json d{{"id", id_},
         {"pipeline", pipeline_id_},
         {"pipeline_hash", pipeline_hash_},
         {"source", source_.to_json()},
         {"state", to_string(state_)},
         {"started_at", started_at_.empty() ? json(nullptr) : json(started_at_)},
         {"frames_in", frames_in_.load()},
         {"ended", ended_.load()}};
  if (source_error_) d["source_error"] = *source_error_;
  return d;
}

std::vector<std::string> split_path(const std::string& target) {
  const auto path = target.substr(0, target.find('?'));
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/'))
    if (!part.empty()) parts.push_back(part);
  return parts;
}

std::optional<std::string> query_param(const std::string& target, const std::string& name) {
  const auto q = target.find('?');
  if (q == std::string::npos) return std::nullopt;
  std::stringstream ss(target.substr(q + 1));
  std::string kv;
  while (std::getline(ss, kv, '&')) {
    const auto eq = kv.find('=');
    if (kv.substr(0, eq) == name) return eq == std::string::npos ? "" : kv.substr(eq + 1);
  }
  return std::nullopt;
}

Service::~Service() { shutdown(); }

void Service::shutdown() {
  std::map<std::string, std::shared_ptr<LiveSession>> all;
  {
    std::lock_guard lock(mu_);
    all = sessions_;
  }
  for (auto& [id, s] : all) s->abort();
}

std::shared_ptr<LiveSession> Service::session(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Response Service::handle(const std::string& method, const std::string& target, const std::string& body) {
  try {
    return route(method, split_path(target), body);
  } catch (const HttpError& e) {
    return {e.status(), e.body()};
  } catch (const flow::PipelineError& e) {
    return {422, e.to_json()};
  } catch (const flow::NodeError& e) {
    return {422, node_error_body(e)};
  } catch (const Error& e) {
    return {422, {{"error", e.what()}}};
  } catch (const std::exception& e) {
    return {500, {{"error", std::string("internal error: ") + e.what()}}};
  }
}

namespace {

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw HttpError(400, std::string("request body is not JSON: ") + e.what());
  }
}

[[noreturn]] void method_not_allowed(const std::string& method) {
  throw HttpError(405, "method " + method + " not allowed here");
}

}  // namespace

Response Service::route(const std::string& method, const std::vector<std::string>& p, const std::string& body) {
  const auto n = p.size();
  if (n == 1 && p[0] == "nodes") {
    if (method != "GET") method_not_allowed(method);
    return {200, flow::catalog_to_json()};
  }
  if (n >= 1 && p[0] == "pipelines") {
    if (n == 1) {
      if (method != "GET") method_not_allowed(method);
      return {200, store_.ids()};
    }
    if (n != 2) throw HttpError(404, "no such route");
    if (!PipelineStore::valid_id(p[1])) throw HttpError(400, "invalid pipeline id '" + p[1] + "'");
    if (method == "GET") {
      auto s = store_.get(p[1]);
      if (!s) throw HttpError(404, "no pipeline '" + p[1] + "'");
      return {200, {{"id", s->id}, {"hash", s->hash}, {"doc", flow::pipeline_to_json(s->doc, true)}}};
    }
    if (method == "PUT") {
      auto s = store_.put(p[1], body);
      return {200, {{"id", s.id}, {"hash", s.hash}, {"changed", s.changed}}};
    }
    method_not_allowed(method);
  }
  if (n >= 1 && p[0] == "sessions") {
    if (n == 1) {
      if (method == "POST") return create_session(parse_body(body));
      if (method != "GET") method_not_allowed(method);
      json all = json::array();
      std::lock_guard lock(mu_);
      for (const auto& [id, s] : sessions_) all.push_back(s->descriptor());
      return {200, all};
    }
    auto s = session(p[1]);
    if (!s) throw HttpError(404, "no session '" + p[1] + "'");
    if (n == 2) {
      if (method != "GET") method_not_allowed(method);
      return {200, s->descriptor()};
    }
    if (n != 3) throw HttpError(404, "no such route");
    if (p[2] == "frames") throw HttpError(426, "plot frames are served over WebSocket");
    if (method != "POST") method_not_allowed(method);
    if (p[2] == "start") {
      s->start();
      return {200, s->descriptor()};
    }
    if (p[2] == "stop") {
      const auto r = s->stop();
      auto j = s->descriptor();
      j["result"] = r.to_json();
      return {200, j};
    }
    if (p[2] == "params") {
      const auto req = parse_body(body);
      check_keys(req, {"node", "param", "value"}, "params");
      if (!req.contains("node") || !req["node"].is_string() || !req.contains("param") || !req["param"].is_string() ||
          !req.contains("value"))
        throw HttpError(400, "params needs string 'node', string 'param' and 'value'");
      const auto node = req["node"].get<std::string>();
      const auto param = req["param"].get<std::string>();
      const auto applied = s->update_param(node, param, req["value"]);
      return {200, {{"node", node}, {"param", param}, {"value", req["value"]}, {"applied_frame", applied}}};
    }
    throw HttpError(404, "no such route");
  }
  throw HttpError(404, "no such route");
}

Response Service::create_session(const json& req) {
  if (!req.is_object()) throw HttpError(400, "session request must be an object");
  check_keys(req, {"pipeline", "source"}, "session request");
  if (!req.contains("pipeline") || !req["pipeline"].is_string()) throw HttpError(400, "session request needs 'pipeline'");
  const auto pid = req["pipeline"].get<std::string>();
  const auto source = SourceSpec::from_json(req.value("source", json::object()));
  const auto stored = store_.get(pid);
  if (!stored) throw HttpError(404, "no pipeline '" + pid + "'");
  const auto graph = flow::validate_graph(stored->doc);
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_id_++);
  }
  flow::RunOptions opt;
  opt.out_dir = store_.root() / "sessions" / id;
  auto live = std::make_shared<LiveSession>(id, pid, graph, source, opt);
  std::lock_guard lock(mu_);
  sessions_[id] = live;
  return {201, live->descriptor()};
}

}  // namespace noetic::gateway
