#include "noetic/flow/engine.hpp"

#include "noetic/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>

namespace noetic::flow {

namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); }

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::min(v.size() - 1, rank == 0 ? 0 : rank - 1)];
}

std::uint64_t node_seed(std::uint64_t doc_seed, const std::string& id) {
  Rng base(doc_seed);
  return base.fork(stable_hash(id)).next();
}

}  // namespace

class Executor {
 public:
  Executor(const FlowGraph& g, Mode mode, RunOptions opt) : graph(g), options(std::move(opt)) {
    for (const auto& n : graph.nodes) {
      NodeContext ctx{n.doc.id, n.doc.kind, n.params, node_seed(graph.doc.seed, n.doc.id), mode};
      if (mode == Mode::online && !n.info->online)
        throw NodeError(n.doc.id, n.doc.kind + " cannot run in a streaming session");
      try {
        nodes.push_back(create_node(ctx));
      } catch (const NodeError&) {
        throw;
      } catch (const std::exception& e) {
        throw NodeError(n.doc.id, e.what());
      }
    }
    times_us.resize(nodes.size());
  }

  void deliver(std::size_t node, std::size_t port, const Packet& p, Session::FrameResult* r) {
    Outbox out;
    const auto start = Clock::now();
    try {
      nodes[node]->on_input(port, p, out);
    } catch (const NodeError&) {
      throw;
    } catch (const std::exception& e) {
      throw NodeError(graph.nodes[node].doc.id, e.what());
    }
    times_us[node].push_back(micros(Clock::now() - start));
    route(node, out, r);
  }

  void end_all(Session::FrameResult* r) {
    if (ended) return;
    ended = true;
    for (auto i : graph.order) {
      Outbox out;
      try {
        nodes[i]->on_end(out);
      } catch (const NodeError&) {
        throw;
      } catch (const std::exception& e) {
        throw NodeError(graph.nodes[i].doc.id, e.what());
      }
      route(i, out, r);
    }
  }

  RunResult collect(Summary s) {
    RunResult res;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& id = graph.nodes[i].doc.id;
      try {
        if (auto j = nodes[i]->result(); !j.is_null()) res.outputs[id] = j;
        if (auto bytes = nodes[i]->file_bytes()) res.files[id] = std::move(*bytes);
      } catch (const std::exception& e) {
        throw NodeError(id, e.what());
      }
    }
    if (options.write_files)
      for (const auto& [id, bytes] : res.files) {
        const auto& params = graph.nodes[*graph.index_of(id)].params;
        if (!params.contains("path")) continue;
        const auto path = params["path"].get<std::string>();
        if (path.empty()) continue;
        std::filesystem::path target(path);
        if (target.is_relative() && !options.out_dir.empty()) target = options.out_dir / target;
        if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
        io::write_file_atomic(target, bytes);
      }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      NodeStats st;
      st.id = graph.nodes[i].doc.id;
      st.kind = graph.nodes[i].doc.kind;
      st.calls = times_us[i].size();
      st.p50_us = percentile(times_us[i], 0.5);
      st.p95_us = percentile(times_us[i], 0.95);
      st.max_us = times_us[i].empty() ? 0.0 : *std::max_element(times_us[i].begin(), times_us[i].end());
      s.nodes.push_back(st);
    }
    s.plot_frames = bus.published();
    s.plot_frames_dropped = bus.dropped();
    s.decisions = decisions.size();
    res.decisions = decisions;
    res.plots.assign(recent.begin(), recent.end());
    res.summary = std::move(s);
    return res;
  }

  FlowGraph graph;
  RunOptions options;
  std::vector<std::unique_ptr<Node>> nodes;
  std::vector<std::vector<double>> times_us;
  PlotBus bus;
  std::deque<PlotFrame> recent;
  std::vector<DecisionRow> decisions;
  bool ended = false;

 private:
  void route(std::size_t node, Outbox& out, Session::FrameResult* r) {
    for (auto& f : out.plots) {
      f.session = options.session_id;
      bus.publish(f);
      if (options.keep_plots > 0) {
        recent.push_back(f);
        if (recent.size() > options.keep_plots) recent.pop_front();
      }
      if (r) r->plots.push_back(std::move(f));
    }
    for (auto& d : out.decisions) {
      decisions.push_back(d);
      if (r) r->decisions.push_back(std::move(d));
    }
    for (const auto& [port, packet] : out.packets)
      for (const auto& c : graph.nodes[node].outputs[port]) deliver(c.node, c.port, packet, r);
  }
};

nlohmann::json Summary::to_json() const {
  auto nj = nlohmann::json::array();
  for (const auto& n : nodes)
    nj.push_back({{"id", n.id}, {"kind", n.kind}, {"calls", n.calls}, {"p50_us", n.p50_us}, {"p95_us", n.p95_us},
                  {"max_us", n.max_us}});
  return {{"frames_in", frames_in},
          {"frames_consumed", frames_consumed},
          {"malformed", malformed},
          {"malformed_reasons", malformed_reasons},
          {"data_frames", data_frames},
          {"samples", samples},
          {"frame_p50_us", frame_p50_us},
          {"frame_p95_us", frame_p95_us},
          {"frame_max_us", frame_max_us},
          {"wall_s", wall_s},
          {"nodes", nj},
          {"plot_frames", plot_frames},
          {"plot_frames_dropped", plot_frames_dropped},
          {"decisions", decisions}};
}

nlohmann::json RunResult::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [id, j] : outputs) out[id] = j;
  return {{"outputs", out}, {"summary", summary.to_json()}};
}

namespace {

std::vector<std::size_t> sources_of(const FlowGraph& g) {
  std::vector<std::size_t> s;
  for (auto i : g.order)
    if (g.nodes[i].info->role == NodeRole::source) s.push_back(i);
  return s;
}

void require_source_and_sink(const FlowGraph& g) {
  bool sink = false;
  for (const auto& n : g.nodes) sink |= n.info->role == NodeRole::sink;
  if (sources_of(g).empty()) throw PipelineError(g.doc.source, {{"", "pipeline has no source node"}});
  if (!sink) throw PipelineError(g.doc.source, {{"", "pipeline has no sink node"}});
}

// Disk and wire carry float32, so both execution paths see float32 samples.
std::shared_ptr<const RawChunk> float_chunk(const io::Recording& rec) {
  SignalBlock b = rec.block;
  b.samples = b.samples.cast<float>().cast<double>();
  return whole_block_chunk(b, rec.markers, rec.subject_tag);
}

}  // namespace

RunResult run_offline(const FlowGraph& graph, const RunOptions& options) {
  require_source_and_sink(graph);
  const auto sources = sources_of(graph);
  if (options.recording && sources.size() != 1)
    throw PipelineError(graph.doc.source, {{"", "a supplied recording needs exactly one source node"}});
  const auto start = Clock::now();
  Executor ex(graph, Mode::offline, options);
  Summary s;
  for (auto i : sources) {
    const auto* src = dynamic_cast<const SourceNode*>(ex.nodes[i].get());
    io::Recording rec;
    try {
      rec = options.recording ? *options.recording : src->load();
    } catch (const std::exception& e) {
      throw NodeError(graph.nodes[i].doc.id, e.what());
    }
    const auto chunk = float_chunk(rec);
    ++s.frames_in;
    ++s.frames_consumed;
    ++s.data_frames;
    s.samples += rec.block.sample_count();
    ex.deliver(i, 0, chunk, nullptr);
  }
  ex.end_all(nullptr);
  s.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  auto res = ex.collect(std::move(s));
  ex.bus.close();
  return res;
}

Session::Session(const FlowGraph& graph, RunOptions options) {
  require_source_and_sink(graph);
  const auto sources = sources_of(graph);
  if (sources.size() != 1)
    throw PipelineError(graph.doc.source, {{"", "a streaming session needs exactly one source node"}});
  source_ = sources.front();
  exec_ = std::make_unique<Executor>(graph, Mode::online, std::move(options));
}

Session::~Session() = default;

PlotBus& Session::bus() { return exec_->bus; }
const FlowGraph& Session::graph() const { return exec_->graph; }
const SourceNode& Session::source() const { return dynamic_cast<const SourceNode&>(*exec_->nodes[source_]); }

Session::FrameResult Session::malformed(const std::string& why) {
  ++summary_.malformed;
  if (summary_.malformed_reasons.size() < 20)
    summary_.malformed_reasons.push_back("frame " + std::to_string(summary_.frames_in - 1) + ": " + why);
  FrameResult r;
  r.malformed = true;
  return r;
}

void Session::end_stream(FrameResult& r) {
  if (!pending_markers_.empty() && info_) {
    auto chunk = std::make_shared<RawChunk>();
    chunk->info = info_;
    chunk->samples.resize(static_cast<Eigen::Index>(info_->channels.size()), 0);
    chunk->first = sample_counter_;
    chunk->markers = std::move(pending_markers_);
    pending_markers_.clear();
    exec_->deliver(source_, 0, chunk, &r);
  }
  exec_->end_all(&r);
  ended_ = true;
}

Session::FrameResult Session::on_frame(const io::WireFrame& frame) {
  if (stopped_) throw Error("session already stopped");
  ++summary_.frames_in;
  if (ended_) return malformed("frame after end of stream");
  FrameResult r;
  if (const auto* h = std::get_if<io::HeaderFrame>(&frame)) {
    if (info_) return malformed("duplicate header");
    try {
      h->header.validate();
    } catch (const std::exception& e) {
      return malformed(std::string("invalid header: ") + e.what());
    }
    auto info = std::make_shared<StreamInfo>();
    info->fs = h->header.fs;
    info->t0 = h->header.start_time;
    info->channels = h->header.channels;
    info->unit = h->header.unit;
    info->subject_tag = h->header.subject_tag;
    info_ = info;
  } else if (const auto* d = std::get_if<io::DataFrame>(&frame)) {
    if (!info_) return malformed("data before header");
    if (d->channels != info_->channels.size())
      return malformed("data frame has " + std::to_string(d->channels) + " channels, header declares " +
                       std::to_string(info_->channels.size()));
    if (d->samples.size() % d->channels != 0) return malformed("sample count is not a multiple of the channel count");
    const auto start = Clock::now();
    auto chunk = std::make_shared<RawChunk>();
    chunk->info = info_;
    const auto ticks = d->ticks();
    chunk->samples.resize(static_cast<Eigen::Index>(d->channels), static_cast<Eigen::Index>(ticks));
    for (std::size_t t = 0; t < ticks; ++t)
      for (std::size_t c = 0; c < d->channels; ++c)
        chunk->samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = d->samples[t * d->channels + c];
    chunk->first = sample_counter_;
    chunk->markers = std::move(pending_markers_);
    pending_markers_.clear();
    sample_counter_ += ticks;
    exec_->deliver(source_, 0, chunk, &r);
    frame_us_.push_back(micros(Clock::now() - start));
    ++summary_.data_frames;
    summary_.samples += ticks;
  } else if (const auto* m = std::get_if<io::MarkerFrame>(&frame)) {
    if (!info_) return malformed("marker before header");
    if (!std::isfinite(m->marker.t)) return malformed("marker time is not finite");
    pending_markers_.push_back(m->marker);
  } else {
    if (!info_) return malformed("end before header");
    end_stream(r);
  }
  ++summary_.frames_consumed;
  return r;
}

Session::FrameResult Session::on_bytes(std::string_view encoded) {
  io::WireFrame f;
  try {
    f = io::decode_frame(encoded);
  } catch (const Error& e) {
    if (stopped_) throw Error("session already stopped");
    ++summary_.frames_in;
    return malformed(std::string("undecodable: ") + e.what());
  }
  return on_frame(f);
}

std::uint64_t Session::update_param(const std::string& node, const std::string& name, const nlohmann::json& value) {
  if (stopped_) throw Error("session already stopped");
  const auto idx = exec_->graph.index_of(node);
  if (!idx) throw Error("no node '" + node + "' in this session");
  auto& gn = exec_->graph.nodes[*idx];
  const auto* decl = gn.info->param(name);
  if (decl == nullptr) throw Error("node '" + node + "' (" + gn.doc.kind + ") has no param '" + name + "'");
  if (!decl->tunable) throw Error("param '" + name + "' of node '" + node + "' is not tunable");
  if (auto e = check_param(*decl, value); !e.empty()) throw Error("node '" + node + "': param '" + name + "': " + e);
  try {
    exec_->nodes[*idx]->set_param(name, value);
  } catch (const std::exception& e) {
    throw Error("node '" + node + "': " + e.what());
  }
  gn.params[name] = value;
  if (auto* d = exec_->graph.doc.node(node)) d->params[name] = value;
  return summary_.frames_in;
}

RunResult Session::stop() {
  if (final_) return *final_;
  if (!ended_) {
    FrameResult ignored;
    end_stream(ignored);
  }
  stopped_ = true;
  Summary s = summary_;
  s.frame_p50_us = percentile(frame_us_, 0.5);
  s.frame_p95_us = percentile(frame_us_, 0.95);
  s.frame_max_us = frame_us_.empty() ? 0.0 : *std::max_element(frame_us_.begin(), frame_us_.end());
  double total = 0.0;
  for (double v : frame_us_) total += v;
  s.wall_s = total * 1e-6;
  final_ = exec_->collect(std::move(s));
  exec_->bus.close();
  return *final_;
}

std::unique_ptr<Session> start_online(const FlowGraph& graph, RunOptions options) {
  if (options.session_id == "offline") options.session_id = "session";
  return std::make_unique<Session>(graph, std::move(options));
}

std::vector<io::WireFrame> source_frames(const FlowGraph& graph, const std::optional<io::Recording>& recording) {
  const auto sources = sources_of(graph);
  if (sources.size() != 1) throw PipelineError(graph.doc.source, {{"", "expected exactly one source node"}});
  const auto& gn = graph.nodes[sources.front()];
  NodeContext ctx{gn.doc.id, gn.doc.kind, gn.params, node_seed(graph.doc.seed, gn.doc.id), Mode::offline};
  auto node = create_node(ctx);
  const auto& src = dynamic_cast<const SourceNode&>(*node);
  try {
    return io::recording_to_frames(recording ? *recording : src.load(), src.chunk());
  } catch (const std::exception& e) {
    throw NodeError(gn.doc.id, e.what());
  }
}

}  // namespace noetic::flow
