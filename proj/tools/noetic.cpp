#include "noetic/chansel.hpp"
#include "noetic/classify/classifier.hpp"
#include "noetic/error.hpp"
#include "noetic/flow/engine.hpp"
#include "noetic/gateway/server.hpp"
#include "noetic/gateway/tcp.hpp"
#include "noetic/io/synth.hpp"
#include "noetic/preprocess/filter.hpp"
#include "noetic/rng.hpp"
#include "noetic/sim.hpp"

#include <CLI11.hpp>
#include <boost/asio/signal_set.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace noetic;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

json read_json_file(const fs::path& path) {
  const auto text = io::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

io::Recording load_recording(const std::string& path, double fs) {
  if (fs > 0.0 || ends_with(path, ".csv")) {
    if (!(fs > 0.0)) throw Error(path + ": CSV input needs --fs");
    return io::read_csv(path, fs);
  }
  return io::read_recording(path);
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

// Epochs around labelled markers, optionally restricted to some labels.
EpochSet labelled_epochs(const io::Recording& rec, const std::vector<std::string>& labels, double pre, double post) {
  std::vector<Marker> keep;
  for (const auto& m : rec.markers) {
    if (!m.class_id) continue;
    if (!labels.empty() && std::find(labels.begin(), labels.end(), m.label) == labels.end()) continue;
    keep.push_back(m);
  }
  auto r = epoch_by_markers(rec.block, keep, pre, post);
  if (r.epochs.empty()) throw Error("no labelled epochs in the recording");
  return std::move(r.epochs);
}

// Band-filtered copies of every channel stacked into one block, so spatial
// covariances also carry spectral contrast.
io::Recording filter_bank(const io::Recording& rec, const std::vector<std::string>& bands) {
  if (bands.empty()) return rec;
  io::Recording out = rec;
  const auto c = rec.block.channel_count();
  out.block.samples.resize(static_cast<Eigen::Index>(c * bands.size()), rec.block.samples.cols());
  out.block.channels.clear();
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto colon = bands[b].find(':');
    if (colon == std::string::npos) throw Error("band '" + bands[b] + "' must look like lo:hi");
    const double lo = std::stod(bands[b].substr(0, colon)), hi = std::stod(bands[b].substr(colon + 1));
    const auto spec = pre::design_butterworth(pre::FilterKind::bandpass, pre::ExplicitDesign{4, {lo, hi}}, rec.block.fs);
    const auto filtered = pre::apply_filter(rec.block, spec, true);
    out.block.samples.middleRows(static_cast<Eigen::Index>(b * c), static_cast<Eigen::Index>(c)) = filtered.samples;
    for (const auto& ch : rec.block.channels)
      out.block.channels.push_back({ch.name + "@" + bands[b], out.block.channels.size(), ch.role});
  }
  return out;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
  double duration = 10.0, fs = 256.0;
  std::size_t channels = 8;
  bool serve = false;
  int port = 0;
  double speed = 1.0;
  std::size_t chunk = 32;
};

int cmd_synth(const SynthArgs& a) {
  io::SynthSpec spec;
  if (!a.spec.empty()) {
    spec = io::synth_spec_from_json(read_json_file(a.spec));
  } else {
    spec.duration_s = a.duration;
    spec.fs = a.fs;
    spec.n_channels = a.channels;
  }
  if (a.seed) spec.seed = *a.seed;
  const auto rec = io::synth_recording(spec);
  if (a.serve) {
    gateway::TcpFrameServer server(a.port);
    std::cerr << "streaming on port " << server.port() << "\n";
    const auto frames = io::recording_to_frames(rec, a.chunk);
    const auto sent = server.serve(frames, a.speed);
    emit({{"frames", sent}, {"samples", rec.block.sample_count()}, {"markers", rec.markers.size()}});
    return 0;
  }
  if (a.out.empty()) throw Error("synth needs --out or --serve");
  const auto bytes = io::encode_recording(rec);
  io::write_file_atomic(a.out, bytes);
  emit({{"path", a.out},
        {"channels", rec.block.channel_count()},
        {"samples", rec.block.sample_count()},
        {"fs", rec.block.fs},
        {"markers", rec.markers.size()},
        {"sha256", flow::sha256_hex(bytes)}});
  return 0;
}

// ---- run -----------------------------------------------------------------

struct RunArgs {
  std::string pipeline, input, out = ".", host = "127.0.0.1";
  double fs = 0.0;
  bool online = false;
  std::size_t chunk = 0;
  int port = 0;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a) {
  auto doc = flow::load_pipeline(a.pipeline);
  if (a.seed) doc.seed = *a.seed;
  const auto graph = flow::validate_graph(doc);
  flow::RunOptions opt;
  opt.out_dir = a.out;
  if (!a.input.empty()) opt.recording = load_recording(a.input, a.fs);

  flow::RunResult result;
  if (a.port > 0) {
    auto session = flow::start_online(graph, opt);
    gateway::TcpFrameSource source(a.host, a.port);
    while (auto f = source.next()) {
      session->on_frame(*f);
      if (session->ended()) break;
    }
    result = session->stop();
  } else if (a.online) {
    auto frames = flow::source_frames(graph, opt.recording);
    if (a.chunk > 0) {
      if (!opt.recording) throw Error("--chunk needs --input");
      frames = io::recording_to_frames(*opt.recording, a.chunk);
    }
    auto session = flow::start_online(graph, opt);
    for (const auto& f : frames) session->on_frame(f);
    result = session->stop();
  } else {
    result = flow::run_offline(graph, opt);
  }

  auto j = result.to_json();
  j["pipeline_hash"] = flow::pipeline_hash(doc);
  j["decisions"] = json::array();
  for (const auto& d : result.decisions) j["decisions"].push_back(flow::to_json(d));
  write_json(fs::path(a.out) / "result.json", j);
  if (!result.plots.empty()) {
    std::string lines;
    for (const auto& p : result.plots) lines += flow::to_json(p).dump() + "\n";
    io::write_file_atomic(fs::path(a.out) / "plots.jsonl", lines);
  }
  emit({{"outputs", j["outputs"]},
        {"decisions", result.decisions.size()},
        {"plot_frames", result.summary.plot_frames},
        {"frames_in", result.summary.frames_in},
        {"malformed", result.summary.malformed},
        {"result", (fs::path(a.out) / "result.json").string()}});
  return 0;
}

// ---- select --------------------------------------------------------------

struct SelectArgs {
  std::string input, method = "mutual_information", out;
  std::vector<std::string> labels, bands;
  double pre = 0.0, post = 1.0, fs = 0.0;
  std::size_t n = 4;
};

int cmd_select(const SelectArgs& a) {
  const auto rec = filter_bank(load_recording(a.input, a.fs), a.bands);
  const auto epochs = labelled_epochs(rec, a.labels, a.pre, a.post);
  const auto labels = epochs.labels();
  const auto scores = chansel::score_channels(epochs, labels, chansel::method_from_string(a.method));
  const auto chosen = chansel::select_top_n(scores, std::min(a.n, epochs.channels.size()));
  const auto report = chansel::report_json(scores, chosen, epochs.channels);
  if (!a.out.empty()) write_json(a.out, report);
  emit(report);
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string input, kind = "rmdm", out;
  std::vector<std::string> labels, bands;
  double pre = 0.0, post = 1.0, fs = 0.0, shrinkage = 0.1;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
  const auto kind = classify::model_kind_from_string(a.kind);
  classify::Hyperparams h;
  h.shrinkage = a.shrinkage;
  h.seed = a.seed;
  classify::TrainingData data;
  std::vector<int> labels;
  if (ends_with(a.input, ".json")) {
    if (kind != classify::ModelKind::nb) throw Error("feature tables train nb only; give a recording for " + a.kind);
    const auto fm = features::feature_matrix_from_json(read_json_file(a.input));
    data.features = fm.values;
    labels = fm.label_vector();
  } else {
    const auto epochs = labelled_epochs(filter_bank(load_recording(a.input, a.fs), a.bands), a.labels, a.pre, a.post);
    labels = epochs.labels();
    if (kind == classify::ModelKind::nb)
      data.features = chansel::channel_scalars(epochs);
    else
      data = classify::covariances_from_epochs(epochs, a.shrinkage);
  }
  const auto cv = classify::cross_validate(kind, data, labels, a.folds, h);
  const auto model = classify::train(kind, data, labels, h);
  if (!a.out.empty()) write_json(a.out, classify::model_to_json(model));
  emit({{"kind", classify::to_string(kind)},
        {"n_train", model.n_train},
        {"classes", model.classes},
        {"cv", {{"folds", a.folds}, {"mean_accuracy", cv.mean_accuracy}, {"mean_mcc", cv.mean_mcc}}}});
  return 0;
}

// ---- sim -----------------------------------------------------------------

struct SimArgs {
  std::string config, trace, out;
  std::size_t obstacles = 10;
  double interval = 4.0, window = 2.0, delay = 0.5;
  std::optional<double> accuracy;
  std::uint64_t seed = 0;
};

std::vector<sim::Decision> read_trace(const std::string& path) {
  const auto text = io::read_file(path);
  std::vector<json> items;
  try {
    const auto j = json::parse(text);
    if (!j.is_array()) throw FormatError(path + ": trace must be a JSON array or JSON lines");
    items.assign(j.begin(), j.end());
  } catch (const json::parse_error&) {
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
      if (!line.empty()) items.push_back(json::parse(line));
  }
  std::vector<sim::Decision> out;
  for (const auto& d : items) out.push_back({d.at("t").get<double>(), d.at("class_id").get<int>()});
  return out;
}

int cmd_sim(const SimArgs& a) {
  sim::SimConfig cfg;
  if (!a.config.empty()) {
    cfg = sim::sim_config_from_json(read_json_file(a.config));
  } else {
    cfg.n_obstacles = a.obstacles;
    cfg.inter_obstacle_s = a.interval;
    cfg.decision_window_s = a.window;
  }
  if (a.config.empty()) cfg.seed = a.seed;
  cfg.validate();
  std::vector<sim::Decision> trace;
  if (!a.trace.empty()) {
    trace = read_trace(a.trace);
  } else if (a.accuracy) {
    // A decoder that is right with the given probability, answering after a fixed delay.
    Rng rng(a.seed ^ 0x5eedULL);
    const auto plan = sim::new_session(cfg);
    for (const auto& o : plan.obstacles) {
      const bool right = rng.uniform() < *a.accuracy;
      trace.push_back({o.announce_t + a.delay, right ? o.class_id : 1 - o.class_id});
    }
  }
  const auto s = sim::replay(cfg, trace);
  const auto sc = sim::score(s);
  if (!a.out.empty()) io::write_file_atomic(a.out, sim::session_log_jsonl(s));
  auto j = sim::to_json(sc);
  j["ignored_decisions"] = s.ignored_decisions;
  emit(j);
  return 0;
}

// ---- serve ---------------------------------------------------------------

int cmd_serve(int port, const std::string& bind, const std::string& data_dir) {
  gateway::PipelineStore store(data_dir.empty() ? gateway::PipelineStore::default_root() : fs::path(data_dir));
  gateway::Service service(store);
  gateway::Server server(service, port, bind);
  server.start();
  std::cerr << "listening on " << bind << ":" << server.port() << " (data in " << store.root().string() << ")\n";
  boost::asio::io_context signals_io;
  boost::asio::signal_set signals(signals_io, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) { server.stop(); });
  std::thread waiter([&] { signals_io.run(); });
  server.wait();
  signals_io.stop();
  waiter.join();
  return 0;
}

// ---- nodes ---------------------------------------------------------------

int cmd_nodes(bool as_json) {
  if (as_json) {
    emit(flow::catalog_to_json());
    return 0;
  }
  for (const auto& k : flow::node_catalog()) {
    std::string ports;
    for (const auto& p : k.inputs) ports += (ports.empty() ? "" : ", ") + p.name + ":" + flow::to_string(p.type);
    std::string outs;
    for (const auto& p : k.outputs) outs += (outs.empty() ? "" : ", ") + p.name + ":" + flow::to_string(p.type);
    std::cout << std::left << std::setw(22) << k.kind << std::setw(10)
              << (k.role == flow::NodeRole::source ? "source" : k.role == flow::NodeRole::sink ? "sink" : "transform") << "(" << ports << ") -> ("
              << outs << ")  " << k.help << "\n";
  }
  return 0;
}

// ---- filter-design -------------------------------------------------------

struct FilterArgs {
  std::string type = "bandpass";
  double fs = 0.0;
  int order = 0;
  std::vector<double> cutoffs, passband, stopband, freqs;
  double ripple = 1.0, attenuation = 40.0;
};

int cmd_filter_design(const FilterArgs& a) {
  const auto kind = pre::filter_kind_from_string(a.type);
  pre::FilterSpec spec;
  if (!a.passband.empty() || !a.stopband.empty()) {
    pre::EdgeDesign d{a.passband, a.stopband, a.ripple, a.attenuation};
    spec = pre::design_butterworth(kind, d, a.fs);
  } else {
    if (a.cutoffs.empty()) throw Error("filter-design needs --cutoffs or --passband/--stopband");
    spec = pre::design_butterworth(kind, pre::ExplicitDesign{a.order > 0 ? a.order : 4, a.cutoffs}, a.fs);
  }
  auto j = spec.to_json();
  json response = json::array();
  for (double f : a.freqs) response.push_back({{"hz", f}, {"db", spec.magnitude_db(f)}});
  j["response"] = response;
  emit(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noetic: EEG pipeline engine"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic recording");
  s->add_option("--spec", synth.spec, "generator spec (JSON)");
  s->add_option("--out", synth.out, "output .neeg path");
  s->add_option("--seed", synth.seed, "overrides the spec seed");
  s->add_option("--duration", synth.duration, "seconds, without --spec");
  s->add_option("--fs", synth.fs, "sampling rate, without --spec");
  s->add_option("--channels", synth.channels, "channel count, without --spec");
  s->add_flag("--serve", synth.serve, "stream over TCP to the first client instead of writing");
  s->add_option("--port", synth.port, "TCP port for --serve (0 picks one)");
  s->add_option("--speed", synth.speed, "pacing for --serve, x real time (0 = unpaced)");
  s->add_option("--chunk", synth.chunk, "ticks per data frame for --serve");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run a pipeline document");
  r->add_option("--pipeline", run.pipeline, "pipeline document")->required();
  r->add_option("--input", run.input, "recording replacing the source's own data");
  r->add_option("--fs", run.fs, "sampling rate for CSV input");
  r->add_option("--out", run.out, "directory for sink files and result.json");
  r->add_flag("--online", run.online, "stream the input through a live session");
  r->add_option("--chunk", run.chunk, "ticks per frame with --online");
  r->add_option("--port", run.port, "read frames from a TCP producer on this port");
  r->add_option("--host", run.host, "TCP producer host");
  r->add_option("--seed", run.seed, "overrides the document seed");

  SelectArgs sel;
  auto* c = app.add_subcommand("select", "Rank channels by class relevance");
  c->add_option("--input", sel.input, "recording with labelled markers")->required();
  c->add_option("--method", sel.method, "correlation | mutual_information | chi_squared | csp");
  c->add_option("-n,--count", sel.n, "channels to keep");
  c->add_option("--labels", sel.labels, "marker labels to epoch on (default: all labelled)")->delimiter(',');
  c->add_option("--pre", sel.pre, "epoch start relative to marker, s");
  c->add_option("--post", sel.post, "epoch end relative to marker, s");
  c->add_option("--bands", sel.bands, "filter bank lo:hi,... (channels become channel@band)")->delimiter(',');
  c->add_option("--fs", sel.fs, "sampling rate for CSV input");
  c->add_option("--out", sel.out, "report path (JSON)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a classifier with cross-validation");
  t->add_option("--input", tr.input, "recording, or feature table (.json) for nb")->required();
  t->add_option("--kind", tr.kind, "nb | rmdm | tangent_linear");
  t->add_option("--folds", tr.folds, "cross-validation folds");
  t->add_option("--seed", tr.seed, "fold and training seed");
  t->add_option("--labels", tr.labels, "marker labels to epoch on")->delimiter(',');
  t->add_option("--pre", tr.pre, "epoch start relative to marker, s");
  t->add_option("--post", tr.post, "epoch end relative to marker, s");
  t->add_option("--bands", tr.bands, "filter bank lo:hi,... applied before epoching")->delimiter(',');
  t->add_option("--shrinkage", tr.shrinkage, "covariance shrinkage");
  t->add_option("--fs", tr.fs, "sampling rate for CSV input");
  t->add_option("--out", tr.out, "model path (JSON)");

  SimArgs sm;
  auto* m = app.add_subcommand("sim", "Run the obstacle-avoidance simulator over a decision trace");
  m->add_option("--config", sm.config, "simulator config (JSON)");
  m->add_option("--trace", sm.trace, "decisions [{t, class_id}] as JSON or JSON lines");
  m->add_option("--accuracy", sm.accuracy, "simulate a decoder with this accuracy instead of a trace");
  m->add_option("--delay", sm.delay, "simulated decoder delay after each announce, s");
  m->add_option("--obstacles", sm.obstacles, "obstacle count, without --config");
  m->add_option("--interval", sm.interval, "seconds between obstacles, without --config");
  m->add_option("--window", sm.window, "decision window, s, without --config");
  m->add_option("--seed", sm.seed, "class sequence and decoder seed");
  m->add_option("--out", sm.out, "session log (JSON lines)");

  int serve_port = 8080;
  std::string serve_bind = "127.0.0.1", data_dir;
  auto* sv = app.add_subcommand("serve", "HTTP and WebSocket service");
  sv->add_option("--port", serve_port, "listen port");
  sv->add_option("--bind", serve_bind, "listen address");
  sv->add_option("--data-dir", data_dir, "store root (default $NOETIC_DATA_DIR)");

  bool nodes_json = false;
  auto* n = app.add_subcommand("nodes", "List node kinds");
  n->add_flag("--json", nodes_json, "full catalog as JSON");

  FilterArgs fa;
  auto* f = app.add_subcommand("filter-design", "Design a Butterworth filter and print it");
  f->add_option("--type", fa.type, "lowpass | highpass | bandpass | bandstop");
  f->add_option("--fs", fa.fs, "sampling rate")->required();
  f->add_option("--order", fa.order, "order for --cutoffs (default 4)");
  f->add_option("--cutoffs", fa.cutoffs, "-3 dB edges, Hz")->delimiter(',');
  f->add_option("--passband", fa.passband, "passband edges, Hz")->delimiter(',');
  f->add_option("--stopband", fa.stopband, "stopband edges, Hz")->delimiter(',');
  f->add_option("--ripple", fa.ripple, "max passband attenuation, dB");
  f->add_option("--attenuation", fa.attenuation, "min stopband attenuation, dB");
  f->add_option("--freqs", fa.freqs, "print the magnitude at these frequencies")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*r) return cmd_run(run);
    if (*c) return cmd_select(sel);
    if (*t) return cmd_train(tr);
    if (*m) return cmd_sim(sm);
    if (*sv) return cmd_serve(serve_port, serve_bind, data_dir);
    if (*n) return cmd_nodes(nodes_json);
    if (*f) return cmd_filter_design(fa);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
