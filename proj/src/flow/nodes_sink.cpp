#include "noetic/classify/classifier.hpp"
#include "noetic/features/spectral.hpp"
#include "noetic/flow/node.hpp"
#include "noetic/io/recording.hpp"
#include "noetic/sim.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <deque>

namespace noetic::flow {

namespace {

using ChunkPtr = std::shared_ptr<const RawChunk>;

std::vector<std::string> names_of(const std::vector<ChannelInfo>& ch) {
  std::vector<std::string> out;
  for (const auto& c : ch) out.push_back(c.name);
  return out;
}

// Spectrum rows thinned so channels x bins stays within the point cap.
PlotPayload spectrum_payload(const std::vector<double>& freqs, const Matrix& power, const std::vector<std::string>& names,
                             std::size_t max_points) {
  PlotPayload p;
  const auto channels = static_cast<std::size_t>(power.rows());
  if (channels == 0 || freqs.empty()) return p;
  const std::size_t per = std::max<std::size_t>(1, max_points / channels);
  const std::size_t stride = (freqs.size() + per - 1) / per;
  for (std::size_t k = 0; k < freqs.size(); k += stride) p.x.push_back(freqs[k]);
  for (std::size_t c = 0; c < std::min(channels, max_points); ++c) {
    std::vector<double> y;
    for (std::size_t k = 0; k < freqs.size(); k += stride) y.push_back(power(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)));
    p.y.push_back(std::move(y));
    p.series.push_back(c < names.size() ? names[c] : "ch" + std::to_string(c));
  }
  return p;
}

class PlotSink : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& in = *std::get<ChunkPtr>(p);
    const auto kind = param("kind").get<std::string>();
    const auto max_points = param("max_points").get<std::size_t>();
    PlotFrame f;
    f.node = id();
    f.kind = kind;
    f.t = in.t0();
    if (kind == "raw" || kind == "filtered" || kind == "ic") {
      if (in.samples.cols() == 0) return;
      f.payload = decimate(in.samples, in.t0(), in.info->fs, names_of(in.info->channels), max_points);
    } else {
      if (!spectrum_ready(in)) return;
      const Matrix w = window();
      const auto names = names_of(in.info->channels);
      std::vector<double> freqs;
      Matrix power;
      for (Eigen::Index c = 0; c < w.rows(); ++c) {
        const std::vector<double> x(w.row(c).begin(), w.row(c).end());
        std::vector<double> v;
        if (kind == "periodogram") {
          auto s = features::welch_psd(x, in.info->fs, {std::min<std::size_t>(256, x.size()), 0.5});
          freqs = s.freqs;
          v = s.power;
        } else {
          Eigen::FFT<double> fft;
          std::vector<std::complex<double>> X;
          fft.fwd(X, x);
          freqs.resize(x.size() / 2 + 1);
          v.resize(freqs.size());
          for (std::size_t k = 0; k < freqs.size(); ++k) {
            freqs[k] = static_cast<double>(k) * in.info->fs / static_cast<double>(x.size());
            v[k] = std::abs(X[k]) / static_cast<double>(x.size());
          }
        }
        if (power.size() == 0) power.resize(w.rows(), static_cast<Eigen::Index>(v.size()));
        for (std::size_t k = 0; k < v.size(); ++k) power(c, static_cast<Eigen::Index>(k)) = v[k];
      }
      f.payload = spectrum_payload(freqs, power, names, max_points);
    }
    ++frames_;
    out.plot(std::move(f));
  }
  nlohmann::json result() const override { return {{"kind", param("kind")}, {"frames", frames_}}; }

 private:
  bool spectrum_ready(const RawChunk& in) {
    const auto n = static_cast<std::size_t>(std::llround(param("window_s").get<double>() * in.info->fs));
    if (static_cast<std::size_t>(in.samples.rows()) != history_.size()) history_.assign(static_cast<std::size_t>(in.samples.rows()), {});
    for (std::size_t c = 0; c < history_.size(); ++c) {
      auto& h = history_[c];
      for (Eigen::Index t = 0; t < in.samples.cols(); ++t) h.push_back(in.samples(static_cast<Eigen::Index>(c), t));
      while (h.size() > n) h.pop_front();
    }
    window_len_ = n;
    return !history_.empty() && history_.front().size() == n && n >= 8;
  }
  Matrix window() const {
    Matrix m(static_cast<Eigen::Index>(history_.size()), static_cast<Eigen::Index>(window_len_));
    for (std::size_t c = 0; c < history_.size(); ++c)
      for (std::size_t t = 0; t < window_len_; ++t) m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = history_[c][t];
    return m;
  }

  std::vector<std::deque<double>> history_;
  std::size_t window_len_ = 0;
  std::size_t frames_ = 0;
};

class SpectrumSink : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& b = *std::get<std::shared_ptr<const SpectrumBatch>>(p);
    for (std::size_t i = 0; i < b.power.size(); ++i) {
      PlotFrame f;
      f.node = id();
      f.kind = b.kind;
      f.t = b.marker_t[i];
      f.payload = spectrum_payload(b.freqs, b.power[i], b.channels, param("max_points").get<std::size_t>());
      out.plot(std::move(f));
      ++frames_;
    }
  }
  nlohmann::json result() const override { return {{"frames", frames_}}; }

 private:
  std::size_t frames_ = 0;
};

class FileSink : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox&) override {
    const auto& in = *std::get<ChunkPtr>(p);
    if (!info_) {
      info_ = in.info;
      first_ = in.first;
    }
    if (in.info->channels.size() != info_->channels.size()) fail("sink.file: channel layout changed mid-stream");
    chunks_.push_back(in.samples);
    ticks_ += static_cast<std::size_t>(in.samples.cols());
    markers_.insert(markers_.end(), in.markers.begin(), in.markers.end());
  }
  std::optional<std::string> file_bytes() const override {
    if (!info_) return std::nullopt;
    return io::encode_recording(recording());
  }
  nlohmann::json result() const override {
    if (!info_) return {{"samples", 0}};
    const auto bytes = *file_bytes();
    return {{"samples", ticks_},
            {"channels", info_->channels.size()},
            {"markers", markers_.size()},
            {"bytes", bytes.size()},
            {"sha256", sha256_hex(bytes)}};
  }

 private:
  io::Recording recording() const {
    io::Recording rec;
    rec.block.fs = info_->fs;
    rec.block.t0 = info_->t0 + static_cast<double>(first_) / info_->fs;
    rec.block.channels = info_->channels;
    rec.block.samples.resize(static_cast<Eigen::Index>(info_->channels.size()), static_cast<Eigen::Index>(ticks_));
    Eigen::Index at = 0;
    for (const auto& m : chunks_) {
      rec.block.samples.middleCols(at, m.cols()) = m;
      at += m.cols();
    }
    rec.markers = markers_;
    rec.subject_tag = info_->subject_tag;
    return rec;
  }

  std::shared_ptr<const StreamInfo> info_;
  std::size_t first_ = 0, ticks_ = 0;
  std::vector<Matrix> chunks_;
  std::vector<Marker> markers_;
};

class FeatureSink : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox&) override {
    all_.vappend(*std::get<std::shared_ptr<const features::FeatureMatrix>>(p));
  }
  std::optional<std::string> file_bytes() const override {
    if (param("format").get<std::string>() == "csv") return features::to_csv(all_);
    return features::to_json(all_).dump(2) + "\n";
  }
  nlohmann::json result() const override { return {{"rows", all_.rows()}, {"cols", all_.cols()}}; }

 private:
  features::FeatureMatrix all_;
};

class ModelSink : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox&) override {
    model_ = std::get<std::shared_ptr<const ModelPacket>>(p);
  }
  std::optional<std::string> file_bytes() const override {
    if (!model_) return std::nullopt;
    return classify::model_to_json(model_->model).dump(2) + "\n";
  }
  nlohmann::json result() const override {
    if (!model_) return {{"model", nullptr}};
    return {{"model", classify::to_string(model_->model.kind)}, {"report", model_->report}};
  }

 private:
  std::shared_ptr<const ModelPacket> model_;
};

class DecisionSink : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    for (const auto& row : std::get<std::shared_ptr<const LabelBatch>>(p)->rows) {
      PlotFrame f;
      f.node = id();
      f.kind = "decision";
      f.t = row.marker_t;
      f.payload.x = {row.marker_t};
      f.payload.y = {{static_cast<double>(row.class_id)}};
      f.payload.series = {"class"};
      for (std::size_t k = 0; k < row.scores.size(); ++k) {
        f.payload.y.push_back({row.scores[k]});
        f.payload.series.push_back("score" + std::to_string(k));
      }
      out.plot(std::move(f));
      out.decide(row);
      rows_.push_back(row);
    }
  }
  std::optional<std::string> file_bytes() const override {
    std::string s;
    for (const auto& r : rows_) s += to_json(r).dump() + "\n";
    return s;
  }
  nlohmann::json result() const override {
    auto d = nlohmann::json::array();
    std::size_t correct = 0, labelled = 0;
    for (const auto& r : rows_) {
      d.push_back(to_json(r));
      if (r.truth) {
        ++labelled;
        correct += *r.truth == r.class_id;
      }
    }
    nlohmann::json j{{"count", rows_.size()}, {"decisions", d}};
    if (labelled > 0) j["accuracy"] = static_cast<double>(correct) / static_cast<double>(labelled);
    return j;
  }

 private:
  std::vector<DecisionRow> rows_;
};

class ArenaNode : public Node {
 public:
  explicit ArenaNode(NodeContext c) : Node(std::move(c)) {
    sim::SimConfig cfg;
    cfg.n_obstacles = param("n_obstacles").get<std::size_t>();
    cfg.inter_obstacle_s = param("inter_obstacle_s").get<double>();
    cfg.decision_window_s = param("decision_window_s").get<double>();
    for (const auto& v : param("classes")) cfg.classes.push_back(static_cast<int>(v.get<double>()));
    cfg.audio_feedback = param("audio").get<bool>();
    cfg.visual_feedback = param("visual").get<bool>();
    cfg.seed = ctx_.seed;
    session_ = sim::new_session(cfg);
  }
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    for (const auto& row : std::get<std::shared_ptr<const LabelBatch>>(p)->rows) {
      const double t = row.marker_t + param("decision_delay_s").get<double>();
      if (t < session_.clock) {
        ++late_;
        continue;
      }
      forward(sim::step(session_, t, row.class_id), out);
    }
  }
  void on_end(Outbox& out) override { forward(sim::finish(session_), out); }
  std::optional<std::string> file_bytes() const override { return sim::session_log_jsonl(session_); }
  nlohmann::json result() const override {
    auto j = sim::to_json(sim::score(session_));
    j["ignored_decisions"] = session_.ignored_decisions + late_;
    return j;
  }

 private:
  void forward(const std::vector<sim::SimEvent>& events, Outbox& out) {
    auto batch = std::make_shared<EventBatch>();
    for (const auto& e : events) {
      std::string label = sim::to_string(e.kind);
      if (e.kind == sim::EventKind::outcome || e.kind == sim::EventKind::feedback) label += ":" + sim::to_string(e.outcome);
      batch->events.push_back({e.t, label, e.class_id});
    }
    if (!batch->events.empty()) out.emit(0, std::shared_ptr<const EventBatch>(std::move(batch)));
  }

  sim::SimSession session_;
  std::size_t late_ = 0;
};

ParamDecl path_param(const char* help) { return param("path", ParamType::string, "", help); }
ParamDecl points_param() { return integer_param("max_points", 2048, "plot payload cap", 2, 2048); }

}  // namespace

void register_sink_nodes(std::vector<NodeEntry>& out) {
  out.push_back({{"sink.plot", NodeRole::sink, "Decimated time series or spectra for live charts",
                  {{"in", PortType::raw_stream}}, {},
                  {choice_param("kind", "raw", {"raw", "filtered", "ic", "fft", "periodogram"}, "chart kind"),
                   number_param("window_s", 1.0, "spectrum window in seconds", 0.01), points_param()}},
                 [](NodeContext c) { return std::make_unique<PlotSink>(std::move(c)); }});
  out.push_back({{"sink.spectrum", NodeRole::sink, "Plots per-epoch spectra", {{"in", PortType::spectrum}}, {},
                  {points_param()}},
                 [](NodeContext c) { return std::make_unique<SpectrumSink>(std::move(c)); }});
  out.push_back({{"sink.file", NodeRole::sink, "Writes the stream as a .neeg recording", {{"in", PortType::raw_stream}},
                  {}, {path_param("output recording")}},
                 [](NodeContext c) { return std::make_unique<FileSink>(std::move(c)); }});
  out.push_back({{"sink.features", NodeRole::sink, "Writes feature rows as CSV or JSON", {{"in", PortType::features}},
                  {}, {path_param("output file"), choice_param("format", "csv", {"csv", "json"}, "file format")}},
                 [](NodeContext c) { return std::make_unique<FeatureSink>(std::move(c)); }});
  out.push_back({{"sink.model", NodeRole::sink, "Writes a trained model as JSON", {{"in", PortType::model}}, {},
                  {path_param("output model")}},
                 [](NodeContext c) { return std::make_unique<ModelSink>(std::move(c)); }});
  out.push_back({{"sink.decision", NodeRole::sink, "Collects classifier decisions", {{"in", PortType::labels}}, {},
                  {path_param("JSON-lines output")}},
                 [](NodeContext c) { return std::make_unique<DecisionSink>(std::move(c)); }});
  out.push_back({{"sim.arena", NodeRole::sink, "Obstacle-avoidance game driven by decisions",
                  {{"in", PortType::labels}}, {{"events", PortType::events}},
                  {integer_param("n_obstacles", 10, "obstacle count", 1, 100000),
                   number_param("inter_obstacle_s", 4.0, "seconds between obstacles", 0.0),
                   number_param("decision_window_s", 2.0, "seconds an obstacle accepts a decision", 0.0),
                   param("classes", ParamType::number_list, nlohmann::json::array(), "explicit class sequence (0/1)"),
                   param("audio", ParamType::boolean, true, "auditory feedback flag"),
                   param("visual", ParamType::boolean, true, "visual feedback flag"),
                   number_param("decision_delay_s", 0.5, "decision time after the epoch marker", 0.0),
                   path_param("JSON-lines session log")}},
                 [](NodeContext c) { return std::make_unique<ArenaNode>(std::move(c)); }});
}

}  // namespace noetic::flow
