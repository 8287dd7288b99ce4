#include "noetic/flow/node.hpp"
#include "noetic/preprocess/artifact.hpp"
#include "noetic/preprocess/filter.hpp"
#include "noetic/preprocess/ops.hpp"

#include <cmath>
#include <deque>

namespace noetic::flow {

namespace {

using ChunkPtr = std::shared_ptr<const RawChunk>;

const RawChunk& chunk_of(const Packet& p) { return *std::get<ChunkPtr>(p); }

ChunkPtr derived(const RawChunk& in, Matrix samples, std::shared_ptr<const StreamInfo> info = nullptr) {
  auto c = std::make_shared<RawChunk>();
  c->info = info ? std::move(info) : in.info;
  c->samples = std::move(samples);
  c->first = in.first;
  c->markers = in.markers;
  return c;
}

std::vector<std::size_t> resolve_channels(const nlohmann::json& list, const std::vector<ChannelInfo>& channels,
                                          const std::string& what) {
  std::vector<std::size_t> out;
  for (const auto& v : list) {
    if (v.is_string()) {
      const auto name = v.get<std::string>();
      auto it = std::find_if(channels.begin(), channels.end(), [&](const ChannelInfo& c) { return c.name == name; });
      if (it == channels.end()) {
        std::string known;
        for (const auto& c : channels) known += (known.empty() ? "" : ", ") + c.name;
        throw Error(what + ": no channel named '" + name + "' (have " + known + ")");
      }
      out.push_back(static_cast<std::size_t>(it - channels.begin()));
    } else {
      const auto i = v.get<std::size_t>();
      if (i >= channels.size())
        throw Error(what + ": channel index " + std::to_string(i) + " out of range (" +
                    std::to_string(channels.size()) + " channels)");
      out.push_back(i);
    }
  }
  return out;
}

// Growable tick-major sample store with cheap front trimming.
class SampleBuffer {
 public:
  void reset(std::size_t channels, std::size_t start) {
    channels_ = channels;
    start_ = start;
    data_.clear();
    head_ = 0;
  }
  void append(const Matrix& m) {
    for (Eigen::Index t = 0; t < m.cols(); ++t)
      for (Eigen::Index c = 0; c < m.rows(); ++c) data_.push_back(m(c, t));
  }
  std::size_t start() const { return start_; }
  std::size_t end() const { return start_ + size(); }
  std::size_t size() const { return channels_ == 0 ? 0 : (data_.size() - head_) / channels_; }
  std::size_t channels() const { return channels_; }
  /// Copies global samples [from, from + n).
  Matrix slice(std::size_t from, std::size_t n) const {
    Matrix m(static_cast<Eigen::Index>(channels_), static_cast<Eigen::Index>(n));
    const std::size_t base = head_ + (from - start_) * channels_;
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t c = 0; c < channels_; ++c)
        m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = data_[base + t * channels_ + c];
    return m;
  }
  void drop_before(std::size_t global) {
    if (global <= start_) return;
    const std::size_t n = std::min(global - start_, size());
    head_ += n * channels_;
    start_ += n;
    if (head_ > data_.size() / 2 && head_ > 4096) {
      data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

 private:
  std::size_t channels_ = 0;
  std::size_t start_ = 0;
  std::vector<double> data_;
  std::size_t head_ = 0;
};

class SelectChannels : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& in = chunk_of(p);
    if (in.info != source_info_) {
      source_info_ = in.info;
      info_.reset();
    }
    if (!info_) {
      idx_ = resolve_channels(param("channels"), in.info->channels, "select.channels");
      if (idx_.empty()) fail("select.channels: no channels selected");
      auto info = std::make_shared<StreamInfo>(*in.info);
      info->channels.clear();
      for (std::size_t i = 0; i < idx_.size(); ++i) {
        ChannelInfo c = in.info->channels[idx_[i]];
        c.index = i;
        info->channels.push_back(c);
      }
      info_ = info;
    }
    Matrix m(static_cast<Eigen::Index>(idx_.size()), in.samples.cols());
    for (std::size_t i = 0; i < idx_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = in.samples.row(static_cast<Eigen::Index>(idx_[i]));
    out.emit(0, derived(in, std::move(m), info_));
  }
  void set_param(const std::string& name, const nlohmann::json& value) override {
    if (name != "channels") Node::set_param(name, value);
    if (source_info_) resolve_channels(value, source_info_->channels, "select.channels");
    if (value.empty()) fail("select.channels: no channels selected");
    ctx_.params[name] = value;
    info_.reset();
  }

 private:
  std::shared_ptr<const StreamInfo> source_info_;
  std::shared_ptr<const StreamInfo> info_;
  std::vector<std::size_t> idx_;
};

class ButterNode : public Node {
 public:
  explicit ButterNode(NodeContext c) : Node(std::move(c)) {
    if (param("zero_phase").get<bool>() && ctx_.mode == Mode::online)
      fail("filt.butter: zero_phase needs the whole recording and is offline-only");
  }
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& in = chunk_of(p);
    if (in.info->fs != fs_) {
      fs_ = in.info->fs;
      redesign(ctx_.params);
    }
    if (param("zero_phase").get<bool>()) {
      if (held_.empty()) {
        held_info_ = in.info;
        held_first_ = in.first;
      }
      held_.push_back(in.samples);
      held_markers_.insert(held_markers_.end(), in.markers.begin(), in.markers.end());
      return;
    }
    Matrix m = in.samples;
    filter_.process(m);
    out.emit(0, derived(in, std::move(m)));
  }
  void on_end(Outbox& out) override {
    if (held_.empty()) return;
    Eigen::Index cols = 0;
    for (const auto& m : held_) cols += m.cols();
    Matrix all(held_.front().rows(), cols);
    Eigen::Index at = 0;
    for (const auto& m : held_) {
      all.middleCols(at, m.cols()) = m;
      at += m.cols();
    }
    for (Eigen::Index c = 0; c < all.rows(); ++c) {
      const std::vector<double> x(all.row(c).begin(), all.row(c).end());
      const auto y = pre::sosfiltfilt(filter_.spec().sections, x);
      for (Eigen::Index t = 0; t < cols; ++t) all(c, t) = y[static_cast<std::size_t>(t)];
    }
    auto chunk = std::make_shared<RawChunk>();
    chunk->info = held_info_;
    chunk->samples = std::move(all);
    chunk->first = held_first_;
    chunk->markers = std::move(held_markers_);
    held_.clear();
    out.emit(0, chunk);
  }
  void set_param(const std::string& name, const nlohmann::json& value) override {
    if (name != "cutoffs" && name != "order") Node::set_param(name, value);
    auto next = ctx_.params;
    next[name] = value;
    if (fs_ > 0.0) redesign(next);  // throws before anything changes
    ctx_.params = std::move(next);
  }
  nlohmann::json result() const override {
    if (fs_ <= 0.0) return nullptr;
    return filter_.spec().to_json();
  }

 private:
  void redesign(const nlohmann::json& params) {
    pre::ExplicitDesign d;
    d.order = params.at("order").get<int>();
    d.cutoffs = params.at("cutoffs").get<std::vector<double>>();
    auto spec = pre::design_butterworth(pre::filter_kind_from_string(params.at("type").get<std::string>()), d, fs_);
    filter_ = pre::StreamingFilter(std::move(spec));  // state starts from rest
  }

  double fs_ = 0.0;
  pre::StreamingFilter filter_;
  std::vector<Matrix> held_;
  std::vector<Marker> held_markers_;
  std::shared_ptr<const StreamInfo> held_info_;
  std::size_t held_first_ = 0;
};

class CarNode : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& in = chunk_of(p);
    if (in.samples.rows() < 2) fail("ref.car needs at least 2 channels");
    Matrix m = in.samples;
    const double n = static_cast<double>(m.rows());
    for (Eigen::Index t = 0; t < m.cols(); ++t) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < m.rows(); ++c) s += m(c, t);
      const double mean = s / n;
      for (Eigen::Index c = 0; c < m.rows(); ++c) m(c, t) -= mean;
    }
    out.emit(0, derived(in, std::move(m)));
  }
};

// Tapers consecutive non-overlapping blocks of `length` ticks.
class KaiserNode : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& in = chunk_of(p);
    if (!info_ || in.info->channels.size() != info_->channels.size()) {
      info_ = in.info;
      buf_.reset(static_cast<std::size_t>(in.samples.rows()), in.first);
    }
    info_ = in.info;
    buf_.append(in.samples);
    markers_.insert(markers_.end(), in.markers.begin(), in.markers.end());
    const auto length = param("length").get<std::size_t>();
    while (buf_.size() >= length) emit_block(length, out);
  }
  void on_end(Outbox& out) override {
    if (info_ && buf_.size() > 0) emit_block(buf_.size(), out);
  }

 private:
  void emit_block(std::size_t n, Outbox& out) {
    const auto w = pre::kaiser(n, param("beta").get<double>());
    Matrix m = buf_.slice(buf_.start(), n);
    for (Eigen::Index t = 0; t < m.cols(); ++t) m.col(t) *= w[static_cast<std::size_t>(t)];
    auto c = std::make_shared<RawChunk>();
    c->info = info_;
    c->samples = std::move(m);
    c->first = buf_.start();
    c->markers = std::move(markers_);
    markers_.clear();
    buf_.drop_before(buf_.start() + n);
    out.emit(0, c);
  }

  std::shared_ptr<const StreamInfo> info_;
  SampleBuffer buf_;
  std::vector<Marker> markers_;
};

class EpochNode : public Node {
 public:
  explicit EpochNode(NodeContext c) : Node(std::move(c)) {
    pre_ = param("pre_s").get<double>();
    post_ = param("post_s").get<double>();
    offset_ = param("offset").get<double>();
    if (!(pre_ < post_)) fail("epoch.markers: pre_s must be < post_s");
    for (const auto& l : param("labels")) labels_.push_back(l.get<std::string>());
  }
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& in = chunk_of(p);
    if (!info_ || in.info->channels.size() != info_->channels.size() || in.info->fs != info_->fs)
      buf_.reset(static_cast<std::size_t>(in.samples.rows()), in.first);
    info_ = in.info;
    len_ = static_cast<std::size_t>(std::llround((post_ - pre_) * info_->fs));
    if (len_ == 0) fail("epoch.markers: window shorter than one sample");
    if (in.first != buf_.end()) buf_.reset(buf_.channels(), in.first);  // gap: restart buffer
    buf_.append(in.samples);
    for (const auto& m : in.markers)
      if (labels_.empty() || std::find(labels_.begin(), labels_.end(), m.label) != labels_.end()) pending_.push_back(m);
    cut(out);
  }
  void on_end(Outbox&) override {
    for (const auto& m : pending_) dropped_.push_back({m, "window ends after stream"});
    pending_.clear();
  }
  nlohmann::json result() const override {
    auto d = nlohmann::json::array();
    for (const auto& [m, why] : dropped_) d.push_back({{"t", m.t}, {"label", m.label}, {"reason", why}});
    return {{"epochs", emitted_}, {"dropped", d}};
  }

 private:
  void cut(Outbox& out) {
    auto set = std::make_shared<EpochSet>();
    set->fs = info_->fs;
    set->channels = info_->channels;
    set->pre_s = pre_;
    set->post_s = post_;
    std::deque<Marker> waiting;
    for (const auto& m : pending_) {
      const long long start = sample_index(m.t - offset_ + pre_, info_->t0, info_->fs);
      if (start < 0) {
        dropped_.push_back({m, "window starts before stream"});
      } else if (static_cast<std::size_t>(start) < buf_.start()) {
        dropped_.push_back({m, "marker arrived after its samples were released"});
      } else if (static_cast<std::size_t>(start) + len_ <= buf_.end()) {
        Epoch e;
        e.data = buf_.slice(static_cast<std::size_t>(start), len_);
        e.class_id = m.class_id;
        e.marker_t = m.t;
        set->epochs.push_back(std::move(e));
      } else {
        waiting.push_back(m);
      }
    }
    pending_ = std::move(waiting);
    // Keep enough history for markers that trail their data by a few seconds.
    std::size_t keep_from = buf_.end() > len_ + retention() ? buf_.end() - len_ - retention() : 0;
    for (const auto& m : pending_) {
      const long long start = sample_index(m.t - offset_ + pre_, info_->t0, info_->fs);
      if (start >= 0) keep_from = std::min(keep_from, static_cast<std::size_t>(start));
    }
    buf_.drop_before(keep_from);
    if (!set->epochs.empty()) {
      emitted_ += set->epochs.size();
      out.emit(0, std::shared_ptr<const EpochSet>(std::move(set)));
    }
  }
  std::size_t retention() const { return static_cast<std::size_t>(std::ceil(5.0 * info_->fs)); }

  double pre_ = 0.0, post_ = 1.0, offset_ = 0.0;
  std::vector<std::string> labels_;
  std::shared_ptr<const StreamInfo> info_;
  SampleBuffer buf_;
  std::size_t len_ = 0;
  std::deque<Marker> pending_;
  std::vector<std::pair<Marker, std::string>> dropped_;
  std::size_t emitted_ = 0;
};

class AmplitudeReject : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& in = *std::get<std::shared_ptr<const EpochSet>>(p);
    auto r = pre::reject_epochs_amplitude(in, param("threshold").get<double>());
    for (const auto& e : r.report.rejected) {
      auto ej = nlohmann::json{{"marker_t", e.marker_t}, {"channel", e.channel}, {"peak", e.peak}};
      rejected_.push_back(ej);
    }
    seen_ += r.report.input_count;
    if (!r.kept.empty()) out.emit(0, std::make_shared<const EpochSet>(std::move(r.kept)));
  }
  void set_param(const std::string& name, const nlohmann::json& value) override {
    if (name != "threshold") Node::set_param(name, value);
    ctx_.params[name] = value;
  }
  nlohmann::json result() const override { return {{"input_count", seen_}, {"rejected", rejected_}}; }

 private:
  std::size_t seen_ = 0;
  nlohmann::json rejected_ = nlohmann::json::array();
};

// Shared calibration buffering for nodes that fit a spatial model on the
// first calibration_s seconds and then apply it sample by sample.
class CalibratedNode : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& in = chunk_of(p);
    if (calibrated_) {
      if (in.info->channels.size() != channels_) fail(ctx_.kind + ": channel count changed after calibration");
      apply(in, out);
      return;
    }
    if (held_.empty()) {
      info_ = in.info;
      channels_ = in.info->channels.size();
      first_ = in.first;
    }
    held_.push_back(in.samples);
    held_ticks_ += static_cast<std::size_t>(in.samples.cols());
    markers_.insert(markers_.end(), in.markers.begin(), in.markers.end());
    if (held_ticks_ >= needed()) release(out);
  }
  void on_end(Outbox& out) override {
    if (!calibrated_ && held_ticks_ > 0) release(out);
  }

 protected:
  virtual void fit(const Matrix& calibration, const StreamInfo& info) = 0;
  virtual void apply(const RawChunk& in, Outbox& out) = 0;
  std::size_t needed() const {
    return static_cast<std::size_t>(std::llround(param("calibration_s").get<double>() * info_->fs));
  }

 private:
  void release(Outbox& out) {
    Matrix all(static_cast<Eigen::Index>(channels_), static_cast<Eigen::Index>(held_ticks_));
    Eigen::Index at = 0;
    for (const auto& m : held_) {
      all.middleCols(at, m.cols()) = m;
      at += m.cols();
    }
    const auto n = std::min<std::size_t>(needed(), held_ticks_);
    fit(all.leftCols(static_cast<Eigen::Index>(n)), *info_);
    calibrated_ = true;
    RawChunk c;
    c.info = info_;
    c.samples = std::move(all);
    c.first = first_;
    c.markers = std::move(markers_);
    held_.clear();
    apply(c, out);
  }

  bool calibrated_ = false;
  std::shared_ptr<const StreamInfo> info_;
  std::size_t channels_ = 0, first_ = 0, held_ticks_ = 0;
  std::vector<Matrix> held_;
  std::vector<Marker> markers_;
};

class RegressionNode : public CalibratedNode {
 public:
  using CalibratedNode::CalibratedNode;
  nlohmann::json result() const override { return fitted_ ? pre::to_json(cleaner_) : nlohmann::json(nullptr); }

 protected:
  void fit(const Matrix& cal, const StreamInfo& info) override {
    std::vector<std::size_t> refs;
    if (param("reference").empty()) {
      for (std::size_t i = 0; i < info.channels.size(); ++i)
        if (info.channels[i].role == ChannelRole::eog_reference) refs.push_back(i);
      if (refs.empty()) fail("artifact.regression: no reference given and no eog-reference channels in the stream");
    } else {
      refs = resolve_channels(param("reference"), info.channels, "artifact.regression");
    }
    cleaner_ = pre::fit_regression_cleaner(cal, refs);
    fitted_ = true;
  }
  void apply(const RawChunk& in, Outbox& out) override {
    Matrix m = in.samples;
    const auto& b = cleaner_.coefficients;
    for (Eigen::Index t = 0; t < m.cols(); ++t)
      for (Eigen::Index c = 0; c < m.rows(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < cleaner_.reference.size(); ++r)
          s += b(static_cast<Eigen::Index>(r), c) * in.samples(static_cast<Eigen::Index>(cleaner_.reference[r]), t);
        m(c, t) -= s;
      }
    out.emit(0, derived(in, std::move(m)));
  }

 private:
  pre::RegressionCleaner cleaner_;
  bool fitted_ = false;
};

class IcaNode : public CalibratedNode {
 public:
  using CalibratedNode::CalibratedNode;
  nlohmann::json result() const override {
    if (!fitted_) return nullptr;
    return {{"components", model_.components},
            {"rejected", rejected_},
            {"iterations", model_.iterations},
            {"converged", model_.converged}};
  }

 protected:
  void fit(const Matrix& cal, const StreamInfo& info) override {
    pre::IcaParams ip;
    ip.seed = ctx_.seed;
    ip.tolerance = param("tolerance").get<double>();
    ip.max_iterations = param("max_iterations").get<int>();
    model_ = pre::ica_fit(cal, ip);
    pre::IcaRejectRule rule;
    rule.kurtosis_threshold = param("kurtosis").get<double>();
    rule.channel_corr_threshold = param("channel_corr").get<double>();
    rule.frontal = pre::frontal_channels(info.channels);
    rejected_ = pre::ica_select_components(model_, cal, rule);
    mixing_ = model_.mixing;
    for (auto k : rejected_) mixing_.col(static_cast<Eigen::Index>(k)).setZero();
    auto ic = std::make_shared<StreamInfo>(info);
    ic->channels = default_channels(model_.components);
    for (auto& c : ic->channels) c.name = "ic" + std::to_string(c.index);
    ic->unit = "arbitrary";
    ic_info_ = ic;
    fitted_ = true;
  }
  void apply(const RawChunk& in, Outbox& out) override {
    const auto k = static_cast<Eigen::Index>(model_.components);
    const Eigen::Index nc = in.samples.rows();
    Matrix s(k, in.samples.cols());
    Matrix cleaned = in.samples;
    for (Eigen::Index t = 0; t < in.samples.cols(); ++t) {
      for (Eigen::Index i = 0; i < k; ++i) {
        double v = 0.0;
        for (Eigen::Index c = 0; c < nc; ++c) v += model_.unmixing(i, c) * (in.samples(c, t) - model_.mean(c));
        s(i, t) = v;
      }
      if (!rejected_.empty())
        for (Eigen::Index c = 0; c < nc; ++c) {
          double v = 0.0;
          for (Eigen::Index i = 0; i < k; ++i) v += mixing_(c, i) * s(i, t);
          cleaned(c, t) = v + model_.mean(c);
        }
    }
    out.emit(0, derived(in, std::move(cleaned)));
    out.emit(1, derived(in, std::move(s), ic_info_));
  }

 private:
  pre::IcaModel model_;
  Matrix mixing_;
  std::vector<std::size_t> rejected_;
  std::shared_ptr<const StreamInfo> ic_info_;
  bool fitted_ = false;
};

}  // namespace

void register_preprocess_nodes(std::vector<NodeEntry>& out) {
  const std::vector<PortDecl> raw_in{{"in", PortType::raw_stream}};
  const std::vector<PortDecl> raw_out{{"out", PortType::raw_stream}};
  const std::vector<PortDecl> ep_in{{"in", PortType::epochs}};
  const std::vector<PortDecl> ep_out{{"out", PortType::epochs}};

  out.push_back({{"select.channels", NodeRole::transform, "Keeps the listed channels, in list order", raw_in, raw_out,
                  {param("channels", ParamType::channel_list, nullptr, "channel names or indices", true)}},
                 [](NodeContext c) { return std::make_unique<SelectChannels>(std::move(c)); }});
  out.push_back({{"filt.butter", NodeRole::transform,
                  "Butterworth IIR as second-order sections; changing order or cutoffs resets its state", raw_in,
                  raw_out,
                  {choice_param("type", "bandpass", {"lowpass", "highpass", "bandpass", "bandstop"}, "response type"),
                   integer_param("order", 4, "filter order", 1, 16, true),
                   param("cutoffs", ParamType::number_list, nullptr, "-3 dB edges in Hz", true),
                   param("zero_phase", ParamType::boolean, false, "forward-backward filtering (offline only)")}},
                 [](NodeContext c) { return std::make_unique<ButterNode>(std::move(c)); }});
  out.push_back({{"ref.car", NodeRole::transform, "Common average reference", raw_in, raw_out, {}},
                 [](NodeContext c) { return std::make_unique<CarNode>(std::move(c)); }});
  out.push_back({{"window.kaiser", NodeRole::transform, "Kaiser taper over consecutive blocks of `length` ticks",
                  raw_in, raw_out,
                  {integer_param("length", 250, "block length in ticks", 2, 1 << 20),
                   number_param("beta", 8.6, "shape parameter", 0.0, 50.0)}},
                 [](NodeContext c) { return std::make_unique<KaiserNode>(std::move(c)); }});
  out.push_back({{"epoch.markers", NodeRole::transform, "Cuts marker-locked epochs", raw_in, ep_out,
                  {param("labels", ParamType::string_list, nlohmann::json::array(), "marker labels (empty: all)"),
                   number_param("pre_s", 0.0, "window start relative to the marker"),
                   number_param("post_s", 1.0, "window end relative to the marker"),
                   number_param("offset", 0.0, "clock offset subtracted from marker times")}},
                 [](NodeContext c) { return std::make_unique<EpochNode>(std::move(c)); }});
  out.push_back({{"artifact.amplitude", NodeRole::transform, "Drops epochs whose peak |x| exceeds the threshold",
                  ep_in, ep_out, {number_param("threshold", 100.0, "microvolts", 0.0, std::nullopt, true)}},
                 [](NodeContext c) { return std::make_unique<AmplitudeReject>(std::move(c)); }});
  out.push_back({{"artifact.regression", NodeRole::transform,
                  "Least-squares removal of reference (EOG) activity fitted on a calibration span", raw_in, raw_out,
                  {param("reference", ParamType::channel_list, nlohmann::json::array(),
                         "reference channels (empty: eog-reference roles)"),
                   number_param("calibration_s", 10.0, "calibration span in seconds", 0.01)}},
                 [](NodeContext c) { return std::make_unique<RegressionNode>(std::move(c)); }});
  out.push_back({{"artifact.ica", NodeRole::transform,
                  "FastICA fitted on a calibration span; rejects blink-like components", raw_in,
                  {{"out", PortType::raw_stream}, {"ic", PortType::raw_stream}},
                  {number_param("calibration_s", 10.0, "calibration span in seconds", 0.01),
                   number_param("kurtosis", 5.0, "excess kurtosis threshold"),
                   number_param("channel_corr", 0.6, "frontal correlation threshold", 0.0, 1.0),
                   number_param("tolerance", 1e-4, "convergence tolerance", 0.0),
                   integer_param("max_iterations", 200, "iteration cap", 1)}},
                 [](NodeContext c) { return std::make_unique<IcaNode>(std::move(c)); }});
}

}  // namespace noetic::flow
