#include "noetic/flow/node.hpp"

#include "noetic/error.hpp"

#include <algorithm>
#include <cmath>

namespace noetic::flow {

void Node::set_param(const std::string& name, const nlohmann::json&) {
  fail("param '" + name + "' cannot be changed while running");
}

void Node::fail(const std::string& message) const { throw Error(message); }

namespace {

const std::vector<NodeEntry>& entries() {
  static const std::vector<NodeEntry> all = [] {
    std::vector<NodeEntry> v;
    register_source_nodes(v);
    register_preprocess_nodes(v);
    register_feature_nodes(v);
    register_classify_nodes(v);
    register_sink_nodes(v);
    std::sort(v.begin(), v.end(), [](const NodeEntry& a, const NodeEntry& b) { return a.info.kind < b.info.kind; });
    return v;
  }();
  return all;
}

}  // namespace

const std::vector<NodeKindInfo>& node_catalog() {
  static const std::vector<NodeKindInfo> infos = [] {
    std::vector<NodeKindInfo> v;
    for (const auto& e : entries()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

std::unique_ptr<Node> create_node(const NodeContext& ctx) {
  for (const auto& e : entries())
    if (e.info.kind == ctx.kind) return e.factory(ctx);
  throw SpecError("unknown node kind '" + ctx.kind + "'");
}

ParamDecl number_param(std::string name, double def, std::string help, std::optional<double> min,
                       std::optional<double> max, bool tunable) {
  ParamDecl p{std::move(name), ParamType::number, def, tunable, std::move(help), min, max, {}};
  return p;
}

ParamDecl integer_param(std::string name, long long def, std::string help, std::optional<double> min,
                        std::optional<double> max, bool tunable) {
  ParamDecl p{std::move(name), ParamType::integer, def, tunable, std::move(help), min, max, {}};
  return p;
}

ParamDecl choice_param(std::string name, std::string def, std::vector<std::string> choices, std::string help,
                       bool tunable) {
  ParamDecl p{std::move(name), ParamType::string, def, tunable, std::move(help), {}, {}, std::move(choices)};
  return p;
}

ParamDecl param(std::string name, ParamType type, nlohmann::json def, std::string help, bool tunable) {
  ParamDecl p{std::move(name), type, std::move(def), tunable, std::move(help), {}, {}, {}};
  return p;
}

std::shared_ptr<const RawChunk> whole_block_chunk(const SignalBlock& block, const std::vector<Marker>& markers,
                                                  const std::string& subject_tag) {
  auto info = std::make_shared<StreamInfo>();
  info->fs = block.fs;
  info->t0 = block.t0;
  info->channels = block.channels;
  info->subject_tag = subject_tag;
  auto chunk = std::make_shared<RawChunk>();
  chunk->info = info;
  chunk->samples = block.samples;
  chunk->markers = markers;
  return chunk;
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

PlotPayload decimate(const Matrix& samples, double t0, double fs, const std::vector<std::string>& names,
                     std::size_t max_points) {
  PlotPayload p;
  const auto channels = static_cast<std::size_t>(samples.rows());
  const auto n = static_cast<std::size_t>(samples.cols());
  if (channels == 0 || n == 0) return p;
  const std::size_t per_channel = std::max<std::size_t>(1, max_points / channels);
  const std::size_t keep = std::min(n, per_channel);
  std::vector<std::size_t> idx(keep);
  for (std::size_t i = 0; i < keep; ++i)
    idx[i] = keep == 1 ? 0 : static_cast<std::size_t>(std::llround(static_cast<double>(i) * (n - 1) / (keep - 1)));
  for (auto i : idx) p.x.push_back(t0 + static_cast<double>(i) / fs);
  const std::size_t shown = std::min(channels, max_points);  // one point per series at least
  for (std::size_t c = 0; c < shown; ++c) {
    std::vector<double> y;
    y.reserve(keep);
    for (auto i : idx) y.push_back(samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)));
    p.y.push_back(std::move(y));
    p.series.push_back(c < names.size() ? names[c] : "ch" + std::to_string(c));
  }
  return p;
}

nlohmann::json to_json(const PlotFrame& f) {
  return {{"session", f.session}, {"node", f.node},          {"kind", f.kind},
          {"t", f.t},             {"seq", f.seq},            {"x", f.payload.x},
          {"y", f.payload.y},     {"series", f.payload.series}};
}

nlohmann::json to_json(const DecisionRow& d) {
  nlohmann::json j{{"marker_t", d.marker_t}, {"class_id", d.class_id}, {"scores", d.scores}};
  j["truth"] = d.truth ? nlohmann::json(*d.truth) : nlohmann::json(nullptr);
  return j;
}

}  // namespace noetic::flow
