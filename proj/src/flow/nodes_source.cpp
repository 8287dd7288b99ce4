#include "noetic/flow/node.hpp"
#include "noetic/io/synth.hpp"

namespace noetic::flow {

namespace {

class ReplaySource : public SourceNode {
 public:
  using SourceNode::SourceNode;
  io::Recording load() const override {
    const auto path = param("path").get<std::string>();
    if (path.empty()) fail("source.replay has no path and no recording was supplied");
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
      const double fs = param("fs").get<double>();
      if (!(fs > 0.0)) fail("CSV replay needs param fs");
      return io::read_csv(path, fs);
    }
    return io::read_recording(path);
  }
};

class SynthSource : public SourceNode {
 public:
  using SourceNode::SourceNode;
  io::Recording load() const override {
    auto j = param("spec");
    if (!j.contains("seed")) j["seed"] = ctx_.seed;
    return io::synth_recording(io::synth_spec_from_json(j));
  }
};

class StreamSource : public SourceNode {
 public:
  using SourceNode::SourceNode;
  io::Recording load() const override {
    fail("source.stream reads a live connection; supply a recording for offline runs");
  }
};

ParamDecl chunk_param() { return integer_param("chunk", 32, "ticks per data frame when replaying", 1, 1 << 20); }

}  // namespace

void register_source_nodes(std::vector<NodeEntry>& out) {
  const std::vector<PortDecl> raw_out{{"out", PortType::raw_stream}};
  out.push_back({{"source.replay", NodeRole::source, "Replays a .neeg or CSV recording", {}, raw_out,
                  {param("path", ParamType::string, "", "recording path"),
                   number_param("fs", 0.0, "sampling rate for CSV input", 0.0), chunk_param()}},
                 [](NodeContext c) { return std::make_unique<ReplaySource>(std::move(c)); }});
  out.push_back({{"source.synth", NodeRole::source, "Synthetic EEG from a generator spec", {}, raw_out,
                  {param("spec", ParamType::object, nlohmann::json::object(), "generator spec"), chunk_param()}},
                 [](NodeContext c) { return std::make_unique<SynthSource>(std::move(c)); }});
  out.push_back({{"source.stream", NodeRole::source, "Live frames from the TCP wire protocol", {}, raw_out,
                  {param("host", ParamType::string, "127.0.0.1", "producer host"),
                   integer_param("port", 0, "producer port", 0, 65535), chunk_param()}},
                 [](NodeContext c) { return std::make_unique<StreamSource>(std::move(c)); }});
}

}  // namespace noetic::flow
