#pragma once

#include "noetic/classify/classifier.hpp"
#include "noetic/features/feature_vector.hpp"
#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace noetic::flow {

struct StreamInfo {
  double fs = 0.0;
  double t0 = 0.0;  // time of global sample 0
  std::vector<ChannelInfo> channels;
  std::string unit = "microvolt";
  std::string subject_tag;
};

// Consecutive ticks of a stream. `first` counts samples since stream start,
// so times never accumulate rounding from chunk boundaries.
struct RawChunk {
  std::shared_ptr<const StreamInfo> info;
  Matrix samples;  // channels x ticks
  std::size_t first = 0;
  std::vector<Marker> markers;  // markers that arrived with this chunk

  double t0() const { return info->t0 + static_cast<double>(first) / info->fs; }
};

struct DecisionRow {
  double marker_t = 0.0;
  int class_id = 0;
  std::vector<double> scores;
  std::optional<int> truth;

  bool operator==(const DecisionRow&) const = default;
};

struct LabelBatch {
  std::vector<DecisionRow> rows;
};

struct ModelPacket {
  classify::ClassifierModel model;
  nlohmann::json report;
};

// Per-epoch spectra: one channels x freqs matrix per epoch.
struct SpectrumBatch {
  std::string kind;  // "fft" or "periodogram"
  std::vector<double> freqs;
  std::vector<std::string> channels;
  std::vector<Matrix> power;
  std::vector<double> marker_t;
};

struct EventBatch {
  std::vector<Marker> events;
};

struct PlotPayload {
  std::vector<double> x;               // seconds or Hz
  std::vector<std::vector<double>> y;  // one series per channel
  std::vector<std::string> series;
};

struct PlotFrame {
  std::string session;
  std::string node;
  std::string kind;  // raw, filtered, ic, fft, periodogram, decision
  double t = 0.0;    // source frame t0
  std::uint64_t seq = 0;
  PlotPayload payload;
};

inline constexpr std::size_t kMaxPlotPoints = 2048;

nlohmann::json to_json(const PlotFrame& f);
nlohmann::json to_json(const DecisionRow& d);

/// Picks evenly spaced samples so channels x points stays within the cap.
PlotPayload decimate(const Matrix& samples, double t0, double fs, const std::vector<std::string>& names,
                     std::size_t max_points = kMaxPlotPoints);

using Packet = std::variant<std::shared_ptr<const RawChunk>, std::shared_ptr<const EpochSet>,
                            std::shared_ptr<const features::FeatureMatrix>, std::shared_ptr<const LabelBatch>,
                            std::shared_ptr<const ModelPacket>, std::shared_ptr<const SpectrumBatch>,
                            std::shared_ptr<const EventBatch>, std::shared_ptr<const PlotFrame>>;

}  // namespace noetic::flow
