#pragma once

#include "noetic/io/recording.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace noetic::io {

struct NoiseSpec {
  double pink_gain = 1.0;
  double white_gain = 0.0;
};

struct SsvepComponent {
  double frequency = 10.0;
  std::vector<std::size_t> channels;
  double amplitude = 1.0;
  std::vector<std::pair<double, double>> on_intervals;  // empty: always on, no marker
  std::string label;                                    // default "ssvep:<f>"
  std::optional<int> class_id;
};

struct ErpComponent {
  std::string label;
  int class_id = 0;
  double latency_s = 0.3;
  double amplitude = 5.0;
  std::vector<double> onsets;
  std::vector<std::size_t> channels;  // empty: every channel
};

struct BlinkSpec {
  double rate_per_min = 0.0;
  double amplitude = 100.0;
  std::vector<std::size_t> channels;
  std::vector<double> gains;  // per entry of `channels`; empty: all 1
};

struct SynthSpec {
  double duration_s = 10.0;
  double fs = 256.0;
  std::size_t n_channels = 8;
  double t0 = 0.0;
  NoiseSpec noise;
  std::vector<SsvepComponent> ssvep;
  std::vector<ErpComponent> erp;
  BlinkSpec blink;
  std::vector<std::size_t> eog_channels;
  std::vector<std::string> channel_names;
  std::uint64_t seed = 0;

  void validate() const;
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

/// Deterministic for a fixed seed. Samples are rounded to float32 so a
/// file or wire round trip is lossless.
Recording synth_recording(const SynthSpec& spec);

/// Voss-McCartney pink noise (16 rows, unit variance per sample).
std::vector<double> pink_noise(std::size_t n, std::uint64_t seed);

/// Raised-cosine bump of the given width centred on zero, peak 1.
double raised_cosine(double dt, double width);

}  // namespace noetic::io
