#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace noetic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ChannelRole { eeg, eog_reference, sync };

std::string to_string(ChannelRole role);
ChannelRole channel_role_from_string(const std::string& text);

struct ChannelInfo {
  std::string name;
  std::size_t index = 0;
  ChannelRole role = ChannelRole::eeg;

  bool operator==(const ChannelInfo&) const = default;
};

/// Builds channels named "ch0".."chN-1" with the eeg role.
std::vector<ChannelInfo> default_channels(std::size_t count);

/// Throws std::invalid_argument unless names are unique and indices run 0..N-1.
void validate_channels(std::span<const ChannelInfo> channels);

// Timestamped multichannel samples (channels x T, microvolts).
// Sample k sits at t0 + k / fs.
struct SignalBlock {
  Matrix samples;
  double fs = 0.0;
  double t0 = 0.0;
  std::vector<ChannelInfo> channels;

  std::size_t channel_count() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t sample_count() const { return static_cast<std::size_t>(samples.cols()); }
  double time_of(std::size_t k) const { return t0 + static_cast<double>(k) / fs; }
  double duration() const { return static_cast<double>(sample_count()) / fs; }

  void validate() const;
};

struct Marker {
  double t = 0.0;
  std::string label;
  std::optional<int> class_id;

  bool operator==(const Marker&) const = default;
};

void validate_markers(std::span<const Marker> markers);

struct Epoch {
  Matrix data;  // channels x L
  std::optional<int> class_id;
  double marker_t = 0.0;
};

struct EpochSet {
  std::vector<Epoch> epochs;
  double fs = 0.0;
  std::vector<ChannelInfo> channels;
  double pre_s = 0.0;
  double post_s = 0.0;

  std::size_t size() const { return epochs.size(); }
  bool empty() const { return epochs.empty(); }
  /// round((post_s - pre_s) * fs)
  std::size_t epoch_length() const;
  /// Labels of every epoch; throws if any epoch is unlabeled.
  std::vector<int> labels() const;

  /// Throws std::logic_error when epochs disagree on shape.
  void validate() const;
};

struct DroppedMarker {
  std::size_t marker_index = 0;
  Marker marker;
  std::string reason;
};

struct EpochingResult {
  EpochSet epochs;
  std::vector<DroppedMarker> dropped;
};

/// Median of (marker.t - pulse_time) over paired sync events.
double estimate_clock_offset(std::span<const Marker> sync_markers,
                             std::span<const double> sync_pulse_times);

/// Cuts [m.t - offset + pre_s, m.t - offset + post_s) around every marker.
/// Markers whose window leaves the recording are dropped and reported.
EpochingResult epoch_by_markers(const SignalBlock& rec, std::span<const Marker> markers,
                                double pre_s, double post_s, double offset = 0.0);

/// Sample index of time t in a recording starting at t0.
inline long long sample_index(double t, double t0, double fs) {
  return static_cast<long long>(std::llround((t - t0) * fs));
}

}  // namespace noetic
