#pragma once

#include "noetic/signal.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace noetic::stim {

// Times in seconds. Weights set how often each class is shown.
struct ErpScheduleSpec {
  double cue_time_s = 1.0;
  double buffer_time_s = 0.5;
  double fixation_time_s = 2.0;
  std::size_t n_classes = 2;
  std::size_t trial_count = 10;
  std::vector<double> weights;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SsvepStimulus {
  std::string label;
  double frequency = 10.0;
};

struct SsvepScheduleSpec {
  std::vector<SsvepStimulus> stimuli;
  double duration_s = 1.0;

  void validate() const;
};

struct StimulusEvent {
  double t_on = 0.0;
  double t_off = 0.0;
  std::string label;
  std::optional<int> class_id;

  bool operator==(const StimulusEvent&) const = default;
};

struct StimulusTimeline {
  std::vector<StimulusEvent> events;
  double total_duration_s = 0.0;

  /// Onset markers, ready for epoching or a marker file.
  std::vector<Marker> markers() const;
};

/// (cue + buffer) * trials + fixation
double schedule_duration(const ErpScheduleSpec& spec);

/// Largest-remainder apportionment of `total` over `weights`; ties go to the
/// lower class index.
std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total);

StimulusTimeline build_erp_schedule(const ErpScheduleSpec& spec);
StimulusTimeline build_ssvep_schedule(const SsvepScheduleSpec& spec);
StimulusTimeline build_calibration_schedule(std::size_t n_beeps, double interval_s);

}  // namespace noetic::stim
