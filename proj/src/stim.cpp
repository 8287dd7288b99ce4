#include "noetic/stim.hpp"

#include "noetic/error.hpp"
#include "noetic/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace noetic::stim {

namespace {

// Classes at or below this weight are "rare" and kept apart when possible.
constexpr double kRareWeight = 0.2;

bool feasible(const std::vector<std::size_t>& counts, const std::vector<bool>& rare, int prev) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (!rare[c] || counts[c] == 0) continue;
    const std::size_t others = total - counts[c];
    const std::size_t allowed = static_cast<int>(c) == prev ? others : others + 1;
    if (counts[c] > allowed) return false;
  }
  return true;
}

std::size_t weighted_pick(const std::vector<std::size_t>& candidates, const std::vector<std::size_t>& counts,
                          Rng& rng) {
  std::size_t total = 0;
  for (auto c : candidates) total += counts[c];
  std::uint64_t r = rng.below(total);
  for (auto c : candidates) {
    if (r < counts[c]) return c;
    r -= counts[c];
  }
  return candidates.back();
}

}  // namespace

void ErpScheduleSpec::validate() const {
  if (!(cue_time_s >= 0.0) || !(buffer_time_s >= 0.0) || !(fixation_time_s >= 0.0))
    throw SpecError("erp schedule: times must be >= 0");
  if (trial_count < 1) throw SpecError("erp schedule: trial_count must be >= 1");
  if (n_classes < 1) throw SpecError("erp schedule: n_classes must be >= 1");
  if (weights.size() != n_classes)
    throw SpecError("erp schedule: expected " + std::to_string(n_classes) + " weights, got " +
                    std::to_string(weights.size()));
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw SpecError("erp schedule: weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw SpecError("erp schedule: weights must sum to 1");
}

void SsvepScheduleSpec::validate() const {
  if (!(duration_s > 0.0)) throw SpecError("ssvep schedule: duration_s must be > 0");
  std::set<double> seen;
  for (const auto& s : stimuli) {
    if (!(s.frequency > 0.0)) throw SpecError("ssvep schedule: frequencies must be > 0");
    if (!seen.insert(s.frequency).second) throw SpecError("ssvep schedule: frequencies must be distinct");
  }
}

std::vector<Marker> StimulusTimeline::markers() const {
  std::vector<Marker> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back({e.t_on, e.label, e.class_id});
  return out;
}

double schedule_duration(const ErpScheduleSpec& spec) {
  spec.validate();
  return (spec.cue_time_s + spec.buffer_time_s) * static_cast<double>(spec.trial_count) + spec.fixation_time_s;
}

std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<double> remainder(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = weights[i] * static_cast<double>(total);
    // Snap quotas that are integral up to rounding noise (0.1 * 20 etc).
    double whole = std::floor(quota + 1e-9);
    counts[i] = static_cast<std::size_t>(whole);
    remainder[i] = std::max(0.0, quota - whole);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total && k < order.size(); ++k, ++assigned) ++counts[order[k]];
  return counts;
}

StimulusTimeline build_erp_schedule(const ErpScheduleSpec& spec) {
  spec.validate();
  auto counts = apportion(spec.weights, spec.trial_count);
  std::vector<bool> rare(spec.n_classes);
  for (std::size_t c = 0; c < spec.n_classes; ++c) rare[c] = spec.weights[c] <= kRareWeight;

  Rng rng(spec.seed);
  std::vector<std::size_t> sequence;
  sequence.reserve(spec.trial_count);
  int prev = -1;
  for (std::size_t k = 0; k < spec.trial_count; ++k) {
    std::vector<std::size_t> ok, fallback;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) continue;
      if (rare[c] && static_cast<int>(c) == prev) continue;
      fallback.push_back(c);
      --counts[c];
      if (feasible(counts, rare, static_cast<int>(c))) ok.push_back(c);
      ++counts[c];
    }
    if (fallback.empty())
      for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] > 0) fallback.push_back(c);
    const std::size_t pick = weighted_pick(ok.empty() ? fallback : ok, counts, rng);
    --counts[pick];
    sequence.push_back(pick);
    prev = static_cast<int>(pick);
  }

  StimulusTimeline tl;
  const double step = spec.cue_time_s + spec.buffer_time_s;
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    const double t_on = spec.fixation_time_s + static_cast<double>(k) * step;
    tl.events.push_back({t_on, t_on + spec.cue_time_s, "class" + std::to_string(sequence[k]),
                         static_cast<int>(sequence[k])});
  }
  tl.total_duration_s = schedule_duration(spec);
  return tl;
}

StimulusTimeline build_ssvep_schedule(const SsvepScheduleSpec& spec) {
  spec.validate();
  StimulusTimeline tl;
  for (std::size_t s = 0; s < spec.stimuli.size(); ++s) {
    const double f = spec.stimuli[s].frequency;
    const double half = 1.0 / (2.0 * f);
    const auto count = static_cast<std::size_t>(std::floor(2.0 * f * spec.duration_s + 1e-9));
    // The stimulus starts lit at t = 0; each event is one state change.
    for (std::size_t k = 1; k <= count; ++k) {
      const double t = static_cast<double>(k) * half;
      tl.events.push_back({t, std::min(t + half, spec.duration_s), spec.stimuli[s].label, static_cast<int>(s)});
    }
  }
  std::stable_sort(tl.events.begin(), tl.events.end(), [](auto& a, auto& b) { return a.t_on < b.t_on; });
  tl.total_duration_s = spec.duration_s;
  return tl;
}

StimulusTimeline build_calibration_schedule(std::size_t n_beeps, double interval_s) {
  if (n_beeps < 1) throw SpecError("calibration schedule: n_beeps must be >= 1");
  if (!(interval_s > 0.0)) throw SpecError("calibration schedule: interval_s must be > 0");
  StimulusTimeline tl;
  for (std::size_t k = 0; k < n_beeps; ++k) {
    const double t = static_cast<double>(k) * interval_s;
    tl.events.push_back({t, t, "beep", std::nullopt});
  }
  tl.total_duration_s = static_cast<double>(n_beeps - 1) * interval_s;
  return tl;
}

}  // namespace noetic::stim
