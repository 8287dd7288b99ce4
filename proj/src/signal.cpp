#include "noetic/signal.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace noetic {

std::string to_string(ChannelRole role) {
  switch (role) {
    case ChannelRole::eeg: return "eeg";
    case ChannelRole::eog_reference: return "eog-reference";
    case ChannelRole::sync: return "sync";
  }
  return "eeg";
}

ChannelRole channel_role_from_string(const std::string& text) {
  if (text == "eeg") return ChannelRole::eeg;
  if (text == "eog-reference") return ChannelRole::eog_reference;
  if (text == "sync") return ChannelRole::sync;
  throw std::invalid_argument("unknown channel role '" + text + "'");
}

std::vector<ChannelInfo> default_channels(std::size_t count) {
  std::vector<ChannelInfo> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back({"ch" + std::to_string(i), i, ChannelRole::eeg});
  return out;
}

void validate_channels(std::span<const ChannelInfo> channels) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].index != i)
      throw std::invalid_argument("channel '" + channels[i].name + "' has index " +
                                  std::to_string(channels[i].index) + ", expected " + std::to_string(i));
    if (!seen.insert(channels[i].name).second)
      throw std::invalid_argument("duplicate channel name '" + channels[i].name + "'");
  }
}

void SignalBlock::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw std::invalid_argument("invalid recording: fs must be > 0");
  if (!std::isfinite(t0)) throw std::invalid_argument("invalid recording: t0 not finite");
  if (samples.cols() < 1) throw std::invalid_argument("invalid recording: no samples");
  if (channels.size() != channel_count())
    throw std::invalid_argument("invalid recording: channel list does not match sample rows");
  validate_channels(channels);
  if (!samples.allFinite()) throw std::invalid_argument("invalid recording: non-finite sample");
}

void validate_markers(std::span<const Marker> markers) {
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (!std::isfinite(markers[i].t)) throw std::invalid_argument("marker " + std::to_string(i) + " has non-finite time");
    if (markers[i].class_id && *markers[i].class_id < 0)
      throw std::invalid_argument("marker " + std::to_string(i) + " has negative class id");
    if (i > 0 && markers[i].t < markers[i - 1].t)
      throw std::invalid_argument("markers not sorted by time at index " + std::to_string(i));
  }
}

std::size_t EpochSet::epoch_length() const {
  return static_cast<std::size_t>(std::llround((post_s - pre_s) * fs));
}

std::vector<int> EpochSet::labels() const {
  std::vector<int> out;
  out.reserve(epochs.size());
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (!epochs[i].class_id) throw std::invalid_argument("epoch " + std::to_string(i) + " has no class label");
    out.push_back(*epochs[i].class_id);
  }
  return out;
}

void EpochSet::validate() const {
  if (!(pre_s < post_s)) throw std::logic_error("epoch set: pre_s must be < post_s");
  const auto len = static_cast<Eigen::Index>(epoch_length());
  for (const auto& e : epochs) {
    if (e.data.cols() != len || e.data.rows() != static_cast<Eigen::Index>(channels.size()))
      throw std::logic_error("epoch set: inconsistent epoch shape");
  }
}

double estimate_clock_offset(std::span<const Marker> sync_markers, std::span<const double> sync_pulse_times) {
  if (sync_markers.empty() || sync_pulse_times.empty()) throw std::invalid_argument("no sync events");
  if (sync_markers.size() != sync_pulse_times.size())
    throw std::invalid_argument("sync marker count differs from pulse count");
  std::vector<double> diffs(sync_markers.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i] = sync_markers[i].t - sync_pulse_times[i];
  std::sort(diffs.begin(), diffs.end());
  const std::size_t n = diffs.size();
  if (n % 2 == 1) return diffs[n / 2];
  return 0.5 * (diffs[n / 2 - 1] + diffs[n / 2]);
}

EpochingResult epoch_by_markers(const SignalBlock& rec, std::span<const Marker> markers, double pre_s,
                                double post_s, double offset) {
  if (!(rec.fs > 0.0)) throw std::invalid_argument("invalid recording: fs must be > 0");
  if (!(pre_s < post_s)) throw std::invalid_argument("epoch window requires pre_s < post_s");
  if (rec.sample_count() == 0) throw std::invalid_argument("invalid recording: no samples");

  EpochingResult result;
  result.epochs.fs = rec.fs;
  result.epochs.channels = rec.channels;
  result.epochs.pre_s = pre_s;
  result.epochs.post_s = post_s;
  const auto len = static_cast<long long>(result.epochs.epoch_length());
  const auto total = static_cast<long long>(rec.sample_count());

  std::vector<std::size_t> order(markers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return markers[a].t < markers[b].t; });

  for (std::size_t idx : order) {
    const Marker& m = markers[idx];
    const long long start = sample_index(m.t - offset + pre_s, rec.t0, rec.fs);
    if (start < 0 || start + len > total || len <= 0) {
      result.dropped.push_back({idx, m, start < 0 ? "window starts before recording" : "window ends after recording"});
      continue;
    }
    Epoch e;
    e.data = rec.samples.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
    e.class_id = m.class_id;
    e.marker_t = m.t;
    result.epochs.epochs.push_back(std::move(e));
  }
  return result;
}

}  // namespace noetic
