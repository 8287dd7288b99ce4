#pragma once

#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace noetic::io {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kMagic = "NEEG";

struct RecordingHeader {
  int format_version = kFormatVersion;
  double fs = 0.0;
  std::vector<ChannelInfo> channels;
  std::string unit = "microvolt";
  double start_time = 0.0;
  std::string subject_tag;

  bool operator==(const RecordingHeader&) const = default;
  void validate() const;
};

nlohmann::json header_to_json(const RecordingHeader& h);
RecordingHeader header_from_json(const nlohmann::json& j);

RecordingHeader header_of(const SignalBlock& block, std::string subject_tag = {});

struct Recording {
  SignalBlock block;
  std::vector<Marker> markers;
  std::string subject_tag;
};

nlohmann::json marker_to_json(const Marker& m);
Marker marker_from_json(const nlohmann::json& j);

// .neeg layout: compact JSON header with sorted keys, the two-byte sentinel
// "\n\0", channel-interleaved little-endian float32 samples, then one JSON
// object per marker per line.
std::string encode_recording(const Recording& rec);
Recording decode_recording(std::string_view bytes);

void write_recording(const Recording& rec, const std::filesystem::path& path);
Recording read_recording(const std::filesystem::path& path);

/// Writes bytes to a sibling temp file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// CSV import: first row holds channel names, every further row one tick.
Recording read_csv(const std::filesystem::path& path, double fs);

/// Marker list as JSON lines (shared by stimulus timelines and the trailer).
std::string markers_to_jsonl(const std::vector<Marker>& markers);
std::vector<Marker> markers_from_jsonl(std::string_view text);

}  // namespace noetic::io
