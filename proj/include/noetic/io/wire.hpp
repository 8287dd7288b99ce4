#pragma once

#include "noetic/io/recording.hpp"
#include "noetic/signal.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace noetic::io {

// Frame layout on the byte stream:
//   u32 little-endian length (kind byte + payload) | u8 kind | payload
// Payloads:
//   header: UTF-8 JSON recording header
//   data:   f64 t0 | u32 channel count | f32 samples, channel-interleaved
//   marker: f64 t | i32 class id (-1 = none) | u32 label bytes | label
//   end:    empty
enum class FrameKind : std::uint8_t { header = 1, data = 2, marker = 3, end = 4 };

inline constexpr std::uint32_t kMaxFrameLength = 16u * 1024u * 1024u;

struct HeaderFrame {
  RecordingHeader header;
  bool operator==(const HeaderFrame&) const = default;
};

struct DataFrame {
  double t0 = 0.0;
  std::uint32_t channels = 0;
  std::vector<float> samples;  // tick-major: samples[t * channels + c]

  std::size_t ticks() const { return channels == 0 ? 0 : samples.size() / channels; }
  bool operator==(const DataFrame&) const = default;
};

struct MarkerFrame {
  Marker marker;
  bool operator==(const MarkerFrame&) const = default;
};

struct EndFrame {
  bool operator==(const EndFrame&) const = default;
};

using WireFrame = std::variant<HeaderFrame, DataFrame, MarkerFrame, EndFrame>;

FrameKind kind_of(const WireFrame& f);

std::string encode_frame(const WireFrame& frame);

struct Decoded {
  WireFrame frame;
  std::size_t consumed = 0;
};

/// Decodes the first frame of `bytes`. Returns nullopt when more bytes are
/// needed; throws ProtocolError on an invalid prefix or payload.
std::optional<Decoded> try_decode_frame(std::string_view bytes);

/// Decodes exactly one complete frame.
WireFrame decode_frame(std::string_view bytes);

/// Splits a complete byte stream into frames.
std::vector<WireFrame> decode_frames(std::string_view bytes);

// Incremental decoder for socket reads.
class FrameDecoder {
 public:
  void feed(std::string_view bytes);
  std::optional<WireFrame> next();
  std::size_t buffered() const { return buffer_.size() - pos_; }

 private:
  std::string buffer_;
  std::size_t pos_ = 0;
};

DataFrame make_data_frame(const SignalBlock& block, std::size_t first, std::size_t count);

/// Converts a recording into the frame sequence a live producer would send:
/// header, data chunks of `chunk` ticks with markers interleaved once their
/// time has been reached, then end.
std::vector<WireFrame> recording_to_frames(const Recording& rec, std::size_t chunk);

}  // namespace noetic::io
