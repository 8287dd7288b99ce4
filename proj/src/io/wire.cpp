#include "noetic/io/wire.hpp"

#include "bytes.hpp"
#include "noetic/error.hpp"

namespace noetic::io {

FrameKind kind_of(const WireFrame& f) {
  return std::visit(
      [](const auto& v) -> FrameKind {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HeaderFrame>) return FrameKind::header;
        else if constexpr (std::is_same_v<T, DataFrame>) return FrameKind::data;
        else if constexpr (std::is_same_v<T, MarkerFrame>) return FrameKind::marker;
        else return FrameKind::end;
      },
      f);
}

std::string encode_frame(const WireFrame& frame) {
  std::string payload;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HeaderFrame>) {
          payload = header_to_json(v.header).dump();
        } else if constexpr (std::is_same_v<T, DataFrame>) {
          if (v.channels == 0 || v.samples.size() % v.channels != 0)
            throw ProtocolError("data frame must carry whole sample vectors");
          payload.reserve(12 + v.samples.size() * 4);
          detail::put_f64(payload, v.t0);
          detail::put_u32(payload, v.channels);
          for (float s : v.samples) detail::put_f32(payload, s);
        } else if constexpr (std::is_same_v<T, MarkerFrame>) {
          detail::put_f64(payload, v.marker.t);
          detail::put_i32(payload, v.marker.class_id ? *v.marker.class_id : -1);
          detail::put_u32(payload, static_cast<std::uint32_t>(v.marker.label.size()));
          payload += v.marker.label;
        }
      },
      frame);
  const std::size_t length = payload.size() + 1;
  if (length > kMaxFrameLength) throw ProtocolError("frame exceeds 16 MiB limit");
  std::string out;
  out.reserve(4 + length);
  detail::put_u32(out, static_cast<std::uint32_t>(length));
  out.push_back(static_cast<char>(kind_of(frame)));
  out += payload;
  return out;
}

namespace {

WireFrame decode_payload(std::uint8_t kind, std::string_view p) {
  switch (static_cast<FrameKind>(kind)) {
    case FrameKind::header: {
      try {
        return HeaderFrame{header_from_json(nlohmann::json::parse(p))};
      } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("header frame is not JSON: ") + e.what());
      } catch (const FormatError& e) {
        throw ProtocolError(std::string("bad header frame: ") + e.what());
      }
    }
    case FrameKind::data: {
      if (p.size() < 12) throw ProtocolError("data frame too short");
      DataFrame d;
      d.t0 = detail::get_f64(p, 0);
      d.channels = detail::get_u32(p, 8);
      const std::size_t body = p.size() - 12;
      if (d.channels == 0 || body % (4ull * d.channels) != 0)
        throw ProtocolError("data frame does not hold whole sample vectors");
      d.samples.resize(body / 4);
      for (std::size_t i = 0; i < d.samples.size(); ++i) d.samples[i] = detail::get_f32(p, 12 + 4 * i);
      return d;
    }
    case FrameKind::marker: {
      if (p.size() < 16) throw ProtocolError("marker frame too short");
      MarkerFrame m;
      m.marker.t = detail::get_f64(p, 0);
      const std::int32_t cls = detail::get_i32(p, 8);
      if (cls >= 0) m.marker.class_id = cls;
      else if (cls != -1) throw ProtocolError("marker frame has invalid class id");
      const std::uint32_t len = detail::get_u32(p, 12);
      if (p.size() != 16ull + len) throw ProtocolError("marker frame label length mismatch");
      m.marker.label = std::string(p.substr(16));
      return m;
    }
    case FrameKind::end:
      if (!p.empty()) throw ProtocolError("end frame carries a payload");
      return EndFrame{};
  }
  throw ProtocolError("unknown frame kind " + std::to_string(kind));
}

}  // namespace

std::optional<Decoded> try_decode_frame(std::string_view bytes) {
  if (bytes.size() < 4) return std::nullopt;
  const std::uint32_t length = detail::get_u32(bytes, 0);
  if (length > kMaxFrameLength) throw ProtocolError("frame length " + std::to_string(length) + " exceeds 16 MiB limit");
  if (length == 0) throw ProtocolError("frame length 0 has no kind byte");
  if (bytes.size() < 4ull + length) return std::nullopt;
  const auto kind = static_cast<std::uint8_t>(bytes[4]);
  return Decoded{decode_payload(kind, bytes.substr(5, length - 1)), 4ull + length};
}

WireFrame decode_frame(std::string_view bytes) {
  auto d = try_decode_frame(bytes);
  if (!d) throw ProtocolError("incomplete frame");
  if (d->consumed != bytes.size()) throw ProtocolError("trailing bytes after frame");
  return std::move(d->frame);
}

std::vector<WireFrame> decode_frames(std::string_view bytes) {
  std::vector<WireFrame> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto d = try_decode_frame(bytes.substr(pos));
    if (!d) throw ProtocolError("truncated frame at byte offset " + std::to_string(pos));
    out.push_back(std::move(d->frame));
    pos += d->consumed;
  }
  return out;
}

void FrameDecoder::feed(std::string_view bytes) {
  if (pos_ > 0 && pos_ >= buffer_.size() / 2) {
    buffer_.erase(0, pos_);
    pos_ = 0;
  }
  buffer_.append(bytes);
}

std::optional<WireFrame> FrameDecoder::next() {
  auto d = try_decode_frame(std::string_view(buffer_).substr(pos_));
  if (!d) return std::nullopt;
  pos_ += d->consumed;
  return std::move(d->frame);
}

DataFrame make_data_frame(const SignalBlock& block, std::size_t first, std::size_t count) {
  DataFrame d;
  d.t0 = block.time_of(first);
  d.channels = static_cast<std::uint32_t>(block.channel_count());
  d.samples.reserve(count * d.channels);
  for (std::size_t t = first; t < first + count; ++t)
    for (std::size_t c = 0; c < d.channels; ++c)
      d.samples.push_back(static_cast<float>(block.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t))));
  return d;
}

std::vector<WireFrame> recording_to_frames(const Recording& rec, std::size_t chunk) {
  if (chunk == 0) throw std::invalid_argument("chunk size must be >= 1");
  std::vector<WireFrame> frames;
  frames.push_back(HeaderFrame{header_of(rec.block, rec.subject_tag)});
  std::size_t next_marker = 0;
  const std::size_t total = rec.block.sample_count();
  for (std::size_t first = 0; first < total; first += chunk) {
    const std::size_t count = std::min(chunk, total - first);
    frames.push_back(make_data_frame(rec.block, first, count));
    const double covered = rec.block.time_of(first + count);
    while (next_marker < rec.markers.size() && rec.markers[next_marker].t < covered)
      frames.push_back(MarkerFrame{rec.markers[next_marker++]});
  }
  while (next_marker < rec.markers.size()) frames.push_back(MarkerFrame{rec.markers[next_marker++]});
  frames.push_back(EndFrame{});
  return frames;
}

}  // namespace noetic::io
