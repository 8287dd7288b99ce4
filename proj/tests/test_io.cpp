#include "doctest.h"

#include "noetic/error.hpp"
#include "noetic/io/recording.hpp"
#include "noetic/io/synth.hpp"
#include "noetic/io/wire.hpp"
#include "noetic/rng.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>

using namespace noetic;
using namespace noetic::io;

namespace {

Recording random_recording(std::size_t channels, std::size_t n, double fs, std::uint64_t seed) {
  Rng rng(seed);
  Recording r;
  r.block.fs = fs;
  r.block.t0 = rng.uniform(0, 100);
  r.block.channels = default_channels(channels);
  r.block.samples.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < r.block.samples.size(); ++i)
    r.block.samples.data()[i] = static_cast<float>(rng.normal() * 50.0);
  return r;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("noetic_test_" + name);
}

}  // namespace

TEST_CASE("recording round trip is byte-identical") {
  auto rec = random_recording(2, 128, 128.0, 7);
  rec.markers = {{0.25, "cue", 1}, {0.5, "blink", std::nullopt}};
  const auto path = temp_path("rt.neeg");
  write_recording(rec, path);
  auto back = read_recording(path);
  CHECK(back.block.samples == rec.block.samples);
  CHECK(back.block.fs == rec.block.fs);
  CHECK(back.block.t0 == rec.block.t0);
  CHECK(back.block.channels == rec.block.channels);
  CHECK(back.markers == rec.markers);
  CHECK(encode_recording(back) == read_file(path));
  std::filesystem::remove(path);
}

TEST_CASE("empty marker list round trips") {
  auto rec = random_recording(1, 4, 10.0, 1);
  auto back = decode_recording(encode_recording(rec));
  CHECK(back.markers.empty());
}

TEST_CASE("unsupported version and bad magic are rejected") {
  auto rec = random_recording(1, 4, 10.0, 1);
  std::string bytes = encode_recording(rec);
  std::string v99 = bytes;
  auto pos = v99.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  v99.replace(pos, 18, "\"format_version\":99");
  CHECK_THROWS_AS(decode_recording(v99), FormatError);
  CHECK_THROWS_WITH(decode_recording(v99), doctest::Contains("version 99"));
  CHECK_THROWS_AS(decode_recording("garbage bytes here"), FormatError);
}

TEST_CASE("truncated data names the byte offset") {
  auto rec = random_recording(2, 16, 10.0, 3);
  std::string bytes = encode_recording(rec);
  const auto header_end = bytes.find(std::string_view("\n\0", 2)) + 2;
  std::string cut = bytes.substr(0, header_end + 40);
  try {
    decode_recording(cut);
    FAIL("expected corruption error");
  } catch (const CorruptionError& e) {
    CHECK(e.offset() == header_end + 40);
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
}

TEST_CASE("csv import") {
  const auto path = temp_path("in.csv");
  {
    std::ofstream out(path);
    out << "Fz,Cz\n1.5,2\n-3,4.25\n";
  }
  auto rec = read_csv(path, 250.0);
  CHECK(rec.block.channels[1].name == "Cz");
  CHECK(rec.block.samples(0, 1) == -3.0);
  CHECK(rec.block.sample_count() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("wire frames") {
  SUBCASE("end frame is prefix + kind") {
    auto bytes = encode_frame(EndFrame{});
    CHECK(bytes.size() == 5);
    CHECK(bytes[0] == 1);
    CHECK(bytes[4] == static_cast<char>(FrameKind::end));
  }
  SUBCASE("marker frame round trips") {
    WireFrame f = MarkerFrame{{1.5, "cue", std::nullopt}};
    CHECK(decode_frame(encode_frame(f)) == f);
  }
  SUBCASE("concatenated frames decode in order") {
    std::vector<WireFrame> frames{MarkerFrame{{1.5, "cue", 2}}, DataFrame{0.25, 2, {1.f, 2.f, 3.f, 4.f}}, EndFrame{}};
    std::string stream;
    for (const auto& f : frames) stream += encode_frame(f);
    CHECK(decode_frames(stream) == frames);

    FrameDecoder dec;
    std::vector<WireFrame> got;
    for (char c : stream) {
      dec.feed(std::string_view(&c, 1));
      while (auto f = dec.next()) got.push_back(std::move(*f));
    }
    CHECK(got == frames);
  }
  SUBCASE("oversized length and unknown kind are protocol errors") {
    std::string big{"\x01\x00\x00\x02\x04", 5};
    CHECK_THROWS_AS(decode_frame(big), ProtocolError);
    std::string unknown{"\x01\x00\x00\x00\x09", 5};
    CHECK_THROWS_WITH_AS(decode_frame(unknown), doctest::Contains("unknown frame kind"), ProtocolError);
  }
  SUBCASE("ragged data frames are rejected") {
    CHECK_THROWS_AS(encode_frame(DataFrame{0.0, 3, {1.f, 2.f}}), ProtocolError);
  }
}

TEST_CASE("recording_to_frames interleaves markers after covering data") {
  auto rec = random_recording(2, 100, 100.0, 5);
  rec.block.t0 = 0.0;
  rec.markers = {{0.05, "a", 0}, {0.55, "b", 1}};
  auto frames = recording_to_frames(rec, 10);
  CHECK(std::holds_alternative<HeaderFrame>(frames.front()));
  CHECK(std::holds_alternative<EndFrame>(frames.back()));
  CHECK(std::holds_alternative<MarkerFrame>(frames[2]));
  std::size_t ticks = 0;
  for (auto& f : frames)
    if (auto* d = std::get_if<DataFrame>(&f)) ticks += d->ticks();
  CHECK(ticks == 100);
}

TEST_CASE("synth: pure tone") {
  SynthSpec s;
  s.duration_s = 2.0;
  s.fs = 256.0;
  s.n_channels = 2;
  s.noise = {0.0, 0.0};
  s.ssvep.push_back({10.0, {0}, 1.0, {}, "", std::nullopt});
  auto rec = synth_recording(s);
  for (Eigen::Index i = 0; i < rec.block.samples.cols(); ++i) {
    const double t = static_cast<double>(i) / 256.0;
    CHECK(std::abs(rec.block.samples(0, i) - std::sin(2 * std::numbers::pi * 10 * t)) < 1e-6);
    CHECK(rec.block.samples(1, i) == 0.0);
  }
}

TEST_CASE("synth: determinism and markers") {
  SynthSpec s;
  s.duration_s = 5.0;
  s.n_channels = 3;
  s.seed = 99;
  s.noise.white_gain = 0.5;
  s.ssvep.push_back({12.0, {1}, 2.0, {{1.0, 2.0}, {3.0, 4.0}}, "flick", 1});
  s.erp.push_back({"p3", 0, 0.3, 5.0, {0.5, 2.5}, {}});
  s.blink = {20.0, 80.0, {0}, {}};
  auto a = encode_recording(synth_recording(s));
  auto b = encode_recording(synth_recording(s));
  CHECK(a == b);
  s.seed = 100;
  CHECK(encode_recording(synth_recording(s)) != a);

  auto rec = synth_recording(s);
  int ssvep = 0, erp = 0, blinks = 0;
  for (const auto& m : rec.markers) {
    if (m.label == "flick") ++ssvep;
    if (m.label == "p3") ++erp;
    if (m.label == "blink") ++blinks;
  }
  CHECK(ssvep == 2);
  CHECK(erp == 2);
  CHECK(blinks >= 1);
  validate_markers(rec.markers);
}

TEST_CASE("synth: frequency at or above Nyquist is a spec error") {
  SynthSpec s;
  s.fs = 100.0;
  s.ssvep.push_back({50.0, {0}, 1.0, {}, "", std::nullopt});
  CHECK_THROWS_AS(synth_recording(s), SpecError);
}

TEST_CASE("synth spec json round trip") {
  SynthSpec s;
  s.seed = 5;
  s.ssvep.push_back({12.0, {1}, 2.0, {{1.0, 2.0}}, "flick", 1});
  s.erp.push_back({"p3", 0, 0.3, 5.0, {0.5}, {2}});
  auto j = synth_spec_to_json(s);
  CHECK(synth_spec_to_json(synth_spec_from_json(j)) == j);
}

TEST_CASE("property: fuzzed wire frames round trip and stay prefix-free") {
  Rng rng(2024);
  std::vector<WireFrame> frames;
  for (int i = 0; i < 300; ++i) {
    switch (rng.below(4)) {
      case 0: {
        RecordingHeader h;
        h.fs = rng.uniform(1, 2000);
        h.channels = default_channels(1 + rng.below(8));
        h.start_time = rng.uniform(-10, 10);
        frames.push_back(HeaderFrame{h});
        break;
      }
      case 1: {
        DataFrame d{rng.uniform(0, 1e4), static_cast<std::uint32_t>(1 + rng.below(16)), {}};
        d.samples.resize(d.channels * rng.below(40));
        for (auto& v : d.samples) v = static_cast<float>(rng.normal());
        frames.push_back(d);
        break;
      }
      case 2: {
        Marker m{rng.uniform(0, 1e3), std::string(rng.below(12), static_cast<char>('a' + rng.below(26))), {}};
        if (rng.below(2)) m.class_id = static_cast<int>(rng.below(5));
        frames.push_back(MarkerFrame{m});
        break;
      }
      default: frames.push_back(EndFrame{});
    }
  }
  std::string stream;
  for (const auto& f : frames) {
    auto bytes = encode_frame(f);
    CHECK(decode_frame(bytes) == f);
    stream += bytes;
  }
  CHECK(decode_frames(stream) == frames);
}
