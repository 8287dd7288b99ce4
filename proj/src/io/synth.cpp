#include "noetic/io/synth.hpp"

#include "noetic/error.hpp"
#include "noetic/rng.hpp"

#include <algorithm>
#include <bit>
#include <numbers>

namespace noetic::io {

using nlohmann::json;

namespace {

constexpr int kPinkRows = 16;
constexpr double kErpWidth = 0.3;
constexpr double kBlinkWidth = 0.25;

void check_channels(const std::vector<std::size_t>& chans, std::size_t n, const std::string& what) {
  for (auto c : chans)
    if (c >= n) throw SpecError(what + " references channel " + std::to_string(c) + " of " + std::to_string(n));
}

std::string default_ssvep_label(double f) {
  json j = f;
  return "ssvep:" + j.dump();
}

}  // namespace

void SynthSpec::validate() const {
  if (!(duration_s > 0.0)) throw SpecError("synth: duration_s must be > 0");
  if (!(fs > 0.0)) throw SpecError("synth: fs must be > 0");
  if (n_channels < 1) throw SpecError("synth: n_channels must be >= 1");
  if (!channel_names.empty() && channel_names.size() != n_channels)
    throw SpecError("synth: channel_names must list every channel");
  for (const auto& s : ssvep) {
    if (!(s.frequency > 0.0) || s.frequency >= fs / 2.0)
      throw SpecError("synth: SSVEP frequency " + json(s.frequency).dump() + " Hz must lie in (0, fs/2 = " +
                      json(fs / 2.0).dump() + ")");
    check_channels(s.channels, n_channels, "synth: SSVEP component");
    for (auto [a, b] : s.on_intervals)
      if (!(a < b)) throw SpecError("synth: SSVEP on-interval must have start < end");
  }
  for (const auto& e : erp) {
    check_channels(e.channels, n_channels, "synth: ERP component");
    if (e.class_id < 0) throw SpecError("synth: ERP class_id must be >= 0");
  }
  check_channels(blink.channels, n_channels, "synth: blink");
  if (!blink.gains.empty() && blink.gains.size() != blink.channels.size())
    throw SpecError("synth: blink gains must match blink channels");
  if (blink.rate_per_min < 0.0) throw SpecError("synth: blink rate must be >= 0");
  check_channels(eog_channels, n_channels, "synth: eog_channels");
}

double raised_cosine(double dt, double width) {
  if (std::abs(dt) > width / 2.0) return 0.0;
  return 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * dt / width));
}

std::vector<double> pink_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  double rows[kPinkRows];
  double sum = 0.0;
  for (double& r : rows) {
    r = rng.normal();
    sum += r;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(kPinkRows));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const int k = std::countr_zero(i);
      if (k < kPinkRows) {
        const double v = rng.normal();
        sum += v - rows[k];
        rows[k] = v;
      }
    }
    out[i] = sum * scale;
  }
  return out;
}

Recording synth_recording(const SynthSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fs));
  if (n == 0) throw SpecError("synth: duration shorter than one sample");
  const auto n_ch = spec.n_channels;

  Recording rec;
  rec.block.fs = spec.fs;
  rec.block.t0 = spec.t0;
  rec.block.channels = default_channels(n_ch);
  for (std::size_t c = 0; c < n_ch; ++c)
    if (!spec.channel_names.empty()) rec.block.channels[c].name = spec.channel_names[c];
  for (auto c : spec.eog_channels) rec.block.channels[c].role = ChannelRole::eog_reference;
  rec.block.samples = Matrix::Zero(static_cast<Eigen::Index>(n_ch), static_cast<Eigen::Index>(n));
  Matrix& x = rec.block.samples;

  Rng master(spec.seed);
  for (std::size_t c = 0; c < n_ch; ++c) {
    const std::uint64_t pink_seed = master.next();
    Rng white = master.fork(c + 1);
    const auto ci = static_cast<Eigen::Index>(c);
    if (spec.noise.pink_gain != 0.0) {
      auto pink = pink_noise(n, pink_seed);
      for (std::size_t i = 0; i < n; ++i) x(ci, static_cast<Eigen::Index>(i)) += spec.noise.pink_gain * pink[i];
    }
    if (spec.noise.white_gain != 0.0)
      for (std::size_t i = 0; i < n; ++i) x(ci, static_cast<Eigen::Index>(i)) += spec.noise.white_gain * white.normal();
  }

  auto idx = [&](double t) { return static_cast<long long>(std::llround((t - spec.t0) * spec.fs)); };
  const double t_end = spec.t0 + static_cast<double>(n) / spec.fs;

  for (const auto& s : spec.ssvep) {
    const std::string label = s.label.empty() ? default_ssvep_label(s.frequency) : s.label;
    std::vector<std::pair<double, double>> intervals = s.on_intervals;
    if (intervals.empty()) intervals.push_back({spec.t0, t_end});
    else
      for (auto [a, b] : s.on_intervals) rec.markers.push_back({a, label, s.class_id});
    for (auto [a, b] : intervals) {
      const long long i0 = std::max(0LL, idx(a));
      const long long i1 = std::min(static_cast<long long>(n), idx(b));
      for (long long i = i0; i < i1; ++i) {
        const double t = static_cast<double>(i) / spec.fs;
        const double v = s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t);
        for (auto c : s.channels) x(static_cast<Eigen::Index>(c), i) += v;
      }
    }
  }

  for (const auto& e : spec.erp) {
    for (double onset : e.onsets) {
      rec.markers.push_back({onset, e.label, e.class_id});
      const double peak = onset + e.latency_s;
      const long long i0 = std::max(0LL, idx(peak - kErpWidth / 2));
      const long long i1 = std::min(static_cast<long long>(n) - 1, idx(peak + kErpWidth / 2));
      for (long long i = i0; i <= i1; ++i) {
        const double v = e.amplitude * raised_cosine(spec.t0 + static_cast<double>(i) / spec.fs - peak, kErpWidth);
        if (e.channels.empty()) x.col(i).array() += v;
        else
          for (auto c : e.channels) x(static_cast<Eigen::Index>(c), i) += v;
      }
    }
  }

  if (spec.blink.rate_per_min > 0.0 && !spec.blink.channels.empty()) {
    Rng blink_rng = master.fork(0xB11C);
    const double mean_gap = 60.0 / spec.blink.rate_per_min;
    double t = spec.t0 + mean_gap * blink_rng.uniform(0.25, 1.0);
    while (t + kBlinkWidth / 2 < t_end) {
      rec.markers.push_back({t, "blink", std::nullopt});
      const long long i0 = std::max(0LL, idx(t - kBlinkWidth / 2));
      const long long i1 = std::min(static_cast<long long>(n) - 1, idx(t + kBlinkWidth / 2));
      for (long long i = i0; i <= i1; ++i) {
        const double shape = raised_cosine(spec.t0 + static_cast<double>(i) / spec.fs - t, kBlinkWidth);
        for (std::size_t k = 0; k < spec.blink.channels.size(); ++k) {
          const double g = spec.blink.gains.empty() ? 1.0 : spec.blink.gains[k];
          x(static_cast<Eigen::Index>(spec.blink.channels[k]), i) += g * spec.blink.amplitude * shape;
        }
      }
      t += mean_gap * blink_rng.uniform(0.5, 1.5);
    }
  }

  x = x.cast<float>().cast<double>();
  std::stable_sort(rec.markers.begin(), rec.markers.end(), [](const Marker& a, const Marker& b) { return a.t < b.t; });
  return rec;
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  try {
    s.duration_s = j.value("duration_s", s.duration_s);
    s.fs = j.value("fs", s.fs);
    s.n_channels = j.value("n_channels", s.n_channels);
    s.t0 = j.value("t0", s.t0);
    s.seed = j.value("seed", s.seed);
    s.eog_channels = j.value("eog_channels", s.eog_channels);
    s.channel_names = j.value("channel_names", s.channel_names);
    if (j.contains("noise")) {
      s.noise.pink_gain = j["noise"].value("pink", s.noise.pink_gain);
      s.noise.white_gain = j["noise"].value("white", s.noise.white_gain);
    }
    for (const auto& c : j.value("ssvep", json::array())) {
      SsvepComponent comp;
      comp.frequency = c.at("frequency").get<double>();
      comp.channels = c.value("channels", std::vector<std::size_t>{});
      comp.amplitude = c.value("amplitude", comp.amplitude);
      comp.label = c.value("label", std::string{});
      if (c.contains("class_id") && !c["class_id"].is_null()) comp.class_id = c["class_id"].get<int>();
      for (const auto& iv : c.value("on", json::array()))
        comp.on_intervals.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
      s.ssvep.push_back(std::move(comp));
    }
    for (const auto& c : j.value("erp", json::array())) {
      ErpComponent comp;
      comp.label = c.value("label", std::string{"erp"});
      comp.class_id = c.value("class_id", 0);
      comp.latency_s = c.value("latency_s", comp.latency_s);
      comp.amplitude = c.value("amplitude", comp.amplitude);
      comp.onsets = c.value("onsets", std::vector<double>{});
      comp.channels = c.value("channels", std::vector<std::size_t>{});
      s.erp.push_back(std::move(comp));
    }
    if (j.contains("blink")) {
      const auto& b = j["blink"];
      s.blink.rate_per_min = b.value("rate_per_min", 0.0);
      s.blink.amplitude = b.value("amplitude", s.blink.amplitude);
      s.blink.channels = b.value("channels", std::vector<std::size_t>{});
      s.blink.gains = b.value("gains", std::vector<double>{});
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

json synth_spec_to_json(const SynthSpec& s) {
  json j{{"duration_s", s.duration_s},
         {"fs", s.fs},
         {"n_channels", s.n_channels},
         {"t0", s.t0},
         {"seed", s.seed},
         {"eog_channels", s.eog_channels},
         {"channel_names", s.channel_names},
         {"noise", {{"pink", s.noise.pink_gain}, {"white", s.noise.white_gain}}}};
  j["ssvep"] = json::array();
  for (const auto& c : s.ssvep) {
    json on = json::array();
    for (auto [a, b] : c.on_intervals) on.push_back({a, b});
    json cj{{"frequency", c.frequency}, {"channels", c.channels}, {"amplitude", c.amplitude}, {"label", c.label}, {"on", on}};
    cj["class_id"] = c.class_id ? json(*c.class_id) : json(nullptr);
    j["ssvep"].push_back(cj);
  }
  j["erp"] = json::array();
  for (const auto& c : s.erp)
    j["erp"].push_back({{"label", c.label},
                        {"class_id", c.class_id},
                        {"latency_s", c.latency_s},
                        {"amplitude", c.amplitude},
                        {"onsets", c.onsets},
                        {"channels", c.channels}});
  j["blink"] = {{"rate_per_min", s.blink.rate_per_min},
                {"amplitude", s.blink.amplitude},
                {"channels", s.blink.channels},
                {"gains", s.blink.gains}};
  return j;
}

}  // namespace noetic::io
