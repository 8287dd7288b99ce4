#pragma once

#include "noetic/io/synth.hpp"
#include "noetic/rng.hpp"

#include <cmath>
#include <filesystem>
#include <string>

namespace testsupport {

// Two-class SSVEP session: trials alternate in a seeded order between a
// 10 Hz and a 15 Hz flicker on the last two channels; pink background noise
// of unit variance. amplitude sqrt(2) puts the tone power equal to the noise.
inline noetic::io::SynthSpec ssvep_spec(std::size_t trials_per_class, std::uint64_t seed,
                                        double amplitude = std::sqrt(2.0), std::size_t channels = 8,
                                        double fs = 256.0) {
  noetic::io::SynthSpec s;
  s.fs = fs;
  s.n_channels = channels;
  s.seed = seed;
  s.noise.pink_gain = 1.0;
  const double trial_s = 2.0, gap_s = 1.0;
  const std::size_t n = 2 * trials_per_class;
  s.duration_s = 1.0 + static_cast<double>(n) * (trial_s + gap_s) + 1.0;
  std::vector<int> order;
  for (std::size_t k = 0; k < n; ++k) order.push_back(static_cast<int>(k % 2));
  noetic::Rng rng(seed ^ 0x55aa);
  noetic::shuffle(order.begin(), order.end(), rng);
  noetic::io::SsvepComponent a, b;
  a.frequency = 10.0;
  b.frequency = 15.0;
  a.class_id = 0;
  b.class_id = 1;
  a.label = b.label = "trial";
  a.amplitude = b.amplitude = amplitude;
  a.channels = b.channels = {channels - 2, channels - 1};
  for (std::size_t k = 0; k < n; ++k) {
    const double on = 1.0 + static_cast<double>(k) * (trial_s + gap_s);
    (order[k] == 0 ? a : b).on_intervals.emplace_back(on, on + trial_s);
  }
  s.ssvep = {a, b};
  return s;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("noetic-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testsupport
