#pragma once

#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace noetic::pre {

enum class FilterKind { lowpass, highpass, bandpass, bandstop };

std::string to_string(FilterKind k);
FilterKind filter_kind_from_string(const std::string& s);

// b0 b1 b2 / 1 a1 a2
struct Section {
  std::array<double, 3> b{};
  std::array<double, 2> a{};

  std::complex<double> response(double omega) const;
  std::array<std::complex<double>, 2> poles() const;
};

struct FilterSpec {
  FilterKind kind = FilterKind::lowpass;
  int order = 0;
  std::vector<double> cutoffs;  // -3 dB edges, Hz
  double fs = 0.0;
  std::vector<Section> sections;

  std::complex<double> response(double hz) const;
  double magnitude_db(double hz) const;
  nlohmann::json to_json() const;
};

struct ExplicitDesign {
  int order = 4;
  std::vector<double> cutoffs;
};

// Edges in Hz. Band types take two passband and two stopband edges.
struct EdgeDesign {
  std::vector<double> passband;
  std::vector<double> stopband;
  double max_ripple_db = 1.0;
  double min_attenuation_db = 40.0;
};

FilterSpec design_butterworth(FilterKind kind, const ExplicitDesign& d, double fs);
FilterSpec design_butterworth(FilterKind kind, const EdgeDesign& d, double fs);

/// Minimal order and -3 dB cutoffs meeting the edge specification; the
/// passband edge is met exactly.
ExplicitDesign butterworth_order(FilterKind kind, const EdgeDesign& d, double fs);

FilterSpec filter_spec_from_json(const nlohmann::json& j);

// Causal cascade with per-channel state carried across calls.
class StreamingFilter {
 public:
  StreamingFilter() = default;
  explicit StreamingFilter(FilterSpec spec) : spec_(std::move(spec)) {}

  /// Filters a channels x T block in place.
  void process(Matrix& block);
  void reset() { state_.clear(); }
  const FilterSpec& spec() const { return spec_; }

 private:
  FilterSpec spec_;
  std::vector<std::array<double, 2>> state_;  // channel-major, one pair per section
};

/// Single-channel causal filtering from rest.
std::vector<double> sosfilt(const std::vector<Section>& sections, std::span<const double> x);
/// Forward-backward filtering with odd padding and steady-state initial conditions.
std::vector<double> sosfiltfilt(const std::vector<Section>& sections, std::span<const double> x);

SignalBlock apply_filter(const SignalBlock& x, const FilterSpec& f, bool zero_phase);
Epoch apply_filter(const Epoch& x, double fs, const FilterSpec& f, bool zero_phase);

}  // namespace noetic::pre
