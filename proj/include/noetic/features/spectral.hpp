#pragma once

#include "noetic/features/feature_vector.hpp"
#include "noetic/signal.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace noetic::features {

struct WelchParams {
  std::size_t segment = 256;  // clipped to the signal length
  double overlap = 0.5;
};

struct Spectrum {
  std::vector<double> freqs;  // Hz, 0..fs/2
  std::vector<double> power;  // uV^2/Hz
  std::string window = "hann";
  std::size_t segment = 0;
  std::size_t overlap = 0;

  double resolution() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

struct CrossSpectrum {
  std::vector<double> freqs;
  std::vector<double> pxx, pyy;
  std::vector<std::complex<double>> pxy;
};

/// Periodic Hann window of length n.
std::vector<double> hann(std::size_t n);

Spectrum welch_psd(std::span<const double> x, double fs, const WelchParams& params = {});
CrossSpectrum welch_csd(std::span<const double> x, std::span<const double> y, double fs,
                        const WelchParams& params = {});

struct Band {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

std::vector<Band> default_bands();

/// Trapezoid integral of the density over [lo, hi], interpolating at the edges.
double integrate(const Spectrum& s, double lo, double hi);

/// Features named "bandpow.<band>" or "relpow.<band>". Relative powers are
/// divided by the 1-45 Hz total (all zero when that total is zero).
FeatureVector band_powers(const Spectrum& s, const std::vector<Band>& bands, bool relative);

struct Stft {
  std::vector<double> freqs;
  std::vector<double> times;  // centre of each frame, seconds from the first sample
  Matrix magnitude;           // frames x freqs
};

Stft stft(std::span<const double> x, double fs, std::size_t window = 128, std::size_t hop = 64);

}  // namespace noetic::features
