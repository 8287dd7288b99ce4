#include "noetic/features/spectral.hpp"

#include "noetic/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace noetic::features {

namespace {

using cd = std::complex<double>;

struct Segmenter {
  std::size_t nperseg, step, count;
};

Segmenter segments(std::size_t n, const WelchParams& p) {
  if (n < 8) throw Error("welch: need at least 8 samples, got " + std::to_string(n));
  if (!(p.overlap >= 0.0 && p.overlap < 1.0)) throw Error("welch: overlap must lie in [0, 1)");
  const std::size_t nperseg = std::min(p.segment, n);
  const auto noverlap = static_cast<std::size_t>(std::floor(static_cast<double>(nperseg) * p.overlap));
  const std::size_t step = nperseg - noverlap;
  return {nperseg, step, (n - nperseg) / step + 1};
}

std::vector<cd> windowed_fft(Eigen::FFT<double>& fft, std::span<const double> x, std::size_t start,
                             const std::vector<double>& w) {
  std::vector<double> buf(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) buf[i] = x[start + i] * w[i];
  std::vector<cd> out;
  fft.fwd(out, buf);
  return out;
}

std::vector<double> rfreqs(std::size_t nperseg, double fs) {
  std::vector<double> f(nperseg / 2 + 1);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) * fs / static_cast<double>(nperseg);
  return f;
}

// One-sided doubling: every bin except DC and (for even n) Nyquist.
double side_factor(std::size_t k, std::size_t nperseg) {
  if (k == 0) return 1.0;
  if (nperseg % 2 == 0 && k == nperseg / 2) return 1.0;
  return 2.0;
}

}  // namespace

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

Spectrum welch_psd(std::span<const double> x, double fs, const WelchParams& params) {
  const auto seg = segments(x.size(), params);
  const auto w = hann(seg.nperseg);
  double wss = 0.0;
  for (double v : w) wss += v * v;
  Spectrum s;
  s.freqs = rfreqs(seg.nperseg, fs);
  s.power.assign(s.freqs.size(), 0.0);
  s.segment = seg.nperseg;
  s.overlap = seg.nperseg - seg.step;
  Eigen::FFT<double> fft;
  for (std::size_t j = 0; j < seg.count; ++j) {
    const auto spec = windowed_fft(fft, x, j * seg.step, w);
    for (std::size_t k = 0; k < s.power.size(); ++k) s.power[k] += std::norm(spec[k]);
  }
  const double scale = 1.0 / (fs * wss * static_cast<double>(seg.count));
  for (std::size_t k = 0; k < s.power.size(); ++k) s.power[k] *= scale * side_factor(k, seg.nperseg);
  return s;
}

CrossSpectrum welch_csd(std::span<const double> x, std::span<const double> y, double fs,
                        const WelchParams& params) {
  if (x.size() != y.size()) throw Error("cross spectrum: inputs differ in length");
  const auto seg = segments(x.size(), params);
  const auto w = hann(seg.nperseg);
  double wss = 0.0;
  for (double v : w) wss += v * v;
  CrossSpectrum c;
  c.freqs = rfreqs(seg.nperseg, fs);
  const std::size_t nf = c.freqs.size();
  c.pxx.assign(nf, 0.0);
  c.pyy.assign(nf, 0.0);
  c.pxy.assign(nf, cd{});
  Eigen::FFT<double> fft;
  for (std::size_t j = 0; j < seg.count; ++j) {
    const auto fx = windowed_fft(fft, x, j * seg.step, w);
    const auto fy = windowed_fft(fft, y, j * seg.step, w);
    for (std::size_t k = 0; k < nf; ++k) {
      c.pxx[k] += std::norm(fx[k]);
      c.pyy[k] += std::norm(fy[k]);
      c.pxy[k] += std::conj(fx[k]) * fy[k];
    }
  }
  const double scale = 1.0 / (fs * wss * static_cast<double>(seg.count));
  for (std::size_t k = 0; k < nf; ++k) {
    const double s = scale * side_factor(k, seg.nperseg);
    c.pxx[k] *= s;
    c.pyy[k] *= s;
    c.pxy[k] *= s;
  }
  return c;
}

std::vector<Band> default_bands() {
  return {{"delta", 1, 4}, {"theta", 4, 8}, {"alpha", 8, 13}, {"beta", 13, 30}, {"gamma", 30, 45}};
}

double integrate(const Spectrum& s, double lo, double hi) {
  if (!(hi > lo)) throw Error("band [" + std::to_string(lo) + ", " + std::to_string(hi) + "] is empty");
  if (s.freqs.size() < 2) throw Error("spectrum has fewer than two bins");
  if (lo < s.freqs.front() || hi > s.freqs.back() + 1e-9)
    throw Error("band [" + std::to_string(lo) + ", " + std::to_string(hi) + "] Hz exceeds the spectrum range 0-" +
                std::to_string(s.freqs.back()) + " Hz");
  hi = std::min(hi, s.freqs.back());
  auto value_at = [&](double f) {
    auto it = std::upper_bound(s.freqs.begin(), s.freqs.end(), f);
    std::size_t k = static_cast<std::size_t>(it - s.freqs.begin());
    if (k >= s.freqs.size()) return s.power.back();
    k = std::max<std::size_t>(k, 1);
    const double f0 = s.freqs[k - 1], f1 = s.freqs[k];
    const double a = (f - f0) / (f1 - f0);
    return s.power[k - 1] + a * (s.power[k] - s.power[k - 1]);
  };
  // Knots: lo, every bin strictly inside, hi.
  double total = 0.0;
  double prev_f = lo, prev_p = value_at(lo);
  for (std::size_t k = 0; k < s.freqs.size(); ++k) {
    if (s.freqs[k] <= lo || s.freqs[k] >= hi) continue;
    total += 0.5 * (prev_p + s.power[k]) * (s.freqs[k] - prev_f);
    prev_f = s.freqs[k];
    prev_p = s.power[k];
  }
  total += 0.5 * (prev_p + value_at(hi)) * (hi - prev_f);
  return total;
}

FeatureVector band_powers(const Spectrum& s, const std::vector<Band>& bands, bool relative) {
  FeatureVector out;
  double denom = 1.0;
  if (relative) denom = integrate(s, 1.0, 45.0);
  for (const auto& b : bands) {
    const double p = integrate(s, b.lo, b.hi);
    if (relative)
      out.add("relpow." + b.name, denom > 0.0 ? p / denom : 0.0);
    else
      out.add("bandpow." + b.name, p);
  }
  return out;
}

Stft stft(std::span<const double> x, double fs, std::size_t window, std::size_t hop) {
  if (x.size() < window) throw Error("stft: need at least " + std::to_string(window) + " samples");
  if (hop == 0) throw Error("stft: hop must be > 0");
  const std::size_t frames = (x.size() - window) / hop + 1;
  const auto w = hann(window);
  Stft out;
  out.freqs = rfreqs(window, fs);
  out.magnitude.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(out.freqs.size()));
  Eigen::FFT<double> fft;
  for (std::size_t j = 0; j < frames; ++j) {
    const auto spec = windowed_fft(fft, x, j * hop, w);
    for (std::size_t k = 0; k < out.freqs.size(); ++k)
      out.magnitude(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = std::abs(spec[k]);
    out.times.push_back((static_cast<double>(j * hop) + static_cast<double>(window) / 2.0) / fs);
  }
  return out;
}

}  // namespace noetic::features
