#include "noetic/features/wavelet.hpp"

#include "noetic/error.hpp"

#include <cmath>

namespace noetic::features {

namespace {

constexpr std::size_t kTaps = 8;

// Index into x with half-sample symmetric reflection (x[-1] = x[0]).
double symmetric_at(std::span<const double> x, long i) {
  const long n = static_cast<long>(x.size());
  const long period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return x[static_cast<std::size_t>(i < n ? i : period - 1 - i)];
}

double periodic_at(std::span<const double> x, long i) {
  const long n = static_cast<long>(x.size());
  i %= n;
  if (i < 0) i += n;
  return x[static_cast<std::size_t>(i)];
}

}  // namespace

const std::array<double, 8>& db4_lowpass() {
  static const std::array<double, 8> h{-0.010597401784997278, 0.032883011666982945, 0.030841381835986965,
                                       -0.18703481171888114,  -0.02798376941698385, 0.6308807679295904,
                                       0.7148465705525415,    0.23037781330885523};
  return h;
}

const std::array<double, 8>& db4_highpass() {
  static const std::array<double, 8> g = [] {
    std::array<double, 8> out{};
    const auto& h = db4_lowpass();
    for (std::size_t k = 0; k < kTaps; ++k) out[k] = ((k % 2 == 0) ? -1.0 : 1.0) * h[kTaps - 1 - k];
    return out;
  }();
  return g;
}

DwtLevel dwt_step(std::span<const double> x, BoundaryMode mode) {
  const auto& h = db4_lowpass();
  const auto& g = db4_highpass();
  const long n = static_cast<long>(x.size());
  // Symmetric mode keeps the boundary coefficients: floor((n + taps - 1) / 2).
  const long out_len = mode == BoundaryMode::periodization ? (n + 1) / 2 : (n + static_cast<long>(kTaps) - 1) / 2;
  std::vector<double> xp;
  std::span<const double> src = x;
  if (mode == BoundaryMode::periodization && n % 2 == 1) {
    xp.assign(x.begin(), x.end());
    xp.push_back(x.back());
    src = xp;
  }
  DwtLevel out;
  out.approx.resize(static_cast<std::size_t>(out_len));
  out.detail.resize(static_cast<std::size_t>(out_len));
  for (long i = 0; i < out_len; ++i) {
    double a = 0.0, d = 0.0;
    for (std::size_t k = 0; k < kTaps; ++k) {
      const long j = 2 * i + 1 - static_cast<long>(k);
      const double v = mode == BoundaryMode::periodization ? periodic_at(src, j) : symmetric_at(src, j);
      a += h[k] * v;
      d += g[k] * v;
    }
    out.approx[static_cast<std::size_t>(i)] = a;
    out.detail[static_cast<std::size_t>(i)] = d;
  }
  return out;
}

int default_dwt_levels(std::size_t n) {
  const int deep = static_cast<int>(std::floor(std::log2(static_cast<double>(n)))) - 2;
  return std::max(1, std::min(5, deep));
}

std::vector<std::vector<double>> wavedec(std::span<const double> x, int levels, BoundaryMode mode) {
  if (levels < 1) throw Error("dwt: levels must be >= 1");
  if (levels > 30 || x.size() < (std::size_t{1} << levels))
    throw Error("dwt: " + std::to_string(levels) + " levels is too deep for " + std::to_string(x.size()) +
                " samples");
  std::vector<std::vector<double>> coeffs;
  std::vector<double> approx(x.begin(), x.end());
  for (int l = 0; l < levels; ++l) {
    auto step = dwt_step(approx, mode);
    coeffs.push_back(std::move(step.detail));
    approx = std::move(step.approx);
  }
  coeffs.push_back(std::move(approx));
  return coeffs;
}

std::vector<double> dwt_subband_energies(std::span<const double> x, int levels, BoundaryMode mode) {
  std::vector<double> e;
  for (const auto& c : wavedec(x, levels, mode)) {
    double s = 0.0;
    for (double v : c) s += v * v;
    e.push_back(s);
  }
  return e;
}

FeatureVector dwt_energies(std::span<const double> x, int levels, BoundaryMode mode) {
  if (levels <= 0) levels = default_dwt_levels(x.size());
  const auto e = dwt_subband_energies(x, levels, mode);
  FeatureVector out;
  for (int l = 0; l < levels; ++l) out.add("dwt.d" + std::to_string(l + 1), std::log(e[static_cast<std::size_t>(l)] + 1e-12));
  out.add("dwt.a" + std::to_string(levels), std::log(e.back() + 1e-12));
  return out;
}

}  // namespace noetic::features
