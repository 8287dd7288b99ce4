#include "noetic/features/connectivity.hpp"

#include "noetic/error.hpp"

#include <cmath>
#include <complex>

namespace noetic::features {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("connectivity: inputs differ in length");
  if (x.size() < 64) throw Error("connectivity: need at least 64 samples");
  auto flat = [](std::span<const double> v) {
    for (double a : v)
      if (a != v[0]) return false;
    return true;
  };
  if (flat(x) || flat(y)) throw Error("connectivity: zero-variance input");
}

template <typename F>
void for_band(const CrossSpectrum& c, double lo, double hi, F&& f) {
  if (!(hi > lo)) throw Error("connectivity: empty band");
  bool any = false;
  for (std::size_t k = 0; k < c.freqs.size(); ++k)
    if (c.freqs[k] >= lo && c.freqs[k] <= hi) {
      f(k);
      any = true;
    }
  if (!any) throw Error("connectivity: no frequency bins inside the band");
}

}  // namespace

ConnectivityMethod connectivity_method_from_string(const std::string& s) {
  if (s == "xcorr") return ConnectivityMethod::xcorr;
  if (s == "coherence") return ConnectivityMethod::coherence;
  if (s == "psi") return ConnectivityMethod::psi;
  throw Error("unknown connectivity method '" + s + "' (expected xcorr|coherence|psi)");
}

XcorrResult xcorr(std::span<const double> x, std::span<const double> y, long max_lag) {
  check_pair(x, y);
  const long n = static_cast<long>(x.size());
  if (max_lag < 0) max_lag = n / 4;
  max_lag = std::min(max_lag, n - 1);
  double mx = 0, my = 0;
  for (long i = 0; i < n; ++i) {
    mx += x[static_cast<std::size_t>(i)];
    my += y[static_cast<std::size_t>(i)];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sx = 0, sy = 0;
  for (long i = 0; i < n; ++i) {
    sx += (x[static_cast<std::size_t>(i)] - mx) * (x[static_cast<std::size_t>(i)] - mx);
    sy += (y[static_cast<std::size_t>(i)] - my) * (y[static_cast<std::size_t>(i)] - my);
  }
  const double norm = std::sqrt(sx * sy);
  XcorrResult best{-2.0, 0};
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (long t = std::max(0L, -lag); t < std::min(n, n - lag); ++t)
      s += (x[static_cast<std::size_t>(t)] - mx) * (y[static_cast<std::size_t>(t + lag)] - my);
    const double r = s / norm;
    if (r > best.value + 1e-15 || (std::abs(r - best.value) <= 1e-15 && std::abs(lag) < std::abs(best.lag)))
      best = {r, lag};
  }
  return best;
}

double coherence(std::span<const double> x, std::span<const double> y, double fs, double lo, double hi) {
  check_pair(x, y);
  const auto c = welch_csd(x, y, fs);
  double sum = 0.0;
  std::size_t count = 0;
  for_band(c, lo, hi, [&](std::size_t k) {
    const double denom = c.pxx[k] * c.pyy[k];
    sum += denom > 0.0 ? std::norm(c.pxy[k]) / denom : 0.0;
    ++count;
  });
  return sum / static_cast<double>(count);
}

double phase_slope_index(std::span<const double> x, std::span<const double> y, double fs, double lo, double hi) {
  check_pair(x, y);
  const auto c = welch_csd(x, y, fs);
  auto coherency = [&](std::size_t k) {
    const double denom = std::sqrt(c.pxx[k] * c.pyy[k]);
    // x * conj(y): a lagging y turns the phase forward with frequency.
    return denom > 0.0 ? std::conj(c.pxy[k]) / denom : std::complex<double>{};
  };
  std::complex<double> acc{};
  for_band(c, lo, hi, [&](std::size_t k) {
    if (k + 1 < c.freqs.size() && c.freqs[k + 1] <= hi) acc += std::conj(coherency(k)) * coherency(k + 1);
  });
  return acc.imag();
}

ConnectivityResult connectivity(std::span<const double> x, std::span<const double> y, double fs,
                                ConnectivityMethod method, double lo, double hi) {
  switch (method) {
    case ConnectivityMethod::xcorr: {
      auto r = xcorr(x, y);
      return {r.value, r.lag};
    }
    case ConnectivityMethod::coherence: return {coherence(x, y, fs, lo, hi), 0};
    case ConnectivityMethod::psi: return {phase_slope_index(x, y, fs, lo, hi), 0};
  }
  return {};
}

}  // namespace noetic::features
