#include "noetic/features/time_domain.hpp"

#include "noetic/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace noetic::features {

namespace {

void require_length(std::span<const double> x, std::size_t n, const char* what) {
  if (x.size() < n) throw Error(std::string(what) + " needs at least " + std::to_string(n) + " samples");
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double population_std(std::span<const double> x) {
  const double mu = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Least-squares slope of y on x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

}  // namespace

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double mu = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size() - 1);
}

Moments moments(std::span<const double> x) {
  require_length(x, 4, "moments");
  Moments m;
  m.mean = mean_of(x);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m.variance = m2 / (n - 1.0);
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 <= 0.0) {
    m.zero_variance = true;
    return m;
  }
  m.skewness = m3 / std::pow(m2, 1.5);
  m.kurtosis = m4 / (m2 * m2) - 3.0;
  return m;
}

double higuchi_fd(std::span<const double> x, int k_max) {
  require_length(x, 32, "higuchi fractal dimension");
  const auto n = static_cast<long>(x.size());
  std::vector<double> log_inv_k, log_l;
  for (int k = 1; k <= k_max; ++k) {
    double lk = 0.0;
    int used = 0;
    for (int m = 0; m < k; ++m) {
      const long count = (n - 1 - m) / k;
      if (count < 1) continue;
      double len = 0.0;
      for (long i = 1; i <= count; ++i) len += std::abs(x[static_cast<std::size_t>(m + i * k)] - x[static_cast<std::size_t>(m + (i - 1) * k)]);
      len *= static_cast<double>(n - 1) / (static_cast<double>(count) * k);
      lk += len / k;
      ++used;
    }
    lk /= used;
    if (lk <= 0.0) return 1.0;  // flat curve
    log_inv_k.push_back(std::log(1.0 / k));
    log_l.push_back(std::log(lk));
  }
  return slope(log_inv_k, log_l);
}

double katz_fd(std::span<const double> x) {
  require_length(x, 32, "katz fractal dimension");
  double path = 0.0, extent = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    path += std::abs(x[i] - x[i - 1]);
    extent = std::max(extent, std::abs(x[i] - x[0]));
  }
  if (path <= 0.0 || extent <= 0.0) return 1.0;
  const double n = std::log10(static_cast<double>(x.size() - 1));
  return n / (n + std::log10(extent / path));
}

double fractal_dimension(std::span<const double> x, FractalMethod method) {
  return method == FractalMethod::higuchi ? higuchi_fd(x) : katz_fd(x);
}

double shannon_entropy(std::span<const double> x, int bins) {
  if (x.empty()) return 0.0;
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return 0.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins));
  for (double v : x) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
    counts[std::min(b, counts.size() - 1)]++;
  }
  double h = 0.0;
  const double n = static_cast<double>(x.size());
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log2(p);
    }
  return h;
}

namespace {

bool within(std::span<const double> x, std::size_t i, std::size_t j, int len, double r) {
  for (int k = 0; k < len; ++k)
    if (std::abs(x[i + static_cast<std::size_t>(k)] - x[j + static_cast<std::size_t>(k)]) > r) return false;
  return true;
}

double apen_phi(std::span<const double> x, int m, double r) {
  const std::size_t count = x.size() - static_cast<std::size_t>(m) + 1;
  double phi = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < count; ++j)
      if (within(x, i, j, m, r)) ++c;
    phi += std::log(static_cast<double>(c) / static_cast<double>(count));
  }
  return phi / static_cast<double>(count);
}

}  // namespace

double approximate_entropy(std::span<const double> x, int m, double r) {
  require_length(x, 64, "approximate entropy");
  return apen_phi(x, m, r) - apen_phi(x, m + 1, r);
}

EntropyResult sample_entropy(std::span<const double> x, int m, double r) {
  require_length(x, 64, "sample entropy");
  // Both template lengths use the same N - m starting points.
  const std::size_t count = x.size() - static_cast<std::size_t>(m);
  std::size_t b = 0, a = 0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j)
      if (within(x, i, j, m, r)) {
        ++b;
        if (std::abs(x[i + static_cast<std::size_t>(m)] - x[j + static_cast<std::size_t>(m)]) <= r) ++a;
      }
  if (a == 0 || b == 0) return {std::numeric_limits<double>::infinity(), true};
  return {-std::log(static_cast<double>(a) / static_cast<double>(b)), false};
}

EntropyResult entropy(std::span<const double> x, EntropyMethod method, const EntropyParams& params) {
  switch (method) {
    case EntropyMethod::shannon: return {shannon_entropy(x, params.bins), false};
    case EntropyMethod::approximate: {
      require_length(x, 64, "approximate entropy");
      return {approximate_entropy(x, params.m, params.r_factor * population_std(x)), false};
    }
    case EntropyMethod::sample: {
      require_length(x, 64, "sample entropy");
      return sample_entropy(x, params.m, params.r_factor * population_std(x));
    }
  }
  return {};
}

Hjorth hjorth(std::span<const double> x) {
  require_length(x, 3, "hjorth parameters");
  const double v0 = variance(x);
  if (v0 <= 0.0) throw Error("hjorth parameters undefined for zero-variance input");
  const auto d1 = diff(x);
  const auto d2 = diff(d1);
  const double v1 = variance(d1);
  const double v2 = d2.size() >= 2 ? variance(d2) : 0.0;
  Hjorth h;
  h.activity = v0;
  h.mobility = std::sqrt(v1 / v0);
  h.complexity = v1 > 0.0 ? std::sqrt(v2 / v1) / h.mobility : 0.0;
  return h;
}

double dfa(std::span<const double> x) {
  require_length(x, 256, "detrended fluctuation analysis");
  const std::size_t n = x.size();
  const double mu = mean_of(x);
  std::vector<double> profile(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) profile[i] = (acc += x[i] - mu);

  const double lo = std::log(4.0), hi = std::log(static_cast<double>(n) / 4.0);
  std::vector<std::size_t> scales;
  for (int i = 0; i < 10; ++i) {
    const auto s = static_cast<std::size_t>(std::llround(std::exp(lo + (hi - lo) * i / 9.0)));
    if (scales.empty() || s != scales.back()) scales.push_back(s);
  }

  std::vector<double> log_s, log_f;
  for (std::size_t s : scales) {
    const std::size_t boxes = n / s;
    // Box-local abscissa 0..s-1 is shared, so its moments are fixed.
    const double tm = (static_cast<double>(s) - 1.0) / 2.0;
    double txx = 0.0;
    for (std::size_t t = 0; t < s; ++t) txx += (static_cast<double>(t) - tm) * (static_cast<double>(t) - tm);
    double sq = 0.0;
    for (std::size_t b = 0; b < boxes; ++b) {
      const double* y = profile.data() + b * s;
      double ym = 0.0;
      for (std::size_t t = 0; t < s; ++t) ym += y[t];
      ym /= static_cast<double>(s);
      double txy = 0.0;
      for (std::size_t t = 0; t < s; ++t) txy += (static_cast<double>(t) - tm) * (y[t] - ym);
      const double beta = txy / txx;
      for (std::size_t t = 0; t < s; ++t) {
        const double r = y[t] - ym - beta * (static_cast<double>(t) - tm);
        sq += r * r;
      }
    }
    const double f = std::sqrt(sq / static_cast<double>(boxes * s));
    if (f <= 0.0) return 0.0;
    log_s.push_back(std::log(static_cast<double>(s)));
    log_f.push_back(std::log(f));
  }
  return slope(log_s, log_f);
}

FractalMethod fractal_method_from_string(const std::string& s) {
  if (s == "higuchi") return FractalMethod::higuchi;
  if (s == "katz") return FractalMethod::katz;
  throw Error("unknown fractal method '" + s + "' (expected higuchi|katz)");
}

EntropyMethod entropy_method_from_string(const std::string& s) {
  if (s == "shannon") return EntropyMethod::shannon;
  if (s == "approximate") return EntropyMethod::approximate;
  if (s == "sample") return EntropyMethod::sample;
  throw Error("unknown entropy method '" + s + "' (expected shannon|approximate|sample)");
}

}  // namespace noetic::features
