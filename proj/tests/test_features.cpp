#include "doctest.h"

#include "noetic/error.hpp"
#include "noetic/features/connectivity.hpp"
#include "noetic/features/csp.hpp"
#include "noetic/features/spectral.hpp"
#include "noetic/features/time_domain.hpp"
#include "noetic/features/wavelet.hpp"
#include "noetic/io/synth.hpp"
#include "noetic/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

using namespace noetic;
using namespace noetic::features;

namespace {

std::vector<double> white(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = sigma * rng.normal();
  return x;
}

std::vector<double> sine(std::size_t n, double f, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

std::vector<double> scaled(std::vector<double> x, double a) {
  for (auto& v : x) v *= a;
  return x;
}

// Textbook SampEn: templates of length m and m+1 over the first N-m starts.
double brute_sampen(const std::vector<double>& x, int m, double r) {
  const std::size_t n = x.size();
  auto count = [&](int len) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n - static_cast<std::size_t>(m); ++i)
      for (std::size_t j = 0; j < n - static_cast<std::size_t>(m); ++j) {
        if (i == j) continue;
        double d = 0;
        for (int k = 0; k < len; ++k) d = std::max(d, std::abs(x[i + k] - x[j + k]));
        if (d <= r) ++c;
      }
    return static_cast<double>(c);
  };
  return -std::log(count(m + 1) / count(m));
}

}  // namespace

TEST_CASE("moments") {
  std::vector<double> c(100, 3.5);
  auto mc = moments(c);
  CHECK(mc.mean == 3.5);
  CHECK(mc.variance == 0.0);
  CHECK(mc.skewness == 0.0);
  CHECK(mc.kurtosis == 0.0);
  CHECK(mc.zero_variance);

  Rng rng(1);
  std::vector<double> u(10000);
  for (auto& v : u) v = rng.uniform(-1, 1);
  CHECK(std::abs(moments(u).skewness) < 0.05);
  // Uniform excess kurtosis is -1.2.
  CHECK(moments(u).kurtosis == doctest::Approx(-1.2).epsilon(0.05));

  auto g = white(100000, 2);
  CHECK(std::abs(moments(g).kurtosis) < 0.1);

  std::vector<double> small{1, 2, 3, 10};
  auto ms = moments(small);
  CHECK(ms.mean == 4.0);
  CHECK(ms.variance == doctest::Approx(50.0 / 3.0));
  CHECK_THROWS(moments(std::vector<double>{1, 2, 3}));
}

TEST_CASE("fractal dimension") {
  std::vector<double> line(512);
  for (std::size_t i = 0; i < line.size(); ++i) line[i] = 0.3 * static_cast<double>(i);
  CHECK(std::abs(higuchi_fd(line) - 1.0) < 0.05);
  CHECK(std::abs(higuchi_fd(white(4096, 3)) - 2.0) < 0.15);
  CHECK(katz_fd(std::vector<double>(64, 1.0)) == 1.0);
  CHECK(katz_fd(line) == doctest::Approx(1.0));
  CHECK_THROWS(higuchi_fd(std::vector<double>(16, 1.0)));
}

TEST_CASE("entropy") {
  CHECK(shannon_entropy(std::vector<double>(100, 2.0)) == 0.0);
  // Two equally populated extremes -> exactly one bit.
  std::vector<double> two(100);
  for (std::size_t i = 0; i < two.size(); ++i) two[i] = i % 2 ? 1.0 : -1.0;
  CHECK(shannon_entropy(two) == doctest::Approx(1.0));

  std::vector<double> square(256);
  for (std::size_t i = 0; i < square.size(); ++i) square[i] = (i / 2) % 2 ? 1.0 : -1.0;
  auto se = entropy(square, EntropyMethod::sample);
  CHECK_FALSE(se.infinite);
  CHECK(std::abs(se.value) < 0.05);
  CHECK(se.value == doctest::Approx(brute_sampen(square, 2, 0.2)));
  std::vector<double> slow_square(256);
  for (std::size_t i = 0; i < slow_square.size(); ++i) slow_square[i] = (i / 8) % 2 ? 1.0 : -1.0;
  CHECK(entropy(slow_square, EntropyMethod::sample).value == doctest::Approx(brute_sampen(slow_square, 2, 0.2)));

  auto noise = white(300, 4);
  double mu = std::accumulate(noise.begin(), noise.end(), 0.0) / 300.0, ss = 0;
  for (double v : noise) ss += (v - mu) * (v - mu);
  const double r = 0.2 * std::sqrt(ss / 300.0);
  CHECK(entropy(noise, EntropyMethod::sample).value == doctest::Approx(brute_sampen(noise, 2, r)));

  CHECK(entropy(white(512, 5), EntropyMethod::approximate).value >
        entropy(sine(512, 5, 256), EntropyMethod::approximate).value);

  // A strictly increasing ramp with a tiny tolerance never matches.
  std::vector<double> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  auto inf = sample_entropy(ramp, 2, 0.1);
  CHECK(inf.infinite);
  CHECK(std::isinf(inf.value));
  CHECK_THROWS(entropy(std::vector<double>(32, 0.0), EntropyMethod::sample));
}

TEST_CASE("hjorth") {
  auto x = white(1000, 6);
  auto h = hjorth(x);
  CHECK(h.activity == variance(x));
  auto h5 = hjorth(scaled(x, 5.0));
  CHECK(h5.mobility == doctest::Approx(h.mobility));
  CHECK(h5.complexity == doctest::Approx(h.complexity));
  CHECK(h5.activity == doctest::Approx(25.0 * h.activity));

  auto s = sine(64 * 8, 1.0, 64.0);
  CHECK(std::abs(hjorth(s).complexity - 1.0) < 0.05);
  // Mobility of a sampled sine is 2 sin(pi f / fs).
  CHECK(hjorth(s).mobility == doctest::Approx(2 * std::sin(std::numbers::pi / 64)).epsilon(0.01));
  CHECK_THROWS(hjorth(std::vector<double>(10, 1.0)));
}

TEST_CASE("dfa") {
  double sum = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) sum += dfa(white(1 << 14, 100 + seed));
  CHECK(std::abs(sum / 10 - 0.5) < 0.05);

  auto pink = io::pink_noise(1 << 14, 7);
  CHECK(std::abs(dfa(pink) - 1.0) < 0.1);

  auto x = white(4096, 8);
  CHECK(dfa(scaled(x, 5.0)) == doctest::Approx(dfa(x)).epsilon(1e-12));
  CHECK_THROWS(dfa(std::vector<double>(100, 0.0)));
}

TEST_CASE("welch psd") {
  auto s = welch_psd(sine(4096, 10, 256), 256);
  CHECK(s.freqs.front() == 0.0);
  CHECK(s.freqs.back() == 128.0);
  CHECK(std::abs(integrate(s, 0, 128) - 0.5) < 0.025);
  auto peak = std::max_element(s.power.begin(), s.power.end()) - s.power.begin();
  CHECK(s.freqs[static_cast<std::size_t>(peak)] == 10.0);

  auto n = white(8192, 9, 2.0);
  CHECK(std::abs(integrate(welch_psd(n, 256), 0, 128) / 4.0 - 1.0) < 0.1);

  // Short signals shrink the segment to the whole record.
  auto short_s = welch_psd(white(100, 10), 100);
  CHECK(short_s.segment == 100);
  CHECK(short_s.freqs.size() == 51);
  CHECK_THROWS(welch_psd(std::vector<double>(4, 0.0), 100));
}

TEST_CASE("band powers") {
  auto s = welch_psd(white(4096, 11), 256);
  std::vector<Band> partition{{"a", 1, 7.3}, {"b", 7.3, 20.1}, {"c", 20.1, 45}};
  auto rel = band_powers(s, partition, true);
  CHECK(std::accumulate(rel.values.begin(), rel.values.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  auto defaults = band_powers(s, default_bands(), true);
  CHECK(std::accumulate(defaults.values.begin(), defaults.values.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(defaults.names[2] == "relpow.alpha");

  auto tone = band_powers(welch_psd(sine(4096, 10, 256), 256), default_bands(), true);
  CHECK(tone.values[2] >= 0.9);

  auto zero = band_powers(welch_psd(std::vector<double>(512, 0.0), 256), default_bands(), true);
  for (double v : zero.values) CHECK(v == 0.0);

  // Relative power is invariant to scale; absolute scales by a^2.
  auto x = white(2048, 12);
  auto a1 = band_powers(welch_psd(x, 256), default_bands(), false);
  auto a3 = band_powers(welch_psd(scaled(x, 3), 256), default_bands(), false);
  CHECK(a3.values[0] == doctest::Approx(9 * a1.values[0]));
  CHECK(band_powers(welch_psd(scaled(x, 3), 256), default_bands(), true).values[1] ==
        doctest::Approx(band_powers(welch_psd(x, 256), default_bands(), true).values[1]));

  CHECK_THROWS(band_powers(s, {{"empty", 5, 5}}, false));
  CHECK_THROWS(band_powers(s, {{"high", 100, 200}}, false));
}

TEST_CASE("stft") {
  for (std::size_t n : {128u, 191u, 192u, 1000u}) {
    auto st = stft(std::vector<double>(n, 0.0), 256);
    CHECK(static_cast<std::size_t>(st.magnitude.rows()) == (n - 128) / 64 + 1);
    CHECK(st.magnitude.isZero());
  }
  const double fs = 256, dur = 4;
  std::vector<double> chirp(static_cast<std::size_t>(fs * dur));
  for (std::size_t i = 0; i < chirp.size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    chirp[i] = std::sin(2 * std::numbers::pi * (5 * t + 0.5 * (35 / dur) * t * t));
  }
  auto st = stft(chirp, fs);
  Eigen::Index prev = 0;
  for (Eigen::Index r = 0; r < st.magnitude.rows(); ++r) {
    Eigen::Index arg;
    st.magnitude.row(r).maxCoeff(&arg);
    CHECK(arg >= prev);
    prev = arg;
  }
  CHECK_THROWS(stft(std::vector<double>(100, 0.0), 256));
}

TEST_CASE("db4 filters are orthonormal") {
  const auto& h = db4_lowpass();
  const auto& g = db4_highpass();
  for (int shift = 0; shift < 8; shift += 2) {
    double hh = 0, gg = 0, hg = 0;
    for (int k = 0; k + shift < 8; ++k) {
      hh += h[k] * h[k + shift];
      gg += g[k] * g[k + shift];
    }
    for (int k = 0; k < 8; ++k)
      for (int j = 0; j < 8; ++j)
        if (k - j == shift || j - k == shift) hg += h[k] * g[j];
    CHECK(hh == doctest::Approx(shift == 0 ? 1.0 : 0.0).epsilon(1e-12));
    CHECK(gg == doctest::Approx(shift == 0 ? 1.0 : 0.0).epsilon(1e-12));
    CHECK(std::abs(hg) < 1e-12);
  }
  CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("dwt energies") {
  auto x = white(1024, 13, 3.0);
  double norm = 0;
  for (double v : x) norm += v * v;
  for (int levels : {1, 3, 5}) {
    auto e = dwt_subband_energies(x, levels, BoundaryMode::periodization);
    CHECK(e.size() == static_cast<std::size_t>(levels + 1));
    CHECK(std::abs(std::accumulate(e.begin(), e.end(), 0.0) - norm) < 1e-6);
  }
  auto f = dwt_energies(x);
  CHECK(f.size() == 6);
  CHECK(f.names.back() == "dwt.a5");
  auto z = dwt_energies(std::vector<double>(256, 0.0), 4);
  CHECK(z.size() == 5);
  for (double v : z.values) CHECK(v == std::log(1e-12));
  CHECK(default_dwt_levels(16) == 2);
  CHECK_THROWS(dwt_energies(std::vector<double>(16, 0.0), 5));
  // A slow sine lives in the approximation band.
  auto slow = dwt_energies(sine(1024, 1, 256), 4);
  CHECK(std::max_element(slow.values.begin(), slow.values.end()) - slow.values.begin() == 4);
}

TEST_CASE("csp") {
  // Four channels; class 0 has extra variance on channel 1, class 1 on channel 3.
  Rng rng(14);
  std::vector<Matrix> epochs;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    Matrix e(4, 200);
    for (Eigen::Index k = 0; k < e.size(); ++k) e.data()[k] = rng.normal();
    const int cls = i % 2;
    e.row(cls == 0 ? 1 : 3) *= 4.0;
    epochs.push_back(e);
    labels.push_back(cls);
  }
  auto model = csp_fit(epochs, labels, 2);
  CHECK(model.filters.rows() == 4);
  CHECK(model.patterns.rows() == 4);
  Eigen::Index top, bottom;
  model.patterns.col(0).cwiseAbs().maxCoeff(&top);
  model.patterns.col(3).cwiseAbs().maxCoeff(&bottom);
  CHECK(top == 1);
  CHECK(bottom == 3);
  for (Eigen::Index i = 1; i < model.eigenvalues.size(); ++i) CHECK(model.eigenvalues(i) <= model.eigenvalues(i - 1));

  // Filters diagonalize the composite covariance.
  Matrix c = Matrix::Zero(4, 4);
  for (int cls = 0; cls < 2; ++cls) {
    Matrix acc = Matrix::Zero(4, 4);
    for (std::size_t i = static_cast<std::size_t>(cls); i < epochs.size(); i += 2) acc += normalized_covariance(epochs[i]);
    c += acc / 20.0;
  }
  Matrix d = model.filters * c * model.filters.transpose();
  CHECK((d - Matrix::Identity(4, 4)).norm() < 1e-9);

  std::vector<int> swapped;
  for (int l : labels) swapped.push_back(1 - l);
  auto sw = csp_fit(epochs, swapped, 2);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK(std::abs(sw.filters.row(i).dot(model.filters.row(3 - i))) ==
          doctest::Approx(model.filters.row(3 - i).squaredNorm()).epsilon(1e-6));

  auto feats = csp_features(epochs[0], model);
  const Matrix z = model.filters * epochs[0];
  const Matrix zc = z.colwise() - z.rowwise().mean();
  const double total = zc.rowwise().squaredNorm().sum();
  double recon = 0;
  for (double v : feats.values) recon += std::exp(v) * total;
  CHECK(recon == doctest::Approx(total));
  CHECK(feats.values[0] > feats.values[3]);  // class 0 epoch

  auto back = csp_from_json(csp_to_json(model));
  CHECK(back.filters == model.filters);

  std::vector<int> three = labels;
  three[0] = 2;
  CHECK_THROWS_WITH(csp_fit(epochs, three, 2), doctest::Contains("one-vs-rest"));
  CHECK_THROWS(csp_fit(epochs, labels, 3));
}

TEST_CASE("connectivity") {
  auto x = white(4096, 15);
  CHECK(coherence(x, x, 256) == doctest::Approx(1.0).epsilon(1e-6));
  auto self = xcorr(x, x);
  CHECK(self.value == doctest::Approx(1.0));
  CHECK(self.lag == 0);

  std::vector<double> delayed(x.size(), 0.0);
  for (std::size_t i = 5; i < x.size(); ++i) delayed[i] = x[i - 5];
  auto lagged = xcorr(x, delayed);
  CHECK(lagged.lag == 5);
  CHECK(xcorr(delayed, x).lag == -5);
  CHECK(phase_slope_index(x, delayed, 256) > 0);
  CHECK(phase_slope_index(delayed, x, 256) < 0);

  auto y = white(1 << 14, 16);
  auto z = white(1 << 14, 17);
  CHECK(coherence(y, z, 256) <= 0.1);
  CHECK(coherence(scaled(y, 7), z, 256) == doctest::Approx(coherence(y, z, 256)));

  CHECK_THROWS(coherence(std::vector<double>(128, 1.0), z, 256));
  CHECK_THROWS(xcorr(x, std::vector<double>(10, 0.0)));
  CHECK(connectivity_method_from_string("psi") == ConnectivityMethod::psi);
}
