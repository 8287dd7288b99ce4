#include "noetic/preprocess/filter.hpp"

#include "noetic/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace noetic::pre {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

std::string hz(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g Hz", v);
  return buf;
}

void check_cutoffs(FilterKind kind, const std::vector<double>& c, double fs, const char* what) {
  const bool band = kind == FilterKind::bandpass || kind == FilterKind::bandstop;
  if (!(fs > 0.0)) throw SpecError("filter: fs must be > 0");
  if (c.size() != (band ? 2u : 1u))
    throw SpecError(std::string("filter: ") + to_string(kind) + " needs " + (band ? "two " : "one ") + what);
  for (double v : c) {
    if (v >= fs / 2.0)
      throw SpecError("filter: " + hz(v) + " violates the Nyquist limit fs/2 = " + hz(fs / 2.0));
    if (!(v > 0.0)) throw SpecError("filter: " + std::string(what) + " must be > 0 Hz");
  }
  if (band && !(c[0] < c[1])) throw SpecError("filter: band edges must be increasing");
}

// Prewarped analog frequency for a digital edge, with the 2 fs factor dropped.
double warp(double f, double fs) { return std::tan(kPi * f / fs); }
double unwarp(double w, double fs) { return std::atan(w) * fs / kPi; }

cd bilinear(cd s) { return (1.0 + s) / (1.0 - s); }

std::vector<Section> pair_poles(std::vector<cd> poles, FilterKind kind, double w0_digital) {
  // Conjugate pairs first (positive imaginary part as representative), then reals.
  std::vector<cd> upper, reals;
  for (auto p : poles) {
    if (std::abs(p.imag()) < 1e-12 * std::max(1.0, std::abs(p)))
      reals.push_back(p.real());
    else if (p.imag() > 0)
      upper.push_back(p);
  }
  std::sort(upper.begin(), upper.end(), [](cd a, cd b) { return std::abs(a) < std::abs(b); });
  std::sort(reals.begin(), reals.end(), [](cd a, cd b) { return a.real() < b.real(); });
  std::vector<Section> out;
  auto zeros = [&](Section& s, bool single) {
    switch (kind) {
      case FilterKind::lowpass: s.b = single ? std::array<double, 3>{1, 1, 0} : std::array<double, 3>{1, 2, 1}; break;
      case FilterKind::highpass: s.b = single ? std::array<double, 3>{1, -1, 0} : std::array<double, 3>{1, -2, 1}; break;
      case FilterKind::bandpass: s.b = {1, 0, -1}; break;
      case FilterKind::bandstop: s.b = {1, -2 * std::cos(w0_digital), 1}; break;
    }
  };
  for (auto p : upper) {
    Section s;
    s.a = {-2.0 * p.real(), std::norm(p)};
    zeros(s, false);
    out.push_back(s);
  }
  for (std::size_t i = 0; i < reals.size(); i += 2) {
    Section s;
    if (i + 1 < reals.size()) {
      const double p1 = reals[i].real(), p2 = reals[i + 1].real();
      s.a = {-(p1 + p2), p1 * p2};
      zeros(s, false);
    } else {
      s.a = {-reals[i].real(), 0.0};
      zeros(s, true);
    }
    out.push_back(s);
  }
  return out;
}

void normalize_sections(std::vector<Section>& sections, double omega) {
  for (auto& s : sections) {
    const double g = std::abs(s.response(omega));
    if (g <= 0.0) throw Error("filter: section has zero gain at its reference frequency");
    for (auto& b : s.b) b /= g;
  }
}

}  // namespace

std::string to_string(FilterKind k) {
  switch (k) {
    case FilterKind::lowpass: return "lowpass";
    case FilterKind::highpass: return "highpass";
    case FilterKind::bandpass: return "bandpass";
    case FilterKind::bandstop: return "bandstop";
  }
  return "?";
}

FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "lowpass") return FilterKind::lowpass;
  if (s == "highpass") return FilterKind::highpass;
  if (s == "bandpass") return FilterKind::bandpass;
  if (s == "bandstop") return FilterKind::bandstop;
  throw SpecError("unknown filter kind '" + s + "' (expected lowpass|highpass|bandpass|bandstop)");
}

cd Section::response(double omega) const {
  const cd z1 = std::polar(1.0, -omega);
  const cd z2 = z1 * z1;
  return (b[0] + b[1] * z1 + b[2] * z2) / (1.0 + a[0] * z1 + a[1] * z2);
}

std::array<cd, 2> Section::poles() const {
  const cd disc = std::sqrt(cd(a[0] * a[0] - 4.0 * a[1]));
  return {(-a[0] + disc) / 2.0, (-a[0] - disc) / 2.0};
}

cd FilterSpec::response(double f) const {
  const double omega = 2.0 * kPi * f / fs;
  cd h = 1.0;
  for (const auto& s : sections) h *= s.response(omega);
  return h;
}

double FilterSpec::magnitude_db(double f) const { return 20.0 * std::log10(std::abs(response(f))); }

nlohmann::json FilterSpec::to_json() const {
  auto secs = nlohmann::json::array();
  for (const auto& s : sections) secs.push_back({s.b[0], s.b[1], s.b[2], 1.0, s.a[0], s.a[1]});
  return {{"kind", to_string(kind)}, {"order", order}, {"cutoffs", cutoffs}, {"fs", fs}, {"sections", secs}};
}

FilterSpec filter_spec_from_json(const nlohmann::json& j) {
  try {
    FilterSpec f;
    f.kind = filter_kind_from_string(j.at("kind").get<std::string>());
    f.order = j.at("order").get<int>();
    f.cutoffs = j.at("cutoffs").get<std::vector<double>>();
    f.fs = j.at("fs").get<double>();
    for (const auto& s : j.at("sections")) {
      if (s.size() != 6) throw FormatError("filter: each section needs 6 coefficients");
      const double a0 = s[3].get<double>();
      Section sec;
      sec.b = {s[0].get<double>() / a0, s[1].get<double>() / a0, s[2].get<double>() / a0};
      sec.a = {s[4].get<double>() / a0, s[5].get<double>() / a0};
      f.sections.push_back(sec);
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("filter spec: ") + e.what());
  }
}

FilterSpec design_butterworth(FilterKind kind, const ExplicitDesign& d, double fs) {
  check_cutoffs(kind, d.cutoffs, fs, "cutoffs");
  if (d.order < 1 || d.order > 40) throw SpecError("filter: order must be in 1..40");
  const int n = d.order;

  std::vector<cd> proto;
  for (int k = 0; k < n; ++k) proto.push_back(std::polar(1.0, kPi * (2.0 * k + n + 1) / (2.0 * n)));

  std::vector<cd> analog;
  double w0_digital = 0.0, ref_omega = 0.0;
  switch (kind) {
    case FilterKind::lowpass: {
      const double wc = warp(d.cutoffs[0], fs);
      for (auto p : proto) analog.push_back(p * wc);
      ref_omega = 0.0;
      break;
    }
    case FilterKind::highpass: {
      const double wc = warp(d.cutoffs[0], fs);
      for (auto p : proto) analog.push_back(wc / p);
      ref_omega = kPi;
      break;
    }
    case FilterKind::bandpass:
    case FilterKind::bandstop: {
      const double w1 = warp(d.cutoffs[0], fs), w2 = warp(d.cutoffs[1], fs);
      const double bw = w2 - w1, w0sq = w1 * w2;
      for (auto p : proto) {
        const cd half = kind == FilterKind::bandpass ? p * bw / 2.0 : bw / (2.0 * p);
        const cd root = std::sqrt(half * half - w0sq);
        analog.push_back(half + root);
        analog.push_back(half - root);
      }
      w0_digital = 2.0 * std::atan(std::sqrt(w0sq));
      ref_omega = kind == FilterKind::bandpass ? w0_digital : 0.0;
      break;
    }
  }
  std::vector<cd> digital;
  for (auto s : analog) digital.push_back(bilinear(s));

  FilterSpec f;
  f.kind = kind;
  f.order = n;
  f.cutoffs = d.cutoffs;
  f.fs = fs;
  f.sections = pair_poles(digital, kind, w0_digital);
  normalize_sections(f.sections, ref_omega);
  return f;
}

ExplicitDesign butterworth_order(FilterKind kind, const EdgeDesign& d, double fs) {
  check_cutoffs(kind, d.passband, fs, "passband edges");
  check_cutoffs(kind, d.stopband, fs, "stopband edges");
  if (!(d.max_ripple_db > 0.0)) throw SpecError("filter: passband ripple must be > 0 dB");
  if (!(d.min_attenuation_db > d.max_ripple_db))
    throw SpecError("filter: stopband attenuation must exceed the passband ripple");

  const double eps_p = std::pow(10.0, 0.1 * d.max_ripple_db) - 1.0;
  const double eps_s = std::pow(10.0, 0.1 * d.min_attenuation_db) - 1.0;
  std::vector<double> wp, ws;
  for (double v : d.passband) wp.push_back(warp(v, fs));
  for (double v : d.stopband) ws.push_back(warp(v, fs));

  // Stopband edge expressed on the normalized lowpass prototype axis.
  double nat = 0.0;
  switch (kind) {
    case FilterKind::lowpass:
      if (!(ws[0] > wp[0])) throw SpecError("filter: lowpass stopband edge must lie above the passband edge");
      nat = ws[0] / wp[0];
      break;
    case FilterKind::highpass:
      if (!(ws[0] < wp[0])) throw SpecError("filter: highpass stopband edge must lie below the passband edge");
      nat = wp[0] / ws[0];
      break;
    case FilterKind::bandpass: {
      if (!(ws[0] < wp[0] && wp[1] < ws[1])) throw SpecError("filter: bandpass stopband must enclose the passband");
      const double bw = wp[1] - wp[0], w0sq = wp[0] * wp[1];
      nat = std::min(std::abs((ws[0] * ws[0] - w0sq) / (ws[0] * bw)), std::abs((ws[1] * ws[1] - w0sq) / (ws[1] * bw)));
      break;
    }
    case FilterKind::bandstop: {
      if (!(wp[0] < ws[0] && ws[1] < wp[1])) throw SpecError("filter: bandstop passband must enclose the stopband");
      const double bw = wp[1] - wp[0], w0sq = wp[0] * wp[1];
      nat = std::min(std::abs(ws[0] * bw / (w0sq - ws[0] * ws[0])), std::abs(ws[1] * bw / (w0sq - ws[1] * ws[1])));
      break;
    }
  }
  if (!(nat > 1.0)) throw SpecError("filter: transition band is empty");
  const int order =
      std::max(1, static_cast<int>(std::ceil(std::log10(eps_s / eps_p) / (2.0 * std::log10(nat)) - 1e-12)));

  // Prototype frequency of the -3 dB point when the passband edge sits at 1.
  const double w3 = std::pow(eps_p, -1.0 / (2.0 * order));
  ExplicitDesign out;
  out.order = order;
  switch (kind) {
    case FilterKind::lowpass: out.cutoffs = {unwarp(wp[0] * w3, fs)}; break;
    case FilterKind::highpass: out.cutoffs = {unwarp(wp[0] / w3, fs)}; break;
    case FilterKind::bandpass: {
      const double bw = wp[1] - wp[0], w0sq = wp[0] * wp[1];
      const double root = std::sqrt(w3 * w3 * bw * bw + 4.0 * w0sq);
      out.cutoffs = {unwarp((-w3 * bw + root) / 2.0, fs), unwarp((w3 * bw + root) / 2.0, fs)};
      break;
    }
    case FilterKind::bandstop: {
      const double bw = wp[1] - wp[0], w0sq = wp[0] * wp[1];
      const double q = bw / w3;
      const double root = std::sqrt(q * q + 4.0 * w0sq);
      out.cutoffs = {unwarp((-q + root) / 2.0, fs), unwarp((q + root) / 2.0, fs)};
      break;
    }
  }
  for (double c : out.cutoffs)
    if (!(c > 0.0 && c < fs / 2.0)) throw SpecError("filter: derived cutoff " + hz(c) + " falls outside (0, fs/2)");
  return out;
}

FilterSpec design_butterworth(FilterKind kind, const EdgeDesign& d, double fs) {
  return design_butterworth(kind, butterworth_order(kind, d, fs), fs);
}

namespace {

inline double step(const Section& s, std::array<double, 2>& z, double x) {
  const double y = s.b[0] * x + z[0];
  z[0] = s.b[1] * x - s.a[0] * y + z[1];
  z[1] = s.b[2] * x - s.a[1] * y;
  return y;
}

// Initial state of each section for a unit step already at steady state.
std::vector<std::array<double, 2>> steady_state(const std::vector<Section>& sections) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : sections) {
    const double g = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[0] + s.a[1]);
    const double z2 = s.b[2] - s.a[1] * g;
    const double z1 = s.b[1] - s.a[0] * g + z2;
    zi.push_back({z1 * scale, z2 * scale});
    scale *= g;
  }
  return zi;
}

std::vector<double> run(const std::vector<Section>& sections, std::vector<double> x,
                        std::vector<std::array<double, 2>> z) {
  for (std::size_t k = 0; k < sections.size(); ++k)
    for (auto& v : x) v = step(sections[k], z[k], v);
  return x;
}

}  // namespace

void StreamingFilter::process(Matrix& block) {
  const auto channels = static_cast<std::size_t>(block.rows());
  const std::size_t ns = spec_.sections.size();
  if (state_.size() != channels * ns) state_.assign(channels * ns, {0.0, 0.0});
  for (std::size_t c = 0; c < channels; ++c)
    for (Eigen::Index t = 0; t < block.cols(); ++t) {
      double v = block(static_cast<Eigen::Index>(c), t);
      for (std::size_t k = 0; k < ns; ++k) v = step(spec_.sections[k], state_[c * ns + k], v);
      block(static_cast<Eigen::Index>(c), t) = v;
    }
}

std::vector<double> sosfilt(const std::vector<Section>& sections, std::span<const double> x) {
  return run(sections, {x.begin(), x.end()}, std::vector<std::array<double, 2>>(sections.size(), {0.0, 0.0}));
}

std::vector<double> sosfiltfilt(const std::vector<Section>& sections, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min(3 * (2 * sections.size() + 1), n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = steady_state(sections);
  auto scaled = [&](double v) {
    auto z = zi;
    for (auto& p : z) {
      p[0] *= v;
      p[1] *= v;
    }
    return z;
  };
  auto forward_backward = [&](std::vector<double> v) {
    v = run(sections, v, scaled(v.front()));
    std::reverse(v.begin(), v.end());
    v = run(sections, v, scaled(v.front()));
    std::reverse(v.begin(), v.end());
    return v;
  };
  // Averaging both pass orders makes the result exactly reversal-equivariant;
  // the two differ only in the edge transients.
  auto a = forward_backward(ext);
  std::reverse(ext.begin(), ext.end());
  auto b = forward_backward(ext);
  std::reverse(b.begin(), b.end());
  std::vector<double> bwd(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) bwd[i] = 0.5 * (a[i] + b[i]);
  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad), bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

namespace {

Matrix filter_matrix(const Matrix& x, const FilterSpec& f, bool zero_phase) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    const Eigen::RowVectorXd row = x.row(c);
    std::span<const double> in(row.data(), static_cast<std::size_t>(row.size()));
    const auto y = zero_phase ? sosfiltfilt(f.sections, in) : sosfilt(f.sections, in);
    for (Eigen::Index t = 0; t < x.cols(); ++t) out(c, t) = y[static_cast<std::size_t>(t)];
  }
  return out;
}

void check_fs(double a, double b) {
  if (std::abs(a - b) > 1e-9 * std::max(a, b))
    throw Error("filter designed for fs = " + hz(b) + " applied to data at " + hz(a));
}

}  // namespace

SignalBlock apply_filter(const SignalBlock& x, const FilterSpec& f, bool zero_phase) {
  check_fs(x.fs, f.fs);
  SignalBlock out = x;
  out.samples = filter_matrix(x.samples, f, zero_phase);
  return out;
}

Epoch apply_filter(const Epoch& x, double fs, const FilterSpec& f, bool zero_phase) {
  check_fs(fs, f.fs);
  Epoch out = x;
  out.data = filter_matrix(x.data, f, zero_phase);
  return out;
}

}  // namespace noetic::pre
