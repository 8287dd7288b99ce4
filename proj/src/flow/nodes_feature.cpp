#include "noetic/features/connectivity.hpp"
#include "noetic/features/csp.hpp"
#include "noetic/features/spectral.hpp"
#include "noetic/features/time_domain.hpp"
#include "noetic/features/wavelet.hpp"
#include "noetic/flow/node.hpp"
#include "noetic/io/recording.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <functional>

namespace noetic::flow {

namespace {

using features::FeatureMatrix;
using features::FeatureVector;
using EpochsPtr = std::shared_ptr<const EpochSet>;

std::vector<double> row_of(const Matrix& m, Eigen::Index r) { return {m.row(r).begin(), m.row(r).end()}; }

// Applies a single-channel kernel to every channel of every epoch.
class PerChannelFeature : public Node {
 public:
  using Kernel = std::function<FeatureVector(const std::vector<double>&, double fs)>;
  PerChannelFeature(NodeContext c, Kernel k) : Node(std::move(c)), kernel_(std::move(k)) {}
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& set = *std::get<EpochsPtr>(p);
    auto fm = std::make_shared<FeatureMatrix>();
    for (const auto& e : set.epochs) {
      FeatureVector row;
      for (Eigen::Index c = 0; c < e.data.rows(); ++c) {
        const auto& name = static_cast<std::size_t>(c) < set.channels.size() ? set.channels[static_cast<std::size_t>(c)].name
                                                                             : "ch" + std::to_string(c);
        row.append(kernel_(row_of(e.data, c), set.fs), name + ".");
      }
      fm->append_row(row, e.class_id, e.marker_t);
    }
    if (fm->rows() > 0) out.emit(0, std::shared_ptr<const FeatureMatrix>(std::move(fm)));
  }

 protected:
  Kernel kernel_;
};

class EntropyNode : public PerChannelFeature {
 public:
  explicit EntropyNode(NodeContext c) : PerChannelFeature(std::move(c), {}) {
    method_ = features::entropy_method_from_string(param("method").get<std::string>());
    params_.bins = param("bins").get<int>();
    params_.m = param("m").get<int>();
    params_.r_factor = param("r_factor").get<double>();
    kernel_ = [this](const std::vector<double>& x, double) {
      auto r = features::entropy(x, method_, params_);
      if (r.infinite) {
        // Largest finite sample entropy: one match among all template pairs.
        const double n = static_cast<double>(x.size()) - params_.m;
        r.value = std::log(n * (n - 1.0) / 2.0);
        ++capped_;
      }
      FeatureVector v;
      v.add("entropy." + param("method").get<std::string>(), r.value);
      return v;
    };
  }
  nlohmann::json result() const override { return {{"capped", capped_}}; }

 private:
  features::EntropyMethod method_;
  features::EntropyParams params_;
  std::size_t capped_ = 0;
};

std::vector<features::Band> bands_from(const nlohmann::json& j) {
  if (j.empty()) return features::default_bands();
  std::vector<features::Band> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw Error("feature.bandpower: band '" + it.key() + "' must be [lo, hi]");
    out.push_back({it.key(), v[0].get<double>(), v[1].get<double>()});
  }
  return out;
}

class ConnectivityNode : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& set = *std::get<EpochsPtr>(p);
    const auto name = param("method").get<std::string>();
    const auto method = features::connectivity_method_from_string(name);
    auto fm = std::make_shared<FeatureMatrix>();
    for (const auto& e : set.epochs) {
      FeatureVector row;
      for (Eigen::Index a = 0; a < e.data.rows(); ++a)
        for (Eigen::Index b = a + 1; b < e.data.rows(); ++b) {
          const auto pair = set.channels[static_cast<std::size_t>(a)].name + "-" + set.channels[static_cast<std::size_t>(b)].name;
          const auto r = features::connectivity(row_of(e.data, a), row_of(e.data, b), set.fs, method,
                                                param("lo").get<double>(), param("hi").get<double>());
          row.add(pair + "." + name, r.value);
          if (method == features::ConnectivityMethod::xcorr) row.add(pair + ".xcorr_lag", r.lag);
        }
      fm->append_row(row, e.class_id, e.marker_t);
    }
    if (fm->rows() > 0) out.emit(0, std::shared_ptr<const FeatureMatrix>(std::move(fm)));
  }
};

class CspNode : public Node {
 public:
  explicit CspNode(NodeContext c) : Node(std::move(c)) {
    const auto path = param("model").get<std::string>();
    if (!path.empty()) {
      model_ = features::csp_from_json(nlohmann::json::parse(io::read_file(path)));
    } else if (ctx_.mode == Mode::online) {
      fail("feature.csp: online use needs a fitted model file");
    }
  }
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& set = std::get<EpochsPtr>(p);
    if (model_) {
      emit(*set, out);
      return;
    }
    held_.push_back(set);  // fitted on everything at end of input
  }
  void on_end(Outbox& out) override {
    if (model_ || held_.empty()) return;
    EpochSet all = *held_.front();
    for (std::size_t i = 1; i < held_.size(); ++i)
      all.epochs.insert(all.epochs.end(), held_[i]->epochs.begin(), held_[i]->epochs.end());
    model_ = features::csp_fit(all, param("m").get<std::size_t>());
    emit(all, out);
  }
  nlohmann::json result() const override { return model_ ? features::csp_to_json(*model_) : nlohmann::json(nullptr); }

 private:
  void emit(const EpochSet& set, Outbox& out) {
    auto fm = std::make_shared<FeatureMatrix>();
    for (const auto& e : set.epochs) fm->append_row(features::csp_features(e.data, *model_), e.class_id, e.marker_t);
    if (fm->rows() > 0) out.emit(0, std::shared_ptr<const FeatureMatrix>(std::move(fm)));
  }

  std::optional<features::CspModel> model_;
  std::vector<EpochsPtr> held_;
};

FeatureMatrix take_rows(FeatureMatrix& m, std::size_t n) {
  FeatureMatrix head;
  head.names = m.names;
  head.values = m.values.topRows(static_cast<Eigen::Index>(n));
  head.labels.assign(m.labels.begin(), m.labels.begin() + static_cast<std::ptrdiff_t>(n));
  head.marker_t.assign(m.marker_t.begin(), m.marker_t.begin() + static_cast<std::ptrdiff_t>(n));
  const Eigen::Index rest = m.values.rows() - static_cast<Eigen::Index>(n);
  Matrix tail = m.values.bottomRows(rest);
  m.values = std::move(tail);
  m.labels.erase(m.labels.begin(), m.labels.begin() + static_cast<std::ptrdiff_t>(n));
  m.marker_t.erase(m.marker_t.begin(), m.marker_t.begin() + static_cast<std::ptrdiff_t>(n));
  return head;
}

class ConcatNode : public Node {
 public:
  using Node::Node;
  void on_input(std::size_t port, const Packet& p, Outbox& out) override {
    pending_[port].vappend(*std::get<std::shared_ptr<const FeatureMatrix>>(p));
    const auto n = std::min(pending_[0].rows(), pending_[1].rows());
    if (n == 0) return;
    auto a = take_rows(pending_[0], n);
    auto b = take_rows(pending_[1], n);
    out.emit(0, std::make_shared<const FeatureMatrix>(FeatureMatrix::hconcat(a, b)));
  }
  void on_end(Outbox&) override {
    if (pending_[0].rows() != pending_[1].rows())
      fail("feature.concat: inputs ended with " + std::to_string(pending_[0].rows()) + " and " +
           std::to_string(pending_[1].rows()) + " unmatched rows");
  }

 private:
  FeatureMatrix pending_[2];
};

class SpectrumNode : public Node {
 public:
  SpectrumNode(NodeContext c, bool periodogram) : Node(std::move(c)), periodogram_(periodogram) {}
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    const auto& set = *std::get<EpochsPtr>(p);
    auto batch = std::make_shared<SpectrumBatch>();
    batch->kind = periodogram_ ? "periodogram" : "fft";
    for (const auto& c : set.channels) batch->channels.push_back(c.name);
    for (const auto& e : set.epochs) {
      Matrix power;
      for (Eigen::Index c = 0; c < e.data.rows(); ++c) {
        const auto x = row_of(e.data, c);
        std::vector<double> f, v;
        if (periodogram_) {
          features::WelchParams wp{param("segment").get<std::size_t>(), param("overlap").get<double>()};
          auto s = features::welch_psd(x, set.fs, wp);
          f = std::move(s.freqs);
          v = std::move(s.power);
        } else {
          std::tie(f, v) = magnitude_spectrum(x, set.fs);
        }
        if (power.size() == 0) {
          power.resize(e.data.rows(), static_cast<Eigen::Index>(v.size()));
          batch->freqs = f;
        }
        for (std::size_t k = 0; k < v.size(); ++k) power(c, static_cast<Eigen::Index>(k)) = v[k];
      }
      batch->power.push_back(std::move(power));
      batch->marker_t.push_back(e.marker_t);
    }
    if (!batch->power.empty()) out.emit(0, std::shared_ptr<const SpectrumBatch>(std::move(batch)));
  }

  static std::pair<std::vector<double>, std::vector<double>> magnitude_spectrum(const std::vector<double>& x, double fs) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> X;
    fft.fwd(X, x);
    const std::size_t n = x.size();
    std::vector<double> f(n / 2 + 1), v(n / 2 + 1);
    for (std::size_t k = 0; k < f.size(); ++k) {
      f[k] = static_cast<double>(k) * fs / static_cast<double>(n);
      const double scale = (k == 0 || (n % 2 == 0 && k == n / 2)) ? 1.0 : 2.0;
      v[k] = scale * std::abs(X[k]) / static_cast<double>(n);
    }
    return {f, v};
  }

 private:
  bool periodogram_;
};

template <typename F>
NodeFactory per_channel(F kernel) {
  return [kernel](NodeContext c) {
    auto k = [kernel, params = c.params](const std::vector<double>& x, double fs) { return kernel(x, fs, params); };
    return std::make_unique<PerChannelFeature>(std::move(c), k);
  };
}

}  // namespace

void register_feature_nodes(std::vector<NodeEntry>& out) {
  const std::vector<PortDecl> ep_in{{"in", PortType::epochs}};
  const std::vector<PortDecl> f_out{{"out", PortType::features}};
  using J = nlohmann::json;

  out.push_back({{"feature.moments", NodeRole::transform, "Mean, variance, skewness and excess kurtosis", ep_in, f_out, {}},
                 per_channel([](const std::vector<double>& x, double, const J&) {
                   const auto m = features::moments(x);
                   FeatureVector v;
                   v.add("moments.mean", m.mean);
                   v.add("moments.variance", m.variance);
                   v.add("moments.skewness", m.skewness);
                   v.add("moments.kurtosis", m.kurtosis);
                   return v;
                 })});
  out.push_back({{"feature.fractal", NodeRole::transform, "Higuchi or Katz fractal dimension", ep_in, f_out,
                  {choice_param("method", "higuchi", {"higuchi", "katz"}, "estimator"),
                   integer_param("k_max", 8, "Higuchi largest interval", 2, 64)}},
                 per_channel([](const std::vector<double>& x, double, const J& p) {
                   const auto method = p.at("method").get<std::string>();
                   FeatureVector v;
                   v.add("fd." + method, method == "higuchi" ? features::higuchi_fd(x, p.at("k_max").get<int>())
                                                             : features::katz_fd(x));
                   return v;
                 })});
  out.push_back({{"feature.entropy", NodeRole::transform,
                  "Shannon, approximate or sample entropy; infinite sample entropy is capped", ep_in, f_out,
                  {choice_param("method", "sample", {"shannon", "approximate", "sample"}, "estimator"),
                   integer_param("bins", 64, "histogram bins (shannon)", 2, 4096),
                   integer_param("m", 2, "template length", 1, 10),
                   number_param("r_factor", 0.2, "tolerance as a multiple of the std", 0.0)}},
                 [](NodeContext c) { return std::make_unique<EntropyNode>(std::move(c)); }});
  out.push_back({{"feature.hjorth", NodeRole::transform, "Hjorth activity, mobility and complexity", ep_in, f_out, {}},
                 per_channel([](const std::vector<double>& x, double, const J&) {
                   const auto h = features::hjorth(x);
                   FeatureVector v;
                   v.add("hjorth.activity", h.activity);
                   v.add("hjorth.mobility", h.mobility);
                   v.add("hjorth.complexity", h.complexity);
                   return v;
                 })});
  out.push_back({{"feature.dfa", NodeRole::transform, "Detrended fluctuation exponent", ep_in, f_out, {}},
                 per_channel([](const std::vector<double>& x, double, const J&) {
                   FeatureVector v;
                   v.add("dfa.alpha", features::dfa(x));
                   return v;
                 })});
  out.push_back({{"feature.bandpower", NodeRole::transform, "Welch band power, absolute or relative to 1-45 Hz",
                  ep_in, f_out,
                  {param("bands", ParamType::object, J::object(), "name -> [lo, hi] Hz (empty: standard bands)"),
                   param("relative", ParamType::boolean, true, "divide by total 1-45 Hz power"),
                   integer_param("segment", 256, "Welch segment length", 8),
                   number_param("overlap", 0.5, "Welch overlap fraction", 0.0, 0.95)}},
                 [](NodeContext c) {
                   const auto bands = bands_from(c.params.at("bands"));
                   const auto relative = c.params.at("relative").get<bool>();
                   const features::WelchParams wp{c.params.at("segment").get<std::size_t>(),
                                                  c.params.at("overlap").get<double>()};
                   auto k = [bands, relative, wp](const std::vector<double>& x, double fs) {
                     return features::band_powers(features::welch_psd(x, fs, wp), bands, relative);
                   };
                   return std::make_unique<PerChannelFeature>(std::move(c), k);
                 }});
  out.push_back({{"feature.dwt", NodeRole::transform, "Daubechies-4 sub-band energies", ep_in, f_out,
                  {integer_param("levels", 0, "decomposition levels (0: automatic)", 0, 20),
                   choice_param("mode", "symmetric", {"symmetric", "periodization"}, "boundary handling")}},
                 per_channel([](const std::vector<double>& x, double, const J& p) {
                   const auto mode = p.at("mode").get<std::string>() == "periodization"
                                         ? features::BoundaryMode::periodization
                                         : features::BoundaryMode::symmetric;
                   return features::dwt_energies(x, p.at("levels").get<int>(), mode);
                 })});
  out.push_back({{"feature.stft", NodeRole::transform, "Mean STFT magnitude per frequency bin", ep_in, f_out,
                  {integer_param("window", 128, "frame length", 8), integer_param("hop", 64, "frame step", 1)}},
                 per_channel([](const std::vector<double>& x, double fs, const J& p) {
                   const auto s = features::stft(x, fs, p.at("window").get<std::size_t>(), p.at("hop").get<std::size_t>());
                   FeatureVector v;
                   const Eigen::VectorXd mean = s.magnitude.colwise().mean();
                   char buf[48];
                   for (std::size_t k = 0; k < s.freqs.size(); ++k) {
                     std::snprintf(buf, sizeof buf, "stft.%gHz", s.freqs[k]);
                     v.add(buf, mean(static_cast<Eigen::Index>(k)));
                   }
                   return v;
                 })});
  out.push_back({{"feature.csp", NodeRole::transform,
                  "Log-variance of CSP projections; fitted on the input offline when no model is given", ep_in, f_out,
                  {integer_param("m", 3, "filter pairs", 1, 32), param("model", ParamType::string, "", "CSP model JSON path")},
                  false},
                 [](NodeContext c) { return std::make_unique<CspNode>(std::move(c)); }});
  out.push_back({{"feature.connectivity", NodeRole::transform, "Pairwise cross-correlation, coherence or PSI",
                  ep_in, f_out,
                  {choice_param("method", "coherence", {"xcorr", "coherence", "psi"}, "measure"),
                   number_param("lo", 1.0, "band low edge, Hz", 0.0), number_param("hi", 45.0, "band high edge, Hz", 0.0)}},
                 [](NodeContext c) { return std::make_unique<ConnectivityNode>(std::move(c)); }});
  out.push_back({{"feature.concat", NodeRole::transform, "Joins two feature sets row by row",
                  {{"a", PortType::features}, {"b", PortType::features}}, f_out, {}},
                 [](NodeContext c) { return std::make_unique<ConcatNode>(std::move(c)); }});
  out.push_back({{"spectrum.welch", NodeRole::transform, "Welch periodogram per epoch and channel", ep_in,
                  {{"out", PortType::spectrum}},
                  {integer_param("segment", 256, "segment length", 8),
                   number_param("overlap", 0.5, "overlap fraction", 0.0, 0.95)}},
                 [](NodeContext c) { return std::make_unique<SpectrumNode>(std::move(c), true); }});
  out.push_back({{"spectrum.fft", NodeRole::transform, "One-sided FFT magnitude per epoch and channel", ep_in,
                  {{"out", PortType::spectrum}}, {}},
                 [](NodeContext c) { return std::make_unique<SpectrumNode>(std::move(c), false); }});
}

}  // namespace noetic::flow
