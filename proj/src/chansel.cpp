#include "noetic/chansel.hpp"

#include "noetic/error.hpp"
#include "noetic/features/csp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace noetic::chansel {

namespace {

std::vector<double> column(const Matrix& m, Eigen::Index j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
  return out;
}

double entropy_bits(const std::map<int, std::size_t>& counts, double n) {
  double h = 0.0;
  for (const auto& [k, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double sample_variance(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() < 2) return 0.0;
  const double mu = row.mean();
  return (row.array() - mu).square().sum() / static_cast<double>(row.size() - 1);
}

std::vector<double> csp_scores(const EpochSet& epochs, std::span<const int> labels) {
  const std::size_t channels = epochs.channels.size();
  const std::size_t m = std::min<std::size_t>(3, channels / 2);
  if (m == 0) throw Error("channel selection: csp needs at least 2 channels");
  std::vector<Matrix> data;
  for (const auto& e : epochs.epochs) data.push_back(e.data);
  const auto model = features::csp_fit(data, labels, m, false);

  // Correlation between every channel and every CSP component, pooled over epochs.
  const auto k = model.filters.rows();
  const auto c = static_cast<Eigen::Index>(channels);
  Matrix sxy = Matrix::Zero(c, k);
  Vector sxx = Vector::Zero(c), syy = Vector::Zero(k);
  for (const auto& e : data) {
    const Matrix x = e.colwise() - e.rowwise().mean();
    const Matrix s = model.filters * x;
    sxy += x * s.transpose();
    sxx += x.rowwise().squaredNorm();
    syy += s.rowwise().squaredNorm();
  }
  std::vector<double> scores(channels, 0.0);
  for (Eigen::Index comp = 0; comp < k; ++comp) {
    const double lam = std::clamp(model.eigenvalues(comp), 1e-12, 1.0 - 1e-12);
    const double weight = std::abs(std::log(lam / (1.0 - lam)));
    for (Eigen::Index j = 0; j < c; ++j) {
      const double denom = std::sqrt(sxx(j) * syy(comp));
      const double r = denom > 0.0 ? std::abs(sxy(j, comp)) / denom : 0.0;
      scores[static_cast<std::size_t>(j)] = std::max(scores[static_cast<std::size_t>(j)], r * weight);
    }
  }
  return scores;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::correlation: return "correlation";
    case Method::mutual_information: return "mutual_information";
    case Method::chi_squared: return "chi_squared";
    case Method::csp: return "csp";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "correlation") return Method::correlation;
  if (s == "mutual_information" || s == "mi") return Method::mutual_information;
  if (s == "chi_squared" || s == "chi2") return Method::chi_squared;
  if (s == "csp") return Method::csp;
  throw Error("unknown channel selection method '" + s + "' (expected correlation|mutual_information|chi_squared|csp)");
}

Matrix channel_scalars(const EpochSet& epochs) {
  if (epochs.empty()) throw Error("channel selection: no epochs");
  const auto channels = epochs.epochs[0].data.rows();
  Matrix out(static_cast<Eigen::Index>(epochs.size()), channels);
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& d = epochs.epochs[i].data;
    if (d.rows() != channels) throw Error("channel selection: epochs disagree on channel count");
    for (Eigen::Index j = 0; j < channels; ++j)
      out(static_cast<Eigen::Index>(i), j) = std::log(sample_variance(d.row(j)) + 1e-12);
  }
  return out;
}

std::vector<int> quantile_bins(std::span<const double> x, int bins) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<int> out(n);
  std::size_t first = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && x[order[r]] != x[order[r - 1]]) first = r;
    out[order[r]] = static_cast<int>(first * static_cast<std::size_t>(bins) / n);
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double mutual_information_bits(std::span<const int> x, std::span<const int> y) {
  std::map<int, std::size_t> cx, cy;
  std::map<std::pair<int, int>, std::size_t> cxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++cx[x[i]];
    ++cy[y[i]];
    ++cxy[{x[i], y[i]}];
  }
  const double n = static_cast<double>(x.size());
  double hxy = 0.0;
  for (const auto& [k, c] : cxy) {
    const double p = static_cast<double>(c) / n;
    hxy -= p * std::log2(p);
  }
  return std::max(0.0, entropy_bits(cx, n) + entropy_bits(cy, n) - hxy);
}

double chi_squared(std::span<const int> x, std::span<const int> y) {
  std::map<int, std::size_t> cx, cy;
  std::map<std::pair<int, int>, std::size_t> cxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++cx[x[i]];
    ++cy[y[i]];
    ++cxy[{x[i], y[i]}];
  }
  const double n = static_cast<double>(x.size());
  double chi = 0.0;
  for (const auto& [a, ra] : cx)
    for (const auto& [b, cb] : cy) {
      const double e = static_cast<double>(ra) * static_cast<double>(cb) / n;
      auto it = cxy.find({a, b});
      const double o = it == cxy.end() ? 0.0 : static_cast<double>(it->second);
      chi += (o - e) * (o - e) / e;
    }
  return chi;
}

ChannelScores score_channels(const EpochSet& epochs, std::span<const int> labels, Method method) {
  if (labels.size() != epochs.size())
    throw Error("channel selection: " + std::to_string(labels.size()) + " labels for " +
                std::to_string(epochs.size()) + " epochs");
  if (epochs.size() < 4) throw Error("channel selection: need at least 4 epochs");
  const std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw Error("channel selection: degenerate labels (a single class)");
  if (method == Method::csp && classes.size() != 2)
    throw Error("channel selection: csp scoring needs exactly 2 classes");

  ChannelScores out;
  out.method = method;
  out.n_epochs = epochs.size();
  if (method == Method::csp) {
    out.scores = csp_scores(epochs, labels);
    return out;
  }
  const Matrix scalars = channel_scalars(epochs);
  const std::vector<int> y(labels.begin(), labels.end());
  for (Eigen::Index j = 0; j < scalars.cols(); ++j) {
    const auto x = column(scalars, j);
    double score = 0.0;
    if (method == Method::correlation) {
      std::vector<double> ind(x.size());
      // One-vs-rest; with two classes both indicators give the same |R|.
      for (int c : classes) {
        for (std::size_t i = 0; i < x.size(); ++i) ind[i] = labels[i] == c ? 1.0 : 0.0;
        score = std::max(score, std::abs(pearson(x, ind)));
      }
    } else {
      const auto bins = quantile_bins(x, 16);
      score = method == Method::mutual_information ? mutual_information_bits(bins, y) : chi_squared(bins, y);
    }
    out.scores.push_back(score);
  }
  return out;
}

std::vector<std::size_t> select_top_n(const ChannelScores& scores, std::size_t n) {
  if (n < 1 || n > scores.scores.size())
    throw Error("channel selection: n = " + std::to_string(n) + " outside 1.." + std::to_string(scores.scores.size()));
  std::vector<std::size_t> order(scores.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return scores.scores[a] > scores.scores[b]; });
  order.resize(n);
  return order;
}

nlohmann::json report_json(const ChannelScores& scores, std::span<const std::size_t> chosen,
                           std::span<const ChannelInfo> channels) {
  nlohmann::json j;
  j["method"] = to_string(scores.method);
  j["n_epochs"] = scores.n_epochs;
  j["scores"] = scores.scores;
  j["chosen"] = std::vector<std::size_t>(chosen.begin(), chosen.end());
  auto names = nlohmann::json::array();
  for (auto i : chosen) names.push_back(i < channels.size() ? channels[i].name : "ch" + std::to_string(i));
  j["chosen_names"] = names;
  return j;
}

}  // namespace noetic::chansel
