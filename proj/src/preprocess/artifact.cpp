#include "noetic/preprocess/artifact.hpp"

#include "noetic/error.hpp"
#include "noetic/json_util.hpp"
#include "noetic/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace noetic::pre {

RegressionCleaner fit_regression_cleaner(const Matrix& calibration, std::span<const std::size_t> reference) {
  if (reference.empty()) throw Error("regression cleaner: no reference channels");
  const std::set<std::size_t> uniq(reference.begin(), reference.end());
  if (uniq.size() != reference.size()) throw Error("regression cleaner: duplicate reference channels");
  for (auto r : reference)
    if (r >= static_cast<std::size_t>(calibration.rows()))
      throw Error("regression cleaner: reference channel " + std::to_string(r) + " not present");
  if (static_cast<std::size_t>(calibration.cols()) < 10 * reference.size())
    throw Error("regression cleaner: calibration needs at least " + std::to_string(10 * reference.size()) +
                " samples");
  const auto nr = static_cast<Eigen::Index>(reference.size());
  Matrix r(nr, calibration.cols());
  for (Eigen::Index i = 0; i < nr; ++i) r.row(i) = calibration.row(static_cast<Eigen::Index>(reference[static_cast<std::size_t>(i)]));
  Matrix gram = r * r.transpose();
  gram.diagonal().array() += 1e-8;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw Error("regression cleaner: reference channels are rank deficient");
  RegressionCleaner c;
  c.reference.assign(reference.begin(), reference.end());
  c.coefficients = ldlt.solve(r * calibration.transpose());
  if (!c.coefficients.allFinite()) throw Error("regression cleaner: reference channels are rank deficient");
  for (auto ref : reference) c.coefficients.col(static_cast<Eigen::Index>(ref)).setZero();
  return c;
}

Matrix regression_clean(const Matrix& x, const RegressionCleaner& c) {
  if (x.rows() != c.coefficients.cols())
    throw Error("regression cleaner fitted on " + std::to_string(c.coefficients.cols()) + " channels, data has " +
                std::to_string(x.rows()));
  Matrix r(static_cast<Eigen::Index>(c.reference.size()), x.cols());
  for (std::size_t i = 0; i < c.reference.size(); ++i)
    r.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(c.reference[i]));
  return x - c.coefficients.transpose() * r;
}

nlohmann::json to_json(const RegressionCleaner& c) {
  return {{"reference", c.reference}, {"coefficients", matrix_to_json(c.coefficients)}};
}

RegressionCleaner regression_cleaner_from_json(const nlohmann::json& j) {
  try {
    RegressionCleaner c;
    c.reference = j.at("reference").get<std::vector<std::size_t>>();
    c.coefficients = matrix_from_json(j.at("coefficients"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("regression cleaner: ") + e.what());
  }
}

namespace {

// (W W^T)^{-1/2} W
Matrix symmetric_decorrelate(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(w * w.transpose());
  const Vector d = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose() * w;
}

double excess_kurtosis(const Eigen::Ref<const Eigen::RowVectorXd>& s) {
  const double mu = s.mean();
  const Eigen::ArrayXd d = (s.array() - mu).transpose();
  const double m2 = d.square().mean();
  if (m2 <= 0.0) return 0.0;
  return d.square().square().mean() / (m2 * m2) - 3.0;
}

double corr(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  const Eigen::ArrayXd x = (a.array() - a.mean()).transpose();
  const Eigen::ArrayXd y = (b.array() - b.mean()).transpose();
  const double denom = std::sqrt(x.square().sum() * y.square().sum());
  return denom > 0.0 ? (x * y).sum() / denom : 0.0;
}

}  // namespace

IcaModel ica_fit(const Matrix& data, const IcaParams& params) {
  const auto c = data.rows();
  const auto t = data.cols();
  if (c < 1) throw Error("ica: no channels");
  if (t < 20 * c)
    throw Error("ica: need at least " + std::to_string(20 * c) + " samples for " + std::to_string(c) + " channels");

  IcaModel m;
  m.seed = params.seed;
  m.mean = data.rowwise().mean();
  const Matrix x = data.colwise() - m.mean;
  const Matrix cov = x * x.transpose() / static_cast<double>(t);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Vector ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) throw Error("ica: data has zero variance");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = c - 1; i >= 0; --i)
    if (ev(i) >= 1e-12 * top) keep.push_back(i);
  const auto k = static_cast<Eigen::Index>(keep.size());
  Matrix whitener(k, c), dewhitener(c, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double s = std::sqrt(ev(keep[static_cast<std::size_t>(i)]));
    whitener.row(i) = es.eigenvectors().col(keep[static_cast<std::size_t>(i)]).transpose() / s;
    dewhitener.col(i) = es.eigenvectors().col(keep[static_cast<std::size_t>(i)]) * s;
  }
  const Matrix z = whitener * x;

  Rng rng(params.seed);
  Matrix w(k, k);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  w = symmetric_decorrelate(w);

  const double inv_t = 1.0 / static_cast<double>(t);
  for (m.iterations = 1; m.iterations <= params.max_iterations; ++m.iterations) {
    const Matrix y = w * z;
    const Matrix g = y.array().tanh().matrix();
    const Vector gp_mean = (1.0 - g.array().square()).rowwise().mean();
    Matrix w_new = g * z.transpose() * inv_t - gp_mean.asDiagonal() * w;
    w_new = symmetric_decorrelate(w_new);
    const double lim = ((w_new * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = w_new;
    if (lim < params.tolerance) {
      m.converged = true;
      break;
    }
  }
  m.iterations = std::min(m.iterations, params.max_iterations);

  Matrix unmixing = w * whitener;
  Matrix mixing = dewhitener * w.transpose();
  // Order by explained variance; the sources have unit variance, so that is |A_k|^2.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector power = mixing.colwise().squaredNorm();
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return power(a) > power(b); });
  m.whitener = whitener;
  m.unmixing.resize(k, c);
  m.mixing.resize(c, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto src = order[static_cast<std::size_t>(i)];
    Eigen::Index peak;
    mixing.col(src).cwiseAbs().maxCoeff(&peak);
    const double sign = mixing(peak, src) < 0.0 ? -1.0 : 1.0;
    m.unmixing.row(i) = sign * unmixing.row(src);
    m.mixing.col(i) = sign * mixing.col(src);
  }
  m.components = static_cast<std::size_t>(k);
  return m;
}

Matrix ica_sources(const IcaModel& model, const Matrix& x) {
  if (x.rows() != model.mean.size())
    throw Error("ica model expects " + std::to_string(model.mean.size()) + " channels, data has " +
                std::to_string(x.rows()));
  return model.unmixing * (x.colwise() - model.mean);
}

std::vector<std::size_t> frontal_channels(std::span<const ChannelInfo> channels) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& n = channels[i].name;
    const bool frontal = n.rfind("Fp", 0) == 0 || n.rfind("FP", 0) == 0 || n.rfind("AF", 0) == 0;
    if (channels[i].role == ChannelRole::eog_reference || frontal) out.push_back(i);
  }
  return out;
}

Vector blink_topography(const Matrix& calibration, std::span<const std::size_t> peaks) {
  if (peaks.empty()) throw Error("blink template: no blink events");
  const Vector mean = calibration.rowwise().mean();
  Vector acc = Vector::Zero(calibration.rows());
  for (auto p : peaks) {
    if (p >= static_cast<std::size_t>(calibration.cols())) throw Error("blink template: event outside calibration data");
    acc += calibration.col(static_cast<Eigen::Index>(p)) - mean;
  }
  return acc / static_cast<double>(peaks.size());
}

std::vector<std::size_t> ica_select_components(const IcaModel& model, const Matrix& x, const IcaRejectRule& rule) {
  const Matrix s = ica_sources(model, x);
  std::vector<std::size_t> out;
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    bool reject = false;
    if (excess_kurtosis(s.row(k)) > rule.kurtosis_threshold)
      for (auto ch : rule.frontal)
        if (ch < static_cast<std::size_t>(x.rows()) &&
            std::abs(corr(s.row(k), x.row(static_cast<Eigen::Index>(ch)))) > rule.channel_corr_threshold)
          reject = true;
    if (!reject && rule.blink_template) {
      const Vector& tpl = *rule.blink_template;
      if (tpl.size() != model.mixing.rows()) throw Error("ica: blink template has the wrong channel count");
      const Eigen::RowVectorXd a = model.mixing.col(k).transpose();
      if (std::abs(corr(a, tpl.transpose())) > rule.template_corr_threshold) reject = true;
    }
    if (reject) out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

Matrix ica_reconstruct(const IcaModel& model, const Matrix& x, std::span<const std::size_t> rejected) {
  Matrix a = model.mixing;
  for (auto k : rejected) {
    if (k >= model.components) throw Error("ica: component " + std::to_string(k) + " does not exist");
    a.col(static_cast<Eigen::Index>(k)).setZero();
  }
  if (rejected.empty()) return x;
  return (a * ica_sources(model, x)).colwise() + model.mean;
}

IcaCleanResult ica_clean(const Matrix& x, const IcaModel& model, const IcaRejectRule& rule) {
  IcaCleanResult r;
  r.rejected = ica_select_components(model, x, rule);
  r.cleaned = ica_reconstruct(model, x, r.rejected);
  return r;
}

nlohmann::json to_json(const IcaModel& m) {
  return {{"mean", vector_to_json(m.mean)},
          {"whitener", matrix_to_json(m.whitener)},
          {"unmixing", matrix_to_json(m.unmixing)},
          {"mixing", matrix_to_json(m.mixing)},
          {"components", m.components},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"seed", m.seed}};
}

IcaModel ica_model_from_json(const nlohmann::json& j) {
  try {
    IcaModel m;
    m.mean = vector_from_json(j.at("mean"));
    m.whitener = matrix_from_json(j.at("whitener"));
    m.unmixing = matrix_from_json(j.at("unmixing"));
    m.mixing = matrix_from_json(j.at("mixing"));
    m.components = j.at("components").get<std::size_t>();
    m.iterations = j.at("iterations").get<int>();
    m.converged = j.at("converged").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("ica model: ") + e.what());
  }
}

}  // namespace noetic::pre
