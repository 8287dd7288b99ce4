#include "noetic/classify/classifier.hpp"

#include "noetic/classify/riemann.hpp"
#include "noetic/error.hpp"
#include "noetic/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

namespace noetic::classify {

namespace {

constexpr int kModelVersion = 1;

std::vector<int> class_list(std::span<const int> labels) {
  const std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

void check_training(std::span<const int> labels, std::size_t n) {
  if (labels.size() != n)
    throw Error("train: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " samples");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) throw Error("train: need at least 2 classes, got " + std::to_string(counts.size()));
  for (const auto& [c, n_c] : counts)
    if (n_c < 2) throw Error("train: class " + std::to_string(c) + " has fewer than 2 samples");
}

std::size_t argmax_lowest(const std::vector<double>& s) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] > s[best]) best = i;
  return best;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Full-batch gradient descent on the mean log loss plus (l2/2)|w|^2, bias unpenalized.
Logistic fit_logistic(const Matrix& x, const Vector& y, const Hyperparams& h) {
  Logistic m;
  m.weights = Vector::Zero(x.cols());
  const double n = static_cast<double>(x.rows());
  for (int step = 0; step < h.steps; ++step) {
    const Vector z = (x * m.weights).array() + m.bias;
    Vector r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = sigmoid(z(i)) - y(i);
    const Vector gw = x.transpose() * r / n + h.l2 * m.weights;
    const double gb = r.sum() / n;
    m.weights -= h.learning_rate * gw;
    m.bias -= h.learning_rate * gb;
  }
  return m;
}

Matrix tangent_features(const std::vector<Matrix>& covs, const Matrix& reference) {
  const auto n = reference.rows();
  Matrix out(static_cast<Eigen::Index>(covs.size()), n * (n + 1) / 2);
  for (std::size_t i = 0; i < covs.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = tangent_vector(covs[i], reference);
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("model: '" + s + "' is not a number");
  }
  if (used != s.size()) throw FormatError("model: '" + s + "' is not a number");
  return v;
}

nlohmann::json mat_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(num(m(r, c)));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix json_mat(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw FormatError("model: matrix row count mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = data[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw FormatError("model: matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = parse_num(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

nlohmann::json vec_json(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

Vector json_vec(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_num(j[i]);
  return v;
}

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::nb: return "nb";
    case ModelKind::rmdm: return "rmdm";
    case ModelKind::tangent_linear: return "tangent_linear";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "nb") return ModelKind::nb;
  if (s == "rmdm") return ModelKind::rmdm;
  if (s == "tangent_linear" || s == "tangent") return ModelKind::tangent_linear;
  throw Error("unknown classifier kind '" + s + "' (expected nb|rmdm|tangent_linear)");
}

std::size_t ClassifierModel::input_dim() const {
  return kind == ModelKind::nb ? static_cast<std::size_t>(means.cols()) : static_cast<std::size_t>(reference.rows());
}

TrainingData TrainingData::subset(std::span<const std::size_t> idx) const {
  TrainingData out;
  if (covariances.empty()) {
    out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(idx[i]));
  } else {
    for (auto i : idx) out.covariances.push_back(covariances[i]);
  }
  return out;
}

TrainingData covariances_from_epochs(const EpochSet& epochs, double shrinkage) {
  TrainingData d;
  for (const auto& e : epochs.epochs) d.covariances.push_back(epoch_covariance(e.data, shrinkage));
  return d;
}

ClassifierModel train(ModelKind kind, const TrainingData& data, std::span<const int> labels, const Hyperparams& h) {
  check_training(labels, data.size());
  const auto clamps_before = clamp_count();
  ClassifierModel m;
  m.kind = kind;
  m.classes = class_list(labels);
  m.hyper = h;
  m.n_train = labels.size();
  const auto k = static_cast<Eigen::Index>(m.classes.size());
  auto index_of = [&](int c) {
    return static_cast<Eigen::Index>(std::lower_bound(m.classes.begin(), m.classes.end(), c) - m.classes.begin());
  };

  if (kind == ModelKind::nb) {
    if (!data.covariances.empty() || data.features.cols() == 0) throw Error("train: nb needs feature rows");
    const auto f = data.features.cols();
    m.means = Matrix::Zero(k, f);
    m.variances = Matrix::Zero(k, f);
    m.log_priors = Vector::Zero(k);
    Vector counts = Vector::Zero(k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto c = index_of(labels[i]);
      m.means.row(c) += data.features.row(static_cast<Eigen::Index>(i));
      counts(c) += 1;
    }
    for (Eigen::Index c = 0; c < k; ++c) m.means.row(c) /= counts(c);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto c = index_of(labels[i]);
      m.variances.row(c) += (data.features.row(static_cast<Eigen::Index>(i)) - m.means.row(c)).array().square().matrix();
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      m.variances.row(c) = (m.variances.row(c) / counts(c)).array().max(h.variance_floor).matrix();
      m.log_priors(c) = std::log(counts(c) / static_cast<double>(labels.size()));
    }
    return m;
  }

  if (data.covariances.empty()) throw Error("train: " + to_string(kind) + " needs covariance matrices");
  const auto n = data.covariances[0].rows();
  for (const auto& c : data.covariances)
    if (c.rows() != n || c.cols() != n) throw Error("train: covariance matrices differ in size");

  if (kind == ModelKind::rmdm) {
    for (int cls : m.classes) {
      std::vector<Matrix> group;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cls) group.push_back(data.covariances[i]);
      m.class_means.push_back(riemann_mean(group).mean);
    }
    m.reference = riemann_mean(data.covariances).mean;
  } else {
    m.reference = riemann_mean(data.covariances).mean;
    Matrix x = tangent_features(data.covariances, m.reference);
    m.feature_mean = x.colwise().mean().transpose();
    m.feature_scale = ((x.rowwise() - m.feature_mean.transpose()).array().square().colwise().mean().sqrt()).transpose();
    for (Eigen::Index j = 0; j < m.feature_scale.size(); ++j)
      if (!(m.feature_scale(j) > 1e-12)) m.feature_scale(j) = 1.0;
    x = (x.rowwise() - m.feature_mean.transpose()).array().rowwise() / m.feature_scale.transpose().array();
    const std::size_t models = m.classes.size() == 2 ? 1 : m.classes.size();
    for (std::size_t j = 0; j < models; ++j) {
      // Binary: the positive class is the higher id.
      const int positive = m.classes.size() == 2 ? m.classes[1] : m.classes[j];
      Vector y(static_cast<Eigen::Index>(labels.size()));
      for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels[i] == positive ? 1.0 : 0.0;
      m.logistic.push_back(fit_logistic(x, y, h));
    }
  }
  m.clamp_events = clamp_count() - clamps_before;
  return m;
}

Prediction predict_features(const ClassifierModel& m, const Vector& x) {
  if (m.kind != ModelKind::nb) throw Error("predict: " + to_string(m.kind) + " expects a covariance or epoch");
  if (x.size() != m.means.cols())
    throw Error("predict: model expects " + std::to_string(m.means.cols()) + " features, got " + std::to_string(x.size()));
  Prediction p;
  for (Eigen::Index c = 0; c < m.means.rows(); ++c) {
    double s = m.log_priors(c);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double v = m.variances(c, j);
      const double d = x(j) - m.means(c, j);
      s += -0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
    }
    p.scores.push_back(s);
  }
  p.class_id = m.classes[argmax_lowest(p.scores)];
  return p;
}

Prediction predict_covariance(const ClassifierModel& m, const Matrix& c) {
  if (m.kind == ModelKind::nb) throw Error("predict: nb expects a feature vector");
  if (c.rows() != m.reference.rows() || c.cols() != m.reference.cols())
    throw Error("predict: model expects " + std::to_string(m.reference.rows()) + " channels, got " +
                std::to_string(c.rows()));
  Prediction p;
  if (m.kind == ModelKind::rmdm) {
    for (const auto& mean : m.class_means) p.scores.push_back(-airm_distance(c, mean));
  } else {
    const Vector t = (tangent_vector(c, m.reference) - m.feature_mean).cwiseQuotient(m.feature_scale);
    if (m.logistic.size() == 1) {
      const double pr = sigmoid(m.logistic[0].weights.dot(t) + m.logistic[0].bias);
      p.scores = {1.0 - pr, pr};
    } else {
      for (const auto& l : m.logistic) p.scores.push_back(sigmoid(l.weights.dot(t) + l.bias));
    }
  }
  p.class_id = m.classes[argmax_lowest(p.scores)];
  return p;
}

Prediction predict_epoch(const ClassifierModel& m, const Matrix& epoch) {
  return predict_covariance(m, epoch_covariance(epoch, m.hyper.shrinkage));
}

std::vector<int> predict_all(const ClassifierModel& m, const TrainingData& data) {
  std::vector<int> out;
  if (m.kind == ModelKind::nb) {
    for (Eigen::Index i = 0; i < data.features.rows(); ++i) out.push_back(predict_features(m, data.features.row(i).transpose()).class_id);
  } else {
    for (const auto& c : data.covariances) out.push_back(predict_covariance(m, c).class_id);
  }
  return out;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("cross-validation: k must be >= 2");
  if (k > labels.size())
    throw Error("cross-validation: k = " + std::to_string(k) + " exceeds the sample count " + std::to_string(labels.size()));
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> order;
  for (auto& [c, idx] : by_class) {
    shuffle(idx.begin(), idx.end(), rng);
    order.insert(order.end(), idx.begin(), idx.end());
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CrossValidation cross_validate(ModelKind kind, const TrainingData& data, std::span<const int> labels, std::size_t k,
                               const Hyperparams& h) {
  if (labels.size() != data.size()) throw Error("cross-validation: label count does not match the data");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  // Leave-one-out is the k = n special case and skips the per-class requirement.
  if (k != labels.size())
    for (const auto& [c, n] : counts)
      if (n < k)
        throw Error("cross-validation: class " + std::to_string(c) + " has " + std::to_string(n) +
                    " samples, fewer than k = " + std::to_string(k));
  const auto classes = class_list(labels);
  auto index_of = [&](int c) { return static_cast<int>(std::lower_bound(classes.begin(), classes.end(), c) - classes.begin()); };

  CrossValidation cv;
  for (const auto& test : stratified_folds(labels, k, h.seed)) {
    std::vector<std::size_t> train_idx;
    std::vector<bool> in_test(labels.size(), false);
    for (auto i : test) in_test[i] = true;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!in_test[i]) train_idx.push_back(i);
    std::vector<int> train_labels;
    for (auto i : train_idx) train_labels.push_back(labels[i]);
    const auto model = train(kind, data.subset(train_idx), train_labels, h);
    const auto pred = predict_all(model, data.subset(test));
    std::vector<int> yt, yp;
    for (std::size_t j = 0; j < test.size(); ++j) {
      yt.push_back(index_of(labels[test[j]]));
      yp.push_back(index_of(pred[j]));
    }
    const auto met = confusion_metrics(yt, yp, static_cast<int>(classes.size()));
    cv.folds.push_back({test, met.accuracy, met.mcc});
  }
  for (const auto& f : cv.folds) {
    cv.mean_accuracy += f.accuracy;
    cv.mean_mcc += f.mcc;
  }
  cv.mean_accuracy /= static_cast<double>(cv.folds.size());
  cv.mean_mcc /= static_cast<double>(cv.folds.size());
  return cv;
}

nlohmann::json model_to_json(const ClassifierModel& m) {
  nlohmann::json j;
  j["format"] = "noetic-model";
  j["version"] = kModelVersion;
  j["kind"] = to_string(m.kind);
  j["classes"] = m.classes;
  j["n_train"] = m.n_train;
  j["clamp_events"] = m.clamp_events;
  j["hyperparams"] = {{"shrinkage", num(m.hyper.shrinkage)},     {"l2", num(m.hyper.l2)},
                      {"steps", m.hyper.steps},                  {"learning_rate", num(m.hyper.learning_rate)},
                      {"variance_floor", num(m.hyper.variance_floor)}, {"seed", m.hyper.seed}};
  if (m.kind == ModelKind::nb) {
    j["means"] = mat_json(m.means);
    j["variances"] = mat_json(m.variances);
    j["log_priors"] = vec_json(m.log_priors);
  } else {
    j["reference"] = mat_json(m.reference);
    if (m.kind == ModelKind::rmdm) {
      auto arr = nlohmann::json::array();
      for (const auto& c : m.class_means) arr.push_back(mat_json(c));
      j["class_means"] = arr;
    } else {
      j["feature_mean"] = vec_json(m.feature_mean);
      j["feature_scale"] = vec_json(m.feature_scale);
      auto arr = nlohmann::json::array();
      for (const auto& l : m.logistic) arr.push_back({{"weights", vec_json(l.weights)}, {"bias", num(l.bias)}});
      j["logistic"] = arr;
    }
  }
  return j;
}

ClassifierModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "noetic-model") throw FormatError("model: not a noetic model document");
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) throw FormatError("model: unsupported version " + std::to_string(version));
    ClassifierModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.classes = j.at("classes").get<std::vector<int>>();
    m.n_train = j.value("n_train", std::size_t{0});
    m.clamp_events = j.value("clamp_events", std::uint64_t{0});
    const auto& h = j.at("hyperparams");
    m.hyper.shrinkage = parse_num(h.at("shrinkage"));
    m.hyper.l2 = parse_num(h.at("l2"));
    m.hyper.steps = h.at("steps").get<int>();
    m.hyper.learning_rate = parse_num(h.at("learning_rate"));
    m.hyper.variance_floor = parse_num(h.at("variance_floor"));
    m.hyper.seed = h.at("seed").get<std::uint64_t>();
    const auto k = static_cast<Eigen::Index>(m.classes.size());
    if (m.kind == ModelKind::nb) {
      m.means = json_mat(j.at("means"));
      m.variances = json_mat(j.at("variances"));
      m.log_priors = json_vec(j.at("log_priors"));
      if (m.means.rows() != k || m.variances.rows() != k || m.log_priors.size() != k ||
          m.variances.cols() != m.means.cols())
        throw FormatError("model: nb parameter shapes disagree with the class list");
    } else {
      m.reference = json_mat(j.at("reference"));
      if (m.kind == ModelKind::rmdm) {
        for (const auto& c : j.at("class_means")) m.class_means.push_back(json_mat(c));
        if (static_cast<Eigen::Index>(m.class_means.size()) != k) throw FormatError("model: class mean count mismatch");
      } else {
        m.feature_mean = json_vec(j.at("feature_mean"));
        m.feature_scale = json_vec(j.at("feature_scale"));
        for (const auto& l : j.at("logistic")) m.logistic.push_back({json_vec(l.at("weights")), parse_num(l.at("bias"))});
        const auto expected = m.classes.size() == 2 ? 1u : m.classes.size();
        if (m.logistic.size() != expected) throw FormatError("model: logistic model count mismatch");
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

}  // namespace noetic::classify
