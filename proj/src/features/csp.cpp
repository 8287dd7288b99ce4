#include "noetic/features/csp.hpp"

#include "noetic/error.hpp"
#include "noetic/json_util.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace noetic::features {


Matrix normalized_covariance(const Matrix& epoch) {
  const Matrix centered = epoch.colwise() - epoch.rowwise().mean();
  Matrix c = centered * centered.transpose();
  const double tr = c.trace();
  if (!(tr > 0.0)) throw Error("csp: epoch has zero variance on every channel");
  return c / tr;
}

CspModel csp_fit(std::span<const Matrix> epochs, std::span<const int> labels, std::size_t m, bool trace_normalize) {
  if (epochs.size() != labels.size()) throw Error("csp: epoch and label counts differ");
  if (epochs.empty()) throw Error("csp: no epochs");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() > 2)
    throw Error("csp: " + std::to_string(by_class.size()) +
                " classes given; CSP is two-class, wrap it one-vs-rest for more");
  if (by_class.size() < 2) throw Error("csp: need exactly 2 classes");
  for (const auto& [cls, idx] : by_class)
    if (idx.size() < 2) throw Error("csp: class " + std::to_string(cls) + " has fewer than 2 epochs");
  const auto channels = static_cast<std::size_t>(epochs[0].rows());
  if (m < 1 || 2 * m > channels)
    throw Error("csp: m = " + std::to_string(m) + " needs at least " + std::to_string(2 * m) + " channels, have " +
                std::to_string(channels));

  std::vector<Matrix> means;
  std::vector<int> classes;
  for (const auto& [cls, idx] : by_class) {
    Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(channels));
    for (auto i : idx) {
      if (static_cast<std::size_t>(epochs[i].rows()) != channels) throw Error("csp: epochs disagree on channel count");
      if (trace_normalize) {
        acc += normalized_covariance(epochs[i]);
      } else {
        const Matrix centered = epochs[i].colwise() - epochs[i].rowwise().mean();
        acc += centered * centered.transpose() / static_cast<double>(std::max<Eigen::Index>(1, centered.cols() - 1));
      }
    }
    means.push_back(acc / static_cast<double>(idx.size()));
    classes.push_back(cls);
  }

  const Matrix composite = means[0] + means[1];
  Eigen::SelfAdjointEigenSolver<Matrix> ce(composite);
  const Vector lam = ce.eigenvalues();
  if (lam.minCoeff() <= 1e-12 * lam.maxCoeff()) throw Error("csp: composite covariance is singular");
  const Matrix p = lam.cwiseInverse().cwiseSqrt().asDiagonal() * ce.eigenvectors().transpose();
  const Matrix s1 = p * means[0] * p.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> se(0.5 * (s1 + s1.transpose()));
  const Vector ev = se.eigenvalues();  // ascending
  const Matrix full = se.eigenvectors().transpose() * p;  // rows are filters

  const auto n = static_cast<Eigen::Index>(channels);
  const auto mm = static_cast<Eigen::Index>(m);
  CspModel model;
  model.m = m;
  model.class_a = classes[0];
  model.class_b = classes[1];
  model.filters.resize(2 * mm, n);
  model.eigenvalues.resize(2 * mm);
  for (Eigen::Index i = 0; i < mm; ++i) {
    model.filters.row(i) = full.row(n - 1 - i);
    model.eigenvalues(i) = ev(n - 1 - i);
    model.filters.row(2 * mm - 1 - i) = full.row(i);
    model.eigenvalues(2 * mm - 1 - i) = ev(i);
  }
  model.patterns = model.filters.completeOrthogonalDecomposition().pseudoInverse();
  return model;
}

CspModel csp_fit(const EpochSet& set, std::size_t m) {
  std::vector<Matrix> data;
  for (const auto& e : set.epochs) data.push_back(e.data);
  const auto labels = set.labels();
  return csp_fit(data, labels, m);
}

FeatureVector csp_features(const Matrix& epoch, const CspModel& model) {
  if (epoch.rows() != model.filters.cols())
    throw Error("csp: epoch has " + std::to_string(epoch.rows()) + " channels, model expects " +
                std::to_string(model.filters.cols()));
  const Matrix z = model.filters * epoch;
  const Matrix centered = z.colwise() - z.rowwise().mean();
  const Vector var = centered.rowwise().squaredNorm();
  const double total = var.sum();
  FeatureVector out;
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    // Flat epochs give equal shares rather than -inf.
    const double share = total > 0.0 ? std::max(var(i) / total, 1e-300) : 1.0 / static_cast<double>(var.size());
    out.add("csp." + std::to_string(i), std::log(share));
  }
  return out;
}

nlohmann::json csp_to_json(const CspModel& model) {
  const auto ev = vector_to_json(model.eigenvalues);
  return {{"filters", matrix_to_json(model.filters)},
          {"patterns", matrix_to_json(model.patterns)},
          {"eigenvalues", ev},
          {"class_a", model.class_a},
          {"class_b", model.class_b},
          {"m", model.m}};
}

CspModel csp_from_json(const nlohmann::json& j) {
  try {
    CspModel model;
    model.filters = matrix_from_json(j.at("filters"));
    model.patterns = matrix_from_json(j.at("patterns"));
    model.eigenvalues = vector_from_json(j.at("eigenvalues"));
    model.class_a = j.at("class_a").get<int>();
    model.class_b = j.at("class_b").get<int>();
    model.m = j.at("m").get<std::size_t>();
    if (model.filters.rows() != static_cast<Eigen::Index>(2 * model.m)) throw FormatError("csp: filter count mismatch");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("csp model: ") + e.what());
  }
}

}  // namespace noetic::features
