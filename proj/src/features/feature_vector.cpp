#include "noetic/features/feature_vector.hpp"

#include "noetic/error.hpp"

#include <cstdio>
#include <unordered_set>

namespace noetic::features {

void FeatureVector::append(const FeatureVector& other, const std::string& prefix) {
  for (std::size_t i = 0; i < other.size(); ++i) add(prefix + other.names[i], other.values[i]);
}

void FeatureMatrix::append_row(const FeatureVector& row, std::optional<int> label, double t) {
  if (values.rows() == 0 && names.empty()) names = row.names;
  if (row.names != names) throw Error("feature row layout differs from matrix layout");
  values.conservativeResize(values.rows() + 1, static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < row.size(); ++j) values(values.rows() - 1, static_cast<Eigen::Index>(j)) = row.values[j];
  labels.push_back(label);
  marker_t.push_back(t);
}

FeatureMatrix FeatureMatrix::hconcat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.rows() != b.rows()) throw Error("cannot concatenate feature matrices with different row counts");
  for (std::size_t i = 0; i < a.rows(); ++i)
    if (a.marker_t[i] != b.marker_t[i]) throw Error("feature rows are not aligned by epoch");
  FeatureMatrix out;
  out.names = a.names;
  out.names.insert(out.names.end(), b.names.begin(), b.names.end());
  out.values.resize(a.values.rows(), a.values.cols() + b.values.cols());
  out.values << a.values, b.values;
  out.labels = a.labels;
  out.marker_t = a.marker_t;
  return out;
}

void FeatureMatrix::vappend(const FeatureMatrix& other) {
  if (other.rows() == 0) return;
  if (rows() == 0 && names.empty()) {
    *this = other;
    return;
  }
  if (other.names != names) throw Error("feature matrices have different layouts");
  const auto r = values.rows();
  values.conservativeResize(r + other.values.rows(), values.cols());
  values.bottomRows(other.values.rows()) = other.values;
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  marker_t.insert(marker_t.end(), other.marker_t.begin(), other.marker_t.end());
}

std::vector<int> FeatureMatrix::label_vector() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) throw Error("feature row " + std::to_string(i) + " has no label");
    out.push_back(*labels[i]);
  }
  return out;
}

void FeatureMatrix::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second) throw Error("duplicate feature name '" + n + "'");
  if (static_cast<std::size_t>(values.cols()) != names.size() && values.rows() > 0)
    throw Error("feature matrix width does not match names");
  if (labels.size() != rows() || marker_t.size() != rows()) throw Error("feature matrix metadata length mismatch");
  if (!values.allFinite()) throw Error("feature matrix holds non-finite values");
}

std::string to_csv(const FeatureMatrix& m) {
  std::string out = "marker_t,label";
  for (const auto& n : m.names) out += "," + n;
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", m.marker_t[i]);
    out += buf;
    out += ',';
    if (m.labels[i]) out += std::to_string(*m.labels[i]);
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", m.values(static_cast<Eigen::Index>(i), j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const FeatureMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<double> r(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] = m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    rows.push_back({{"t", m.marker_t[i]},
                    {"label", m.labels[i] ? nlohmann::json(*m.labels[i]) : nlohmann::json(nullptr)},
                    {"values", r}});
  }
  return {{"names", m.names}, {"rows", rows}};
}

FeatureMatrix feature_matrix_from_json(const nlohmann::json& j) {
  FeatureMatrix m;
  m.names = j.at("names").get<std::vector<std::string>>();
  const auto& rows = j.at("rows");
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.names.size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    auto v = r.at("values").get<std::vector<double>>();
    if (v.size() != m.names.size()) throw Error("feature row width mismatch");
    for (std::size_t k = 0; k < v.size(); ++k) m.values(i, static_cast<Eigen::Index>(k)) = v[k];
    m.marker_t.push_back(r.at("t").get<double>());
    m.labels.push_back(r.at("label").is_null() ? std::nullopt : std::optional<int>(r.at("label").get<int>()));
    ++i;
  }
  return m;
}

}  // namespace noetic::features
