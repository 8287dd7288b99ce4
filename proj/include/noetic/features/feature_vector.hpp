#pragma once

#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace noetic::features {

// Names follow "chN.family.name", e.g. "ch3.relpow.alpha".
struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;

  void add(std::string name, double value) {
    names.push_back(std::move(name));
    values.push_back(value);
  }
  void append(const FeatureVector& other, const std::string& prefix = {});
  std::size_t size() const { return values.size(); }
};

// One row per epoch.
struct FeatureMatrix {
  std::vector<std::string> names;
  Matrix values;  // rows x features
  std::vector<std::optional<int>> labels;
  std::vector<double> marker_t;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return names.size(); }

  void append_row(const FeatureVector& row, std::optional<int> label, double t);
  /// Column-wise concatenation; rows must line up by marker time.
  static FeatureMatrix hconcat(const FeatureMatrix& a, const FeatureMatrix& b);
  /// Rows of `other` appended below; names must match.
  void vappend(const FeatureMatrix& other);
  std::vector<int> label_vector() const;

  /// Throws unless names are unique, values finite, and shapes agree.
  void validate() const;
};

std::string to_csv(const FeatureMatrix& m);
nlohmann::json to_json(const FeatureMatrix& m);
FeatureMatrix feature_matrix_from_json(const nlohmann::json& j);

}  // namespace noetic::features
