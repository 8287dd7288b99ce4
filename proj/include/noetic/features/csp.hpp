#pragma once

#include "noetic/features/feature_vector.hpp"
#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <vector>

namespace noetic::features {

struct CspModel {
  Matrix filters;         // 2m x channels; rows ordered by eigenvalue, largest first
  Matrix patterns;        // channels x 2m
  Vector eigenvalues;     // whitened class-a eigenvalue of each retained filter
  int class_a = 0;        // the lower class id
  int class_b = 1;
  std::size_t m = 3;
};

/// Trace-normalized spatial covariance of one epoch (channels x L).
Matrix normalized_covariance(const Matrix& epoch);

/// With trace_normalize off, class covariances are plain averages, which makes
/// the filtered components invariant to per-channel gain.
CspModel csp_fit(std::span<const Matrix> epochs, std::span<const int> labels, std::size_t m = 3,
                 bool trace_normalize = true);
CspModel csp_fit(const EpochSet& epochs, std::size_t m = 3);

/// ln(var_i / sum var) over the 2m filtered signals, named "csp.0".."csp.<2m-1>".
FeatureVector csp_features(const Matrix& epoch, const CspModel& model);

nlohmann::json csp_to_json(const CspModel& model);
CspModel csp_from_json(const nlohmann::json& j);

}  // namespace noetic::features
