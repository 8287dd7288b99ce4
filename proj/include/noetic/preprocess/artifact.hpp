#pragma once

#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <vector>

namespace noetic::pre {

struct RegressionCleaner {
  std::vector<std::size_t> reference;  // channel indices
  Matrix coefficients;                  // references x channels
};

RegressionCleaner fit_regression_cleaner(const Matrix& calibration, std::span<const std::size_t> reference);
Matrix regression_clean(const Matrix& x, const RegressionCleaner& cleaner);

nlohmann::json to_json(const RegressionCleaner& c);
RegressionCleaner regression_cleaner_from_json(const nlohmann::json& j);

struct IcaModel {
  Vector mean;           // channels
  Matrix whitener;       // k x channels
  Matrix unmixing;       // k x channels, sources = unmixing * (x - mean)
  Matrix mixing;         // channels x k
  std::size_t components = 0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
};

struct IcaParams {
  double tolerance = 1e-4;
  int max_iterations = 200;
  std::uint64_t seed = 0;
};

IcaModel ica_fit(const Matrix& data, const IcaParams& params = {});

Matrix ica_sources(const IcaModel& model, const Matrix& x);

struct IcaRejectRule {
  double kurtosis_threshold = 5.0;
  double channel_corr_threshold = 0.6;
  double template_corr_threshold = 0.7;
  std::vector<std::size_t> frontal;  // channels the kurtosis rule correlates against
  std::optional<Vector> blink_template;  // spatial topography, one entry per channel
};

/// Frontal channels: eog-reference roles plus names starting with Fp or AF.
std::vector<std::size_t> frontal_channels(std::span<const ChannelInfo> channels);

/// Mean topography (channel-mean removed) at the given sample indices.
Vector blink_topography(const Matrix& calibration, std::span<const std::size_t> peaks);

struct IcaCleanResult {
  Matrix cleaned;
  std::vector<std::size_t> rejected;
};

std::vector<std::size_t> ica_select_components(const IcaModel& model, const Matrix& x, const IcaRejectRule& rule);
Matrix ica_reconstruct(const IcaModel& model, const Matrix& x, std::span<const std::size_t> rejected);
IcaCleanResult ica_clean(const Matrix& x, const IcaModel& model, const IcaRejectRule& rule);

nlohmann::json to_json(const IcaModel& m);
IcaModel ica_model_from_json(const nlohmann::json& j);

}  // namespace noetic::pre
