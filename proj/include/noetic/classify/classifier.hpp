#pragma once

#include "noetic/classify/metrics.hpp"
#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace noetic::classify {

enum class ModelKind { nb, rmdm, tangent_linear };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct Hyperparams {
  double shrinkage = 0.1;
  double l2 = 1e-3;
  int steps = 500;
  double learning_rate = 0.1;
  double variance_floor = 1e-9;
  std::uint64_t seed = 0;
};

struct Logistic {
  Vector weights;
  double bias = 0.0;
};

struct ClassifierModel {
  ModelKind kind = ModelKind::nb;
  std::vector<int> classes;  // ascending
  Hyperparams hyper;

  // nb
  Matrix means;      // classes x features
  Matrix variances;  // classes x features
  Vector log_priors;

  // rmdm and tangent_linear
  std::vector<Matrix> class_means;
  Matrix reference;

  // tangent_linear: one model for two classes, otherwise one per class
  Vector feature_mean, feature_scale;
  std::vector<Logistic> logistic;

  std::size_t n_train = 0;
  std::uint64_t clamp_events = 0;

  std::size_t input_dim() const;
};

// Rows of `features` for nb; covariances for the Riemannian kinds.
struct TrainingData {
  Matrix features;
  std::vector<Matrix> covariances;

  std::size_t size() const { return covariances.empty() ? static_cast<std::size_t>(features.rows()) : covariances.size(); }
  TrainingData subset(std::span<const std::size_t> idx) const;
};

TrainingData covariances_from_epochs(const EpochSet& epochs, double shrinkage);

ClassifierModel train(ModelKind kind, const TrainingData& data, std::span<const int> labels, const Hyperparams& h = {});

struct Prediction {
  int class_id = 0;
  std::vector<double> scores;  // per entry of model.classes; larger is better
};

Prediction predict_features(const ClassifierModel& m, const Vector& x);
Prediction predict_covariance(const ClassifierModel& m, const Matrix& c);
/// Covariance (with the model's shrinkage) then predict.
Prediction predict_epoch(const ClassifierModel& m, const Matrix& epoch);
std::vector<int> predict_all(const ClassifierModel& m, const TrainingData& data);

/// k stratified folds; each entry lists test indices. Round-robin over
/// label-sorted indices with a seeded permutation inside each class.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

struct FoldResult {
  std::vector<std::size_t> test;
  double accuracy = 0.0;
  double mcc = 0.0;
};

struct CrossValidation {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double mean_mcc = 0.0;
};

CrossValidation cross_validate(ModelKind kind, const TrainingData& data, std::span<const int> labels, std::size_t k,
                               const Hyperparams& h = {});

nlohmann::json model_to_json(const ClassifierModel& m);
ClassifierModel model_from_json(const nlohmann::json& j);

}  // namespace noetic::classify
