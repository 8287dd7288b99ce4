#pragma once

#include "noetic/signal.hpp"

#include <span>
#include <vector>

namespace noetic::classify {

struct ConfusionMetrics {
  Eigen::MatrixXi confusion;  // rows = true, cols = predicted
  double accuracy = 0.0;
  double mcc = 0.0;
  bool mcc_undefined = false;
};

/// Labels must lie in 0..n_classes-1.
ConfusionMetrics confusion_metrics(std::span<const int> y_true, std::span<const int> y_pred, int n_classes);

/// Wolpaw information transfer rate in bits per selection.
double itr_bits_per_selection(int n_classes, double accuracy);

}  // namespace noetic::classify
