#include "noetic/classify/metrics.hpp"

#include "noetic/error.hpp"

#include <cmath>

namespace noetic::classify {

ConfusionMetrics confusion_metrics(std::span<const int> y_true, std::span<const int> y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) throw Error("metrics: label vectors differ in length");
  if (y_true.empty()) throw Error("metrics: no labels");
  if (n_classes < 1) throw Error("metrics: n_classes must be >= 1");
  ConfusionMetrics m;
  m.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    for (int v : {y_true[i], y_pred[i]})
      if (v < 0 || v >= n_classes)
        throw Error("metrics: label " + std::to_string(v) + " outside 0.." + std::to_string(n_classes - 1));
    ++m.confusion(y_true[i], y_pred[i]);
  }
  const Eigen::MatrixXd c = m.confusion.cast<double>();
  const double s = c.sum();
  const double correct = c.trace();
  m.accuracy = correct / s;
  // Gorodkin R_K: (c s - sum p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2)).
  const Vector t = c.rowwise().sum();
  const Vector p = c.colwise().sum().transpose();
  const double num = correct * s - p.dot(t);
  const double den = (s * s - p.squaredNorm()) * (s * s - t.squaredNorm());
  if (den <= 0.0) {
    m.mcc = 0.0;
    m.mcc_undefined = true;
  } else {
    m.mcc = num / std::sqrt(den);
  }
  return m;
}

double itr_bits_per_selection(int n_classes, double p) {
  if (n_classes < 2) throw Error("itr: need at least 2 classes");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("itr: accuracy must lie in [0, 1]");
  const double n = n_classes;
  double bits = std::log2(n);
  if (p > 0.0) bits += p * std::log2(p);
  if (p < 1.0) bits += (1.0 - p) * std::log2((1.0 - p) / (n - 1.0));
  return bits;
}

}  // namespace noetic::classify
