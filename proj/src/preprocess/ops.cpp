#include "noetic/preprocess/ops.hpp"

#include "noetic/error.hpp"

#include <cmath>

namespace noetic::pre {

Matrix common_average_reference(const Matrix& data) {
  if (data.rows() < 2) throw Error("common average reference needs at least 2 channels");
  return data.rowwise() - data.colwise().mean();
}

Epoch common_average_reference(const Epoch& e) {
  Epoch out = e;
  out.data = common_average_reference(e.data);
  return out;
}

std::vector<double> kaiser(std::size_t length, double beta) {
  if (length == 0) return {};
  if (length == 1) return {1.0};
  std::vector<double> w(length);
  const double denom = std::cyl_bessel_i(0.0, beta);
  for (std::size_t n = 0; n < length; ++n) {
    const double r = 2.0 * static_cast<double>(n) / static_cast<double>(length - 1) - 1.0;
    w[n] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
  }
  // Exact mirror so the window is symmetric to the last bit.
  for (std::size_t n = 0; n < length / 2; ++n) w[length - 1 - n] = w[n];
  return w;
}

Epoch kaiser_window(const Epoch& e, double beta, std::size_t length) {
  const auto l = static_cast<std::size_t>(e.data.cols());
  if (length == 0) length = l;
  if (length != l)
    throw Error("kaiser window length " + std::to_string(length) + " does not match epoch length " + std::to_string(l));
  const auto w = kaiser(length, beta);
  Epoch out = e;
  for (Eigen::Index t = 0; t < e.data.cols(); ++t) out.data.col(t) *= w[static_cast<std::size_t>(t)];
  return out;
}

RejectionResult reject_epochs_amplitude(const EpochSet& epochs, double threshold_uv) {
  if (!(threshold_uv > 0.0)) throw Error("amplitude rejection threshold must be > 0");
  RejectionResult r;
  r.kept = epochs;
  r.kept.epochs.clear();
  r.report.input_count = epochs.size();
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& d = epochs.epochs[i].data;
    Eigen::Index row = 0, col = 0;
    const double peak = d.size() ? d.cwiseAbs().maxCoeff(&row, &col) : 0.0;
    if (peak > threshold_uv)
      r.report.rejected.push_back({i, static_cast<std::size_t>(row), peak, epochs.epochs[i].marker_t});
    else
      r.kept.epochs.push_back(epochs.epochs[i]);
  }
  return r;
}

}  // namespace noetic::pre
