#pragma once

#include "noetic/signal.hpp"

#include <limits>
#include <vector>

namespace noetic::pre {

/// Subtracts the cross-channel mean from every sample vector.
Matrix common_average_reference(const Matrix& data);
Epoch common_average_reference(const Epoch& e);

/// Symmetric Kaiser window of the given length.
std::vector<double> kaiser(std::size_t length, double beta = 8.6);
Epoch kaiser_window(const Epoch& e, double beta = 8.6, std::size_t length = 0);

struct RejectedEpoch {
  std::size_t index = 0;
  std::size_t channel = 0;
  double peak = 0.0;
  double marker_t = 0.0;
};

struct RejectionReport {
  std::size_t input_count = 0;
  std::vector<RejectedEpoch> rejected;
};

struct RejectionResult {
  EpochSet kept;
  RejectionReport report;
};

RejectionResult reject_epochs_amplitude(const EpochSet& epochs, double threshold_uv);

}  // namespace noetic::pre
