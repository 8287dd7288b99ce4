#pragma once

#include "noetic/features/feature_vector.hpp"

#include <array>
#include <span>
#include <vector>

namespace noetic::features {

enum class BoundaryMode { symmetric, periodization };

// Daubechies-4 (8 taps) analysis filters.
const std::array<double, 8>& db4_lowpass();
const std::array<double, 8>& db4_highpass();

struct DwtLevel {
  std::vector<double> approx;
  std::vector<double> detail;
};

DwtLevel dwt_step(std::span<const double> x, BoundaryMode mode);

/// Coefficients [D1, D2, ..., DL, AL].
std::vector<std::vector<double>> wavedec(std::span<const double> x, int levels, BoundaryMode mode);

int default_dwt_levels(std::size_t n);

/// Raw subband energies in the same order as wavedec.
std::vector<double> dwt_subband_energies(std::span<const double> x, int levels, BoundaryMode mode);

/// ln(energy + 1e-12) per subband, named "dwt.d1".."dwt.dL", "dwt.aL".
/// levels <= 0 selects the default.
FeatureVector dwt_energies(std::span<const double> x, int levels = 0,
                           BoundaryMode mode = BoundaryMode::symmetric);

}  // namespace noetic::features
