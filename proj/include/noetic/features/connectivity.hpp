#pragma once

#include "noetic/features/spectral.hpp"

#include <span>
#include <string>

namespace noetic::features {

enum class ConnectivityMethod { xcorr, coherence, psi };

ConnectivityMethod connectivity_method_from_string(const std::string& s);

struct XcorrResult {
  double value = 0.0;
  long lag = 0;  // positive: y lags x by `lag` samples
};

/// Peak of the biased, normalized cross-correlation over |lag| <= max_lag
/// (default N/4).
XcorrResult xcorr(std::span<const double> x, std::span<const double> y, long max_lag = -1);

/// Band mean of |Pxy|^2 / (Pxx Pyy).
double coherence(std::span<const double> x, std::span<const double> y, double fs, double lo = 1.0,
                 double hi = 45.0);

/// Phase slope index over [lo, hi]; positive when x leads y.
double phase_slope_index(std::span<const double> x, std::span<const double> y, double fs, double lo = 1.0,
                         double hi = 45.0);

struct ConnectivityResult {
  double value = 0.0;
  long lag = 0;  // xcorr only
};

ConnectivityResult connectivity(std::span<const double> x, std::span<const double> y, double fs,
                                ConnectivityMethod method, double lo = 1.0, double hi = 45.0);

}  // namespace noetic::features
