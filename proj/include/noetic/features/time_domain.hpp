#pragma once

#include <span>
#include <string>

namespace noetic::features {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // 1/(N-1)
  double skewness = 0.0;
  double kurtosis = 0.0;  // excess, m4/m2^2 - 3
  bool zero_variance = false;
};

Moments moments(std::span<const double> x);

/// Sample variance with 1/(N-1).
double variance(std::span<const double> x);

enum class FractalMethod { higuchi, katz };

double higuchi_fd(std::span<const double> x, int k_max = 8);
double katz_fd(std::span<const double> x);
double fractal_dimension(std::span<const double> x, FractalMethod method);

enum class EntropyMethod { shannon, approximate, sample };

struct EntropyParams {
  int bins = 64;
  int m = 2;
  double r_factor = 0.2;  // tolerance as a multiple of the population std
};

struct EntropyResult {
  double value = 0.0;
  bool infinite = false;  // sample entropy with no (m+1)-matches
};

EntropyResult entropy(std::span<const double> x, EntropyMethod method, const EntropyParams& params = {});
double shannon_entropy(std::span<const double> x, int bins = 64);
double approximate_entropy(std::span<const double> x, int m, double r);
EntropyResult sample_entropy(std::span<const double> x, int m, double r);

struct Hjorth {
  double activity = 0.0;
  double mobility = 0.0;
  double complexity = 0.0;
};

Hjorth hjorth(std::span<const double> x);

/// Detrended fluctuation analysis exponent: 10 log-spaced box sizes in
/// [4, N/4], linear detrend per box.
double dfa(std::span<const double> x);

FractalMethod fractal_method_from_string(const std::string& s);
EntropyMethod entropy_method_from_string(const std::string& s);

}  // namespace noetic::features
