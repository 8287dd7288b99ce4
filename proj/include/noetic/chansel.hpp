#pragma once

#include "noetic/signal.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace noetic::chansel {

enum class Method { correlation, mutual_information, chi_squared, csp };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct ChannelScores {
  Method method = Method::correlation;
  std::vector<double> scores;  // higher = more relevant
  std::size_t n_epochs = 0;
};

/// epochs x channels matrix of ln(sample variance + 1e-12).
Matrix channel_scalars(const EpochSet& epochs);

ChannelScores score_channels(const EpochSet& epochs, std::span<const int> labels, Method method);

/// Indices of the n best channels, best first; ties go to the lower index.
std::vector<std::size_t> select_top_n(const ChannelScores& scores, std::size_t n);

/// Equal-frequency bin of every value; equal values always share a bin.
std::vector<int> quantile_bins(std::span<const double> x, int bins = 16);

double pearson(std::span<const double> x, std::span<const double> y);
double mutual_information_bits(std::span<const int> x, std::span<const int> y);
double chi_squared(std::span<const int> x, std::span<const int> y);

nlohmann::json report_json(const ChannelScores& scores, std::span<const std::size_t> chosen,
                           std::span<const ChannelInfo> channels);

}  // namespace noetic::chansel
