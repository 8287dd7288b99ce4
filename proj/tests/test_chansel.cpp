#include "doctest.h"

#include "noetic/chansel.hpp"
#include "noetic/error.hpp"
#include "noetic/rng.hpp"

#include <cmath>

using namespace noetic;
using namespace noetic::chansel;

namespace {

// Channel `planted` has class-dependent variance; others are unit noise.
EpochSet planted_set(std::size_t n_epochs, std::size_t channels, std::size_t planted, std::uint64_t seed,
                     std::vector<int>& labels) {
  Rng rng(seed);
  EpochSet set;
  set.fs = 100;
  set.channels = default_channels(channels);
  labels.clear();
  for (std::size_t i = 0; i < n_epochs; ++i) {
    const int cls = static_cast<int>(i % 2);
    Matrix d(static_cast<Eigen::Index>(channels), 100);
    for (Eigen::Index k = 0; k < d.size(); ++k) d.data()[k] = rng.normal();
    if (cls == 1) d.row(static_cast<Eigen::Index>(planted)) *= 2.5;
    set.epochs.push_back({d, cls, static_cast<double>(i)});
    labels.push_back(cls);
  }
  return set;
}

}  // namespace

TEST_CASE("channel scalars") {
  EpochSet flat;
  flat.epochs.push_back({Matrix::Constant(3, 20, 7.0), 0, 0.0});
  CHECK((channel_scalars(flat).array() == std::log(1e-12)).all());

  Rng rng(1);
  EpochSet set;
  for (int i = 0; i < 8; ++i) {
    Matrix d(4, 16);
    for (Eigen::Index k = 0; k < d.size(); ++k) d.data()[k] = rng.normal();
    set.epochs.push_back({d, 0, 0.0});
  }
  const Matrix s = channel_scalars(set);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 4; ++j) {
      double mean = 0;
      for (int t = 0; t < 16; ++t) mean += set.epochs[i].data(j, t);
      mean /= 16;
      double ss = 0;
      for (int t = 0; t < 16; ++t) ss += (set.epochs[i].data(j, t) - mean) * (set.epochs[i].data(j, t) - mean);
      CHECK(s(i, j) == doctest::Approx(std::log(ss / 15 + 1e-12)));
    }
  EpochSet twice = set;
  for (auto& e : twice.epochs) e.data.row(2) *= 2;
  const Matrix s2 = channel_scalars(twice);
  CHECK(((s2.col(2) - s.col(2)).array() - std::log(4.0)).abs().maxCoeff() < 1e-9);
}

TEST_CASE("select top n") {
  ChannelScores s{Method::correlation, {0.1, 0.9, 0.5}, 10};
  CHECK(select_top_n(s, 2) == std::vector<std::size_t>{1, 2});
  ChannelScores eq{Method::correlation, {0.3, 0.3, 0.3}, 10};
  CHECK(select_top_n(eq, 2) == std::vector<std::size_t>{0, 1});
  auto all = select_top_n(s, 3);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(select_top_n(s, 0), Error);
  CHECK_THROWS_AS(select_top_n(s, 4), Error);
}

TEST_CASE("statistics") {
  std::vector<double> y{-1, 1, 1, -1, 1, -1};
  CHECK(pearson(y, y) == doctest::Approx(1.0));
  // Every cell holds its expected count.
  std::vector<int> a{0, 0, 1, 1, 0, 0, 1, 1}, b{0, 1, 0, 1, 0, 1, 0, 1};
  CHECK(chi_squared(a, b) == 0.0);
  CHECK(mutual_information_bits(a, b) == doctest::Approx(0.0));
  CHECK(mutual_information_bits(a, a) == doctest::Approx(1.0));
  // 2x2 table [[3,1],[1,3]]: chi2 = 4 * (1^2 / 2) = 2.
  std::vector<int> x2{0, 0, 0, 0, 1, 1, 1, 1}, y2{0, 0, 0, 1, 1, 1, 1, 0};
  CHECK(chi_squared(x2, y2) == doctest::Approx(2.0));

  auto bins = quantile_bins(std::vector<double>{5, 1, 1, 3, 2, 4, 6, 0}, 4);
  CHECK(bins == std::vector<int>{3, 0, 0, 2, 1, 2, 3, 0});
}

TEST_CASE("scores: exact label channel and independence") {
  EpochSet set;
  set.channels = default_channels(1);
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    // Scalar column ends up as a two-valued function of the label.
    const int cls = i % 2;
    Matrix d(1, 2);
    d << 0.0, cls ? 2.0 : 1.0;
    set.epochs.push_back({d, cls, 0.0});
    labels.push_back(cls);
  }
  CHECK(score_channels(set, labels, Method::correlation).scores[0] == doctest::Approx(1.0));

  Rng rng(2);
  EpochSet noise;
  noise.channels = default_channels(4);
  std::vector<int> nl;
  for (int i = 0; i < 2000; ++i) {
    Matrix d(4, 32);
    for (Eigen::Index k = 0; k < d.size(); ++k) d.data()[k] = rng.normal();
    noise.epochs.push_back({d, i % 2, 0.0});
    nl.push_back(i % 2);
  }
  for (double v : score_channels(noise, nl, Method::mutual_information).scores) CHECK(v <= 0.02);

  std::vector<int> single(nl.size(), 0);
  CHECK_THROWS_WITH(score_channels(noise, single, Method::correlation), doctest::Contains("degenerate labels"));
}

TEST_CASE("planted channel ranks first and ranking is scale invariant") {
  std::vector<int> labels;
  auto set = planted_set(120, 8, 5, 3, labels);
  for (auto m : {Method::correlation, Method::mutual_information, Method::chi_squared, Method::csp}) {
    CAPTURE(to_string(m));
    auto s = score_channels(set, labels, m);
    REQUIRE(s.scores.size() == 8);
    CHECK(select_top_n(s, 1)[0] == 5);

    auto rescaled = set;
    for (auto& e : rescaled.epochs) {
      e.data.row(0) *= 30.0;
      e.data.row(5) *= 0.1;
    }
    auto r = score_channels(rescaled, labels, m);
    CHECK(select_top_n(r, 8) == select_top_n(s, 8));
  }
}

TEST_CASE("csp scoring requires two classes") {
  std::vector<int> labels;
  auto set = planted_set(30, 4, 1, 4, labels);
  labels[0] = 2;
  CHECK_THROWS(score_channels(set, labels, Method::csp));
  CHECK_NOTHROW(score_channels(set, labels, Method::correlation));
}
