#include "doctest.h"

#include "noetic/rng.hpp"
#include "noetic/signal.hpp"

using namespace noetic;

namespace {

SignalBlock ramp_block(std::size_t channels, std::size_t n, double fs, double t0 = 0.0) {
  SignalBlock b;
  b.fs = fs;
  b.t0 = t0;
  b.channels = default_channels(channels);
  b.samples.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < b.samples.rows(); ++c)
    for (Eigen::Index t = 0; t < b.samples.cols(); ++t) b.samples(c, t) = static_cast<double>(1000 * c + t);
  return b;
}

}  // namespace

TEST_CASE("clock offset is the median pairwise difference") {
  std::vector<Marker> m{{1.25, "s", {}}, {2.25, "s", {}}, {3.25, "s", {}}};
  std::vector<double> p{1.0, 2.0, 3.0};
  CHECK(estimate_clock_offset(m, p) == doctest::Approx(0.25).epsilon(1e-12));

  std::vector<Marker> one{{5.0, "s", {}}};
  std::vector<double> one_p{5.0};
  CHECK(estimate_clock_offset(one, one_p) == 0.0);

  std::vector<Marker> m3{{0.1, "s", {}}, {1.1, "s", {}}, {2.9, "s", {}}};
  std::vector<double> p3{0.0, 1.0, 2.0};
  CHECK(estimate_clock_offset(m3, p3) == doctest::Approx(0.1));

  CHECK_THROWS_WITH(estimate_clock_offset({}, {}), "no sync events");
}

TEST_CASE("epoching cuts half-open windows") {
  auto rec = ramp_block(2, 1000, 100.0);
  std::vector<Marker> markers{{2.0, "a", 0}, {5.0, "b", 1}, {8.0, "a", 0}};
  auto r = epoch_by_markers(rec, markers, 0.0, 1.0);
  REQUIRE(r.epochs.size() == 3);
  CHECK(r.dropped.empty());
  CHECK(r.epochs.epoch_length() == 100);
  for (const auto& e : r.epochs.epochs) CHECK(e.data.cols() == 100);
  CHECK(r.epochs.epochs[0].data(0, 0) == 200.0);
  CHECK(r.epochs.epochs[0].data(0, 99) == 299.0);
  CHECK(r.epochs.epochs[1].class_id == 1);
  r.epochs.validate();
}

TEST_CASE("out-of-bounds markers are dropped and reported") {
  auto rec = ramp_block(1, 1000, 100.0);
  std::vector<Marker> markers{{2.0, "a", 0}, {9.9, "late", 1}};
  auto r = epoch_by_markers(rec, markers, 0.0, 1.0);
  CHECK(r.epochs.size() == 1);
  REQUIRE(r.dropped.size() == 1);
  CHECK(r.dropped[0].marker.label == "late");
  CHECK(r.dropped[0].marker_index == 1);
}

TEST_CASE("clock offset shifts epoch start indices") {
  auto rec = ramp_block(1, 1000, 100.0);
  std::vector<Marker> markers{{3.0, "a", 0}};
  auto base = epoch_by_markers(rec, markers, 0.0, 1.0, 0.0);
  auto shifted = epoch_by_markers(rec, markers, 0.0, 1.0, 0.5);
  // 3.0 s -> index 300; 3.0 - 0.5 s -> index 250
  CHECK(base.epochs.epochs[0].data(0, 0) == 300.0);
  CHECK(shifted.epochs.epochs[0].data(0, 0) == 250.0);
}

TEST_CASE("epoching rejects bad parameters") {
  auto rec = ramp_block(1, 100, 100.0);
  std::vector<Marker> markers{{0.1, "a", 0}};
  CHECK_THROWS(epoch_by_markers(rec, markers, 1.0, 0.5));
  rec.fs = 0.0;
  CHECK_THROWS_WITH(epoch_by_markers(rec, markers, 0.0, 0.5), doctest::Contains("invalid recording"));
}

TEST_CASE("property: epoching is translation-equivariant and conserves markers") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 200 + rng.below(800);
    auto rec = ramp_block(3, n, 50.0, 0.0);
    std::vector<Marker> markers;
    const std::size_t k = 1 + rng.below(10);
    for (std::size_t i = 0; i < k; ++i)
      markers.push_back({static_cast<double>(rng.below(n + 40)) / 50.0 - 0.4, "m", static_cast<int>(i % 2)});
    std::sort(markers.begin(), markers.end(), [](auto& a, auto& b) { return a.t < b.t; });
    const double pre = -0.2, post = 0.6;
    auto a = epoch_by_markers(rec, markers, pre, post);
    CHECK(a.epochs.size() + a.dropped.size() == markers.size());
    a.epochs.validate();

    const double delta = static_cast<double>(rng.below(1000)) / 50.0;
    auto shifted_rec = rec;
    shifted_rec.t0 += delta;
    auto shifted_markers = markers;
    for (auto& m : shifted_markers) m.t += delta;
    auto b = epoch_by_markers(shifted_rec, shifted_markers, pre, post);
    REQUIRE(b.epochs.size() == a.epochs.size());
    for (std::size_t i = 0; i < a.epochs.size(); ++i) CHECK(a.epochs.epochs[i].data == b.epochs.epochs[i].data);
  }
}

TEST_CASE("validation catches malformed values") {
  auto rec = ramp_block(2, 10, 100.0);
  rec.channels[1].name = "ch0";
  CHECK_THROWS(rec.validate());
  rec = ramp_block(2, 10, 100.0);
  rec.samples(0, 3) = std::numeric_limits<double>::infinity();
  CHECK_THROWS(rec.validate());
  std::vector<Marker> unsorted{{2.0, "a", {}}, {1.0, "b", {}}};
  CHECK_THROWS(validate_markers(unsorted));
}
