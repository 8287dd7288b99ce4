#include "doctest.h"

#include "noetic/classify/classifier.hpp"
#include "noetic/classify/metrics.hpp"
#include "noetic/classify/riemann.hpp"
#include "noetic/error.hpp"
#include "noetic/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>

using namespace noetic;
using namespace noetic::classify;

namespace {

Matrix random_matrix(Eigen::Index n, Rng& rng) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Matrix random_spd(Eigen::Index n, Rng& rng) {
  const Matrix a = random_matrix(n, rng);
  return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

// Independent route: eigenvalues of A^-1 B through a Cholesky factor.
double oracle_distance(const Matrix& a, const Matrix& b) {
  const Matrix l = a.llt().matrixL();
  const Matrix li = l.inverse();
  Eigen::SelfAdjointEigenSolver<Matrix> es(li * b * li.transpose());
  double s = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::pow(std::log(es.eigenvalues()(i)), 2);
  return std::sqrt(s);
}

Matrix power_of(const Matrix& m, double p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvectors() * es.eigenvalues().array().pow(p).matrix().asDiagonal() * es.eigenvectors().transpose();
}

// Gorodkin's definition: covariance of the one-hot matrices, each class column
// centered on its own mean, normalized like a correlation.
double one_hot_correlation(const std::vector<int>& t, const std::vector<int>& p, int k) {
  const double n = static_cast<double>(t.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (int c = 0; c < k; ++c) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      mx += t[i] == c;
      my += p[i] == c;
    }
    mx /= n;
    my /= n;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = (t[i] == c) - mx, y = (p[i] == c) - my;
      sxy += x * y;
      sxx += x * x;
      syy += y * y;
    }
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("epoch covariance") {
  Rng rng(1);
  Matrix x(3, 10000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Matrix c = epoch_covariance(x);
  CHECK((c - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.05);
  const Matrix full = epoch_covariance(x, 1.0);
  CHECK(full(0, 1) == 0.0);
  CHECK(full(0, 0) == full(2, 2));
  CHECK(is_spd(epoch_covariance(Matrix::Zero(4, 50))));
  Matrix rank1(4, 50);
  for (Eigen::Index t = 0; t < 50; ++t) rank1.col(t).setConstant(rng.normal());
  CHECK(is_spd(epoch_covariance(rank1)));
}

TEST_CASE("airm distance") {
  Rng rng(2);
  const Matrix i3 = Matrix::Identity(3, 3);
  CHECK(airm_distance(i3, std::exp(2.0) * i3) == doctest::Approx(std::sqrt(12.0)));
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = random_spd(4, rng), b = random_spd(4, rng), c = random_spd(4, rng);
    CHECK(airm_distance(a, a) < 1e-7);
    CHECK(airm_distance(a, b) == doctest::Approx(oracle_distance(a, b)).epsilon(1e-9));
    CHECK(std::abs(airm_distance(a, b) - airm_distance(b, a)) < 1e-10);
    CHECK(airm_distance(a, c) <= airm_distance(a, b) + airm_distance(b, c) + 1e-8);
    const Matrix g = random_matrix(4, rng);
    CHECK(std::abs(airm_distance(g * a * g.transpose(), g * b * g.transpose()) - airm_distance(a, b)) < 1e-8);
  }
  Matrix bad = i3;
  bad(0, 0) = -1;
  CHECK_THROWS(airm_distance(i3, bad));
  CHECK_THROWS(airm_distance(i3, Matrix::Identity(2, 2)));
}

TEST_CASE("riemann mean") {
  Rng rng(3);
  const Matrix a = random_spd(3, rng);
  std::vector<Matrix> one{a};
  CHECK((riemann_mean(one).mean - a).norm() < 1e-10);
  std::vector<Matrix> twice{a, a};
  CHECK((riemann_mean(twice).mean - a).norm() < 1e-9);

  std::vector<Matrix> pair{Matrix::Identity(2, 2), std::exp(2.0) * Matrix::Identity(2, 2)};
  auto m = riemann_mean(pair);
  CHECK(m.converged);
  CHECK((m.mean - std::exp(1.0) * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);

  for (int trial = 0; trial < 10; ++trial) {
    const Matrix p = random_spd(3, rng), q = random_spd(3, rng);
    // Geodesic midpoint P^1/2 (P^-1/2 Q P^-1/2)^1/2 P^1/2.
    const Matrix ph = power_of(p, 0.5), pih = power_of(p, -0.5);
    const Matrix mid = ph * power_of(pih * q * pih, 0.5) * ph;
    std::vector<Matrix> pq{p, q};
    CHECK((riemann_mean(pq).mean - mid).norm() < 1e-6 * mid.norm());

    std::vector<Matrix> set{p, q, random_spd(3, rng), random_spd(3, rng)};
    const Matrix g = random_matrix(3, rng);
    std::vector<Matrix> moved;
    for (const auto& s : set) moved.push_back(g * s * g.transpose());
    const Matrix expected = g * riemann_mean(set).mean * g.transpose();
    CHECK((riemann_mean(moved).mean - expected).norm() < 1e-6 * expected.norm());
  }
}

TEST_CASE("tangent space") {
  Rng rng(4);
  const Matrix ref = random_spd(4, rng);
  CHECK(tangent_vector(ref, ref).norm() < 1e-9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix c = random_spd(4, rng);
    // The sqrt(2) weighting makes the embedding an isometry at the reference.
    CHECK(tangent_vector(c, ref).norm() == doctest::Approx(airm_distance(c, ref)).epsilon(1e-9));
  }
  CHECK(tangent_vector(ref, ref).size() == 10);
}

TEST_CASE("naive bayes") {
  Rng rng(5);
  TrainingData d;
  d.features.resize(400, 1);
  std::vector<int> labels;
  for (int i = 0; i < 400; ++i) {
    const int c = i < 200 ? 0 : 1;
    d.features(i, 0) = (c ? 3.0 : -3.0) + rng.normal();
    labels.push_back(c);
  }
  auto m = train(ModelKind::nb, d, labels);
  auto pred = predict_all(m, d);
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  CHECK(correct / 400.0 >= 0.99);
  CHECK_THROWS(predict_features(m, Vector::Zero(2)));
  std::vector<int> single(400, 0);
  CHECK_THROWS(train(ModelKind::nb, d, single));
}

TEST_CASE("rmdm") {
  const Matrix i2 = Matrix::Identity(2, 2);
  TrainingData d;
  std::vector<int> labels;
  for (int k = 0; k < 3; ++k) {
    d.covariances.push_back(i2);
    labels.push_back(0);
    d.covariances.push_back(4 * i2);
    labels.push_back(1);
  }
  auto m = train(ModelKind::rmdm, d, labels);
  CHECK(predict_covariance(m, 1.1 * i2).class_id == 0);
  CHECK(predict_covariance(m, 3.0 * i2).class_id == 1);
  // Exactly between: tie goes to the lower id.
  CHECK(predict_covariance(m, 2.0 * i2).class_id == 0);

  Rng rng(6);
  TrainingData noisy;
  std::vector<int> nl;
  for (int k = 0; k < 40; ++k) {
    const int c = k % 2;
    Matrix x(3, 200);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    x.row(c) *= 2.0;
    noisy.covariances.push_back(epoch_covariance(x));
    nl.push_back(c);
  }
  auto base = train(ModelKind::rmdm, noisy, nl);
  const Matrix g = random_matrix(3, rng);
  TrainingData moved;
  for (const auto& c : noisy.covariances) moved.covariances.push_back(g * c * g.transpose());
  auto mm = train(ModelKind::rmdm, moved, nl);
  CHECK(predict_all(mm, moved) == predict_all(base, noisy));
}

TEST_CASE("tangent logistic") {
  Rng rng(7);
  TrainingData d;
  std::vector<int> labels;
  for (int k = 0; k < 90; ++k) {
    const int c = k % 3;
    Matrix x(3, 200);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    x.row(c) *= 2.0;
    d.covariances.push_back(epoch_covariance(x));
    labels.push_back(c + 10);
  }
  auto m = train(ModelKind::tangent_linear, d, labels);
  CHECK(m.logistic.size() == 3);
  auto pred = predict_all(m, d);
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  CHECK(correct >= 85);

  auto again = train(ModelKind::tangent_linear, d, labels);
  CHECK(again.logistic[1].weights == m.logistic[1].weights);

  const auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  CHECK(back.logistic[2].weights == m.logistic[2].weights);
  CHECK(back.reference == m.reference);
  CHECK(predict_all(back, d) == pred);
  CHECK(model_to_json(m)["feature_mean"][0].is_string());

  std::vector<int> binary;
  for (int l : labels) binary.push_back(l == 10 ? 0 : 1);
  CHECK(train(ModelKind::tangent_linear, d, binary).logistic.size() == 1);
  CHECK_THROWS(predict_covariance(m, Matrix::Identity(2, 2)));
}

TEST_CASE("model json errors") {
  nlohmann::json j = {{"format", "noetic-model"}, {"version", 7}};
  CHECK_THROWS_AS(model_from_json(j), FormatError);
  CHECK_THROWS_AS(model_from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("stratified folds") {
  std::vector<int> ten{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  auto loo = stratified_folds(ten, 10, 1);
  CHECK(loo.size() == 10);
  for (const auto& f : loo) CHECK(f.size() == 1);

  std::vector<int> labels;
  for (int i = 0; i < 103; ++i) labels.push_back(i % 7 < 2 ? 0 : (i % 7 < 5 ? 1 : 2));
  auto folds = stratified_folds(labels, 5, 42);
  CHECK(folds == stratified_folds(labels, 5, 42));
  CHECK(folds != stratified_folds(labels, 5, 43));
  std::vector<int> seen(labels.size(), 0);
  std::map<int, double> global;
  for (int l : labels) global[l] += 1.0 / static_cast<double>(labels.size());
  for (const auto& f : folds) {
    std::map<int, int> counts;
    for (auto i : f) {
      ++seen[i];
      ++counts[labels[i]];
    }
    for (auto [c, p] : global) CHECK(std::abs(counts[c] - p * static_cast<double>(f.size())) <= 1.0 + 1e-9);
  }
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("cross validation") {
  Rng rng(8);
  TrainingData d;
  d.features.resize(60, 2);
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 2;
    d.features(i, 0) = (c ? 2.0 : -2.0) + rng.normal();
    d.features(i, 1) = rng.normal();
    labels.push_back(c);
  }
  auto cv = cross_validate(ModelKind::nb, d, labels, 5);
  CHECK(cv.folds.size() == 5);
  CHECK(cv.mean_accuracy > 0.85);
  auto loo = cross_validate(ModelKind::nb, d.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}),
                            std::vector<int>(labels.begin(), labels.begin() + 10), 10);
  CHECK(loo.folds.size() == 10);
  std::vector<int> skewed = labels;
  for (int i = 0; i < 58; ++i) skewed[static_cast<std::size_t>(i)] = 0;
  CHECK_THROWS(cross_validate(ModelKind::nb, d, skewed, 5));
}

TEST_CASE("confusion metrics") {
  std::vector<int> t{0, 1, 2, 1, 0}, p = t;
  auto perfect = confusion_metrics(t, p, 3);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.mcc == doctest::Approx(1.0));

  std::vector<int> bal{0, 1, 0, 1}, constant{1, 1, 1, 1};
  auto deg = confusion_metrics(bal, constant, 2);
  CHECK(deg.mcc == 0.0);
  CHECK(deg.mcc_undefined);

  // TP=40 TN=45 FP=5 FN=10 with class 1 positive.
  std::vector<int> yt, yp;
  auto add = [&](int a, int b, int n) {
    for (int i = 0; i < n; ++i) {
      yt.push_back(a);
      yp.push_back(b);
    }
  };
  add(1, 1, 40);
  add(0, 0, 45);
  add(0, 1, 5);
  add(1, 0, 10);
  const double formula = (40.0 * 45 - 5.0 * 10) / std::sqrt(50.0 * 45 * 55 * 50);
  auto bin = confusion_metrics(yt, yp, 2);
  CHECK(bin.mcc == doctest::Approx(formula).epsilon(1e-12));
  CHECK(std::abs(bin.mcc - 0.7034) < 1e-3);
  CHECK(bin.accuracy == doctest::Approx(0.85));

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> a, b;
    for (int i = 0; i < 50; ++i) {
      a.push_back(static_cast<int>(rng.below(4)));
      b.push_back(rng.uniform() < 0.6 ? a.back() : static_cast<int>(rng.below(4)));
    }
    CHECK(confusion_metrics(a, b, 4).mcc == doctest::Approx(one_hot_correlation(a, b, 4)).epsilon(1e-9));
  }
  std::vector<int> out{0, 3};
  CHECK_THROWS(confusion_metrics(out, out, 2));
}

TEST_CASE("itr") {
  CHECK(itr_bits_per_selection(2, 1.0) == 1.0);
  CHECK(std::abs(itr_bits_per_selection(4, 0.25)) < 1e-12);
  CHECK(itr_bits_per_selection(2, 0.9) == doctest::Approx(0.531).epsilon(1e-3));
  CHECK(itr_bits_per_selection(2, 0.9) ==
        doctest::Approx(1 + 0.9 * std::log2(0.9) + 0.1 * std::log2(0.1)));
}
