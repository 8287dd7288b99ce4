#include "noetic/classify/riemann.hpp"

#include "noetic/error.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <cmath>

namespace noetic::classify {

namespace {

std::atomic<std::uint64_t> g_clamps{0};

constexpr double kFloor = 1e-12;

}  // namespace

std::uint64_t clamp_count() { return g_clamps.load(); }

Matrix epoch_covariance(const Matrix& epoch, double shrinkage) {
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw Error("covariance: shrinkage must lie in [0, 1]");
  const auto n = epoch.rows();
  const auto t = epoch.cols();
  if (t < 2) throw Error("covariance: epoch needs at least 2 samples");
  const Matrix x = epoch.colwise() - epoch.rowwise().mean();
  Matrix c = x * x.transpose() / static_cast<double>(t - 1);
  const double mu = c.trace() / static_cast<double>(n);
  c = (1.0 - shrinkage) * c;
  c.diagonal().array() += shrinkage * mu;
  // A flat epoch still has to be usable on the manifold.
  if (!(mu > 0.0)) c.diagonal().array() += kFloor;
  return 0.5 * (c + c.transpose());
}

bool is_spd(const Matrix& m, double sym_tol) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0.0;
}

void require_spd(const Matrix& m, const char* what) {
  if (!is_spd(m)) throw Error(std::string(what) + ": matrix is not symmetric positive definite");
}

Matrix apply_eigen(const Matrix& m, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  Vector d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) < kFloor) {
      d(i) = kFloor;
      ++g_clamps;
    }
    d(i) = f(d(i));
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Matrix spd_log(const Matrix& m) { return apply_eigen(m, [](double v) { return std::log(v); }); }
Matrix spd_sqrt(const Matrix& m) { return apply_eigen(m, [](double v) { return std::sqrt(v); }); }
Matrix spd_invsqrt(const Matrix& m) { return apply_eigen(m, [](double v) { return 1.0 / std::sqrt(v); }); }

Matrix spd_exp(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const Vector d = es.eigenvalues().array().exp();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double airm_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("airm distance: matrices differ in size");
  require_spd(a, "airm distance");
  require_spd(b, "airm distance");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, b, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = std::log(es.eigenvalues()(i));
    s += l * l;
  }
  return std::sqrt(s);
}

RiemannMean riemann_mean(std::span<const Matrix> mats, double tol, int max_iterations) {
  if (mats.empty()) throw Error("riemann mean: no matrices");
  for (const auto& m : mats) {
    if (m.rows() != mats[0].rows()) throw Error("riemann mean: matrices differ in size");
    require_spd(m, "riemann mean");
  }
  RiemannMean r;
  r.mean = Matrix::Zero(mats[0].rows(), mats[0].cols());
  for (const auto& m : mats) r.mean += m;
  r.mean /= static_cast<double>(mats.size());
  for (r.iterations = 0; r.iterations < max_iterations;) {
    const Matrix s = spd_sqrt(r.mean);
    const Matrix is = spd_invsqrt(r.mean);
    Matrix t = Matrix::Zero(r.mean.rows(), r.mean.cols());
    for (const auto& m : mats) t += spd_log(is * m * is);
    t /= static_cast<double>(mats.size());
    r.residual = t.norm();
    if (r.residual < tol) {
      r.converged = true;
      break;
    }
    r.mean = s * spd_exp(t) * s;
    r.mean = 0.5 * (r.mean + r.mean.transpose());
    ++r.iterations;
  }
  return r;
}

Vector tangent_vector(const Matrix& c, const Matrix& reference) {
  if (c.rows() != reference.rows()) throw Error("tangent space: covariance and reference differ in size");
  const Matrix is = spd_invsqrt(reference);
  const Matrix l = spd_log(is * c * is);
  const auto n = l.rows();
  Vector v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) v(k++) = i == j ? l(i, j) : std::sqrt(2.0) * l(i, j);
  return v;
}

}  // namespace noetic::classify
