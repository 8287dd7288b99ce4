#pragma once

#include "noetic/signal.hpp"

#include <cstdint>
#include <functional>
#include <span>

namespace noetic::classify {

/// Channel-mean removed, C = X X^T / (T-1), shrunk toward (tr C / n) I.
Matrix epoch_covariance(const Matrix& epoch, double shrinkage = 0.1);

bool is_spd(const Matrix& m, double sym_tol = 1e-10);
void require_spd(const Matrix& m, const char* what);

/// V f(D) V^T for symmetric input; eigenvalues below 1e-12 are clamped and counted.
Matrix apply_eigen(const Matrix& m, const std::function<double(double)>& f);
Matrix spd_log(const Matrix& m);
Matrix spd_exp(const Matrix& m);
Matrix spd_sqrt(const Matrix& m);
Matrix spd_invsqrt(const Matrix& m);

/// Process-wide count of eigenvalue clamp events.
std::uint64_t clamp_count();

double airm_distance(const Matrix& a, const Matrix& b);

struct RiemannMean {
  Matrix mean;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

RiemannMean riemann_mean(std::span<const Matrix> mats, double tol = 1e-8, int max_iterations = 50);

/// Upper triangle of log(M^-1/2 C M^-1/2), off-diagonal entries weighted by sqrt(2).
Vector tangent_vector(const Matrix& c, const Matrix& reference);

}  // namespace noetic::classify
