#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>

namespace gcl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sentinel returned by condition_number for singular matrices.
inline constexpr double kInfiniteCondition = std::numeric_limits<double>::infinity();

// Number of singular values above rel_tol * sigma_max. Zero matrix has rank 0.
// Throws InvalidInputError on non-finite entries or rel_tol outside (0,1).
int numerical_rank(const Matrix& m, double rel_tol = 1e-6);

// sigma_max / sigma_min of a square matrix; kInfiniteCondition when singular.
double condition_number(const Matrix& m);

struct Whitening {
    Matrix whitened;   // (data - mean) * transform^T, identity covariance
    Matrix transform;  // n x n
    Vector mean;
};

// PCA whitening from the eigendecomposition of the sample covariance:
// transform = D^{-1/2} E^T with C = E D E^T. Throws DegenerateDataError when
// the covariance is numerically singular.
Whitening whiten(const Matrix& data);

// Central-difference gradient of a scalar field at x.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double eps);

}  // namespace gcl
