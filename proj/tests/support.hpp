#pragma once

// Shared fixtures for the unit tests. Random data comes from a fixed-seed
// engine so failures reproduce.

#include "mudloc/types.hpp"

#include <complex>
#include <random>

namespace testing {

using mudloc::ComplexMatrix;
using mudloc::Matrix;

inline Matrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = n(rng);
  }
  return m;
}

inline ComplexMatrix complex_gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = {n(rng), n(rng)};
  }
  return m;
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
inline Matrix random_orthogonal(int d, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(d, d, rng));
  return qr.householderQ();
}

/// Two-pass row mean, plain loops.
inline std::vector<double> row_means(const Matrix& x) {
  std::vector<double> out(x.rows(), 0.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) s += x(r, c);
    out[r] = s / static_cast<double>(x.cols());
  }
  return out;
}

inline std::vector<double> row_population_variances(const Matrix& x) {
  const auto mean = row_means(x);
  std::vector<double> out(x.rows(), 0.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) s += (x(r, c) - mean[r]) * (x(r, c) - mean[r]);
    out[r] = s / static_cast<double>(x.cols());
  }
  return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing
