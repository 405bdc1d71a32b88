#pragma once

// Dense building blocks shared by every CCA-family method: centering,
// between-class scatter, and the symmetric-definite generalized eigensolver.

#include "mudloc/types.hpp"

#include <vector>

namespace mudloc {

struct CenteredMatrix {
  Matrix data;
  Vector mean;  ///< per-row mean that was removed
};

/// Subtract each row's mean across columns.
CenteredMatrix center_columns(const Matrix& x);

struct ScatterSet {
  Matrix between_class;  ///< sum_c n_c (mu_c - mu)(mu_c - mu)^T
  Matrix total;          ///< Xc Xc^T of the centered data
  std::vector<int> class_counts;
};

/// Labels must lie in 1..C and every class must own at least one column.
/// When num_classes is 0 it is taken as the largest label.
ScatterSet between_class_scatter(const Matrix& x, const Labels& labels, int num_classes = 0);

/// Ridge added to the right-hand matrix before Cholesky reduction.
struct RidgePolicy {
  /// eps = relative * trace(B) / d. Zero requests an unridged solve.
  double relative = 1e-6;
  /// Each failed factorization multiplies eps by 10, at most this many times.
  int max_escalations = 3;

  static RidgePolicy none() { return {0.0, 3}; }
};

struct GeneralizedEigResult {
  Vector eigenvalues;   ///< descending
  Matrix eigenvectors;  ///< columns match eigenvalues, (B + ridge I)-orthonormal
  double ridge_used = 0.0;
};

/// Solves A v = lambda (B + eps I) v for symmetric A and symmetric PSD B via
/// Cholesky whitening. Each eigenvector's largest-magnitude entry is positive.
GeneralizedEigResult generalized_eig_sym(const Matrix& a, const Matrix& b,
                                         const RidgePolicy& policy = {});

}  // namespace mudloc
