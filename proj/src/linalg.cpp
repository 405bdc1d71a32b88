#include "mudloc/linalg.hpp"

#include "mudloc/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace mudloc {

CenteredMatrix center_columns(const Matrix& x) {
  if (x.cols() < 1) throw InvalidInput("center_columns: need at least one column");
  CenteredMatrix out;
  out.mean = x.rowwise().mean();
  out.data = x.colwise() - out.mean;
  return out;
}

ScatterSet between_class_scatter(const Matrix& x, const Labels& labels, int num_classes) {
  if (static_cast<Eigen::Index>(labels.size()) != x.cols()) {
    throw InvalidInput("between_class_scatter: label count does not match sample count");
  }
  if (labels.empty()) throw InvalidInput("between_class_scatter: no samples");
  if (num_classes <= 0) num_classes = *std::max_element(labels.begin(), labels.end());
  const Matrix sums = kernels::omp::class_sums(x, labels, num_classes);

  ScatterSet out;
  out.class_counts.assign(num_classes, 0);
  for (int c : labels) ++out.class_counts[c - 1];
  for (int c = 0; c < num_classes; ++c) {
    if (out.class_counts[c] == 0) {
      throw InvalidInput("between_class_scatter: class " + std::to_string(c + 1) + " has no samples");
    }
  }

  const auto n = static_cast<double>(x.cols());
  const Vector mu = sums.rowwise().sum() / n;
  // S = B B^T with column c of B equal to sqrt(n_c) (mu_c - mu).
  Matrix weighted(x.rows(), num_classes);
  for (int c = 0; c < num_classes; ++c) {
    const double nc = out.class_counts[c];
    weighted.col(c) = std::sqrt(nc) * (sums.col(c) / nc - mu);
  }
  out.between_class = kernels::omp::gram(weighted, weighted);
  const Matrix centered = x.colwise() - mu;
  out.total = kernels::omp::gram(centered, centered);
  return out;
}

namespace {

void orient(Matrix& vectors) {
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    Eigen::Index at = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&at);
    if (vectors(at, k) < 0.0) vectors.col(k) = -vectors.col(k);
  }
}

}  // namespace

GeneralizedEigResult generalized_eig_sym(const Matrix& a, const Matrix& b, const RidgePolicy& policy) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw InvalidInput("generalized_eig_sym: A and B must be square and of equal size (A " +
                       std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ", B " +
                       std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
  if (!a.allFinite() || !b.allFinite()) throw InvalidInput("generalized_eig_sym: non-finite input");
  const Eigen::Index d = a.rows();
  GeneralizedEigResult out;
  if (d == 0) return out;

  const Matrix a_sym = 0.5 * (a + a.transpose());
  const Matrix b_sym = 0.5 * (b + b.transpose());
  const double trace = b_sym.trace();
  const double scale = trace > 0.0 ? trace / static_cast<double>(d) : 1.0;

  double eps = policy.relative * scale;
  Eigen::LLT<Matrix> llt;
  for (int attempt = 0;; ++attempt) {
    llt.compute(b_sym + eps * Matrix::Identity(d, d));
    if (llt.info() == Eigen::Success) break;
    if (attempt >= policy.max_escalations) {
      throw NumericalError("generalized_eig_sym: right-hand matrix not positive definite after " +
                           std::to_string(policy.max_escalations) + " ridge escalations (eps=" +
                           std::to_string(eps) + ")");
    }
    eps = eps > 0.0 ? eps * 10.0 : 1e-10 * scale;
  }
  out.ridge_used = eps;

  // C = L^{-1} A L^{-T}; symmetric by construction, symmetrized against rounding.
  const auto lower = llt.matrixL();
  Matrix whitened = lower.solve(a_sym);
  whitened = lower.solve(whitened.transpose()).eval();
  whitened = 0.5 * (whitened + whitened.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(whitened);
  if (eig.info() != Eigen::Success) throw NumericalError("generalized_eig_sym: eigensolver failed");

  // Eigen returns ascending order.
  out.eigenvalues = eig.eigenvalues().reverse();
  const Matrix y = eig.eigenvectors().rowwise().reverse();
  out.eigenvectors = llt.matrixU().solve(y);
  orient(out.eigenvectors);
  return out;
}

}  // namespace mudloc
