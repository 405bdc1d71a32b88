#pragma once

// The CCA family as generalized eigenproblems over stacked projections.
//
// Every method here reduces to one pencil
//
//   left  = [ a_i S_i on diagonal blocks, b_ij X_i G X_j^T off the diagonal ]
//   right = blockdiag( g_i X_i X_i^T )
//
// and differs only in which terms are switched on:
//
//   CCA      M = 2, a = 0, G = I
//   DCCA     M = 2, a = 0, G = class blocks
//   MCCA     a = 0, b = g = 1, G = I        (SUMCOR)
//   GMA      G = I
//   GI2DCA   all terms
//
// Products use raw X X^T without a 1/n factor.

#include "mudloc/linalg.hpp"
#include "mudloc/types.hpp"

#include <string>
#include <vector>

namespace mudloc {

enum class CouplingMode { kIdentity, kClassBlocks };

std::string to_string(CouplingMode mode);
CouplingMode coupling_from_string(const std::string& s);

/// n x n sample coupling G. Class-blocks mode has G(a,b) = 1 iff labels match.
class CouplingMatrix {
 public:
  static CouplingMatrix identity(int n);
  static CouplingMatrix class_blocks(Labels labels);

  CouplingMode mode() const { return mode_; }
  int size() const { return n_; }
  const Labels& labels() const { return labels_; }

  /// Dense n x n matrix. Only for small n; fits never call this.
  Matrix materialize() const;
  /// xi * G * xj^T without forming G.
  Matrix couple(const Matrix& xi, const Matrix& xj) const;

 private:
  CouplingMode mode_ = CouplingMode::kIdentity;
  int n_ = 0;
  Labels labels_;
};

/// M >= 2 views sharing n sample columns; views are expected pre-normalized.
struct MultiViewData {
  std::vector<Matrix> views;
  Labels labels;  ///< optional for unsupervised methods

  int view_count() const { return static_cast<int>(views.size()); }
  int samples() const { return views.empty() ? 0 : static_cast<int>(views.front().cols()); }
  int num_classes() const;
  void validate(bool require_labels) const;
};

/// Balance weights: alpha and gamma per view, beta per ordered view pair.
struct Hyperparams {
  Vector alpha;
  Matrix beta;
  Vector gamma;

  static Hyperparams uniform(int views, double alpha, double beta, double gamma);
  void validate(int views) const;
};

struct RankPolicy {
  /// Keep exactly this many leading eigenpairs when > 0 (capped at min d_i).
  int fixed = 0;
  /// Otherwise keep eigenpairs with lambda > relative_threshold * lambda_max.
  double relative_threshold = 1e-8;
};

struct FitOptions {
  RankPolicy rank;
  RidgePolicy ridge;
};

struct SubspaceModel {
  std::string method;
  std::vector<Matrix> projections;  ///< w_i, d_i x r
  Vector eigenvalues;               ///< retained, descending
  Vector all_eigenvalues;           ///< full spectrum of the pencil
  Hyperparams hyper;
  CouplingMode coupling = CouplingMode::kIdentity;
  double ridge_used = 0.0;

  int rank() const { return static_cast<int>(eigenvalues.size()); }
  int view_count() const { return static_cast<int>(projections.size()); }
};

/// Per-view sufficient statistics, computed once and reused across
/// hyperparameter settings.
class ViewStatistics {
 public:
  static ViewStatistics compute(const MultiViewData& data);

  int view_count() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  bool labeled() const { return !class_counts_.empty(); }

  /// X_i X_j^T.
  Matrix cross(int i, int j) const;
  /// X_i G X_j^T.
  Matrix coupled(int i, int j, CouplingMode mode) const;
  /// Between-class scatter S_i.
  Matrix between(int i) const;

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
  Matrix gram_;                      // stacked views, sum d_i square
  std::vector<Matrix> class_sums_;   // d_i x C
  std::vector<int> class_counts_;
  int samples_ = 0;
};

struct MultiViewPencil {
  Matrix left;
  Matrix right;
  std::vector<int> dims;
};

MultiViewPencil assemble_pencil(const ViewStatistics& stats, const Hyperparams& hyper,
                                CouplingMode coupling);

/// Solves the pencil and splits the stacked eigenvectors into per-view w_i.
SubspaceModel solve_pencil(const MultiViewPencil& pencil, const FitOptions& options);

SubspaceModel fit_cca(const Matrix& x1, const Matrix& x2, const FitOptions& options = {});
SubspaceModel fit_dcca(const Matrix& x1, const Matrix& x2, const Labels& labels,
                       CouplingMode coupling = CouplingMode::kClassBlocks,
                       const FitOptions& options = {});
SubspaceModel fit_mcca(const MultiViewData& data, const FitOptions& options = {});
SubspaceModel fit_gma(const MultiViewData& data, const Hyperparams& hyper,
                      const FitOptions& options = {});
SubspaceModel fit_gi2dca(const MultiViewData& data, CouplingMode coupling, const Hyperparams& hyper,
                         const FitOptions& options = {});
/// Same as above on precomputed statistics.
SubspaceModel fit_gi2dca(const ViewStatistics& stats, CouplingMode coupling,
                         const Hyperparams& hyper, const FitOptions& options = {});

/// Z_i = w_i^T X for zero-based view index.
Matrix project(const SubspaceModel& model, int view_index, const Matrix& x);

/// Element-wise mean over views.
Matrix average_variates(const std::vector<Matrix>& projections);

/// Stacked amplitude and phase variates.
struct MdfiMatrix {
  Matrix data;
  Labels labels;
  int amplitude_rows = 0;
};

MdfiMatrix fuse_mdfi(const Matrix& z_amplitude, const Matrix& z_phase, Labels labels = {});

/// Per retained column: sum_i g_i w_i^T X_i X_i^T w_i + ridge * |w|^2.
Vector constraint_values(const SubspaceModel& model, const MultiViewData& data);

/// Sum over i != j of w_i^T X_i X_j^T w_j for retained column k.
double sumcor_objective(const SubspaceModel& model, const MultiViewData& data, int column);

}  // namespace mudloc
