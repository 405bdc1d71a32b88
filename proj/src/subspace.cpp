#include "mudloc/subspace.hpp"

#include "mudloc/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace mudloc {

std::string to_string(CouplingMode mode) {
  return mode == CouplingMode::kIdentity ? "identity" : "class-blocks";
}

CouplingMode coupling_from_string(const std::string& s) {
  if (s == "identity") return CouplingMode::kIdentity;
  if (s == "class-blocks") return CouplingMode::kClassBlocks;
  throw InvalidInput("unknown coupling mode '" + s + "' (expected identity|class-blocks)");
}

// ---------------------------------------------------------------------------
// CouplingMatrix

CouplingMatrix CouplingMatrix::identity(int n) {
  CouplingMatrix g;
  g.mode_ = CouplingMode::kIdentity;
  g.n_ = n;
  return g;
}

CouplingMatrix CouplingMatrix::class_blocks(Labels labels) {
  CouplingMatrix g;
  g.mode_ = CouplingMode::kClassBlocks;
  g.n_ = static_cast<int>(labels.size());
  g.labels_ = std::move(labels);
  return g;
}

Matrix CouplingMatrix::materialize() const {
  if (mode_ == CouplingMode::kIdentity) return Matrix::Identity(n_, n_);
  Matrix g(n_, n_);
  for (int a = 0; a < n_; ++a) {
    for (int b = 0; b < n_; ++b) g(a, b) = labels_[a] == labels_[b] ? 1.0 : 0.0;
  }
  return g;
}

Matrix CouplingMatrix::couple(const Matrix& xi, const Matrix& xj) const {
  if (xi.cols() != n_ || xj.cols() != n_) throw InvalidInput("coupling: sample count mismatch");
  if (mode_ == CouplingMode::kIdentity) return kernels::omp::gram(xi, xj);
  const int classes = *std::max_element(labels_.begin(), labels_.end());
  const Matrix si = kernels::omp::class_sums(xi, labels_, classes);
  const Matrix sj = kernels::omp::class_sums(xj, labels_, classes);
  return kernels::omp::gram(si, sj);
}

// ---------------------------------------------------------------------------
// MultiViewData / Hyperparams

int MultiViewData::num_classes() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

void MultiViewData::validate(bool require_labels) const {
  if (views.size() < 2) throw InvalidInput("multi-view data needs at least 2 views");
  const auto n = views.front().cols();
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].cols() != n) {
      throw InvalidInput("all views must have the same number of samples (view " +
                         std::to_string(i + 1) + " has " + std::to_string(views[i].cols()) +
                         ", expected " + std::to_string(n) + ")");
    }
    if (views[i].rows() < 1) throw InvalidInput("view " + std::to_string(i + 1) + " has no features");
    if (!views[i].allFinite()) throw InvalidInput("view " + std::to_string(i + 1) + " is not finite");
  }
  if (n < 2) throw InvalidInput("need at least 2 samples");
  if (require_labels && labels.empty()) throw InvalidInput("this method needs class labels");
  if (!labels.empty()) {
    if (static_cast<Eigen::Index>(labels.size()) != n) {
      throw InvalidInput("label count does not match sample count");
    }
    const int classes = num_classes();
    std::vector<bool> present(classes, false);
    for (int c : labels) {
      if (c < 1) throw InvalidInput("labels must be >= 1");
      present[c - 1] = true;
    }
    for (int c = 0; c < classes; ++c) {
      if (!present[c]) throw InvalidInput("class " + std::to_string(c + 1) + " has no samples");
    }
  }
}

Hyperparams Hyperparams::uniform(int views, double alpha, double beta, double gamma) {
  Hyperparams h;
  h.alpha = Vector::Constant(views, alpha);
  h.beta = Matrix::Constant(views, views, beta);
  h.beta.diagonal().setZero();
  h.gamma = Vector::Constant(views, gamma);
  return h;
}

void Hyperparams::validate(int views) const {
  if (alpha.size() != views || gamma.size() != views || beta.rows() != views ||
      beta.cols() != views) {
    throw InvalidInput("hyperparameters sized for a different view count");
  }
  if ((alpha.array() < 0.0).any()) throw InvalidInput("alpha must be >= 0");
  if ((gamma.array() <= 0.0).any()) throw InvalidInput("gamma must be > 0");
  for (int i = 0; i < views; ++i) {
    for (int j = 0; j < views; ++j) {
      if (i != j && beta(i, j) < 0.0) throw InvalidInput("beta must be >= 0");
      if (beta(i, j) != beta(j, i)) throw InvalidInput("beta must be symmetric");
    }
  }
}

// ---------------------------------------------------------------------------
// ViewStatistics

ViewStatistics ViewStatistics::compute(const MultiViewData& data) {
  data.validate(false);
  ViewStatistics s;
  s.samples_ = data.samples();
  int total = 0;
  for (const auto& v : data.views) {
    s.offsets_.push_back(total);
    s.dims_.push_back(static_cast<int>(v.rows()));
    total += static_cast<int>(v.rows());
  }
  Matrix stacked(total, s.samples_);
  for (int i = 0; i < data.view_count(); ++i) {
    stacked.middleRows(s.offsets_[i], s.dims_[i]) = data.views[i];
  }
  s.gram_ = kernels::omp::gram(stacked, stacked);

  if (!data.labels.empty()) {
    const int classes = data.num_classes();
    s.class_counts_.assign(classes, 0);
    for (int c : data.labels) ++s.class_counts_[c - 1];
    for (const auto& v : data.views) {
      s.class_sums_.push_back(kernels::omp::class_sums(v, data.labels, classes));
    }
  }
  return s;
}

Matrix ViewStatistics::cross(int i, int j) const {
  return gram_.block(offsets_[i], offsets_[j], dims_[i], dims_[j]);
}

Matrix ViewStatistics::coupled(int i, int j, CouplingMode mode) const {
  if (mode == CouplingMode::kIdentity) return cross(i, j);
  if (!labeled()) throw InvalidInput("class-block coupling needs labels");
  // X_i G X_j^T = sum_c (class sum of X_i)(class sum of X_j)^T.
  return kernels::omp::gram(class_sums_[i], class_sums_[j]);
}

Matrix ViewStatistics::between(int i) const {
  if (!labeled()) throw InvalidInput("between-class scatter needs labels");
  const Matrix& sums = class_sums_[i];
  const Vector mu = sums.rowwise().sum() / static_cast<double>(samples_);
  Matrix weighted(sums.rows(), sums.cols());
  for (Eigen::Index c = 0; c < sums.cols(); ++c) {
    const double nc = class_counts_[c];
    weighted.col(c) = std::sqrt(nc) * (sums.col(c) / nc - mu);
  }
  return kernels::omp::gram(weighted, weighted);
}

// ---------------------------------------------------------------------------
// Pencils

MultiViewPencil assemble_pencil(const ViewStatistics& stats, const Hyperparams& hyper,
                                CouplingMode coupling) {
  const int m = stats.view_count();
  hyper.validate(m);
  MultiViewPencil p;
  p.dims = stats.dims();
  std::vector<int> offsets(m, 0);
  for (int i = 1; i < m; ++i) offsets[i] = offsets[i - 1] + p.dims[i - 1];
  const int total = offsets.back() + p.dims.back();
  p.left = Matrix::Zero(total, total);
  p.right = Matrix::Zero(total, total);

  for (int i = 0; i < m; ++i) {
    if (hyper.alpha(i) != 0.0) {
      p.left.block(offsets[i], offsets[i], p.dims[i], p.dims[i]) = hyper.alpha(i) * stats.between(i);
    }
    p.right.block(offsets[i], offsets[i], p.dims[i], p.dims[i]) = hyper.gamma(i) * stats.cross(i, i);
    for (int j = i + 1; j < m; ++j) {
      if (hyper.beta(i, j) == 0.0) continue;
      const Matrix block = hyper.beta(i, j) * stats.coupled(i, j, coupling);
      p.left.block(offsets[i], offsets[j], p.dims[i], p.dims[j]) = block;
      p.left.block(offsets[j], offsets[i], p.dims[j], p.dims[i]) = block.transpose();
    }
  }
  return p;
}

SubspaceModel solve_pencil(const MultiViewPencil& pencil, const FitOptions& options) {
  const auto eig = generalized_eig_sym(pencil.left, pencil.right, options.ridge);
  const int cap = *std::min_element(pencil.dims.begin(), pencil.dims.end());

  int r = 0;
  if (options.rank.fixed > 0) {
    r = std::min(options.rank.fixed, cap);
  } else if (eig.eigenvalues.size() > 0 && eig.eigenvalues(0) > 0.0) {
    const double floor = options.rank.relative_threshold * eig.eigenvalues(0);
    while (r < cap && eig.eigenvalues(r) > floor) ++r;
  }

  SubspaceModel model;
  model.eigenvalues = eig.eigenvalues.head(r);
  model.all_eigenvalues = eig.eigenvalues;
  model.ridge_used = eig.ridge_used;
  int offset = 0;
  for (int d : pencil.dims) {
    model.projections.push_back(eig.eigenvectors.block(offset, 0, d, r));
    offset += d;
  }
  return model;
}

namespace {

SubspaceModel fit_with(const ViewStatistics& stats, const Hyperparams& hyper, CouplingMode coupling,
                       const FitOptions& options, std::string method) {
  auto model = solve_pencil(assemble_pencil(stats, hyper, coupling), options);
  model.method = std::move(method);
  model.hyper = hyper;
  model.coupling = coupling;
  return model;
}

MultiViewData two_views(const Matrix& x1, const Matrix& x2, Labels labels = {}) {
  MultiViewData data{{x1, x2}, std::move(labels)};
  return data;
}

}  // namespace

SubspaceModel fit_cca(const Matrix& x1, const Matrix& x2, const FitOptions& options) {
  const auto data = two_views(x1, x2);
  data.validate(false);
  return fit_with(ViewStatistics::compute(data), Hyperparams::uniform(2, 0.0, 1.0, 1.0),
                  CouplingMode::kIdentity, options, "cca");
}

SubspaceModel fit_dcca(const Matrix& x1, const Matrix& x2, const Labels& labels,
                       CouplingMode coupling, const FitOptions& options) {
  const auto data = two_views(x1, x2, labels);
  data.validate(true);
  return fit_with(ViewStatistics::compute(data), Hyperparams::uniform(2, 0.0, 1.0, 1.0), coupling,
                  options, "dcca");
}

SubspaceModel fit_mcca(const MultiViewData& data, const FitOptions& options) {
  data.validate(false);
  return fit_with(ViewStatistics::compute(data), Hyperparams::uniform(data.view_count(), 0.0, 1.0, 1.0),
                  CouplingMode::kIdentity, options, "mcca");
}

SubspaceModel fit_gma(const MultiViewData& data, const Hyperparams& hyper, const FitOptions& options) {
  data.validate(true);
  return fit_with(ViewStatistics::compute(data), hyper, CouplingMode::kIdentity, options, "gma");
}

SubspaceModel fit_gi2dca(const MultiViewData& data, CouplingMode coupling, const Hyperparams& hyper,
                         const FitOptions& options) {
  data.validate(true);
  return fit_gi2dca(ViewStatistics::compute(data), coupling, hyper, options);
}

SubspaceModel fit_gi2dca(const ViewStatistics& stats, CouplingMode coupling, const Hyperparams& hyper,
                         const FitOptions& options) {
  return fit_with(stats, hyper, coupling, options, "gi2dca");
}

// ---------------------------------------------------------------------------
// Projection and fusion

Matrix project(const SubspaceModel& model, int view_index, const Matrix& x) {
  if (view_index < 0 || view_index >= model.view_count()) {
    throw InvalidInput("project: view index " + std::to_string(view_index) + " out of range");
  }
  const Matrix& w = model.projections[view_index];
  if (w.rows() != x.rows()) {
    throw InvalidInput("project: view " + std::to_string(view_index) + " expects " +
                       std::to_string(w.rows()) + " features, got " + std::to_string(x.rows()));
  }
  return kernels::omp::project(w, x);
}

Matrix average_variates(const std::vector<Matrix>& projections) {
  if (projections.empty()) throw InvalidInput("average_variates: no projections");
  Matrix sum = projections.front();
  for (std::size_t i = 1; i < projections.size(); ++i) {
    if (projections[i].rows() != sum.rows() || projections[i].cols() != sum.cols()) {
      throw InvalidInput("average_variates: projections differ in shape");
    }
    sum += projections[i];
  }
  return sum / static_cast<double>(projections.size());
}

MdfiMatrix fuse_mdfi(const Matrix& z_amplitude, const Matrix& z_phase, Labels labels) {
  if (z_amplitude.cols() != z_phase.cols()) {
    throw InvalidInput("fuse_mdfi: amplitude and phase blocks have different column counts");
  }
  MdfiMatrix out;
  out.amplitude_rows = static_cast<int>(z_amplitude.rows());
  out.data.resize(z_amplitude.rows() + z_phase.rows(), z_amplitude.cols());
  out.data.topRows(z_amplitude.rows()) = z_amplitude;
  out.data.bottomRows(z_phase.rows()) = z_phase;
  out.labels = std::move(labels);
  return out;
}

Vector constraint_values(const SubspaceModel& model, const MultiViewData& data) {
  Vector out = Vector::Zero(model.rank());
  for (int i = 0; i < model.view_count(); ++i) {
    const Matrix z = model.projections[i].transpose() * data.views[i];
    out += model.hyper.gamma(i) * z.rowwise().squaredNorm();
    out += model.ridge_used * model.projections[i].colwise().squaredNorm().transpose();
  }
  return out;
}

double sumcor_objective(const SubspaceModel& model, const MultiViewData& data, int column) {
  std::vector<Vector> variates;
  for (int i = 0; i < model.view_count(); ++i) {
    variates.push_back(data.views[i].transpose() * model.projections[i].col(column));
  }
  double rho = 0.0;
  for (int i = 0; i < model.view_count(); ++i) {
    for (int j = 0; j < model.view_count(); ++j) {
      if (i != j) rho += variates[i].dot(variates[j]);
    }
  }
  return rho;
}

}  // namespace mudloc
