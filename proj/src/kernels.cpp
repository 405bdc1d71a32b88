#include "mudloc/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

namespace mudloc::kernels {

namespace {

void check_same_columns(const Matrix& x, const Matrix& y, const char* what) {
  if (x.cols() != y.cols()) {
    throw InvalidInput(std::string(what) + ": column count mismatch (" + std::to_string(x.cols()) +
                       " vs " + std::to_string(y.cols()) + ")");
  }
}

void check_labels(const Matrix& x, const Labels& labels, int num_classes) {
  if (static_cast<Eigen::Index>(labels.size()) != x.cols()) {
    throw InvalidInput("class_sums: label count does not match sample count");
  }
  for (int c : labels) {
    if (c < 1 || c > num_classes) {
      throw InvalidInput("class_sums: label " + std::to_string(c) + " outside 1.." +
                         std::to_string(num_classes));
    }
  }
}

void check_packets(std::span<const ComplexMatrix> packets) {
  if (packets.empty()) return;
  const auto rows = packets.front().rows();
  const auto cols = packets.front().cols();
  for (const auto& p : packets) {
    if (p.rows() != rows || p.cols() != cols) {
      throw InvalidInput("packet shapes differ within one trace");
    }
  }
}

// Shared element computations so the serial and parallel paths cannot drift.

inline void gram_column(const Matrix& x, const Matrix& y, Matrix& out, Eigen::Index b) {
  const Eigen::Index d1 = x.rows();
  double* dst = out.col(b).data();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double yb = y(b, j);
    const double* src = x.col(j).data();
    for (Eigen::Index a = 0; a < d1; ++a) dst[a] += src[a] * yb;
  }
}

inline void project_column(const Matrix& w, const Matrix& x, Matrix& out, Eigen::Index j) {
  const Eigen::Index d = w.rows();
  const double* xc = x.col(j).data();
  for (Eigen::Index a = 0; a < w.cols(); ++a) {
    const double* wc = w.col(a).data();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) acc += wc[i] * xc[i];
    out(a, j) = acc;
  }
}

inline void class_sum_rows(const Matrix& x, const Labels& labels, Matrix& out, Eigen::Index r0,
                           Eigen::Index r1) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double* src = x.col(j).data();
    double* dst = out.col(labels[j] - 1).data();
    for (Eigen::Index r = r0; r < r1; ++r) dst[r] += src[r];
  }
}

inline void amplitude_column(const ComplexMatrix& packet, Matrix& out, Eigen::Index j) {
  const Eigen::Index s_count = packet.rows();
  for (Eigen::Index l = 0; l < packet.cols(); ++l) {
    for (Eigen::Index s = 0; s < s_count; ++s) {
      const auto h = packet(s, l);
      out(s + s_count * l, j) = std::sqrt(h.real() * h.real() + h.imag() * h.imag());
    }
  }
}

inline void phase_column(const ComplexMatrix& packet, std::span<const ColumnPair> pairs, Matrix& out,
                         Eigen::Index j) {
  const Eigen::Index s_count = packet.rows();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (Eigen::Index s = 0; s < s_count; ++s) {
      const auto prod = packet(s, pairs[p].first) * std::conj(packet(s, pairs[p].second));
      out(s + s_count * static_cast<Eigen::Index>(p), j) = wrap_phase(std::arg(prod));
    }
  }
}

inline double squared_distance(const Matrix& templates, const Vector& query, Eigen::Index c) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < query.size(); ++i) {
    const double diff = templates(i, c) - query(i);
    acc += diff * diff;
  }
  return acc;
}

constexpr Eigen::Index kRowBlock = 64;

}  // namespace

double wrap_phase(double angle) {
  constexpr double kPi = std::numbers::pi;
  if (angle > -kPi && angle <= kPi) return angle;
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

namespace serial {

Matrix gram(const Matrix& x, const Matrix& y) {
  check_same_columns(x, y, "gram");
  Matrix out = Matrix::Zero(x.rows(), y.rows());
  for (Eigen::Index b = 0; b < y.rows(); ++b) gram_column(x, y, out, b);
  return out;
}

Matrix project(const Matrix& w, const Matrix& x) {
  if (w.rows() != x.rows()) throw InvalidInput("project: projection rows do not match feature rows");
  Matrix out(w.cols(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) project_column(w, x, out, j);
  return out;
}

Matrix class_sums(const Matrix& x, const Labels& labels, int num_classes) {
  check_labels(x, labels, num_classes);
  Matrix out = Matrix::Zero(x.rows(), num_classes);
  class_sum_rows(x, labels, out, 0, x.rows());
  return out;
}

Matrix amplitude_features(std::span<const ComplexMatrix> packets) {
  check_packets(packets);
  const Eigen::Index d = packets.empty() ? 0 : packets.front().size();
  Matrix out(d, static_cast<Eigen::Index>(packets.size()));
  for (std::size_t j = 0; j < packets.size(); ++j) amplitude_column(packets[j], out, j);
  return out;
}

Matrix phase_difference_features(std::span<const ComplexMatrix> packets,
                                 std::span<const ColumnPair> pairs) {
  check_packets(packets);
  const Eigen::Index s_count = packets.empty() ? 0 : packets.front().rows();
  Matrix out(s_count * static_cast<Eigen::Index>(pairs.size()),
             static_cast<Eigen::Index>(packets.size()));
  for (std::size_t j = 0; j < packets.size(); ++j) phase_column(packets[j], pairs, out, j);
  return out;
}

Vector squared_distances(const Matrix& templates, const Vector& query) {
  if (templates.rows() != query.size()) throw InvalidInput("squared_distances: dimension mismatch");
  Vector out(templates.cols());
  for (Eigen::Index c = 0; c < templates.cols(); ++c) out(c) = squared_distance(templates, query, c);
  return out;
}

}  // namespace serial

namespace omp {

Matrix gram(const Matrix& x, const Matrix& y) {
  check_same_columns(x, y, "gram");
  Matrix out = Matrix::Zero(x.rows(), y.rows());
  const Eigen::Index cols = y.rows();
#pragma omp parallel for schedule(dynamic, 4) num_threads(thread_count())
  for (Eigen::Index b = 0; b < cols; ++b) gram_column(x, y, out, b);
  return out;
}

Matrix project(const Matrix& w, const Matrix& x) {
  if (w.rows() != x.rows()) throw InvalidInput("project: projection rows do not match feature rows");
  Matrix out(w.cols(), x.cols());
  const Eigen::Index n = x.cols();
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index j = 0; j < n; ++j) project_column(w, x, out, j);
  return out;
}

Matrix class_sums(const Matrix& x, const Labels& labels, int num_classes) {
  check_labels(x, labels, num_classes);
  Matrix out = Matrix::Zero(x.rows(), num_classes);
  const Eigen::Index blocks = (x.rows() + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index r0 = blk * kRowBlock;
    class_sum_rows(x, labels, out, r0, std::min(r0 + kRowBlock, x.rows()));
  }
  return out;
}

Matrix amplitude_features(std::span<const ComplexMatrix> packets) {
  check_packets(packets);
  const Eigen::Index d = packets.empty() ? 0 : packets.front().size();
  const auto n = static_cast<Eigen::Index>(packets.size());
  Matrix out(d, n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index j = 0; j < n; ++j) amplitude_column(packets[j], out, j);
  return out;
}

Matrix phase_difference_features(std::span<const ComplexMatrix> packets,
                                 std::span<const ColumnPair> pairs) {
  check_packets(packets);
  const Eigen::Index s_count = packets.empty() ? 0 : packets.front().rows();
  const auto n = static_cast<Eigen::Index>(packets.size());
  Matrix out(s_count * static_cast<Eigen::Index>(pairs.size()), n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index j = 0; j < n; ++j) phase_column(packets[j], pairs, out, j);
  return out;
}

Vector squared_distances(const Matrix& templates, const Vector& query) {
  if (templates.rows() != query.size()) throw InvalidInput("squared_distances: dimension mismatch");
  const Eigen::Index count = templates.cols();
  Vector out(count);
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (count > 256)
  for (Eigen::Index c = 0; c < count; ++c) out(c) = squared_distance(templates, query, c);
  return out;
}

}  // namespace omp

namespace {
int g_thread_override = 0;
}

void set_thread_count(int n) { g_thread_override = n > 0 ? n : 0; }

int thread_count() {
  if (g_thread_override > 0) return g_thread_override;
  if (const char* env = std::getenv("MUDLOC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

}  // namespace mudloc::kernels
