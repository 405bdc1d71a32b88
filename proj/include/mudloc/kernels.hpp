#pragma once

// Data-parallel inner loops of the pipeline. Every kernel exists twice: a
// plain serial reference and an OpenMP version. Both traverse each output
// element's reduction in the same order, so their results are bit-identical
// for any thread count; the tests and the benchmark rely on that.

#include "mudloc/types.hpp"

#include <span>
#include <utility>

namespace mudloc::kernels {

/// (first column, second column) of an adjacent receive-antenna pair.
using ColumnPair = std::pair<int, int>;

namespace serial {

/// out = x * y^T for x (d1 x n), y (d2 x n).
Matrix gram(const Matrix& x, const Matrix& y);
/// out = w^T * x for w (d x r), x (d x n).
Matrix project(const Matrix& w, const Matrix& x);
/// Column sums per class, d x num_classes. Labels are 1-based.
Matrix class_sums(const Matrix& x, const Labels& labels, int num_classes);
/// Column j = |packets[j]| flattened with entry s + S*l.
Matrix amplitude_features(std::span<const ComplexMatrix> packets);
/// Column j, block p, row s = arg(h[s, first_p] * conj(h[s, second_p])) in (-pi, pi].
Matrix phase_difference_features(std::span<const ComplexMatrix> packets,
                                 std::span<const ColumnPair> pairs);
/// Squared Euclidean distance from query to every column of templates.
Vector squared_distances(const Matrix& templates, const Vector& query);

}  // namespace serial

namespace omp {

Matrix gram(const Matrix& x, const Matrix& y);
Matrix project(const Matrix& w, const Matrix& x);
Matrix class_sums(const Matrix& x, const Labels& labels, int num_classes);
Matrix amplitude_features(std::span<const ComplexMatrix> packets);
Matrix phase_difference_features(std::span<const ComplexMatrix> packets,
                                 std::span<const ColumnPair> pairs);
Vector squared_distances(const Matrix& templates, const Vector& query);

}  // namespace omp

/// Wrap a phase into (-pi, pi].
double wrap_phase(double angle);

/// Sets the OpenMP team size used by the omp:: kernels; n <= 0 restores the
/// default (MUDLOC_THREADS, then the runtime default).
void set_thread_count(int n);
int thread_count();

}  // namespace mudloc::kernels
