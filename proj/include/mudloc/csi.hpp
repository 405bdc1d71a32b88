#pragma once

// CSI feature extraction: amplitude and adjacent-antenna phase-difference
// feature images, plus the per-row standardization applied before subspace
// learning.

#include "mudloc/types.hpp"

#include <vector>

namespace mudloc {

/// Offset removal applied to phase differences after wrapping.
enum class PhaseCentering {
  kPerPacket,  ///< subtract each packet's mean difference (column mean)
  kPerRow,     ///< subtract each feature row's mean across the trace's packets
  kNone,
};

/// |h| per subcarrier and antenna pair; entry (s + S*l, j) for packet j.
/// Labels are set to the trace's cell id when present.
FeatureImage amplitude_image(const CsiTrace& trace);

/// Adjacent receive-antenna pairs (r, r+1) for every transmit antenna,
/// tx-major, as (column of r, column of r+1).
std::vector<std::pair<int, int>> adjacent_receiver_pairs(const AntennaLayout& layout);

/// Phase differences arg(h_r) - arg(h_{r+1}) wrapped to (-pi, pi]; rows are
/// s + S*p with p enumerating adjacent_receiver_pairs(layout).
FeatureImage phase_difference_image(const CsiTrace& trace, const AntennaLayout& layout,
                                    PhaseCentering centering = PhaseCentering::kPerPacket);

/// Affine map x -> (x - mean) / scale per row, learned on training data.
struct NormalizationParams {
  Vector mean;
  Vector scale;
  /// Rows whose variance was zero; these are only centered.
  std::vector<int> constant_rows;

  Matrix apply(const Matrix& x) const;
  int dim() const { return static_cast<int>(mean.size()); }
};

struct NormalizedImage {
  FeatureImage image;
  NormalizationParams params;
};

/// Zero mean and unit population variance per row.
NormalizedImage normalize_image(const FeatureImage& img);

/// Column-wise concatenation of images of the same view and modality.
FeatureImage concat_samples(const std::vector<FeatureImage>& parts);

}  // namespace mudloc
