#include "mudloc/csi.hpp"

#include "mudloc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mudloc {

AntennaLayout AntennaLayout::tx_major(int n_tx, int n_rx) {
  AntennaLayout layout{n_tx, n_rx, {}};
  for (int t = 0; t < n_tx; ++t) {
    for (int r = 0; r < n_rx; ++r) layout.pair_order.emplace_back(t, r);
  }
  layout.validate();
  return layout;
}

int AntennaLayout::column_of(int tx, int rx) const {
  const auto it = std::find(pair_order.begin(), pair_order.end(), std::pair{tx, rx});
  if (it == pair_order.end()) {
    throw InvalidInput("antenna pair (" + std::to_string(tx) + "," + std::to_string(rx) +
                       ") not in layout");
  }
  return static_cast<int>(it - pair_order.begin());
}

void AntennaLayout::validate() const {
  if (n_tx < 1 || n_rx < 1) throw InvalidInput("antenna layout needs n_tx >= 1 and n_rx >= 1");
  if (pair_order.size() != static_cast<std::size_t>(n_tx * n_rx)) {
    throw InvalidInput("antenna layout pair_order must list all n_tx*n_rx pairs");
  }
  std::vector<bool> seen(pair_order.size(), false);
  for (const auto& [t, r] : pair_order) {
    if (t < 0 || t >= n_tx || r < 0 || r >= n_rx) throw InvalidInput("antenna pair index out of range");
    const auto k = static_cast<std::size_t>(t * n_rx + r);
    if (seen[k]) throw InvalidInput("antenna pair listed twice in layout");
    seen[k] = true;
  }
}

void CsiTrace::validate() const {
  if (packets.empty()) throw InvalidInput("trace has no packets");
  const auto s = packets.front().rows();
  const auto l = packets.front().cols();
  if (s < 1 || l < 1) throw InvalidInput("trace packets must be at least 1x1");
  for (std::size_t j = 0; j < packets.size(); ++j) {
    if (packets[j].rows() != s || packets[j].cols() != l) {
      throw InvalidInput("packet " + std::to_string(j) + " has a different shape");
    }
  }
}

std::string to_string(Modality m) {
  return m == Modality::kAmplitude ? "amplitude" : "phase-difference";
}

void FeatureImage::validate() const {
  if (!data.allFinite()) throw InvalidInput("feature image contains non-finite entries");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != data.cols()) {
    throw InvalidInput("feature image label count does not match column count");
  }
  for (int c : labels) {
    if (c < 1) throw InvalidInput("feature image labels must be >= 1");
  }
}

namespace {

Labels trace_labels(const CsiTrace& trace) {
  if (!trace.cell_id) return {};
  return Labels(trace.packets.size(), *trace.cell_id);
}

}  // namespace

FeatureImage amplitude_image(const CsiTrace& trace) {
  trace.validate();
  for (std::size_t j = 0; j < trace.packets.size(); ++j) {
    if (!trace.packets[j].allFinite()) {
      throw InvalidInput("packet " + std::to_string(j) + " contains NaN/Inf CSI");
    }
  }
  FeatureImage img;
  img.data = kernels::omp::amplitude_features(trace.packets);
  img.view = trace.ap_id;
  img.modality = Modality::kAmplitude;
  img.labels = trace_labels(trace);
  return img;
}

std::vector<std::pair<int, int>> adjacent_receiver_pairs(const AntennaLayout& layout) {
  layout.validate();
  if (layout.n_rx < 2) throw InvalidInput("phase differencing needs at least 2 receive antennas");
  std::vector<std::pair<int, int>> pairs;
  for (int t = 0; t < layout.n_tx; ++t) {
    for (int r = 0; r + 1 < layout.n_rx; ++r) {
      pairs.emplace_back(layout.column_of(t, r), layout.column_of(t, r + 1));
    }
  }
  return pairs;
}

FeatureImage phase_difference_image(const CsiTrace& trace, const AntennaLayout& layout,
                                    PhaseCentering centering) {
  trace.validate();
  const auto pairs = adjacent_receiver_pairs(layout);
  if (trace.pairs() != layout.pair_count()) {
    throw InvalidInput("trace has " + std::to_string(trace.pairs()) + " antenna pairs, layout has " +
                       std::to_string(layout.pair_count()));
  }
  for (std::size_t j = 0; j < trace.packets.size(); ++j) {
    const auto& p = trace.packets[j];
    if (!p.allFinite()) throw InvalidInput("packet " + std::to_string(j) + " contains NaN/Inf CSI");
    if ((p.array().abs() == 0.0).any()) {
      throw InvalidInput("packet " + std::to_string(j) + " has a zero-magnitude CSI entry");
    }
  }

  FeatureImage img;
  img.data = kernels::omp::phase_difference_features(trace.packets, pairs);
  switch (centering) {
    case PhaseCentering::kPerPacket:
      img.data.rowwise() -= img.data.colwise().mean();
      break;
    case PhaseCentering::kPerRow:
      img.data.colwise() -= img.data.rowwise().mean();
      break;
    case PhaseCentering::kNone:
      break;
  }
  img.view = trace.ap_id;
  img.modality = Modality::kPhaseDifference;
  img.labels = trace_labels(trace);
  return img;
}

Matrix NormalizationParams::apply(const Matrix& x) const {
  if (x.rows() != mean.size()) {
    throw InvalidInput("normalization expects " + std::to_string(mean.size()) + " rows, got " +
                       std::to_string(x.rows()));
  }
  return (x.colwise() - mean).array().colwise() / scale.array();
}

NormalizedImage normalize_image(const FeatureImage& img) {
  img.validate();
  if (img.samples() < 2) throw InvalidInput("normalization needs at least 2 samples");
  const auto n = static_cast<double>(img.samples());
  NormalizationParams params;
  params.mean = img.data.rowwise().mean();
  params.scale = Vector::Ones(img.dim());
  for (Eigen::Index r = 0; r < img.data.rows(); ++r) {
    const double var = (img.data.row(r).array() - params.mean(r)).square().sum() / n;
    if (var > 0.0) {
      params.scale(r) = std::sqrt(var);
    } else {
      params.constant_rows.push_back(static_cast<int>(r));
    }
  }
  NormalizedImage out{img, params};
  out.image.data = params.apply(img.data);
  return out;
}

FeatureImage concat_samples(const std::vector<FeatureImage>& parts) {
  if (parts.empty()) throw InvalidInput("concat_samples: nothing to concatenate");
  Eigen::Index cols = 0;
  bool labeled = true;
  for (const auto& p : parts) {
    if (p.dim() != parts.front().dim() || p.modality != parts.front().modality) {
      throw InvalidInput("concat_samples: images differ in dimension or modality");
    }
    cols += p.samples();
    labeled = labeled && !p.labels.empty();
  }
  FeatureImage out;
  out.view = parts.front().view;
  out.modality = parts.front().modality;
  out.data.resize(parts.front().dim(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.data.middleCols(at, p.samples()) = p.data;
    at += p.samples();
    if (labeled) out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

}  // namespace mudloc
