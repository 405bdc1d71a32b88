#pragma once

// Offline training and online cell classification.
//
// Training: per view and modality, build feature images from the training
// packets, standardize each row, fit the chosen multi-view method, project
// every view, average the variates across views, stack amplitude over phase
// (the MDFI), and keep one centroid per cell.
//
// Online: a batch of packets from one location is mapped the same way, its
// MDFI columns are averaged into a single vector, and the nearest template in
// Euclidean distance wins. Ties go to the smallest cell id.

#include "mudloc/csi.hpp"
#include "mudloc/dataset.hpp"
#include "mudloc/subspace.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mudloc {

enum class Method { kGi2dca, kGma, kMcca, kCcaPairwise };
enum class ModalitySelection { kAmplitude, kPhase, kBoth };
enum class TemplateMode { kCentroid, kNearestColumn };

std::string to_string(Method m);
std::string to_string(ModalitySelection m);
std::string to_string(TemplateMode m);
Method method_from_string(const std::string& s);
ModalitySelection modality_from_string(const std::string& s);
TemplateMode template_mode_from_string(const std::string& s);

struct TrainConfig {
  Method method = Method::kGi2dca;
  ModalitySelection modality = ModalitySelection::kBoth;
  CouplingMode coupling = CouplingMode::kClassBlocks;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  FitOptions fit;
  PhaseCentering centering = PhaseCentering::kPerPacket;
  TemplateMode templates = TemplateMode::kCentroid;
  /// Zero-based view indices to use; empty means every view.
  std::vector<int> views;
};

/// Feature images for every (view, cell), extracted once.
class FeatureBank {
 public:
  static FeatureBank build(const Dataset& data, PhaseCentering centering = PhaseCentering::kPerPacket);

  int view_count() const { return static_cast<int>(amplitude_.size()); }
  const GridGeometry& geometry() const { return geometry_; }
  PhaseCentering centering() const { return centering_; }

  /// Columns of the requested samples for one view, in sample order.
  Matrix gather(Modality modality, int view, const SampleSet& samples) const;
  static Labels labels(const SampleSet& samples);

 private:
  std::vector<std::map<int, Matrix>> amplitude_;
  std::vector<std::map<int, Matrix>> phase_;
  GridGeometry geometry_;
  PhaseCentering centering_ = PhaseCentering::kPerPacket;
};

/// Normalization plus fitted subspace(s) for one modality.
struct ModalityPipeline {
  Modality modality = Modality::kAmplitude;
  /// Standardization per used view, aligned with TrainedLocalizer::views.
  std::vector<NormalizationParams> norms;

  struct Component {
    /// Positions within TrainedLocalizer::views that this model consumes.
    std::vector<int> members;
    SubspaceModel model;
  };
  /// One component for joint multi-view methods, one per pair for pairwise CCA.
  std::vector<Component> components;

  int output_dim() const;
  /// raw[v] holds unnormalized features of used view v, one column per packet.
  Matrix transform(const std::vector<Matrix>& raw) const;
};

struct TrainedLocalizer {
  TrainConfig config;
  std::vector<int> views;  ///< zero-based dataset view indices in use
  std::optional<ModalityPipeline> amplitude;
  std::optional<ModalityPipeline> phase;
  std::vector<int> cell_ids;
  Matrix templates;  ///< feature_dim x C, column k is cell_ids[k]
  Matrix training_mdfi;
  Labels training_labels;
  GridGeometry geometry;
  AntennaLayout layout;
  int subcarriers = 0;
  double beta_selected = 0.0;

  int feature_dim() const { return static_cast<int>(templates.rows()); }
};

/// Holds normalized training views and their statistics so several
/// hyperparameter settings can be fitted without recomputing them.
class TrainingSession {
 public:
  TrainingSession(const FeatureBank& bank, const SampleSet& training, const TrainConfig& config,
                  AntennaLayout layout, int subcarriers);

  TrainedLocalizer fit(double beta) const;

 private:
  struct ModalityData {
    Modality modality;
    std::vector<NormalizationParams> norms;
    MultiViewData data;
    std::optional<ViewStatistics> stats;
  };

  ModalityPipeline fit_modality(const ModalityData& md, double beta) const;

  TrainConfig config_;
  std::vector<int> views_;
  std::vector<ModalityData> modalities_;
  Labels labels_;
  GridGeometry geometry_;
  AntennaLayout layout_;
  int subcarriers_ = 0;
};

std::vector<int> resolve_views(const TrainConfig& config, int available);

TrainedLocalizer train(const FeatureBank& bank, const Dataset& data, const SampleSet& training,
                       const TrainConfig& config);
TrainedLocalizer train(const Dataset& data, const SampleSet& training, const TrainConfig& config);

/// MDFI columns for raw per-view features (aligned with model.views).
Matrix mdfi(const TrainedLocalizer& model, const std::vector<Matrix>& amplitude_raw,
            const std::vector<Matrix>& phase_raw);

/// Nearest template to one MDFI vector.
int classify_mdfi(const TrainedLocalizer& model, const Vector& z);

/// One location estimate from a batch of traces, one per dataset view
/// (trace.ap_id selects the view). Views the model does not use are ignored.
int classify(const TrainedLocalizer& model, const std::vector<CsiTrace>& batch);

/// Same estimate computed from pre-extracted features.
int classify_samples(const TrainedLocalizer& model, const FeatureBank& bank, const SampleSet& batch);

struct EvalReport {
  double mean_distance_error = 0.0;
  double std_distance_error = 0.0;
  /// (error in meters, fraction of estimates with error <= it), ascending.
  std::vector<std::pair<double, double>> cdf;
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  ///< rows truth, cols prediction, cell k at index k-1
  double timing_seconds_per_estimate = 0.0;
  std::vector<int> truth;
  std::vector<int> predicted;
  std::vector<double> errors;
  int batch_packets = 0;
  int views = 0;
};

/// Metrics from paired truth/prediction cell ids.
EvalReport summarize(const std::vector<int>& truth, const std::vector<int>& predicted,
                     const GridGeometry& geometry);

struct EvalOptions {
  /// Packets per online estimate. Test packets of each cell are cut into
  /// consecutive batches of this size; a short tail batch is dropped unless
  /// it is the only one.
  int batch_packets = 10;
  /// Timing is the median over this many repetitions.
  int timing_repetitions = 5;
};

/// Batches of the test samples grouped per cell.
std::vector<SampleSet> make_batches(const SampleSet& samples, int batch_packets);

EvalReport evaluate(const TrainedLocalizer& model, const Dataset& data, const SampleSet& test,
                    const EvalOptions& options = {});

struct BetaSelection {
  double beta = 0.0;
  std::vector<std::pair<double, double>> scores;  ///< (beta, mean CV distance error)
};

/// Stratified k-fold search; the lowest mean distance error wins, ties go to
/// the smaller beta.
BetaSelection select_beta(const FeatureBank& bank, const Dataset& data, const SampleSet& samples,
                          const TrainConfig& config, std::vector<double> grid, int folds = 5,
                          std::uint64_t seed = 42, const EvalOptions& options = {});

/// Stratified fold index per sample, deterministic in seed.
std::vector<int> stratified_folds(const SampleSet& samples, int folds, std::uint64_t seed);

/// Retrain and evaluate with the first k views for every k.
std::vector<EvalReport> sweep_views(const Dataset& data, const SampleSet& training, const SampleSet& test,
                                    const TrainConfig& config, const std::vector<int>& view_counts,
                                    const EvalOptions& options = {});

/// Evaluate one model with several online batch sizes.
std::vector<EvalReport> sweep_packets(const TrainedLocalizer& model, const Dataset& data,
                                      const SampleSet& test, const std::vector<int>& packet_counts,
                                      const EvalOptions& options = {});

}  // namespace mudloc
