#include "mudloc/localizer.hpp"

#include "mudloc/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <set>

namespace mudloc {

// ---------------------------------------------------------------------------
// Names

std::string to_string(Method m) {
  switch (m) {
    case Method::kGi2dca: return "gi2dca";
    case Method::kGma: return "gma";
    case Method::kMcca: return "mcca";
    case Method::kCcaPairwise: return "cca-pairwise";
  }
  return "gi2dca";
}

std::string to_string(ModalitySelection m) {
  switch (m) {
    case ModalitySelection::kAmplitude: return "amp";
    case ModalitySelection::kPhase: return "phase";
    case ModalitySelection::kBoth: return "both";
  }
  return "both";
}

std::string to_string(TemplateMode m) {
  return m == TemplateMode::kCentroid ? "centroid" : "nearest-column";
}

Method method_from_string(const std::string& s) {
  if (s == "gi2dca") return Method::kGi2dca;
  if (s == "gma") return Method::kGma;
  if (s == "mcca") return Method::kMcca;
  if (s == "cca-pairwise" || s == "pwcca") return Method::kCcaPairwise;
  throw InvalidInput("unknown method '" + s + "' (expected gi2dca|gma|mcca|cca-pairwise)");
}

ModalitySelection modality_from_string(const std::string& s) {
  if (s == "amp" || s == "amplitude") return ModalitySelection::kAmplitude;
  if (s == "phase") return ModalitySelection::kPhase;
  if (s == "both") return ModalitySelection::kBoth;
  throw InvalidInput("unknown modality '" + s + "' (expected amp|phase|both)");
}

TemplateMode template_mode_from_string(const std::string& s) {
  if (s == "centroid") return TemplateMode::kCentroid;
  if (s == "nearest-column") return TemplateMode::kNearestColumn;
  throw InvalidInput("unknown template mode '" + s + "' (expected centroid|nearest-column)");
}

// ---------------------------------------------------------------------------
// FeatureBank

FeatureBank FeatureBank::build(const Dataset& data, PhaseCentering centering) {
  data.validate();
  FeatureBank bank;
  bank.geometry_ = data.geometry;
  bank.centering_ = centering;
  bank.amplitude_.resize(data.views);
  bank.phase_.resize(data.views);
  const bool phase_ok = data.layout.n_rx >= 2;
  for (const auto& [cell, per_view] : data.traces) {
    for (int v = 0; v < data.views; ++v) {
      bank.amplitude_[v][cell] = amplitude_image(per_view[v]).data;
      if (phase_ok) bank.phase_[v][cell] = phase_difference_image(per_view[v], data.layout, centering).data;
    }
  }
  return bank;
}

Matrix FeatureBank::gather(Modality modality, int view, const SampleSet& samples) const {
  if (view < 0 || view >= view_count()) throw InvalidInput("feature bank has no view " + std::to_string(view));
  const auto& images = modality == Modality::kAmplitude ? amplitude_[view] : phase_[view];
  if (images.empty()) throw InvalidInput("feature bank has no " + to_string(modality) + " features");
  const Eigen::Index d = images.begin()->second.rows();
  Matrix out(d, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto it = images.find(samples[k].cell);
    if (it == images.end() || samples[k].packet < 0 || samples[k].packet >= it->second.cols()) {
      throw InvalidInput("sample (cell " + std::to_string(samples[k].cell) + ", packet " +
                         std::to_string(samples[k].packet) + ") not in feature bank");
    }
    out.col(static_cast<Eigen::Index>(k)) = it->second.col(samples[k].packet);
  }
  return out;
}

Labels FeatureBank::labels(const SampleSet& samples) {
  Labels out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.cell);
  return out;
}

// ---------------------------------------------------------------------------
// ModalityPipeline

namespace {

Matrix component_variates(const ModalityPipeline::Component& comp, const std::vector<Matrix>& normalized) {
  std::vector<Matrix> z;
  for (std::size_t k = 0; k < comp.members.size(); ++k) {
    z.push_back(project(comp.model, static_cast<int>(k), normalized[comp.members[k]]));
  }
  return average_variates(z);
}

Matrix pipeline_variates(const ModalityPipeline& p, const std::vector<Matrix>& normalized) {
  const Eigen::Index n = normalized.empty() ? 0 : normalized.front().cols();
  Matrix out(p.output_dim(), n);
  Eigen::Index row = 0;
  for (const auto& comp : p.components) {
    const Matrix z = component_variates(comp, normalized);
    out.middleRows(row, z.rows()) = z;
    row += z.rows();
  }
  return out;
}

}  // namespace

int ModalityPipeline::output_dim() const {
  int d = 0;
  for (const auto& c : components) d += c.model.rank();
  return d;
}

Matrix ModalityPipeline::transform(const std::vector<Matrix>& raw) const {
  if (raw.size() != norms.size()) {
    throw InvalidInput("pipeline expects " + std::to_string(norms.size()) + " views, got " +
                       std::to_string(raw.size()));
  }
  std::vector<Matrix> normalized;
  for (std::size_t v = 0; v < raw.size(); ++v) normalized.push_back(norms[v].apply(raw[v]));
  return pipeline_variates(*this, normalized);
}

// ---------------------------------------------------------------------------
// Training

std::vector<int> resolve_views(const TrainConfig& config, int available) {
  std::vector<int> views = config.views;
  if (views.empty()) {
    for (int v = 0; v < available; ++v) views.push_back(v);
  }
  std::set<int> seen;
  for (int v : views) {
    if (v < 0 || v >= available) {
      throw InvalidInput("view " + std::to_string(v + 1) + " requested but dataset has " +
                         std::to_string(available) + " views");
    }
    if (!seen.insert(v).second) throw InvalidInput("view " + std::to_string(v + 1) + " listed twice");
  }
  if (views.size() < 2) throw InvalidInput("training needs at least 2 views, got " + std::to_string(views.size()));
  return views;
}

TrainingSession::TrainingSession(const FeatureBank& bank, const SampleSet& training,
                                 const TrainConfig& config, AntennaLayout layout, int subcarriers)
    : config_(config),
      views_(resolve_views(config, bank.view_count())),
      labels_(FeatureBank::labels(training)),
      geometry_(bank.geometry()),
      layout_(std::move(layout)),
      subcarriers_(subcarriers) {
  if (bank.centering() != config.centering) {
    throw InvalidInput("feature bank phase centering differs from the training config");
  }
  if (geometry_.cell_count() < 2) {
    throw InvalidInput("training needs at least 2 cells; a single cell has no between-class structure");
  }
  std::map<int, int> counts;
  for (int c : labels_) ++counts[c];
  for (const auto& [cell, _] : geometry_.cells) {
    if (counts[cell] < 2) {
      throw InvalidInput("cell " + std::to_string(cell) + " has " + std::to_string(counts[cell]) +
                         " training samples, need at least 2");
    }
  }

  std::vector<Modality> wanted;
  if (config.modality != ModalitySelection::kPhase) wanted.push_back(Modality::kAmplitude);
  if (config.modality != ModalitySelection::kAmplitude) wanted.push_back(Modality::kPhaseDifference);

  const bool joint = config.method != Method::kCcaPairwise;
  for (Modality m : wanted) {
    ModalityData md{m, {}, {}, std::nullopt};
    md.data.labels = labels_;
    for (int v : views_) {
      FeatureImage img;
      img.data = bank.gather(m, v, training);
      img.view = v + 1;
      img.modality = m;
      auto normalized = normalize_image(img);
      md.norms.push_back(std::move(normalized.params));
      md.data.views.push_back(std::move(normalized.image.data));
    }
    md.data.validate(true);
    if (joint) md.stats = ViewStatistics::compute(md.data);
    modalities_.push_back(std::move(md));
  }
}

ModalityPipeline TrainingSession::fit_modality(const ModalityData& md, double beta) const {
  ModalityPipeline p;
  p.modality = md.modality;
  p.norms = md.norms;
  const int m = static_cast<int>(views_.size());
  std::vector<int> all(m);
  for (int v = 0; v < m; ++v) all[v] = v;

  switch (config_.method) {
    case Method::kGi2dca: {
      auto model = fit_gi2dca(*md.stats, config_.coupling,
                              Hyperparams::uniform(m, config_.alpha, beta, config_.gamma), config_.fit);
      p.components.push_back({all, std::move(model)});
      break;
    }
    case Method::kGma: {
      auto model = fit_gi2dca(*md.stats, CouplingMode::kIdentity,
                              Hyperparams::uniform(m, config_.alpha, beta, config_.gamma), config_.fit);
      model.method = "gma";
      p.components.push_back({all, std::move(model)});
      break;
    }
    case Method::kMcca: {
      auto model = fit_gi2dca(*md.stats, CouplingMode::kIdentity, Hyperparams::uniform(m, 0.0, 1.0, 1.0),
                              config_.fit);
      model.method = "mcca";
      p.components.push_back({all, std::move(model)});
      break;
    }
    case Method::kCcaPairwise: {
      for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
          p.components.push_back({{a, b}, fit_cca(md.data.views[a], md.data.views[b], config_.fit)});
        }
      }
      break;
    }
  }
  return p;
}

TrainedLocalizer TrainingSession::fit(double beta) const {
  TrainedLocalizer out;
  out.config = config_;
  out.config.beta = beta;
  out.beta_selected = beta;
  out.views = views_;
  out.geometry = geometry_;
  out.layout = layout_;
  out.subcarriers = subcarriers_;

  const Eigen::Index n = static_cast<Eigen::Index>(labels_.size());
  Matrix z_amp(0, n);
  Matrix z_phase(0, n);
  for (const auto& md : modalities_) {
    auto pipeline = fit_modality(md, beta);
    Matrix z = pipeline_variates(pipeline, md.data.views);
    if (md.modality == Modality::kAmplitude) {
      z_amp = std::move(z);
      out.amplitude = std::move(pipeline);
    } else {
      z_phase = std::move(z);
      out.phase = std::move(pipeline);
    }
  }
  auto fused = fuse_mdfi(z_amp, z_phase, labels_);

  for (const auto& [cell, _] : geometry_.cells) out.cell_ids.push_back(cell);
  out.templates = Matrix::Zero(fused.data.rows(), static_cast<Eigen::Index>(out.cell_ids.size()));
  std::vector<int> counts(out.cell_ids.size(), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int k = labels_[j] - 1;
    out.templates.col(k) += fused.data.col(j);
    ++counts[k];
  }
  for (std::size_t k = 0; k < counts.size(); ++k) out.templates.col(k) /= counts[k];
  if (config_.templates == TemplateMode::kNearestColumn) {
    out.training_mdfi = std::move(fused.data);
    out.training_labels = labels_;
  }
  return out;
}

TrainedLocalizer train(const FeatureBank& bank, const Dataset& data, const SampleSet& training,
                       const TrainConfig& config) {
  return TrainingSession(bank, training, config, data.layout, data.subcarriers()).fit(config.beta);
}

TrainedLocalizer train(const Dataset& data, const SampleSet& training, const TrainConfig& config) {
  return train(FeatureBank::build(data, config.centering), data, training, config);
}

// ---------------------------------------------------------------------------
// Online phase

Matrix mdfi(const TrainedLocalizer& model, const std::vector<Matrix>& amplitude_raw,
            const std::vector<Matrix>& phase_raw) {
  Eigen::Index n = -1;
  Matrix z_amp;
  Matrix z_phase;
  if (model.amplitude) {
    z_amp = model.amplitude->transform(amplitude_raw);
    n = z_amp.cols();
  }
  if (model.phase) {
    z_phase = model.phase->transform(phase_raw);
    n = z_phase.cols();
  }
  if (!model.amplitude) z_amp.resize(0, n);
  if (!model.phase) z_phase.resize(0, n);
  return fuse_mdfi(z_amp, z_phase).data;
}

int classify_mdfi(const TrainedLocalizer& model, const Vector& z) {
  if (z.size() != model.feature_dim()) {
    throw InvalidInput("MDFI has " + std::to_string(z.size()) + " rows, model expects " +
                       std::to_string(model.feature_dim()));
  }
  if (model.config.templates == TemplateMode::kNearestColumn && model.training_mdfi.cols() > 0) {
    const Vector d = kernels::omp::squared_distances(model.training_mdfi, z);
    int best = 0;
    for (Eigen::Index j = 1; j < d.size(); ++j) {
      if (d(j) < d(best) || (d(j) == d(best) && model.training_labels[j] < model.training_labels[best])) {
        best = static_cast<int>(j);
      }
    }
    return model.training_labels[best];
  }
  const Vector d = kernels::omp::squared_distances(model.templates, z);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < d.size(); ++k) {
    if (d(k) < d(best)) best = k;  // cell_ids ascend, so ties keep the smaller id
  }
  return model.cell_ids[best];
}

int classify(const TrainedLocalizer& model, const std::vector<CsiTrace>& batch) {
  std::vector<Matrix> amp;
  std::vector<Matrix> phase;
  for (int v : model.views) {
    const auto it = std::find_if(batch.begin(), batch.end(), [v](const CsiTrace& t) { return t.ap_id == v + 1; });
    if (it == batch.end()) throw InvalidInput("test batch lacks a trace for view " + std::to_string(v + 1));
    if (it->subcarriers() != model.subcarriers || it->pairs() != model.layout.pair_count()) {
      throw InvalidInput("test trace for view " + std::to_string(v + 1) + " is " +
                         std::to_string(it->subcarriers()) + "x" + std::to_string(it->pairs()) +
                         ", model expects " + std::to_string(model.subcarriers) + "x" +
                         std::to_string(model.layout.pair_count()));
    }
    if (model.amplitude) amp.push_back(amplitude_image(*it).data);
    if (model.phase) phase.push_back(phase_difference_image(*it, model.layout, model.config.centering).data);
  }
  const Matrix z = mdfi(model, amp, phase);
  return classify_mdfi(model, z.rowwise().mean());
}

int classify_samples(const TrainedLocalizer& model, const FeatureBank& bank, const SampleSet& batch) {
  std::vector<Matrix> amp;
  std::vector<Matrix> phase;
  for (int v : model.views) {
    if (model.amplitude) amp.push_back(bank.gather(Modality::kAmplitude, v, batch));
    if (model.phase) phase.push_back(bank.gather(Modality::kPhaseDifference, v, batch));
  }
  const Matrix z = mdfi(model, amp, phase);
  return classify_mdfi(model, z.rowwise().mean());
}

// ---------------------------------------------------------------------------
// Evaluation

EvalReport summarize(const std::vector<int>& truth, const std::vector<int>& predicted,
                     const GridGeometry& geometry) {
  if (truth.empty()) throw InvalidInput("evaluation needs at least one estimate");
  if (truth.size() != predicted.size()) throw InvalidInput("truth and prediction counts differ");
  const int c = geometry.cell_count();
  EvalReport r;
  r.truth = truth;
  r.predicted = predicted;
  r.confusion = Eigen::MatrixXi::Zero(c, c);
  int hits = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (!geometry.contains(truth[k])) throw InvalidInput("unknown cell id " + std::to_string(truth[k]) + " in test labels");
    if (!geometry.contains(predicted[k])) throw InvalidInput("unknown predicted cell id " + std::to_string(predicted[k]));
    r.errors.push_back(geometry.distance(truth[k], predicted[k]));
    r.confusion(truth[k] - 1, predicted[k] - 1) += 1;
    hits += truth[k] == predicted[k];
  }
  const auto n = static_cast<double>(r.errors.size());
  double sum = 0.0;
  for (double e : r.errors) sum += e;
  r.mean_distance_error = sum / n;
  double sq = 0.0;
  for (double e : r.errors) sq += (e - r.mean_distance_error) * (e - r.mean_distance_error);
  r.std_distance_error = std::sqrt(sq / n);
  r.accuracy = hits / n;

  std::vector<double> sorted = r.errors;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
    r.cdf.emplace_back(sorted[k], static_cast<double>(k + 1) / n);
  }
  return r;
}

std::vector<SampleSet> make_batches(const SampleSet& samples, int batch_packets) {
  if (batch_packets < 1) throw InvalidInput("batch size must be >= 1");
  std::map<int, SampleSet> per_cell;
  for (const auto& s : samples) per_cell[s.cell].push_back(s);
  std::vector<SampleSet> out;
  for (const auto& [cell, list] : per_cell) {
    const std::size_t b = static_cast<std::size_t>(batch_packets);
    for (std::size_t at = 0; at < list.size(); at += b) {
      const std::size_t end = std::min(at + b, list.size());
      if (end - at < b && at > 0) break;
      out.emplace_back(list.begin() + static_cast<std::ptrdiff_t>(at), list.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return out;
}

namespace {

std::vector<CsiTrace> slice_batch(const Dataset& data, const SampleSet& batch) {
  const int cell = batch.front().cell;
  const auto& per_view = data.traces.at(cell);
  std::vector<CsiTrace> out;
  for (const auto& full : per_view) {
    CsiTrace t;
    t.ap_id = full.ap_id;
    t.carrier_band = full.carrier_band;
    for (const auto& s : batch) t.packets.push_back(full.packets.at(s.packet));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

EvalReport evaluate(const TrainedLocalizer& model, const Dataset& data, const SampleSet& test,
                    const EvalOptions& options) {
  if (test.empty()) throw InvalidInput("evaluation needs a non-empty test set");
  for (const auto& s : test) {
    if (!model.geometry.contains(s.cell)) throw InvalidInput("unknown cell id " + std::to_string(s.cell) + " in test labels");
  }
  const auto batches = make_batches(test, options.batch_packets);
  std::vector<std::vector<CsiTrace>> inputs;
  std::vector<int> truth;
  for (const auto& b : batches) {
    inputs.push_back(slice_batch(data, b));
    truth.push_back(b.front().cell);
  }

  std::vector<int> predicted;
  std::vector<double> per_estimate;
  const int reps = std::max(1, options.timing_repetitions);
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<int> pred;
    pred.reserve(inputs.size());
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& in : inputs) pred.push_back(classify(model, in));
    const auto t1 = std::chrono::steady_clock::now();
    per_estimate.push_back(std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(inputs.size()));
    if (rep == 0) predicted = std::move(pred);
  }
  std::sort(per_estimate.begin(), per_estimate.end());

  auto report = summarize(truth, predicted, model.geometry);
  report.timing_seconds_per_estimate = per_estimate[per_estimate.size() / 2];
  report.batch_packets = options.batch_packets;
  report.views = static_cast<int>(model.views.size());
  return report;
}

std::vector<int> stratified_folds(const SampleSet& samples, int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidInput("need at least 2 folds");
  std::map<int, std::vector<std::size_t>> per_cell;
  for (std::size_t k = 0; k < samples.size(); ++k) per_cell[samples[k].cell].push_back(k);
  std::vector<int> fold(samples.size(), 0);
  for (auto& [cell, idx] : per_cell) {
    if (static_cast<int>(idx.size()) < folds) {
      throw InvalidInput("cell " + std::to_string(cell) + " has " + std::to_string(idx.size()) +
                         " samples, fewer than " + std::to_string(folds) + " folds");
    }
    // Order by sample identity first so the result ignores input order.
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return samples[a] < samples[b]; });
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(cell));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t r = 0; r < idx.size(); ++r) fold[idx[r]] = static_cast<int>(r % folds);
  }
  return fold;
}

BetaSelection select_beta(const FeatureBank& bank, const Dataset& data, const SampleSet& samples,
                          const TrainConfig& config, std::vector<double> grid, int folds, std::uint64_t seed,
                          const EvalOptions& options) {
  if (grid.empty()) throw InvalidInput("beta grid is empty");
  for (double b : grid) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidInput("beta candidates must be finite and >= 0");
  }
  const auto fold_of = stratified_folds(samples, folds, seed);

  Matrix errors(folds, static_cast<Eigen::Index>(grid.size()));
  std::vector<std::exception_ptr> failures(folds);
#pragma omp parallel for schedule(dynamic, 1) num_threads(kernels::thread_count())
  for (int f = 0; f < folds; ++f) {
    try {
      SampleSet fit_set;
      SampleSet held_out;
      for (std::size_t k = 0; k < samples.size(); ++k) (fold_of[k] == f ? held_out : fit_set).push_back(samples[k]);
      const TrainingSession session(bank, fit_set, config, data.layout, data.subcarriers());
      const auto batches = make_batches(held_out, options.batch_packets);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto model = session.fit(grid[g]);
        double sum = 0.0;
        for (const auto& b : batches) sum += model.geometry.distance(b.front().cell, classify_samples(model, bank, b));
        errors(f, static_cast<Eigen::Index>(g)) = sum / static_cast<double>(batches.size());
      }
    } catch (...) {
      failures[f] = std::current_exception();
    }
  }
  for (const auto& e : failures) {
    if (e) std::rethrow_exception(e);
  }

  BetaSelection out;
  const Vector mean = errors.colwise().mean();
  std::vector<std::size_t> order(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    order[g] = g;
    out.scores.emplace_back(grid[g], mean(static_cast<Eigen::Index>(g)));
  }
  const auto best = *std::min_element(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ea = mean(static_cast<Eigen::Index>(a));
    const double eb = mean(static_cast<Eigen::Index>(b));
    return ea < eb || (ea == eb && grid[a] < grid[b]);
  });
  out.beta = grid[best];
  return out;
}

std::vector<EvalReport> sweep_views(const Dataset& data, const SampleSet& training, const SampleSet& test,
                                    const TrainConfig& config, const std::vector<int>& view_counts,
                                    const EvalOptions& options) {
  const auto bank = FeatureBank::build(data, config.centering);
  std::vector<EvalReport> out;
  for (int k : view_counts) {
    if (k < 1 || k > data.views) {
      throw InvalidInput("view count " + std::to_string(k) + " exceeds the " + std::to_string(data.views) +
                         " available views");
    }
    TrainConfig cfg = config;
    cfg.views.clear();
    for (int v = 0; v < k; ++v) cfg.views.push_back(v);
    out.push_back(evaluate(train(bank, data, training, cfg), data, test, options));
  }
  return out;
}

std::vector<EvalReport> sweep_packets(const TrainedLocalizer& model, const Dataset& data, const SampleSet& test,
                                      const std::vector<int>& packet_counts, const EvalOptions& options) {
  std::map<int, int> available;
  for (const auto& s : test) ++available[s.cell];
  std::vector<EvalReport> out;
  for (int count : packet_counts) {
    for (const auto& [cell, n] : available) {
      if (count > n) {
        throw InvalidInput("packet count " + std::to_string(count) + " exceeds the " + std::to_string(n) +
                           " test packets of cell " + std::to_string(cell));
      }
    }
    EvalOptions opt = options;
    opt.batch_packets = count;
    out.push_back(evaluate(model, data, test, opt));
  }
  return out;
}

}  // namespace mudloc
