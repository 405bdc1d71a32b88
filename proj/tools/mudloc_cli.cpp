// mudloc: synthesize datasets, train localizers, evaluate them, and export
// feature images.
//
//   mudloc synth --cells 20 --aps 3 --packets 300 --seed 42 --out data
//   mudloc train --data data --beta-grid 0,1,10,100,1000 --out run
//   mudloc evaluate --data data --model run/model.json --out run
//   mudloc export-features --data data --cell 3 --ap 1 --out feats

#include "mudloc/dataset_io.hpp"
#include "mudloc/kernels.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

namespace fs = std::filesystem;
using namespace mudloc;

namespace {

struct SynthArgs {
  int cells = 20;
  int aps = 3;
  int packets = 300;
  std::uint64_t seed = 42;
  double pitch = 0.5;
  int subcarriers = 30;
  int n_tx = 3;
  int n_rx = 3;
  int paths = 6;
  double snr_db = 20.0;
  bool no_noise = false;
  bool no_errors = false;
  std::vector<double> split{0.6, 0.2, 0.2};
  std::string out;
};

struct ModelArgs {
  std::string data;
  std::string out;
  std::string method = "gi2dca";
  std::string modality = "both";
  std::string coupling = "class-blocks";
  std::string templates = "centroid";
  std::string centering = "per-packet";
  double alpha = 1.0;
  double gamma = 1.0;
  std::optional<double> beta;
  std::vector<double> beta_grid;
  int rank = 0;
  int views = 0;
  int folds = 5;
  std::uint64_t seed = 42;
  int threads = 0;
  // evaluate only
  std::string model;
  int batch_packets = 10;
  int timing_repetitions = 5;
};

struct ExportArgs {
  std::string data;
  std::string out;
  std::vector<int> cells;
  std::vector<int> aps;
  std::string modality = "both";
  std::string centering = "per-packet";
};

PhaseCentering parse_centering(const std::string& s) {
  if (s == "per-packet") return PhaseCentering::kPerPacket;
  if (s == "per-row") return PhaseCentering::kPerRow;
  if (s == "none") return PhaseCentering::kNone;
  throw InvalidInput("unknown phase centering '" + s + "'");
}

void apply_threads(int threads) {
  if (threads > 0) kernels::set_thread_count(threads);
}

TrainConfig make_config(const ModelArgs& a, int available_views) {
  TrainConfig c;
  c.method = method_from_string(a.method);
  c.modality = modality_from_string(a.modality);
  c.coupling = coupling_from_string(a.coupling);
  c.templates = template_mode_from_string(a.templates);
  c.centering = parse_centering(a.centering);
  c.alpha = a.alpha;
  c.gamma = a.gamma;
  c.fit.rank.fixed = a.rank;
  if (a.views < 0 || a.views > available_views) {
    throw InvalidInput("--views " + std::to_string(a.views) + " outside 1.." + std::to_string(available_views));
  }
  for (int v = 0; v < a.views; ++v) c.views.push_back(v);
  return c;
}

struct Fitted {
  TrainedLocalizer model;
  std::vector<std::pair<double, double>> cv_scores;
};

Fitted fit_model(const ModelArgs& a, const LoadedDataset& ds) {
  TrainConfig config = make_config(a, ds.data.views);
  const SampleSet training = ds.manifest.samples({Split::kTrain, Split::kValidation});
  const FeatureBank bank = FeatureBank::build(ds.data, config.centering);
  Fitted out;
  if (a.beta) {
    config.beta = *a.beta;
  } else {
    std::vector<double> grid = a.beta_grid.empty() ? std::vector<double>{0, 1, 10, 100, 1000} : a.beta_grid;
    EvalOptions opts;
    opts.batch_packets = a.batch_packets;
    const auto sel = select_beta(bank, ds.data, training, config, grid, a.folds, a.seed, opts);
    config.beta = sel.beta;
    out.cv_scores = sel.scores;
  }
  out.model = train(bank, ds.data, training, config);
  return out;
}

LoadedDataset load_split(const std::string& dir) {
  auto ds = read_dataset(dir);
  if (!ds.manifest.is_split()) throw InvalidInput(dir + ": dataset has no train/val/test split");
  return ds;
}

int cmd_synth(const SynthArgs& a) {
  if (a.split.size() != 3) throw InvalidInput("--split needs three ratios");
  ChannelScenario s = ChannelScenario::reference(a.seed, a.cells, a.aps, a.pitch);
  s.subcarriers = a.subcarriers;
  s.layout = AntennaLayout::tx_major(a.n_tx, a.n_rx);
  s.n_paths = a.paths;
  s.noise_snr_db = a.no_noise ? std::numeric_limits<double>::infinity() : a.snr_db;
  s.errors.enabled = !a.no_errors;

  const Dataset data = make_benchmark(s, a.packets);
  const auto manifest = split_dataset(manifest_for(data, s), {a.split[0], a.split[1], a.split[2]}, a.seed);
  write_dataset(a.out, data, manifest);

  std::printf("dataset %s: cells=%d views=%d subcarriers=%d pairs=%d packets/cell=%d seed=%llu split=%g:%g:%g\n",
              a.out.c_str(), manifest.cell_count(), manifest.views, manifest.subcarriers, manifest.pairs(), a.packets,
              static_cast<unsigned long long>(a.seed), a.split[0], a.split[1], a.split[2]);
  return 0;
}

int cmd_train(const ModelArgs& a) {
  apply_threads(a.threads);
  const auto ds = load_split(a.data);
  const auto fitted = fit_model(a, ds);
  fs::create_directories(a.out);
  write_model(fs::path(a.out) / "model.json", fitted.model);
  if (!fitted.cv_scores.empty()) {
    nlohmann::json cv = nlohmann::json::array();
    for (const auto& [b, e] : fitted.cv_scores) cv.push_back({{"beta", b}, {"mean_distance_error", e}});
    std::ofstream(fs::path(a.out) / "cv.json") << dump_json({{"folds", a.folds}, {"seed", a.seed}, {"scores", cv}});
  }
  std::printf("model %s: method=%s modality=%s views=%zu beta=%g dim=%d\n",
              (fs::path(a.out) / "model.json").c_str(), to_string(fitted.model.config.method).c_str(),
              to_string(fitted.model.config.modality).c_str(), fitted.model.views.size(), fitted.model.beta_selected,
              fitted.model.feature_dim());
  return 0;
}

int cmd_evaluate(const ModelArgs& a) {
  apply_threads(a.threads);
  const auto ds = load_split(a.data);
  TrainedLocalizer model;
  if (!a.model.empty()) {
    model = read_model(a.model);
    if (model.layout != ds.data.layout || model.subcarriers != ds.data.subcarriers()) {
      throw InvalidInput("model was trained on a different antenna layout or subcarrier count");
    }
  } else {
    model = fit_model(a, ds).model;
  }
  EvalOptions opts;
  opts.batch_packets = a.batch_packets;
  opts.timing_repetitions = a.timing_repetitions;
  const auto report = evaluate(model, ds.data, ds.manifest.samples({Split::kTest}), opts);
  const nlohmann::json extra = {{"method", to_string(model.config.method)},
                                {"modality", to_string(model.config.modality)},
                                {"coupling", to_string(model.config.coupling)},
                                {"beta", model.beta_selected},
                                {"cells", ds.manifest.cell_count()},
                                {"seed", a.seed}};
  write_report(a.out, report, extra);
  std::printf("report %s: mean=%.4f m std=%.4f m accuracy=%.4f estimates=%zu\n",
              (fs::path(a.out) / "report.json").c_str(), report.mean_distance_error, report.std_distance_error,
              report.accuracy, report.errors.size());
  return 0;
}

int cmd_export(const ExportArgs& a) {
  const auto ds = read_dataset(a.data);
  const auto sel = modality_from_string(a.modality);
  const auto centering = parse_centering(a.centering);
  std::vector<int> cells = a.cells;
  if (cells.empty()) {
    for (const auto& [c, _] : ds.data.geometry.cells) cells.push_back(c);
  }
  std::vector<int> aps = a.aps;
  if (aps.empty()) {
    for (int v = 1; v <= ds.data.views; ++v) aps.push_back(v);
  }
  fs::create_directories(a.out);
  int written = 0;
  for (int c : cells) {
    if (!ds.data.traces.count(c)) throw InvalidInput("invalid cell id " + std::to_string(c));
    for (int ap : aps) {
      if (ap < 1 || ap > ds.data.views) throw InvalidInput("invalid AP id " + std::to_string(ap));
      const auto& trace = ds.data.traces.at(c)[ap - 1];
      const std::string stem = "cell" + std::to_string(c) + "_ap" + std::to_string(ap);
      if (sel != ModalitySelection::kPhase) {
        write_matrix_csv(fs::path(a.out) / (stem + "_amplitude.csv"), amplitude_image(trace).data);
        ++written;
      }
      if (sel != ModalitySelection::kAmplitude) {
        write_matrix_csv(fs::path(a.out) / (stem + "_phase.csv"),
                         phase_difference_image(trace, ds.data.layout, centering).data);
        ++written;
      }
    }
  }
  std::printf("exported %d feature images to %s\n", written, a.out.c_str());
  return 0;
}

void add_model_flags(CLI::App* cmd, ModelArgs& a) {
  cmd->add_option("--data", a.data, "Dataset directory")->required();
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--method", a.method, "gi2dca | gma | mcca | cca-pairwise");
  cmd->add_option("--modality", a.modality, "amp | phase | both");
  cmd->add_option("--coupling", a.coupling, "class-blocks | identity");
  cmd->add_option("--templates", a.templates, "centroid | nearest-column");
  cmd->add_option("--phase-centering", a.centering, "per-packet | per-row | none");
  cmd->add_option("--alpha", a.alpha, "Weight of within-view between-class scatter");
  cmd->add_option("--gamma", a.gamma, "Weight of each view's normalization constraint");
  auto* beta = cmd->add_option("--beta", a.beta, "Fixed cross-view coupling weight (skips cross-validation)");
  auto* grid = cmd->add_option("--beta-grid", a.beta_grid, "Candidates for cross-validated beta")->delimiter(',');
  beta->excludes(grid);
  grid->excludes(beta);
  cmd->add_option("--rank", a.rank, "Fixed subspace rank; 0 keeps every nonzero direction");
  cmd->add_option("--views", a.views, "Use the first k views; 0 means all");
  cmd->add_option("--folds", a.folds, "Cross-validation folds");
  cmd->add_option("--seed", a.seed, "Seed for cross-validation folds");
  cmd->add_option("--threads", a.threads, "Worker threads (default MUDLOC_THREADS, then all cores)");
  cmd->add_option("--batch-packets", a.batch_packets, "Test packets per location estimate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CSI fingerprint localization with multi-view discriminant subspaces"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic multi-view CSI dataset");
  s->add_option("--cells", synth.cells, "Grid cells");
  s->add_option("--aps", synth.aps, "Access points (views)");
  s->add_option("--packets", synth.packets, "Packets per cell");
  s->add_option("--seed", synth.seed, "Master seed for channels and split");
  s->add_option("--pitch", synth.pitch, "Cell pitch in meters");
  s->add_option("--subcarriers", synth.subcarriers, "Subcarriers per packet");
  s->add_option("--tx", synth.n_tx, "Transmit antennas");
  s->add_option("--rx", synth.n_rx, "Receive antennas");
  s->add_option("--paths", synth.paths, "Propagation paths per link");
  s->add_option("--snr", synth.snr_db, "SNR in dB");
  s->add_flag("--no-noise", synth.no_noise, "Disable AWGN");
  s->add_flag("--no-phase-errors", synth.no_errors, "Disable injected phase errors");
  s->add_option("--split", synth.split, "train,val,test ratios")->delimiter(',');
  s->add_option("--out", synth.out, "Output dataset directory")->required();

  ModelArgs tr;
  auto* t = app.add_subcommand("train", "Fit a localizer on the train+val split");
  add_model_flags(t, tr);

  ModelArgs ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate on the test split; trains inline without --model");
  add_model_flags(e, ev);
  e->add_option("--model", ev.model, "Trained model file");
  e->add_option("--timing-reps", ev.timing_repetitions, "Repetitions for the timing median");

  ExportArgs ex;
  auto* x = app.add_subcommand("export-features", "Write amplitude / phase-difference images as CSV");
  x->add_option("--data", ex.data, "Dataset directory")->required();
  x->add_option("--out", ex.out, "Output directory")->required();
  x->add_option("--cell", ex.cells, "Cells to export (default all)")->delimiter(',');
  x->add_option("--ap", ex.aps, "APs to export (default all)")->delimiter(',');
  x->add_option("--modality", ex.modality, "amp | phase | both");
  x->add_option("--phase-centering", ex.centering, "per-packet | per-row | none");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::cerr << "mudloc: error: " << err.what() << "\n";
    return err.get_exit_code() != 0 ? err.get_exit_code() : 2;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_evaluate(ev);
    if (*x) return cmd_export(ex);
  } catch (const std::exception& err) {
    std::string msg = err.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "mudloc: error: " << msg << "\n";
    return 1;
  }
  return 1;
}
