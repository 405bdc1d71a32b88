#pragma once

// On-disk formats.
//
//   dataset/
//     manifest.json          geometry, layout, counts, scenario, split
//     cell{c}_ap{i}.csibin   one trace per (cell, AP)
//
// .csibin layout, all integers and floats little-endian:
//
//   "CSIB" | u32 header_len | header_len bytes of JSON | payload | u32 crc32
//
// The payload holds packets x S x L complex values as (re, im) float64 pairs,
// packet-major, then subcarrier, then antenna pair. The CRC covers every byte
// before it.

#include "mudloc/dataset.hpp"
#include "mudloc/localizer.hpp"
#include "mudloc/synth.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>

namespace mudloc {

inline constexpr int kSchemaVersion = 1;

void write_trace(const std::filesystem::path& path, const CsiTrace& trace);
CsiTrace read_trace(const std::filesystem::path& path);

struct DatasetManifest {
  int schema_version = kSchemaVersion;
  GridGeometry geometry;
  AntennaLayout layout;
  int views = 0;
  int subcarriers = 0;
  std::map<int, int> packets_per_cell;
  std::optional<ChannelScenario> scenario;

  /// Empty until split_dataset runs.
  std::map<int, std::vector<Split>> assignment;
  std::array<double, 3> split_ratios{0.0, 0.0, 0.0};
  std::uint64_t split_seed = 0;

  int cell_count() const { return geometry.cell_count(); }
  int pairs() const { return layout.pair_count(); }
  bool is_split() const { return !assignment.empty(); }
  /// Samples assigned to any of the given splits, ordered by (cell, packet).
  SampleSet samples(std::initializer_list<Split> splits) const;
  void validate() const;
};

DatasetManifest manifest_for(const Dataset& data, std::optional<ChannelScenario> scenario = std::nullopt);

/// Stratified per cell with largest-remainder rounding; deterministic in seed.
DatasetManifest split_dataset(const DatasetManifest& manifest, std::array<double, 3> ratios,
                              std::uint64_t seed);

void write_dataset(const std::filesystem::path& dir, const Dataset& data, const DatasetManifest& manifest);
struct LoadedDataset {
  Dataset data;
  DatasetManifest manifest;
};
LoadedDataset read_dataset(const std::filesystem::path& dir);

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const ChannelScenario& s);
ChannelScenario scenario_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const TrainedLocalizer& model);
TrainedLocalizer model_from_json(const nlohmann::json& j);
void write_model(const std::filesystem::path& path, const TrainedLocalizer& model);
TrainedLocalizer read_model(const std::filesystem::path& path);

/// `extra` is merged into the top-level object.
nlohmann::json report_to_json(const EvalReport& report, const nlohmann::json& extra = nlohmann::json::object());
/// report.json plus cdf.csv (columns error_m, fraction) under dir.
void write_report(const std::filesystem::path& dir, const EvalReport& report,
                  const nlohmann::json& extra = nlohmann::json::object());

/// One CSV line per matrix row, values at round-trip precision.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Serialized text of a JSON document as written to disk.
std::string dump_json(const nlohmann::json& j);

}  // namespace mudloc
