#include "mudloc/dataset_io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace mudloc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'C', 'S', 'I', 'B'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return v;
}

double get_f64(const std::string& in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

std::uint32_t crc_of(const std::string& bytes, std::size_t len) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(len)));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

void check_version(const json& j, const std::string& what) {
  const int v = j.at("schema_version").get<int>();
  if (v > kSchemaVersion) {
    throw FormatError(what + ": unsupported schema_version " + std::to_string(v) + " (this build reads <= " +
                      std::to_string(kSchemaVersion) + ")");
  }
  if (v < 1) throw FormatError(what + ": invalid schema_version " + std::to_string(v));
}

json matrix_to_json(const Matrix& m) {
  std::vector<double> flat(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw FormatError("matrix payload size mismatch");
  return Eigen::Map<const Matrix>(flat.data(), rows, cols);
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto flat = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

json point_to_json(const Point2& p) { return {p.x(), p.y()}; }
Point2 point_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json geometry_to_json(const GridGeometry& g) {
  json cells = json::array();
  for (const auto& [id, c] : g.cells) cells.push_back({{"id", id}, {"x", c.x()}, {"y", c.y()}});
  return {{"pitch", g.pitch}, {"cells", cells}};
}

GridGeometry geometry_from_json(const json& j) {
  GridGeometry g;
  g.pitch = j.at("pitch").get<double>();
  for (const auto& c : j.at("cells")) g.cells[c.at("id").get<int>()] = Point2(c.at("x").get<double>(), c.at("y").get<double>());
  return g;
}

json layout_to_json(const AntennaLayout& l) {
  json pairs = json::array();
  for (const auto& [t, r] : l.pair_order) pairs.push_back({t, r});
  return {{"n_tx", l.n_tx}, {"n_rx", l.n_rx}, {"pair_order", pairs}};
}

AntennaLayout layout_from_json(const json& j) {
  AntennaLayout l;
  l.n_tx = j.at("n_tx").get<int>();
  l.n_rx = j.at("n_rx").get<int>();
  for (const auto& p : j.at("pair_order")) l.pair_order.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  l.validate();
  return l;
}

// JSON has no infinity; the SNR "off" value travels as a string.
json snr_to_json(double v) { return std::isinf(v) ? json("inf") : json(v); }
double snr_from_json(const json& j) {
  return j.is_string() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json hyper_to_json(const Hyperparams& h) {
  return {{"alpha", vector_to_json(h.alpha)}, {"beta", matrix_to_json(h.beta)}, {"gamma", vector_to_json(h.gamma)}};
}

Hyperparams hyper_from_json(const json& j) {
  return {vector_from_json(j.at("alpha")), matrix_from_json(j.at("beta")), vector_from_json(j.at("gamma"))};
}

json subspace_to_json(const SubspaceModel& m) {
  json w = json::array();
  for (const auto& p : m.projections) w.push_back(matrix_to_json(p));
  return {{"method", m.method},
          {"projections", w},
          {"eigenvalues", vector_to_json(m.eigenvalues)},
          {"all_eigenvalues", vector_to_json(m.all_eigenvalues)},
          {"hyper", hyper_to_json(m.hyper)},
          {"coupling", to_string(m.coupling)},
          {"ridge_used", m.ridge_used}};
}

SubspaceModel subspace_from_json(const json& j) {
  SubspaceModel m;
  m.method = j.at("method").get<std::string>();
  for (const auto& p : j.at("projections")) m.projections.push_back(matrix_from_json(p));
  m.eigenvalues = vector_from_json(j.at("eigenvalues"));
  m.all_eigenvalues = vector_from_json(j.at("all_eigenvalues"));
  m.hyper = hyper_from_json(j.at("hyper"));
  m.coupling = coupling_from_string(j.at("coupling").get<std::string>());
  m.ridge_used = j.at("ridge_used").get<double>();
  return m;
}

json pipeline_to_json(const ModalityPipeline& p) {
  json norms = json::array();
  for (const auto& n : p.norms) {
    norms.push_back({{"mean", vector_to_json(n.mean)}, {"scale", vector_to_json(n.scale)}, {"constant_rows", n.constant_rows}});
  }
  json comps = json::array();
  for (const auto& c : p.components) comps.push_back({{"members", c.members}, {"model", subspace_to_json(c.model)}});
  return {{"modality", to_string(p.modality)}, {"norms", norms}, {"components", comps}};
}

ModalityPipeline pipeline_from_json(const json& j) {
  ModalityPipeline p;
  p.modality = j.at("modality").get<std::string>() == "amplitude" ? Modality::kAmplitude : Modality::kPhaseDifference;
  for (const auto& n : j.at("norms")) {
    p.norms.push_back({vector_from_json(n.at("mean")), vector_from_json(n.at("scale")),
                       n.at("constant_rows").get<std::vector<int>>()});
  }
  for (const auto& c : j.at("components")) {
    p.components.push_back({c.at("members").get<std::vector<int>>(), subspace_from_json(c.at("model"))});
  }
  return p;
}

std::string centering_name(PhaseCentering c) {
  switch (c) {
    case PhaseCentering::kPerPacket: return "per-packet";
    case PhaseCentering::kPerRow: return "per-row";
    case PhaseCentering::kNone: return "none";
  }
  return "per-packet";
}

PhaseCentering centering_from_name(const std::string& s) {
  if (s == "per-packet") return PhaseCentering::kPerPacket;
  if (s == "per-row") return PhaseCentering::kPerRow;
  if (s == "none") return PhaseCentering::kNone;
  throw FormatError("unknown phase centering '" + s + "'");
}

json config_to_json(const TrainConfig& c) {
  return {{"method", to_string(c.method)},
          {"modality", to_string(c.modality)},
          {"coupling", to_string(c.coupling)},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"rank_fixed", c.fit.rank.fixed},
          {"rank_threshold", c.fit.rank.relative_threshold},
          {"ridge_relative", c.fit.ridge.relative},
          {"ridge_escalations", c.fit.ridge.max_escalations},
          {"phase_centering", centering_name(c.centering)},
          {"templates", to_string(c.templates)},
          {"views", c.views}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.method = method_from_string(j.at("method").get<std::string>());
  c.modality = modality_from_string(j.at("modality").get<std::string>());
  c.coupling = coupling_from_string(j.at("coupling").get<std::string>());
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.fit.rank.fixed = j.at("rank_fixed").get<int>();
  c.fit.rank.relative_threshold = j.at("rank_threshold").get<double>();
  c.fit.ridge.relative = j.at("ridge_relative").get<double>();
  c.fit.ridge.max_escalations = j.at("ridge_escalations").get<int>();
  c.centering = centering_from_name(j.at("phase_centering").get<std::string>());
  c.templates = template_mode_from_string(j.at("templates").get<std::string>());
  c.views = j.at("views").get<std::vector<int>>();
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Traces

void write_trace(const fs::path& path, const CsiTrace& trace) {
  trace.validate();
  const json header = {{"schema_version", kSchemaVersion},
                       {"ap_id", trace.ap_id},
                       {"cell_id", trace.cell_id ? json(*trace.cell_id) : json(nullptr)},
                       {"carrier_band", trace.carrier_band},
                       {"subcarriers", trace.subcarriers()},
                       {"pairs", trace.pairs()},
                       {"packets", trace.packet_count()}};
  const std::string text = header.dump();
  std::string bytes(kMagic, 4);
  put_u32(bytes, static_cast<std::uint32_t>(text.size()));
  bytes += text;
  bytes.reserve(bytes.size() + trace.packets.size() * trace.packets.front().size() * 16 + 4);
  for (const auto& p : trace.packets) {
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
      for (Eigen::Index l = 0; l < p.cols(); ++l) {
        put_f64(bytes, p(s, l).real());
        put_f64(bytes, p(s, l).imag());
      }
    }
  }
  put_u32(bytes, crc_of(bytes, bytes.size()));
  write_file(path, bytes);
}

CsiTrace read_trace(const fs::path& path) {
  const std::string bytes = read_file(path);
  const std::string where = path.filename().string();
  if (bytes.size() < 12 || bytes.compare(0, 4, kMagic, 4) != 0) throw FormatError(where + ": not a CSI trace file");
  const std::uint32_t stored = get_u32(bytes, bytes.size() - 4);
  if (crc_of(bytes, bytes.size() - 4) != stored) throw FormatError(where + ": checksum mismatch (file corrupt or truncated)");
  const std::uint32_t header_len = get_u32(bytes, 4);
  if (8 + static_cast<std::size_t>(header_len) + 4 > bytes.size()) throw FormatError(where + ": truncated header");

  json header;
  try {
    header = json::parse(bytes.substr(8, header_len));
  } catch (const json::exception& e) {
    throw FormatError(where + ": malformed header: " + e.what());
  }
  check_version(header, where);
  const int s_count = header.at("subcarriers").get<int>();
  const int l_count = header.at("pairs").get<int>();
  const int n = header.at("packets").get<int>();
  const std::size_t payload = static_cast<std::size_t>(n) * s_count * l_count * 16;
  if (8 + header_len + payload + 4 != bytes.size()) throw FormatError(where + ": truncated payload");

  CsiTrace t;
  t.ap_id = header.at("ap_id").get<int>();
  if (!header.at("cell_id").is_null()) t.cell_id = header.at("cell_id").get<int>();
  t.carrier_band = header.at("carrier_band").get<std::string>();
  std::size_t at = 8 + header_len;
  for (int j = 0; j < n; ++j) {
    ComplexMatrix p(s_count, l_count);
    for (int s = 0; s < s_count; ++s) {
      for (int l = 0; l < l_count; ++l) {
        p(s, l) = {get_f64(bytes, at), get_f64(bytes, at + 8)};
        at += 16;
      }
    }
    t.packets.push_back(std::move(p));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Manifest and splits

SampleSet DatasetManifest::samples(std::initializer_list<Split> splits) const {
  if (!is_split()) throw InvalidInput("dataset has not been split");
  SampleSet out;
  for (const auto& [cell, tags] : assignment) {
    for (std::size_t j = 0; j < tags.size(); ++j) {
      if (std::find(splits.begin(), splits.end(), tags[j]) != splits.end()) out.push_back({cell, static_cast<int>(j)});
    }
  }
  return out;
}

void DatasetManifest::validate() const {
  geometry.validate();
  layout.validate();
  for (const auto& [cell, _] : geometry.cells) {
    if (!packets_per_cell.count(cell)) throw FormatError("manifest lacks packet count for cell " + std::to_string(cell));
  }
  if (is_split()) {
    const double sum = split_ratios[0] + split_ratios[1] + split_ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw FormatError("split ratios do not sum to 1");
    for (const auto& [cell, n] : packets_per_cell) {
      const auto it = assignment.find(cell);
      if (it == assignment.end() || static_cast<int>(it->second.size()) != n) {
        throw FormatError("split assignment does not cover every sample of cell " + std::to_string(cell));
      }
    }
  }
}

DatasetManifest manifest_for(const Dataset& data, std::optional<ChannelScenario> scenario) {
  data.validate();
  DatasetManifest m;
  m.geometry = data.geometry;
  m.layout = data.layout;
  m.views = data.views;
  m.subcarriers = data.subcarriers();
  for (const auto& [cell, _] : data.traces) m.packets_per_cell[cell] = data.packets(cell);
  m.scenario = std::move(scenario);
  return m;
}

DatasetManifest split_dataset(const DatasetManifest& manifest, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw InvalidInput("split ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw InvalidInput("split ratios must sum to 1");

  DatasetManifest out = manifest;
  out.split_ratios = ratios;
  out.split_seed = seed;
  out.assignment.clear();
  for (const auto& [cell, n] : manifest.packets_per_cell) {
    if (n < 3) {
      throw InvalidInput("cell " + std::to_string(cell) + " has " + std::to_string(n) + " samples, fewer than 3 splits");
    }
    // Largest remainder; equal remainders favour the earlier split.
    std::array<int, 3> counts{};
    std::array<double, 3> rem{};
    int assigned = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = ratios[k] * n;
      counts[k] = static_cast<int>(std::floor(exact));
      rem[k] = exact - counts[k];
      assigned += counts[k];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (int k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];

    std::vector<int> perm(n);
    for (int j = 0; j < n; ++j) perm[j] = j;
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(cell + 1)));
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Split> tags(n);
    int at = 0;
    const Split kinds[3] = {Split::kTrain, Split::kValidation, Split::kTest};
    for (int k = 0; k < 3; ++k) {
      for (int c = 0; c < counts[k]; ++c) tags[perm[at++]] = kinds[k];
    }
    out.assignment[cell] = std::move(tags);
  }
  return out;
}

json scenario_to_json(const ChannelScenario& s) {
  json aps = json::array();
  for (const auto& p : s.ap_positions) aps.push_back(point_to_json(p));
  json alias = json::object();
  for (const auto& [from, to] : s.cell_alias) alias[std::to_string(from)] = to;
  const auto& e = s.errors;
  return {{"seed", s.seed},
          {"grid", geometry_to_json(s.grid)},
          {"ap_positions", aps},
          {"detector_position", point_to_json(s.detector_position)},
          {"layout", layout_to_json(s.layout)},
          {"subcarriers", s.subcarriers},
          {"n_paths", s.n_paths},
          {"noise_snr_db", snr_to_json(s.noise_snr_db)},
          {"subcarrier_spacing_hz", s.subcarrier_spacing_hz},
          {"center_freq_hz", s.center_freq_hz},
          {"cell_perturbation", s.cell_perturbation},
          {"packet_jitter", s.packet_jitter},
          {"cell_alias", alias},
          {"errors",
           {{"enabled", e.enabled},
            {"pbd_delay_min", e.pbd_delay_min},
            {"pbd_delay_max", e.pbd_delay_max},
            {"sfo_ratio", e.sfo_ratio},
            {"cfo_hz", e.cfo_hz},
            {"fft_size", e.fft_size},
            {"symbol_time_s", e.symbol_time_s},
            {"useful_symbol_time_s", e.useful_symbol_time_s},
            {"packet_offset_min", e.packet_offset_min},
            {"packet_offset_max", e.packet_offset_max}}}};
}

ChannelScenario scenario_from_json(const json& j) {
  ChannelScenario s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.grid = geometry_from_json(j.at("grid"));
  s.ap_positions.clear();
  for (const auto& p : j.at("ap_positions")) s.ap_positions.push_back(point_from_json(p));
  s.detector_position = point_from_json(j.at("detector_position"));
  s.layout = layout_from_json(j.at("layout"));
  s.subcarriers = j.at("subcarriers").get<int>();
  s.n_paths = j.at("n_paths").get<int>();
  s.noise_snr_db = snr_from_json(j.at("noise_snr_db"));
  s.subcarrier_spacing_hz = j.at("subcarrier_spacing_hz").get<double>();
  s.center_freq_hz = j.at("center_freq_hz").get<double>();
  s.cell_perturbation = j.at("cell_perturbation").get<double>();
  s.packet_jitter = j.at("packet_jitter").get<double>();
  for (const auto& [k, v] : j.at("cell_alias").items()) s.cell_alias[std::stoi(k)] = v.get<int>();
  const auto& e = j.at("errors");
  s.errors.enabled = e.at("enabled").get<bool>();
  s.errors.pbd_delay_min = e.at("pbd_delay_min").get<double>();
  s.errors.pbd_delay_max = e.at("pbd_delay_max").get<double>();
  s.errors.sfo_ratio = e.at("sfo_ratio").get<double>();
  s.errors.cfo_hz = e.at("cfo_hz").get<double>();
  s.errors.fft_size = e.at("fft_size").get<int>();
  s.errors.symbol_time_s = e.at("symbol_time_s").get<double>();
  s.errors.useful_symbol_time_s = e.at("useful_symbol_time_s").get<double>();
  s.errors.packet_offset_min = e.at("packet_offset_min").get<double>();
  s.errors.packet_offset_max = e.at("packet_offset_max").get<double>();
  return s;
}

json manifest_to_json(const DatasetManifest& m) {
  json counts = json::object();
  for (const auto& [cell, n] : m.packets_per_cell) counts[std::to_string(cell)] = n;
  json j = {{"schema_version", m.schema_version},
            {"geometry", geometry_to_json(m.geometry)},
            {"layout", layout_to_json(m.layout)},
            {"views", m.views},
            {"subcarriers", m.subcarriers},
            {"pairs", m.pairs()},
            {"cells", m.cell_count()},
            {"packets_per_cell", counts},
            {"seed", m.scenario ? json(m.scenario->seed) : json(nullptr)},
            {"scenario", m.scenario ? scenario_to_json(*m.scenario) : json(nullptr)}};
  if (m.is_split()) {
    json assignment = json::object();
    for (const auto& [cell, tags] : m.assignment) {
      json per = {{"train", json::array()}, {"val", json::array()}, {"test", json::array()}};
      for (std::size_t k = 0; k < tags.size(); ++k) per[to_string(tags[k])].push_back(k);
      assignment[std::to_string(cell)] = per;
    }
    j["split"] = {{"ratios", m.split_ratios}, {"seed", m.split_seed}, {"assignment", assignment}};
  } else {
    j["split"] = nullptr;
  }
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  check_version(j, "manifest");
  DatasetManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  m.geometry = geometry_from_json(j.at("geometry"));
  m.layout = layout_from_json(j.at("layout"));
  m.views = j.at("views").get<int>();
  m.subcarriers = j.at("subcarriers").get<int>();
  for (const auto& [k, v] : j.at("packets_per_cell").items()) m.packets_per_cell[std::stoi(k)] = v.get<int>();
  if (!j.at("scenario").is_null()) m.scenario = scenario_from_json(j.at("scenario"));
  const auto& split = j.at("split");
  if (!split.is_null()) {
    m.split_ratios = split.at("ratios").get<std::array<double, 3>>();
    m.split_seed = split.at("seed").get<std::uint64_t>();
    for (const auto& [k, per] : split.at("assignment").items()) {
      const int cell = std::stoi(k);
      std::vector<Split> tags(m.packets_per_cell.at(cell), Split::kTrain);
      std::vector<bool> seen(tags.size(), false);
      for (const auto& name : {"train", "val", "test"}) {
        for (const auto& idx : per.at(name)) {
          const auto at = idx.get<std::size_t>();
          if (at >= tags.size() || seen[at]) throw FormatError("split assignment index invalid for cell " + k);
          tags[at] = split_from_string(name);
          seen[at] = true;
        }
      }
      if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw FormatError("split assignment leaves samples of cell " + k + " unassigned");
      }
      m.assignment[cell] = std::move(tags);
    }
  }
  m.validate();
  return m;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_manifest(const fs::path& path, const DatasetManifest& m) { write_file(path, dump_json(manifest_to_json(m))); }

DatasetManifest read_manifest(const fs::path& path) {
  try {
    return manifest_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_dataset(const fs::path& dir, const Dataset& data, const DatasetManifest& manifest) {
  data.validate();
  fs::create_directories(dir);
  write_manifest(dir / "manifest.json", manifest);
  for (const auto& [cell, per_view] : data.traces) {
    for (const auto& t : per_view) {
      write_trace(dir / ("cell" + std::to_string(cell) + "_ap" + std::to_string(t.ap_id) + ".csibin"), t);
    }
  }
}

LoadedDataset read_dataset(const fs::path& dir) {
  LoadedDataset out;
  out.manifest = read_manifest(dir / "manifest.json");
  auto& d = out.data;
  d.geometry = out.manifest.geometry;
  d.layout = out.manifest.layout;
  d.views = out.manifest.views;
  for (const auto& [cell, n] : out.manifest.packets_per_cell) {
    for (int ap = 1; ap <= d.views; ++ap) {
      auto t = read_trace(dir / ("cell" + std::to_string(cell) + "_ap" + std::to_string(ap) + ".csibin"));
      if (t.packet_count() != n) throw FormatError("cell " + std::to_string(cell) + " AP " + std::to_string(ap) + ": packet count differs from manifest");
      d.traces[cell].push_back(std::move(t));
    }
  }
  d.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Models and reports

json model_to_json(const TrainedLocalizer& model) {
  json j = {{"schema_version", kSchemaVersion},
            {"config", config_to_json(model.config)},
            {"views", model.views},
            {"amplitude", model.amplitude ? pipeline_to_json(*model.amplitude) : json(nullptr)},
            {"phase", model.phase ? pipeline_to_json(*model.phase) : json(nullptr)},
            {"cell_ids", model.cell_ids},
            {"templates", matrix_to_json(model.templates)},
            {"training_mdfi", matrix_to_json(model.training_mdfi)},
            {"training_labels", model.training_labels},
            {"geometry", geometry_to_json(model.geometry)},
            {"layout", layout_to_json(model.layout)},
            {"subcarriers", model.subcarriers},
            {"beta_selected", model.beta_selected}};
  return j;
}

TrainedLocalizer model_from_json(const json& j) {
  check_version(j, "model");
  TrainedLocalizer m;
  m.config = config_from_json(j.at("config"));
  m.views = j.at("views").get<std::vector<int>>();
  if (!j.at("amplitude").is_null()) m.amplitude = pipeline_from_json(j.at("amplitude"));
  if (!j.at("phase").is_null()) m.phase = pipeline_from_json(j.at("phase"));
  m.cell_ids = j.at("cell_ids").get<std::vector<int>>();
  m.templates = matrix_from_json(j.at("templates"));
  m.training_mdfi = matrix_from_json(j.at("training_mdfi"));
  m.training_labels = j.at("training_labels").get<Labels>();
  m.geometry = geometry_from_json(j.at("geometry"));
  m.layout = layout_from_json(j.at("layout"));
  m.subcarriers = j.at("subcarriers").get<int>();
  m.beta_selected = j.at("beta_selected").get<double>();
  return m;
}

void write_model(const fs::path& path, const TrainedLocalizer& model) { write_file(path, dump_json(model_to_json(model))); }

TrainedLocalizer read_model(const fs::path& path) {
  try {
    return model_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json report_to_json(const EvalReport& r, const json& extra) {
  json cdf = json::array();
  for (const auto& [e, f] : r.cdf) cdf.push_back({e, f});
  json confusion = json::array();
  for (Eigen::Index a = 0; a < r.confusion.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < r.confusion.cols(); ++b) row.push_back(r.confusion(a, b));
    confusion.push_back(row);
  }
  json j = {{"schema_version", kSchemaVersion},
            {"mean_distance_error", r.mean_distance_error},
            {"std_distance_error", r.std_distance_error},
            {"accuracy", r.accuracy},
            {"estimates", r.errors.size()},
            {"batch_packets", r.batch_packets},
            {"views", r.views},
            {"cdf", cdf},
            {"per_cell_confusion", confusion},
            {"timing", {{"seconds_per_estimate", r.timing_seconds_per_estimate}}}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

void write_report(const fs::path& dir, const EvalReport& report, const json& extra) {
  fs::create_directories(dir);
  write_file(dir / "report.json", dump_json(report_to_json(report, extra)));
  std::ostringstream csv;
  csv << "error_m,fraction\n" << std::setprecision(17);
  for (const auto& [e, f] : report.cdf) csv << e << ',' << f << '\n';
  write_file(dir / "cdf.csv", csv.str());
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
  write_file(path, out.str());
}

Matrix read_matrix_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError(path.string() + ": ragged CSV");
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

}  // namespace mudloc
