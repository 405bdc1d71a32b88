#include "mudloc/dataset_io.hpp"
#include "mudloc/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>

using namespace mudloc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("mudloc_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

const Dataset& tiny() {
  static const Dataset d = make_benchmark(ChannelScenario::reference(11, 4, 2), 10);
  return d;
}

}  // namespace

TEST_CASE("trace round trip is bit-identical") {
  TempDir dir;
  const auto& t = tiny().traces.at(3)[1];
  write_trace(dir.path / "t.csibin", t);
  const auto back = read_trace(dir.path / "t.csibin");
  CHECK(back.cell_id == t.cell_id);
  CHECK(back.ap_id == t.ap_id);
  REQUIRE(back.packets.size() == t.packets.size());
  for (std::size_t j = 0; j < t.packets.size(); ++j) CHECK(back.packets[j] == t.packets[j]);
  CHECK(slurp(dir.path / "t.csibin").substr(0, 4) == "CSIB");
}

TEST_CASE("signed zero, subnormal and huge samples survive bit-exactly") {
  TempDir dir;
  CsiTrace t;
  t.cell_id = 1;
  t.ap_id = 1;
  ComplexMatrix p(2, 1);
  p << std::complex<double>(-0.0, 1e-310), std::complex<double>(1.0 / 3.0, -2.5e300);
  t.packets.push_back(p);
  write_trace(dir.path / "t.csibin", t);
  const auto back = read_trace(dir.path / "t.csibin").packets[0];
  CHECK(std::bit_cast<std::uint64_t>(back(0).real()) == std::bit_cast<std::uint64_t>(-0.0));
  CHECK(back(0).imag() == 1e-310);
  CHECK(back(1) == p(1));
}

TEST_CASE("a flipped payload byte is reported as corruption") {
  TempDir dir;
  const auto f = dir.path / "t.csibin";
  write_trace(f, tiny().traces.at(1)[0]);
  auto bytes = slurp(f);
  bytes[bytes.size() / 2] ^= 0x10;
  spit(f, bytes);
  CHECK_THROWS_WITH_AS(read_trace(f), doctest::Contains("checksum"), FormatError);
}

TEST_CASE("truncated and foreign files are rejected") {
  TempDir dir;
  const auto f = dir.path / "t.csibin";
  write_trace(f, tiny().traces.at(1)[0]);
  const auto bytes = slurp(f);
  spit(f, bytes.substr(0, bytes.size() - 100));
  CHECK_THROWS_AS(read_trace(f), FormatError);
  spit(f, "CSI");
  CHECK_THROWS_AS(read_trace(f), FormatError);
  spit(f, "PK\x03\x04 not a trace at all");
  CHECK_THROWS_AS(read_trace(f), FormatError);
  CHECK_THROWS_AS(read_trace(dir.path / "missing.csibin"), FormatError);
}

TEST_CASE("a newer schema version is refused") {
  TempDir dir;
  auto j = manifest_to_json(manifest_for(tiny()));
  j["schema_version"] = kSchemaVersion + 1;
  CHECK_THROWS_WITH_AS(manifest_from_json(j), doctest::Contains("unsupported schema_version"), FormatError);
  spit(dir.path / "manifest.json", dump_json(j));
  CHECK_THROWS_AS(read_manifest(dir.path / "manifest.json"), FormatError);
  j.erase("schema_version");
  spit(dir.path / "manifest.json", dump_json(j));
  CHECK_THROWS_AS(read_manifest(dir.path / "manifest.json"), FormatError);
  spit(dir.path / "manifest.json", "{ not json");
  CHECK_THROWS_AS(read_manifest(dir.path / "manifest.json"), FormatError);
}

TEST_CASE("split sizes per cell") {
  auto data = make_benchmark(ChannelScenario::reference(1, 3, 2), 10);
  auto m = split_dataset(manifest_for(data), {0.6, 0.2, 0.2}, 5);
  for (const auto& [cell, parts] : m.assignment) {
    CHECK(std::count(parts.begin(), parts.end(), Split::kTrain) == 6);
    CHECK(std::count(parts.begin(), parts.end(), Split::kValidation) == 2);
    CHECK(std::count(parts.begin(), parts.end(), Split::kTest) == 2);
  }
  CHECK(m.samples({Split::kTrain}).size() == 18);
  CHECK(m.samples({Split::kTrain, Split::kValidation}).size() == 24);

  data = make_benchmark(ChannelScenario::reference(1, 3, 2), 5);
  m = split_dataset(manifest_for(data), {0.6, 0.2, 0.2}, 5);
  const auto& parts = m.assignment.at(2);
  CHECK(std::count(parts.begin(), parts.end(), Split::kTrain) == 3);
  CHECK(std::count(parts.begin(), parts.end(), Split::kValidation) == 1);
  CHECK(std::count(parts.begin(), parts.end(), Split::kTest) == 1);

  // Largest remainder: 7 * (0.5, 0.25, 0.25) = (3.5, 1.75, 1.75); floors (3, 1, 1) leave 2 to
  // hand out and the two 0.75 remainders take them.
  data = make_benchmark(ChannelScenario::reference(1, 2, 2), 7);
  m = split_dataset(manifest_for(data), {0.5, 0.25, 0.25}, 5);
  const auto& seven = m.assignment.at(1);
  CHECK(std::count(seven.begin(), seven.end(), Split::kTrain) == 3);
  CHECK(std::count(seven.begin(), seven.end(), Split::kValidation) == 2);
  CHECK(std::count(seven.begin(), seven.end(), Split::kTest) == 2);
}

TEST_CASE("split is deterministic in the seed and errors on bad input") {
  const auto base = manifest_for(tiny());
  const auto a = split_dataset(base, {0.6, 0.2, 0.2}, 9);
  CHECK(a.assignment == split_dataset(base, {0.6, 0.2, 0.2}, 9).assignment);
  CHECK(a.assignment != split_dataset(base, {0.6, 0.2, 0.2}, 10).assignment);
  CHECK_THROWS_AS(split_dataset(base, {0.6, 0.2, 0.1}, 1), InvalidInput);
  CHECK_THROWS_AS(split_dataset(base, {1.2, -0.1, -0.1}, 1), InvalidInput);
  const auto two = make_benchmark(ChannelScenario::reference(1, 2, 2), 2);
  CHECK_THROWS_AS(split_dataset(manifest_for(two), {0.6, 0.2, 0.2}, 1), InvalidInput);
}

TEST_CASE("scenario JSON round trip keeps every field, including infinite SNR") {
  auto s = ChannelScenario::reference(77, 6, 3, 0.7);
  s.noise_snr_db = std::numeric_limits<double>::infinity();
  s.cell_alias[4] = 1;
  s.packet_jitter = 0.125;
  s.errors.enabled = false;
  const auto j = scenario_to_json(s);
  CHECK(j["noise_snr_db"] == "inf");
  const auto back = scenario_from_json(nlohmann::json::parse(dump_json(j)));
  CHECK(back.noise_snr_db == s.noise_snr_db);
  CHECK(back.cell_alias == s.cell_alias);
  CHECK(back.grid == s.grid);
  CHECK(back.ap_positions == s.ap_positions);
  CHECK(dump_json(scenario_to_json(back)) == dump_json(j));
  // Regenerating from the restored scenario gives the same packets.
  CHECK(generate(back, 2, 3)[1].packets[2] == generate(s, 2, 3)[1].packets[2]);
}

TEST_CASE("manifest and dataset directory round trip") {
  TempDir dir;
  const auto s = ChannelScenario::reference(11, 4, 2);
  const auto manifest = split_dataset(manifest_for(tiny(), s), {0.6, 0.2, 0.2}, 3);
  write_dataset(dir.path / "ds", tiny(), manifest);
  CHECK(fs::exists(dir.path / "ds" / "manifest.json"));
  CHECK(fs::exists(dir.path / "ds" / "cell4_ap2.csibin"));

  const auto loaded = read_dataset(dir.path / "ds");
  CHECK(dump_json(manifest_to_json(loaded.manifest)) == dump_json(manifest_to_json(manifest)));
  CHECK(loaded.data.geometry == tiny().geometry);
  CHECK(loaded.data.views == 2);
  for (const auto& [cell, traces] : tiny().traces) {
    for (std::size_t v = 0; v < traces.size(); ++v) {
      for (std::size_t j = 0; j < traces[v].packets.size(); ++j) {
        CHECK(loaded.data.traces.at(cell)[v].packets[j] == traces[v].packets[j]);
      }
    }
  }
  fs::remove(dir.path / "ds" / "cell2_ap1.csibin");
  CHECK_THROWS_AS(read_dataset(dir.path / "ds"), FormatError);
}

TEST_CASE("manifest validation catches inconsistent assignments") {
  auto m = split_dataset(manifest_for(tiny()), {0.6, 0.2, 0.2}, 3);
  auto j = manifest_to_json(m);
  j["split"]["assignment"]["1"]["train"].push_back(99);
  CHECK_THROWS_AS(manifest_from_json(j), FormatError);
}

TEST_CASE("model round trip reproduces every estimate") {
  TempDir dir;
  const auto& data = tiny();
  SampleSet training, test;
  for (const auto& r : all_samples(data)) (r.packet < 7 ? training : test).push_back(r);
  for (auto method : {Method::kGi2dca, Method::kCcaPairwise}) {
    TrainConfig c;
    c.method = method;
    c.views = {0, 1};
    const auto model = train(data, training, c);
    write_model(dir.path / "model.json", model);
    const auto back = read_model(dir.path / "model.json");
    CHECK(back.templates == model.templates);
    CHECK(back.cell_ids == model.cell_ids);
    CHECK(back.views == model.views);
    CHECK(back.config.method == method);
    CHECK(dump_json(model_to_json(back)) == dump_json(model_to_json(model)));
    const auto bank = FeatureBank::build(data);
    for (const auto& batch : make_batches(test, 3)) {
      CHECK(classify_samples(back, bank, batch) == classify_samples(model, bank, batch));
    }
  }
}

TEST_CASE("report and CDF files") {
  TempDir dir;
  const auto g = GridGeometry::regular(4, 0.5);
  auto r = summarize({1, 2, 3, 4}, {1, 2, 4, 4}, g);
  r.timing_seconds_per_estimate = 0.25;
  write_report(dir.path / "out", r, {{"method", "gi2dca"}});
  const auto j = nlohmann::json::parse(slurp(dir.path / "out" / "report.json"));
  CHECK(j["method"] == "gi2dca");
  CHECK(j["mean_distance_error"].get<double>() == r.mean_distance_error);
  CHECK(j["accuracy"].get<double>() == 0.75);
  CHECK(j["timing"]["seconds_per_estimate"].get<double>() == 0.25);
  CHECK(j["schema_version"] == kSchemaVersion);

  std::ifstream csv(dir.path / "out" / "cdf.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "error_m,fraction");
  std::vector<std::pair<double, double>> rows;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  CHECK(rows == r.cdf);
}

TEST_CASE("matrix CSV round trip is exact") {
  TempDir dir;
  std::mt19937_64 rng(4);
  Matrix m = testing::gaussian(5, 7, rng);
  m(0, 0) = 1e-300;
  m(4, 6) = -123456789.123456789;
  write_matrix_csv(dir.path / "m.csv", m);
  CHECK(read_matrix_csv(dir.path / "m.csv") == m);
  spit(dir.path / "bad.csv", "1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(dir.path / "bad.csv"), FormatError);
}
