#include "mudloc/synth.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace mudloc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpeedOfLight = 299'792'458.0;
constexpr double kRmsDelaySpread = 30e-9;

// Stream tags; every random draw is keyed by (seed, tag, ids...) so output
// never depends on generation order.
enum Stream : std::uint64_t { kEnvironment = 1, kSubject = 2, kPerturbation = 3, kPacket = 4, kNoise = 5 };

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, Stream tag, std::int64_t a = 0, std::int64_t b = 0,
                       std::int64_t c = 0) {
  std::uint64_t h = splitmix(seed);
  for (std::uint64_t v : {static_cast<std::uint64_t>(tag), static_cast<std::uint64_t>(a),
                          static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(c)}) {
    h = splitmix(h ^ v);
  }
  return std::mt19937_64(h);
}

std::complex<double> complex_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

struct Path {
  std::complex<double> gain;
  double delay_s = 0.0;
  double aoa = 0.0;  // at the receive array
  double aod = 0.0;  // at the transmit array
};

int resolve(const ChannelScenario& s, int cell) {
  const auto it = s.cell_alias.find(cell);
  return it == s.cell_alias.end() ? cell : it->second;
}

std::vector<Path> link_paths(const ChannelScenario& s, int cell, int ap) {
  const int key_cell = resolve(s, cell);
  std::vector<Path> paths;
  std::uniform_real_distribution<double> delay(10e-9, 100e-9);
  std::uniform_real_distribution<double> angle(-kPi / 2, kPi / 2);

  for (int p = 0; p + 1 < s.n_paths; ++p) {
    auto rng = stream(s.seed, kEnvironment, ap, p);
    Path path;
    path.delay_s = delay(rng);
    path.aoa = angle(rng);
    path.aod = angle(rng);
    path.gain = std::sqrt(std::exp(-path.delay_s / kRmsDelaySpread)) * complex_normal(rng);
    auto pert = stream(s.seed, kPerturbation, key_cell, ap, p);
    path.gain *= 1.0 + s.cell_perturbation * complex_normal(pert);
    paths.push_back(path);
  }

  // Path scattered off the subject; delay and angles follow the geometry.
  const Point2& cell_pos = s.grid.center(key_cell);
  const Point2& ap_pos = s.ap_positions.at(ap - 1);
  const Point2 to_cell_from_dp = cell_pos - s.detector_position;
  const Point2 to_cell_from_ap = cell_pos - ap_pos;
  auto rng = stream(s.seed, kSubject, key_cell, ap);
  Path body;
  body.delay_s = (to_cell_from_ap.norm() + to_cell_from_dp.norm()) / kSpeedOfLight;
  body.aoa = std::atan2(to_cell_from_dp.y(), to_cell_from_dp.x());
  body.aod = std::atan2(to_cell_from_ap.y(), to_cell_from_ap.x());
  body.gain = std::sqrt(std::exp(-body.delay_s / kRmsDelaySpread)) *
              complex_normal(rng);
  paths.push_back(body);
  return paths;
}

ComplexMatrix response(const ChannelScenario& s, const std::vector<Path>& paths,
                       const std::vector<int>& ks) {
  ComplexMatrix h = ComplexMatrix::Zero(s.subcarriers, s.layout.pair_count());
  for (int l = 0; l < s.layout.pair_count(); ++l) {
    const auto [tx, rx] = s.layout.pair_order[l];
    for (const auto& p : paths) {
      const double array_phase = kPi * (rx * std::sin(p.aoa) + tx * std::sin(p.aod));
      for (int sc = 0; sc < s.subcarriers; ++sc) {
        const double f = s.center_freq_hz + ks[sc] * s.subcarrier_spacing_hz;
        h(sc, l) += p.gain * std::polar(1.0, -(2.0 * kPi * f * p.delay_s + array_phase));
      }
    }
  }
  return h;
}

}  // namespace

void PhaseErrorParams::validate() const {
  if (fft_size <= 0) throw InvalidInput("fft_size must be > 0");
  if (pbd_delay_min > pbd_delay_max) throw InvalidInput("pbd delay range is reversed");
  if (packet_offset_min > packet_offset_max) throw InvalidInput("packet offset range is reversed");
  if (!(useful_symbol_time_s > 0.0) || !(symbol_time_s > 0.0)) {
    throw InvalidInput("symbol times must be > 0");
  }
}

ChannelScenario ChannelScenario::reference(std::uint64_t seed, int cells, int aps, double pitch) {
  ChannelScenario s;
  s.seed = seed;
  s.grid = GridGeometry::regular(cells, pitch);
  Point2 lo = s.grid.cells.begin()->second;
  Point2 hi = lo;
  for (const auto& [_, c] : s.grid.cells) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  const Point2 middle = 0.5 * (lo + hi);
  const double radius = 0.5 * (hi - lo).norm() + 1.5;
  for (int i = 0; i < aps; ++i) {
    const double theta = 2.0 * kPi * i / aps + 0.3;
    s.ap_positions.emplace_back(middle + radius * Point2(std::cos(theta), std::sin(theta)));
  }
  s.detector_position = middle + Point2(0.2, -radius);
  return s;
}

void ChannelScenario::validate() const {
  grid.validate();
  layout.validate();
  errors.validate();
  if (ap_positions.empty()) throw InvalidInput("scenario needs at least one AP");
  if (n_paths < 1) throw InvalidInput("n_paths must be >= 1");
  if (subcarriers < 1) throw InvalidInput("subcarriers must be >= 1");
  if (std::isnan(noise_snr_db) || noise_snr_db == -std::numeric_limits<double>::infinity()) {
    throw InvalidInput("noise SNR must be a number or +inf");
  }
  for (const auto& [from, to] : cell_alias) {
    if (!grid.contains(from) || !grid.contains(to)) throw InvalidInput("cell alias outside grid");
  }
}

std::vector<int> subcarrier_indices(int subcarriers) {
  // Grouping reported by the Intel 5300 for 20 MHz channels.
  static const std::vector<int> k5300 = {-28, -26, -24, -22, -20, -18, -16, -14, -12, -10,
                                         -8,  -6,  -4,  -2,  -1,  1,   3,   5,   7,   9,
                                         11,  13,  15,  17,  19,  21,  23,  25,  27,  28};
  if (subcarriers == 30) return k5300;
  std::vector<int> ks(subcarriers);
  for (int s = 0; s < subcarriers; ++s) ks[s] = s - subcarriers / 2;
  return ks;
}

ComplexMatrix ideal_response(const ChannelScenario& scenario, int cell, int ap) {
  scenario.validate();
  if (!scenario.grid.contains(cell)) throw InvalidInput("invalid cell id " + std::to_string(cell));
  return response(scenario, link_paths(scenario, cell, ap), subcarrier_indices(scenario.subcarriers));
}

double path_power(const ChannelScenario& scenario, int cell, int ap) {
  double power = 0.0;
  for (const auto& p : link_paths(scenario, cell, ap)) power += std::norm(p.gain);
  return power;
}

std::vector<CsiTrace> generate(const ChannelScenario& scenario, int cell, int n_packets) {
  scenario.validate();
  if (!scenario.grid.contains(cell)) throw InvalidInput("invalid cell id " + std::to_string(cell));
  if (n_packets < 1) throw InvalidInput("n_packets must be >= 1");

  const auto ks = subcarrier_indices(scenario.subcarriers);
  const auto& e = scenario.errors;
  const bool noisy = std::isfinite(scenario.noise_snr_db);
  const bool jitter = scenario.packet_jitter > 0.0;
  std::vector<CsiTrace> traces;

  for (int ap = 1; ap <= scenario.views(); ++ap) {
    const auto paths = link_paths(scenario, cell, ap);
    const ComplexMatrix ideal = response(scenario, paths, ks);
    double power = 0.0;
    for (const auto& p : paths) power += std::norm(p.gain);
    const double noise_std = noisy ? std::sqrt(power / std::pow(10.0, scenario.noise_snr_db / 10.0)) : 0.0;

    CsiTrace trace;
    trace.ap_id = ap;
    trace.cell_id = cell;
    trace.packets.reserve(n_packets);
    for (int j = 0; j < n_packets; ++j) {
      ComplexMatrix h = ideal;
      if (jitter) {
        auto rng = stream(scenario.seed, kPacket, cell, ap, 2 * j + 1);
        auto jittered = paths;
        for (auto& p : jittered) p.gain *= 1.0 + scenario.packet_jitter * complex_normal(rng);
        h = response(scenario, jittered, ks);
      }
      if (e.enabled) {
        auto rng = stream(scenario.seed, kPacket, cell, ap, 2 * j);
        std::uniform_real_distribution<double> pbd(e.pbd_delay_min, e.pbd_delay_max);
        std::uniform_real_distribution<double> eta(e.packet_offset_min, e.packet_offset_max);
        const double lambda_pb = 2.0 * kPi * pbd(rng) / e.fft_size;
        const double lambda_sf = 2.0 * kPi * e.sfo_ratio * e.symbol_time_s / e.useful_symbol_time_s;
        const double lambda_cf = 2.0 * kPi * e.cfo_hz * e.symbol_time_s * eta(rng);
        for (int sc = 0; sc < scenario.subcarriers; ++sc) {
          h.row(sc) *= std::polar(1.0, ks[sc] * (lambda_pb + lambda_sf) + lambda_cf);
        }
      }
      if (noisy) {
        auto rng = stream(scenario.seed, kNoise, cell, ap, j);
        for (Eigen::Index i = 0; i < h.size(); ++i) h(i) += noise_std * complex_normal(rng);
      }
      trace.packets.push_back(std::move(h));
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

Dataset make_benchmark(const ChannelScenario& scenario, int n_packets) {
  scenario.validate();
  Dataset data;
  data.layout = scenario.layout;
  data.geometry = scenario.grid;
  data.views = scenario.views();
  for (const auto& [cell, _] : scenario.grid.cells) data.traces[cell] = generate(scenario, cell, n_packets);
  return data;
}

}  // namespace mudloc
