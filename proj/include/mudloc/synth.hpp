#pragma once

// Deterministic multipath CSI generator with packet-level phase errors from
// packet boundary detection, sampling frequency offset and carrier frequency
// offset. All receive chains of one link share the error, as they share a
// clock and a down-converter.

#include "mudloc/dataset.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

namespace mudloc {

struct PhaseErrorParams {
  bool enabled = true;
  /// Packet boundary detection delay, uniform in samples.
  double pbd_delay_min = 0.0;
  double pbd_delay_max = 4.0;
  /// (T_r - T_t) / T_t.
  double sfo_ratio = 40e-6;
  double cfo_hz = 60e3;
  int fft_size = 64;
  /// Guard interval plus data symbol, and data symbol alone.
  double symbol_time_s = 4.0e-6;
  double useful_symbol_time_s = 3.2e-6;
  /// Sampling time offset eta, uniform per packet.
  double packet_offset_min = 0.0;
  double packet_offset_max = 8.0;

  void validate() const;
};

struct ChannelScenario {
  std::uint64_t seed = 42;
  GridGeometry grid;
  std::vector<Point2> ap_positions;
  Point2 detector_position = Point2::Zero();
  AntennaLayout layout = AntennaLayout::tx_major(3, 3);
  int subcarriers = 30;
  /// Paths per link: n_paths - 1 environment paths plus one subject path.
  int n_paths = 6;
  /// +infinity disables noise.
  double noise_snr_db = 20.0;
  double subcarrier_spacing_hz = 312.5e3;
  double center_freq_hz = 5.32e9;
  /// Relative std of the complex gain change the subject imposes on each
  /// environment path; 0 leaves only the geometric subject path.
  double cell_perturbation = 0.3;
  /// Relative std of per-packet complex gain jitter on every path.
  double packet_jitter = 0.0;
  /// cell -> cell whose path parameters it reuses.
  std::map<int, int> cell_alias;
  PhaseErrorParams errors;

  /// Grid of `cells` at `pitch` meters, `aps` access points around it, 3x3 antennas,
  /// 30 subcarriers, 20 dB SNR.
  static ChannelScenario reference(std::uint64_t seed, int cells, int aps, double pitch = 0.5);

  int views() const { return static_cast<int>(ap_positions.size()); }
  void validate() const;
};

/// Subcarrier indices k used in the frequency and phase-error terms.
std::vector<int> subcarrier_indices(int subcarriers);

/// One trace per AP for the subject standing in `cell`.
std::vector<CsiTrace> generate(const ChannelScenario& scenario, int cell, int n_packets);

/// Error-free, noise-free per-link response for (cell, AP), S x L.
ComplexMatrix ideal_response(const ChannelScenario& scenario, int cell, int ap);

/// Sum of |a_p|^2 over the paths of (cell, AP).
double path_power(const ChannelScenario& scenario, int cell, int ap);

/// Every cell of the grid, `n_packets` per cell, all APs.
Dataset make_benchmark(const ChannelScenario& scenario, int n_packets);

}  // namespace mudloc
