#include "mudloc/csi.hpp"
#include "mudloc/localizer.hpp"
#include "mudloc/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace mudloc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ChannelScenario small(int cells = 4, int aps = 2) {
  auto s = ChannelScenario::reference(42, cells, aps);
  s.subcarriers = 30;
  return s;
}

}  // namespace

TEST_CASE("reference scenario layout") {
  const auto s = ChannelScenario::reference(42, 20, 3);
  CHECK(s.grid.cell_count() == 20);
  CHECK(s.grid.pitch == 0.5);
  CHECK(s.views() == 3);
  CHECK(s.layout.pair_count() == 9);
  CHECK(s.subcarriers == 30);
  CHECK(s.noise_snr_db == 20.0);
  CHECK(ChannelScenario::reference(1, 6, 2, 0.8).grid.pitch == 0.8);
  CHECK(subcarrier_indices(30).size() == 30);
  CHECK(subcarrier_indices(4) == std::vector<int>{-2, -1, 0, 1});
}

TEST_CASE("flat channel: one zero-delay path, no noise, no errors") {
  auto s = small();
  s.n_paths = 1;
  s.noise_snr_db = kInf;
  s.errors.enabled = false;
  s.detector_position = s.grid.center(2);
  s.ap_positions[0] = s.grid.center(2);
  s.center_freq_hz = 0.0;
  s.subcarrier_spacing_hz = 0.0;
  const auto traces = generate(s, 2, 5);
  const auto amp = amplitude_image(traces[0]).data;
  const double ref = amp(0, 0);
  CHECK(ref > 0.0);
  CHECK((amp.array() - ref).abs().maxCoeff() <= 1e-12 * ref);
}

TEST_CASE("generation is deterministic in the seed") {
  auto s = small();
  s.packet_jitter = 0.2;
  const auto a = generate(s, 3, 6);
  const auto b = generate(s, 3, 6);
  REQUIRE(a.size() == 2);
  for (std::size_t v = 0; v < a.size(); ++v) {
    for (int j = 0; j < 6; ++j) CHECK(a[v].packets[j] == b[v].packets[j]);
  }
  s.seed = 43;
  CHECK(generate(s, 3, 6)[0].packets[0] != a[0].packets[0]);
}

TEST_CASE("per-cell output does not depend on which cells were generated before") {
  const auto s = small();
  const auto direct = generate(s, 4, 3);
  const auto data = make_benchmark(s, 3);
  CHECK(data.traces.at(4)[1].packets[2] == direct[1].packets[2]);
}

TEST_CASE("traces carry ids and shapes") {
  const auto traces = generate(small(4, 3), 2, 7);
  REQUIRE(traces.size() == 3);
  for (int v = 0; v < 3; ++v) {
    CHECK(traces[v].ap_id == v + 1);
    CHECK(traces[v].cell_id == 2);
    CHECK(traces[v].packet_count() == 7);
    CHECK(traces[v].subcarriers() == 30);
    CHECK(traces[v].pairs() == 9);
  }
}

TEST_CASE("error injection: raw phase wanders, antenna phase differences do not") {
  auto s = small();
  s.noise_snr_db = kInf;
  const auto trace = generate(s, 1, 100)[0];
  const auto diff = phase_difference_image(trace, s.layout, PhaseCentering::kNone).data;
  double worst = 0.0;
  for (double v : testing::row_population_variances(diff)) worst = std::max(worst, std::sqrt(v));
  CHECK(worst <= 1e-10);

  // Unwrapped around packet 0, subcarrier 0 of pair 0 still spreads widely.
  Matrix raw(1, 100);
  const double ref = std::arg(trace.packets[0](0, 0));
  for (int j = 0; j < 100; ++j) raw(0, j) = std::remainder(std::arg(trace.packets[j](0, 0)) - ref, 2 * std::numbers::pi);
  CHECK(std::sqrt(testing::row_population_variances(raw)[0]) >= 0.1);

  s.errors.enabled = false;
  const auto clean = generate(s, 1, 10)[0];
  for (int j = 1; j < 10; ++j) CHECK(clean.packets[j] == clean.packets[0]);
}

TEST_CASE("the error is a linear phase ramp over subcarrier index plus an offset") {
  auto s = small();
  s.noise_snr_db = kInf;
  auto clean_s = s;
  clean_s.errors.enabled = false;
  const auto noisy = generate(s, 3, 4)[0];
  const auto clean = generate(clean_s, 3, 4)[0];
  const auto ks = subcarrier_indices(s.subcarriers);
  for (int j = 0; j < 4; ++j) {
    std::vector<double> err;
    for (int sc = 0; sc < s.subcarriers; ++sc) err.push_back(std::arg(noisy.packets[j](sc, 0) / clean.packets[j](sc, 0)));
    // Fit slope from the first two subcarriers; every other one must agree mod 2 pi.
    const double slope = std::remainder(err[1] - err[0], 2 * std::numbers::pi) / (ks[1] - ks[0]);
    const double offset = err[0] - slope * ks[0];
    for (int sc = 0; sc < s.subcarriers; ++sc) {
      CHECK(std::abs(std::remainder(err[sc] - (offset + slope * ks[sc]), 2 * std::numbers::pi)) <= 1e-9);
      // Identical on every antenna pair of the link.
      for (int l = 1; l < 9; ++l) {
        CHECK(std::abs(std::remainder(std::arg(noisy.packets[j](sc, l) / clean.packets[j](sc, l)) - err[sc],
                                      2 * std::numbers::pi)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("energy sanity at high SNR") {
  auto s = small();
  s.noise_snr_db = 30.0;
  for (int cell : {1, 3}) {
    for (int ap : {1, 2}) {
      const auto trace = generate(s, cell, 50)[ap - 1];
      double mean_power = 0.0;
      for (const auto& p : trace.packets) mean_power += p.cwiseAbs2().mean();
      mean_power /= 50.0;
      const double paths = path_power(s, cell, ap);
      CHECK(mean_power <= 3.0 * paths);
      CHECK(mean_power >= paths / 3.0);
    }
  }
}

TEST_CASE("benchmark counts") {
  const auto s = ChannelScenario::reference(42, 20, 2);
  const auto data = make_benchmark(s, 300);
  CHECK(data.geometry.cell_count() == 20);
  CHECK(data.views == 2);
  const auto bank = FeatureBank::build(data);
  const auto all = all_samples(data);
  CHECK(all.size() == 20 * 300);
  CHECK(bank.gather(Modality::kAmplitude, 0, all).cols() == 20 * 300);
  CHECK(bank.gather(Modality::kPhaseDifference, 1, all).cols() == 20 * 300);
}

TEST_CASE("noise-free distinct cells are classified perfectly") {
  auto s = ChannelScenario::reference(42, 20, 3);
  s.noise_snr_db = kInf;
  const auto data = make_benchmark(s, 30);
  SampleSet train_set, test_set;
  for (const auto& r : all_samples(data)) (r.packet < 20 ? train_set : test_set).push_back(r);
  const auto model = train(data, train_set, TrainConfig{});
  const auto report = evaluate(model, data, test_set);
  CHECK(report.accuracy == 1.0);
  CHECK(report.mean_distance_error == 0.0);
}

TEST_CASE("cells sharing path parameters are confused with each other only") {
  auto s = ChannelScenario::reference(42, 9, 3);
  s.cell_alias[5] = 2;
  const auto data = make_benchmark(s, 60);
  SampleSet train_set, test_set;
  for (const auto& r : all_samples(data)) (r.packet < 40 ? train_set : test_set).push_back(r);
  const auto model = train(data, train_set, TrainConfig{});
  EvalOptions opts;
  opts.batch_packets = 1;
  const auto report = evaluate(model, data, test_set, opts);
  const auto& m = report.confusion;
  int off_pair = 0;
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      const bool pair = (a == 1 && b == 4) || (a == 4 && b == 1);
      if (a != b && !pair) off_pair += m(a, b);
    }
  }
  CHECK(off_pair == 0);
  CHECK(m(1, 4) + m(4, 1) > 0);
}

TEST_CASE("scenario validation") {
  auto s = small();
  s.n_paths = 0;
  CHECK_THROWS_AS(generate(s, 1, 1), InvalidInput);
  s = small();
  CHECK_THROWS_AS(generate(s, 99, 1), InvalidInput);
  CHECK_THROWS_AS(generate(s, 1, 0), InvalidInput);
  s.errors.fft_size = 0;
  CHECK_THROWS_AS(generate(s, 1, 1), InvalidInput);
  s = small();
  s.errors.pbd_delay_min = 5;
  s.errors.pbd_delay_max = 1;
  CHECK_THROWS_AS(generate(s, 1, 1), InvalidInput);
  s = small();
  s.noise_snr_db = std::nan("");
  CHECK_THROWS_AS(generate(s, 1, 1), InvalidInput);
}
