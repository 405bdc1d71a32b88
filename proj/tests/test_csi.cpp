#include "mudloc/csi.hpp"
#include "mudloc/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace mudloc;

namespace {

CsiTrace trace_of(std::vector<ComplexMatrix> packets, int cell = 4) {
  CsiTrace t;
  t.cell_id = cell;
  t.packets = std::move(packets);
  return t;
}

CsiTrace random_trace(int s, int l, int n, std::mt19937_64& rng) {
  std::vector<ComplexMatrix> p;
  for (int j = 0; j < n; ++j) p.push_back(testing::complex_gaussian(s, l, rng));
  return trace_of(std::move(p));
}

}  // namespace

TEST_CASE("antenna layout enumerates every pair once, tx-major") {
  const auto layout = AntennaLayout::tx_major(2, 3);
  REQUIRE(layout.pair_count() == 6);
  CHECK(layout.pair_order[0] == std::pair{0, 0});
  CHECK(layout.pair_order[4] == std::pair{1, 1});
  CHECK(layout.column_of(1, 2) == 5);
  CHECK_THROWS_AS(layout.column_of(2, 0), InvalidInput);

  AntennaLayout dup = layout;
  dup.pair_order[1] = dup.pair_order[0];
  CHECK_THROWS_AS(dup.validate(), InvalidInput);
}

TEST_CASE("amplitude of a 3+4i entry is 5") {
  ComplexMatrix p = ComplexMatrix::Zero(2, 2);
  p(0, 0) = {3.0, 4.0};
  const auto img = amplitude_image(trace_of({p}));
  CHECK(img.data(0, 0) == 5.0);
  CHECK(img.labels == Labels{4});
}

TEST_CASE("all-zero packet gives an all-zero amplitude column") {
  const auto img = amplitude_image(trace_of({ComplexMatrix::Zero(30, 9)}));
  CHECK(img.dim() == 270);
  CHECK(img.data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("amplitude image matches an entry-wise modulus oracle") {
  std::mt19937_64 rng(11);
  const auto trace = random_trace(30, 9, 4, rng);
  const auto img = amplitude_image(trace);
  REQUIRE(img.dim() == 30 * 9);
  REQUIRE(img.samples() == 4);
  double worst = 0.0;
  for (int j = 0; j < 4; ++j) {
    for (int l = 0; l < 9; ++l) {
      for (int s = 0; s < 30; ++s) {
        const auto h = trace.packets[j](s, l);
        const double oracle = std::sqrt(h.real() * h.real() + h.imag() * h.imag());
        worst = std::max(worst, std::abs(img.data(s + 30 * l, j) - oracle));
      }
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("amplitude image rejects NaN and Inf entries") {
  ComplexMatrix p = ComplexMatrix::Ones(3, 2);
  p(1, 1) = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  CHECK_THROWS_AS(amplitude_image(trace_of({p})), InvalidInput);
  p(1, 1) = {0.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(amplitude_image(trace_of({p})), InvalidInput);
}

TEST_CASE("adjacent receiver pairs per transmit antenna") {
  const auto pairs = adjacent_receiver_pairs(AntennaLayout::tx_major(3, 3));
  REQUIRE(pairs.size() == 6);
  CHECK(pairs[0] == std::pair{0, 1});
  CHECK(pairs[1] == std::pair{1, 2});
  CHECK(pairs[2] == std::pair{3, 4});
  CHECK(pairs[5] == std::pair{7, 8});
  CHECK_THROWS_AS(adjacent_receiver_pairs(AntennaLayout::tx_major(3, 1)), InvalidInput);
}

TEST_CASE("phase difference dimension is S * n_tx * (n_rx - 1)") {
  std::mt19937_64 rng(3);
  const auto img = phase_difference_image(random_trace(30, 9, 5, rng), AntennaLayout::tx_major(3, 3));
  CHECK(img.dim() == 180);
  CHECK(img.samples() == 5);
  CHECK(img.modality == Modality::kPhaseDifference);
}

TEST_CASE("identical antenna phases give zero differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<ComplexMatrix> packets;
  for (int j = 0; j < 4; ++j) {
    ComplexMatrix p(30, 2);
    for (int s = 0; s < 30; ++s) {
      const double phi = u(rng);
      p(s, 0) = std::polar(1.0 + s, phi);
      p(s, 1) = std::polar(2.0, phi);
    }
    packets.push_back(p);
  }
  const auto layout = AntennaLayout::tx_major(1, 2);
  for (auto c : {PhaseCentering::kNone, PhaseCentering::kPerPacket, PhaseCentering::kPerRow}) {
    CHECK(phase_difference_image(trace_of(packets), layout, c).data.cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("uncentered phase difference equals wrapped angle difference") {
  std::mt19937_64 rng(8);
  const auto trace = random_trace(6, 4, 3, rng);
  const auto layout = AntennaLayout::tx_major(2, 2);
  const auto img = phase_difference_image(trace, layout, PhaseCentering::kNone);
  for (int j = 0; j < 3; ++j) {
    for (int t = 0; t < 2; ++t) {
      for (int s = 0; s < 6; ++s) {
        double d = std::arg(trace.packets[j](s, 2 * t)) - std::arg(trace.packets[j](s, 2 * t + 1));
        while (d <= -std::numbers::pi) d += 2 * std::numbers::pi;
        while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
        CHECK(img.data(s + 6 * t, j) == doctest::Approx(d).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("common per-packet phase rotation leaves phase differences unchanged") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const auto layout = AntennaLayout::tx_major(3, 3);
  const auto trace = random_trace(30, 9, 6, rng);
  auto rotated = trace;
  for (auto& p : rotated.packets) p *= std::polar(1.0, u(rng));
  for (auto c : {PhaseCentering::kNone, PhaseCentering::kPerPacket, PhaseCentering::kPerRow}) {
    const auto a = phase_difference_image(trace, layout, c);
    const auto b = phase_difference_image(rotated, layout, c);
    // Wrapping can move a value near +-pi to the other end.
    Matrix d = a.data - b.data;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      d(i) = std::remainder(d(i), 2 * std::numbers::pi);
    }
    CHECK(d.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("centering modes") {
  std::mt19937_64 rng(4);
  const auto layout = AntennaLayout::tx_major(3, 3);
  const auto trace = random_trace(30, 9, 7, rng);
  const auto raw = phase_difference_image(trace, layout, PhaseCentering::kNone).data;

  const auto per_row = phase_difference_image(trace, layout, PhaseCentering::kPerRow).data;
  for (double m : testing::row_means(per_row)) CHECK(std::abs(m) <= 1e-12);
  CHECK(testing::max_abs_diff(per_row, raw.colwise() - raw.rowwise().mean()) <= 1e-12);

  const auto per_packet = phase_difference_image(trace, layout, PhaseCentering::kPerPacket).data;
  for (double m : testing::row_means(per_packet.transpose())) CHECK(std::abs(m) <= 1e-12);
  CHECK(testing::max_abs_diff(per_packet, raw.rowwise() - raw.colwise().mean()) <= 1e-12);
}

TEST_CASE("phase difference rejects bad input") {
  std::mt19937_64 rng(2);
  auto trace = random_trace(4, 4, 2, rng);
  CHECK_THROWS_AS(phase_difference_image(trace, AntennaLayout::tx_major(3, 3)), InvalidInput);
  CHECK_THROWS_AS(phase_difference_image(trace, AntennaLayout::tx_major(4, 1)), InvalidInput);
  trace.packets[1](2, 3) = 0.0;
  CHECK_THROWS_AS(phase_difference_image(trace, AntennaLayout::tx_major(2, 2)), InvalidInput);
}

TEST_CASE("injected common-mode phase error cancels in phase differences only") {
  auto scenario = ChannelScenario::reference(42, 4, 1);
  scenario.noise_snr_db = std::numeric_limits<double>::infinity();
  const auto trace = generate(scenario, 2, 200).front();

  // Raw per-antenna phase spread across packets, per (subcarrier, pair) row.
  double smallest_raw_std = std::numeric_limits<double>::infinity();
  for (int l = 0; l < trace.pairs(); ++l) {
    for (int s = 0; s < trace.subcarriers(); ++s) {
      // Unwrapped around the first packet so the spread is not a wrap artifact.
      std::vector<double> unwrapped;
      const double ref = std::arg(trace.packets[0](s, l));
      for (const auto& p : trace.packets) {
        unwrapped.push_back(ref + std::remainder(std::arg(p(s, l)) - ref, 2 * std::numbers::pi));
      }
      Matrix row = Eigen::Map<Matrix>(unwrapped.data(), 1, static_cast<Eigen::Index>(unwrapped.size()));
      smallest_raw_std = std::min(smallest_raw_std, std::sqrt(testing::row_population_variances(row)[0]));
    }
  }
  CHECK(smallest_raw_std >= 0.1);

  const auto diff = phase_difference_image(trace, scenario.layout, PhaseCentering::kNone).data;
  double largest_diff_std = 0.0;
  for (double v : testing::row_population_variances(diff)) largest_diff_std = std::max(largest_diff_std, std::sqrt(v));
  CHECK(largest_diff_std <= 1e-10);
}

TEST_CASE("row [1, 3] normalizes to [-1, 1]") {
  FeatureImage img;
  img.data = Matrix{{1.0, 3.0}};
  const auto out = normalize_image(img);
  CHECK(out.image.data(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(out.image.data(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out.params.mean(0) == 2.0);
  CHECK(out.params.scale(0) == 1.0);
}

TEST_CASE("normalization matches a two-pass mean and variance oracle") {
  std::mt19937_64 rng(17);
  FeatureImage img;
  img.data = 3.0 * testing::gaussian(5, 100, rng).array() + 7.0;
  const auto out = normalize_image(img);
  for (double m : testing::row_means(out.image.data)) CHECK(std::abs(m) <= 1e-12);
  for (double v : testing::row_population_variances(out.image.data)) CHECK(std::abs(v - 1.0) <= 1e-12);
  CHECK(testing::max_abs_diff(out.params.apply(img.data), out.image.data) == 0.0);
}

TEST_CASE("normalization is idempotent") {
  std::mt19937_64 rng(18);
  FeatureImage img;
  img.data = testing::gaussian(6, 40, rng);
  const auto once = normalize_image(img).image;
  const auto twice = normalize_image(once).image;
  CHECK(testing::max_abs_diff(once.data, twice.data) <= 1e-12);
}

TEST_CASE("constant rows are centered and flagged") {
  FeatureImage img;
  img.data = Matrix{{4.0, 4.0, 4.0}, {1.0, 2.0, 3.0}};
  const auto out = normalize_image(img);
  CHECK(out.params.constant_rows == std::vector<int>{0});
  CHECK(out.params.scale(0) == 1.0);
  CHECK(out.image.data.row(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normalization needs two samples") {
  FeatureImage img;
  img.data = Matrix::Ones(3, 1);
  CHECK_THROWS_AS(normalize_image(img), InvalidInput);
}

TEST_CASE("feature extraction is deterministic and keeps one column per packet") {
  std::mt19937_64 rng(9);
  const auto trace = random_trace(30, 9, 12, rng);
  const auto layout = AntennaLayout::tx_major(3, 3);
  CHECK(amplitude_image(trace).data == amplitude_image(trace).data);
  CHECK(phase_difference_image(trace, layout).data == phase_difference_image(trace, layout).data);
  CHECK(amplitude_image(trace).samples() == trace.packet_count());
  CHECK(phase_difference_image(trace, layout).samples() == trace.packet_count());
}

TEST_CASE("concat_samples joins columns and labels") {
  FeatureImage a;
  a.data = Matrix::Ones(2, 3);
  a.labels = {1, 1, 1};
  FeatureImage b;
  b.data = Matrix::Zero(2, 2);
  b.labels = {2, 2};
  const auto c = concat_samples({a, b});
  CHECK(c.samples() == 5);
  CHECK(c.labels == Labels{1, 1, 1, 2, 2});
  b.data = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(concat_samples({a, b}), InvalidInput);
}
