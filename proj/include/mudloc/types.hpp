#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mudloc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Point2 = Eigen::Vector2d;

/// Class labels are 1-based cell ids; an empty vector means "unlabeled".
using Labels = std::vector<int>;

/// Malformed caller input: shapes, labels, flags.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown, e.g. a pencil that stays indefinite after ridging.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// On-disk data that cannot be decoded.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordering of the Tx-Rx antenna pairs stored as CsiTrace columns.
struct AntennaLayout {
  int n_tx = 0;
  int n_rx = 0;
  /// pair_order[l] = (tx, rx), zero-based, for column l.
  std::vector<std::pair<int, int>> pair_order;

  /// Column l = tx * n_rx + rx.
  static AntennaLayout tx_major(int n_tx, int n_rx);

  int pair_count() const { return static_cast<int>(pair_order.size()); }
  /// Column holding (tx, rx); throws if absent.
  int column_of(int tx, int rx) const;
  void validate() const;

  bool operator==(const AntennaLayout&) const = default;
};

/// CSI captured on one AP link: one S x L complex matrix per packet.
struct CsiTrace {
  int ap_id = 1;
  std::optional<int> cell_id;
  std::vector<ComplexMatrix> packets;
  std::string carrier_band = "5GHz";

  int subcarriers() const { return packets.empty() ? 0 : static_cast<int>(packets.front().rows()); }
  int pairs() const { return packets.empty() ? 0 : static_cast<int>(packets.front().cols()); }
  int packet_count() const { return static_cast<int>(packets.size()); }

  /// Non-empty, uniform packet shape, S >= 1, L >= 1.
  void validate() const;
};

enum class Modality { kAmplitude, kPhaseDifference };

std::string to_string(Modality m);

/// Real feature matrix: rows are features, columns are packet samples.
struct FeatureImage {
  Matrix data;
  int view = 1;
  Modality modality = Modality::kAmplitude;
  Labels labels;

  int dim() const { return static_cast<int>(data.rows()); }
  int samples() const { return static_cast<int>(data.cols()); }
  void validate() const;
};

}  // namespace mudloc
