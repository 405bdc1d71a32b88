#pragma once

// Multi-view labeled CSI collections and the cell grid they live on.

#include "mudloc/types.hpp"

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace mudloc {

/// Cell id -> planar center (meters). Ids are 1..C.
struct GridGeometry {
  std::map<int, Point2> cells;
  double pitch = 0.5;

  /// Row-major square cells; columns defaults to ceil(sqrt(count)).
  static GridGeometry regular(int count, double pitch, int columns = 0);

  int cell_count() const { return static_cast<int>(cells.size()); }
  bool contains(int cell) const { return cells.count(cell) != 0; }
  const Point2& center(int cell) const;
  double distance(int a, int b) const;
  /// Pitch > 0 and ids exactly 1..C.
  void validate() const;

  bool operator==(const GridGeometry&) const = default;
};

/// traces[cell][v] is the trace seen by view (AP) v + 1 while the subject
/// stands in that cell. Packet j of every view of one cell is one sample.
struct Dataset {
  AntennaLayout layout;
  GridGeometry geometry;
  int views = 0;
  std::map<int, std::vector<CsiTrace>> traces;

  int packets(int cell) const;
  int subcarriers() const;
  void validate() const;
  /// Copy restricted to the first k views.
  Dataset first_views(int k) const;
};

enum class Split { kTrain, kValidation, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// One multi-view sample: packet index within a cell's traces.
struct SampleRef {
  int cell = 0;
  int packet = 0;

  auto operator<=>(const SampleRef&) const = default;
};

using SampleSet = std::vector<SampleRef>;

/// Every packet of every cell, ordered by (cell, packet).
SampleSet all_samples(const Dataset& data);

}  // namespace mudloc
