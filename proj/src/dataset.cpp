#include "mudloc/dataset.hpp"

#include <cmath>

namespace mudloc {

GridGeometry GridGeometry::regular(int count, double pitch, int columns) {
  if (count < 1) throw InvalidInput("grid needs at least one cell");
  if (!(pitch > 0.0)) throw InvalidInput("grid pitch must be > 0");
  if (columns <= 0) columns = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  GridGeometry g;
  g.pitch = pitch;
  for (int c = 1; c <= count; ++c) {
    const int col = (c - 1) % columns;
    const int row = (c - 1) / columns;
    g.cells[c] = Point2((col + 0.5) * pitch, (row + 0.5) * pitch);
  }
  return g;
}

const Point2& GridGeometry::center(int cell) const {
  const auto it = cells.find(cell);
  if (it == cells.end()) throw InvalidInput("unknown cell id " + std::to_string(cell));
  return it->second;
}

double GridGeometry::distance(int a, int b) const {
  if (a == b) {
    center(a);
    return 0.0;
  }
  return (center(a) - center(b)).norm();
}

void GridGeometry::validate() const {
  if (!(pitch > 0.0)) throw InvalidInput("grid pitch must be > 0");
  if (cells.empty()) throw InvalidInput("grid has no cells");
  int expected = 1;
  for (const auto& [id, _] : cells) {
    if (id != expected++) throw InvalidInput("cell ids must be exactly 1..C");
  }
}

int Dataset::packets(int cell) const {
  const auto it = traces.find(cell);
  if (it == traces.end() || it->second.empty()) {
    throw InvalidInput("dataset has no traces for cell " + std::to_string(cell));
  }
  return it->second.front().packet_count();
}

int Dataset::subcarriers() const {
  if (traces.empty() || traces.begin()->second.empty()) return 0;
  return traces.begin()->second.front().subcarriers();
}

void Dataset::validate() const {
  geometry.validate();
  layout.validate();
  if (views < 1) throw InvalidInput("dataset needs at least one view");
  for (const auto& [cell, _] : geometry.cells) {
    if (!traces.count(cell)) throw InvalidInput("dataset is missing cell " + std::to_string(cell));
  }
  const int s = subcarriers();
  for (const auto& [cell, per_view] : traces) {
    if (!geometry.contains(cell)) throw InvalidInput("trace for cell outside grid: " + std::to_string(cell));
    if (static_cast<int>(per_view.size()) != views) {
      throw InvalidInput("cell " + std::to_string(cell) + " has " + std::to_string(per_view.size()) +
                         " views, expected " + std::to_string(views));
    }
    const int n = per_view.front().packet_count();
    for (const auto& t : per_view) {
      t.validate();
      if (t.packet_count() != n) {
        throw InvalidInput("cell " + std::to_string(cell) + ": views disagree on packet count");
      }
      if (t.subcarriers() != s || t.pairs() != layout.pair_count()) {
        throw InvalidInput("cell " + std::to_string(cell) + ": packet shape differs from dataset");
      }
    }
  }
}

Dataset Dataset::first_views(int k) const {
  if (k < 1 || k > views) {
    throw InvalidInput("requested " + std::to_string(k) + " views, dataset has " + std::to_string(views));
  }
  Dataset out{layout, geometry, k, {}};
  for (const auto& [cell, per_view] : traces) {
    out.traces[cell] = std::vector<CsiTrace>(per_view.begin(), per_view.begin() + k);
  }
  return out;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kValidation;
  if (s == "test") return Split::kTest;
  throw FormatError("unknown split tag '" + s + "'");
}

SampleSet all_samples(const Dataset& data) {
  SampleSet out;
  for (const auto& [cell, per_view] : data.traces) {
    for (int j = 0; j < per_view.front().packet_count(); ++j) out.push_back({cell, j});
  }
  return out;
}

}  // namespace mudloc
