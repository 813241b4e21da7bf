#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cnls/grid.hpp"

namespace cnls {

/// A named set of fields on one grid, as stored on disk.
///
/// Binary layout: the 8-byte magic "CNLSFLD1", a little-endian uint64 header
/// length, a UTF-8 JSON header {grid: {kind, n, r_max | half_width}, fields:
/// [names], nodes}, then one little-endian float64 array per field, in header
/// order.
struct Snapshot {
  GridPtr grid;
  std::vector<std::string> names;
  std::vector<ScalarField> fields;

  const ScalarField& field(const std::string& name) const;
};

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot read_snapshot(const std::filesystem::path& path);

/// CSV export: node coordinate(s) followed by one column per field.
void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snap);

}  // namespace cnls
