#include "cnls/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include <fmt/format.h>

#include "cnls/error.hpp"

namespace cnls {

namespace {

constexpr char magic[8] = {'C', 'N', 'L', 'S', 'F', 'L', 'D', '1'};

template <class T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

nlohmann::json grid_header(const Grid& grid) {
  nlohmann::json g;
  if (const auto* r = std::get_if<RadialGrid>(&grid)) {
    g["kind"] = "radial";
    g["n"] = r->size();
    g["r_max"] = r->r_max();
  } else {
    const auto& c = std::get<CartesianGrid3>(grid);
    g["kind"] = "cartesian";
    g["n"] = c.n_per_axis();
    g["half_width"] = c.half_width();
  }
  return g;
}

GridPtr grid_from_header(const nlohmann::json& g) {
  const std::string kind = g.at("kind");
  if (kind == "radial") return make_grid(RadialGrid(g.at("r_max").get<double>(), g.at("n").get<std::size_t>()));
  if (kind == "cartesian") {
    return make_grid(CartesianGrid3(g.at("half_width").get<double>(), g.at("n").get<std::size_t>()));
  }
  fail(ErrorKind::io, "snapshot: unknown grid kind '" + kind + "'");
}

}  // namespace

const ScalarField& Snapshot::field(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return fields[i];
  }
  fail(ErrorKind::io, "snapshot has no field named '" + name + "'");
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  if (snap.names.size() != snap.fields.size()) fail(ErrorKind::io, "snapshot: names and fields differ in count");
  nlohmann::json header;
  header["grid"] = grid_header(*snap.grid);
  header["fields"] = snap.names;
  header["nodes"] = node_count(*snap.grid);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(magic, sizeof(magic));
  const std::uint64_t len = to_little<std::uint64_t>(text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& f : snap.fields) {
    if (f.grid != snap.grid && f.size() != node_count(*snap.grid)) {
      fail(ErrorKind::io, "snapshot: field grid mismatch");
    }
    for (double x : f.values) {
      const double le = to_little(x);
      out.write(reinterpret_cast<const char*>(&le), sizeof(le));
    }
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open snapshot " + path.string());
  char head[8];
  in.read(head, sizeof(head));
  if (!in || std::memcmp(head, magic, sizeof(magic)) != 0) {
    fail(ErrorKind::io, path.string() + " is not a field snapshot");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  len = to_little(len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) fail(ErrorKind::io, "truncated snapshot header in " + path.string());
  const auto header = nlohmann::json::parse(text);

  Snapshot snap;
  snap.grid = grid_from_header(header.at("grid"));
  snap.names = header.at("fields").get<std::vector<std::string>>();
  const std::size_t n = node_count(*snap.grid);
  for (std::size_t f = 0; f < snap.names.size(); ++f) {
    std::vector<double> values(n);
    for (auto& x : values) {
      double le = 0.0;
      in.read(reinterpret_cast<char*>(&le), sizeof(le));
      x = to_little(le);
    }
    if (!in) fail(ErrorKind::io, "truncated field data in " + path.string());
    snap.fields.emplace_back(snap.grid, std::move(values));
  }
  return snap;
}

void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snap) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  const bool radial = is_radial(*snap.grid);
  out << (radial ? "r" : "x,y,z");
  for (const auto& name : snap.names) out << ',' << name;
  out << '\n';
  const std::size_t n = node_count(*snap.grid);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = node_point(*snap.grid, i);
    if (radial) {
      out << fmt::format("{:.17g}", p.x);
    } else {
      out << fmt::format("{:.17g},{:.17g},{:.17g}", p.x, p.y, p.z);
    }
    for (const auto& f : snap.fields) out << fmt::format(",{:.17g}", f[i]);
    out << '\n';
  }
}

}  // namespace cnls
