#pragma once

// Diagnostics CSV and ASFD snapshot files.
//
// ASFD layout (little endian): "ASFD", u8 version = 1, u8 manifold kind,
// u8 dimension n, u32 resolution, f64 time, then the nodal values as f64 in
// row-major grid order.

#include <bit>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asq/dynamics.hpp"
#include "asq/error.hpp"
#include "asq/io/text.hpp"

namespace asq::io {

inline constexpr std::string_view kCsvHeader = "t,l1,l2,linf,min_val,hdot,grad_sup,hs_norm,tail_fraction";

inline std::string diagnostics_csv(std::span<const DiagnosticsRecord> rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    const double v[] = {r.t, r.l1, r.l2, r.linf, r.min_val, r.hdot_half_alpha, r.grad_sup, r.hs_norm, r.tail_fraction};
    for (int i = 0; i < 9; ++i) {
      if (i) out += ',';
      out += format_double(v[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<DiagnosticsRecord> parse_diagnostics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw StructuralError("diagnostics CSV: unexpected header");
  std::vector<DiagnosticsRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v[9];
    std::size_t pos = 0;
    for (int i = 0; i < 9; ++i) {
      const auto next = line.find(',', pos);
      if ((i < 8) == (next == std::string::npos)) throw StructuralError("diagnostics CSV: expected 9 columns");
      v[i] = parse_double(std::string_view(line).substr(pos, next == std::string::npos ? std::string::npos : next - pos));
      pos = next + 1;
    }
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return rows;
}

namespace detail {
template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
template <class U>
U get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw StructuralError("ASFD: truncated file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}
}  // namespace detail

struct Snapshot {
  double t = 0.0;
  NodalField field;
};

inline std::string encode_snapshot(double t, const NodalField& f) {
  std::string out = "ASFD";
  out += static_cast<char>(1);
  out += static_cast<char>(static_cast<std::uint8_t>(f.grid.kind));
  out += static_cast<char>(static_cast<std::uint8_t>(f.grid.dimension()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.resolution));
  detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(t));
  out.reserve(out.size() + 8 * f.size());
  for (double v : f.values) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline Snapshot decode_snapshot(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "ASFD") throw StructuralError("ASFD: bad magic");
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint8_t>(bytes, pos);
  if (version != 1) throw StructuralError("ASFD: unsupported version " + std::to_string(version));
  const auto kind = detail::get_le<std::uint8_t>(bytes, pos);
  if (kind > 2) throw StructuralError("ASFD: unknown manifold kind");
  const auto dim = detail::get_le<std::uint8_t>(bytes, pos);
  const auto res = detail::get_le<std::uint32_t>(bytes, pos);
  const double t = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes, pos));
  const ManifoldSpec grid = ManifoldSpec::make(static_cast<ManifoldKind>(kind), static_cast<int>(res));
  if (grid.dimension() != dim) throw StructuralError("ASFD: dimension does not match manifold");
  if (bytes.size() - pos != 8 * grid.grid_size()) throw StructuralError("ASFD: payload size does not match grid");
  std::vector<double> values(grid.grid_size());
  for (double& v : values) v = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes, pos));
  return {t, NodalField(grid, std::move(values))};
}

inline nlohmann::ordered_json snapshot_sidecar(double t, const NodalField& f, long step) {
  return {{"magic", "ASFD"},
          {"version", 1},
          {"manifold", std::string(to_string(f.grid.kind))},
          {"manifold_code", static_cast<int>(f.grid.kind)},
          {"n", f.grid.dimension()},
          {"resolution", f.grid.resolution},
          {"rows", f.grid.rows()},
          {"cols", f.grid.cols()},
          {"time", t},
          {"step", step},
          {"byte_order", "little"}};
}

}  // namespace asq::io
