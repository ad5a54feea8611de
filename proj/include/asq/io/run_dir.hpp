#pragma once

// Run directory layout:
//   config.toml            canonical configuration
//   diagnostics.csv        one row per accepted step
//   snapshots/snap_NNNNNN.asfd (+ .json sidecar)
//   manifest.json          hash, status and inventory of the files above

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "asq/io/config.hpp"
#include "asq/io/formats.hpp"
#include "asq/io/json.hpp"

#ifndef ASQ_VERSION
#define ASQ_VERSION "0.0.0"
#endif

namespace asq::io {

namespace fs = std::filesystem;

struct FileEntry {
  std::string path;  // relative to the run directory, '/' separated
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string manifold;
  int resolution = 0;
  std::string code_version = ASQ_VERSION;
  double wall_clock_seconds = 0.0;
  std::string status;
  std::optional<double> t_trigger;
  std::vector<std::string> warnings;
  std::vector<FileEntry> files;
};

inline Json to_json(const RunManifest& m) {
  Json files = Json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  return {{"config_hash", m.config_hash},
          {"seed", m.seed},
          {"manifold", m.manifold},
          {"resolution", m.resolution},
          {"code_version", m.code_version},
          {"wall_clock_seconds", m.wall_clock_seconds},
          {"status", m.status},
          {"t_trigger", m.t_trigger ? Json(*m.t_trigger) : Json(nullptr)},
          {"warnings", m.warnings},
          {"files", files}};
}

inline RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.manifold = j.at("manifold").get<std::string>();
  m.resolution = j.at("resolution").get<int>();
  m.code_version = j.at("code_version").get<std::string>();
  m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  m.status = j.at("status").get<std::string>();
  if (!j.at("t_trigger").is_null()) m.t_trigger = j.at("t_trigger").get<double>();
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& f : j.at("files"))
    m.files.push_back({f.at("path").get<std::string>(), f.at("bytes").get<std::uintmax_t>(), f.at("sha256").get<std::string>()});
  return m;
}

inline std::string snapshot_name(std::size_t i) {
  std::ostringstream s;
  s << "snapshots/snap_" << std::setw(6) << std::setfill('0') << i;
  return s.str();
}

/// Writes every artifact of a finished run and returns the manifest (also
/// written). Artifacts of an earlier run in the same directory are removed
/// first, so the inventory is exactly what this run produced.
inline RunManifest write_run(const std::string& dir, const RunConfig& cfg, const RunOutput& out,
                             double wall_clock_seconds) {
  const fs::path root(dir);
  fs::create_directories(root);
  for (const char* name : {"config.toml", "diagnostics.csv", "manifest.json"}) fs::remove(root / name);
  fs::remove_all(root / "snapshots");
  fs::create_directories(root / "snapshots");

  RunManifest m;
  m.config_hash = config_hash(cfg);
  m.seed = cfg.seed;
  m.manifold = std::string(to_string(cfg.kind));
  m.resolution = cfg.resolution;
  m.wall_clock_seconds = wall_clock_seconds;
  m.status = std::string(to_string(out.status));
  if (!std::isnan(out.t_trigger)) m.t_trigger = out.t_trigger;
  m.warnings = out.warnings;

  auto emit = [&](const std::string& rel, const std::string& bytes) {
    write_file((root / rel).string(), bytes);
    m.files.push_back({rel, bytes.size(), sha256_hex(bytes)});
  };
  emit("config.toml", canonical_text(cfg));
  emit("diagnostics.csv", diagnostics_csv(out.diagnostics));
  const ManifoldSpec grid = ManifoldSpec::make(cfg.kind, cfg.resolution);
  for (std::size_t i = 0; i < out.snapshots.size(); ++i) {
    const auto& s = out.snapshots[i];
    const NodalField f = synthesize(s.theta, grid);
    emit(snapshot_name(i) + ".asfd", encode_snapshot(s.t, f));
    emit(snapshot_name(i) + ".json", snapshot_sidecar(s.t, f, s.step_count).dump(2) + "\n");
  }
  write_file((root / "manifest.json").string(), to_json(m).dump(2) + "\n");
  return m;
}

struct LoadedRun {
  RunConfig config;
  RunManifest manifest;
  std::vector<DiagnosticsRecord> diagnostics;
  std::vector<SimulationState> snapshots;
};

inline LoadedRun load_run(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_regular_file(root / "manifest.json")) throw ConfigError("no manifest.json in " + dir);
  LoadedRun run{parse_config_file((root / "config.toml").string()),
                manifest_from_json(Json::parse(read_file((root / "manifest.json").string()))),
                parse_diagnostics_csv(read_file((root / "diagnostics.csv").string())),
                {}};
  const int band = ManifoldSpec::make(run.config.kind, run.config.resolution).band_limit();
  for (const auto& f : run.manifest.files) {
    if (f.path.size() < 5 || f.path.substr(f.path.size() - 5) != ".asfd") continue;
    const auto snap = decode_snapshot(read_file((root / f.path).string()));
    const auto side = Json::parse(read_file((root / (f.path.substr(0, f.path.size() - 5) + ".json")).string()));
    run.snapshots.push_back({snap.t, analyze(snap.field, band), side.at("step").get<long>()});
  }
  std::stable_sort(run.snapshots.begin(), run.snapshots.end(),
                   [](const SimulationState& a, const SimulationState& b) { return a.t < b.t; });
  return run;
}

struct InventoryCheck {
  std::vector<std::string> missing;     // listed but absent or altered
  std::vector<std::string> orphans;     // present but unlisted
  bool ok() const { return missing.empty() && orphans.empty(); }
};

/// Compares the manifest inventory with the files on disk (manifest.json
/// itself excluded).
inline InventoryCheck check_inventory(const std::string& dir) {
  const fs::path root(dir);
  const auto m = manifest_from_json(Json::parse(read_file((root / "manifest.json").string())));
  InventoryCheck c;
  std::set<std::string> listed;
  for (const auto& f : m.files) {
    listed.insert(f.path);
    const fs::path p = root / f.path;
    if (!fs::is_regular_file(p) || fs::file_size(p) != f.bytes || sha256_hex(read_file(p.string())) != f.sha256)
      c.missing.push_back(f.path);
  }
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    if (rel != "manifest.json" && !listed.count(rel)) c.orphans.push_back(rel);
  }
  std::sort(c.orphans.begin(), c.orphans.end());
  return c;
}

}  // namespace asq::io
