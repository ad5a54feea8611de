#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include <unistd.h>

#include "asq/io/config.hpp"
#include "asq/io/formats.hpp"
#include "asq/io/run_dir.hpp"

using namespace asq;
using namespace asq::io;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCcf = R"(
seed = 7

[manifold]
kind = "torus1d"
resolution = 64

[initial]
type = "cosine"
mean = 1.0
amplitude = 0.5

[evolution]
alpha = 0.0
dt_init = 2e-3
t_end = 0.05
snapshot_every = 5
)";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("asq_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

}  // namespace

// ---- text ---------------------------------------------------------------------

TEST(Text, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Text, DoubleTextRoundTrips) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_TRUE(std::isnan(parse_double(format_double(NAN))));
  EXPECT_EQ(parse_double(format_double(-INFINITY)), -INFINITY);
  EXPECT_THROW(parse_double("1.0x"), std::runtime_error);
}

// ---- config -------------------------------------------------------------------

TEST(Config, ParsesSectionsAndDefaults) {
  const auto c = parse_config_string(kCcf);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.kind, ManifoldKind::Torus1D);
  EXPECT_EQ(c.resolution, 64);
  EXPECT_EQ(c.initial.type, "cosine");
  EXPECT_EQ(c.evolution.snapshot_every, 5);
  EXPECT_DOUBLE_EQ(c.evolution.t_end, 0.05);
  EXPECT_FALSE(c.evolution.eps_mollify.has_value());
  EXPECT_EQ(c.output_dir, "run");
}

TEST(Config, RejectsUnknownKeysAndSections) {
  EXPECT_THROW(parse_config_string(std::string(kCcf) + "bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[evolution]\nalpah = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[extras]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("seed = 1\nunrelated = 2\n"), ConfigError);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse_config_string("[evolution]\nalpha = 1.0\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[evolution]\nalpha = \"zero\"\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[manifold]\nkind = \"klein\"\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[manifold]\nresolution = 3\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[initial]\ntype = \"gaussian\"\n"), ConfigError);
  EXPECT_THROW(parse_config_string("seed = -1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[manifold\n"), ConfigError);
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(parse_config_file("/nonexistent/asq.toml"), ConfigError);
}

TEST(Config, HashIgnoresKeyOrderAndOutputDir) {
  const auto a = parse_config_string(kCcf);
  const auto b = parse_config_string(R"(
seed = 7

[evolution]
snapshot_every = 5
t_end = 0.05
dt_init = 0.002

[output]
dir = "elsewhere"

[initial]
amplitude = 0.5
type = "cosine"

[manifold]
resolution = 64
kind = "torus1d"
)");
  EXPECT_EQ(b.output_dir, "elsewhere");
  EXPECT_EQ(config_hash(a), config_hash(b));
  auto c = b;
  c.seed = 8;
  EXPECT_NE(config_hash(a), config_hash(c));
  // A key after a table header belongs to that table.
  EXPECT_THROW(parse_config_string("[manifold]\nkind = \"torus1d\"\nseed = 7\n"), ConfigError);
}

TEST(Config, CanonicalTextReparsesToTheSameHash) {
  for (const char* extra : {"", "[evolution]\neps_mollify = 0.01\nhs_order = \"auto\"\n", "[blowup]\ngrad_sup_max = 5.0\n"}) {
    const auto c = parse_config_string(std::string(extra) + "\n[manifold]\nkind = \"sphere\"\nresolution = 32\n");
    const auto again = parse_config_string(canonical_text(c));
    EXPECT_EQ(config_hash(c), config_hash(again));
    EXPECT_EQ(canonical_text(c), canonical_text(again));
  }
}

TEST(Config, InitialDataMatchTheirDescriptions) {
  auto c = parse_config_string(kCcf);
  const auto f = initial_datum(c);
  const auto nodes = grid_nodes(f.grid);
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(f.values[j], 1.0 + 0.5 * std::cos(nodes[j].first), 1e-15);

  c.kind = ManifoldKind::Sphere2D;
  c.resolution = 32;
  c.initial.type = "random";
  c.initial.band = 8;
  const auto r = initial_datum(c);
  EXPECT_NEAR(r.max() - 1.0 > 1.0 - r.min() ? r.max() - 1.0 : 1.0 - r.min(), 0.5, 1e-12);
  EXPECT_EQ(canonical_text(c).find("mode"), std::string::npos);
}

// ---- CSV and ASFD ---------------------------------------------------------------

TEST(Formats, DiagnosticsCsvRoundTripsExactly) {
  std::vector<DiagnosticsRecord> rows;
  for (int i = 0; i < 20; ++i)
    rows.push_back({0.1 * i, 1.0 / 3 + i, std::sqrt(2.0) * i, std::exp(0.1 * i), -1e-300, 1e300, std::acos(-1.0),
                    i == 3 ? INFINITY : 0.25, 1e-17});
  const auto text = diagnostics_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), kCsvHeader);
  const auto back = parse_diagnostics_csv(text);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].t, rows[i].t);
    EXPECT_EQ(back[i].l1, rows[i].l1);
    EXPECT_EQ(back[i].hdot_half_alpha, rows[i].hdot_half_alpha);
    EXPECT_EQ(back[i].hs_norm, rows[i].hs_norm);
    EXPECT_EQ(back[i].tail_fraction, rows[i].tail_fraction);
  }
  EXPECT_THROW(parse_diagnostics_csv("t,l1\n"), StructuralError);
  EXPECT_THROW(parse_diagnostics_csv(std::string(kCsvHeader) + "\n1,2,3\n"), StructuralError);
}

TEST(Formats, SnapshotRoundTripsBitForBit) {
  for (auto [kind, res] : {std::pair{ManifoldKind::Torus1D, 32}, {ManifoldKind::Torus2D, 16}, {ManifoldKind::Sphere2D, 32}}) {
    const auto grid = ManifoldSpec::make(kind, res);
    const auto f = sample(grid, [](double a, double b) { return std::sin(3 * a) * std::cos(b) + 1e-310; });
    const auto bytes = encode_snapshot(0.125, f);
    EXPECT_EQ(bytes.size(), 4 + 3 + 4 + 8 + 8 * f.size());
    const auto s = decode_snapshot(bytes);
    EXPECT_EQ(s.t, 0.125);
    EXPECT_EQ(s.field.grid.kind, kind);
    EXPECT_EQ(s.field.grid.resolution, res);
    EXPECT_EQ(s.field.values, f.values);
  }
}

TEST(Formats, SnapshotHeaderIsLittleEndian) {
  const auto grid = ManifoldSpec::make(ManifoldKind::Torus2D, 16);
  const auto bytes = encode_snapshot(1.0, sample(grid, [](double, double) { return 0.0; }));
  EXPECT_EQ(bytes.substr(0, 4), "ASFD");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], static_cast<char>(ManifoldKind::Torus2D));
  EXPECT_EQ(bytes[6], 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 16u);
  EXPECT_EQ(bytes[8], 0);
  // 1.0 = 0x3FF0000000000000
  EXPECT_EQ(static_cast<unsigned char>(bytes[18]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(bytes[17]), 0xF0u);
}

TEST(Formats, SnapshotRejectsCorruption) {
  const auto grid = ManifoldSpec::make(ManifoldKind::Torus1D, 16);
  const auto good = encode_snapshot(0.0, sample(grid, [](double x, double) { return x; }));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_snapshot(bad), StructuralError);
  EXPECT_THROW(decode_snapshot(good.substr(0, good.size() - 1)), StructuralError);
  EXPECT_THROW(decode_snapshot(good.substr(0, 10)), StructuralError);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(decode_snapshot(bad), StructuralError);
  bad = good;
  bad[6] = 2;
  EXPECT_THROW(decode_snapshot(bad), StructuralError);
}

// ---- run directory --------------------------------------------------------------

TEST(RunDir, WritesLoadsAndInventoriesARun) {
  const auto dir = scratch("run");
  const auto cfg = parse_config_string(kCcf);
  const auto out = run(initial_datum(cfg), cfg.evolution);
  ASSERT_EQ(out.status, TerminationStatus::Resolved);
  const auto m = write_run(dir.string(), cfg, out, 0.5);

  EXPECT_EQ(m.config_hash, config_hash(cfg));
  EXPECT_EQ(m.status, "Resolved");
  EXPECT_FALSE(m.t_trigger.has_value());
  EXPECT_EQ(m.files.size(), 2 + 2 * out.snapshots.size());
  EXPECT_TRUE(check_inventory(dir.string()).ok());

  const auto loaded = load_run(dir.string());
  EXPECT_EQ(config_hash(loaded.config), m.config_hash);
  ASSERT_EQ(loaded.diagnostics.size(), out.diagnostics.size());
  EXPECT_EQ(loaded.diagnostics.back().grad_sup, out.diagnostics.back().grad_sup);
  ASSERT_EQ(loaded.snapshots.size(), out.snapshots.size());
  for (std::size_t i = 0; i < out.snapshots.size(); ++i) {
    EXPECT_EQ(loaded.snapshots[i].t, out.snapshots[i].t);
    EXPECT_EQ(loaded.snapshots[i].step_count, out.snapshots[i].step_count);
    const auto a = synthesize(out.snapshots[i].theta, ManifoldSpec::make(cfg.kind, cfg.resolution));
    const auto b = synthesize(loaded.snapshots[i].theta, a.grid);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a.values[j], b.values[j], 1e-13);
  }
  fs::remove_all(dir);
}

TEST(RunDir, InventoryDetectsTamperingAndStrays) {
  const auto dir = scratch("tamper");
  const auto cfg = parse_config_string(kCcf);
  write_run(dir.string(), cfg, run(initial_datum(cfg), cfg.evolution), 0.0);
  write_file((dir / "stray.txt").string(), "x");
  auto c = check_inventory(dir.string());
  EXPECT_EQ(c.orphans, std::vector<std::string>{"stray.txt"});
  EXPECT_TRUE(c.missing.empty());

  std::string csv = read_file((dir / "diagnostics.csv").string());
  csv.back() = ' ';
  write_file((dir / "diagnostics.csv").string(), csv);
  c = check_inventory(dir.string());
  EXPECT_EQ(c.missing, std::vector<std::string>{"diagnostics.csv"});
  fs::remove_all(dir);
}

TEST(RunDir, RewritingRemovesStaleSnapshots) {
  const auto dir = scratch("rewrite");
  auto cfg = parse_config_string(kCcf);
  write_run(dir.string(), cfg, run(initial_datum(cfg), cfg.evolution), 0.0);
  const auto before = std::distance(fs::directory_iterator(dir / "snapshots"), fs::directory_iterator{});
  cfg.evolution.t_end = 0.01;
  write_run(dir.string(), cfg, run(initial_datum(cfg), cfg.evolution), 0.0);
  const auto after = std::distance(fs::directory_iterator(dir / "snapshots"), fs::directory_iterator{});
  EXPECT_LT(after, before);
  EXPECT_TRUE(check_inventory(dir.string()).ok());
  fs::remove_all(dir);
}
