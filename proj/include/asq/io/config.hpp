#pragma once

// Run configuration: a TOML file with [manifold], [initial], [evolution],
// [blowup] and [output] sections plus a top-level seed.

#include <toml.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "asq/dynamics.hpp"
#include "asq/error.hpp"
#include "asq/ineq_lab.hpp"
#include "asq/io/text.hpp"

namespace asq::io {

struct InitialCondition {
  /// constant | cosine | random
  std::string type = "cosine";
  double value = 1.0;      // constant
  double mean = 1.0;       // cosine, random
  double amplitude = 0.5;  // cosine, random: sup of the fluctuation
  int mode = 1;            // cosine
  double decay = 2.0;      // random: power-law exponent
  int band = 8;            // random: band of the fluctuation
};

struct RunConfig {
  std::uint64_t seed = 0;
  ManifoldKind kind = ManifoldKind::Torus1D;
  int resolution = 256;
  InitialCondition initial;
  EvolutionConfig evolution;
  std::string output_dir = "run";
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"seed"}},
      {"manifold", {"kind", "resolution"}},
      {"initial", {"type", "value", "mean", "amplitude", "mode", "decay", "band"}},
      {"evolution",
       {"alpha", "kappa", "gamma", "eps_mollify", "dt_init", "cfl", "t_end", "dealias", "snapshot_every", "hs_order",
        "transport"}},
      {"blowup", {"grad_sup_max", "tail_fraction_max"}},
      {"output", {"dir"}},
  };
  return keys;
}

inline double number(const toml::node& n, const std::string& where) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError(where + " must be a number");
}

/// A number, or the string "auto" for an unset optional.
inline std::optional<double> optional_number(const toml::node& n, const std::string& where) {
  if (auto v = n.as_string(); v && v->get() == "auto") return std::nullopt;
  return number(n, where);
}

inline long long integer(const toml::node& n, const std::string& where) {
  if (auto v = n.as_integer()) return v->get();
  throw ConfigError(where + " must be an integer");
}

inline std::string string(const toml::node& n, const std::string& where) {
  if (auto v = n.as_string()) return v->get();
  throw ConfigError(where + " must be a string");
}

inline bool boolean(const toml::node& n, const std::string& where) {
  if (auto v = n.as_boolean()) return v->get();
  throw ConfigError(where + " must be a boolean");
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  try {
    ManifoldSpec::make(c.kind, c.resolution);
    c.evolution.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const auto& ic = c.initial;
  if (ic.type != "constant" && ic.type != "cosine" && ic.type != "random")
    throw ConfigError("initial.type must be constant, cosine or random");
  if (ic.mode < 0) throw ConfigError("initial.mode must be >= 0");
  if (ic.band < (c.kind == ManifoldKind::Sphere2D ? 8 : 1))
    throw ConfigError("initial.band must be >= 1 (>= 8 on the sphere)");
  const int band = ManifoldSpec::make(c.kind, c.resolution).band_limit();
  if (ic.type == "cosine" && ic.mode > band) throw ConfigError("initial.mode exceeds the band limit");
  if (ic.type == "random" && ic.band > band) throw ConfigError("initial.band exceeds the band limit");
  if (c.output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

inline RunConfig parse_config_string(std::string_view text, const std::string& source = "config") {
  toml::table tbl;
  try {
    tbl = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(e.description()) + " (" + source + ")");
  }
  const auto& keys = detail::known_keys();
  for (const auto& [k, node] : tbl) {
    const std::string key(k.str());
    if (node.is_table()) {
      auto it = keys.find(key);
      if (it == keys.end() || key.empty()) throw ConfigError("unknown section [" + key + "]");
      for (const auto& [kk, _] : *node.as_table())
        if (!it->second.count(std::string(kk.str()))) throw ConfigError("unknown key " + key + "." + std::string(kk.str()));
    } else if (!keys.at("").count(key)) {
      throw ConfigError("unknown key " + key);
    }
  }

  RunConfig c;
  auto get = [&](const std::string& sec, const std::string& key) -> const toml::node* {
    if (sec.empty()) return tbl.get(key);
    if (auto t = tbl[sec].as_table()) return t->get(key);
    return nullptr;
  };
  using namespace detail;
  if (auto n = get("", "seed")) {
    const auto s = integer(*n, "seed");
    if (s < 0) throw ConfigError("seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto n = get("manifold", "kind")) c.kind = parse_manifold_kind(string(*n, "manifold.kind"));
  if (auto n = get("manifold", "resolution")) c.resolution = static_cast<int>(integer(*n, "manifold.resolution"));

  auto& ic = c.initial;
  if (auto n = get("initial", "type")) ic.type = string(*n, "initial.type");
  if (auto n = get("initial", "value")) ic.value = number(*n, "initial.value");
  if (auto n = get("initial", "mean")) ic.mean = number(*n, "initial.mean");
  if (auto n = get("initial", "amplitude")) ic.amplitude = number(*n, "initial.amplitude");
  if (auto n = get("initial", "mode")) ic.mode = static_cast<int>(integer(*n, "initial.mode"));
  if (auto n = get("initial", "decay")) ic.decay = number(*n, "initial.decay");
  if (auto n = get("initial", "band")) ic.band = static_cast<int>(integer(*n, "initial.band"));

  auto& ev = c.evolution;
  if (auto n = get("evolution", "alpha")) ev.alpha = number(*n, "evolution.alpha");
  if (auto n = get("evolution", "kappa")) ev.kappa = number(*n, "evolution.kappa");
  if (auto n = get("evolution", "gamma")) ev.gamma = number(*n, "evolution.gamma");
  if (auto n = get("evolution", "eps_mollify")) ev.eps_mollify = optional_number(*n, "evolution.eps_mollify");
  if (auto n = get("evolution", "dt_init")) ev.dt_init = number(*n, "evolution.dt_init");
  if (auto n = get("evolution", "cfl")) ev.cfl = number(*n, "evolution.cfl");
  if (auto n = get("evolution", "t_end")) ev.t_end = number(*n, "evolution.t_end");
  if (auto n = get("evolution", "dealias")) ev.dealias = boolean(*n, "evolution.dealias");
  if (auto n = get("evolution", "snapshot_every"))
    ev.snapshot_every = static_cast<int>(integer(*n, "evolution.snapshot_every"));
  if (auto n = get("evolution", "hs_order")) ev.hs_order = optional_number(*n, "evolution.hs_order");
  if (auto n = get("evolution", "transport")) ev.transport = boolean(*n, "evolution.transport");
  if (auto n = get("blowup", "grad_sup_max")) ev.blowup.grad_sup_max = optional_number(*n, "blowup.grad_sup_max");
  if (auto n = get("blowup", "tail_fraction_max")) ev.blowup.tail_fraction_max = number(*n, "blowup.tail_fraction_max");
  if (auto n = get("output", "dir")) c.output_dir = string(*n, "output.dir");
  validate(c);
  return c;
}

inline RunConfig parse_config_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path);
  return parse_config_string(read_file(path), path);
}

/// Canonical TOML text: fixed section and key order, every default made
/// explicit, numbers in shortest round-trip form. Optional values that are
/// unset are written as the string "auto". The output directory is excluded
/// so that the hash names the experiment, not where it was written.
inline std::string canonical_text(const RunConfig& c) {
  const auto& ev = c.evolution;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("\"auto\""); };
  std::ostringstream o;
  o << "seed = " << c.seed << "\n\n";
  o << "[manifold]\nkind = \"" << to_string(c.kind) << "\"\nresolution = " << c.resolution << "\n\n";
  const auto& ic = c.initial;
  o << "[initial]\ntype = \"" << ic.type << "\"\n";
  if (ic.type == "constant") o << "value = " << format_double(ic.value) << "\n";
  if (ic.type != "constant")
    o << "mean = " << format_double(ic.mean) << "\namplitude = " << format_double(ic.amplitude) << "\n";
  if (ic.type == "cosine") o << "mode = " << ic.mode << "\n";
  if (ic.type == "random") o << "decay = " << format_double(ic.decay) << "\nband = " << ic.band << "\n";
  o << "\n[evolution]\n"
    << "alpha = " << format_double(ev.alpha) << "\n"
    << "kappa = " << format_double(ev.kappa) << "\n"
    << "gamma = " << format_double(ev.gamma) << "\n"
    << "eps_mollify = " << opt(ev.eps_mollify) << "\n"
    << "dt_init = " << format_double(ev.dt_init) << "\n"
    << "cfl = " << format_double(ev.cfl) << "\n"
    << "t_end = " << format_double(ev.t_end) << "\n"
    << "dealias = " << (ev.dealias ? "true" : "false") << "\n"
    << "snapshot_every = " << ev.snapshot_every << "\n"
    << "hs_order = " << opt(ev.hs_order) << "\n"
    << "transport = " << (ev.transport ? "true" : "false") << "\n\n";
  o << "[blowup]\ngrad_sup_max = " << opt(ev.blowup.grad_sup_max)
    << "\ntail_fraction_max = " << format_double(ev.blowup.tail_fraction_max) << "\n";
  return o.str();
}

inline std::string config_hash(const RunConfig& c) { return sha256_hex(canonical_text(c)); }

/// Initial datum on the configured grid.
inline NodalField initial_datum(const RunConfig& c) {
  const ManifoldSpec grid = ManifoldSpec::make(c.kind, c.resolution);
  const auto& ic = c.initial;
  if (ic.type == "constant") return sample(grid, [&](double, double) { return ic.value; });
  if (ic.type == "cosine") {
    const double k = ic.mode;
    switch (c.kind) {
      case ManifoldKind::Torus1D:
        return sample(grid, [&](double x, double) { return ic.mean + ic.amplitude * std::cos(k * x); });
      case ManifoldKind::Torus2D:
        return sample(grid, [&](double x, double y) {
          return ic.mean + 0.5 * ic.amplitude * (std::cos(k * x) + std::cos(k * y));
        });
      case ManifoldKind::Sphere2D:
        return sample(grid, [&](double th, double) {
          return ic.mean + ic.amplitude * std::legendre(ic.mode, std::cos(th));
        });
    }
  }
  SampleSpec spec;
  spec.manifold = grid;
  spec.seed = c.seed;
  spec.band_limit = ic.band;
  spec.amplitude_law = AmplitudeLaw::power_decay(ic.decay);
  auto g = draw_field(spec, 0);  // trial 0 is the power-law family
  if (is_torus(c.kind))
    g.set_coeff(0, 0, 0.0);
  else
    g.sh(0, 0) = 0.0;
  NodalField fluct = synthesize(g, grid);
  const double sup = norm_lp(fluct, INFINITY);
  for (double& v : fluct.values) v = ic.mean + ic.amplitude * (sup > 0.0 ? v / sup : 0.0);
  return fluct;
}

}  // namespace asq::io
