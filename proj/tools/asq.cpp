// asq: simulate | ladder | certify | verify | spectra
//
// Exit codes: 0 success (including a BlowupSuspected run), 1 informative
// negative result (virial residual over tolerance, certificate does not hold,
// verification violations), 2 bad input, 3 numerical failure, 4 a ladder
// window without snapshots.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "asq/degiorgi.hpp"
#include "asq/io/config.hpp"
#include "asq/io/json.hpp"
#include "asq/io/run_dir.hpp"
#include "asq/suites.hpp"

namespace fs = std::filesystem;
using namespace asq;
using namespace asq::io;

namespace {

constexpr int kOk = 0, kNegative = 1, kBadInput = 2, kNumerical = 3, kEmptyWindow = 4;

void emit(const Json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    if (const auto dir = fs::path(out).parent_path(); !dir.empty()) fs::create_directories(dir);
    write_file(out, text);
  }
}

int cmd_simulate(const std::string& config_path, const std::string& out_override) {
  RunConfig cfg;
  try {
    cfg = parse_config_file(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadInput;
  }
  const std::string dir = out_override.empty() ? cfg.output_dir : out_override;
  const auto t0 = std::chrono::steady_clock::now();
  const RunOutput out = run(initial_datum(cfg), cfg.evolution);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto m = write_run(dir, cfg, out, wall);

  std::cout << "status " << m.status << "  steps " << out.diagnostics.size() - 1 << "  t "
            << format_double(out.diagnostics.back().t);
  if (m.t_trigger) std::cout << "  t_trigger " << format_double(*m.t_trigger);
  std::cout << "  snapshots " << out.snapshots.size() << "  -> " << dir << "\n";
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
  return out.status == TerminationStatus::NumericalFailure ? kNumerical : kOk;
}

int cmd_ladder(const std::string& dir, std::optional<double> K, double t_star, int k_max, std::optional<double> tol,
               const std::string& out) {
  LoadedRun run;
  try {
    run = load_run(dir);
  } catch (const std::exception& e) {
    std::cerr << "cannot load run: " << e.what() << "\n";
    return kBadInput;
  }
  if (run.snapshots.empty() || run.diagnostics.empty()) {
    std::cerr << "run has no snapshots\n";
    return kEmptyWindow;
  }
  const double alpha = run.config.evolution.alpha;
  const double k_top = K.value_or(run.diagnostics.front().linf);
  EnergySeries series;
  try {
    series = measure_ladder(run.snapshots, alpha, k_top, t_star, k_max);
  } catch (const ResolutionError& e) {
    std::cerr << e.what() << "\n";
    return kEmptyWindow;
  } catch (const DomainError& e) {
    std::cerr << e.what() << "\n";
    return kBadInput;
  }
  std::vector<SimulationState> window;
  for (const auto& s : run.snapshots)
    if (s.t <= t_star) window.push_back(s);
  const auto virial = check_virial(window, TruncationLadder(k_top, k_max), alpha, tol);

  bool dissipation_ok = true;
  for (const auto& e : series.entries)
    if (e.D_k > 1.05 * e.dissipation_bound) dissipation_ok = false;
  Json j{{"run", dir},
         {"config_hash", run.manifest.config_hash},
         {"energy_series", to_json(series)},
         {"dissipation_within_5pct", dissipation_ok},
         {"virial", to_json(virial)}};
  emit(j, out);
  return virial.passed ? kOk : kNegative;
}

int cmd_certify(const std::string& params_path, const std::string& out) {
  double eps0, linf0, alpha, C, Cprime;
  int n, k_max;
  TStarRule rule = TStarRule::Linear;
  std::string c_source = "params";
  try {
    const auto p = Json::parse(read_file(params_path));
    eps0 = p.at("eps0").get<double>();
    n = p.at("n").get<int>();
    linf0 = p.value("linf0", 1.0);
    alpha = p.value("alpha", 0.0);
    k_max = p.value("k_max", 60);
    if (p.contains("C")) {
      C = p.at("C").get<double>();
    } else if (p.contains("report")) {
      fs::path rp = p.at("report").get<std::string>();
      if (rp.is_relative()) rp = fs::path(params_path).parent_path() / rp;
      C = report_from_json(Json::parse(read_file(rp.string()))).fitted_constant;
      c_source = rp.string();
    } else {
      throw ConfigError("either C or report must be given");
    }
    const std::string r = p.value("rule", std::string("linear"));
    if (r == "linear") rule = TStarRule::Linear;
    else if (r == "squared") rule = TStarRule::Squared;
    else if (r == "unit") rule = TStarRule::Unit;
    else throw ConfigError("rule must be linear, squared or unit");
    Cprime = rule == TStarRule::Unit ? p.value("Cprime", 0.0) : p.at("Cprime").get<double>();
  } catch (const std::exception& e) {
    std::cerr << "params error: " << e.what() << "\n";
    return kBadInput;
  }
  Certificate cert;
  try {
    cert = certify(eps0, linf0, n, alpha, C, Cprime, rule, k_max);
  } catch (const DomainError& e) {
    std::cerr << "params error: " << e.what() << "\n";
    return kBadInput;
  }
  Json j = to_json(cert);
  j["inputs"] = {{"eps0", eps0}, {"linf0", linf0}, {"n", n},       {"alpha", alpha},
                 {"C", C},       {"C_source", c_source}, {"k_max", k_max}};
  emit(j, out);
  return cert.holds ? kOk : kNegative;
}

std::string file_stem(std::string name) {
  for (char& c : name)
    if (c == '/' || c == '=') c = '_';
  return name;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, long trials, const std::string& out_dir) {
  if (trials < 1) {
    std::cerr << "trials must be >= 1\n";
    return kBadInput;
  }
  if (!out_dir.empty()) fs::create_directories(out_dir);
  SuiteOutput out;
  Json summary = Json::array();
  run_suite(suite, seed, trials, out, [&](const InequalityReport& r) {
    const bool ok = report_passed(r);
    std::cout << (ok ? "ok   " : "FAIL ") << r.name << "  worst " << format_double(r.worst_ratio) << "  C "
              << format_double(r.fitted_constant) << "  violations " << r.violations;
    if (r.revalidation)
      std::cout << "  revalidation " << r.revalidation->violations << "/" << r.revalidation->trials;
    std::cout << "\n" << std::flush;
    if (!out_dir.empty()) write_file((fs::path(out_dir) / (file_stem(r.name) + ".json")).string(), to_json(r).dump(2) + "\n");
    summary.push_back({{"name", r.name}, {"passed", ok}, {"violations", r.violations}});
  });
  if (!out_dir.empty()) {
    const fs::path d(out_dir);
    for (const auto& t : out.hormander)
      write_file((d / ("hormander_table_" + std::string(to_string(t.kind)) + ".json")).string(), to_json(t).dump(2) + "\n");
    for (const auto& w : out.weyl)
      write_file((d / ("weyl_table_" + std::string(to_string(w.kind)) + ".json")).string(), to_json(w).dump(2) + "\n");
    for (const auto& r : out.riccati) {
      Json fits = Json::array();
      for (std::size_t i = 0; i < r.fits.size(); ++i) {
        Json f = to_json(r.fits[i]);
        f["resolution"] = r.resolutions[i];
        fits.push_back(f);
      }
      write_file((d / "riccati_fits.json").string(), Json{{"spread", r.spread}, {"fits", fits}}.dump(2) + "\n");
    }
    write_file((d / "summary.json").string(),
               Json{{"suite", suite}, {"seed", seed}, {"trials", trials}, {"passed", out.passed()}, {"reports", summary}}
                       .dump(2) +
                   "\n");
  }
  return out.passed() ? kOk : kNegative;
}

int cmd_spectra(const std::string& kind_name, int band, bool json) {
  const ManifoldKind kind = parse_manifold_kind(kind_name);
  long long cumulative = 0;
  Json rows = Json::array();
  if (!json) std::cout << "lambda,lambda_squared,multiplicity,cumulative\n";
  for (const auto& e : eigenvalues(kind, band)) {
    cumulative += e.multiplicity;
    if (json) {
      rows.push_back({{"lambda", e.lambda}, {"lambda_squared", e.lambda * e.lambda}, {"multiplicity", e.multiplicity},
                      {"cumulative", cumulative}});
    } else {
      std::cout << format_double(e.lambda) << "," << format_double(std::round(e.lambda * e.lambda)) << ","
                << e.multiplicity << "," << cumulative << "\n";
    }
  }
  if (json) std::cout << Json{{"manifold", std::string(to_string(kind))}, {"band", band}, {"eigenvalues", rows}}.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active scalar simulator and verification harness"};
  app.set_version_flag("--version", std::string(ASQ_VERSION));
  app.require_subcommand(1);

  std::string config, out_dir;
  auto* sim = app.add_subcommand("simulate", "Run a configured evolution and write a run directory");
  sim->add_option("config", config, "TOML run configuration")->required();
  sim->add_option("--out", out_dir, "Output directory (default: [output] dir)");

  std::string run_dir, ladder_out;
  std::optional<double> K, tol;
  double t_star = 0.0;
  int k_max = 8;
  auto* lad = app.add_subcommand("ladder", "Truncation energies and virial residuals of a recorded run");
  lad->add_option("run_dir", run_dir, "Run directory written by simulate")->required();
  lad->add_option("--K", K, "Top truncation level (default: sup of the initial datum)");
  lad->add_option("--t-star", t_star, "Ladder horizon")->required()->check(CLI::PositiveNumber);
  lad->add_option("--k-max", k_max, "Highest level index")->check(CLI::NonNegativeNumber);
  lad->add_option("--tol", tol, "Virial residual tolerance (default: 1e-3 of the initial dissipation)");
  lad->add_option("--out", ladder_out, "Write JSON here instead of stdout");

  std::string params, cert_out;
  auto* cer = app.add_subcommand("certify", "Check the smallness and recurrence conditions for blow-up");
  cer->add_option("params", params, "JSON with eps0, n, C (or report), Cprime, optional linf0, alpha, rule, k_max")
      ->required();
  cer->add_option("--out", cert_out, "Write JSON here instead of stdout");

  std::string suite = "all", verify_out;
  std::uint64_t seed = 0;
  long trials = 1000;
  auto* ver = app.add_subcommand("verify", "Run inequality suites");
  ver->add_option("--suite", suite, "Suite name")->check(CLI::IsMember(suite_names()));
  ver->add_option("--seed", seed, "Sampling seed");
  ver->add_option("--trials", trials, "Trials per sampled check");
  ver->add_option("--out", verify_out, "Directory for report JSON files");

  std::string manifold = "torus1d";
  int band = 16;
  bool as_json = false;
  auto* spe = app.add_subcommand("spectra", "Print distinct eigenvalues with multiplicities");
  spe->add_option("--manifold", manifold, "torus1d | torus2d | sphere");
  spe->add_option("--band", band, "Band limit")->check(CLI::PositiveNumber);
  spe->add_flag("--json", as_json, "JSON instead of CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*sim) return cmd_simulate(config, out_dir);
    if (*lad) return cmd_ladder(run_dir, K, t_star, k_max, tol, ladder_out);
    if (*cer) return cmd_certify(params, cert_out);
    if (*ver) return cmd_verify(suite, seed, trials, verify_out);
    if (*spe) return cmd_spectra(manifold, band, as_json);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kBadInput;
}
