#pragma once

// JSON views of reports, ladders and certificates.

#include <json.hpp>

#include "asq/degiorgi.hpp"
#include "asq/ineq_lab.hpp"
#include "asq/io/text.hpp"

namespace asq::io {

using Json = nlohmann::ordered_json;

/// Non-finite doubles become strings ("inf", "-inf", "nan") instead of null.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); }
inline Json num(long double v) { return num(static_cast<double>(v)); }

inline Json to_json(const Witness& w) {
  return {{"family", w.family},
          {"trial", w.trial},
          {"manifold", std::string(to_string(w.kind))},
          {"band", w.band},
          {"coefficients", w.coefficients}};
}

inline Json to_json(const Revalidation& v) {
  return {{"seed", v.seed},         {"trials", v.trials},       {"violations", v.violations},
          {"rate", v.rate()},       {"constant", num(v.constant)}, {"worst_ratio", num(v.worst_ratio)},
          {"passed", v.passed()}};
}

inline Json to_json(const InequalityReport& r) {
  Json params = Json::object();
  for (const auto& [k, v] : r.parameters) params[k] = num(v);
  Json j{{"name", r.name},
         {"trials", r.trials},
         {"worst_ratio", num(r.worst_ratio)},
         {"fitted_constant", num(r.fitted_constant)},
         {"violations", r.violations},
         {"parameters", params}};
  j["revalidation"] = r.revalidation ? to_json(*r.revalidation) : Json(nullptr);
  j["witness"] = r.witness ? to_json(*r.witness) : Json(nullptr);
  return j;
}

inline InequalityReport report_from_json(const Json& j) {
  InequalityReport r;
  auto real = [](const Json& v) { return v.is_string() ? parse_double(v.get<std::string>()) : v.get<double>(); };
  r.name = j.at("name").get<std::string>();
  r.trials = j.at("trials").get<long>();
  r.worst_ratio = real(j.at("worst_ratio"));
  r.fitted_constant = real(j.at("fitted_constant"));
  r.violations = j.at("violations").get<long>();
  if (j.contains("parameters"))
    for (const auto& [k, v] : j.at("parameters").items()) r.parameters[k] = real(v);
  return r;
}

inline Json to_json(const HormanderTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"lambda", r.lambda},
                    {"multiplicity", r.multiplicity},
                    {"basis_sup", r.basis_sup},
                    {"ratio", r.ratio},
                    {"combo_sup", r.combo_sup},
                    {"combo_ratio", r.combo_ratio}});
  return {{"manifold", std::string(to_string(t.kind))},
          {"k_max", t.k_max},
          {"sup_ratio", t.sup_ratio},
          {"combo_worst", t.combo_worst},
          {"rows", rows}};
}

inline Json to_json(const WeylSweep& w) {
  Json rows = Json::array();
  for (const auto& r : w.rows)
    rows.push_back({{"radius", r.radius}, {"count", r.count}, {"leading", r.leading}, {"rel_error", r.rel_error}});
  return {{"manifold", std::string(to_string(w.kind))},
          {"monotone", w.monotone},
          {"final_rel_error", w.final_rel_error},
          {"rows", rows}};
}

inline Json to_json(const RiccatiFit& f) {
  return {{"s", f.s},
          {"h0", f.h0},
          {"C", f.C},
          {"window_end", f.window_end},
          {"certified_end", f.certified_end},
          {"c_fraction", f.c_fraction},
          {"margin_positive", f.margin_positive},
          {"bound_holds", f.bound_holds},
          {"warnings", f.warnings},
          {"t", f.t},
          {"hs", f.hs},
          {"margin", f.margin}};
}

inline Json to_json(const MaximumPrincipleAudit& a) {
  return {{"reference_sup", a.reference_sup}, {"reference_inf", a.reference_inf}, {"sup_drift", a.sup_drift},
          {"inf_drift", a.inf_drift},         {"tolerance", a.tolerance},         {"window_end", num(a.window_end)},
          {"records", a.records},             {"passed", a.passed},               {"diagnosis", a.diagnosis}};
}

inline Json to_json(const EnergySeries& s) {
  Json entries = Json::array();
  for (const auto& e : s.entries)
    entries.push_back({{"k", e.k},
                       {"level", e.level},
                       {"t_k", e.t_k},
                       {"E_k", e.E_k},
                       {"t_next", e.t_next},
                       {"D_k", e.D_k},
                       {"dissipation_bound", e.dissipation_bound},
                       {"dissipation_ratio", e.dissipation_bound > 0.0 ? num(e.D_k / e.dissipation_bound) : num(0.0)},
                       {"window_snapshots", e.window_snapshots}});
  return {{"K", s.K}, {"t_star", s.t_star}, {"alpha", s.alpha}, {"entries", entries}};
}

inline Json to_json(const VirialReport& r) {
  Json levels = Json::array();
  for (const auto& lv : r.levels)
    levels.push_back({{"k", lv.k},
                      {"level", lv.level},
                      {"snapshots", lv.t.size()},
                      {"max_residual", num(lv.max_residual)},
                      {"max_abs_residual", lv.max_abs_residual},
                      {"max_increase", lv.max_increase}});
  return {{"reference", r.reference}, {"tolerance", r.tolerance}, {"passed", r.passed}, {"levels", levels}};
}

inline Json to_json(const Certificate& c) {
  return {{"holds", c.holds},
          {"rule", std::string(to_string(c.rule))},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"Cprime", c.Cprime},
          {"t_star", num(c.t_star)},
          {"K", num(c.K)},
          {"predicted_sup_bound", num(c.predicted_sup_bound)},
          {"contradiction_margin", num(c.contradiction_margin)},
          {"smallness", c.smallness},
          {"recurrence_converged", c.recurrence_converged},
          {"diverged_at", c.diverged_at},
          {"eta", num(c.eta)},
          {"notes", c.notes}};
}

}  // namespace asq::io
