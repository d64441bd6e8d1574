#pragma once

// Command-line driver: conv-rx, conv-newton-dir, newton, cond.
//
// Exit codes: 0 success, 2 partial (some levels failed or a run aborted),
// 3 configuration error.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wnf/experiments.hpp"
#include "wnf/io.hpp"

namespace wnf::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_partial = 2;
inline constexpr int exit_config = 3;

struct Options {
  int p = 4;
  std::string sigma;  // empty means subcommand default
  std::string curve = "ellipse";
  std::string curve_json;
  std::string levels;
  int steps = 5;
  std::string curvature;  // "on" / "off", empty means subcommand default
  std::size_t quad = 0;   // 0 means subcommand default
  std::string out = ".";
  std::string manifest;
  double anchor = 0.0;
  std::optional<double> min_h;
  std::size_t polyline = 256;
};

namespace detail {

inline std::vector<double> parse_sigmas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "bad sigma value '" + item + "'");
    }
  }
  if (out.empty()) throw Error(Errc::invalid_argument, "empty sigma list");
  for (const double s : out)
    if (!(s > 0.0)) throw Error(Errc::invalid_argument, "sigma must be positive");
  return out;
}

inline bool parse_switch(const std::string& text, bool fallback) {
  if (text.empty()) return fallback;
  if (text == "on") return true;
  if (text == "off") return false;
  throw Error(Errc::invalid_argument, "expected on|off, got '" + text + "'");
}

inline CurveSpec curve_spec(const Options& o, bool newton) {
  if (o.curve == "ellipse")
    return newton ? CurveSpec::ellipse(1.15, 0.9, {0.2, 0.15}) : CurveSpec::ellipse(1.4, 0.8);
  if (o.curve == "flower") return CurveSpec::flower(1.4, 0.8, 0.3);
  if (o.curve == "custom-json") {
    if (o.curve_json.empty())
      throw Error(Errc::invalid_argument, "--curve custom-json needs --curve-json");
    return parse_curve_spec(o.curve_json);
  }
  throw Error(Errc::invalid_argument, "unknown curve '" + o.curve + "'");
}

inline LevelRange levels_from(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw Error(Errc::invalid_argument, "manifest lists no levels");
  auto exp_of = [](std::size_t n) {
    int k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    if ((std::size_t{1} << k) != n) throw Error(Errc::invalid_argument, "levels must be powers of two");
    return k;
  };
  LevelRange r{exp_of(sizes.front()), exp_of(sizes.back())};
  if (r.sizes() != sizes) throw Error(Errc::invalid_argument, "levels must be consecutive powers of two");
  return r;
}

inline std::string level_text(const LevelRange& r) {
  return r.min_exp == r.max_exp ? std::to_string(r.min_exp)
                                : std::to_string(r.min_exp) + ".." + std::to_string(r.max_exp);
}

/// Fills unset options from a manifest written by an earlier run.
inline void apply_manifest(Options& o, const CLI::App& sub, const RunManifest& m) {
  auto given = [&](const char* name) {
    const CLI::Option* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (!given("--p")) o.p = m.p;
  if (!given("--sigma")) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < m.sigma.size(); ++i) os << (i ? "," : "") << m.sigma[i];
    o.sigma = os.str();
  }
  if (!given("--curve") && !given("--curve-json")) {
    o.curve = "custom-json";
    o.curve_json = json(m.curve).dump();
  }
  if (!given("--levels")) o.levels = level_text(levels_from(m.levels));
  if (!given("--quad")) o.quad = m.quad;
  const json& opt = m.options;
  if (!given("--curvature") && opt.contains("curvature"))
    o.curvature = opt.at("curvature").get<bool>() ? "on" : "off";
  if (!given("--steps") && opt.contains("steps")) o.steps = opt.at("steps").get<int>();
  if (!given("--anchor") && opt.contains("anchor_phi")) o.anchor = opt.at("anchor_phi").get<double>();
  if (!given("--min-h") && opt.contains("min_h") && !opt.at("min_h").is_null())
    o.min_h = opt.at("min_h").get<double>();
  if (!given("--polyline") && opt.contains("polyline"))
    o.polyline = opt.at("polyline").get<std::size_t>();
}

inline double single_sigma(const Options& o, double fallback) {
  if (o.sigma.empty()) return fallback;
  const auto s = parse_sigmas(o.sigma);
  if (s.size() != 1) throw Error(Errc::invalid_argument, "this subcommand takes one sigma");
  return s.front();
}

inline void check_order(int p) {
  if (p != 4 && p != 6 && p != 8) throw Error(Errc::invalid_argument, "--p must be 4, 6 or 8");
}

inline std::filesystem::path prepare_out(const Options& o) {
  const std::filesystem::path dir(o.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::invalid_argument, "cannot create output directory " + dir.string());
  return dir;
}

inline void write_file(const std::filesystem::path& path, const auto& writer) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::invalid_argument, "cannot write " + path.string());
  writer(out);
}

inline json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

inline void report_study(std::ostream& log, const ConvergenceStudy& s) {
  for (const auto& r : s.records)
    if (!r.failure.empty()) log << "N=" << r.n << " failed: " << r.failure << '\n';
  if (s.rate)
    log << s.experiment << " p=" << s.p << " sigma=" << s.sigma << " rate=" << format_real(*s.rate)
        << '\n';
  else
    log << s.experiment << " p=" << s.p << " sigma=" << s.sigma << " no rate: " << s.fit_note << '\n';
}

inline int cmd_conv_rx(const Options& o, std::ostream& log) {
  check_order(o.p);
  ConvRxConfig cfg;
  cfg.p = o.p;
  cfg.sigma = single_sigma(o, 1.2);
  const CurveSpec spec = curve_spec(o, false);
  cfg.curve = spec.build();
  cfg.levels = o.levels.empty() ? LevelRange{4, 10} : LevelRange::parse(o.levels);
  if (cfg.levels.min_exp == cfg.levels.max_exp)
    throw Error(Errc::invalid_argument, "conv-rx needs at least two levels");
  cfg.anchor_phi = o.anchor;
  if (o.quad) cfg.quad.initial = o.quad;
  if (cfg.quad.cap < cfg.quad.initial) cfg.quad.cap = cfg.quad.initial;
  if (o.min_h) cfg.guard.min_h = *o.min_h;
  const auto dir = prepare_out(o);

  RunManifest m;
  m.experiment = "conv-rx";
  m.started_at = utc_timestamp();
  const ConvergenceStudy s = conv_rx(cfg);
  m.finished_at = utc_timestamp();
  m.p = cfg.p;
  m.sigma = {cfg.sigma};
  m.curve = spec;
  m.levels = cfg.levels.sizes();
  m.quad = cfg.quad.initial;
  m.reference_level = m.levels.back();
  m.options = {{"anchor_phi", cfg.anchor_phi},
               {"quad_cap", cfg.quad.cap},
               {"quad_rtol", cfg.quad.rtol},
               {"min_h", o.min_h ? json(*o.min_h) : json(nullptr)}};
  m.results = {{"rate", optional_number(s.rate)}, {"fit_note", s.fit_note}};
  write_file(dir / "conv_rx.csv", [&](std::ostream& os) { write_conv_csv(os, s); });
  write_manifest((dir / "manifest.json").string(), m);
  report_study(log, s);
  return s.partial() ? exit_partial : exit_ok;
}

inline int cmd_conv_newton_dir(const Options& o, std::ostream& log) {
  check_order(o.p);
  ConvNewtonDirConfig cfg;
  cfg.p = o.p;
  cfg.sigma = single_sigma(o, 0.7);
  const CurveSpec spec = curve_spec(o, false);
  cfg.curve = spec.build();
  cfg.levels = o.levels.empty() ? LevelRange{4, 8} : LevelRange::parse(o.levels);
  cfg.curvature_term = parse_switch(o.curvature, true);
  if (o.quad) cfg.quad = o.quad;
  if (o.min_h) cfg.guard = RateGuard{*o.min_h};
  const auto dir = prepare_out(o);

  RunManifest m;
  m.experiment = "conv-newton-dir";
  m.started_at = utc_timestamp();
  const ConvergenceStudy s = conv_newton_dir(cfg);
  m.finished_at = utc_timestamp();
  m.p = cfg.p;
  m.sigma = {cfg.sigma};
  m.curve = spec;
  m.levels = cfg.levels.sizes();
  m.quad = cfg.quad;
  m.options = {{"curvature", cfg.curvature_term},
               {"integrand", "|x|^2-1"},
               {"error_quad_initial", cfg.error_quad.initial},
               {"error_quad_cap", cfg.error_quad.cap},
               {"error_quad_rtol", cfg.error_quad.rtol},
               {"min_h", cfg.guard.value_or(newton_direction_guard(cfg.p)).min_h},
               {"pivot_tolerance", cfg.pivot_tolerance}};
  m.results = {{"rate", optional_number(s.rate)}, {"fit_note", s.fit_note}};
  write_file(dir / "conv_newton_dir.csv", [&](std::ostream& os) { write_conv_csv(os, s); });
  write_manifest((dir / "manifest.json").string(), m);
  report_study(log, s);
  return s.partial() ? exit_partial : exit_ok;
}

inline int cmd_newton(const Options& o, std::ostream& log) {
  check_order(o.p);
  NewtonConfig cfg;
  cfg.kernel = Kernel(o.p, single_sigma(o, 0.7));
  cfg.max_steps = o.steps;
  cfg.curvature_term = parse_switch(o.curvature, false);
  if (o.quad) cfg.quad = o.quad;
  const CurveSpec spec = curve_spec(o, true);
  const Curve initial = spec.build();
  const LevelRange levels = o.levels.empty() ? LevelRange{6, 6} : LevelRange::parse(o.levels);
  if (o.polyline < 4) throw Error(Errc::invalid_argument, "--polyline needs at least 4 samples");
  const auto dir = prepare_out(o);

  RunManifest m;
  m.experiment = "newton";
  m.started_at = utc_timestamp();
  bool partial = false;
  json per_level = json::object();
  for (const std::size_t n : levels.sizes()) {
    cfg.n = n;
    cfg.validate();
    const NewtonRun run = wnf::run(unit_disc_integrand(), initial, cfg);
    const std::string tag = "N" + std::to_string(n);
    write_file(dir / ("newton_" + tag + ".csv"), [&](std::ostream& os) { write_newton_csv(os, run); });
    write_file(dir / ("curves_" + tag + ".csv"),
               [&](std::ostream& os) { write_curves_csv(os, run, o.polyline); });
    const double dev = radial_deviation(run.final_curve());
    per_level[tag] = {{"steps_recorded", run.records.size()},
                      {"final_radial_deviation", dev},
                      {"abort_reason", run.abort_reason ? json(*run.abort_reason) : json(nullptr)}};
    log << "newton N=" << n << " steps=" << run.records.size()
        << " final radial deviation=" << format_real(dev) << '\n';
    if (run.abort_reason) {
      log << "N=" << n << " aborted: " << *run.abort_reason << '\n';
      partial = true;
    }
  }
  m.finished_at = utc_timestamp();
  m.p = o.p;
  m.sigma = {cfg.kernel.sigma()};
  m.curve = spec;
  m.levels = levels.sizes();
  m.quad = cfg.quad;
  m.options = {{"steps", cfg.max_steps},
               {"curvature", cfg.curvature_term},
               {"integrand", "|x|^2-1"},
               {"early_stop", cfg.early_stop},
               {"pivot_tolerance", cfg.pivot_tolerance},
               {"polyline", o.polyline}};
  m.results = per_level;
  write_manifest((dir / "manifest.json").string(), m);
  return partial ? exit_partial : exit_ok;
}

inline json power_law_json(const std::optional<PowerLaw>& f) {
  if (!f) return nullptr;
  return {{"h_exponent", f->h_exponent},
          {"slope_vs_inverse_h", -f->h_exponent},
          {"sigma_exponent", optional_number(f->sigma_exponent)},
          {"intercept", f->intercept},
          {"rows_used", f->used}};
}

inline int cmd_cond(const Options& o, std::ostream& log) {
  check_order(o.p);
  CondConfig cfg;
  cfg.p = o.p;
  if (!o.sigma.empty()) cfg.sigmas = parse_sigmas(o.sigma);
  const CurveSpec spec = curve_spec(o, false);
  cfg.curve = spec.build();
  if (!o.levels.empty()) cfg.levels = LevelRange::parse(o.levels);
  cfg.curvature_term = parse_switch(o.curvature, true);
  if (o.quad) cfg.quad = o.quad;
  const auto dir = prepare_out(o);

  RunManifest m;
  m.experiment = "cond";
  m.started_at = utc_timestamp();
  const CondStudy s = cond_study(cfg);
  m.finished_at = utc_timestamp();
  m.p = cfg.p;
  m.sigma = cfg.sigmas;
  m.curve = spec;
  m.levels = cfg.levels.sizes();
  m.quad = cfg.quad;
  m.options = {{"curvature", cfg.curvature_term},
               {"integrand", "|x|^2-1"},
               {"saturation", cfg.saturation}};
  m.results = {{"saddle", power_law_json(s.saddle)},
               {"hessian", power_law_json(s.hessian)},
               {"fit_note", s.fit_note}};
  write_file(dir / "cond.csv", [&](std::ostream& os) { write_cond_csv(os, s); });
  write_manifest((dir / "manifest.json").string(), m);
  for (const auto& r : s.records)
    if (!r.failure.empty())
      log << r.matrix << " sigma=" << r.sigma << " N=" << r.n << " failed: " << r.failure << '\n';
  if (s.saddle) log << "saddle: slope vs 1/h = " << format_real(-s.saddle->h_exponent) << '\n';
  if (s.hessian) {
    log << "hessian: alpha_h = " << format_real(s.hessian->h_exponent);
    if (s.hessian->sigma_exponent) log << ", alpha_sigma = " << format_real(*s.hessian->sigma_exponent);
    log << '\n';
  }
  if (!s.fit_note.empty()) log << "fit: " << s.fit_note << '\n';
  return s.partial() ? exit_partial : exit_ok;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& log = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Weakly-normal basis fields: convergence, Newton and conditioning studies", "wnf"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--p", o.p, "Wendland kernel order (4, 6, 8)");
    sub->add_option("--sigma", o.sigma, "kernel support radius (cond: comma-separated list)");
    sub->add_option("--curve", o.curve, "ellipse | flower | custom-json");
    sub->add_option("--curve-json", o.curve_json, "curve descriptor: inline JSON or a file");
    sub->add_option("--levels", o.levels, "exponents k of N = 2^k, as min..max or a single k");
    sub->add_option("--quad", o.quad, "quadrature nodes");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--manifest", o.manifest, "re-run the configuration of a manifest.json");
  };
  auto* conv_rx = app.add_subcommand("conv-rx", "convergence of one weakly-normal basis field");
  add_common(conv_rx);
  conv_rx->add_option("--anchor", o.anchor, "curve parameter of the anchor point");
  conv_rx->add_option("--min-h", o.min_h, "fit only levels with h > min-h");

  auto* conv_dir = app.add_subcommand("conv-newton-dir", "convergence of the Newton direction");
  add_common(conv_dir);
  conv_dir->add_option("--curvature", o.curvature, "on | off (default on)");
  conv_dir->add_option("--min-h", o.min_h, "fit only levels with h > min-h (k8 default 2^-4)");

  auto* newton = app.add_subcommand("newton", "shape Newton iteration");
  add_common(newton);
  newton->add_option("--steps", o.steps, "Newton steps");
  newton->add_option("--curvature", o.curvature, "on | off (default off)");
  newton->add_option("--polyline", o.polyline, "samples per curve in curves_N*.csv");

  auto* cond = app.add_subcommand("cond", "condition numbers of saddle matrix and Hessian");
  add_common(cond);
  cond->add_option("--curvature", o.curvature, "on | off (default on)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, log, err);
    return rc == 0 ? exit_ok : exit_config;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!o.manifest.empty()) {
      const RunManifest m = read_manifest(o.manifest);
      if (m.experiment != sub->get_name())
        throw Error(Errc::invalid_argument,
                    "manifest is for '" + m.experiment + "', not '" + sub->get_name() + "'");
      detail::apply_manifest(o, *sub, m);
    }
    if (sub == conv_rx) return detail::cmd_conv_rx(o, log);
    if (sub == conv_dir) return detail::cmd_conv_newton_dir(o, log);
    if (sub == newton) return detail::cmd_newton(o, log);
    return detail::cmd_cond(o, log);
  } catch (const Error& e) {
    err << "wnf: " << e.what() << '\n';
    return exit_config;
  } catch (const json::exception& e) {
    err << "wnf: " << e.what() << '\n';
    return exit_config;
  }
}

}  // namespace wnf::cli
