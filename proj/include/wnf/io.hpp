#pragma once

// Curve descriptors, run manifests and CSV output.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wnf/error.hpp"
#include "wnf/experiments.hpp"
#include "wnf/geometry.hpp"
#include "wnf/newton.hpp"

namespace wnf {

using json = nlohmann::json;

// ---------------------------------------------------------------- curves

/// {"kind": "ellipse" | "circle" | "flower" | "stadium", "params": {...}}
struct CurveSpec {
  std::string kind = "ellipse";
  json params = json::object();

  static CurveSpec ellipse(double a, double b, Point center = Point::Zero()) {
    return {"ellipse", {{"a", a}, {"b", b}, {"center", {center.x(), center.y()}}}};
  }
  static CurveSpec circle(double radius, Point center = Point::Zero()) {
    return {"circle", {{"radius", radius}, {"center", {center.x(), center.y()}}}};
  }
  static CurveSpec flower(double a, double b, double c) {
    return {"flower", {{"a", a}, {"b", b}, {"c", c}}};
  }
  static CurveSpec stadium(double half_length, double radius, Point center = Point::Zero()) {
    return {"stadium",
            {{"half_length", half_length}, {"radius", radius}, {"center", {center.x(), center.y()}}}};
  }

  [[nodiscard]] Curve build() const {
    try {
      auto center = [&] {
        if (!params.contains("center")) return Point(0.0, 0.0);
        const auto& c = params.at("center");
        if (!c.is_array() || c.size() != 2) throw Error(Errc::invalid_argument, "center must be [x, y]");
        return Point(c.at(0).get<double>(), c.at(1).get<double>());
      };
      if (kind == "ellipse")
        return Curve(AnalyticCurve(
            Ellipse{center(), params.at("a").get<double>(), params.at("b").get<double>()}));
      if (kind == "circle")
        return Curve(AnalyticCurve::circle(params.at("radius").get<double>(), center()));
      if (kind == "stadium")
        return Curve(AnalyticCurve(Stadium{center(), params.at("half_length").get<double>(),
                                           params.at("radius").get<double>()}));
      if (kind == "flower")
        return Curve(AnalyticCurve(Flower{params.at("a").get<double>(), params.at("b").get<double>(),
                                          params.at("c").get<double>()}));
    } catch (const json::exception& e) {
      throw Error(Errc::invalid_argument, std::string("curve parameters: ") + e.what());
    }
    throw Error(Errc::invalid_argument, "unknown curve kind '" + kind + "'");
  }

  friend bool operator==(const CurveSpec&, const CurveSpec&) = default;
};

inline void to_json(json& j, const CurveSpec& c) { j = {{"kind", c.kind}, {"params", c.params}}; }
inline void from_json(const json& j, CurveSpec& c) {
  j.at("kind").get_to(c.kind);
  c.params = j.value("params", json::object());
}

/// Parses a descriptor from inline JSON text or from a file holding it.
inline CurveSpec parse_curve_spec(const std::string& text_or_path) {
  std::string text = text_or_path;
  if (text.find('{') == std::string::npos) {
    std::ifstream in(text_or_path);
    if (!in) throw Error(Errc::invalid_argument, "cannot read curve file '" + text_or_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text).get<CurveSpec>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("curve descriptor: ") + e.what());
  }
}

// ---------------------------------------------------------------- manifest

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct RunManifest {
  std::string experiment;
  int p = 4;
  std::vector<double> sigma;
  CurveSpec curve;
  std::vector<std::size_t> levels;  // N values
  std::size_t quad = 0;
  std::optional<std::size_t> reference_level;
  std::uint64_t seed = 0;  // recorded, nothing is random
  std::string tool_version{wnf::tool_version};
  std::string started_at;
  std::string finished_at;
  json options = json::object();  // experiment-specific settings
  json results = json::object();  // fitted rates and exponents

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

inline void to_json(json& j, const RunManifest& m) {
  j = json{{"experiment", m.experiment},
           {"p", m.p},
           {"curve", m.curve},
           {"levels", m.levels},
           {"quad", m.quad},
           {"seed", m.seed},
           {"tool_version", m.tool_version},
           {"started_at", m.started_at},
           {"finished_at", m.finished_at},
           {"options", m.options},
           {"results", m.results}};
  if (m.sigma.size() == 1)
    j["sigma"] = m.sigma.front();
  else
    j["sigma"] = m.sigma;
  j["reference_level"] = m.reference_level ? json(*m.reference_level) : json(nullptr);
}

inline void from_json(const json& j, RunManifest& m) {
  j.at("experiment").get_to(m.experiment);
  j.at("p").get_to(m.p);
  const json& s = j.at("sigma");
  m.sigma = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{s.get<double>()};
  j.at("curve").get_to(m.curve);
  j.at("levels").get_to(m.levels);
  j.at("quad").get_to(m.quad);
  const json& ref = j.at("reference_level");
  m.reference_level = ref.is_null() ? std::nullopt : std::optional<std::size_t>(ref.get<std::size_t>());
  m.seed = j.value("seed", std::uint64_t{0});
  m.tool_version = j.value("tool_version", std::string{});
  m.started_at = j.value("started_at", std::string{});
  m.finished_at = j.value("finished_at", std::string{});
  m.options = j.value("options", json::object());
  m.results = j.value("results", json::object());
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::invalid_argument, "cannot write '" + path + "'");
  out << json(m).dump(2) << '\n';
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::invalid_argument, "cannot read manifest '" + path + "'");
  try {
    return json::parse(in).get<RunManifest>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------- csv

/// 17 significant digits; "nan" and "inf" for non-finite values.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline constexpr const char* conv_header = "experiment,p,sigma,N,h,error,saturated";
inline constexpr const char* newton_header = "step,g_norm,quad_ratio,objective,hess_cond";
inline constexpr const char* curve_header = "step,phi,x,y";
inline constexpr const char* cond_header = "matrix,p,sigma,N,h,cond,saturated";

inline void write_conv_csv(std::ostream& os, const ConvergenceStudy& s) {
  os << conv_header << '\n';
  for (const auto& r : s.records)
    os << s.experiment << ',' << s.p << ',' << format_real(s.sigma) << ',' << r.n << ','
       << format_real(r.h) << ',' << format_real(r.error) << ',' << (r.saturated ? 1 : 0) << '\n';
}

inline void write_newton_csv(std::ostream& os, const NewtonRun& run) {
  os << newton_header << '\n';
  for (const auto& r : run.records)
    os << r.step << ',' << format_real(r.g_norm) << ',' << format_real(r.quad_ratio) << ','
       << format_real(r.objective) << ',' << format_real(r.hess_cond) << '\n';
}

/// Polylines of Omega_0, ..., Omega_L with `samples` points each.
inline void write_curves_csv(std::ostream& os, const NewtonRun& run, std::size_t samples = 256) {
  os << curve_header << '\n';
  for (std::size_t l = 0; l < run.curves.size(); ++l)
    for (std::size_t q = 0; q < samples; ++q) {
      const double phi = two_pi * static_cast<double>(q) / static_cast<double>(samples);
      const Point x = run.curves[l].position(phi);
      os << l << ',' << format_real(phi) << ',' << format_real(x.x()) << ',' << format_real(x.y())
         << '\n';
    }
}

inline void write_cond_csv(std::ostream& os, const CondStudy& s) {
  os << cond_header << '\n';
  for (const auto& r : s.records)
    os << r.matrix << ',' << r.p << ',' << format_real(r.sigma) << ',' << r.n << ','
       << format_real(r.h) << ',' << format_real(r.cond) << ',' << (r.saturated ? 1 : 0) << '\n';
}

}  // namespace wnf
