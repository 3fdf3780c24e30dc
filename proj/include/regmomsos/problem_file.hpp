#pragma once

// JSON problem files and the results CSV.
//
// {
//   "name": "stengle",
//   "variables": 1,
//   "objective": [{"exponents": [0], "coeff": 1}, {"exponents": [2], "coeff": -1}],
//   "constraints": [[{"exponents": [0], "coeff": 1}, ...]],
//   "measure": "arcsine",
//   "box": [[-1, 1]],                 optional
//   "bm_domain": "box",               optional: box | point | none
//   "bm_points": [[0]],               with bm_domain = point
//   "residual": "full",               optional: full | nonconstant
//   "pstar": 0,                       optional
//   "slater": true                    optional
// }

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "regmomsos/conic/program.hpp"
#include "regmomsos/hierarchy.hpp"
#include "regmomsos/moment_sos.hpp"

namespace regmomsos {

/// Problem-file error with a 1-based line (syntax errors) or a JSON pointer
/// to the offending field.
class ProblemFileError : public std::runtime_error {
 public:
  ProblemFileError(std::string where, const std::string& msg, int line = 0)
      : std::runtime_error(where + ": " + msg), where_(std::move(where)), line_(line) {}
  const std::string& where() const { return where_; }
  int line() const { return line_; }

 private:
  std::string where_;
  int line_;
};

namespace detail {

using nlohmann::json;

inline const std::set<std::string>& problem_fields() {
  static const std::set<std::string> f{"name",      "variables", "objective", "constraints", "measure", "box",
                                       "bm_domain", "bm_points", "residual",  "pstar",       "slater"};
  return f;
}

[[noreturn]] inline void field_error(const std::string& ptr, const std::string& msg) {
  throw ProblemFileError("field " + (ptr.empty() ? std::string("/") : ptr), msg);
}

inline double number_at(const json& j, const std::string& ptr) {
  if (!j.is_number()) field_error(ptr, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) field_error(ptr, "expected a finite number");
  return v;
}

inline int integer_at(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) field_error(ptr, "expected an integer");
  return j.get<int>();
}

inline MonomialPoly poly_at(const json& j, int n, const std::string& ptr) {
  if (!j.is_array()) field_error(ptr, "expected a list of terms");
  MonomialPoly p(n);
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string tp = ptr + "/" + std::to_string(k);
    const json& t = j[k];
    if (!t.is_object()) field_error(tp, "expected {\"exponents\": [...], \"coeff\": ...}");
    for (const auto& [key, val] : t.items()) {
      if (key != "exponents" && key != "coeff") field_error(tp + "/" + key, "unknown field");
    }
    if (!t.contains("exponents")) field_error(tp + "/exponents", "missing");
    if (!t.contains("coeff")) field_error(tp + "/coeff", "missing");
    const json& e = t["exponents"];
    if (!e.is_array()) field_error(tp + "/exponents", "expected a list of integers");
    if (static_cast<int>(e.size()) != n) {
      field_error(tp + "/exponents", "expected " + std::to_string(n) + " exponents, got " + std::to_string(e.size()));
    }
    MultiIndex a(n);
    for (int i = 0; i < n; ++i) {
      a[i] = integer_at(e[i], tp + "/exponents/" + std::to_string(i));
      if (a[i] < 0) field_error(tp + "/exponents/" + std::to_string(i), "exponents must be >= 0");
    }
    p.add_term(a, number_at(t["coeff"], tp + "/coeff"));
  }
  return p;
}

inline json poly_json(const MonomialPoly& p) {
  json out = json::array();
  for (const auto& [a, c] : p.terms()) out.push_back({{"exponents", a}, {"coeff", c}});
  return out;
}

inline std::string string_at(const json& j, const std::string& ptr) {
  if (!j.is_string()) field_error(ptr, "expected a string");
  return j.get<std::string>();
}

}  // namespace detail

inline POPInstance parse_problem(const std::string& text) {
  using detail::field_error;
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    throw ProblemFileError("line " + std::to_string(line), "syntax error: " + std::string(e.what()), line);
  }
  if (!j.is_object()) field_error("", "expected a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (!detail::problem_fields().count(key)) field_error("/" + key, "unknown field");
  }
  for (const char* req : {"name", "variables", "objective", "measure"}) {
    if (!j.contains(req)) field_error(std::string("/") + req, "missing required field");
  }
  POPInstance inst;
  inst.name = detail::string_at(j["name"], "/name");
  inst.n = detail::integer_at(j["variables"], "/variables");
  if (inst.n < 1 || inst.n > 16) field_error("/variables", "must be between 1 and 16");
  inst.objective = detail::poly_at(j["objective"], inst.n, "/objective");
  if (j.contains("constraints")) {
    const json& cs = j["constraints"];
    if (!cs.is_array()) field_error("/constraints", "expected a list of polynomials");
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const std::string ptr = "/constraints/" + std::to_string(k);
      MonomialPoly g = detail::poly_at(cs[k], inst.n, ptr);
      if (g.is_zero()) field_error(ptr, "constraint polynomial is zero");
      inst.constraints.push_back(std::move(g));
    }
  }
  try {
    inst.measure.assign(inst.n, measure_from_string(detail::string_at(j["measure"], "/measure")));
  } catch (const std::invalid_argument& e) {
    field_error("/measure", e.what());
  }
  if (j.contains("box")) {
    const json& b = j["box"];
    if (!b.is_array() || static_cast<int>(b.size()) != inst.n) {
      field_error("/box", "expected " + std::to_string(inst.n) + " [lo, hi] pairs");
    }
    std::vector<std::pair<double, double>> box;
    for (int i = 0; i < inst.n; ++i) {
      const std::string ptr = "/box/" + std::to_string(i);
      if (!b[i].is_array() || b[i].size() != 2) field_error(ptr, "expected [lo, hi]");
      const double lo = detail::number_at(b[i][0], ptr + "/0");
      const double hi = detail::number_at(b[i][1], ptr + "/1");
      if (!(lo < hi)) field_error(ptr, "need lo < hi");
      box.emplace_back(lo, hi);
    }
    inst.box = std::move(box);
  }
  const std::string dom =
      j.contains("bm_domain") ? detail::string_at(j["bm_domain"], "/bm_domain") : (inst.box ? "box" : "none");
  if (dom == "box") {
    inst.bm_domain = DomainSpec::unit_box();
  } else if (dom == "none") {
    inst.bm_domain = DomainSpec::unbounded();
  } else if (dom == "point") {
    if (!j.contains("bm_points")) field_error("/bm_points", "required when bm_domain is \"point\"");
    const json& pts = j["bm_points"];
    if (!pts.is_array() || pts.empty()) field_error("/bm_points", "expected a nonempty list of points");
    std::vector<std::vector<double>> list;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const std::string ptr = "/bm_points/" + std::to_string(k);
      if (!pts[k].is_array() || static_cast<int>(pts[k].size()) != inst.n) {
        field_error(ptr, "expected a point with " + std::to_string(inst.n) + " coordinates");
      }
      std::vector<double> x;
      for (int i = 0; i < inst.n; ++i) x.push_back(detail::number_at(pts[k][i], ptr + "/" + std::to_string(i)));
      list.push_back(std::move(x));
    }
    inst.bm_domain = DomainSpec::point_list(std::move(list));
  } else {
    field_error("/bm_domain", "expected \"box\", \"point\" or \"none\"");
  }
  if (dom != "point" && j.contains("bm_points")) field_error("/bm_points", "only allowed with bm_domain \"point\"");
  if (j.contains("residual")) {
    const std::string r = detail::string_at(j["residual"], "/residual");
    if (r == "full") inst.residual_support = ResidualSupport::Full;
    else if (r == "nonconstant") inst.residual_support = ResidualSupport::NonConstant;
    else field_error("/residual", "expected \"full\" or \"nonconstant\"");
  }
  if (j.contains("pstar")) inst.p_star = detail::number_at(j["pstar"], "/pstar");
  if (j.contains("slater")) {
    if (!j["slater"].is_boolean()) field_error("/slater", "expected true or false");
    inst.slater_absent = !j["slater"].get<bool>();
  }
  try {
    inst.validate();
  } catch (const std::invalid_argument& e) {
    field_error("", e.what());
  }
  return inst;
}

inline POPInstance load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemFileError(path, "cannot open file");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_problem(text);
}

/// Problem-file text for an instance; parse_problem inverts it exactly.
inline std::string serialize_problem(const POPInstance& inst) {
  using detail::json;
  for (std::size_t i = 1; i < inst.measure.size(); ++i) {
    if (inst.measure[i] != inst.measure[0]) {
      throw std::invalid_argument("serialize_problem: problem files carry a single measure family");
    }
  }
  json j;
  j["name"] = inst.name;
  j["variables"] = inst.n;
  j["objective"] = detail::poly_json(inst.objective);
  json cs = json::array();
  for (const auto& g : inst.constraints) cs.push_back(detail::poly_json(g));
  j["constraints"] = cs;
  j["measure"] = std::string(to_string(inst.measure.at(0)));
  if (inst.box) {
    json b = json::array();
    for (const auto& [lo, hi] : *inst.box) b.push_back({lo, hi});
    j["box"] = b;
  }
  j["bm_domain"] = std::string(to_string(inst.bm_domain.kind));
  if (inst.bm_domain.kind == DomainKind::Point) j["bm_points"] = inst.bm_domain.points;
  j["residual"] = inst.residual_support == ResidualSupport::Full ? "full" : "nonconstant";
  if (inst.p_star) j["pstar"] = *inst.p_star;
  j["slater"] = !inst.slater_absent;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// results CSV

inline const std::vector<std::string>& results_columns() {
  static const std::vector<std::string> cols{"d",           "mode",          "epsilon",         "c2d",
                                             "primal_value", "dual_value",   "residual_norm",   "certified_bound",
                                             "status",       "verify_residual", "wall_ms"};
  return cols;
}

inline std::string csv_header() {
  std::string s;
  for (const auto& c : results_columns()) s += (s.empty() ? "" : ",") + c;
  return s;
}

inline std::string csv_row(const BoundRecord& r) {
  using conic::format_double;
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string s;
  s += std::to_string(r.d) + ",";
  s += std::string(to_string(r.mode.kind)) + ",";
  s += (r.mode.kind == ModeKind::Regularized ? format_double(r.mode.epsilon) : std::string()) + ",";
  s += opt(r.c2d) + ",";
  s += format_double(r.primal_value) + ",";
  s += format_double(r.dual_value) + ",";
  s += format_double(r.residual_norm) + ",";
  s += opt(r.certified_bound) + ",";
  s += r.status_label() + ",";
  s += format_double(r.verify_residual) + ",";
  s += format_double(r.wall_ms);
  return s;
}

inline void write_results_csv(std::ostream& os, const std::vector<BoundRecord>& records) {
  os << csv_header() << "\n";
  for (const auto& r : records) os << csv_row(r) << "\n";
}

/// Two columns "d gap" for an external plotter.
inline void write_plot_data(std::ostream& os, const std::vector<std::pair<int, double>>& series) {
  os << "# d gap\n";
  for (const auto& [d, g] : series) os << d << " " << conic::format_double(g) << "\n";
}

}  // namespace regmomsos
