#pragma once

// The four benchmark instances: Motzkin, Origin, Stengle and Prestel-Delzell.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "regmomsos/moment_sos.hpp"

namespace regmomsos {

/// 1 - 3 x1^2 x2^2 + x1^4 x2^2 + x1^2 x2^4 under the standard Gaussian; no
/// constraints and no finite BM constant.
inline POPInstance motzkin_instance() {
  POPInstance I;
  I.name = "motzkin";
  I.n = 2;
  I.objective = MonomialPoly(2, {{{0, 0}, 1.0}, {{2, 2}, -3.0}, {{4, 2}, 1.0}, {{2, 4}, 1.0}});
  I.measure = {MeasureFamily::GaussianStd, MeasureFamily::GaussianStd};
  I.bm_domain = DomainSpec::unbounded();
  I.p_star = 0.0;
  return I;
}

/// min x subject to -x^2 >= 0, so K = {0}.
inline POPInstance origin_instance() {
  POPInstance I;
  I.name = "origin";
  I.n = 1;
  I.objective = MonomialPoly(1, {{{1}, 1.0}});
  I.constraints = {MonomialPoly(1, {{{2}, -1.0}})};
  I.measure = {MeasureFamily::GaussianStd};
  I.bm_domain = DomainSpec::point_list({{0.0}});
  I.p_star = 0.0;
  I.slater_absent = true;
  return I;
}

/// min 1 - x^2 subject to (1 - x^2)^3 >= 0.
inline POPInstance stengle_instance() {
  POPInstance I;
  I.name = "stengle";
  I.n = 1;
  I.objective = MonomialPoly(1, {{{0}, 1.0}, {{2}, -1.0}});
  I.constraints = {MonomialPoly(1, {{{0}, 1.0}, {{2}, -3.0}, {{4}, 3.0}, {{6}, -1.0}})};
  I.measure = {MeasureFamily::ArcsineUnit};
  I.bm_domain = DomainSpec::unit_box();
  I.p_star = 0.0;
  return I;
}

/// min 17/4 - x1^2 - x2^2 over x1 >= 1/2, x2 >= 1/2, x1 x2 <= 1, certified on
/// the box [1/2, 2]^2 mapped onto [-1, 1]^2.
inline POPInstance prestel_instance() {
  POPInstance I;
  I.name = "prestel";
  I.n = 2;
  I.objective = MonomialPoly(2, {{{0, 0}, 4.25}, {{2, 0}, -1.0}, {{0, 2}, -1.0}});
  I.constraints = {MonomialPoly(2, {{{1, 0}, 1.0}, {{0, 0}, -0.5}}),
                   MonomialPoly(2, {{{0, 1}, 1.0}, {{0, 0}, -0.5}}),
                   MonomialPoly(2, {{{0, 0}, 1.0}, {{1, 1}, -1.0}})};
  I.measure = {MeasureFamily::ArcsineUnit, MeasureFamily::ArcsineUnit};
  I.box = std::vector<std::pair<double, double>>{{0.5, 2.0}, {0.5, 2.0}};
  I.bm_domain = DomainSpec::unit_box();
  I.residual_support = ResidualSupport::NonConstant;
  I.p_star = 0.0;
  return I;
}

inline const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"motzkin", "origin", "stengle", "prestel"};
  return names;
}

inline POPInstance benchmark(std::string_view name) {
  if (name == "motzkin") return motzkin_instance();
  if (name == "origin") return origin_instance();
  if (name == "stengle") return stengle_instance();
  if (name == "prestel") return prestel_instance();
  std::string valid;
  for (const auto& n : benchmark_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown benchmark '" + std::string(name) + "' (valid: " + valid + ")");
}

}  // namespace regmomsos
