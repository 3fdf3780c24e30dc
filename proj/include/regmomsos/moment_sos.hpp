#pragma once

// Regularized, penalized and standard moment-SOS relaxations at level d,
// assembled in the orthonormal basis of the reference measure, together with
// certificate recovery and solver-independent verification.
//
// Two assemblies of the same primal-dual pair are available:
//
//  * GramStandard (default): the standard-form variables are the SOS data
//    (v, r, Q_0..Q_m), one equality row per basis element b_alpha with
//    |alpha| <= 2d expressing p - v = r + sum_j s_j g_j. The conic dual of
//    this program is the pseudo-moment problem, and the moment vector is
//    read off the equality multipliers.
//  * MomentPrimal: the standard-form variables are the moments y (free),
//    PSD slacks for every localizing matrix and the SOC copy of y. The SOS
//    data come from the dual slacks.
//
// Both forms are solved by the same primal-dual method, so either yields the
// moment value u* and the SOS value v* at once.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "regmomsos/basis1d.hpp"
#include "regmomsos/bm_constants.hpp"
#include "regmomsos/conic/program.hpp"
#include "regmomsos/conic/solver.hpp"
#include "regmomsos/multi_index.hpp"
#include "regmomsos/poly.hpp"

namespace regmomsos {

inline constexpr int kMaxRelaxationDegree = 120;

class DegreeOverflow : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class MissingDuals : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which basis elements the residual r may use. NonConstant excludes b_0,
/// so the constant part of p - sum s_j g_j is carried by v alone.
enum class ResidualSupport { Full, NonConstant };

inline std::string_view to_string(ResidualSupport s) {
  return s == ResidualSupport::Full ? "full" : "nonconstant";
}

struct POPInstance {
  std::string name;
  int n = 1;
  MonomialPoly objective{1};
  std::vector<MonomialPoly> constraints;
  std::vector<MeasureFamily> measure;
  /// Box in the original coordinates; when present the problem is pulled
  /// back to [-1, 1]^n before assembly.
  std::optional<std::vector<std::pair<double, double>>> box;
  /// Certification domain in reference coordinates.
  DomainSpec bm_domain;
  ResidualSupport residual_support = ResidualSupport::Full;
  /// Known global minimum, when available.
  std::optional<double> p_star;
  /// The feasible set has empty interior, so the moment side has no strictly
  /// feasible point.
  bool slater_absent = false;

  void validate() const {
    if (n < 1) throw std::invalid_argument("POPInstance: n must be >= 1");
    if (static_cast<int>(measure.size()) != n) {
      throw std::invalid_argument("POPInstance: need one measure family per variable");
    }
    if (objective.n() != n) throw std::invalid_argument("POPInstance: objective has wrong dimension");
    for (const auto& g : constraints) {
      if (g.n() != n) throw std::invalid_argument("POPInstance: constraint has wrong dimension");
      if (g.is_zero()) throw std::invalid_argument("POPInstance: zero constraint polynomial");
    }
    if (box && static_cast<int>(box->size()) != n) throw std::invalid_argument("POPInstance: box has wrong dimension");
    if (box) AffineMap::from_box(*box);
    bm_domain.validate(n);
  }

  std::optional<AffineMap> domain_map() const {
    if (!box) return std::nullopt;
    return AffineMap::from_box(*box);
  }

  MonomialPoly mapped_objective() const {
    const auto m = domain_map();
    return m ? pullback(objective, *m) : objective;
  }

  std::vector<MonomialPoly> mapped_constraints() const {
    const auto m = domain_map();
    std::vector<MonomialPoly> out;
    for (const auto& g : constraints) out.push_back(m ? pullback(g, *m) : g);
    return out;
  }

  /// d_j = ceil(deg g_j / 2) of the mapped constraints.
  std::vector<int> half_degrees() const {
    std::vector<int> out;
    for (const auto& g : mapped_constraints()) out.push_back((std::max(g.degree(), 0) + 1) / 2);
    return out;
  }

  friend bool operator==(const POPInstance&, const POPInstance&) = default;

  /// Smallest admissible relaxation level.
  int min_level() const {
    int d = std::max((std::max(mapped_objective().degree(), 0) + 1) / 2, 1);
    for (int dj : half_degrees()) d = std::max(d, dj);
    return d;
  }
};

// ---------------------------------------------------------------------------
// moment and localizing operators

struct SymEntry {
  int row = 0;  ///< row >= col
  int col = 0;
  double value = 0.0;
};

/// M(g y) = sum_alpha y_alpha A_alpha for one localizing polynomial g.
struct Localizer {
  IndexSet basis;                                ///< indices of degree <= d - d_j
  std::vector<std::vector<SymEntry>> by_alpha;   ///< lower-triangle entries of A_alpha

  int side() const { return static_cast<int>(basis.size()); }

  Eigen::MatrixXd matrix(std::size_t alpha) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(side(), side());
    for (const auto& e : by_alpha[alpha]) {
      m(e.row, e.col) += e.value;
      if (e.row != e.col) m(e.col, e.row) += e.value;
    }
    return m;
  }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& y) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(side(), side());
    for (std::size_t a = 0; a < by_alpha.size(); ++a) {
      if (y[static_cast<long>(a)] == 0.0) continue;
      for (const auto& e : by_alpha[a]) {
        m(e.row, e.col) += y[static_cast<long>(a)] * e.value;
        if (e.row != e.col) m(e.col, e.row) += y[static_cast<long>(a)] * e.value;
      }
    }
    return m;
  }
};

struct MomentOperator {
  int d = 0;
  IndexSet moments;                   ///< indices of degree <= 2d
  std::vector<Localizer> localizers;  ///< j = 0 is the moment matrix (g_0 = 1)
};

inline void check_level(const POPInstance& inst, int d) {
  if (2 * d > kMaxRelaxationDegree) {
    throw DegreeOverflow("relaxation degree 2d = " + std::to_string(2 * d) + " exceeds the cap of " +
                         std::to_string(kMaxRelaxationDegree));
  }
  if (d < inst.min_level()) {
    throw std::invalid_argument("relaxation level d = " + std::to_string(d) + " is below the minimum " +
                                std::to_string(inst.min_level()) + " for this instance");
  }
}

/// Orthonormal-basis images of the mapped objective and the localizing
/// polynomials (index 0 is the constant 1).
inline std::pair<OrthoPoly, std::vector<OrthoPoly>> ortho_data(const POPInstance& inst) {
  OrthoPoly p = to_ortho(inst.mapped_objective(), inst.measure);
  std::vector<OrthoPoly> g{OrthoPoly::basis_element(inst.measure, MultiIndex(inst.n, 0))};
  for (const auto& gj : inst.mapped_constraints()) g.push_back(to_ortho(gj, inst.measure));
  return {std::move(p), std::move(g)};
}

inline MomentOperator build_operators(const POPInstance& inst, int d) {
  inst.validate();
  check_level(inst, d);
  const auto [p, g] = ortho_data(inst);
  const auto dj = inst.half_degrees();

  MomentOperator op;
  op.d = d;
  op.moments = IndexSet(inst.n, 2 * d);
  for (std::size_t j = 0; j < g.size(); ++j) {
    Localizer loc;
    loc.basis = IndexSet(inst.n, d - (j == 0 ? 0 : dj[j - 1]));
    loc.by_alpha.assign(op.moments.size(), {});
    for (int a = 0; a < loc.side(); ++a) {
      for (int b = 0; b <= a; ++b) {
        CoeffMap prod;
        accumulate_basis_product(prod, inst.measure, loc.basis[a], loc.basis[b], 1.0);
        CoeffMap full;
        for (const auto& [gam, gc] : g[j].coeffs()) {
          for (const auto& [e, pc] : prod) accumulate_basis_product(full, inst.measure, gam, e, gc * pc);
        }
        for (const auto& [alpha, v] : full) {
          if (std::abs(v) <= detail::kLinearizationClamp) continue;
          const long pos = op.moments.find(alpha);
          if (pos < 0) throw std::logic_error("build_operators: product degree exceeds 2d");
          loc.by_alpha[pos].push_back({a, b, v});
        }
      }
    }
    op.localizers.push_back(std::move(loc));
  }
  return op;
}

// ---------------------------------------------------------------------------
// relaxations

enum class ModeKind { Regularized, Penalized, Standard };

inline std::string_view to_string(ModeKind k) {
  switch (k) {
    case ModeKind::Regularized: return "regularized";
    case ModeKind::Penalized: return "penalized";
    case ModeKind::Standard: return "standard";
  }
  return "?";
}

inline ModeKind mode_from_string(std::string_view s) {
  if (s == "regularized") return ModeKind::Regularized;
  if (s == "penalized") return ModeKind::Penalized;
  if (s == "standard") return ModeKind::Standard;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected regularized | penalized | standard)");
}

struct RelaxationMode {
  ModeKind kind = ModeKind::Standard;
  double epsilon = 0.0;        ///< Regularized only
  std::optional<double> c2d;   ///< required for Penalized; certifies Regularized when present

  static RelaxationMode regularized(double eps, std::optional<double> c = std::nullopt) {
    return {ModeKind::Regularized, eps, c};
  }
  static RelaxationMode penalized(double c) { return {ModeKind::Penalized, 0.0, c}; }
  static RelaxationMode standard() { return {ModeKind::Standard, 0.0, std::nullopt}; }

  /// A residual r (and the SOC block) is part of the program.
  bool has_residual() const {
    return kind == ModeKind::Penalized || (kind == ModeKind::Regularized && epsilon > 0.0);
  }

  void validate() const {
    if (kind == ModeKind::Regularized && !(epsilon >= 0.0 && std::isfinite(epsilon))) {
      throw std::invalid_argument("regularized mode needs a finite epsilon >= 0");
    }
    if (kind == ModeKind::Penalized && !(c2d && *c2d > 0.0 && std::isfinite(*c2d))) {
      throw std::invalid_argument("penalized mode needs a finite c2d > 0");
    }
  }
};

enum class AssemblyForm { GramStandard, MomentPrimal };

struct Relaxation {
  int d = 0;
  RelaxationMode mode;
  AssemblyForm form = AssemblyForm::GramStandard;
  MomentOperator ops;
  OrthoPoly p;
  std::vector<OrthoPoly> g;                  ///< g[0] = 1
  std::vector<std::size_t> residual_indices; ///< positions in ops.moments carried by r
  conic::ConicProgram program;

  // column layout
  int scalar_col = 0;            ///< v (Gram form) or first moment y_0 (moment form)
  int soc_col = -1;              ///< head t of the SOC block, -1 if absent
  double residual_scale = 1.0;   ///< r = residual_scale * (SOC tail)
  std::vector<int> psd_cols;     ///< first column of Q_j / X_j
};

namespace detail {

inline void add_svec_coeffs(std::vector<conic::Triplet>& A, int row, int col0, int side,
                            const std::vector<SymEntry>& entries, double scale) {
  for (const auto& e : entries) {
    const double w = e.row == e.col ? e.value : std::sqrt(2.0) * e.value;
    A.push_back({row, col0 + conic::svec_index(side, e.row, e.col), scale * w});
  }
}

}  // namespace detail

inline Relaxation assemble(const POPInstance& inst, int d, const RelaxationMode& mode,
                           AssemblyForm form = AssemblyForm::GramStandard) {
  mode.validate();
  Relaxation rel;
  rel.d = d;
  rel.mode = mode;
  rel.form = form;
  rel.ops = build_operators(inst, d);
  std::tie(rel.p, rel.g) = ortho_data(inst);
  if (rel.p.degree() > 2 * d) throw std::invalid_argument("assemble: objective degree exceeds 2d");

  const auto& mom = rel.ops.moments;
  const int N = static_cast<int>(mom.size());
  for (int a = 0; a < N; ++a) {
    if (inst.residual_support == ResidualSupport::NonConstant && a == 0) continue;
    rel.residual_indices.push_back(a);
  }
  const bool soc = mode.has_residual();
  // ||r|| <= eps is stored as r = eps * r', ||r'|| <= 1, which keeps the SOC
  // block well scaled for tiny eps
  if (form == AssemblyForm::GramStandard && mode.kind == ModeKind::Regularized && soc) {
    rel.residual_scale = mode.epsilon;
  }
  const int R = static_cast<int>(rel.residual_indices.size());

  auto& prog = rel.program;
  std::vector<double> pvec(N, 0.0);
  for (const auto& [alpha, c] : rel.p.coeffs()) pvec[mom.find(alpha)] = c;

  if (form == AssemblyForm::GramStandard) {
    // columns: v | (t, r) | Q_0 .. Q_m
    int col = 0;
    prog.cone.blocks.push_back(conic::ConeBlock::free(1));
    rel.scalar_col = col++;
    if (soc) {
      prog.cone.blocks.push_back(conic::ConeBlock::soc(1 + R));
      rel.soc_col = col;
      col += 1 + R;
    }
    for (const auto& loc : rel.ops.localizers) {
      prog.cone.blocks.push_back(conic::ConeBlock::psd(loc.side()));
      rel.psd_cols.push_back(col);
      col += conic::svec_dim(loc.side());
    }
    prog.c.assign(col, 0.0);
    prog.c[rel.scalar_col] = -1.0;
    if (mode.kind == ModeKind::Penalized) prog.c[rel.soc_col] = *mode.c2d;

    prog.b = pvec;
    prog.A.push_back({0, rel.scalar_col, 1.0});
    if (soc) {
      for (int k = 0; k < R; ++k) {
        prog.A.push_back({static_cast<int>(rel.residual_indices[k]), rel.soc_col + 1 + k, rel.residual_scale});
      }
    }
    for (std::size_t j = 0; j < rel.ops.localizers.size(); ++j) {
      const auto& loc = rel.ops.localizers[j];
      for (int a = 0; a < N; ++a) detail::add_svec_coeffs(prog.A, a, rel.psd_cols[j], loc.side(), loc.by_alpha[a], 1.0);
    }
    if (mode.kind == ModeKind::Regularized && soc) {
      prog.A.push_back({N, rel.soc_col, 1.0});
      prog.b.push_back(1.0);
    }
  } else {
    // columns: y | (t, z) | X_0 .. X_m
    int col = 0;
    prog.cone.blocks.push_back(conic::ConeBlock::free(N));
    rel.scalar_col = col;
    col += N;
    if (soc) {
      prog.cone.blocks.push_back(conic::ConeBlock::soc(1 + R));
      rel.soc_col = col;
      col += 1 + R;
    }
    for (const auto& loc : rel.ops.localizers) {
      prog.cone.blocks.push_back(conic::ConeBlock::psd(loc.side()));
      rel.psd_cols.push_back(col);
      col += conic::svec_dim(loc.side());
    }
    prog.c.assign(col, 0.0);
    for (int a = 0; a < N; ++a) prog.c[rel.scalar_col + a] = pvec[a];
    if (mode.kind == ModeKind::Regularized && soc) prog.c[rel.soc_col] = mode.epsilon;

    int row = 0;
    prog.A.push_back({row, rel.scalar_col, 1.0});
    prog.b.push_back(1.0);
    ++row;
    for (std::size_t j = 0; j < rel.ops.localizers.size(); ++j) {
      const auto& loc = rel.ops.localizers[j];
      const int side = loc.side();
      const int first = row;
      row += conic::svec_dim(side);
      for (int a = 0; a < N; ++a) {
        for (const auto& e : loc.by_alpha[a]) {
          const double w = e.row == e.col ? e.value : std::sqrt(2.0) * e.value;
          prog.A.push_back({first + conic::svec_index(side, e.row, e.col), rel.scalar_col + a, w});
        }
      }
      for (int k = 0; k < conic::svec_dim(side); ++k) prog.A.push_back({first + k, rel.psd_cols[j] + k, -1.0});
      prog.b.resize(row, 0.0);
    }
    if (soc) {
      for (int k = 0; k < R; ++k) {
        prog.A.push_back({row, rel.soc_col + 1 + k, 1.0});
        prog.A.push_back({row, rel.scalar_col + static_cast<int>(rel.residual_indices[k]), -1.0});
        prog.b.push_back(0.0);
        ++row;
      }
      if (mode.kind == ModeKind::Penalized) {
        prog.A.push_back({row, rel.soc_col, 1.0});
        prog.b.push_back(*mode.c2d);
        ++row;
      }
    }
  }
  prog.validate();
  return rel;
}

inline Relaxation assemble_regularized(const POPInstance& inst, int d, double eps,
                                       std::optional<double> c2d = std::nullopt) {
  if (!(eps >= 0.0)) throw std::invalid_argument("assemble_regularized: epsilon must be >= 0");
  return assemble(inst, d, RelaxationMode::regularized(eps, c2d));
}

inline Relaxation assemble_penalized(const POPInstance& inst, int d, double c2d) {
  if (!(c2d > 0.0)) throw std::invalid_argument("assemble_penalized: c2d must be > 0");
  return assemble(inst, d, RelaxationMode::penalized(c2d));
}

/// The standard hierarchy, assembled on the moment side as an independent
/// code path from the Gram-form programs.
inline Relaxation assemble_standard(const POPInstance& inst, int d) {
  return assemble(inst, d, RelaxationMode::standard(), AssemblyForm::MomentPrimal);
}

/// Moment value u* (objective of the pseudo-moment problem) and SOS value v*
/// (objective of the SOS problem) of a solved relaxation.
struct RelaxationValues {
  double moment_value = 0.0;
  double sos_value = 0.0;
};

inline RelaxationValues relaxation_values(const Relaxation& rel, const conic::ConicSolution& sol) {
  if (rel.form == AssemblyForm::GramStandard) return {-sol.dual_objective, -sol.primal_objective};
  return {sol.primal_objective, sol.dual_objective};
}

// ---------------------------------------------------------------------------
// certificates

struct Certificate {
  int d = 0;
  RelaxationMode mode;
  double v = 0.0;
  OrthoPoly r;                         ///< residual, coefficients over the orthonormal basis
  std::vector<Eigen::MatrixXd> gram;   ///< Q_0 .. Q_m
  Eigen::VectorXd moments;             ///< pseudo-moments y_alpha, graded-lex order
  double soc_head = 0.0;               ///< t >= ||r|| from the SOC block (0 when absent)
};

inline Certificate recover_certificate(const Relaxation& rel, const conic::ConicSolution& sol) {
  using conic::SolveStatus;
  if (sol.status == SolveStatus::PrimalInfeasible || sol.status == SolveStatus::DualInfeasible) {
    throw MissingDuals("recover_certificate: solver reported " + std::string(conic::to_string(sol.status)));
  }
  const long nvars = rel.program.num_vars();
  if (sol.x.size() != nvars || sol.s.size() != nvars || sol.y.size() != rel.program.num_rows() ||
      !sol.x.allFinite() || !sol.y.allFinite() || !sol.s.allFinite()) {
    throw MissingDuals("recover_certificate: solution vectors missing or non-finite");
  }
  Certificate cert;
  cert.d = rel.d;
  cert.mode = rel.mode;
  cert.r = OrthoPoly(rel.p.families());
  const int N = static_cast<int>(rel.ops.moments.size());
  // SOS data live in x for the Gram form and in the dual slacks for the moment form
  const Eigen::VectorXd& sos = rel.form == AssemblyForm::GramStandard ? sol.x : sol.s;
  if (rel.form == AssemblyForm::GramStandard) {
    cert.v = sol.x[rel.scalar_col];
    cert.moments = -sol.y.head(N);
  } else {
    cert.v = sol.y[0];
    cert.moments = sol.x.segment(rel.scalar_col, N);
  }
  if (rel.soc_col >= 0) {
    cert.soc_head = rel.residual_scale * sos[rel.soc_col];
    for (std::size_t k = 0; k < rel.residual_indices.size(); ++k) {
      cert.r.add_term(rel.ops.moments[rel.residual_indices[k]],
                      rel.residual_scale * sos[rel.soc_col + 1 + static_cast<long>(k)]);
    }
  }
  for (std::size_t j = 0; j < rel.ops.localizers.size(); ++j) {
    const int side = rel.ops.localizers[j].side();
    cert.gram.push_back(conic::smat(sos.segment(rel.psd_cols[j], conic::svec_dim(side))));
  }
  return cert;
}

/// Certified lower bound from (v, ||r||) for the mode, if the mode certifies one.
inline std::optional<double> certified_bound(const RelaxationMode& mode, double v, double residual_norm) {
  switch (mode.kind) {
    case ModeKind::Penalized: return v - *mode.c2d * residual_norm;
    case ModeKind::Regularized:
      if (!mode.c2d) return std::nullopt;
      return v - *mode.c2d * std::max(mode.epsilon, residual_norm);
    case ModeKind::Standard: return v;
  }
  return std::nullopt;
}

struct VerifyTolerances {
  double identity = 1e-6;
  double min_eigenvalue = -1e-8;
  double bound_relative = 1e-8;
};

struct VerificationReport {
  double identity_residual = 0.0;   ///< ||p - v - r - sum s_j g_j|| on orthonormal coefficients
  std::vector<double> gram_min_eigenvalues;
  double min_eigenvalue = 0.0;
  double residual_norm = 0.0;       ///< ||r||, recomputed
  std::optional<double> bound;      ///< recomputed certified bound
  /// Bound that also absorbs the identity residual into (v, r); valid without
  /// trusting the solver's feasibility.
  std::optional<double> rigorous_bound;
  double bound_mismatch = 0.0;      ///< |recomputed - recorded|, 0 when nothing recorded
  bool residual_within_epsilon = true;
  bool passed = false;
  std::string message;
};

/// Sum over (a, b) of Q_ab b_a b_b for the degree-k basis.
inline OrthoPoly gram_to_poly(const std::vector<MeasureFamily>& fams, int k, const Eigen::MatrixXd& Q) {
  const IndexSet basis(static_cast<int>(fams.size()), k);
  if (static_cast<long>(basis.size()) != Q.rows() || Q.rows() != Q.cols()) {
    throw std::invalid_argument("gram_to_poly: Gram matrix has the wrong size");
  }
  CoeffMap acc;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = 0; b < basis.size(); ++b) {
      const double q = Q(static_cast<long>(a), static_cast<long>(b));
      if (q != 0.0) accumulate_basis_product(acc, fams, basis[a], basis[b], q);
    }
  }
  OrthoPoly s(fams);
  for (const auto& [al, c] : acc) s.add_term(al, c);
  return s;
}

inline double min_symmetric_eigenvalue(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// p - v - r - sum_j s_j g_j on orthonormal coefficients.
inline OrthoPoly identity_defect(const POPInstance& inst, const Certificate& cert) {
  const auto fams = inst.measure;
  const auto gm = inst.mapped_constraints();
  const auto dj = inst.half_degrees();
  if (cert.gram.size() != gm.size() + 1) throw std::invalid_argument("identity_defect: wrong number of Gram matrices");
  OrthoPoly e = to_ortho(inst.mapped_objective(), fams);
  e.add_term(MultiIndex(inst.n, 0), -cert.v);
  e -= cert.r;
  for (std::size_t j = 0; j < cert.gram.size(); ++j) {
    const int k = cert.d - (j == 0 ? 0 : dj[j - 1]);
    OrthoPoly s = gram_to_poly(fams, k, cert.gram[j]);
    if (j > 0) s = multiply(s, to_ortho(gm[j - 1], fams));
    e -= s;
  }
  return e;
}

/// Moves the identity defect into the certificate: its constant term into v,
/// the rest into r. Modes without a residual only absorb the constant term.
inline Certificate polish_certificate(const POPInstance& inst, const Certificate& cert) {
  Certificate out = cert;
  OrthoPoly e = identity_defect(inst, cert);
  const MultiIndex zero(inst.n, 0);
  out.v += e.coeff(zero);
  e.add_term(zero, -e.coeff(zero));
  if (cert.mode.has_residual()) {
    out.r += e;
    out.soc_head = std::max(out.soc_head, l2_norm(out.r));
  }
  return out;
}

inline VerificationReport verify_certificate(const POPInstance& inst, const Certificate& cert,
                                             const VerifyTolerances& tol = {},
                                             std::optional<double> recorded_bound = std::nullopt) {
  VerificationReport rep;
  const OrthoPoly e = identity_defect(inst, cert);
  for (const auto& Q : cert.gram) rep.gram_min_eigenvalues.push_back(min_symmetric_eigenvalue(Q));
  rep.identity_residual = l2_norm(e);
  rep.min_eigenvalue = rep.gram_min_eigenvalues.empty()
                           ? 0.0
                           : *std::min_element(rep.gram_min_eigenvalues.begin(), rep.gram_min_eigenvalues.end());
  long double ss = 0.0L;
  for (const auto& [a, c] : cert.r.coeffs()) ss += static_cast<long double>(c) * c;
  rep.residual_norm = static_cast<double>(std::sqrt(ss));
  rep.bound = certified_bound(cert.mode, cert.v, rep.residual_norm);

  if (cert.mode.c2d) {
    // p = (v + e_0) + (r + e - e_0) + sum s_j g_j, or with e_0 kept in r
    const MultiIndex zero(inst.n, 0);
    OrthoPoly r2 = cert.r + e;
    double v2 = cert.v;
    if (inst.residual_support == ResidualSupport::NonConstant) {
      v2 += r2.coeff(zero);
      r2.add_term(zero, -r2.coeff(zero));
    }
    rep.rigorous_bound = v2 - *cert.mode.c2d * l2_norm(r2);
  }
  if (cert.mode.kind == ModeKind::Regularized) {
    rep.residual_within_epsilon = rep.residual_norm <= cert.mode.epsilon * (1.0 + 1e-6) + 1e-12;
  }

  bool bound_ok = true;
  if (recorded_bound && rep.bound) {
    rep.bound_mismatch = std::abs(*recorded_bound - *rep.bound);
    bound_ok = rep.bound_mismatch <= tol.bound_relative * (1.0 + std::abs(*rep.bound));
  } else if (recorded_bound && !rep.bound) {
    bound_ok = false;
  }

  std::string msg;
  if (!(rep.identity_residual <= tol.identity)) msg += "identity residual too large; ";
  if (!(rep.min_eigenvalue >= tol.min_eigenvalue)) msg += "Gram matrix not PSD; ";
  if (!bound_ok) msg += "recorded bound does not match recomputation; ";
  rep.passed = msg.empty();
  if (!msg.empty()) msg.resize(msg.size() - 2);
  rep.message = rep.passed ? "ok" : msg;
  return rep;
}

}  // namespace regmomsos
