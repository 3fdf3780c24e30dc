#pragma once

// Primal-dual interior-point method for standard-form conic programs over
// products of free, nonnegative, second-order and PSD cones.
//
// The method works on the homogeneous self-dual embedding
//
//   A x - b tau = 0,   A'y + s - c tau = 0,   b'y - c'x - kappa = 0,
//   x in K, s in K*, tau, kappa >= 0,
//
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector. Newton
// systems are reduced to the dense Schur complement A W A' (plus a bordered
// block for free variables) and solved by dense factorization with
// iterative refinement.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "regmomsos/conic/cones.hpp"
#include "regmomsos/conic/program.hpp"

namespace regmomsos::conic {

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, SlowProgress, IterationLimit };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::SlowProgress: return "SlowProgress";
    case SolveStatus::IterationLimit: return "IterationLimit";
  }
  return "?";
}

struct SolverSettings {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  double static_reg = 1e-9;
  /// Run the interior-point iterations in long double.
  bool extended_precision = false;
  bool verbose = false;

  void validate() const {
    if (!(gap_tol > 0 && feas_tol > 0 && max_iter > 0 && static_reg > 0)) {
      throw std::invalid_argument("SolverSettings: all tolerances and limits must be positive");
    }
  }
};

struct IterationInfo {
  int iter = 0;
  double pcost = 0, dcost = 0;
  double pres = 0, dres = 0;
  double gap = 0, relgap = 0;
  double mu = 0, tau = 0, kappa = 0;
  double step = 0;
  /// pcost - dcost - (x'r_d - y'r_p) / tau^2, which equals x's / tau^2 >= 0.
  double duality_slack = 0;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::IterationLimit;
  Eigen::VectorXd x;  ///< primal variables
  Eigen::VectorXd y;  ///< equality multipliers
  Eigen::VectorXd s;  ///< dual slacks, s = c - A'y in K*
  double primal_objective = 0;
  double dual_objective = 0;
  double relative_gap = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  int iterations = 0;
  std::vector<IterationInfo> trace;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <class T>
struct Block {
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using SpMat = Eigen::SparseMatrix<T, Eigen::ColMajor>;

  ConeKind kind;
  int offset;
  int dim;
  int side;  // PSD only

  // NonNeg scaling
  Vec w;  // sqrt(x / s)
  // SOC scaling: NT point and its square root
  Vec nt, nt_half, nt_half_inv;
  // PSD scaling
  Mat R, Rti, G;
  Vec lam_diag;
  // PSD: rows of A touching this block, as symmetric side x side matrices
  std::vector<int> rows;
  std::vector<SpMat> row_mats;
};

template <class T>
class IpmEngine {
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using SpMat = Eigen::SparseMatrix<T, Eigen::ColMajor>;
  using Blk = Block<T>;

 public:
  IpmEngine(const ConicProgram& prog, const SolverSettings& settings)
      : settings_(settings), n_(prog.num_vars()) {
    // presolve: drop empty and linearly dependent rows
    const int m_in = prog.num_rows();
    Eigen::SparseMatrix<double> A_in(m_in, n_);
    {
      std::vector<Eigen::Triplet<double>> t;
      t.reserve(prog.A.size());
      for (const auto& e : prog.A) t.emplace_back(e.row, e.col, e.value);
      A_in.setFromTriplets(t.begin(), t.end());
    }
    const Eigen::VectorXd b_in = Eigen::Map<const Eigen::VectorXd>(prog.b.data(), m_in);
    select_rows(A_in, b_in);

    c_ = Eigen::Map<const Eigen::VectorXd>(prog.c.data(), n_).template cast<T>();
    int off = 0;
    for (const auto& cb : prog.cone.blocks) {
      Blk blk{cb.kind, off, cb.dim(), cb.kind == ConeKind::PSD ? cb.size : 0, {}, {}, {}, {}, {}, {},
                {}, {}, {}, {}};
      if (cb.kind == ConeKind::Free) {
        for (int i = 0; i < cb.dim(); ++i) free_cols_.push_back(off + i);
      } else if (cb.dim() > 0) {
        blocks_.push_back(std::move(blk));
      }
      off += cb.dim();
    }
    nu_ = prog.cone.degree();
    b0norm_ = std::max(1.0, static_cast<double>(b_.norm()));
    c0norm_ = std::max(1.0, static_cast<double>(c_.norm()));
    equilibrate();
    for (auto& blk : blocks_) {
      if (blk.kind == ConeKind::PSD) build_psd_rows(blk);
    }
    Af_ = Mat::Zero(m_, static_cast<long>(free_cols_.size()));
    for (std::size_t j = 0; j < free_cols_.size(); ++j) Af_.col(j) = A_.col(free_cols_[j]);
    At_ = A_.transpose();
  }

  ConicSolution run() {
    ConicSolution sol;
    if (infeasible_presolve_) {
      sol.status = SolveStatus::PrimalInfeasible;
      sol.x = Eigen::VectorXd::Zero(n_);
      sol.y = Eigen::VectorXd::Zero(m_in_);
      sol.s = Eigen::VectorXd::Zero(n_);
      return sol;
    }
    Vec x = identity();
    Vec s = identity();
    Vec y = Vec::Zero(m_);
    T tau = 1, kappa = 1;

    const double bnorm = b0norm_;
    const double cnorm = c0norm_;

    struct Best {
      double merit = std::numeric_limits<double>::infinity();
      Vec x, y, s;
      T tau = 1;
      IterationInfo info;
    } best;

    SolveStatus status = SolveStatus::IterationLimit;
    IterationInfo info;
    int stall = 0;
    double prev_merit = std::numeric_limits<double>::infinity();

    for (int it = 0;; ++it) {
      const Vec rp = b_ * tau - A_ * x;
      const Vec rd = c_ * tau - At_ * y - s;
      const T rg = kappa + c_.dot(x) - b_.dot(y);
      const T xs = x.dot(s);
      const T mu = (xs + tau * kappa) / T(nu_ + 1);

      info = IterationInfo{};
      info.iter = it;
      info.pcost = static_cast<double>(c_.dot(x) / tau);
      info.dcost = static_cast<double>(b_.dot(y) / tau);
      info.pres = static_cast<double>((rp.array() / row_scale_.array()).matrix().norm() / tau) / bnorm;
      info.dres = static_cast<double>((rd.array() / col_scale_.array()).matrix().norm() / tau) / cnorm;
      info.gap = static_cast<double>(xs / (tau * tau));
      info.relgap = std::max(info.gap, std::abs(info.pcost - info.dcost)) /
                    (1.0 + std::min(std::abs(info.pcost), std::abs(info.dcost)));
      info.mu = static_cast<double>(mu);
      info.tau = static_cast<double>(tau);
      info.kappa = static_cast<double>(kappa);
      info.duality_slack =
          static_cast<double>((c_.dot(x) - b_.dot(y)) / tau - (x.dot(rd) - y.dot(rp)) / (tau * tau));
      sol.trace.push_back(info);

      if (!std::isfinite(static_cast<double>(mu)) || !std::isfinite(info.pcost) || !std::isfinite(info.dcost)) {
        status = SolveStatus::SlowProgress;
        break;
      }

      const double merit = std::max({info.pres / settings_.feas_tol, info.dres / settings_.feas_tol,
                                      info.relgap / settings_.gap_tol});
      if (merit < best.merit) {
        best.merit = merit;
        best.x = x;
        best.y = y;
        best.s = s;
        best.tau = tau;
        best.info = info;
      }
      if (settings_.verbose) {
        std::fprintf(stderr, "%3d %+.8e %+.8e %.2e %.2e %.2e %.2e %.2e\n", it, info.pcost, info.dcost,
                     info.pres, info.dres, info.relgap, info.tau, info.kappa);
      }

      if (info.pres <= settings_.feas_tol && info.dres <= settings_.feas_tol &&
          info.relgap <= settings_.gap_tol) {
        status = SolveStatus::Optimal;
        break;
      }
      // infeasibility certificates
      if (kappa > tau) {
        const T by = b_.dot(y);
        if (by > 0) {
          const T pinf = ((At_ * y + s).array() / col_scale_.array()).matrix().norm() / by;
          if (pinf <= settings_.feas_tol) {
            status = SolveStatus::PrimalInfeasible;
            sol.x = Eigen::VectorXd::Zero(n_);
            sol.y = expand_y(row_scale_.cwiseProduct(y) / by).template cast<double>();
            sol.s = (s.cwiseQuotient(col_scale_) / by).template cast<double>();
            finish(sol, status, info, it);
            return sol;
          }
        }
        const T cx = c_.dot(x);
        if (cx < 0) {
          const T dinf = ((A_ * x).array() / row_scale_.array()).matrix().norm() / (-cx);
          if (dinf <= settings_.feas_tol) {
            status = SolveStatus::DualInfeasible;
            sol.x = (col_scale_.cwiseProduct(x) / (-cx)).template cast<double>();
            sol.y = Eigen::VectorXd::Zero(m_in_);
            sol.s = Eigen::VectorXd::Zero(n_);
            finish(sol, status, info, it);
            return sol;
          }
        }
      }
      if (it >= settings_.max_iter) {
        status = SolveStatus::IterationLimit;
        break;
      }
      if (!(merit < 0.9 * prev_merit)) {
        if (++stall >= 20) {
          status = SolveStatus::SlowProgress;
          break;
        }
      } else {
        stall = 0;
        prev_merit = merit;
      }

      if (!compute_scaling(x, s) || !factor()) {
        status = SolveStatus::SlowProgress;
        break;
      }

      const Vec lam = lambda(x, s);
      const Vec lamsq = jordan(lam, lam);

      Vec dx2, dy2, ds2;
      solve_kkt(b_, c_, Vec::Zero(n_), dx2, dy2, ds2);
      const T den = -kappa / tau + c_.dot(dx2) - b_.dot(dy2);

      auto direction = [&](T eta, const Vec& rc, T rtk, Vec& dx, Vec& dy, Vec& ds, T& dtau, T& dkappa) {
        const Vec r3 = unscale(jordan_solve(lam, rc));
        Vec dx1, dy1, ds1;
        solve_kkt(eta * rp, eta * rd, r3, dx1, dy1, ds1);
        dtau = (-eta * rg - rtk / tau - c_.dot(dx1) + b_.dot(dy1)) / den;
        dx = dx1 + dtau * dx2;
        dy = dy1 + dtau * dy2;
        ds = ds1 + dtau * ds2;
        dkappa = (rtk - kappa * dtau) / tau;
      };

      // predictor
      Vec dxa, dya, dsa;
      T dtaua, dkappaa;
      direction(T(1), -lamsq, -tau * kappa, dxa, dya, dsa, dtaua, dkappaa);
      const T alpha_a = std::min(T(1), max_step(x, s, tau, kappa, dxa, dsa, dtaua, dkappaa));
      const T sigma = std::clamp(T(std::pow(T(1) - alpha_a, 3)), T(0), T(1));

      // corrector
      const Vec corr = jordan(scale_x(dxa), scale_s(dsa));
      const Vec rc = sigma * mu * identity_scaled() - lamsq - corr;
      const T rtk = sigma * mu - tau * kappa - dtaua * dkappaa;
      Vec dx, dy, ds;
      T dtau, dkappa;
      direction(T(1) - sigma, rc, rtk, dx, dy, ds, dtau, dkappa);

      T alpha = max_step(x, s, tau, kappa, dx, ds, dtau, dkappa);
      alpha = std::min(T(1), T(0.99) * alpha);
      sol.trace.back().step = static_cast<double>(alpha);
      if (!(alpha > 1e-12)) {
        status = SolveStatus::SlowProgress;
        break;
      }
      x += alpha * dx;
      y += alpha * dy;
      s += alpha * ds;
      tau += alpha * dtau;
      kappa += alpha * dkappa;
      for (int j : free_cols_) s[j] = 0.0;
    }

    if (status != SolveStatus::Optimal && best.merit < std::numeric_limits<double>::infinity()) {
      x = best.x;
      y = best.y;
      s = best.s;
      tau = best.tau;
      info = best.info;
    }
    sol.x = (col_scale_.cwiseProduct(x) / tau).template cast<double>();
    sol.y = expand_y(row_scale_.cwiseProduct(y) / tau).template cast<double>();
    sol.s = (s.cwiseQuotient(col_scale_) / tau).template cast<double>();
    finish(sol, status, info, static_cast<int>(sol.trace.size()) - 1);
    return sol;
  }

 private:
  void finish(ConicSolution& sol, SolveStatus status, const IterationInfo& info, int iters) const {
    sol.status = status;
    sol.primal_objective = info.pcost;
    sol.dual_objective = info.dcost;
    sol.relative_gap = info.relgap;
    sol.primal_residual = info.pres;
    sol.dual_residual = info.dres;
    sol.iterations = iters;
  }

  void select_rows(const Eigen::SparseMatrix<double>& A_in, const Eigen::VectorXd& b_in) {
    m_in_ = static_cast<int>(A_in.rows());
    // rows with no entries
    std::vector<int> keep;
    Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = A_in;
    for (int i = 0; i < m_in_; ++i) {
      bool any = false;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itr(Ar, i); itr; ++itr) {
        if (itr.value() != 0.0) {
          any = true;
          break;
        }
      }
      if (any) keep.push_back(i);
      else if (std::abs(b_in[i]) > settings_.feas_tol) infeasible_presolve_ = true;
    }
    // dependent rows, for moderately sized programs
    if (!keep.empty() && keep.size() <= 2000 && static_cast<long>(keep.size()) * n_ <= 40'000'000L) {
      Eigen::MatrixXd At_dense(n_, static_cast<long>(keep.size()));
      for (std::size_t k = 0; k < keep.size(); ++k) At_dense.col(k) = Eigen::MatrixXd(Ar.row(keep[k])).transpose();
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(At_dense);
      qr.setThreshold(1e-12);
      const long rank = qr.rank();
      if (rank < static_cast<long>(keep.size())) {
        std::vector<int> chosen;
        for (long k = 0; k < rank; ++k) chosen.push_back(keep[qr.colsPermutation().indices()[k]]);
        std::sort(chosen.begin(), chosen.end());
        // consistency of the dropped rows
        Eigen::VectorXd bk(keep.size());
        for (std::size_t k = 0; k < keep.size(); ++k) bk[k] = b_in[keep[k]];
        const Eigen::MatrixXd Akeep = At_dense.transpose();
        const Eigen::VectorXd xls = Akeep.colPivHouseholderQr().solve(bk);
        if ((Akeep * xls - bk).norm() > settings_.feas_tol * std::max(1.0, bk.norm())) {
          infeasible_presolve_ = true;
        }
        keep = chosen;
      }
    }
    row_map_ = keep;
    m_ = static_cast<int>(keep.size());
    std::vector<Eigen::Triplet<T>> t;
    for (int k = 0; k < m_; ++k) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itr(Ar, keep[k]); itr; ++itr) {
        t.emplace_back(k, static_cast<int>(itr.col()), T(itr.value()));
      }
    }
    A_.resize(m_, n_);
    A_.setFromTriplets(t.begin(), t.end());
    b_.resize(m_);
    for (int k = 0; k < m_; ++k) b_[k] = T(b_in[keep[k]]);
  }

  // Ruiz equilibration: A <- D A E, b <- D b, c <- E c with D diagonal and E
  // constant on every SOC and PSD block (per coordinate elsewhere), so the
  // cone is mapped onto itself. Original variables are x = E x', y = D y',
  // s = E^-1 s'.
  void equilibrate() {
    row_scale_ = Vec::Ones(m_);
    col_scale_ = Vec::Ones(n_);
    if (m_ == 0 || n_ == 0) return;
    SpMat S = A_;
    for (int pass = 0; pass < 15; ++pass) {
      Vec rmax = Vec::Zero(m_);
      Vec cmax = Vec::Zero(n_);
      for (int k = 0; k < S.outerSize(); ++k) {
        for (typename SpMat::InnerIterator itr(S, k); itr; ++itr) {
          const T v = std::abs(itr.value());
          rmax[itr.row()] = std::max(rmax[itr.row()], v);
          cmax[k] = std::max(cmax[k], v);
        }
      }
      for (const auto& blk : blocks_) {
        if (blk.kind == ConeKind::SecondOrder || blk.kind == ConeKind::PSD) {
          cmax.segment(blk.offset, blk.dim).setConstant(cmax.segment(blk.offset, blk.dim).maxCoeff());
        }
      }
      Vec dr = Vec::Ones(m_), dc = Vec::Ones(n_);
      for (int i = 0; i < m_; ++i) {
        if (rmax[i] > 0) dr[i] = T(1) / std::sqrt(rmax[i]);
      }
      for (int j = 0; j < n_; ++j) {
        if (cmax[j] > 0) dc[j] = T(1) / std::sqrt(cmax[j]);
      }
      if ((dr.array() - T(1)).abs().maxCoeff() < T(1e-3) && (dc.array() - T(1)).abs().maxCoeff() < T(1e-3)) break;
      S = dr.asDiagonal() * S * dc.asDiagonal();
      row_scale_ = row_scale_.cwiseProduct(dr);
      col_scale_ = col_scale_.cwiseProduct(dc);
    }
    A_ = S;
    A_.makeCompressed();
    b_ = row_scale_.cwiseProduct(b_);
    c_ = col_scale_.cwiseProduct(c_);
  }

  Vec expand_y(const Vec& y) const {
    Vec out = Vec::Zero(m_in_);
    for (int k = 0; k < m_; ++k) out[row_map_[k]] = y[k];
    return out;
  }

  void build_psd_rows(Blk& blk) {
    const int sd = blk.side;
    std::vector<std::pair<int, int>> pos(blk.dim);
    for (int j = 0; j < sd; ++j)
      for (int i = j; i < sd; ++i) pos[svec_index(sd, i, j)] = {i, j};
    std::vector<std::vector<Eigen::Triplet<T>>> per_row(m_);
    const SpMat Ab = A_.middleCols(blk.offset, blk.dim);
    for (int k = 0; k < Ab.outerSize(); ++k) {
      for (typename SpMat::InnerIterator itr(Ab, k); itr; ++itr) {
        const auto [i, j] = pos[k];
        if (i == j) {
          per_row[itr.row()].emplace_back(i, i, itr.value());
        } else {
          const T v = itr.value() / std::sqrt(T(2));
          per_row[itr.row()].emplace_back(i, j, v);
          per_row[itr.row()].emplace_back(j, i, v);
        }
      }
    }
    for (int r = 0; r < m_; ++r) {
      if (per_row[r].empty()) continue;
      SpMat mtx(sd, sd);
      mtx.setFromTriplets(per_row[r].begin(), per_row[r].end());
      blk.rows.push_back(r);
      blk.row_mats.push_back(std::move(mtx));
    }
  }

  Vec identity() const {
    Vec e = Vec::Zero(n_);
    for (const auto& blk : blocks_) {
      switch (blk.kind) {
        case ConeKind::NonNeg: e.segment(blk.offset, blk.dim).setOnes(); break;
        case ConeKind::SecondOrder: e[blk.offset] = 1.0; break;
        case ConeKind::PSD:
          for (int i = 0; i < blk.side; ++i) e[blk.offset + svec_index(blk.side, i, i)] = 1.0;
          break;
        case ConeKind::Free: break;
      }
    }
    return e;
  }
  Vec identity_scaled() const { return identity(); }

  bool compute_scaling(const Vec& x, const Vec& s) {
    for (auto& blk : blocks_) {
      const auto xb = x.segment(blk.offset, blk.dim);
      const auto sb = s.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg:
          if ((xb.array() <= 0).any() || (sb.array() <= 0).any()) return false;
          blk.w = (xb.array() / sb.array()).sqrt();
          break;
        case ConeKind::SecondOrder: {
          if (soc::det(xb) <= 0 || soc::det(sb) <= 0 || xb[0] <= 0 || sb[0] <= 0) return false;
          blk.nt = soc::nt_point(xb, sb);
          blk.nt_half = soc::sqrt(blk.nt);
          blk.nt_half_inv = soc::inverse(blk.nt_half);
          break;
        }
        case ConeKind::PSD: {
          const Mat X = smat(xb);
          const Mat S = smat(sb);
          Eigen::LLT<Mat> l1(X), l2(S);
          if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) return false;
          const Mat L1 = l1.matrixL();
          const Mat L2 = l2.matrixL();
          Eigen::JacobiSVD<Mat> svd(L2.transpose() * L1, Eigen::ComputeFullU | Eigen::ComputeFullV);
          const Vec lam = svd.singularValues();
          if ((lam.array() <= 0).any()) return false;
          const Vec isq = lam.array().rsqrt();
          blk.R = L1 * svd.matrixV() * isq.asDiagonal();
          blk.Rti = L2 * svd.matrixU() * isq.asDiagonal();
          blk.G = blk.R * blk.R.transpose();
          blk.lam_diag = lam;
          break;
        }
        case ConeKind::Free: break;
      }
    }
    return true;
  }

  // scaled point lambda = W s = W^{-1} x
  Vec lambda(const Vec& x, const Vec& s) const {
    Vec l = Vec::Zero(n_);
    for (const auto& blk : blocks_) {
      auto out = l.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg:
          out = (x.segment(blk.offset, blk.dim).array() * s.segment(blk.offset, blk.dim).array()).sqrt();
          break;
        case ConeKind::SecondOrder: out = soc::quad(blk.nt_half, s.segment(blk.offset, blk.dim)); break;
        case ConeKind::PSD: {
          const Mat L = blk.lam_diag.asDiagonal();
          out = svec(L);
          break;
        }
        case ConeKind::Free: break;
      }
    }
    return l;
  }

 private:
  Vec scale_x(const Vec& dx) const {
    Vec r = Vec::Zero(n_);
    for (const auto& blk : blocks_) {
      const auto d = dx.segment(blk.offset, blk.dim);
      auto out = r.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg: out = d.array() / blk.w.array(); break;
        case ConeKind::SecondOrder: out = soc::quad(blk.nt_half_inv, d); break;
        case ConeKind::PSD: out = svec(blk.Rti.transpose() * smat(d) * blk.Rti); break;
        case ConeKind::Free: break;
      }
    }
    return r;
  }

  Vec scale_s(const Vec& ds) const {
    Vec r = Vec::Zero(n_);
    for (const auto& blk : blocks_) {
      const auto d = ds.segment(blk.offset, blk.dim);
      auto out = r.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg: out = d.array() * blk.w.array(); break;
        case ConeKind::SecondOrder: out = soc::quad(blk.nt_half, d); break;
        case ConeKind::PSD: out = svec(blk.R.transpose() * smat(d) * blk.R); break;
        case ConeKind::Free: break;
      }
    }
    return r;
  }

  // scaled space -> x space: W^T u
  Vec unscale(const Vec& u) const {
    Vec r = Vec::Zero(n_);
    for (const auto& blk : blocks_) {
      const auto d = u.segment(blk.offset, blk.dim);
      auto out = r.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg: out = d.array() * blk.w.array(); break;
        case ConeKind::SecondOrder: out = soc::quad(blk.nt_half, d); break;
        case ConeKind::PSD: out = svec(blk.R * smat(d) * blk.R.transpose()); break;
        case ConeKind::Free: break;
      }
    }
    return r;
  }

  // x-space image of a dual direction: W^T W ds
  Vec apply_q(const Vec& ds) const {
    Vec r = Vec::Zero(n_);
    for (const auto& blk : blocks_) {
      const auto d = ds.segment(blk.offset, blk.dim);
      auto out = r.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg: out = d.array() * blk.w.array().square(); break;
        case ConeKind::SecondOrder: out = soc::quad(blk.nt, d); break;
        case ConeKind::PSD: out = svec(blk.G * smat(d) * blk.G); break;
        case ConeKind::Free: break;
      }
    }
    return r;
  }

  Vec jordan(const Vec& a, const Vec& b) const {
    Vec r = Vec::Zero(n_);
    for (const auto& blk : blocks_) {
      const auto ua = a.segment(blk.offset, blk.dim);
      const auto ub = b.segment(blk.offset, blk.dim);
      auto out = r.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg: out = ua.array() * ub.array(); break;
        case ConeKind::SecondOrder: out = soc::jordan(ua, ub); break;
        case ConeKind::PSD: {
          const Mat Ma = smat(ua), Mb = smat(ub);
          out = svec(T(0.5) * (Ma * Mb + Mb * Ma));
          break;
        }
        case ConeKind::Free: break;
      }
    }
    return r;
  }

  Vec jordan_solve(const Vec& lam, const Vec& rhs) const {
    Vec r = Vec::Zero(n_);
    for (const auto& blk : blocks_) {
      const auto l = lam.segment(blk.offset, blk.dim);
      const auto q = rhs.segment(blk.offset, blk.dim);
      auto out = r.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg: out = q.array() / l.array(); break;
        case ConeKind::SecondOrder: out = soc::jordan_solve(l, q); break;
        case ConeKind::PSD: {
          Mat Q = smat(q);
          const Vec& ld = blk.lam_diag;
          for (int i = 0; i < blk.side; ++i)
            for (int j = 0; j < blk.side; ++j) Q(i, j) *= T(2) / (ld[i] + ld[j]);
          out = svec(Q);
          break;
        }
        case ConeKind::Free: break;
      }
    }
    return r;
  }

  bool factor() {
    Mat M = Mat::Zero(m_, m_);
    for (const auto& blk : blocks_) {
      const SpMat Ab = A_.middleCols(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg: {
          const Vec d = blk.w.array().square();
          M += Mat(Ab * d.asDiagonal() * Ab.transpose());
          break;
        }
        case ConeKind::SecondOrder: {
          const Vec aw = Ab * blk.nt;
          const T dw = soc::det(blk.nt);
          Vec jdiag = -Vec::Ones(blk.dim);
          jdiag[0] = 1.0;
          M += T(2) * aw * aw.transpose();
          M -= dw * Mat(Ab * jdiag.asDiagonal() * Ab.transpose());
          break;
        }
        case ConeKind::PSD: {
          const long nr = static_cast<long>(blk.rows.size());
          if (nr == 0) break;
          Mat Tm(blk.dim, nr);
          for (long k = 0; k < nr; ++k) {
            const Mat AG = blk.row_mats[k] * blk.G;
            Tm.col(k) = svec(blk.G * AG);
          }
          const Mat P = Ab * Tm;  // m x nr
          for (long k = 0; k < nr; ++k) M.col(blk.rows[k]) += P.col(k);
          break;
        }
        case ConeKind::Free: break;
      }
    }
    M = T(0.5) * (M + M.transpose()).eval();
    M_ = M;
    const long nf = Af_.cols();
    T reg = T(settings_.static_reg) * (std::numeric_limits<T>::epsilon() / std::numeric_limits<double>::epsilon());
    if (nf == 0) {
      for (int attempt = 0; attempt < 8; ++attempt) {
        Mat Mr = M;
        Mr.diagonal().array() += reg;
        llt_.compute(Mr);
        if (llt_.info() == Eigen::Success) return true;
        reg *= 100.0;
      }
      return false;
    }
    Mat K = Mat::Zero(m_ + nf, m_ + nf);
    K.topLeftCorner(m_, m_) = M;
    K.topLeftCorner(m_, m_).diagonal().array() += reg;
    K.topRightCorner(m_, nf) = Af_;
    K.bottomLeftCorner(nf, m_) = Af_.transpose();
    K.bottomRightCorner(nf, nf).diagonal().array() = -reg;
    lu_.compute(K);
    return std::isfinite(lu_.rcond()) && lu_.rcond() > 0;
  }

  void solve_reduced(const Vec& h1, const Vec& h2, Vec& dy, Vec& dxf) const {
    const long nf = Af_.cols();
    if (nf == 0) {
      dy = llt_.solve(h1);
      dxf.resize(0);
      return;
    }
    Vec rhs(m_ + nf);
    rhs << h1, h2;
    const Vec z = lu_.solve(rhs);
    dy = z.head(m_);
    dxf = z.tail(nf);
  }

  // Solve  A dx = r1,  A'dy + ds = r2 (ds_free = 0),  dx_K + Q ds_K = r3.
  void solve_kkt(const Vec& r1, const Vec& r2, const Vec& r3, Vec& dx, Vec& dy, Vec& ds) const {
    dx = Vec::Zero(n_);
    dy = Vec::Zero(m_);
    ds = Vec::Zero(n_);
    Vec e1 = r1, e2 = r2, e3 = r3;
    for (int round = 0; round < kRefineRounds; ++round) {
      Vec e2k = e2;
      for (int j : free_cols_) e2k[j] = 0.0;
      const Vec h1 = e1 - A_ * e3 + A_ * apply_q(e2k);
      Vec h2(free_cols_.size());
      for (std::size_t j = 0; j < free_cols_.size(); ++j) h2[j] = e2[free_cols_[j]];
      Vec cy, cxf;
      solve_reduced(h1, h2, cy, cxf);
      Vec cs = e2k - At_ * cy;
      for (int j : free_cols_) cs[j] = 0.0;
      Vec cx = e3 - apply_q(cs);
      for (std::size_t j = 0; j < free_cols_.size(); ++j) cx[free_cols_[j]] = cxf[j];
      dx += cx;
      dy += cy;
      ds += cs;
      // residuals of the full system
      e1 = r1 - A_ * dx;
      e2 = r2 - At_ * dy - ds;
      for (const auto& blk : blocks_) e2.segment(blk.offset, blk.dim).setZero();
      e3 = Vec::Zero(n_);
      if (e1.norm() + e2.norm() <= T(100) * std::numeric_limits<T>::epsilon() * (T(1) + r1.norm() + r2.norm())) break;
    }
  }

  T max_step(const Vec& x, const Vec& s, T tau, T kappa, const Vec& dx, const Vec& ds, T dtau,
             T dkappa) const {
    T a = std::numeric_limits<T>::infinity();
    if (dtau < 0) a = std::min(a, -tau / dtau);
    if (dkappa < 0) a = std::min(a, -kappa / dkappa);
    for (const auto& blk : blocks_) {
      const auto xb = x.segment(blk.offset, blk.dim);
      const auto sb = s.segment(blk.offset, blk.dim);
      const auto dxb = dx.segment(blk.offset, blk.dim);
      const auto dsb = ds.segment(blk.offset, blk.dim);
      switch (blk.kind) {
        case ConeKind::NonNeg:
          for (int i = 0; i < blk.dim; ++i) {
            if (dxb[i] < 0) a = std::min(a, -xb[i] / dxb[i]);
            if (dsb[i] < 0) a = std::min(a, -sb[i] / dsb[i]);
          }
          break;
        case ConeKind::SecondOrder:
          a = std::min(a, soc::max_step(xb, dxb));
          a = std::min(a, soc::max_step(sb, dsb));
          break;
        case ConeKind::PSD: {
          const Vec isq = blk.lam_diag.array().rsqrt();
          const Mat dX = isq.asDiagonal() * (blk.Rti.transpose() * smat(dxb) * blk.Rti) * isq.asDiagonal();
          const Mat dS = isq.asDiagonal() * (blk.R.transpose() * smat(dsb) * blk.R) * isq.asDiagonal();
          for (const Mat* D : {&dX, &dS}) {
            Eigen::SelfAdjointEigenSolver<Mat> es(*D, Eigen::EigenvaluesOnly);
            const T emin = es.eigenvalues().minCoeff();
            if (emin < 0) a = std::min(a, T(-1) / emin);
          }
          break;
        }
        case ConeKind::Free: break;
      }
    }
    return a;
  }

  static constexpr int kRefineRounds = std::is_same_v<T, double> ? 3 : 8;

  SolverSettings settings_;
  int n_ = 0;
  int m_ = 0;
  int m_in_ = 0;
  std::vector<int> row_map_;
  bool infeasible_presolve_ = false;
  SpMat A_;
  SpMat At_;
  Vec b_, c_;
  Vec row_scale_, col_scale_;
  double b0norm_ = 1.0, c0norm_ = 1.0;
  Mat Af_;
  std::vector<int> free_cols_;
  std::vector<Blk> blocks_;
  int nu_ = 0;
  Mat M_;
  Eigen::LLT<Mat> llt_;
  Eigen::PartialPivLU<Mat> lu_;
};

}  // namespace detail

/// Solve min c'x s.t. Ax = b, x in K.
inline ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings = {}) {
  settings.validate();
  try {
    prog.validate();
  } catch (const std::invalid_argument& e) {
    throw DimensionError(e.what());
  }
  if (settings.extended_precision) {
    detail::IpmEngine<long double> engine(prog, settings);
    return engine.run();
  }
  detail::IpmEngine<double> engine(prog, settings);
  return engine.run();
}

}  // namespace regmomsos::conic
