#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <vector>

#include "pivot/types.hpp"

namespace pivot {

/// Convex quadratic program
///   min 1/2 x'Hx + c'x
///   s.t. A_eq x = b_eq,  A_in x >= b_in,  lb <= x <= ub.
/// H must be symmetric positive semidefinite. Box bounds are optional
/// (size 0 or n; +-inf entries allowed).
template <typename Scalar>
struct QProblem {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Mat H;
  Vec c;
  Mat A_eq{0, 0};
  Vec b_eq{0};
  Mat A_in{0, 0};
  Vec b_in{0};
  Vec lb{0}, ub{0};
};

enum class QPStatus { Optimal, Infeasible, MaxIter };

template <typename Scalar>
struct QSolution {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar objective = 0;
  QPStatus status = QPStatus::MaxIter;
  int iterations = 0;
};

namespace qp_detail {

template <typename Scalar>
struct Dense {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
};

// Primal active-set iteration from a feasible start. `nw_eq` leading rows of
// (A, b) are equalities and stay in the working set forever; the rest are
// inequalities A x >= b. Returns multipliers for the final working set.
template <typename Scalar>
QSolution<Scalar> active_set(const typename Dense<Scalar>::Mat& H,
                             const typename Dense<Scalar>::Vec& c,
                             const typename Dense<Scalar>::Mat& A,
                             const typename Dense<Scalar>::Vec& b, int nw_eq,
                             typename Dense<Scalar>::Vec x, int max_iter) {
  using Mat = typename Dense<Scalar>::Mat;
  using Vec = typename Dense<Scalar>::Vec;
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(A.rows());
  const Scalar tol_step = Scalar(1e-11);
  const Scalar tol_mult = Scalar(1e-9);
  const Scalar tol_dir = Scalar(1e-12);

  std::vector<bool> in_w(m, false);
  for (int i = 0; i < nw_eq; ++i) in_w[i] = true;

  QSolution<Scalar> sol;
  for (int iter = 0; iter < max_iter; ++iter) {
    sol.iterations = iter + 1;
    std::vector<int> w;
    for (int i = 0; i < m; ++i)
      if (in_w[i]) w.push_back(i);
    const int k = static_cast<int>(w.size());

    Mat kkt = Mat::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = H;
    for (int i = 0; i < k; ++i) {
      kkt.block(n + i, 0, 1, n) = A.row(w[i]);
      kkt.block(0, n + i, n, 1) = A.row(w[i]).transpose();
    }
    Vec rhs(n + k);
    rhs.head(n) = -(H * x + c);
    rhs.tail(k).setZero();
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(kkt);
    Vec pl = cod.solve(rhs);
    Scalar solve_res = (kkt * pl - rhs).template lpNorm<Eigen::Infinity>();
    Vec p = pl.head(n);
    // the assembled system solves H p + A_w' mu = -(H x + c); the sign
    // convention for A x >= b multipliers (g = A_w' lambda, lambda >= 0)
    // is the negation
    Vec lambda = -pl.tail(k);
    if (solve_res > Scalar(1e-7) * (Scalar(1) + rhs.template lpNorm<Eigen::Infinity>()))
      p.setZero();  // inconsistent KKT (dependent working set): try removal

    Scalar alpha = Scalar(1);
    int blocker = -1;
    for (int i = nw_eq; i < m; ++i) {
      if (in_w[i]) continue;
      Scalar d = A.row(i).dot(p);
      if (d >= -tol_dir) continue;
      Scalar room = b(i) - A.row(i).dot(x);
      Scalar a = std::max(Scalar(0), room / d);
      if (a < alpha) {
        alpha = a;
        blocker = i;
      }
    }

    bool stationary = p.template lpNorm<Eigen::Infinity>() <= tol_step;
    if (!stationary && blocker < 0) {
      // an ill-conditioned KKT solve can return noise-level steps that stay
      // above any absolute threshold; an unblocked step with no objective
      // progress is stationary on the working set
      Scalar f_now = Scalar(0.5) * x.dot(H * x) + c.dot(x);
      Vec x_full = x + p;
      Scalar f_full = Scalar(0.5) * x_full.dot(H * x_full) + c.dot(x_full);
      stationary = f_full >= f_now - Scalar(1e-14) * (Scalar(1) + std::abs(f_now));
    }

    if (stationary) {
      int worst = -1;
      Scalar worst_l = -tol_mult;
      for (int i = 0; i < k; ++i) {
        if (w[i] < nw_eq) continue;  // equalities keep any sign
        if (lambda(i) < worst_l) {
          worst_l = lambda(i);
          worst = w[i];
        }
      }
      if (worst < 0) {
        sol.x = x;
        sol.status = QPStatus::Optimal;
        return sol;
      }
      in_w[worst] = false;
      continue;
    }

    x += alpha * p;
    if (blocker >= 0 && alpha < Scalar(1)) in_w[blocker] = true;
  }
  sol.x = x;
  sol.status = QPStatus::MaxIter;
  return sol;
}

}  // namespace qp_detail

struct QPOptions {
  int max_iter = 0;              // 0: automatic from the problem size
  double feas_tol = 1e-7;        // phase-1 decision threshold
  double primal_check = 1e-6;    // certified feasibility residual
  double kkt_check = 1e-5;       // certified stationarity residual
};

template <typename Scalar>
QSolution<Scalar> solve(const QProblem<Scalar>& prob, const QPOptions& opt = {}) {
  using Mat = typename qp_detail::Dense<Scalar>::Mat;
  using Vec = typename qp_detail::Dense<Scalar>::Vec;
  const int n = static_cast<int>(prob.H.rows());
  const Scalar inf = std::numeric_limits<Scalar>::infinity();

  if (prob.H.cols() != n || prob.c.size() != n) throw DimensionMismatch("H/c sizes");
  if (prob.A_eq.rows() != prob.b_eq.size() || (prob.A_eq.rows() > 0 && prob.A_eq.cols() != n))
    throw DimensionMismatch("equality system");
  if (prob.A_in.rows() != prob.b_in.size() || (prob.A_in.rows() > 0 && prob.A_in.cols() != n))
    throw DimensionMismatch("inequality system");
  if (prob.lb.size() != 0 && prob.lb.size() != n) throw DimensionMismatch("lb");
  if (prob.ub.size() != 0 && prob.ub.size() != n) throw DimensionMismatch("ub");

  Scalar hscale = n > 0 ? prob.H.template lpNorm<Eigen::Infinity>() : Scalar(0);
  if (n > 0) {
    if ((prob.H - prob.H.transpose()).template lpNorm<Eigen::Infinity>() >
        Scalar(1e-9) * (Scalar(1) + hscale))
      throw NotPSD("H is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(Scalar(0.5) * (prob.H + prob.H.transpose()),
                                          Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < Scalar(-1e-8) * (Scalar(1) + hscale))
      throw NotPSD("H has a negative eigenvalue");
  }

  // Gather all inequalities (rows + finite box bounds) into one system.
  std::vector<int> box_rows;
  int m_in = static_cast<int>(prob.A_in.rows());
  int extra = 0;
  if (prob.lb.size() == n)
    for (int i = 0; i < n; ++i)
      if (prob.lb(i) > -inf) ++extra;
  if (prob.ub.size() == n)
    for (int i = 0; i < n; ++i)
      if (prob.ub(i) < inf) ++extra;
  Mat Ain(m_in + extra, n);
  Vec bin(m_in + extra);
  if (m_in > 0) {
    Ain.topRows(m_in) = prob.A_in;
    bin.head(m_in) = prob.b_in;
  }
  int r = m_in;
  if (prob.lb.size() == n)
    for (int i = 0; i < n; ++i)
      if (prob.lb(i) > -inf) {
        Ain.row(r).setZero();
        Ain(r, i) = Scalar(1);
        bin(r) = prob.lb(i);
        ++r;
      }
  if (prob.ub.size() == n)
    for (int i = 0; i < n; ++i)
      if (prob.ub(i) < inf) {
        Ain.row(r).setZero();
        Ain(r, i) = Scalar(-1);
        bin(r) = -prob.ub(i);
        ++r;
      }
  const int m = static_cast<int>(Ain.rows());
  const int me = static_cast<int>(prob.A_eq.rows());
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 100 + 20 * (n + m + me);

  QSolution<Scalar> sol;
  if (n == 0) {
    bool ok = (me == 0 || prob.b_eq.template lpNorm<Eigen::Infinity>() <= opt.feas_tol) &&
              (m == 0 || bin.maxCoeff() <= opt.feas_tol);
    sol.x.resize(0);
    sol.status = ok ? QPStatus::Optimal : QPStatus::Infeasible;
    return sol;
  }

  // Start: least-norm solution of the equalities (or zero).
  Vec x0 = Vec::Zero(n);
  if (me > 0) {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(prob.A_eq);
    x0 = cod.solve(prob.b_eq);
    if ((prob.A_eq * x0 - prob.b_eq).template lpNorm<Eigen::Infinity>() >
        Scalar(opt.feas_tol) * (Scalar(1) + prob.b_eq.template lpNorm<Eigen::Infinity>())) {
      sol.status = QPStatus::Infeasible;  // equalities inconsistent
      sol.x = x0;
      return sol;
    }
  }

  // Phase 1 when x0 violates inequalities: slack variables on violated rows.
  Vec viol = m > 0 ? Vec(bin - Ain * x0) : Vec();
  std::vector<int> bad;
  for (int i = 0; i < m; ++i)
    if (viol(i) > opt.feas_tol) bad.push_back(i);
  Vec x = x0;
  if (!bad.empty()) {
    const int ns = static_cast<int>(bad.size());
    const int N = n + ns;
    Mat H1 = Mat::Zero(N, N);
    Vec c1 = Vec::Zero(N);
    const Scalar eps_reg = Scalar(1e-8);
    H1.topLeftCorner(n, n) = eps_reg * Mat::Identity(n, n);
    H1.bottomRightCorner(ns, ns) = Mat::Identity(ns, ns);
    c1.head(n) = -eps_reg * x0;

    // rows: equalities / all inequalities (violated ones get +slack) / s >= 0
    Mat A1 = Mat::Zero(me + m + ns, N);
    Vec b1(me + m + ns);
    if (me > 0) {
      A1.topLeftCorner(me, n) = prob.A_eq;
      b1.head(me) = prob.b_eq;
    }
    A1.block(me, 0, m, n) = Ain;
    b1.segment(me, m) = bin;
    for (int i = 0; i < ns; ++i) A1(me + bad[i], n + i) = Scalar(1);
    for (int i = 0; i < ns; ++i) {
      A1(me + m + i, n + i) = Scalar(1);
      b1(me + m + i) = Scalar(0);
    }
    Vec y0(N);
    y0.head(n) = x0;
    for (int i = 0; i < ns; ++i) y0(n + i) = viol(bad[i]) + Scalar(1);
    auto ph1 = qp_detail::active_set<Scalar>(H1, c1, A1, b1, me, y0, max_iter + 20 * ns);
    Scalar worst = ph1.x.tail(ns).template lpNorm<Eigen::Infinity>();
    if (ph1.status != QPStatus::Optimal && worst > opt.feas_tol) {
      sol.status = QPStatus::MaxIter;
      sol.x = ph1.x.head(n);
      return sol;
    }
    if (worst > opt.feas_tol) {
      sol.status = QPStatus::Infeasible;  // certified: min slack is positive
      sol.x = ph1.x.head(n);
      return sol;
    }
    x = ph1.x.head(n);
  }

  // Phase 2.
  Mat A(me + m, n);
  Vec b(me + m);
  if (me > 0) {
    A.topRows(me) = prob.A_eq;
    b.head(me) = prob.b_eq;
  }
  if (m > 0) {
    A.bottomRows(m) = Ain;
    b.tail(m) = bin;
  }
  sol = qp_detail::active_set<Scalar>(prob.H, prob.c, A, b, me, x, max_iter);
  sol.objective = Scalar(0.5) * sol.x.dot(prob.H * sol.x) + prob.c.dot(sol.x);
  if (sol.status != QPStatus::Optimal) return sol;

  // Certify the result; degrade to MaxIter rather than claim optimality.
  Scalar primal = 0;
  if (me > 0)
    primal = std::max(primal,
                      (prob.A_eq * sol.x - prob.b_eq).template lpNorm<Eigen::Infinity>());
  if (m > 0) primal = std::max(primal, std::max(Scalar(0), (bin - Ain * sol.x).maxCoeff()));
  // stationarity: g = Hx + c must lie in the span of active-constraint rows
  Vec g = prob.H * sol.x + prob.c;
  std::vector<int> act;
  for (int i = 0; i < me; ++i) act.push_back(i);
  for (int i = 0; i < m; ++i)
    if (Ain.row(i).dot(sol.x) - bin(i) < Scalar(1e-7) * (Scalar(1) + std::abs(bin(i))))
      act.push_back(me + i);
  // nonnegative multipliers for inequality rows: least squares, then drop
  // rows whose multiplier comes out negative (dependent rows can flip signs)
  Scalar stat = std::numeric_limits<Scalar>::infinity();
  const Scalar lam_tol = Scalar(-1e-6) * (Scalar(1) + g.template lpNorm<Eigen::Infinity>());
  std::vector<int> keep = act;
  for (size_t pass = 0; pass <= act.size(); ++pass) {
    if (keep.empty()) {
      stat = g.template lpNorm<Eigen::Infinity>();
      break;
    }
    Mat Aact(keep.size(), n);
    for (size_t i = 0; i < keep.size(); ++i) {
      if (keep[i] < me)
        Aact.row(i) = prob.A_eq.row(keep[i]);
      else
        Aact.row(i) = Ain.row(keep[i] - me);
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(Aact.transpose());
    Vec lam = cod.solve(g);
    int worst = -1;
    Scalar worst_l = lam_tol;
    for (size_t i = 0; i < keep.size(); ++i)
      if (keep[i] >= me && lam(i) < worst_l) {
        worst_l = lam(i);
        worst = static_cast<int>(i);
      }
    if (worst < 0) {
      for (size_t i = 0; i < keep.size(); ++i)
        if (keep[i] >= me && lam(i) < 0) lam(i) = 0;
      stat = (Aact.transpose() * lam - g).template lpNorm<Eigen::Infinity>();
      break;
    }
    keep.erase(keep.begin() + worst);
  }
  Scalar scale_b = Scalar(1);
  if (b.size() > 0) scale_b += b.template lpNorm<Eigen::Infinity>();
  Scalar scale_g = Scalar(1) + g.template lpNorm<Eigen::Infinity>();
  if (primal > Scalar(opt.primal_check) * scale_b || stat > Scalar(opt.kkt_check) * scale_g)
    sol.status = QPStatus::MaxIter;
  return sol;
}

using QProblemd = QProblem<Real>;
using QSolutiond = QSolution<Real>;

}  // namespace pivot
