#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "chargeplan/conic.hpp"

namespace chargeplan {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Cone layout over the slack vector: first `orthant` scalar slacks, then
/// second-order blocks (head first) of the listed dimensions.
struct ConeLayout {
  int orthant = 0;
  std::vector<int> soc_dims;

  int total() const {
    int t = orthant;
    for (int d : soc_dims) t += d;
    return t;
  }
  double nu() const { return orthant + 2.0 * static_cast<double>(soc_dims.size()); }
};

/// min c'x  s.t.  A x = b,  s = h - G x in K.
struct StdForm {
  MatrixXd A, G;
  VectorXd b, h, c;
  ConeLayout cones;
  int n = 0;
};

void scale_rows_individually(MatrixXd& M, VectorXd& rhs, int begin, int end) {
  for (int i = begin; i < end; ++i) {
    const double s = std::max(1.0, M.row(i).cwiseAbs().maxCoeff());
    M.row(i) /= s;
    rhs[i] /= s;
  }
}

StdForm build_std_form(const ConicProgram& prog) {
  StdForm f;
  f.n = prog.num_vars();
  int p = 0;
  for (const auto& r : prog.linear_rows)
    if (r.sense == RowSense::EQ) ++p;

  int m_orth = 0;
  for (const auto& r : prog.linear_rows)
    if (r.sense != RowSense::EQ) ++m_orth;
  for (const auto& v : prog.variables) {
    if (std::isfinite(v.lb)) ++m_orth;
    if (std::isfinite(v.ub)) ++m_orth;
  }
  int m_soc = 0;
  for (const auto& soc : prog.soc_blocks) m_soc += 1 + static_cast<int>(soc.tail.size());

  f.A = MatrixXd::Zero(p, f.n);
  f.b = VectorXd::Zero(p);
  f.G = MatrixXd::Zero(m_orth + m_soc, f.n);
  f.h = VectorXd::Zero(m_orth + m_soc);
  f.cones.orthant = m_orth;

  int ia = 0, ig = 0;
  for (const auto& r : prog.linear_rows) {
    if (r.sense == RowSense::EQ) {
      for (auto [j, c] : r.coeffs) f.A(ia, j) += c;
      f.b[ia] = r.rhs;
      ++ia;
    } else {
      const double sgn = r.sense == RowSense::LE ? 1.0 : -1.0;
      for (auto [j, c] : r.coeffs) f.G(ig, j) += sgn * c;
      f.h[ig] = sgn * r.rhs;
      ++ig;
    }
  }
  for (int j = 0; j < f.n; ++j) {
    const auto& v = prog.variables[j];
    if (std::isfinite(v.lb)) {
      f.G(ig, j) = -1.0;
      f.h[ig] = -v.lb;
      ++ig;
    }
    if (std::isfinite(v.ub)) {
      f.G(ig, j) = 1.0;
      f.h[ig] = v.ub;
      ++ig;
    }
  }
  for (const auto& soc : prog.soc_blocks) {
    const int d = 1 + static_cast<int>(soc.tail.size());
    const int start = ig;
    for (auto [j, c] : soc.head.coeffs) f.G(ig, j) -= c;
    f.h[ig] = soc.head.constant;
    ++ig;
    for (const auto& u : soc.tail) {
      for (auto [j, c] : u.coeffs) f.G(ig, j) -= c;
      f.h[ig] = u.constant;
      ++ig;
    }
    f.cones.soc_dims.push_back(d);
    // Uniform scaling inside a block keeps the cone geometry intact.
    double s = 1.0;
    for (int i = start; i < start + d; ++i) s = std::max(s, f.G.row(i).cwiseAbs().maxCoeff());
    f.G.middleRows(start, d) /= s;
    f.h.segment(start, d) /= s;
  }
  scale_rows_individually(f.G, f.h, 0, m_orth);
  scale_rows_individually(f.A, f.b, 0, p);

  f.c = VectorXd::Zero(f.n);
  for (auto [j, c] : prog.objective) f.c[j] += c;
  return f;
}

/// Strict-interior margin of s: min orthant slack and SOC head-minus-norm.
double interior_margin(const StdForm& f, const VectorXd& s) {
  double m = kInf;
  for (int i = 0; i < f.cones.orthant; ++i) m = std::min(m, s[i]);
  int at = f.cones.orthant;
  for (int d : f.cones.soc_dims) {
    const double nrm = s.segment(at + 1, d - 1).norm();
    m = std::min(m, s[at] - nrm);
    at += d;
  }
  return m;
}

/// q = grad of the log barrier in s.
void barrier_gradient(const StdForm& f, const VectorXd& s, VectorXd& q) {
  q = VectorXd::Zero(f.G.rows());
  for (int i = 0; i < f.cones.orthant; ++i) q[i] = -1.0 / s[i];
  int at = f.cones.orthant;
  for (int d : f.cones.soc_dims) {
    const double s0 = s[at];
    const auto sbar = s.segment(at + 1, d - 1);
    const double dd = s0 * s0 - sbar.squaredNorm();
    q[at] = -2.0 * s0 / dd;
    q.segment(at + 1, d - 1) = 2.0 / dd * sbar;
    at += d;
  }
}

/// -sum log of the cone slacks (+inf outside the interior).
double barrier_value(const StdForm& f, const VectorXd& s) {
  double val = 0.0;
  for (int i = 0; i < f.cones.orthant; ++i) {
    if (s[i] <= 0.0) return kInf;
    val -= std::log(s[i]);
  }
  int at = f.cones.orthant;
  for (int d : f.cones.soc_dims) {
    const double dd = s[at] * s[at] - s.segment(at + 1, d - 1).squaredNorm();
    if (s[at] <= 0.0 || dd <= 0.0) return kInf;
    val -= std::log(dd);
    at += d;
  }
  return val;
}

/// q = grad of the log barrier in s; H accumulated as G' * hess * G.
void barrier_derivatives(const StdForm& f, const VectorXd& s, VectorXd& q, MatrixXd& H) {
  const int n = f.n;
  q = VectorXd::Zero(f.G.rows());
  H = MatrixXd::Zero(n, n);
  if (f.cones.orthant > 0) {
    MatrixXd Gs(f.cones.orthant, n);
    for (int i = 0; i < f.cones.orthant; ++i) {
      q[i] = -1.0 / s[i];
      Gs.row(i) = f.G.row(i) / s[i];
    }
    H.selfadjointView<Eigen::Lower>().rankUpdate(Gs.transpose());
  }
  int at = f.cones.orthant;
  for (int d : f.cones.soc_dims) {
    const double s0 = s[at];
    const auto sbar = s.segment(at + 1, d - 1);
    const double dd = s0 * s0 - sbar.squaredNorm();
    q[at] = -2.0 * s0 / dd;
    q.segment(at + 1, d - 1) = 2.0 / dd * sbar;
    const auto Gb = f.G.middleRows(at, d);
    VectorXd w = VectorXd(d);
    w[0] = s0;
    w.tail(d - 1) = -sbar;
    const VectorXd Gw = Gb.transpose() * w;
    H.selfadjointView<Eigen::Lower>().rankUpdate(Gb.bottomRows(d - 1).transpose(),
                                                 2.0 / dd);
    H.selfadjointView<Eigen::Lower>().rankUpdate(Gb.row(0).transpose(), -2.0 / dd);
    H.selfadjointView<Eigen::Lower>().rankUpdate(Gw, 4.0 / (dd * dd));
    at += d;
  }
  H = H.selfadjointView<Eigen::Lower>();
}

/// Largest step keeping s + alpha*ds strictly inside the cones.
double max_step(const StdForm& f, const VectorXd& s, const VectorXd& ds) {
  double alpha = kInf;
  for (int i = 0; i < f.cones.orthant; ++i)
    if (ds[i] < 0.0) alpha = std::min(alpha, -s[i] / ds[i]);
  int at = f.cones.orthant;
  for (int d : f.cones.soc_dims) {
    const double s0 = s[at], d0 = ds[at];
    const auto sbar = s.segment(at + 1, d - 1);
    const auto dbar = ds.segment(at + 1, d - 1);
    if (d0 < 0.0) alpha = std::min(alpha, -s0 / d0);
    const double a2 = d0 * d0 - dbar.squaredNorm();
    const double a1 = 2.0 * (s0 * d0 - sbar.dot(dbar));
    const double a0 = s0 * s0 - sbar.squaredNorm();
    // Smallest positive root of a2 t^2 + a1 t + a0 = 0 bounds the step.
    double root = kInf;
    if (std::abs(a2) < 1e-14) {
      if (a1 < 0.0) root = -a0 / a1;
    } else {
      const double disc = a1 * a1 - 4.0 * a2 * a0;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (double r : {(-a1 - sq) / (2.0 * a2), (-a1 + sq) / (2.0 * a2)})
          if (r > 0.0) root = std::min(root, r);
      }
    }
    alpha = std::min(alpha, root);
    at += d;
  }
  return alpha;
}

struct NewtonState {
  VectorXd x, nu;
};

enum class CenterOutcome { Converged, EarlyExit, Stalled };

/// Infeasible-start Newton centering for t*c'x + barrier, A x = b.
/// `early_exit` (optional) stops as soon as the predicate holds.
template <typename Predicate>
CenterOutcome center(const StdForm& f, double t, NewtonState& st, int max_iter,
                     Predicate early_exit, bool log) {
  const int n = f.n, p = static_cast<int>(f.A.rows());
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd s = f.h - f.G * st.x;
    if (interior_margin(f, s) <= 0.0) {
      if (log) std::fprintf(stderr, "      newton it=%d t=%.1e margin<=0\n", it, t);
      return CenterOutcome::Stalled;
    }
    if (early_exit(st.x)) return CenterOutcome::EarlyExit;
    VectorXd q;
    MatrixXd H;
    barrier_derivatives(f, s, q, H);
    VectorXd r_dual = t * f.c - f.G.transpose() * q;
    if (p > 0) r_dual += f.A.transpose() * st.nu;
    const VectorXd r_pri = p > 0 ? VectorXd(f.A * st.x - f.b) : VectorXd();
    const double rpn = p > 0 ? r_pri.norm() : 0.0;
    const double rnorm = std::sqrt(r_dual.squaredNorm() + rpn * rpn);
    if (r_dual.norm() <= 1e-9 * (1.0 + t) && rpn <= 1e-9) return CenterOutcome::Converged;

    // KKT solve on the full augmented matrix with LU. Factoring the block
    // system directly (instead of a Schur complement through H^-1) keeps the
    // conditioning at kappa(H) rather than kappa(H)^2, which matters once
    // active slacks reach ~1e-8 near the end of the weight schedule.
    // Refinement passes keep the steps on the equality manifold, which the
    // Armijo descent argument below depends on.
    VectorXd dx(n), dnu(p);
    MatrixXd K = MatrixXd::Zero(n + p, n + p);
    K.topLeftCorner(n, n) = H;
    if (p > 0) {
      K.topRightCorner(n, p) = f.A.transpose();
      K.bottomLeftCorner(p, n) = f.A;
    }
    VectorXd rhs(n + p);
    rhs.head(n) = -r_dual;
    if (p > 0) rhs.tail(p) = -r_pri;
    const double rhsn = 1.0 + rhs.norm();
    double delta = 0.0;
    bool solved = false;
    for (int attempt = 0; attempt < 6 && !solved; ++attempt) {
      MatrixXd Kd = K;
      if (delta > 0.0) {
        Kd.topLeftCorner(n, n).diagonal().array() += delta;
        if (p > 0) Kd.bottomRightCorner(p, p).diagonal().array() -= delta;
      }
      Eigen::PartialPivLU<MatrixXd> lu(Kd);
      VectorXd sol = lu.solve(rhs);
      for (int pass = 0; pass < 2 && sol.allFinite(); ++pass)
        sol += lu.solve(rhs - K * sol);
      if (sol.allFinite() && (rhs - K * sol).norm() <= 1e-8 * rhsn) {
        dx = sol.head(n);
        if (p > 0) dnu = sol.tail(p);
        solved = true;
      } else {
        delta = delta == 0.0 ? 1e-14 * (1.0 + H.diagonal().cwiseAbs().maxCoeff()) : delta * 1e4;
      }
    }
    if (!solved) {
      if (log) std::fprintf(stderr, "      newton it=%d t=%.1e kkt failure\n", it, t);
      return CenterOutcome::Stalled;
    }
    const VectorXd ds = -(f.G * dx);
    // Armijo on the true barrier objective. Iterates stay (numerically) on
    // the equality manifold, so descent along the Newton direction is
    // guaranteed even when the cone boundary caps the step severely.
    const double phi = t * f.c.dot(st.x) + barrier_value(f, s);
    const double descent = (t * f.c - f.G.transpose() * q).dot(dx);
    double alpha = std::min(1.0, 0.995 * max_step(f, s, ds));
    bool accepted = false;
    if (descent < 0.0) {
      for (int bt = 0; bt < 60; ++bt) {
        const VectorXd xn = st.x + alpha * dx;
        const VectorXd sn = f.h - f.G * xn;
        const double phin = t * f.c.dot(xn) + barrier_value(f, sn);
        if (std::isfinite(phin) && phin <= phi + 0.01 * alpha * descent) {
          st.x = xn;
          if (p > 0) st.nu += alpha * dnu;
          accepted = true;
          break;
        }
        alpha *= 0.5;
        if (alpha < 1e-14) break;
      }
    } else {
      // Equality-restoration regime: fall back to accepting on combined
      // residual decrease.
      for (int bt = 0; bt < 60; ++bt) {
        const VectorXd xn = st.x + alpha * dx;
        const VectorXd sn = f.h - f.G * xn;
        if (interior_margin(f, sn) > 0.0) {
          VectorXd qn;
          barrier_gradient(f, sn, qn);
          VectorXd rd = t * f.c - f.G.transpose() * qn;
          if (p > 0) rd += f.A.transpose() * (st.nu + alpha * dnu);
          const double rpn2 = p > 0 ? (f.A * xn - f.b).squaredNorm() : 0.0;
          if (std::sqrt(rd.squaredNorm() + rpn2) <= (1.0 - 1e-4 * alpha) * rnorm) {
            st.x = xn;
            if (p > 0) st.nu += alpha * dnu;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
        if (alpha < 1e-14) break;
      }
    }
    if (log)
      std::fprintf(stderr, "      newton it=%d t=%.1e r=%.3e a=%.2e acc=%d desc=%.2e\n", it, t,
                   rnorm, alpha, accepted ? 1 : 0, descent);
    // A step the merit function cannot improve means the iterate is as
    // centered as the conditioning allows; take it when the residual is
    // already far below what the next path stage needs.
    if (!accepted)
      return rnorm <= 1e-4 * (1.0 + t) ? CenterOutcome::Converged : CenterOutcome::Stalled;
    if (alpha * dx.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + st.x.lpNorm<Eigen::Infinity>()))
      return rnorm <= 1e-4 * (1.0 + t) ? CenterOutcome::Converged : CenterOutcome::Stalled;
  }
  if (log) std::fprintf(stderr, "      newton t=%.1e iteration cap\n", t);
  return CenterOutcome::Stalled;
}

bool no_early_exit(const VectorXd&) { return false; }

/// Minimum-norm correction of x onto A x = b, refined to near machine
/// precision; returns false when the rows are inconsistent.
bool project_equalities(const MatrixXd& A, const VectorXd& b, VectorXd& x, double tol) {
  const int p = static_cast<int>(A.rows());
  if (p == 0) return true;
  MatrixXd AAt = A * A.transpose();
  AAt.diagonal().array() += 1e-13 * (1.0 + AAt.diagonal().cwiseAbs().maxCoeff());
  Eigen::LLT<MatrixXd> llt(AAt);
  if (llt.info() != Eigen::Success) return false;
  for (int pass = 0; pass < 4; ++pass) {
    const VectorXd r = b - A * x;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + b.lpNorm<Eigen::Infinity>())) break;
    x += A.transpose() * llt.solve(r);
  }
  return (A * x - b).lpNorm<Eigen::Infinity>() <= tol * (1.0 + b.lpNorm<Eigen::Infinity>());
}

/// Least-norm solution of A x = b.
bool least_norm_point(const MatrixXd& A, const VectorXd& b, VectorXd& x, double tol) {
  x = VectorXd::Zero(A.cols());
  return project_equalities(A, b, x, tol);
}

/// Phase-I program: minimize the uniform cone shift tau over (x, tau).
StdForm build_phase1(const StdForm& f) {
  StdForm g;
  g.n = f.n + 1;
  g.A = MatrixXd::Zero(f.A.rows(), g.n);
  g.A.leftCols(f.n) = f.A;
  g.b = f.b;
  const int m = static_cast<int>(f.G.rows());
  g.G = MatrixXd::Zero(m + 1, g.n);
  g.h = VectorXd::Zero(m + 1);
  const int mo = f.cones.orthant;
  g.G.topLeftCorner(mo, f.n) = f.G.topRows(mo);
  g.h.head(mo) = f.h.head(mo);
  for (int i = 0; i < mo; ++i) g.G(i, f.n) = -1.0;
  g.G(mo, f.n) = -1.0;  // tau >= -1 keeps phase I bounded
  g.h[mo] = 1.0;
  int src = mo, dst = mo + 1;
  for (int d : f.cones.soc_dims) {
    g.G.block(dst, 0, d, f.n) = f.G.middleRows(src, d);
    g.h.segment(dst, d) = f.h.segment(src, d);
    g.G(dst, f.n) = -1.0;  // shift applies to the cone head only
    src += d;
    dst += d;
  }
  g.cones.orthant = mo + 1;
  g.cones.soc_dims = f.cones.soc_dims;
  g.c = VectorXd::Zero(g.n);
  g.c[f.n] = 1.0;
  return g;
}

/// Keeps a maximal independent subset of the equality rows, preserving the
/// original order.  Callers must already know the dropped rows are consistent
/// with the kept ones (here: a point satisfying all of them exists).
void drop_dependent_equalities(MatrixXd& A, VectorXd& b) {
  if (A.rows() == 0) return;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A.transpose());
  qr.setThreshold(1e-10);
  const int r = static_cast<int>(qr.rank());
  if (r >= A.rows()) return;
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> keep(perm.data(), perm.data() + r);
  std::sort(keep.begin(), keep.end());
  MatrixXd A2(r, A.cols());
  VectorXd b2(r);
  for (int i = 0; i < r; ++i) {
    A2.row(i) = A.row(keep[i]);
    b2[i] = b[keep[i]];
  }
  A = std::move(A2);
  b = std::move(b2);
}

/// Phase I can converge with the shift at exactly zero: the set is feasible
/// but has no interior because some rows hold with equality at every feasible
/// point (a pinned binary collapsing a whole energy chain, for instance).
/// At the phase-I analytic center those rows are the ones with vanishing
/// slack; promoting them to equality rows restores an interior for the rest.
/// Returns false when no row qualifies.
bool promote_implied_equalities(StdForm& f, const VectorXd& s0) {
  const int rows = static_cast<int>(f.G.rows());
  std::vector<char> to_eq(rows, 0);
  auto tight = [&](int i) { return s0[i] <= 1e-7 * (1.0 + std::abs(f.h[i])); };
  int count = 0;
  for (int i = 0; i < f.cones.orthant; ++i) {
    if (tight(i)) {
      to_eq[i] = 1;
      ++count;
    }
  }
  std::vector<int> kept_socs;
  int at = f.cones.orthant;
  for (int d : f.cones.soc_dims) {
    // A cone whose head slack vanishes has zero radius: every tail entry is
    // an implied equality as well.
    if (tight(at)) {
      for (int k = 0; k < d; ++k) to_eq[at + k] = 1;
      count += d;
    } else {
      kept_socs.push_back(d);
    }
    at += d;
  }
  if (count == 0) return false;
  MatrixXd G(rows - count, f.n), A(f.A.rows() + count, f.n);
  VectorXd h(rows - count), b(f.A.rows() + count);
  A.topRows(f.A.rows()) = f.A;
  b.head(f.A.rows()) = f.b;
  int gi = 0, ai = static_cast<int>(f.A.rows());
  int orthant = 0;
  for (int i = 0; i < rows; ++i) {
    if (to_eq[i]) {
      A.row(ai) = f.G.row(i);
      b[ai++] = f.h[i];
    } else {
      if (i < f.cones.orthant) ++orthant;
      G.row(gi) = f.G.row(i);
      h[gi++] = f.h[i];
    }
  }
  f.G = std::move(G);
  f.h = std::move(h);
  f.A = std::move(A);
  f.b = std::move(b);
  f.cones.orthant = orthant;
  f.cones.soc_dims = std::move(kept_socs);
  return true;
}

}  // namespace

ConicSolution BarrierSolver::solve(const ConicProgram& prog, const std::vector<VarBounds>& overrides,
                                   bool tightened) {
  ConicSolution out;
  const PresolveResult pre = presolve(prog, overrides, kFeasTol);
  if (pre.infeasible) {
    out.status = SubStatus::Infeasible;
    out.message = pre.message;
    return out;
  }
  const ConicProgram& red = pre.reduced;
  if (red.num_vars() == 0) {
    out.status = SubStatus::Optimal;
    out.x = pre.expand({});
    out.objective = red.objective_constant;
    return out;
  }

  StdForm f = build_std_form(red);
  const double cscale = std::max(1.0, f.c.cwiseAbs().maxCoeff());
  f.c /= cscale;
  const double gap_tol = tightened ? opt_.gap_tol_tight : opt_.gap_tol;

  NewtonState st;
  if (!least_norm_point(f.A, f.b, st.x, 1e-6)) {
    out.status = SubStatus::Infeasible;
    out.message = "equality rows inconsistent";
    return out;
  }
  st.nu = VectorXd::Zero(f.A.rows());

  // Phase I: drive the uniform cone shift negative.  When the shift instead
  // converges to exactly zero the set is feasible but flat along some rows;
  // those rows are promoted to equality rows and phase I restarts on the
  // restricted cone (see promote_implied_equalities).
  bool have_interior = false;
  int iters = 0;
  for (int round = 0; round < 4 && !have_interior; ++round) {
    if (f.G.rows() == 0) {
      // Pure equality program: the feasible point is optimal iff the
      // objective is constant on the affine set.
      VectorXd resid = f.c;
      if (f.A.rows() > 0) {
        const VectorXd nu = f.A.transpose()
                                .colPivHouseholderQr()
                                .solve(-f.c);
        resid = f.c + f.A.transpose() * nu;
      }
      if (resid.lpNorm<Eigen::Infinity>() > 1e-7) {
        out.message = "objective unbounded on equality set";
        return out;
      }
      out.status = SubStatus::Optimal;
      std::vector<double> xr(st.x.data(), st.x.data() + f.n);
      out.x = pre.expand(xr);
      out.objective = red.eval_objective(xr);
      out.iterations = iters;
      return out;
    }

    StdForm ph1 = build_phase1(f);
    NewtonState st1;
    st1.x = VectorXd::Zero(ph1.n);
    st1.x.head(f.n) = st.x;
    {
      const VectorXd s0 = f.h - f.G * st.x;
      double need = -0.9;
      for (int i = 0; i < f.cones.orthant; ++i) need = std::max(need, -s0[i]);
      int at = f.cones.orthant;
      for (int d : f.cones.soc_dims) {
        need = std::max(need, s0.segment(at + 1, d - 1).norm() - s0[at]);
        at += d;
      }
      st1.x[f.n] = need + 1.0;
    }
    st1.nu = VectorXd::Zero(ph1.A.rows());

    const double exit_margin = 1e-6;
    auto feasible_enough = [&](const VectorXd& z) { return z[f.n] <= -exit_margin; };
    bool centered = false;
    double t1 = 1.0;
    for (int outer = 0; outer < opt_.max_outer; ++outer) {
      const CenterOutcome oc = center(ph1, t1, st1, opt_.max_newton, feasible_enough, opt_.log);
      iters += opt_.max_newton;
      if (oc == CenterOutcome::EarlyExit) {
        have_interior = true;
        break;
      }
      const double tau = st1.x[f.n];
      const double gap = ph1.cones.nu() / t1;
      if (opt_.log)
        std::fprintf(stderr, "    phase1 t=%.1e tau=%.6e gap=%.3e outcome=%d\n", t1, tau, gap,
                     static_cast<int>(oc));
      if (oc == CenterOutcome::Stalled) break;
      if (gap <= 1e-9 * std::max(1.0, std::abs(tau))) {
        if (tau - gap > 1e-7) {
          out.status = SubStatus::Infeasible;
          out.message = "phase I shift bounded away from zero";
          return out;
        }
        centered = true;  // shift is zero to solver precision
        break;
      }
      t1 *= 10.0;
    }
    if (have_interior) {
      st.x = st1.x.head(f.n);
      break;
    }

    const double tau = st1.x[f.n];
    const VectorXd s0 = f.h - f.G * st1.x.head(f.n);
    if (opt_.log) {
      std::vector<int> idx(s0.size());
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return s0[a] < s0[b]; });
      for (int k = 0; k < std::min<int>(10, idx.size()); ++k)
        std::fprintf(stderr, "    phase1 slack[%d]=%.6e (orthant=%d)\n", idx[k], s0[idx[k]],
                     f.cones.orthant);
    }
    if (tau - ph1.cones.nu() / t1 > 1e-7) {
      out.status = SubStatus::Infeasible;
      out.message = "phase I shift bounded away from zero";
      return out;
    }
    // Only a converged center separates flat rows (slack ~ the zero shift)
    // from legitimately slack ones, so promotion is gated on it.
    if (centered && std::abs(tau) <= 1e-6 && promote_implied_equalities(f, s0)) {
      // Promoted rows routinely duplicate equalities already in A (tight
      // opposing pairs, chains); dependent rows would make the KKT system
      // singular.  Dropping them is sound because the phase-I center
      // satisfies every row at once.
      drop_dependent_equalities(f.A, f.b);
      if (opt_.log)
        std::fprintf(stderr, "    phase1 promoted tight rows: eq=%ld cone=%ld\n",
                     static_cast<long>(f.A.rows()), static_cast<long>(f.G.rows()));
      if (!least_norm_point(f.A, f.b, st.x, 1e-6)) {
        out.status = SubStatus::Infeasible;
        out.message = "equality rows inconsistent";
        return out;
      }
      continue;
    }
    out.status = SubStatus::NumericalFailure;
    out.message = "phase I inconclusive (interior too thin)";
    return out;
  }
  if (!have_interior) {
    out.status = SubStatus::NumericalFailure;
    out.message = "phase I inconclusive (interior too thin)";
    return out;
  }

  st.nu = VectorXd::Zero(f.A.rows());
  project_equalities(f.A, f.b, st.x, 1e-6);
  if (interior_margin(f, f.h - f.G * st.x) <= 0.0) {
    out.message = "phase I handoff lost interiority";
    return out;
  }

  // Phase II: central path on the true objective. The weight ladder lands
  // exactly on the value the gap target needs instead of overshooting by a
  // decade: the final stages are the costly ill-conditioned ones.
  const bool zero_objective = f.c.cwiseAbs().maxCoeff() == 0.0;
  double t = 1.0;
  for (int outer = 0; outer < opt_.max_outer + 14; ++outer) {
    const CenterOutcome oc = center(f, t, st, opt_.max_newton, no_early_exit, opt_.log);
    iters += opt_.max_newton;
    if (oc == CenterOutcome::Stalled) {
      out.message = "newton stall in phase II";
      return out;
    }
    const double gap = f.cones.nu() / t;
    if (zero_objective || gap <= gap_tol * std::max(1.0, std::abs(f.c.dot(st.x)))) {
      std::vector<double> xr(st.x.data(), st.x.data() + f.n);
      const std::vector<double> full = pre.expand(xr);
      // Contract check against the program actually posed (with overrides).
      double viol = prog.max_scaled_violation(full);
      for (const auto& o : overrides) {
        viol = std::max(viol, (o.lb - full[o.index]) / (1.0 + std::abs(o.lb)));
        viol = std::max(viol, (full[o.index] - o.ub) / (1.0 + std::abs(o.ub)));
      }
      if (!(viol <= kFeasTol)) {
        out.message = "solution failed final feasibility check";
        return out;
      }
      out.status = SubStatus::Optimal;
      out.x = full;
      out.objective = red.eval_objective(xr);
      out.iterations = iters;
      return out;
    }
    const double t_need =
        f.cones.nu() / (gap_tol * std::max(1.0, std::abs(f.c.dot(st.x))));
    t = std::min(t * 10.0, 1.0000001 * t_need);
  }
  out.message = "barrier weight schedule exhausted";
  return out;
}

}  // namespace chargeplan
