#include "invsdp/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <stdexcept>

#include "invsdp/kernels.hpp"

namespace invsdp {

void BlockSparse::add(int block, int row, int col, double value) {
  if (value == 0.0) return;
  if (row > col) std::swap(row, col);
  entries.push_back({block, row, col, value});
}

const char* status_name(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SdpStatus::DualInfeasible: return "DualInfeasible";
    case SdpStatus::MaxIterations: return "MaxIterations";
    case SdpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

void SolverSettings::validate() const {
  if (max_iterations <= 0 || !(feas_tol > 0) || !(gap_tol > 0) || !(step_fraction > 0) || !(step_fraction < 1))
    throw std::invalid_argument("invalid solver settings");
}

void SdpProblem::validate() const {
  if (A.size() != b.size()) throw std::invalid_argument("A and b differ in length");
  auto check = [&](const BlockSparse& M) {
    for (const auto& e : M.entries) {
      if (e.block < 0 || e.block >= static_cast<int>(blocks.size()))
        throw std::invalid_argument("entry refers to a missing block");
      int n = blocks[e.block].size;
      if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n || e.row > e.col)
        throw std::invalid_argument("entry outside block or below the diagonal");
      if (blocks[e.block].kind == BlockKind::Free && e.row != e.col)
        throw std::invalid_argument("free block entries must be diagonal");
    }
  };
  for (const auto& blk : blocks)
    if (blk.size <= 0) throw std::invalid_argument("block size must be positive");
  check(C);
  for (const auto& a : A) check(a);
}

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double frob(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return kernels::dot(a.data(), b.data(), static_cast<std::size_t>(a.size()));
}

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

struct Trip {
  int r, c;
  double v;
};

struct PsdBlock {
  int orig = 0;
  int n = 0;
  std::vector<int> cons;
  std::vector<std::vector<Trip>> ents;
  Eigen::MatrixXd C;
  bool c_zero = true;
};

// Problem with rows scaled to unit max coefficient and the cost scaled to
// unit max magnitude. Zero rows are removed.
struct Model {
  int m = 0;
  int nf = 0;
  std::vector<PsdBlock> psd;
  std::vector<int> free_offset;  // per original block, -1 if PSD
  std::vector<int> psd_index;    // per original block, -1 if free
  std::vector<int> row_of;       // model row -> original row
  Eigen::MatrixXd B;
  Eigen::VectorXd cf, b, row_scale;
  double obj_scale = 1.0;
  int cone_dim = 0;
};

struct Iterate {
  std::vector<Eigen::MatrixXd> X, S;
  Eigen::VectorXd xf, y;
  double tau = 1, kappa = 1;
};

Eigen::VectorXd apply_A(const Model& md, const std::vector<Eigen::MatrixXd>& X, const Eigen::VectorXd& xf) {
  Eigen::VectorXd out = md.nf ? Eigen::VectorXd(md.B * xf) : Eigen::VectorXd::Zero(md.m);
  for (std::size_t k = 0; k < md.psd.size(); ++k) {
    const auto& blk = md.psd[k];
    const auto& Xb = X[k];
    for (std::size_t j = 0; j < blk.cons.size(); ++j) {
      double s = 0;
      for (const auto& t : blk.ents[j]) s += t.v * (t.r == t.c ? Xb(t.r, t.r) : Xb(t.r, t.c) + Xb(t.c, t.r));
      out[blk.cons[j]] += s;
    }
  }
  return out;
}

Eigen::MatrixXd apply_At(const PsdBlock& blk, const Eigen::VectorXd& y) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(blk.n, blk.n);
  for (std::size_t j = 0; j < blk.cons.size(); ++j) {
    double yi = y[blk.cons[j]];
    if (yi == 0.0) continue;
    for (const auto& t : blk.ents[j]) {
      M(t.r, t.c) += t.v * yi;
      if (t.r != t.c) M(t.c, t.r) += t.v * yi;
    }
  }
  return M;
}

// Largest alpha keeping P + alpha*dP positive semidefinite, given chol(P).
double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& dP) {
  Eigen::MatrixXd W = llt.matrixL().solve(dP);
  W = llt.matrixL().solve(W.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(W), Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  return lmin < 0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

// Factorization of the Schur complement. Cholesky first; if that breaks down
// a pivoted LDL' whose negligible pivots are treated as infinite, which drops
// the corresponding direction instead of amplifying rounding noise.
class SchurFactor {
 public:
  bool cholesky(const Eigen::MatrixXd& M) {
    use_ldlt_ = false;
    llt_.compute(M);
    return llt_.info() == Eigen::Success;
  }
  bool pivoted(const Eigen::MatrixXd& M) {
    use_ldlt_ = true;
    ldlt_.compute(M);
    if (ldlt_.info() != Eigen::Success) return false;
    dmax_ = ldlt_.vectorD().cwiseAbs().maxCoeff();
    return std::isfinite(dmax_) && dmax_ > 0;
  }
  template <class Rhs>
  Eigen::MatrixXd solve(const Rhs& b) const {
    if (!use_ldlt_) return llt_.solve(b);
    Eigen::MatrixXd y = ldlt_.transpositionsP() * b;
    y = ldlt_.matrixL().solve(y);
    const auto& D = ldlt_.vectorD();
    for (int i = 0; i < D.size(); ++i) {
      if (D[i] > 1e-14 * dmax_)
        y.row(i) /= D[i];
      else
        y.row(i).setZero();
    }
    y = ldlt_.matrixU().solve(y);
    return ldlt_.transpositionsP().transpose() * y;
  }

 private:
  bool use_ldlt_ = false;
  double dmax_ = 0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

struct Residual {
  Eigen::VectorXd rp, rf;
  std::vector<Eigen::MatrixXd> rd;
  double rg = 0;
  double cx = 0;  // <C,X> + cf'xf
  double by = 0;
};

Residual compute_residual(const Model& md, const Iterate& it) {
  Residual r;
  r.rp = apply_A(md, it.X, it.xf) - md.b * it.tau;
  r.rf = md.cf * it.tau - (md.nf ? Eigen::VectorXd(md.B.transpose() * it.y) : Eigen::VectorXd());
  r.cx = md.nf ? md.cf.dot(it.xf) : 0.0;
  for (std::size_t k = 0; k < md.psd.size(); ++k) {
    const auto& blk = md.psd[k];
    r.rd.push_back(blk.C * it.tau - apply_At(blk, it.y) - it.S[k]);
    if (!blk.c_zero) r.cx += frob(blk.C, it.X[k]);
  }
  r.by = md.b.dot(it.y);
  r.rg = r.by - r.cx - it.kappa;
  return r;
}

class Solver {
 public:
  Solver(const SdpProblem& p, const SolverSettings& s) : prob_(p), set_(s) {}

  SdpSolution run();

 private:
  bool build_model(SdpSolution& sol);
  SdpSolution finish(const Iterate& it, SdpStatus st, int iters, const std::string& msg);
  bool assemble_schur(const Iterate& it, const std::vector<Eigen::MatrixXd>& Z);
  bool factor(double reg, bool relative);
  void solve_reduced(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, double r3, Eigen::VectorXd& dy,
                     Eigen::VectorXd& dxf, double& dtau);

  const SdpProblem& prob_;
  SolverSettings set_;
  Model md_;

  Eigen::MatrixXd M_;
  Eigen::VectorXd u_;
  double w_ = 0;
  SchurFactor llt_;
  Eigen::MatrixXd Wm_;                 // M^{-1} E
  Eigen::PartialPivLU<Eigen::MatrixXd> small_;
  Eigen::MatrixXd F_;
  double tau_ = 1, kappa_ = 1;
  bool trace_ = std::getenv("INVSDP_TRACE") != nullptr;
};

bool Solver::build_model(SdpSolution& sol) {
  const int nb = static_cast<int>(prob_.blocks.size());
  md_.free_offset.assign(nb, -1);
  md_.psd_index.assign(nb, -1);
  for (int k = 0; k < nb; ++k) {
    if (prob_.blocks[k].kind == BlockKind::Free) {
      md_.free_offset[k] = md_.nf;
      md_.nf += prob_.blocks[k].size;
    } else {
      md_.psd_index[k] = static_cast<int>(md_.psd.size());
      PsdBlock blk;
      blk.orig = k;
      blk.n = prob_.blocks[k].size;
      blk.C = Eigen::MatrixXd::Zero(blk.n, blk.n);
      md_.cone_dim += blk.n;
      md_.psd.push_back(std::move(blk));
    }
  }

  const int m0 = static_cast<int>(prob_.A.size());
  std::vector<double> rmax(m0, 0.0);
  for (int i = 0; i < m0; ++i)
    for (const auto& e : prob_.A[i].entries) rmax[i] = std::max(rmax[i], std::fabs(e.value));
  for (int i = 0; i < m0; ++i) {
    if (rmax[i] > 0) {
      md_.row_of.push_back(i);
    } else if (prob_.b[i] != 0.0) {
      sol.status = SdpStatus::PrimalInfeasible;
      sol.message = "constraint " + std::to_string(i) + " reads 0 = " + std::to_string(prob_.b[i]);
      return false;
    }
  }
  md_.m = static_cast<int>(md_.row_of.size());
  md_.B = Eigen::MatrixXd::Zero(md_.m, md_.nf);
  md_.b.resize(md_.m);
  md_.row_scale.resize(md_.m);
  md_.cf = Eigen::VectorXd::Zero(md_.nf);

  double cmax = 0;
  for (const auto& e : prob_.C.entries) cmax = std::max(cmax, std::fabs(e.value));
  md_.obj_scale = std::max(1.0, cmax);
  for (const auto& e : prob_.C.entries) {
    double v = e.value / md_.obj_scale;
    if (md_.free_offset[e.block] >= 0) {
      md_.cf[md_.free_offset[e.block] + e.row] += v;
    } else {
      auto& blk = md_.psd[md_.psd_index[e.block]];
      blk.C(e.row, e.col) += v;
      if (e.row != e.col) blk.C(e.col, e.row) += v;
      blk.c_zero = false;
    }
  }

  for (int r = 0; r < md_.m; ++r) {
    int i = md_.row_of[r];
    double sc = 1.0 / rmax[i];
    md_.row_scale[r] = sc;
    md_.b[r] = prob_.b[i] * sc;
    std::map<int, std::vector<Trip>> per_block;
    for (const auto& e : prob_.A[i].entries) {
      if (md_.free_offset[e.block] >= 0)
        md_.B(r, md_.free_offset[e.block] + e.row) += e.value * sc;
      else
        per_block[md_.psd_index[e.block]].push_back({e.row, e.col, e.value * sc});
    }
    for (auto& [k, trips] : per_block) {
      md_.psd[k].cons.push_back(r);
      md_.psd[k].ents.push_back(std::move(trips));
    }
  }
  return true;
}

bool Solver::assemble_schur(const Iterate& it, const std::vector<Eigen::MatrixXd>& Z) {
  const int m = md_.m;
  M_ = Eigen::MatrixXd::Zero(m, m);
  u_ = Eigen::VectorXd::Zero(m);
  w_ = 0;
  for (std::size_t k = 0; k < md_.psd.size(); ++k) {
    const auto& blk = md_.psd[k];
    const int n = blk.n;
    const Eigen::MatrixXd& X = it.X[k];
    const Eigen::MatrixXd& Zk = Z[k];
    Eigen::MatrixXd T(n, n);
    auto gather = [&](const Eigen::MatrixXd& Tm, auto&& sink) {
      for (std::size_t i = 0; i < blk.cons.size(); ++i) {
        double s = 0;
        for (const auto& t : blk.ents[i]) s += t.v * (t.r == t.c ? Tm(t.r, t.r) : Tm(t.r, t.c) + Tm(t.c, t.r));
        sink(blk.cons[i], s);
      }
    };
    for (std::size_t j = 0; j < blk.cons.size(); ++j) {
      T.setZero();
      // T = X A_j Z built from rank-one pieces X(:,r) Z(c,:).
      for (const auto& t : blk.ents[j]) {
        for (int q = 0; q < n; ++q) {
          kernels::axpy(t.v * Zk(t.c, q), X.col(t.r).data(), T.col(q).data(), n);
          if (t.r != t.c) kernels::axpy(t.v * Zk(t.r, q), X.col(t.c).data(), T.col(q).data(), n);
        }
      }
      const int cj = blk.cons[j];
      gather(T, [&](int ci, double s) { M_(ci, cj) += s; });
    }
    if (!blk.c_zero) {
      Eigen::MatrixXd TC = X * blk.C * Zk;
      gather(TC, [&](int ci, double s) { u_[ci] += s; });
      w_ += frob(blk.C, TC);
    }
  }
  M_ = sym(M_);
  return M_.allFinite();
}

bool Solver::factor(double reg, bool relative) {
  const int m = md_.m;
  Eigen::MatrixXd Mr = M_;
  double dmax = m ? M_.diagonal().cwiseAbs().maxCoeff() : 0.0;
  Mr.diagonal().array() += relative ? reg * std::max(1.0, dmax) : reg;
  if (!(relative ? llt_.pivoted(Mr) : llt_.cholesky(Mr))) return false;
  // Border: columns for the free variables and tau.
  const int nf = md_.nf;
  Eigen::MatrixXd E(m, nf + 1);
  if (nf) E.leftCols(nf) = md_.B;
  E.col(nf) = -(md_.b + u_);
  Wm_ = llt_.solve(E);
  F_.resize(nf + 1, m);
  if (nf) F_.topRows(nf) = -md_.B.transpose();
  F_.row(nf) = (md_.b - u_).transpose();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
  if (nf) {
    G.block(0, nf, nf, 1) = md_.cf;
    G.block(nf, 0, 1, nf) = -md_.cf.transpose();
  }
  G(nf, nf) = w_ + kappa_ / tau_;
  Eigen::MatrixXd Sc = G - F_ * Wm_;
  // The tau pivot equals (w - u'M^{-1}u) + b'M^{-1}b + kappa/tau. The first
  // term is a Schur complement of a Gram matrix and hence nonnegative, but it
  // is the difference of two large numbers once mu is small. Rebuild the
  // pivot from its parts so cancellation cannot drive it to zero.
  const Eigen::VectorXd Mb = llt_.solve(md_.b).col(0), Mu = llt_.solve(u_).col(0);
  double perp = std::max(0.0, w_ - u_.dot(Mu));
  Sc(nf, nf) = perp + md_.b.dot(Mb) + kappa_ / tau_;
  small_.compute(Sc);
  return Sc.allFinite() && Wm_.allFinite() && std::fabs(small_.determinant()) > 0;
}

void Solver::solve_reduced(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, double r3, Eigen::VectorXd& dy,
                           Eigen::VectorXd& dxf, double& dtau) {
  const int nf = md_.nf;
  Eigen::VectorXd w0 = llt_.solve(r1).col(0);
  Eigen::VectorXd rr(nf + 1);
  if (nf) rr.head(nf) = r2;
  rr[nf] = r3;
  Eigen::VectorXd z = small_.solve(rr - F_ * w0);
  dy = w0 - Wm_ * z;
  dxf = z.head(nf);
  dtau = z[nf];
}

SdpSolution Solver::finish(const Iterate& it, SdpStatus st, int iters, const std::string& msg) {
  SdpSolution sol;
  sol.status = st;
  sol.iterations = iters;
  sol.message = msg;
  const int nb = static_cast<int>(prob_.blocks.size());
  sol.X.resize(nb);
  sol.S.resize(nb);
  sol.y = Eigen::VectorXd::Zero(static_cast<int>(prob_.A.size()));

  double xs = 1.0 / it.tau, ys = md_.obj_scale / it.tau;
  if (st == SdpStatus::PrimalInfeasible) {
    // Farkas ray normalized to b'y = 1.
    double by = md_.b.dot(it.y);
    xs = 1.0;
    ys = by != 0 ? 1.0 / by : 1.0;
  } else if (st == SdpStatus::DualInfeasible) {
    double cx = -compute_residual(md_, it).cx;
    xs = cx != 0 ? 1.0 / cx : 1.0;
    ys = 1.0;
  }
  for (int k = 0; k < nb; ++k) {
    int n = prob_.blocks[k].size;
    if (md_.psd_index[k] >= 0) {
      sol.X[k] = it.X[md_.psd_index[k]] * xs;
      sol.S[k] = it.S[md_.psd_index[k]] * ys;
    } else {
      sol.X[k] = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) sol.X[k](i, i) = it.xf[md_.free_offset[k] + i] * xs;
      sol.S[k] = Eigen::MatrixXd::Zero(n, n);
    }
  }
  for (int r = 0; r < md_.m; ++r) sol.y[md_.row_of[r]] = it.y[r] * md_.row_scale[r] * ys;
  sol.residuals = residuals(prob_, sol);
  sol.objective = 0;
  for (const auto& e : prob_.C.entries)
    sol.objective += e.value * (e.row == e.col ? sol.X[e.block](e.row, e.row) : 2 * sol.X[e.block](e.row, e.col));
  sol.dual_objective = 0;
  for (std::size_t i = 0; i < prob_.b.size(); ++i) sol.dual_objective += prob_.b[i] * sol.y[i];
  return sol;
}

SdpSolution Solver::run() {
  set_.validate();
  prob_.validate();
  SdpSolution early;
  if (!build_model(early)) {
    for (const auto& blk : prob_.blocks) {
      early.X.push_back(Eigen::MatrixXd::Zero(blk.size, blk.size));
      early.S.push_back(Eigen::MatrixXd::Zero(blk.size, blk.size));
    }
    early.y = Eigen::VectorXd::Zero(static_cast<int>(prob_.A.size()));
    return early;
  }

  const int m = md_.m, nf = md_.nf;
  const std::size_t np = md_.psd.size();
  Iterate it;
  for (const auto& blk : md_.psd) {
    it.X.push_back(Eigen::MatrixXd::Identity(blk.n, blk.n));
    it.S.push_back(Eigen::MatrixXd::Identity(blk.n, blk.n));
  }
  it.xf = Eigen::VectorXd::Zero(nf);
  it.y = Eigen::VectorXd::Zero(m);
  const double nu = md_.cone_dim + 1.0;

  int small_steps = 0;
  Iterate best = it;
  double best_merit = std::numeric_limits<double>::infinity();
  int best_iter = 0;
  for (int iter = 0;; ++iter) {
    Residual R = compute_residual(md_, it);
    double xsdot = 0;
    for (std::size_t k = 0; k < np; ++k) xsdot += frob(it.X[k], it.S[k]);
    const double mu = (xsdot + it.tau * it.kappa) / nu;

    // Convergence measured in the caller's units on (X,y,S)/tau.
    double pres = 0;
    for (int r = 0; r < m; ++r) {
      double bi = md_.b[r] / md_.row_scale[r];
      pres = std::max(pres, std::fabs(R.rp[r] / it.tau) / md_.row_scale[r] / (1 + std::fabs(bi)));
    }
    double dres = nf ? R.rf.cwiseAbs().maxCoeff() : 0.0;
    for (const auto& rd : R.rd) dres = std::max(dres, max_abs(rd));
    dres *= md_.obj_scale / it.tau;
    double pobj = md_.obj_scale * R.cx / it.tau, dobj = md_.obj_scale * R.by / it.tau;
    double gap = std::fabs(pobj - dobj) / (1 + std::fabs(pobj));
    if (trace_)
      std::fprintf(stderr, "it %3d mu %.3e tau %.3e kappa %.3e pres %.3e dres %.3e gap %.3e pobj %.9e dobj %.9e\n",
                   iter, mu, it.tau, it.kappa, pres, dres, gap, pobj, dobj);
    if (pres <= set_.feas_tol && dres <= set_.feas_tol && gap <= set_.gap_tol)
      return finish(it, SdpStatus::Optimal, iter, "");
    // Problems without a strictly feasible point cannot be solved to full
    // accuracy; a failure late in the run hands back the best iterate seen.
    const double merit = std::max({pres, dres, gap});
    if (merit < best_merit) {
      best_merit = merit;
      best = it;
      best_iter = iter;
    }
    auto fail = [&](SdpStatus st, const std::string& why) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "; best iterate kept (max residual %.2e)", best_merit);
      return finish(best, st, iter, why + buf);
    };

    if (R.by > 0) {
      double ray = nf ? (md_.B.transpose() * it.y).cwiseAbs().maxCoeff() : 0.0;
      for (std::size_t k = 0; k < np; ++k)
        ray = std::max(ray, max_abs(apply_At(md_.psd[k], it.y) + it.S[k]));
      if (ray / R.by <= set_.feas_tol) return finish(it, SdpStatus::PrimalInfeasible, iter, "");
    }
    if (R.cx < 0) {
      double ray = apply_A(md_, it.X, it.xf).cwiseAbs().maxCoeff();
      if (m == 0 || ray / -R.cx <= set_.feas_tol) return finish(it, SdpStatus::DualInfeasible, iter, "");
    }
    if (iter >= set_.max_iterations) return fail(SdpStatus::MaxIterations, "iteration limit");
    // kappa >> tau means a certificate of infeasibility is forming; the
    // residual merit cannot improve then, so let the ray tests above finish.
    if (iter - best_iter >= 10 && it.kappa < 1e3 * it.tau) return fail(SdpStatus::NumericalFailure, "no progress in 10 iterations");

    std::vector<Eigen::MatrixXd> Z(np);
    std::vector<Eigen::LLT<Eigen::MatrixXd>> cx(np), cs(np);
    for (std::size_t k = 0; k < np; ++k) {
      cx[k].compute(it.X[k]);
      cs[k].compute(it.S[k]);
      if (cx[k].info() != Eigen::Success || cs[k].info() != Eigen::Success)
        return fail(SdpStatus::NumericalFailure, "iterate left the cone at iteration " + std::to_string(iter));
      Z[k] = cs[k].solve(Eigen::MatrixXd::Identity(md_.psd[k].n, md_.psd[k].n));
      Z[k] = sym(Z[k]);
    }
    tau_ = it.tau;
    kappa_ = it.kappa;
    if (!assemble_schur(it, Z)) return fail(SdpStatus::NumericalFailure, "non-finite Schur complement");
    // Rows are unit scaled, so the first shift is absolute; the retry scales
    // with the largest diagonal entry, switches to the pivoted factorization
    // and leans on iterative refinement.
    if (!factor(1e-10, false) && !factor(1e-8, true))
      return fail(SdpStatus::NumericalFailure, "Schur complement factorization failed");

    // Pieces of the right-hand side that do not depend on the centering.
    std::vector<Eigen::MatrixXd> XRdZ(np);
    double c_xrdz = 0;
    for (std::size_t k = 0; k < np; ++k) {
      XRdZ[k] = sym(it.X[k] * R.rd[k] * Z[k]);
      if (!md_.psd[k].c_zero) c_xrdz += frob(md_.psd[k].C, XRdZ[k]);
    }
    Eigen::VectorXd A_xrdz = apply_A(md_, XRdZ, Eigen::VectorXd::Zero(nf));

    struct Dir {
      std::vector<Eigen::MatrixXd> dX, dS;
      Eigen::VectorXd dy, dxf;
      double dtau = 0, dkappa = 0;
    };
    auto direction = [&](double eta, const std::vector<Eigen::MatrixXd>& RX, double Rtau, Dir& d) {
      double c_rx = 0;
      for (std::size_t k = 0; k < np; ++k)
        if (!md_.psd[k].c_zero) c_rx += frob(md_.psd[k].C, RX[k]);
      Eigen::VectorXd r1 = -eta * R.rp - apply_A(md_, RX, Eigen::VectorXd::Zero(nf)) + eta * A_xrdz;
      Eigen::VectorXd r2 = -eta * R.rf;
      double r3 = -eta * R.rg + c_rx - eta * c_xrdz + Rtau / it.tau;
      solve_reduced(r1, r2, r3, d.dy, d.dxf, d.dtau);
      d.dX.resize(np);
      d.dS.resize(np);
      for (std::size_t k = 0; k < np; ++k) {
        d.dS[k] = md_.psd[k].C * d.dtau - apply_At(md_.psd[k], d.dy) + eta * R.rd[k];
        d.dX[k] = RX[k] - sym(it.X[k] * d.dS[k] * Z[k]);
      }
      d.dkappa = (Rtau - it.kappa * d.dtau) / it.tau;
      // Iterative refinement against the exactly applied linear equations;
      // the Schur complement loses accuracy as mu shrinks. A correction that
      // makes things worse is undone.
      auto defect = [&](const Dir& c, Eigen::VectorXd& e1, Eigen::VectorXd& e2, double& e3) {
        e1 = apply_A(md_, c.dX, c.dxf) - md_.b * c.dtau + eta * R.rp;
        e2 = md_.cf * c.dtau + eta * R.rf;
        if (nf) e2 -= md_.B.transpose() * c.dy;
        double cdx = nf ? md_.cf.dot(c.dxf) : 0.0;
        for (std::size_t k = 0; k < np; ++k)
          if (!md_.psd[k].c_zero) cdx += frob(md_.psd[k].C, c.dX[k]);
        e3 = md_.b.dot(c.dy) - cdx - c.dkappa + eta * R.rg;
        return std::max({e1.size() ? e1.cwiseAbs().maxCoeff() : 0.0, e2.size() ? e2.cwiseAbs().maxCoeff() : 0.0,
                         std::fabs(e3)});
      };
      const double floor = 1e-15 * std::max(1.0, md_.b.size() ? md_.b.cwiseAbs().maxCoeff() : 0.0);
      Eigen::VectorXd e1, e2;
      double e3;
      double err = defect(d, e1, e2, e3);
      for (int pass = 0; pass < 8 && err > floor; ++pass) {
        Eigen::VectorXd cy, cxf;
        double ctau;
        solve_reduced(-e1, -e2, -e3, cy, cxf, ctau);
        Dir t = d;
        t.dy += cy;
        t.dxf += cxf;
        t.dtau += ctau;
        for (std::size_t k = 0; k < np; ++k) {
          Eigen::MatrixXd cS = md_.psd[k].C * ctau - apply_At(md_.psd[k], cy);
          t.dS[k] += cS;
          t.dX[k] -= sym(it.X[k] * cS * Z[k]);
        }
        t.dkappa -= it.kappa * ctau / it.tau;
        Eigen::VectorXd f1, f2;
        double f3;
        double terr = defect(t, f1, f2, f3);
        if (!(terr < err)) break;
        bool slow = terr > 0.5 * err;
        d = std::move(t);
        e1 = std::move(f1);
        e2 = std::move(f2);
        e3 = f3;
        err = terr;
        if (slow) break;
      }
    };
    auto step_to_boundary = [&](const Dir& d) {
      double a = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < np; ++k) {
        a = std::min(a, max_step(cx[k], d.dX[k]));
        a = std::min(a, max_step(cs[k], d.dS[k]));
      }
      if (d.dtau < 0) a = std::min(a, -it.tau / d.dtau);
      if (d.dkappa < 0) a = std::min(a, -it.kappa / d.dkappa);
      return a;
    };

    // Predictor.
    std::vector<Eigen::MatrixXd> RX(np);
    for (std::size_t k = 0; k < np; ++k) RX[k] = -it.X[k];
    Dir pred;
    direction(1.0, RX, -it.tau * it.kappa, pred);
    double ap = std::min(1.0, step_to_boundary(pred));
    double mu_a = (it.tau + ap * pred.dtau) * (it.kappa + ap * pred.dkappa);
    for (std::size_t k = 0; k < np; ++k)
      mu_a += frob(it.X[k] + ap * pred.dX[k], it.S[k] + ap * pred.dS[k]);
    mu_a /= nu;
    double sigma = std::clamp(std::pow(std::max(mu_a, 0.0) / mu, 3), 0.0, 1.0);

    // Corrector.
    for (std::size_t k = 0; k < np; ++k)
      RX[k] = sigma * mu * Z[k] - it.X[k] - sym(pred.dX[k] * pred.dS[k] * Z[k]);
    Dir d;
    direction(1.0 - sigma, RX, sigma * mu - it.tau * it.kappa - pred.dtau * pred.dkappa, d);
    double alpha = std::min(1.0, set_.step_fraction * step_to_boundary(d));
    if (!std::isfinite(alpha) || !d.dy.allFinite())
      return fail(SdpStatus::NumericalFailure, "non-finite search direction");

    for (std::size_t k = 0; k < np; ++k) {
      it.X[k] = sym(it.X[k] + alpha * d.dX[k]);
      it.S[k] = sym(it.S[k] + alpha * d.dS[k]);
    }
    it.y += alpha * d.dy;
    it.xf += alpha * d.dxf;
    it.tau += alpha * d.dtau;
    it.kappa += alpha * d.dkappa;

    small_steps = alpha < 1e-7 ? small_steps + 1 : 0;
    if (small_steps >= 5) return fail(SdpStatus::NumericalFailure, "stalled");
  }
}

}  // namespace

Residuals residuals(const SdpProblem& p, const SdpSolution& sol) {
  Residuals r;
  const int nb = static_cast<int>(p.blocks.size());
  if (static_cast<int>(sol.X.size()) != nb) throw std::invalid_argument("solution does not match problem blocks");
  auto inner = [&](const BlockSparse& M) {
    double s = 0;
    for (const auto& e : M.entries)
      s += e.value * (e.row == e.col ? sol.X[e.block](e.row, e.row) : 2 * sol.X[e.block](e.row, e.col));
    return s;
  };
  for (std::size_t i = 0; i < p.A.size(); ++i)
    r.primal = std::max(r.primal, std::fabs(inner(p.A[i]) - p.b[i]) / (1 + std::fabs(p.b[i])));

  std::vector<Eigen::MatrixXd> D(nb);
  for (int k = 0; k < nb; ++k) {
    int n = p.blocks[k].size;
    D[k] = Eigen::MatrixXd::Zero(n, n);
    if (!sol.S.empty()) D[k] -= sol.S[k];
  }
  auto add = [&](const BlockSparse& M, double f) {
    for (const auto& e : M.entries) {
      D[e.block](e.row, e.col) += f * e.value;
      if (e.row != e.col) D[e.block](e.col, e.row) += f * e.value;
    }
  };
  add(p.C, 1.0);
  if (sol.y.size() == static_cast<int>(p.A.size()))
    for (std::size_t i = 0; i < p.A.size(); ++i) add(p.A[i], -sol.y[i]);
  for (int k = 0; k < nb; ++k) {
    if (p.blocks[k].kind == BlockKind::Free)
      r.dual = std::max(r.dual, D[k].diagonal().cwiseAbs().maxCoeff());
    else
      r.dual = std::max(r.dual, max_abs(D[k]));
  }
  double cx = inner(p.C), by = 0;
  for (std::size_t i = 0; i < p.b.size() && i < static_cast<std::size_t>(sol.y.size()); ++i) by += p.b[i] * sol.y[i];
  r.gap = std::fabs(cx - by) / (1 + std::fabs(cx));
  return r;
}

SdpSolution solve_sdp(const SdpProblem& p, const SolverSettings& s) { return Solver(p, s).run(); }

}  // namespace invsdp
