#include "invsdp/cluster.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <set>

#include "invsdp/conditions.hpp"
#include "invsdp/kernels.hpp"

namespace invsdp {

Box Box::unit(std::size_t n) { return {std::vector<double>(n, -1.0), std::vector<double>(n, 1.0)}; }

double Box::diameter() const {
  double s = 0;
  for (std::size_t j = 0; j < dim(); ++j) s = std::max(s, hi[j] - lo[j]);
  return s;
}

std::pair<Box, Box> Box::bisect() const {
  std::size_t k = 0;
  for (std::size_t j = 1; j < dim(); ++j)
    if (hi[j] - lo[j] > hi[k] - lo[k]) k = j;
  Box a = *this, b = *this;
  double mid = 0.5 * (lo[k] + hi[k]);
  a.hi[k] = mid;
  b.lo[k] = mid;
  return {a, b};
}

std::vector<Rational> moment_vector(const std::vector<std::pair<Rational, Rational>>& box, int d) {
  const std::size_t n = box.size();
  // mean of t^k over [l,u], k = 0..d, per axis
  std::vector<std::vector<Rational>> axis(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& [l, u] = box[j];
    if (!(l < u)) throw StructuralError("moment box needs lo < hi on every axis");
    Rational lp = l, up = u;  // l^{k+1}, u^{k+1}
    for (int k = 0; k <= d; ++k) {
      axis[j].push_back((up - lp) / (Rational(k + 1) * (u - l)));
      lp *= l;
      up *= u;
    }
  }
  std::vector<Rational> out;
  for (const auto& m : monomial_basis(n, d)) {
    Rational g(1);
    for (std::size_t j = 0; j < n; ++j) g *= axis[j][m[j]];
    out.push_back(g);
  }
  return out;
}

std::vector<std::string> ClusterTemplates::params() const {
  std::vector<std::string> out(outer->params->begin(), outer->params->end());
  if (inner) out.insert(out.end(), inner->params->begin(), inner->params->end());
  if (std::set<std::string>(out.begin(), out.end()).size() != out.size())
    throw StructuralError("outer and inner templates share a parameter name");
  return out;
}

namespace {

std::vector<std::string> h_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 1; k <= n; ++k) out.push_back("$h" + std::to_string(k));
  return out;
}

// Coordinates a = c + w * t with t in [-1,1].
std::map<std::string, QPolynomial> to_local(const VarList& ring, const std::vector<std::string>& params,
                                            const Box& box) {
  std::map<std::string, QPolynomial> s;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (box.lo[j] == -1.0 && box.hi[j] == 1.0) continue;
    Rational lo = Rational::from_double(box.lo[j]), hi = Rational::from_double(box.hi[j]);
    Rational c = (lo + hi) / Rational(2), w = (hi - lo) / Rational(2);
    s.emplace(params[j], QPolynomial::constant(ring, c) + QPolynomial::variable(ring, params[j]) * w);
  }
  return s;
}

}  // namespace

SosProgram build_cluster_program(const LoopProgram& prog, const ClusterTemplates& t, int d, const Box& box,
                                 int order) {
  if (d < 1) throw StructuralError("degree must be at least 1");
  auto params = t.params();
  if (box.dim() != params.size()) throw StructuralError("box dimension differs from the parameter count");
  auto imps = invariant_conditions(prog, *t.outer, t.inner);
  VarList base = t.inner ? union_vars(t.outer->ring, t.inner->ring) : t.outer->ring;
  auto basis = monomial_basis(params.size(), d);
  auto names = h_names(basis.size());
  VarList ring = union_vars(make_vars(names), base);
  std::vector<std::size_t> pidx;
  for (const auto& p : params) pidx.push_back(*var_index(ring, p));
  auto local = to_local(ring, params, box);
  auto lift = [&](const QPolynomial& p) {
    QPolynomial q = p.embed(ring);
    return local.empty() ? q : q.compose(local, ring);
  };

  QPolynomial h(ring);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    Monomial m(ring->size());
    for (std::size_t j = 0; j < params.size(); ++j) m[pidx[j]] = basis[k][j];
    m[*var_index(ring, names[k])] = 1;
    h.add_term(m, Rational(1));
  }
  std::vector<QPolynomial> box_polys;
  for (const auto& p : params) {
    QPolynomial a = QPolynomial::variable(ring, p);
    box_polys.push_back(QPolynomial::constant(ring, Rational(1)) - a * a);
  }

  SosProgram sp;
  sp.ring = ring;
  sp.decisions = names;
  std::vector<std::pair<Rational, Rational>> unit(params.size(), {Rational(-1), Rational(1)});
  auto mom = moment_vector(unit, d);
  for (std::size_t k = 0; k < names.size(); ++k)
    if (!mom[k].is_zero()) sp.objective[names[k]] = mom[k].to_double();

  for (const auto& raw : imps) {
    Implication imp = split_equalities(raw);
    std::vector<QPolynomial> hyps;
    bool vacuous = false;
    for (const auto& a : imp.hyps) {
      QPolynomial p = lift(a.poly);
      if (p.is_constant()) {
        vacuous = vacuous || p.constant_term().sign() < 0;
        continue;
      }
      hyps.push_back(p);
    }
    if (vacuous) continue;
    hyps.insert(hyps.end(), box_polys.begin(), box_polys.end());
    std::vector<std::string> ind = params;
    ind.insert(ind.end(), imp.quantified.begin(), imp.quantified.end());
    for (std::size_t c = 0; c < imp.concl.size(); ++c) {
      SosConstraint sc;
      sc.id = imp.id + (imp.concl.size() > 1 ? "." + std::to_string(c + 1) : "");
      sc.target = h + lift(imp.concl[c].poly);
      sc.nonneg = hyps;
      sc.indeterminates = ind;
      sp.constraints.push_back(std::move(sc));
    }
  }
  SosConstraint pos;
  pos.id = "h+1";
  pos.target = h + QPolynomial::constant(ring, Rational(1));
  pos.nonneg = box_polys;
  pos.indeterminates = params;
  for (const auto& v : *prog.vars) pos.indeterminates.push_back(v);
  if (prog.bound) {
    Rational n2 = *prog.bound * *prog.bound;
    for (const auto& v : *prog.vars) {
      QPolynomial x = QPolynomial::variable(ring, v);
      pos.nonneg.push_back(QPolynomial::constant(ring, n2) - x * x);
    }
  }
  sp.constraints.push_back(std::move(pos));
  sp.order = std::max(relaxation_order(sp), order);
  return sp;
}

std::optional<std::vector<double>> find_witness(const Polynomial& h, const std::vector<std::string>& params,
                                                const Box& box) {
  const std::size_t n = params.size();
  if (h.nvars() != n) throw StructuralError("h must live in the parameter ring");
  if (n == 0) {
    double v = h.constant_term();
    return v <= -1e-9 ? std::optional<std::vector<double>>(std::vector<double>{}) : std::nullopt;
  }
  int g = n <= 3 ? 21 : (n <= 6 ? 7 : 3);
  while (g > 2 && std::pow(static_cast<double>(g), static_cast<double>(n)) > 2e6) --g;
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= static_cast<std::size_t>(g);
  if (std::pow(static_cast<double>(g), static_cast<double>(n)) > 2e6) total = 0;  // too many axes; descent only

  auto packed = kernels::pack(h);
  std::vector<double> pts, vals;
  const std::size_t chunk = 4096;
  std::vector<std::pair<double, std::size_t>> best;  // (value, grid index)
  auto point_of = [&](std::size_t idx) {
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t k = idx % static_cast<std::size_t>(g);
      idx /= static_cast<std::size_t>(g);
      p[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * static_cast<double>(k) / (g - 1);
    }
    return p;
  };
  for (std::size_t start = 0; start < total; start += chunk) {
    std::size_t m = std::min(chunk, total - start);
    pts.resize(m * n);
    vals.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      auto p = point_of(start + i);
      std::copy(p.begin(), p.end(), pts.begin() + static_cast<long>(i * n));
    }
    kernels::eval_batch(packed, pts.data(), m, vals.data());
    for (std::size_t i = 0; i < m; ++i) {
      best.emplace_back(vals[i], start + i);
      if (best.size() > 64) {
        std::nth_element(best.begin(), best.begin() + 5, best.end());
        best.resize(5);
      }
    }
  }
  std::sort(best.begin(), best.end());
  if (best.size() > 5) best.resize(5);
  std::vector<std::vector<double>> starts;
  for (const auto& [v, idx] : best) starts.push_back(point_of(idx));
  if (starts.empty()) {
    std::vector<double> c(n);
    for (std::size_t j = 0; j < n; ++j) c[j] = 0.5 * (box.lo[j] + box.hi[j]);
    starts.push_back(c);
  }

  std::vector<double> arg;
  double val = std::numeric_limits<double>::infinity();
  for (auto p : starts) {
    double cur = h.eval(p);
    std::vector<double> step(n);
    for (std::size_t j = 0; j < n; ++j) step[j] = (box.hi[j] - box.lo[j]) / (2.0 * (g - 1));
    for (int sweep = 0; sweep < 400; ++sweep) {
      bool moved = false;
      for (std::size_t j = 0; j < n; ++j)
        for (double dir : {-1.0, 1.0}) {
          double old = p[j];
          p[j] = std::clamp(old + dir * step[j], box.lo[j], box.hi[j]);
          double v = h.eval(p);
          if (v < cur) {
            cur = v;
            moved = true;
          } else {
            p[j] = old;
          }
        }
      if (!moved) {
        bool tiny = true;
        for (std::size_t j = 0; j < n; ++j) {
          step[j] *= 0.5;
          tiny = tiny && step[j] < 1e-7 * (box.hi[j] - box.lo[j]);
        }
        if (tiny) break;
      }
    }
    if (cur < val) {
      val = cur;
      arg = p;
    }
  }
  if (val <= -1e-9) return arg;
  return std::nullopt;
}

UnderApprox solve_cluster(const LoopProgram& prog, const ClusterTemplates& t, int d, const Box& box,
                          const ClusterSettings& s) {
  auto t0 = std::chrono::steady_clock::now();
  UnderApprox r;
  r.degree = d;
  r.box = box;
  auto params = t.params();
  VarList pv = make_vars(params);
  r.h = r.h_rounded = r.h_solver = Polynomial::constant(pv, 1.0);
  auto finish = [&] {
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  SosProgram sp = build_cluster_program(prog, t, d, box, s.relax_order);
  r.order = sp.order;
  AssembledSdp as;
  try {
    as = assemble_sdp(sp);
  } catch (const SizeError& e) {
    r.status = "SizeError";
    r.message = e.what();
    return finish();
  }
  r.sdp_rows = as.sdp.A.size();
  SdpSolution sol = solve_with_backend(as.sdp, s.sdp);
  SosSolution ss = reconstruct(sp, as, sol);
  r.status = status_name(sol.status);
  r.message = sol.message;
  r.residual = ss.max_residual;
  r.solved = sol.status == SdpStatus::Optimal ||
             ((sol.status == SdpStatus::NumericalFailure || sol.status == SdpStatus::MaxIterations) &&
              sol.residuals.primal <= s.feas_tol && sol.residuals.dual <= s.feas_tol && sol.residuals.gap <= 1e-4);
  if (!r.solved) return finish();
  r.objective = ss.objective;

  // h in local coordinates t, then t_j = (a_j - c_j) / w_j.
  auto basis = monomial_basis(params.size(), d);
  auto names = h_names(basis.size());
  Polynomial hl(pv);
  for (std::size_t k = 0; k < basis.size(); ++k) hl.add_term(basis[k], ss.decisions[names[k]]);
  std::map<std::string, Polynomial> back;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (box.lo[j] == -1.0 && box.hi[j] == 1.0) continue;
    double c = 0.5 * (box.lo[j] + box.hi[j]), w = 0.5 * (box.hi[j] - box.lo[j]);
    back.emplace(params[j], (Polynomial::variable(pv, params[j]) - Polynomial::constant(pv, c)) * (1.0 / w));
  }
  r.h_solver = back.empty() ? hl : hl.compose(back, pv);
  Polynomial rounded = round_decimals(r.h_solver, s.decimals);
  auto arg = find_witness(rounded, params, box);
  if (!arg) return finish();
  r.feasible = true;
  r.h = r.h_solver;
  r.h_rounded = rounded;

  Witness w;
  w.a = *arg;
  const double scale = std::pow(10.0, s.decimals);
  std::vector<double> snapped;
  for (double v : *arg) snapped.push_back(std::round(v * scale) / scale);
  bool use_snapped = rounded.eval(snapped) <= -1e-9;
  for (std::size_t j = 0; j < arg->size(); ++j)
    w.exact.push_back(use_snapped ? Rational(static_cast<long>(std::llround(snapped[j] * scale)),
                                             static_cast<long>(std::llround(scale)))
                                  : Rational::from_double((*arg)[j]));
  w.h_value = rounded.eval(use_snapped ? snapped : *arg);
  std::size_t no = t.outer->num_params();
  w.invariant = instantiate(*t.outer, std::vector<Rational>(w.exact.begin(), w.exact.begin() + static_cast<long>(no)),
                            prog.vars);
  if (t.inner)
    w.inner_invariant = instantiate(
        *t.inner, std::vector<Rational>(w.exact.begin() + static_cast<long>(no), w.exact.end()), prog.vars);
  if (s.verify_witness)
    w.verified = verify_invariant(prog, w.invariant, t.inner ? &w.inner_invariant : nullptr, s.verify).level;
  r.witness = std::move(w);
  return finish();
}

std::vector<UnderApprox> run_cluster(const LoopProgram& prog, const ClusterTemplates& t, const ClusterSettings& s,
                                     const std::optional<Box>& box) {
  Box b = box ? *box : Box::unit(t.params().size());
  std::vector<UnderApprox> out(static_cast<std::size_t>(std::max(0, s.degree_max)));
  const int jobs = std::max(1, s.jobs);
  for (int first = 1; first <= s.degree_max; first += jobs) {
    std::vector<std::future<UnderApprox>> running;
    for (int d = first; d < first + jobs && d <= s.degree_max; ++d)
      running.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                   [&, d] { return solve_cluster(prog, t, d, b, s); }));
    for (std::size_t k = 0; k < running.size(); ++k) out[first - 1 + k] = running[k].get();
  }
  return out;
}

}  // namespace invsdp
