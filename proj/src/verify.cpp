#include "invsdp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "invsdp/kernels.hpp"
#include "invsdp/sos.hpp"

namespace invsdp {

const char* level_name(VerifyLevel v) {
  switch (v) {
    case VerifyLevel::Fail: return "Fail";
    case VerifyLevel::SampledOnly: return "SampledOnly";
    case VerifyLevel::SosPass: return "SosPass";
    case VerifyLevel::ExactPass: return "ExactPass";
  }
  return "?";
}

namespace {

// v appears in exactly one term, and that term is c*v.
std::optional<Rational> solvable_for(const QPolynomial& p, std::size_t idx) {
  std::optional<Rational> c;
  for (const auto& [m, coef] : p.terms()) {
    if (!m[idx]) continue;
    if (c || m[idx] != 1 || m.degree() != 1) return std::nullopt;
    c = coef;
  }
  return c;
}

void substitute(Reduced& r, const std::string& v, const QPolynomial& value) {
  std::map<std::string, QPolynomial> s{{v, value}};
  const VarList& ring = value.vars();
  for (auto& a : r.imp.hyps) a.poly = a.poly.compose(s, ring);
  for (auto& a : r.imp.concl) a.poly = a.poly.compose(s, ring);
  for (auto& [w, e] : r.eliminated) e = e.compose(s, ring);
  r.eliminated.emplace_back(v, value);
  auto& q = r.imp.quantified;
  q.erase(std::remove(q.begin(), q.end(), v), q.end());
}

bool nonneg_constant(const QPolynomial& p) { return p.is_constant() && p.constant_term().sign() >= 0; }

}  // namespace

Reduced reduce(const Implication& imp) {
  Reduced r;
  r.imp = imp;
  bool changed = true;
  while (changed) {
    changed = false;
    auto& hyps = r.imp.hyps;
    for (std::size_t h = 0; h < hyps.size() && !changed; ++h) {
      if (hyps[h].sign != Sign::Zero || hyps[h].poly.is_constant()) continue;
      const QPolynomial& e = hyps[h].poly;
      const auto& q = r.imp.quantified;
      // Later variables go first, so x == y/2 eliminates y in favour of x.
      for (auto it = q.rbegin(); it != q.rend(); ++it) {
        auto idx = var_index(e.vars(), *it);
        auto c = solvable_for(e, *idx);
        if (!c) continue;
        QPolynomial rest = e - QPolynomial::variable(e.vars(), *it) * *c;
        QPolynomial value = rest * (Rational(-1) / *c);
        std::string v = *it;
        hyps.erase(hyps.begin() + static_cast<long>(h));
        substitute(r, v, value);
        changed = true;
        break;
      }
    }
  }
  std::vector<Atom> kept;
  for (const auto& a : r.imp.hyps) {
    if (a.poly.is_constant()) {
      int sg = a.poly.constant_term().sign();
      if ((a.sign == Sign::Nonneg && sg < 0) || (a.sign == Sign::Zero && sg != 0)) r.vacuous = true;
      continue;
    }
    kept.push_back(a);
  }
  r.imp.hyps = std::move(kept);
  return r;
}

std::vector<ExactOutcome> verify_exact(const Reduced& r) {
  std::vector<ExactOutcome> out;
  bool has_eq = std::any_of(r.imp.hyps.begin(), r.imp.hyps.end(), [](const Atom& a) { return a.sign == Sign::Zero; });
  for (const auto& c : r.imp.concl) {
    ExactOutcome o;
    const QPolynomial& p = c.poly;
    if (r.vacuous) {
      o.result = ExactResult::Pass;
    } else if (c.sign == Sign::Zero) {
      if (p.is_zero()) {
        o.result = ExactResult::Pass;
      } else if (p.is_constant() && !has_eq) {
        o.result = ExactResult::Defect;
        o.defect = p;
      }
    } else if (nonneg_constant(p)) {
      o.result = ExactResult::Pass;
    } else {
      // phi = c*h + k with k >= 0, c >= 0 for inequality hypotheses.
      for (const auto& h : r.imp.hyps) {
        auto lead = std::find_if(h.poly.terms().begin(), h.poly.terms().end(),
                                 [](const auto& t) { return t.first.degree() > 0; });
        if (lead == h.poly.terms().end()) continue;
        Rational k = p.coeff(lead->first) / lead->second;
        if (h.sign == Sign::Nonneg && k.sign() < 0) continue;
        if (nonneg_constant(p - h.poly * k)) {
          o.result = ExactResult::Pass;
          break;
        }
      }
    }
    out.push_back(o);
  }
  return out;
}

SosOutcome verify_sos(const Reduced& r, const Atom& conclusion, const VerifySettings& s) {
  SosOutcome out;
  if (conclusion.sign != Sign::Nonneg) throw StructuralError("verify_sos expects an inequality conclusion");
  const VarList& base = conclusion.poly.vars();
  VarList ring = union_vars(make_vars({"$gamma"}), base);
  SosProgram prog;
  prog.ring = ring;
  prog.decisions = {"$gamma"};
  prog.objective["$gamma"] = 1.0;
  QPolynomial gamma = QPolynomial::variable(ring, "$gamma");
  SosConstraint main;
  main.id = "main";
  main.target = gamma + conclusion.poly.embed(ring);
  std::vector<bool> used(base->size(), false);
  auto mark = [&](const QPolynomial& p) {
    for (std::size_t i = 0; i < base->size(); ++i) used[i] = used[i] || p.depends_on(i);
  };
  mark(conclusion.poly);
  for (const auto& h : r.imp.hyps) {
    mark(h.poly);
    (h.sign == Sign::Zero ? main.zero : main.nonneg).push_back(h.poly.embed(ring));
  }
  for (const auto& v : r.imp.quantified)
    if (used[*var_index(base, v)]) main.indeterminates.push_back(v);
  for (std::size_t i = 0; i < base->size(); ++i)
    if (used[i] && std::find(r.imp.quantified.begin(), r.imp.quantified.end(), (*base)[i]) == r.imp.quantified.end())
      throw StructuralError("condition '" + r.imp.id + "' still has parameter '" + (*base)[i] + "'");
  SosConstraint floor;
  floor.id = "gamma-floor";
  floor.target = gamma + QPolynomial::constant(ring, Rational(1));
  floor.order = 0;
  const int first = relaxation_order(main, ring);
  prog.constraints = {main, floor};
  for (int d = first; d <= std::max(first, s.max_order); ++d) {
    prog.order = d;
    prog.constraints[0].order = d;
    SosSolution sol;
    try {
      sol = solve_sos(prog, s.sdp);
    } catch (const SizeError&) {
      break;
    }
    out.order = d;
    out.gamma = sol.decisions["$gamma"];
    out.residual = sol.max_residual;
    out.min_eigenvalue = sol.min_eigenvalue;
    out.status = status_name(sol.sdp.status);
    bool solved = sol.sdp.status == SdpStatus::Optimal || sol.sdp.status == SdpStatus::NumericalFailure ||
                  sol.sdp.status == SdpStatus::MaxIterations;
    if (solved && out.gamma <= s.gamma_tol && out.residual <= s.residual_tol && out.min_eigenvalue >= -s.eig_tol) {
      out.pass = true;
      return out;
    }
  }
  return out;
}

std::optional<Counterexample> falsify(const Reduced& r, const std::optional<Rational>& bound, int samples,
                                      std::uint64_t seed, double halfwidth) {
  if (samples < 1) throw std::invalid_argument("falsify needs at least one sample");
  if (r.vacuous || r.imp.concl.empty()) return std::nullopt;
  for (const auto& h : r.imp.hyps)
    if (h.sign == Sign::Zero) return std::nullopt;  // a random point never lies on the variety
  const VarList& ring = r.imp.concl.front().poly.vars();
  const std::size_t n = ring->size();
  std::vector<std::size_t> q;
  for (const auto& v : r.imp.quantified) q.push_back(*var_index(ring, v));
  const double w = bound ? bound->to_double() : halfwidth;

  struct Packed {
    kernels::PackedPolynomial value, magnitude;
  };
  auto pack = [](const QPolynomial& p) {
    Polynomial f = to_float(p);
    return Packed{kernels::pack(f), kernels::pack(f.map_coeffs([](double c) { return std::fabs(c); }))};
  };
  std::vector<Packed> hyps, concl;
  for (const auto& h : r.imp.hyps) hyps.push_back(pack(h.poly));
  for (const auto& c : r.imp.concl) concl.push_back(pack(c.poly));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-w, w);
  const std::size_t chunk = 2048;
  std::vector<double> pts(chunk * n, 0.0), apts(chunk * n, 0.0), val(chunk), mag(chunk);
  std::vector<char> inside(chunk);
  for (long done = 0; done < samples;) {
    std::size_t m = std::min<std::size_t>(chunk, static_cast<std::size_t>(samples - done));
    for (std::size_t k = 0; k < m; ++k)
      for (auto i : q) {
        pts[k * n + i] = U(rng);
        apts[k * n + i] = std::fabs(pts[k * n + i]);
      }
    std::fill(inside.begin(), inside.begin() + static_cast<long>(m), 1);
    for (const auto& h : hyps) {
      kernels::eval_batch(h.value, pts.data(), m, val.data());
      kernels::eval_batch(h.magnitude, apts.data(), m, mag.data());
      // Strictly inside, beyond rounding, so a reported point is genuine.
      for (std::size_t k = 0; k < m; ++k)
        if (val[k] <= 1e-9 * mag[k] + 1e-12) inside[k] = 0;
    }
    for (std::size_t c = 0; c < concl.size(); ++c) {
      kernels::eval_batch(concl[c].value, pts.data(), m, val.data());
      kernels::eval_batch(concl[c].magnitude, apts.data(), m, mag.data());
      for (std::size_t k = 0; k < m; ++k) {
        if (!inside[k]) continue;
        double tol = 1e-9 * mag[k] + 1e-12;
        double off = r.imp.concl[c].sign == Sign::Zero ? std::fabs(val[k]) : -val[k];
        if (off <= tol) continue;
        Counterexample cx;
        cx.condition = r.imp.id;
        cx.violation = off;
        std::vector<double> p(pts.begin() + static_cast<long>(k * n), pts.begin() + static_cast<long>((k + 1) * n));
        for (auto i : q) cx.point[(*ring)[i]] = p[i];
        for (const auto& [v, e] : r.eliminated) cx.point[v] = to_float(e).eval(p);
        return cx;
      }
    }
    done += static_cast<long>(m);
  }
  return std::nullopt;
}

Verdict verify_conditions(const std::vector<Implication>& imps, const std::optional<Rational>& bound,
                          const VerifySettings& s) {
  Verdict v;
  for (std::size_t i = 0; i < imps.size(); ++i) {
    ConditionReport rep;
    rep.id = imps[i].id;
    Reduced red = reduce(imps[i]);
    auto ex = verify_exact(red);
    bool all_exact = std::all_of(ex.begin(), ex.end(), [](const ExactOutcome& o) { return o.result == ExactResult::Pass; });
    std::ostringstream detail;
    if (all_exact) {
      rep.level = VerifyLevel::ExactPass;
      detail << (red.vacuous ? "vacuous hypotheses" : "identities after eliminating equalities");
    } else {
      rep.counterexample = falsify(red, bound, s.samples, s.seed + 7919 * i, s.halfwidth);
      for (std::size_t c = 0; c < ex.size() && !rep.defect; ++c)
        if (ex[c].result == ExactResult::Defect) rep.defect = ex[c].defect->to_string();
      if (rep.counterexample || rep.defect) {
        rep.level = VerifyLevel::Fail;
        detail << (rep.counterexample ? "sampled counterexample" : "constant identity defect");
      } else {
        bool sos_ok = s.use_sos;
        int worst_order = 0;
        for (std::size_t c = 0; c < ex.size() && sos_ok; ++c) {
          if (ex[c].result == ExactResult::Pass) continue;
          const Atom& a = red.imp.concl[c];
          std::vector<Atom> sides = {{a.poly, Sign::Nonneg, a.origin}};
          if (a.sign == Sign::Zero) sides.push_back({-a.poly, Sign::Nonneg, a.origin});
          for (const auto& side : sides) {
            SosOutcome so = verify_sos(red, side, s);
            worst_order = std::max(worst_order, so.order);
            if (!so.pass) {
              sos_ok = false;
              detail << "no certificate up to order " << so.order << " (gamma " << so.gamma << ", residual "
                     << so.residual << ", " << so.status << ")";
              break;
            }
          }
        }
        if (sos_ok) {
          rep.level = VerifyLevel::SosPass;
          detail << "certificates at order <= " << worst_order;
        } else {
          rep.level = VerifyLevel::SampledOnly;
          if (!s.use_sos) detail << "sampled only";
        }
      }
    }
    rep.detail = detail.str();
    v.level = std::min(v.level, rep.level);
    if (!v.counterexample && rep.counterexample) v.counterexample = rep.counterexample;
    if (!v.defect && rep.defect) v.defect = rep.defect;
    v.conditions.push_back(std::move(rep));
  }
  return v;
}

Verdict verify_invariant(const LoopProgram& prog, const std::vector<Constraint>& inv,
                         const std::vector<Constraint>* inner, const VerifySettings& s) {
  return verify_conditions(invariant_conditions(prog, inv, inner), prog.bound, s);
}

}  // namespace invsdp
