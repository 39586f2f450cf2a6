#include "invsdp/mask.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "invsdp/sos.hpp"

namespace invsdp {

namespace {

std::vector<std::size_t> idx_of(const VarList& vars, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(*var_index(vars, n));
  return out;
}

bool mentions(const QPolynomial& p, const std::vector<std::size_t>& idx) {
  return std::any_of(idx.begin(), idx.end(), [&](std::size_t i) { return p.depends_on(i); });
}

}  // namespace

std::string check_core_split(const LoopProgram& prog, const std::vector<std::string>& core) {
  if (prog.nested()) return "nested loops are not handled by masked templates";
  std::set<std::string> cs(core.begin(), core.end());
  std::vector<std::string> nc;
  for (const auto& v : *prog.vars)
    if (!cs.count(v)) nc.push_back(v);
  for (const auto& c : core)
    if (!var_index(prog.vars, c)) return "unknown core variable '" + c + "'";
  if (core.empty() || nc.empty()) return "core and non-core parts must both be non-empty";
  auto z = idx_of(prog.vars, nc);
  for (std::size_t i = 0; i < prog.branches.size(); ++i) {
    const auto& b = prog.branches[i];
    for (const auto& y : core)
      if (mentions(b.assign.at(y), z))
        return "branch " + std::to_string(i + 1) + ": update of core variable '" + y + "' reads a non-core variable";
    for (const auto& v : nc)
      if (b.assign.at(v).degree_in(z).value_or(0) > 1)
        return "branch " + std::to_string(i + 1) + ": update of '" + v + "' is not linear in the non-core variables";
    for (const auto& c : b.conditions)
      if (mentions(c, z)) return "branch " + std::to_string(i + 1) + ": condition reads a non-core variable";
  }
  for (const auto& g : prog.guard)
    if (mentions(g, z)) return "guard reads a non-core variable";
  for (const auto& q : prog.post)
    if (q.poly.degree_in(z).value_or(0) > 1) return "postcondition is not linear in the non-core variables";
  return "";
}

CoreSplit identify_core_variables(const LoopProgram& prog, const std::optional<std::vector<std::string>>& declared) {
  auto split = [&](const std::vector<std::string>& core) {
    CoreSplit s;
    s.core = core;
    for (const auto& v : *prog.vars)
      if (std::find(core.begin(), core.end(), v) == core.end()) s.noncore.push_back(v);
    return s;
  };
  if (declared) {
    std::string why = check_core_split(prog, *declared);
    if (!why.empty()) throw NotMaskable(why);
    return split(*declared);
  }
  const std::size_t n = prog.vars->size();
  if (n > 12) throw NotMaskable("core-variable search is limited to 12 variables; declare the core");
  std::vector<unsigned> masks;  // bit set = non-core
  for (unsigned m = 1; m + 1 < (1U << n); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(),
                   [](unsigned a, unsigned b) { return __builtin_popcount(a) > __builtin_popcount(b); });
  for (unsigned m : masks) {
    std::vector<std::string> core;
    for (std::size_t i = 0; i < n; ++i)
      if (!(m & (1U << i))) core.push_back((*prog.vars)[i]);
    if (check_core_split(prog, core).empty()) return split(core);
  }
  throw NotMaskable("no variable split satisfies the core-variable conditions");
}

std::vector<Implication> substitute_conditions(const LoopProgram& prog, const Template& tpl) {
  if (tpl.kind != TemplateKind::Masked) throw StructuralError("masked template required");
  std::string why = check_core_split(prog, tpl.core);
  if (!why.empty()) throw NotMaskable(why);
  auto imps = invariant_conditions(prog, tpl);
  std::vector<std::size_t> pidx = idx_of(tpl.ring, *tpl.params);
  for (auto& imp : imps) {
    std::map<std::string, QPolynomial> subst;
    std::vector<Atom> kept;
    for (const auto& h : imp.hyps) {
      bool is_def = false;
      if (h.origin == Origin::Invariant && h.sign == Sign::Zero)
        for (std::size_t r = 0; r < tpl.noncore.size(); ++r)
          if (h.poly == QPolynomial::variable(tpl.ring, tpl.noncore[r]) - tpl.eq_rhs[r]) {
            subst.emplace(tpl.noncore[r], tpl.eq_rhs[r]);
            is_def = true;
          }
      if (!is_def) kept.push_back(h);
    }
    if (subst.empty()) continue;
    for (auto& h : kept) h.poly = h.poly.compose(subst, tpl.ring);
    for (auto& c : imp.concl) c.poly = c.poly.compose(subst, tpl.ring);
    imp.hyps = std::move(kept);
    auto& q = imp.quantified;
    q.erase(std::remove_if(q.begin(), q.end(), [&](const std::string& v) { return subst.count(v) > 0; }), q.end());
  }
  for (const auto& imp : imps) {
    for (const auto& h : imp.hyps)
      if (mentions(h.poly, pidx)) throw BilinearityError("condition '" + imp.id + "': parameter in a hypothesis");
    for (const auto& c : imp.concl)
      if (c.poly.degree_in(pidx).value_or(0) > 1)
        throw BilinearityError("condition '" + imp.id + "': conclusion is not affine in the parameters");
  }
  return imps;
}

SosProgram build_mask_program(const LoopProgram& prog, const Template& tpl, const MaskSettings& s) {
  const auto imps = substitute_conditions(prog, tpl);
  const bool free_eq = s.free_equality_multipliers, slacks = !s.feasibility_only;
  // Count slacks first so the ring can hold them.
  std::size_t nslack = 0;
  if (slacks)
    for (const auto& imp : imps) nslack += imp.concl.size();
  std::vector<std::string> slack_names;
  for (std::size_t k = 1; k <= nslack; ++k) slack_names.push_back("$s" + std::to_string(k));
  VarList ring = union_vars(make_vars(slack_names), tpl.ring);
  SosProgram sp;
  sp.ring = ring;
  sp.decisions.assign(tpl.params->begin(), tpl.params->end());
  std::size_t k = 0;
  for (const auto& raw : imps) {
    Implication imp = free_eq ? raw : split_equalities(raw);
    std::vector<QPolynomial> nonneg, zero;
    bool vacuous = false;
    for (const auto& h : imp.hyps) {
      QPolynomial p = h.poly.embed(ring);
      if (p.is_constant()) {
        int sg = p.constant_term().sign();
        vacuous = vacuous || (h.sign == Sign::Nonneg ? sg < 0 : sg != 0);
        continue;
      }
      (h.sign == Sign::Zero ? zero : nonneg).push_back(p);
    }
    for (const auto& c : raw.concl) {
      std::string sname = slacks ? slack_names[k++] : "";
      if (vacuous) continue;
      QPolynomial s(ring);
      if (slacks) {
        s = QPolynomial::variable(ring, sname);
        sp.decisions.push_back(sname);
        sp.objective[sname] = 1.0;
        SosConstraint floor;
        floor.id = raw.id + ":" + sname;
        floor.target = s;
        floor.order = 0;
        sp.constraints.push_back(floor);
      }
      std::vector<QPolynomial> targets = {c.poly.embed(ring)};
      if (c.sign == Sign::Zero) targets.push_back(-targets.front());
      for (std::size_t t = 0; t < targets.size(); ++t) {
        SosConstraint sc;
        sc.id = raw.id + (targets.size() > 1 ? (t ? "-" : "+") : "") + "#" + std::to_string(k);
        sc.target = targets[t] + s;
        sc.nonneg = nonneg;
        sc.zero = zero;
        sc.indeterminates = raw.quantified;
        sp.constraints.push_back(std::move(sc));
      }
    }
  }
  sp.order = relaxation_order(sp);
  return sp;
}

MaskResult run_mask(const LoopProgram& prog, const Template& tpl, const MaskSettings& s) {
  auto t0 = std::chrono::steady_clock::now();
  MaskResult res;
  res.split = identify_core_variables(prog, tpl.core);
  SosProgram sp = build_mask_program(prog, tpl, s);
  const int first = sp.order;
  for (int d = first; d <= std::max(first, s.relax_max); ++d) {
    MaskAttempt at;
    at.order = d;
    sp.order = d;
    for (auto& c : sp.constraints)
      if (c.order != 0) c.order = d;
    SosSolution sol;
    try {
      sol = solve_sos(sp, s.sdp);
    } catch (const SizeError& e) {
      at.status = "SizeError";
      at.note = e.what();
      res.attempts.push_back(at);
      break;
    }
    at.status = status_name(sol.sdp.status);
    at.slack = sol.objective;
    at.residual = sol.max_residual;
    bool usable = sol.sdp.status == SdpStatus::Optimal ||
                  ((sol.sdp.status == SdpStatus::NumericalFailure || sol.sdp.status == SdpStatus::MaxIterations) &&
                   sol.sdp.residuals.primal <= s.feas_tol);
    if (!usable) {
      at.note = sol.sdp.message;
      res.attempts.push_back(at);
      continue;
    }
    const double scale = std::pow(10.0, s.decimals);
    for (const auto& p : *tpl.params) {
      double v = sol.decisions[p];
      at.a.push_back(v);
      if (std::fabs(v) < s.rational_tol) v = 0;
      at.rounded.push_back(rationalize(std::round(v * scale) / scale, s.rational_tol));
    }
    auto inv = instantiate(tpl, at.rounded, prog.vars);
    Verdict v = verify_invariant(prog, inv, nullptr, s.verify);
    at.verified = v.level;
    res.attempts.push_back(at);
    if (v.passed()) {
      res.found = true;
      res.params = at.rounded;
      res.invariant = inv;
      res.verdict = v;
      res.order = d;
      break;
    }
    res.verdict = v;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

GeneratedProgram gen_sum_power(int k, int d) {
  if (k < 1 || k > 12 || d < 1 || d > 12) throw StructuralError("gen-sumpower expects 1 <= k, d <= 12");
  std::string ns, sum;
  for (int i = 1; i <= k; ++i) {
    ns += (i > 1 ? ", " : "") + std::string("n") + std::to_string(i);
    sum += (i > 1 ? " + " : "") + std::string("n") + std::to_string(i);
  }
  std::string t;
  t += "vars " + ns + ", s;\n";
  t += "pre { s == (" + sum + ")^" + std::to_string(d) + "; }\n";
  t += "while (true) {\n";
  for (int i = 1; i <= k; ++i) t += "  n" + std::to_string(i) + " := n" + std::to_string(i) + " + 1;\n";
  t += "  s := s + (" + sum + " + " + std::to_string(k) + ")^" + std::to_string(d) + " - (" + sum + ")^" +
       std::to_string(d) + ";\n";
  t += "}\npost { }\n";
  t += "template masked { core " + ns + "; eq s = poly(" + ns + "; " + std::to_string(d) + "); }\n";
  ProgramFile f = parse_program(t);
  std::string head = "# " + std::to_string(k) + " counters, power " + std::to_string(d) + ", " +
                     std::to_string(f.tpl->num_params()) + " template parameters\n";
  return {head + t, f};
}

}  // namespace invsdp
