#include "invsdp/conditions.hpp"

namespace invsdp {

std::string origin_name(Origin o) {
  switch (o) {
    case Origin::Pre: return "pre";
    case Origin::Invariant: return "invariant";
    case Origin::Guard: return "guard";
    case Origin::NegGuard: return "negated-guard";
    case Origin::Branch: return "branch";
    case Origin::Bound: return "bound";
    case Origin::Post: return "post";
    case Origin::Box: return "box";
  }
  return "?";
}

namespace {

class Builder {
 public:
  Builder(const LoopProgram& prog, VarList ring) : prog_(prog), ring_(std::move(ring)) {
    for (const auto& v : *prog.vars) quantified_.push_back(v);
    if (prog.bound) {
      Rational n2 = *prog.bound * *prog.bound;
      for (const auto& v : *prog.vars) {
        QPolynomial x = QPolynomial::variable(ring_, v);
        bound_.push_back({QPolynomial::constant(ring_, n2) - x * x, Sign::Nonneg, Origin::Bound});
      }
    }
  }

  // c <= 0 read as a hypothesis or conclusion atom.
  Atom atom(const Constraint& c, Origin o) const {
    QPolynomial p = c.poly.embed(ring_);
    return c.rel == Rel::Eq ? Atom{p, Sign::Zero, o} : Atom{-p, Sign::Nonneg, o};
  }

  std::vector<Atom> atoms(const std::vector<Constraint>& cs, Origin o) const {
    std::vector<Atom> out;
    for (const auto& c : cs) out.push_back(atom(c, o));
    return out;
  }

  std::vector<Atom> after(const std::vector<Atom>& as, const std::map<std::string, QPolynomial>& assign) const {
    std::map<std::string, QPolynomial> subst;
    for (const auto& [v, e] : assign) subst.emplace(v, e.embed(ring_));
    std::vector<Atom> out;
    for (const auto& a : as) out.push_back({a.poly.compose(subst, ring_), a.sign, a.origin});
    return out;
  }

  std::vector<Atom> guard_atoms(const std::vector<QPolynomial>& gs, Origin o) const {
    std::vector<Atom> out;
    for (const auto& g : gs) out.push_back({-g.embed(ring_), Sign::Nonneg, o});
    return out;
  }

  Implication make(std::string id, std::vector<std::vector<Atom>> hyp_groups, std::vector<Atom> concl) const {
    Implication imp;
    imp.id = std::move(id);
    for (auto& g : hyp_groups) imp.hyps.insert(imp.hyps.end(), g.begin(), g.end());
    imp.hyps.insert(imp.hyps.end(), bound_.begin(), bound_.end());
    imp.concl = std::move(concl);
    imp.quantified = quantified_;
    return imp;
  }

  Atom negated(const QPolynomial& g) const { return {g.embed(ring_), Sign::Nonneg, Origin::NegGuard}; }

 private:
  const LoopProgram& prog_;
  VarList ring_;
  std::vector<std::string> quantified_;
  std::vector<Atom> bound_;
};

}  // namespace

std::vector<Implication> invariant_conditions(const LoopProgram& prog, const InvariantShape& outer,
                                              const InvariantShape* inner) {
  if (prog.nested() != (inner != nullptr))
    throw StructuralError(inner ? "inner invariant given for a flat loop" : "nested loop needs an inner invariant");
  VarList ring = inner ? union_vars(outer.ring, inner->ring) : outer.ring;
  for (const auto& v : *prog.vars)
    if (!var_index(ring, v)) throw StructuralError("invariant ring lacks variable '" + v + "'");
  Builder b(prog, ring);
  auto I1 = b.atoms(outer.inv, Origin::Invariant);
  std::vector<Atom> I2 = inner ? b.atoms(inner->inv, Origin::Invariant) : std::vector<Atom>{};

  std::vector<Implication> out;
  out.push_back(b.make("init", {b.atoms(prog.pre, Origin::Pre)}, I1));
  auto g1 = b.guard_atoms(prog.guard, Origin::Guard);
  for (std::size_t i = 0; i < prog.branches.size(); ++i) {
    const Branch& br = prog.branches[i];
    std::string tag = std::to_string(i + 1);
    auto cond = b.guard_atoms(br.conditions, Origin::Branch);
    if (!br.inner) {
      out.push_back(b.make("ind" + tag, {I1, g1, cond}, b.after(I1, br.assign)));
      continue;
    }
    out.push_back(b.make("enter" + tag, {I1, g1, cond}, b.after(I2, br.assign)));
    const LoopProgram& in = *br.inner;
    auto g2 = b.guard_atoms(in.guard, Origin::Guard);
    for (std::size_t j = 0; j < in.branches.size(); ++j) {
      auto c2 = b.guard_atoms(in.branches[j].conditions, Origin::Branch);
      out.push_back(b.make("inner" + tag + "-ind" + std::to_string(j + 1), {I2, g2, c2},
                           b.after(I2, in.branches[j].assign)));
    }
    for (std::size_t k = 0; k < in.guard.size(); ++k)
      out.push_back(b.make("inner" + tag + "-exit" + std::to_string(k + 1), {I2, {b.negated(in.guard[k])}}, I1));
  }
  auto post = b.atoms(prog.post, Origin::Post);
  for (std::size_t k = 0; k < prog.guard.size(); ++k)
    out.push_back(b.make("sat" + std::to_string(k + 1), {I1, {b.negated(prog.guard[k])}}, post));
  return out;
}

std::vector<Implication> invariant_conditions(const LoopProgram& prog, const Template& tpl, const Template* inner) {
  InvariantShape o{tpl.ring, tpl.inv};
  if (!inner) return invariant_conditions(prog, o, nullptr);
  InvariantShape i{inner->ring, inner->inv};
  return invariant_conditions(prog, o, &i);
}

std::vector<Implication> invariant_conditions(const LoopProgram& prog, const std::vector<Constraint>& inv,
                                              const std::vector<Constraint>* inner) {
  InvariantShape o{prog.vars, inv};
  if (!inner) return invariant_conditions(prog, o, nullptr);
  InvariantShape i{prog.vars, *inner};
  return invariant_conditions(prog, o, &i);
}

Implication split_equalities(const Implication& imp) {
  Implication r = imp;
  auto split = [](const std::vector<Atom>& as) {
    std::vector<Atom> out;
    for (const auto& a : as) {
      if (a.sign == Sign::Zero) {
        out.push_back({a.poly, Sign::Nonneg, a.origin});
        out.push_back({-a.poly, Sign::Nonneg, a.origin});
      } else {
        out.push_back(a);
      }
    }
    return out;
  };
  r.hyps = split(imp.hyps);
  r.concl = split(imp.concl);
  return r;
}

}  // namespace invsdp
