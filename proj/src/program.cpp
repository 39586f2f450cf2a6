#include "invsdp/program.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace invsdp {

bool LoopProgram::nested() const {
  return std::any_of(branches.begin(), branches.end(), [](const Branch& b) { return b.inner != nullptr; });
}

void LoopProgram::validate() const {
  auto check = [&](const QPolynomial& p, const char* what) {
    if (!same_vars(p.vars(), vars)) throw StructuralError(std::string(what) + " is not over the program variables");
  };
  for (const auto& c : pre) check(c.poly, "precondition");
  for (const auto& c : post) check(c.poly, "postcondition");
  for (const auto& g : guard) check(g, "guard");
  if (branches.empty()) throw StructuralError("loop has no branches");
  for (const auto& b : branches) {
    for (const auto& c : b.conditions) check(c, "branch condition");
    for (const auto& v : *vars)
      if (!b.assign.count(v)) throw StructuralError("assignment does not define '" + v + "'");
    for (const auto& [v, e] : b.assign) {
      if (!var_index(vars, v)) throw StructuralError("assignment to unknown variable '" + v + "'");
      check(e, "assignment");
    }
    if (b.inner) {
      if (!b.inner_template) throw StructuralError("nested loop without a template");
      if (b.inner->nested()) throw StructuralError("loops nest at most one level deep");
      if (!same_vars(b.inner->vars, vars)) throw StructuralError("nested loop uses other variables");
      b.inner->validate();
    }
  }
  if (bound && bound->sign() <= 0) throw StructuralError("bound must be positive");
}

namespace {

std::vector<std::string> param_names(const std::string& prefix, std::size_t n, const VarList& vars) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= n; ++i) {
    names.push_back(prefix + std::to_string(i));
    if (var_index(vars, names.back()))
      throw StructuralError("parameter name '" + names.back() + "' clashes with a program variable");
  }
  return names;
}

std::vector<std::size_t> indices(const VarList& ring, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    auto i = var_index(ring, n);
    if (!i) throw StructuralError("unknown variable '" + n + "'");
    out.push_back(*i);
  }
  return out;
}

// sum_k coeff_k * names_k * m_k over the basis of `over`, degree <= d.
QPolynomial generic_poly(const VarList& ring, const std::vector<std::string>& over, int d,
                         const std::vector<std::string>& names, std::size_t first, const Rational& w) {
  auto basis = monomial_basis(ring->size(), indices(ring, over), d);
  QPolynomial p(ring);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    Monomial m = basis[k];
    m[*var_index(ring, names[first + k])] += 1;
    p.add_term(m, w);
  }
  return p;
}

std::size_t basis_size(std::size_t n, int d) {
  std::size_t r = 1;
  for (int k = 1; k <= d; ++k) r = r * (n + k) / k;
  return r;
}

}  // namespace

Template make_polynomial_template(const VarList& vars, const std::vector<std::string>& over, int d,
                                  const Rational& halfwidth, const std::string& prefix) {
  if (d < 0) throw StructuralError("template degree must be non-negative");
  if (halfwidth.sign() <= 0) throw StructuralError("template box must be positive");
  indices(vars, over);
  Template t;
  t.kind = TemplateKind::Polynomial;
  auto names = param_names(prefix, basis_size(over.size(), d), vars);
  t.params = make_vars(names);
  t.ring = union_vars(t.params, vars);
  t.inv.push_back({generic_poly(t.ring, over, d, names, 0, halfwidth), Rel::Le});
  t.scale.assign(names.size(), halfwidth.to_double());
  t.over = over;
  t.degree = d;
  t.halfwidth = halfwidth;
  t.prefix = prefix;
  return t;
}

Template make_masked_template(const VarList& vars, const std::vector<std::string>& core,
                              const std::vector<std::pair<std::string, int>>& eqs,
                              const std::vector<QPolynomial>& ineqs, const std::string& prefix) {
  Template t;
  t.kind = TemplateKind::Masked;
  t.core = core;
  t.prefix = prefix;
  std::set<std::string> seen(core.begin(), core.end());
  if (seen.size() != core.size()) throw StructuralError("core variable listed twice");
  indices(vars, core);
  std::size_t total = 0;
  for (const auto& [z, d] : eqs) {
    if (!var_index(vars, z)) throw StructuralError("unknown variable '" + z + "'");
    if (!seen.insert(z).second) throw StructuralError("variable '" + z + "' is both core and masked twice");
    if (d < 0) throw StructuralError("equality degree must be non-negative");
    t.noncore.push_back(z);
    t.eq_degrees.push_back(d);
    total += basis_size(core.size(), d);
  }
  for (const auto& v : *vars)
    if (!seen.count(v)) throw StructuralError("variable '" + v + "' is neither core nor defined by an equality");
  auto names = param_names(prefix, total, vars);
  t.params = make_vars(names);
  t.ring = union_vars(t.params, vars);
  std::size_t first = 0;
  for (std::size_t r = 0; r < eqs.size(); ++r) {
    QPolynomial rhs = generic_poly(t.ring, core, eqs[r].second, names, first, Rational(1));
    first += basis_size(core.size(), eqs[r].second);
    t.eq_rhs.push_back(rhs);
    t.inv.push_back({QPolynomial::variable(t.ring, eqs[r].first) - rhs, Rel::Eq});
  }
  auto core_idx = indices(vars, core);
  for (const auto& q : ineqs) {
    for (std::size_t i = 0; i < vars->size(); ++i)
      if (q.depends_on(i) && std::find(core_idx.begin(), core_idx.end(), i) == core_idx.end())
        throw StructuralError("template inequality mentions non-core variable '" + (*vars)[i] + "'");
    t.ineqs.push_back(q.embed(t.ring));
    t.inv.push_back({t.ineqs.back(), Rel::Le});
  }
  t.scale.assign(names.size(), 1.0);
  return t;
}

Template make_expr_template(const VarList& vars, const std::vector<std::string>& params,
                            const std::vector<QPolynomial>& polys) {
  if (polys.empty()) throw StructuralError("template has no polynomials");
  Template t;
  t.kind = polys.size() == 1 ? TemplateKind::Polynomial : TemplateKind::BasicSemialgebraic;
  for (const auto& p : params)
    if (var_index(vars, p)) throw StructuralError("parameter '" + p + "' clashes with a program variable");
  t.params = make_vars(params);
  t.ring = union_vars(t.params, vars);
  if (t.ring->size() != params.size() + vars->size()) throw StructuralError("duplicate parameter name");
  for (const auto& p : polys) t.inv.push_back({p.embed(t.ring), Rel::Le});
  t.scale.assign(params.size(), 1.0);
  t.explicit_form = true;
  return t;
}

std::vector<Constraint> instantiate(const Template& t, const std::vector<Rational>& a0, const VarList& vars) {
  if (a0.size() != t.num_params()) throw StructuralError("parameter vector has the wrong length");
  std::map<std::string, QPolynomial> subst;
  for (std::size_t j = 0; j < a0.size(); ++j) {
    if (t.kind != TemplateKind::Masked && a0[j].abs() > Rational(1))
      throw StructuralError("parameter '" + (*t.params)[j] + "' lies outside [-1,1]");
    subst.emplace((*t.params)[j], QPolynomial::constant(t.ring, a0[j]));
  }
  std::vector<Constraint> out;
  for (const auto& c : t.inv) out.push_back({c.poly.compose(subst, t.ring).embed(vars), c.rel});
  return out;
}

}  // namespace invsdp
