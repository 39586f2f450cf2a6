#include "invsdp/polynomial.hpp"

#include <charconv>
#include <set>

namespace invsdp {

VarList make_vars(std::vector<std::string> names) {
  std::set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second) throw StructuralError("duplicate variable '" + n + "'");
  return std::make_shared<const std::vector<std::string>>(std::move(names));
}

bool same_vars(const VarList& a, const VarList& b) { return a == b || *a == *b; }

std::optional<std::size_t> var_index(const VarList& vars, const std::string& name) {
  for (std::size_t i = 0; i < vars->size(); ++i)
    if ((*vars)[i] == name) return i;
  return std::nullopt;
}

VarList union_vars(const VarList& a, const VarList& b) {
  std::vector<std::string> names = *a;
  for (const auto& n : *b)
    if (!var_index(a, n)) names.push_back(n);
  return make_vars(std::move(names));
}

namespace {

void enumerate(std::size_t nvars, const std::vector<std::size_t>& active, std::size_t pos, int remaining,
               Monomial& cur, std::vector<Monomial>& out) {
  if (pos == active.size()) {
    if (remaining == 0) out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[active[pos]] = e;
    enumerate(nvars, active, pos + 1, remaining - e, cur, out);
  }
  cur[active[pos]] = 0;
}

}  // namespace

std::vector<Monomial> monomial_basis(std::size_t nvars, const std::vector<std::size_t>& active, int d) {
  std::vector<Monomial> out;
  if (d < 0) return out;
  Monomial cur(nvars);
  // Within one degree the recursion emits exponent vectors in descending
  // lexicographic order, which is exactly the graded-lex tie break.
  for (int k = 0; k <= d; ++k) enumerate(nvars, active, 0, k, cur, out);
  return out;
}

std::vector<Monomial> monomial_basis(std::size_t nvars, int d) {
  std::vector<std::size_t> all(nvars);
  for (std::size_t i = 0; i < nvars; ++i) all[i] = i;
  return monomial_basis(nvars, all, d);
}

namespace detail {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

Polynomial to_float(const QPolynomial& p) {
  return p.map_coeffs([](const Rational& c) { return c.to_double(); });
}

QPolynomial to_exact(const Polynomial& p) {
  return p.map_coeffs([](double c) { return Rational::from_double(c); });
}

Polynomial round_decimals(const Polynomial& p, int places) {
  double scale = std::pow(10.0, places);
  return p.map_coeffs([scale](double c) { return std::round(c * scale) / scale; });
}

Rational rationalize(double v, double tol) {
  if (!(tol > 0)) throw std::domain_error("rationalize needs tol > 0");
  const Rational target = Rational::from_double(v);
  const Rational rtol = Rational::from_double(tol);
  Rational x = target;
  mpz_class h1 = 1, h2 = 0, k1 = 0, k2 = 1;
  while (true) {
    mpz_class a;
    mpz_fdiv_q(a.get_mpz_t(), x.get().get_num_mpz_t(), x.get().get_den_mpz_t());
    mpz_class h = a * h1 + h2, k = a * k1 + k2;
    Rational conv(h, k);
    if ((target - conv).abs() <= rtol) return conv;
    Rational frac = x - Rational(a, 1);
    if (frac.is_zero()) return conv;
    x = Rational(1) / frac;
    h2 = h1;
    h1 = h;
    k2 = k1;
    k1 = k;
  }
}

QPolynomial rationalize(const Polynomial& p, double tol) {
  QPolynomial r(p.vars());
  for (const auto& [m, c] : p.terms()) {
    if (std::fabs(c) <= tol) continue;
    r.add_term(m, rationalize(c, tol));
  }
  return r;
}

}  // namespace invsdp
