#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "invsdp/rational.hpp"

namespace invsdp {

struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordered variable names shared by every polynomial of one ring.
using VarList = std::shared_ptr<const std::vector<std::string>>;

VarList make_vars(std::vector<std::string> names);
bool same_vars(const VarList& a, const VarList& b);
std::optional<std::size_t> var_index(const VarList& vars, const std::string& name);
// Names of `a` followed by names of `b` not already present.
VarList union_vars(const VarList& a, const VarList& b);

// nullopt stands for the degree of the zero polynomial. std::optional orders
// it below every integer, so std::max treats it as minus infinity.
using Degree = std::optional<int>;

class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t nvars) : e_(nvars, 0) {}
  explicit Monomial(std::vector<int> exps) : e_(std::move(exps)) {}

  std::size_t size() const { return e_.size(); }
  int operator[](std::size_t i) const { return e_[i]; }
  int& operator[](std::size_t i) { return e_[i]; }
  const std::vector<int>& exponents() const { return e_; }

  int degree() const {
    int d = 0;
    for (int v : e_) d += v;
    return d;
  }

  Monomial operator*(const Monomial& o) const {
    Monomial r(*this);
    for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] += o.e_[i];
    return r;
  }

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  std::vector<int> e_;
};

// Graded lexicographic: total degree ascending, then exponent vectors in
// descending lexicographic order, so (x1,x2) orders as 1, x1, x2, x1^2, x1x2, x2^2.
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return std::lexicographical_compare(b.exponents().begin(), b.exponents().end(),
                                        a.exponents().begin(), a.exponents().end());
  }
};

// All monomials of total degree <= d in nvars variables, graded-lex ordered.
std::vector<Monomial> monomial_basis(std::size_t nvars, int d);
// Monomials of degree <= d whose exponents are zero outside `active`.
std::vector<Monomial> monomial_basis(std::size_t nvars, const std::vector<std::size_t>& active, int d);

namespace detail {
std::string format_double(double v);
}

template <class T>
struct CoeffTraits;

template <>
struct CoeffTraits<double> {
  static bool is_zero(double c) { return c == 0.0; }
  static bool negative(double c) { return c < 0; }
  static bool is_one(double c) { return c == 1.0; }
  static bool is_integer(double c) { return std::floor(c) == c && std::fabs(c) < 1e15; }
  static std::string str(double c) { return detail::format_double(c); }
};

template <>
struct CoeffTraits<Rational> {
  static bool is_zero(const Rational& c) { return c.is_zero(); }
  static bool negative(const Rational& c) { return c.sign() < 0; }
  static bool is_one(const Rational& c) { return c == Rational(1); }
  static bool is_integer(const Rational& c) { return c.is_integer(); }
  static std::string str(const Rational& c) { return c.str(); }
};

// Sparse multivariate polynomial; immutable in spirit, every operation returns
// a new value. No zero coefficient is ever stored.
template <class T>
class BasicPolynomial {
 public:
  using Coeff = T;
  using TermMap = std::map<Monomial, T, GradedLex>;

  BasicPolynomial() : vars_(make_vars({})) {}
  explicit BasicPolynomial(VarList vars) : vars_(std::move(vars)) {}

  static BasicPolynomial constant(VarList vars, const T& c) {
    BasicPolynomial p(std::move(vars));
    p.add_term(Monomial(p.nvars()), c);
    return p;
  }
  static BasicPolynomial variable(VarList vars, const std::string& name) {
    auto idx = var_index(vars, name);
    if (!idx) throw StructuralError("unknown variable '" + name + "'");
    BasicPolynomial p(std::move(vars));
    Monomial m(p.nvars());
    m[*idx] = 1;
    p.add_term(m, T(1));
    return p;
  }
  static BasicPolynomial term(VarList vars, Monomial m, const T& c) {
    BasicPolynomial p(std::move(vars));
    if (m.size() != p.nvars()) throw StructuralError("monomial arity mismatch");
    p.add_term(std::move(m), c);
    return p;
  }

  const VarList& vars() const { return vars_; }
  std::size_t nvars() const { return vars_->size(); }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  bool is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.degree() == 0);
  }
  T constant_term() const { return coeff(Monomial(nvars())); }

  T coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? T(0) : it->second;
  }

  Degree degree() const {
    if (terms_.empty()) return std::nullopt;
    return terms_.rbegin()->first.degree();
  }

  // Degree counting only the listed variable indices.
  Degree degree_in(const std::vector<std::size_t>& idx) const {
    Degree best;
    for (const auto& [m, c] : terms_) {
      int d = 0;
      for (auto i : idx) d += m[i];
      best = std::max(best, Degree(d));
    }
    return best;
  }

  bool depends_on(std::size_t idx) const {
    for (const auto& [m, c] : terms_)
      if (m[idx] != 0) return true;
    return false;
  }

  void add_term(Monomial m, const T& c) {
    if (CoeffTraits<T>::is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(std::move(m), c);
    if (!inserted) {
      it->second += c;
      if (CoeffTraits<T>::is_zero(it->second)) terms_.erase(it);
    }
  }

  BasicPolynomial operator-() const {
    BasicPolynomial r(vars_);
    for (const auto& [m, c] : terms_) r.terms_.emplace_hint(r.terms_.end(), m, -c);
    return r;
  }

  BasicPolynomial& operator+=(const BasicPolynomial& o) {
    check_ring(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  BasicPolynomial& operator-=(const BasicPolynomial& o) {
    check_ring(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  BasicPolynomial& operator*=(const T& s) {
    if (CoeffTraits<T>::is_zero(s)) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (CoeffTraits<T>::is_zero(it->second))
        it = terms_.erase(it);
      else
        ++it;
    }
    return *this;
  }

  friend BasicPolynomial operator+(BasicPolynomial a, const BasicPolynomial& b) { return a += b; }
  friend BasicPolynomial operator-(BasicPolynomial a, const BasicPolynomial& b) { return a -= b; }
  friend BasicPolynomial operator*(BasicPolynomial a, const T& s) { return a *= s; }
  friend BasicPolynomial operator*(const T& s, BasicPolynomial a) { return a *= s; }

  friend BasicPolynomial operator*(const BasicPolynomial& a, const BasicPolynomial& b) {
    a.check_ring(b);
    BasicPolynomial r(a.vars_);
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) r.add_term(ma * mb, ca * cb);
    return r;
  }

  friend bool operator==(const BasicPolynomial& a, const BasicPolynomial& b) {
    return same_vars(a.vars_, b.vars_) && a.terms_ == b.terms_;
  }

  BasicPolynomial pow(unsigned e) const {
    BasicPolynomial r = constant(vars_, T(1)), base = *this;
    while (e) {
      if (e & 1U) r = r * base;
      e >>= 1U;
      if (e) base = base * base;
    }
    return r;
  }

  // Point given in ring order.
  T eval(const std::vector<T>& point) const {
    if (point.size() != nvars()) throw StructuralError("evaluation point arity mismatch");
    T acc(0);
    for (const auto& [m, c] : terms_) {
      T t = c;
      for (std::size_t i = 0; i < m.size(); ++i)
        for (int k = 0; k < m[i]; ++k) t *= point[i];
      acc += t;
    }
    return acc;
  }

  T eval(const std::map<std::string, T>& point) const {
    std::vector<T> v;
    v.reserve(nvars());
    for (const auto& name : *vars_) {
      auto it = point.find(name);
      if (it == point.end()) throw StructuralError("no value for variable '" + name + "'");
      v.push_back(it->second);
    }
    return eval(v);
  }

  // Replace variables by polynomials. Unlisted variables map to themselves in
  // the target ring, which is the common ring of the substitutes (or `target`).
  BasicPolynomial compose(const std::map<std::string, BasicPolynomial>& subst,
                          VarList target = nullptr) const {
    if (!target) target = subst.empty() ? vars_ : subst.begin()->second.vars();
    std::vector<BasicPolynomial> images;
    images.reserve(nvars());
    for (const auto& name : *vars_) {
      auto it = subst.find(name);
      if (it != subst.end()) {
        if (!same_vars(it->second.vars(), target))
          throw StructuralError("substitutes do not share one variable list");
        images.push_back(it->second);
      } else {
        images.push_back(variable(target, name));
      }
    }
    std::vector<std::vector<BasicPolynomial>> powers(nvars());
    auto power = [&](std::size_t i, int k) -> const BasicPolynomial& {
      auto& tab = powers[i];
      if (tab.empty()) tab.push_back(constant(target, T(1)));
      while (static_cast<int>(tab.size()) <= k) tab.push_back(tab.back() * images[i]);
      return tab[k];
    };
    BasicPolynomial r(target);
    for (const auto& [m, c] : terms_) {
      BasicPolynomial t = constant(target, c);
      for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) t = t * power(i, m[i]);
      r += t;
    }
    return r;
  }

  // Re-index into a ring containing every variable this polynomial uses.
  BasicPolynomial embed(const VarList& target) const {
    if (same_vars(vars_, target)) return *this;
    std::vector<std::optional<std::size_t>> map(nvars());
    for (std::size_t i = 0; i < nvars(); ++i) map[i] = var_index(target, (*vars_)[i]);
    BasicPolynomial r(target);
    for (const auto& [m, c] : terms_) {
      Monomial nm(target->size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i]) continue;
        if (!map[i]) throw StructuralError("variable '" + (*vars_)[i] + "' missing from target ring");
        nm[*map[i]] = m[i];
      }
      r.add_term(nm, c);
    }
    return r;
  }

  // Coefficient polynomials with respect to the listed variables: the key is
  // the monomial in `idx` (exponents elsewhere zero), the value lives in the
  // same ring but no longer mentions those variables.
  std::map<Monomial, BasicPolynomial, GradedLex> split_by(const std::vector<std::size_t>& idx) const {
    std::map<Monomial, BasicPolynomial, GradedLex> out;
    for (const auto& [m, c] : terms_) {
      Monomial key(nvars()), rest = m;
      for (auto i : idx) {
        key[i] = m[i];
        rest[i] = 0;
      }
      auto it = out.try_emplace(key, BasicPolynomial(vars_)).first;
      it->second.add_term(rest, c);
    }
    return out;
  }

  template <class F>
  auto map_coeffs(F&& f) const {
    using U = std::decay_t<decltype(f(std::declval<const T&>()))>;
    BasicPolynomial<U> r(vars_);
    for (const auto& [m, c] : terms_) r.add_term(m, f(c));
    return r;
  }

  // Terms in descending lexicographic order of exponents, e.g. "2x + r^2 - r".
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::vector<const std::pair<const Monomial, T>*> order;
    for (const auto& kv : terms_) order.push_back(&kv);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
      return std::lexicographical_compare(b->first.exponents().begin(), b->first.exponents().end(),
                                          a->first.exponents().begin(), a->first.exponents().end());
    });
    std::string s;
    bool first = true;
    for (auto* kv : order) {
      const Monomial& m = kv->first;
      T c = kv->second;
      bool neg = CoeffTraits<T>::negative(c);
      if (neg) c = -c;
      if (first)
        s += neg ? "-" : "";
      else
        s += neg ? " - " : " + ";
      first = false;
      std::string mono;
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i]) continue;
        if (!mono.empty()) mono += "*";
        mono += (*vars_)[i];
        if (m[i] > 1) mono += "^" + std::to_string(m[i]);
      }
      if (mono.empty()) {
        s += CoeffTraits<T>::str(c);
      } else if (CoeffTraits<T>::is_one(c)) {
        s += mono;
      } else {
        s += CoeffTraits<T>::str(c);
        s += CoeffTraits<T>::is_integer(c) ? "" : "*";
        s += mono;
      }
    }
    return s;
  }

 private:
  void check_ring(const BasicPolynomial& o) const {
    if (!same_vars(vars_, o.vars_)) throw StructuralError("polynomials over different variable lists");
  }

  VarList vars_;
  TermMap terms_;
};

using Polynomial = BasicPolynomial<double>;
using QPolynomial = BasicPolynomial<Rational>;

Polynomial to_float(const QPolynomial& p);
// Exact binary value of each coefficient.
QPolynomial to_exact(const Polynomial& p);

// Round each coefficient to `places` decimals; coefficients that round to zero vanish.
Polynomial round_decimals(const Polynomial& p, int places);

// Continued-fraction reconstruction: the first convergent within tol.
Rational rationalize(double v, double tol);
// Coefficients within tol of zero are dropped.
QPolynomial rationalize(const Polynomial& p, double tol);

}  // namespace invsdp
