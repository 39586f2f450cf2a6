#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invsdp/parse.hpp"
#include "invsdp/polynomial.hpp"

namespace invsdp {

// p <= 0 or p == 0.
enum class Rel { Le, Eq };

struct Constraint {
  QPolynomial poly;
  Rel rel = Rel::Le;
};

struct Template;
struct LoopProgram;

// One `case` of a loop body: conjunctive conditions c(x) <= 0 and a total,
// simultaneous assignment. A branch may end in one nested loop.
struct Branch {
  std::vector<QPolynomial> conditions;
  std::map<std::string, QPolynomial> assign;
  std::shared_ptr<const LoopProgram> inner;
  std::shared_ptr<const Template> inner_template;
};

struct LoopProgram {
  VarList vars;
  std::optional<Rational> bound;       // |x_j| <= N for every variable
  std::vector<Constraint> pre;          // empty for nested loops
  std::vector<QPolynomial> guard;       // loop runs while every g_j <= 0
  std::vector<Branch> branches;
  std::vector<Constraint> post;         // empty for nested loops

  bool nested() const;
  // Throws StructuralError on a partial assignment or foreign variables.
  void validate() const;
};

enum class TemplateKind { Polynomial, BasicSemialgebraic, Masked };

// Parametric invariant I(a, x). Polynomial and basic templates are read as
// the conjunction inv[r] <= 0 with parameters in [-1,1]; any user halfwidth
// is folded into the coefficients and kept in `scale`. Masked templates use
// unbounded parameters and hold z_r - I_r(a, y) == 0 plus I_t(y) <= 0.
struct Template {
  TemplateKind kind = TemplateKind::Polynomial;
  VarList params;
  VarList ring;                          // params followed by program vars
  std::vector<Constraint> inv;
  std::vector<double> scale;             // per parameter, 1 unless a box was given

  // Masked only.
  std::vector<std::string> core;
  std::vector<std::string> noncore;      // aligned with eq_rhs
  std::vector<QPolynomial> eq_rhs;       // I_r(a, y) in `ring`
  std::vector<QPolynomial> ineqs;        // I_t(y) <= 0 in `ring`

  // How the template was written, kept so it prints back the same way.
  bool explicit_form = false;            // `template expr`
  std::vector<std::string> over;         // poly(over; degree)
  int degree = 0;
  Rational halfwidth{1};
  std::vector<int> eq_degrees;
  std::string prefix = "a";

  std::size_t num_params() const { return params->size(); }
};

// Full polynomial template sum_beta w * a_beta x^beta over monomials of
// degree <= d in `over`, parameters named prefix1, prefix2, ... in
// graded-lex order of beta.
Template make_polynomial_template(const VarList& vars, const std::vector<std::string>& over, int d,
                                  const Rational& halfwidth, const std::string& prefix = "a");

// Masked template: one `poly(core; d_r)` right-hand side per non-core variable.
Template make_masked_template(const VarList& vars, const std::vector<std::string>& core,
                              const std::vector<std::pair<std::string, int>>& eqs,
                              const std::vector<QPolynomial>& ineqs, const std::string& prefix = "a");

// Template given as explicit polynomials (each <= 0) over params and vars.
Template make_expr_template(const VarList& vars, const std::vector<std::string>& params,
                            const std::vector<QPolynomial>& polys);

// Concrete invariant at parameter value a0, over the program vars. Bounded
// templates reject points outside [-1,1]^n'.
std::vector<Constraint> instantiate(const Template& t, const std::vector<Rational>& a0,
                                    const VarList& vars);

struct ProgramFile {
  std::shared_ptr<const LoopProgram> program;
  std::shared_ptr<const Template> tpl;  // may be null
};

ProgramFile parse_program(std::string_view text);
ProgramFile load_program(const std::string& path);
std::string print_program(const ProgramFile& f);
std::string print_template(const Template& t, const VarList& vars);

}  // namespace invsdp
