#pragma once

#include <string>
#include <vector>

#include "invsdp/program.hpp"

namespace invsdp {

// p >= 0 or p == 0.
enum class Sign { Nonneg, Zero };

enum class Origin { Pre, Invariant, Guard, NegGuard, Branch, Bound, Post, Box };

struct Atom {
  QPolynomial poly;
  Sign sign = Sign::Nonneg;
  Origin origin = Origin::Pre;
};

// hyps => every conclusion, for all values of `quantified`. All polynomials
// share one ring; variables of the ring outside `quantified` are parameters.
struct Implication {
  std::string id;
  std::vector<Atom> hyps;
  std::vector<Atom> concl;
  std::vector<std::string> quantified;
};

// An invariant over some ring containing the program vars. Le reads p <= 0.
struct InvariantShape {
  VarList ring;
  std::vector<Constraint> inv;
};

// Initiation, one consecution per branch and one saturation per guard
// component (the negated conjunctive guard is a disjunction). Nested programs
// give pre => I1, I1 & g1 => I2(f1), I2 & g2 => I2(f2), I2 & not g2 => I1 and
// I1 & not g1 => post. With a bound, N^2 - x_j^2 >= 0 joins every hypothesis list.
std::vector<Implication> invariant_conditions(const LoopProgram& prog, const InvariantShape& outer,
                                              const InvariantShape* inner = nullptr);

// Convenience overloads for templates and concrete invariants.
std::vector<Implication> invariant_conditions(const LoopProgram& prog, const Template& tpl,
                                              const Template* inner = nullptr);
std::vector<Implication> invariant_conditions(const LoopProgram& prog, const std::vector<Constraint>& inv,
                                              const std::vector<Constraint>* inner = nullptr);

// Equality atoms become a pair of opposite inequalities.
Implication split_equalities(const Implication& imp);

std::string origin_name(Origin o);

}  // namespace invsdp
