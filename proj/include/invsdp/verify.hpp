#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "invsdp/conditions.hpp"
#include "invsdp/sdp.hpp"

namespace invsdp {

// Ordered from weakest to strongest.
enum class VerifyLevel { Fail, SampledOnly, SosPass, ExactPass };
const char* level_name(VerifyLevel v);

struct Counterexample {
  std::string condition;
  std::map<std::string, double> point;
  double violation = 0;  // how far the failing conclusion is off
};

struct VerifySettings {
  int max_order = 4;
  int samples = 100000;
  std::uint64_t seed = 1;
  double halfwidth = 10;  // sampling box when the program has no bound
  bool use_sos = true;
  double gamma_tol = 1e-8;
  double residual_tol = 1e-6;
  double eig_tol = 1e-8;
  SolverSettings sdp;
};

// An implication after eliminating equality hypotheses of the form
// c*v + q = 0 with v absent from q; `eliminated` maps v to its value.
struct Reduced {
  Implication imp;
  std::vector<std::pair<std::string, QPolynomial>> eliminated;
  bool vacuous = false;  // a hypothesis is a violated constant
};

Reduced reduce(const Implication& imp);

enum class ExactResult { Pass, Defect, Unknown };

struct ExactOutcome {
  ExactResult result = ExactResult::Unknown;
  std::optional<QPolynomial> defect;  // nonzero constant an equality conclusion reduces to
};

// Per conclusion of the reduced implication.
std::vector<ExactOutcome> verify_exact(const Reduced& r);

struct SosOutcome {
  bool pass = false;
  int order = 0;
  double gamma = 0;
  double residual = 0;
  double min_eigenvalue = 0;
  std::string status;
};

// min gamma s.t. gamma + phi is in the truncated quadratic module of the
// hypotheses; passes when gamma <= gamma_tol with a sound-enough certificate.
SosOutcome verify_sos(const Reduced& r, const Atom& conclusion, const VerifySettings& s);

// Uniform sampling of the quantified box; returns the first violation.
std::optional<Counterexample> falsify(const Reduced& r, const std::optional<Rational>& bound, int samples,
                                      std::uint64_t seed, double halfwidth);

struct ConditionReport {
  std::string id;
  VerifyLevel level = VerifyLevel::SampledOnly;
  std::string detail;
  std::optional<Counterexample> counterexample;
  std::optional<std::string> defect;
};

struct Verdict {
  VerifyLevel level = VerifyLevel::ExactPass;
  std::vector<ConditionReport> conditions;
  std::optional<Counterexample> counterexample;
  std::optional<std::string> defect;

  bool passed() const { return level == VerifyLevel::ExactPass || level == VerifyLevel::SosPass; }
};

Verdict verify_conditions(const std::vector<Implication>& imps, const std::optional<Rational>& bound,
                          const VerifySettings& s = {});

Verdict verify_invariant(const LoopProgram& prog, const std::vector<Constraint>& inv,
                         const std::vector<Constraint>* inner = nullptr, const VerifySettings& s = {});

}  // namespace invsdp
