#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "invsdp/conditions.hpp"
#include "invsdp/program.hpp"
#include "invsdp/sdp.hpp"
#include "invsdp/sos.hpp"
#include "invsdp/verify.hpp"

namespace invsdp {

struct NotMaskable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CoreSplit {
  std::vector<std::string> core;
  std::vector<std::string> noncore;
};

// Empty when the split is valid, otherwise the first violated clause:
// core updates read only core variables, non-core updates are linear in the
// non-core variables, guards and branch conditions ignore them and the
// postcondition is linear in them.
std::string check_core_split(const LoopProgram& prog, const std::vector<std::string>& core);

// Validates a declared core; otherwise tries every split with the most
// non-core variables first (at most 12 variables).
CoreSplit identify_core_variables(const LoopProgram& prog,
                                  const std::optional<std::vector<std::string>>& declared = std::nullopt);

// Invariant conditions with z' = I(a, y) substituted wherever the invariant
// is a hypothesis; initiation keeps z. Every result is affine in a.
std::vector<Implication> substitute_conditions(const LoopProgram& prog, const Template& tpl);

struct MaskSettings {
  int relax_max = 4;
  int decimals = 5;
  double rational_tol = 1e-5;
  double feas_tol = 1e-6;
  bool free_equality_multipliers = false;  // default splits equalities into pairs
  bool feasibility_only = false;           // no slacks, plain feasibility problem
  SolverSettings sdp;
  VerifySettings verify;
};

struct MaskAttempt {
  int order = 0;
  std::string status;
  double slack = 0;       // objective: sum of slacks
  double residual = 0;    // worst certificate defect
  std::vector<double> a;  // raw solver values
  std::vector<Rational> rounded;
  std::optional<VerifyLevel> verified;
  std::string note;
};

struct MaskResult {
  bool found = false;
  CoreSplit split;
  std::vector<Rational> params;
  std::vector<Constraint> invariant;
  Verdict verdict;
  int order = 0;
  std::vector<MaskAttempt> attempts;
  double seconds = 0;
};

// Substituted conditions as one SOS program at the smallest usable order.
// Each conclusion gets a slack s >= 0 and the objective is the slack sum.
SosProgram build_mask_program(const LoopProgram& prog, const Template& tpl, const MaskSettings& s = {});

MaskResult run_mask(const LoopProgram& prog, const Template& tpl, const MaskSettings& s = {});

// Benchmark generator: counters n_1..n_k advance by one per iteration while
// s tracks (n_1 + ... + n_k)^d; the template masks s by a degree-d
// polynomial in the counters.
struct GeneratedProgram {
  std::string text;
  ProgramFile file;
};
GeneratedProgram gen_sum_power(int k, int d);

}  // namespace invsdp
