#pragma once

#include <map>
#include <string>
#include <vector>

#include "invsdp/polynomial.hpp"
#include "invsdp/sdp.hpp"

namespace invsdp {

struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A decision multiplies a decision or appears in a domain polynomial.
struct BilinearityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// target = sigma_0 + sum_i sigma_i * nonneg_i + sum_j lambda_j * zero_j with
// sigma SOS and lambda free, all in the listed indeterminates. The target is
// affine in the program decisions; domain polynomials must not mention them.
struct SosConstraint {
  std::string id;
  QPolynomial target;
  std::vector<QPolynomial> nonneg;
  std::vector<QPolynomial> zero;
  std::vector<std::string> indeterminates;
  int order = -1;  // relaxation order; -1 takes SosProgram::order
};

struct SosProgram {
  VarList ring;
  std::vector<std::string> decisions;
  std::map<std::string, double> objective;  // minimized, decisions only
  std::vector<SosConstraint> constraints;
  int order = 1;
  std::size_t max_block = 2000;
};

// Smallest d_r with 2 d_r covering the target and every domain polynomial
// in the indeterminates.
int relaxation_order(const SosConstraint& c, const VarList& ring);
int relaxation_order(const SosProgram& p);

struct GramSlot {
  int block = -1;
  std::vector<Monomial> basis;
  int domain = -1;  // -1 for sigma_0, else index into nonneg
};

struct FreeSlot {
  int offset = 0;  // first scalar in the free block
  std::vector<Monomial> basis;
  int domain = 0;  // index into zero
};

struct ConstraintLayout {
  std::vector<GramSlot> grams;
  std::vector<FreeSlot> frees;
  int order = 0;
};

struct SosLayout {
  int free_block = -1;
  std::vector<ConstraintLayout> constraints;
};

struct AssembledSdp {
  SdpProblem sdp;
  SosLayout layout;
};

// One free diagonal block carries the decisions followed by equality
// multipliers; each SOS multiplier gets a PSD Gram block. Throws SizeError
// past max_block and BilinearityError on non-affine decisions.
AssembledSdp assemble_sdp(const SosProgram& p);

struct ConstraintCertificate {
  std::string id;
  Polynomial sigma0;
  std::vector<Polynomial> sigmas;    // aligned with nonneg
  std::vector<Polynomial> lambdas;   // aligned with zero
  double residual = 0;               // max-abs coefficient of the identity defect
  double min_eigenvalue = 0;         // over every Gram block of this constraint
};

struct SosSolution {
  SdpSolution sdp;
  std::map<std::string, double> decisions;
  std::vector<ConstraintCertificate> certificates;
  double objective = 0;
  double max_residual = 0;
  double min_eigenvalue = 0;
};

SosSolution reconstruct(const SosProgram& p, const AssembledSdp& a, const SdpSolution& sol);

// assemble, solve through the configured backend, reconstruct.
SosSolution solve_sos(const SosProgram& p, const SolverSettings& s = {});

}  // namespace invsdp
