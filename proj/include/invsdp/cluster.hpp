#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "invsdp/program.hpp"
#include "invsdp/sos.hpp"
#include "invsdp/verify.hpp"

namespace invsdp {

// Axis-aligned box in template parameter coordinates.
struct Box {
  std::vector<double> lo, hi;
  static Box unit(std::size_t n);
  std::size_t dim() const { return lo.size(); }
  double diameter() const;  // longest side
  std::pair<Box, Box> bisect() const;  // along the longest side, lower half first
};

// Mean of a^beta over the box for every beta in monomial_basis(n, d) order:
// prod_j (u^{k+1} - l^{k+1}) / ((k+1)(u - l)).
std::vector<Rational> moment_vector(const std::vector<std::pair<Rational, Rational>>& box, int d);

struct ClusterSettings {
  int degree_max = 3;
  int relax_order = -1;        // -1: smallest order covering every constraint
  int jobs = 1;
  double feas_tol = 1e-6;      // accepted residual for a non-optimal final iterate
  int decimals = 5;
  bool verify_witness = true;
  SolverSettings sdp;
  VerifySettings verify;
};

// Both templates' parameters; the inner one is null for flat loops.
struct ClusterTemplates {
  const Template* outer = nullptr;
  const Template* inner = nullptr;
  std::vector<std::string> params() const;
};

struct Witness {
  std::vector<double> a;
  std::vector<Rational> exact;       // 5-decimal value actually instantiated
  double h_value = 0;
  std::vector<Constraint> invariant;
  std::vector<Constraint> inner_invariant;
  std::optional<VerifyLevel> verified;
};

struct UnderApprox {
  int degree = 0;
  int order = 0;
  bool solved = false;    // the SDP returned a usable point
  bool feasible = false;  // solved and the sublevel set {h <= 0} is nonempty
  Box box;
  Polynomial h;           // in parameter coordinates; 1 when infeasible
  Polynomial h_rounded;
  Polynomial h_solver;    // as returned by the solver even when discarded
  double objective = 0;   // mean of h over the box (local coordinates)
  std::optional<Witness> witness;
  std::string status;
  std::string message;
  double residual = 0;
  std::size_t sdp_rows = 0;
  double seconds = 0;
};

// SOS program for one degree: pre-condition, consecution and saturation with the
// h-shifted conclusions, h + 1 >= 0, and the box polynomials on every domain.
SosProgram build_cluster_program(const LoopProgram& prog, const ClusterTemplates& t, int d, const Box& box,
                                 int order = -1);

UnderApprox solve_cluster(const LoopProgram& prog, const ClusterTemplates& t, int d, const Box& box,
                          const ClusterSettings& s);

// Degrees 1..degree_max, optionally in parallel; ordered by degree.
std::vector<UnderApprox> run_cluster(const LoopProgram& prog, const ClusterTemplates& t, const ClusterSettings& s,
                                     const std::optional<Box>& box = std::nullopt);

// Grid scan (21 points per axis up to 3 parameters, 7 up to 6, else 3)
// followed by coordinate descent from the 5 best points; returns the
// minimiser when h <= -1e-9 there.
std::optional<std::vector<double>> find_witness(const Polynomial& h, const std::vector<std::string>& params,
                                                const Box& box);

struct Split {
  Box box;
  double v = 0, v_lo = 0, v_hi = 0, dv = 0;
};

struct PartitionResult {
  std::vector<UnderApprox> leaves;
  std::vector<Split> splits;
};

// Bisect along the longest side; a path stops at `depth` bisections, when
// the diameter drops to eps_d, or when dv = v - (v' + v'')/2 < eps_v (the
// parent is then kept).
PartitionResult partition_refine(const LoopProgram& prog, const ClusterTemplates& t, int d, const Box& box,
                                 int depth, double eps_d, double eps_v, const ClusterSettings& s);

}  // namespace invsdp
