#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace invsdp {

enum class BlockKind { Psd, Free };

struct BlockSpec {
  int size = 0;
  BlockKind kind = BlockKind::Psd;
};

// Entry of a symmetric matrix inside one block; row <= col, the mirrored
// entry is implied. Free blocks only carry diagonal entries.
struct SymEntry {
  int block;
  int row;
  int col;
  double value;
};

struct BlockSparse {
  std::vector<SymEntry> entries;
  void add(int block, int row, int col, double value);
};

// min <C,X> s.t. <A_i,X> = b_i, PSD blocks of X positive semidefinite and
// free blocks unconstrained (diagonal only).
struct SdpProblem {
  std::vector<BlockSpec> blocks;
  BlockSparse C;
  std::vector<BlockSparse> A;
  std::vector<double> b;

  std::size_t num_constraints() const { return A.size(); }
  void validate() const;
};

enum class SdpStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations, NumericalFailure };
const char* status_name(SdpStatus s);

struct SolverSettings {
  int max_iterations = 200;
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  double step_fraction = 0.98;
  void validate() const;
};

struct Residuals {
  double primal = 0;
  double dual = 0;
  double gap = 0;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  // One matrix per block; free blocks hold their values on the diagonal.
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::MatrixXd> S;
  Eigen::VectorXd y;
  double objective = 0;
  double dual_objective = 0;
  int iterations = 0;
  Residuals residuals;
  std::string message;

  // Value of free scalar `k` of free block `block`.
  double free_value(int block, int k) const { return X[block](k, k); }
};

// primal = max_i |<A_i,X> - b_i| / (1 + |b_i|); dual = max-abs entry of
// C - sum y_i A_i - S; gap = |<C,X> - b'y| / (1 + |<C,X>|).
Residuals residuals(const SdpProblem& p, const SdpSolution& sol);

// Homogeneous self-dual interior point method.
SdpSolution solve_sdp(const SdpProblem& p, const SolverSettings& s = {});

// Uses INVSDP_SOLVER (embedded | external:<cmd>) to pick a backend.
SdpSolution solve_with_backend(const SdpProblem& p, const SolverSettings& s = {});

// Sparse text format, see README.
void write_sdp(std::ostream& os, const SdpProblem& p);
SdpProblem read_sdp(std::istream& is);
void write_solution(std::ostream& os, const SdpSolution& sol);
SdpSolution read_solution(std::istream& is, const SdpProblem& p);

}  // namespace invsdp
