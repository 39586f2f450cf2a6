#include <cmath>
#include <limits>

#include "invsdp/cluster.hpp"

namespace invsdp {

namespace {

double value_of(const UnderApprox& u) {
  return u.solved ? u.objective : std::numeric_limits<double>::infinity();
}

void refine(const LoopProgram& prog, const ClusterTemplates& t, int d, UnderApprox node, int left, double eps_d,
            double eps_v, const ClusterSettings& s, PartitionResult& out) {
  if (left <= 0 || node.box.diameter() <= eps_d) {
    out.leaves.push_back(std::move(node));
    return;
  }
  auto [lo, hi] = node.box.bisect();
  UnderApprox a = solve_cluster(prog, t, d, lo, s), b = solve_cluster(prog, t, d, hi, s);
  Split sp;
  sp.box = node.box;
  sp.v = value_of(node);
  sp.v_lo = value_of(a);
  sp.v_hi = value_of(b);
  // An unsolved parent carries no bound, so the split always pays off.
  sp.dv = std::isinf(sp.v) ? std::numeric_limits<double>::infinity() : sp.v - 0.5 * (sp.v_lo + sp.v_hi);
  out.splits.push_back(sp);
  if (sp.dv < eps_v) {
    out.leaves.push_back(std::move(node));
    return;
  }
  refine(prog, t, d, std::move(a), left - 1, eps_d, eps_v, s, out);
  refine(prog, t, d, std::move(b), left - 1, eps_d, eps_v, s, out);
}

}  // namespace

PartitionResult partition_refine(const LoopProgram& prog, const ClusterTemplates& t, int d, const Box& box,
                                 int depth, double eps_d, double eps_v, const ClusterSettings& s) {
  PartitionResult out;
  refine(prog, t, d, solve_cluster(prog, t, d, box, s), depth, eps_d, eps_v, s, out);
  return out;
}

}  // namespace invsdp
