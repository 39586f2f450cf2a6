#include "invsdp/sos.hpp"

#include <Eigen/Eigenvalues>

#include <unordered_map>

namespace invsdp {

namespace {

std::vector<std::size_t> index_list(const VarList& ring, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    auto i = var_index(ring, n);
    if (!i) throw StructuralError("unknown variable '" + n + "'");
    out.push_back(*i);
  }
  return out;
}

int half_up(int d) { return d <= 0 ? 0 : (d + 1) / 2; }

struct MonoHash {
  std::size_t operator()(const Monomial& m) const {
    std::size_t h = 1469598103934665603ULL;
    for (int e : m.exponents()) h = (h ^ static_cast<std::size_t>(e)) * 1099511628211ULL;
    return h;
  }
};

// Rows of the coefficient-matching system, one per monomial.
class Rows {
 public:
  int row(const Monomial& m) {
    auto [it, inserted] = index_.try_emplace(m, static_cast<int>(A.size()));
    if (inserted) {
      A.emplace_back();
      b.push_back(0.0);
    }
    return it->second;
  }
  // Each constraint matches its own coefficients.
  void next_constraint() { index_.clear(); }
  std::vector<BlockSparse> A;
  std::vector<double> b;

 private:
  std::unordered_map<Monomial, int, MonoHash> index_;
};

void check_domain(const QPolynomial& g, const std::vector<std::size_t>& dec, const std::vector<std::size_t>& ind,
                  const std::string& id) {
  for (auto k : dec)
    if (g.depends_on(k)) throw BilinearityError("constraint '" + id + "': decision in a domain polynomial");
  for (std::size_t i = 0; i < g.nvars(); ++i)
    if (g.depends_on(i) && std::find(ind.begin(), ind.end(), i) == ind.end())
      throw StructuralError("constraint '" + id + "': domain mentions '" + (*g.vars())[i] +
                            "' which is not an indeterminate");
}

}  // namespace

int relaxation_order(const SosConstraint& c, const VarList& ring) {
  auto ind = index_list(ring, c.indeterminates);
  int d = c.target.degree_in(ind).value_or(0);
  for (const auto& g : c.nonneg) d = std::max(d, g.degree_in(ind).value_or(0));
  for (const auto& e : c.zero) d = std::max(d, e.degree_in(ind).value_or(0));
  return half_up(d);
}

int relaxation_order(const SosProgram& p) {
  int d = 0;
  for (const auto& c : p.constraints) d = std::max(d, relaxation_order(c, p.ring));
  return d;
}

AssembledSdp assemble_sdp(const SosProgram& p) {
  auto dec = index_list(p.ring, p.decisions);
  AssembledSdp out;
  Rows rows;
  std::vector<BlockSpec> blocks;
  int nfree = static_cast<int>(dec.size());
  // The free block is placed last once its size is known.
  struct PendingFree {
    int row;
    int scalar;
    double value;
  };
  std::vector<PendingFree> free_entries;
  std::vector<std::pair<int, double>> objective;
  for (std::size_t k = 0; k < dec.size(); ++k) {
    auto it = p.objective.find(p.decisions[k]);
    if (it != p.objective.end() && it->second != 0.0) objective.emplace_back(static_cast<int>(k), it->second);
  }
  for (const auto& [name, w] : p.objective)
    if (std::find(p.decisions.begin(), p.decisions.end(), name) == p.decisions.end())
      throw StructuralError("objective mentions '" + name + "' which is not a decision");

  for (const auto& c : p.constraints) {
    if (!same_vars(c.target.vars(), p.ring)) throw StructuralError("constraint '" + c.id + "' is over another ring");
    auto ind = index_list(p.ring, c.indeterminates);
    for (auto i : ind)
      if (std::find(dec.begin(), dec.end(), i) != dec.end())
        throw StructuralError("constraint '" + c.id + "': a decision cannot be an indeterminate");
    rows.next_constraint();
    ConstraintLayout cl;
    cl.order = c.order >= 0 ? c.order : p.order;
    const int two_d = 2 * cl.order;

    // Target split into t0 + sum_k lambda_k t_k.
    for (const auto& [m, coef] : c.target.terms()) {
      int ddeg = 0, which = -1;
      for (std::size_t k = 0; k < dec.size(); ++k)
        if (m[dec[k]]) {
          ddeg += m[dec[k]];
          which = static_cast<int>(k);
        }
      if (ddeg > 1) throw BilinearityError("constraint '" + c.id + "': target is not affine in the decisions");
      Monomial rest = m;
      if (which >= 0) rest[dec[which]] = 0;
      for (std::size_t i = 0; i < rest.size(); ++i)
        if (rest[i] && std::find(ind.begin(), ind.end(), i) == ind.end())
          throw StructuralError("constraint '" + c.id + "': target mentions '" + (*p.ring)[i] +
                                "' which is neither decision nor indeterminate");
      int r = rows.row(rest);
      if (which < 0)
        rows.b[r] += coef.to_double();
      else
        free_entries.push_back({r, which, -coef.to_double()});
    }

    auto add_gram = [&](const QPolynomial* g, int domain) {
      int gdeg = g ? g->degree_in(ind).value_or(0) : 0;
      if (g && g->is_zero()) return;
      int half = (two_d - gdeg) / 2;
      if (two_d - gdeg < 0) return;
      GramSlot slot;
      slot.domain = domain;
      slot.basis = monomial_basis(p.ring->size(), ind, half);
      if (slot.basis.size() > p.max_block)
        throw SizeError("constraint '" + c.id + "': Gram block of size " + std::to_string(slot.basis.size()) +
                        " exceeds the cap of " + std::to_string(p.max_block));
      slot.block = static_cast<int>(blocks.size());
      blocks.push_back({static_cast<int>(slot.basis.size()), BlockKind::Psd});
      const auto& B = slot.basis;
      for (std::size_t a = 0; a < B.size(); ++a)
        for (std::size_t bb = a; bb < B.size(); ++bb) {
          Monomial ab = B[a] * B[bb];
          if (!g) {
            rows.A[rows.row(ab)].add(slot.block, static_cast<int>(a), static_cast<int>(bb), 1.0);
            continue;
          }
          for (const auto& [gm, gc] : g->terms()) {
            int r = rows.row(ab * gm);
            rows.A[r].add(slot.block, static_cast<int>(a), static_cast<int>(bb), gc.to_double());
          }
        }
      cl.grams.push_back(std::move(slot));
    };

    add_gram(nullptr, -1);
    for (std::size_t i = 0; i < c.nonneg.size(); ++i) {
      check_domain(c.nonneg[i], dec, ind, c.id);
      add_gram(&c.nonneg[i], static_cast<int>(i));
    }
    for (std::size_t j = 0; j < c.zero.size(); ++j) {
      check_domain(c.zero[j], dec, ind, c.id);
      if (c.zero[j].is_zero()) continue;
      int mdeg = two_d - c.zero[j].degree_in(ind).value_or(0);
      if (mdeg < 0) continue;
      FreeSlot fs;
      fs.domain = static_cast<int>(j);
      fs.offset = nfree;
      fs.basis = monomial_basis(p.ring->size(), ind, mdeg);
      for (std::size_t k = 0; k < fs.basis.size(); ++k)
        for (const auto& [em, ec] : c.zero[j].terms())
          free_entries.push_back({rows.row(fs.basis[k] * em), nfree + static_cast<int>(k), ec.to_double()});
      nfree += static_cast<int>(fs.basis.size());
      cl.frees.push_back(std::move(fs));
    }
    out.layout.constraints.push_back(std::move(cl));
  }

  if (nfree > 0) {
    out.layout.free_block = static_cast<int>(blocks.size());
    blocks.push_back({nfree, BlockKind::Free});
    for (const auto& e : free_entries) rows.A[e.row].add(out.layout.free_block, e.scalar, e.scalar, e.value);
    for (const auto& [k, w] : objective) out.sdp.C.add(out.layout.free_block, k, k, w);
  }
  out.sdp.blocks = std::move(blocks);
  out.sdp.A = std::move(rows.A);
  out.sdp.b = std::move(rows.b);
  return out;
}

SosSolution reconstruct(const SosProgram& p, const AssembledSdp& a, const SdpSolution& sol) {
  SosSolution out;
  out.sdp = sol;
  auto dec = index_list(p.ring, p.decisions);
  std::map<std::string, Polynomial> subst;
  for (std::size_t k = 0; k < dec.size(); ++k) {
    double v = sol.free_value(a.layout.free_block, static_cast<int>(k));
    out.decisions[p.decisions[k]] = v;
    subst.emplace(p.decisions[k], Polynomial::constant(p.ring, v));
  }
  for (const auto& [name, w] : p.objective) out.objective += w * out.decisions[name];
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < p.constraints.size(); ++ci) {
    const auto& c = p.constraints[ci];
    const auto& cl = a.layout.constraints[ci];
    ConstraintCertificate cert;
    cert.id = c.id;
    cert.sigma0 = Polynomial(p.ring);
    cert.sigmas.assign(c.nonneg.size(), Polynomial(p.ring));
    cert.lambdas.assign(c.zero.size(), Polynomial(p.ring));
    cert.min_eigenvalue = std::numeric_limits<double>::infinity();
    Polynomial defect = to_float(c.target).compose(subst, p.ring);
    for (const auto& g : cl.grams) {
      const Eigen::MatrixXd& G = sol.X[g.block];
      Polynomial s(p.ring);
      for (std::size_t i = 0; i < g.basis.size(); ++i)
        for (std::size_t j = 0; j < g.basis.size(); ++j) s.add_term(g.basis[i] * g.basis[j], G(i, j));
      if (G.rows() > 0) {
        double ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G, Eigen::EigenvaluesOnly).eigenvalues()(0);
        cert.min_eigenvalue = std::min(cert.min_eigenvalue, ev);
      }
      if (g.domain < 0) {
        cert.sigma0 = s;
        defect -= s;
      } else {
        cert.sigmas[g.domain] = s;
        defect -= s * to_float(c.nonneg[g.domain]);
      }
    }
    for (const auto& f : cl.frees) {
      Polynomial l(p.ring);
      for (std::size_t k = 0; k < f.basis.size(); ++k)
        l.add_term(f.basis[k], sol.free_value(a.layout.free_block, f.offset + static_cast<int>(k)));
      cert.lambdas[f.domain] = l;
      defect -= l * to_float(c.zero[f.domain]);
    }
    for (const auto& [m, v] : defect.terms()) cert.residual = std::max(cert.residual, std::fabs(v));
    out.max_residual = std::max(out.max_residual, cert.residual);
    out.min_eigenvalue = std::min(out.min_eigenvalue, cert.min_eigenvalue);
    out.certificates.push_back(std::move(cert));
  }
  if (out.certificates.empty()) out.min_eigenvalue = 0;
  return out;
}

SosSolution solve_sos(const SosProgram& p, const SolverSettings& s) {
  AssembledSdp a = assemble_sdp(p);
  SdpSolution sol = solve_with_backend(a.sdp, s);
  return reconstruct(p, a, sol);
}

}  // namespace invsdp
