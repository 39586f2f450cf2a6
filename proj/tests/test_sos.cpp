#include <gtest/gtest.h>

#include <random>

#include "invsdp/parse.hpp"
#include "invsdp/sos.hpp"

using namespace invsdp;

namespace {

struct Case {
  VarList vars;
  std::vector<std::string> names;
  QPolynomial p;
};

// m_d^T C m_d with C = L L^T + I/10 and small integer L, so p is exact and
// strictly inside the SOS cone.
Case random_sos(std::mt19937_64& rng) {
  static const std::vector<std::pair<int, int>> shapes = {{1, 2}, {1, 4}, {2, 1}, {2, 2}, {3, 1}};
  auto [n, d] = shapes[std::uniform_int_distribution<std::size_t>(0, shapes.size() - 1)(rng)];
  std::vector<std::string> names(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) names[i] = "x" + std::to_string(i + 1);
  VarList v = make_vars(names);
  auto basis = monomial_basis(static_cast<std::size_t>(n), d);
  const std::size_t m = basis.size();
  std::uniform_int_distribution<int> e(-2, 2);
  std::vector<std::vector<Rational>> L(m, std::vector<Rational>(m));
  for (auto& row : L)
    for (auto& c : row) c = Rational(e(rng));
  QPolynomial p(v);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      Rational c = i == j ? Rational(1, 10) : Rational(0);
      for (std::size_t k = 0; k < m; ++k) c += L[i][k] * L[j][k];
      p.add_term(basis[i] * basis[j], c);
    }
  return {v, names, p};
}

SosProgram single(const VarList& v, const std::vector<std::string>& names, const QPolynomial& target) {
  SosProgram sp;
  sp.ring = v;
  SosConstraint c;
  c.id = "c";
  c.target = target;
  c.indeterminates = names;
  sp.constraints.push_back(c);
  sp.order = relaxation_order(sp);
  return sp;
}

}  // namespace

TEST(Sos, RandomGramPolynomialsAreCertified) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = random_sos(rng);
    auto sol = solve_sos(single(c.vars, c.names, c.p));
    EXPECT_EQ(sol.sdp.status, SdpStatus::Optimal) << c.p.to_string();
    EXPECT_LE(sol.max_residual, 1e-6);
    EXPECT_GE(sol.min_eigenvalue, -1e-8);
  }
}

TEST(Sos, CertificateReproducesTarget) {
  auto v = make_vars({"x", "y"});
  auto p = parse_polynomial("x^4 + 2x^2*y^2 + y^4 + 1", v);
  auto sol = solve_sos(single(v, {"x", "y"}, p));
  ASSERT_EQ(sol.certificates.size(), 1U);
  Polynomial defect = sol.certificates[0].sigma0 - to_float(p);
  double worst = 0;
  for (const auto& [m, c] : defect.terms()) worst = std::max(worst, std::fabs(c));
  EXPECT_LE(worst, 1e-6);
}

TEST(Sos, NegativeSomewhereGivesPositiveGamma) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = random_sos(rng);
    std::vector<Rational> pt(c.names.size(), Rational(1, 2));
    // Shift down so that p(1/2, ...) = -1 inside the unit box.
    QPolynomial q = c.p - QPolynomial::constant(c.vars, c.p.eval(pt) + Rational(1));
    auto names = c.names;
    names.push_back("g");
    VarList ring = union_vars(c.vars, make_vars({"g"}));
    SosProgram sp;
    sp.ring = ring;
    sp.decisions = {"g"};
    sp.objective["g"] = 1.0;
    SosConstraint k;
    k.id = "shifted";
    k.target = q.embed(ring) + QPolynomial::variable(ring, "g");
    k.indeterminates = c.names;
    for (const auto& x : c.names)
      k.nonneg.push_back(QPolynomial::constant(ring, Rational(1)) - QPolynomial::variable(ring, x).pow(2));
    sp.constraints.push_back(k);
    sp.order = relaxation_order(sp);
    auto sol = solve_sos(sp);
    bool infeasible = sol.sdp.status == SdpStatus::PrimalInfeasible || sol.sdp.status == SdpStatus::DualInfeasible;
    EXPECT_TRUE(infeasible || sol.decisions.at("g") > 0) << q.to_string();
    if (!infeasible) EXPECT_GE(sol.decisions.at("g"), 1 - 1e-6);
  }
}

TEST(Sos, PutinarMultiplierOnTheDomain) {
  // x >= 0 on {x >= 0}: not SOS globally, certified with sigma_1 = 1.
  auto v = make_vars({"x"});
  auto sp = single(v, {"x"}, QPolynomial::variable(v, "x"));
  sp.constraints[0].nonneg = {QPolynomial::variable(v, "x")};
  sp.order = relaxation_order(sp);
  auto sol = solve_sos(sp);
  EXPECT_EQ(sol.sdp.status, SdpStatus::Optimal);
  EXPECT_LE(sol.max_residual, 1e-6);
  ASSERT_EQ(sol.certificates[0].sigmas.size(), 1U);
}

TEST(Sos, FreeMultiplierForEqualities) {
  // x*y - x*y^2 vanishes on x = 0 and needs lambda = y - y^2.
  auto v = make_vars({"x", "y"});
  auto sp = single(v, {"x", "y"}, parse_polynomial("x*y - x*y^2", v));
  sp.constraints[0].zero = {QPolynomial::variable(v, "x")};
  sp.order = 2;
  auto sol = solve_sos(sp);
  EXPECT_EQ(sol.sdp.status, SdpStatus::Optimal);
  EXPECT_LE(sol.max_residual, 1e-6);
}

TEST(Sos, OptimisesADecision) {
  // min t s.t. t - x^2 >= 0 on [-1, 1]: t = 1.
  auto v = make_vars({"t", "x"});
  SosProgram sp;
  sp.ring = v;
  sp.decisions = {"t"};
  sp.objective["t"] = 1.0;
  SosConstraint c;
  c.id = "c";
  c.target = parse_polynomial("t - x^2", v);
  c.nonneg = {parse_polynomial("1 - x^2", v)};
  c.indeterminates = {"x"};
  sp.constraints.push_back(c);
  sp.order = 1;
  auto sol = solve_sos(sp);
  EXPECT_EQ(sol.sdp.status, SdpStatus::Optimal);
  EXPECT_NEAR(sol.decisions.at("t"), 1.0, 1e-6);
  EXPECT_NEAR(sol.objective, 1.0, 1e-6);
}

TEST(Sos, RelaxationOrderCoversEveryPolynomial) {
  auto v = make_vars({"x", "y"});
  SosConstraint c;
  c.target = parse_polynomial("x^3 + y", v);
  c.indeterminates = {"x", "y"};
  EXPECT_EQ(relaxation_order(c, v), 2);
  c.nonneg = {parse_polynomial("1 - x^6", v)};
  EXPECT_EQ(relaxation_order(c, v), 3);
}

TEST(Sos, LayoutHasOneGramPerMultiplier) {
  auto v = make_vars({"x", "y"});
  auto sp = single(v, {"x", "y"}, parse_polynomial("x^2 + y^2", v));
  sp.constraints[0].nonneg = {parse_polynomial("1 - x^2", v), parse_polynomial("1 - y^2", v)};
  sp.constraints[0].zero = {parse_polynomial("x - y", v)};
  sp.order = 1;
  auto a = assemble_sdp(sp);
  ASSERT_EQ(a.layout.constraints.size(), 1U);
  EXPECT_EQ(a.layout.constraints[0].grams.size(), 3U);
  EXPECT_EQ(a.layout.constraints[0].frees.size(), 1U);
  EXPECT_EQ(a.layout.free_block, static_cast<int>(a.sdp.blocks.size()) - 1);
  // sigma_0 has basis {1, x, y}; the others are constants at order 1.
  EXPECT_EQ(a.layout.constraints[0].grams[0].basis.size(), 3U);
  EXPECT_EQ(a.layout.constraints[0].grams[1].basis.size(), 1U);
}

TEST(Sos, RejectsBilinearDecisions) {
  auto v = make_vars({"a", "b", "x"});
  SosProgram sp;
  sp.ring = v;
  sp.decisions = {"a", "b"};
  SosConstraint c;
  c.id = "c";
  c.target = parse_polynomial("a*b + x^2", v);
  c.indeterminates = {"x"};
  sp.constraints.push_back(c);
  EXPECT_THROW(assemble_sdp(sp), BilinearityError);
  sp.constraints[0].target = parse_polynomial("a + x^2", v);
  sp.constraints[0].nonneg = {parse_polynomial("b - x", v)};
  EXPECT_THROW(assemble_sdp(sp), BilinearityError);
}

TEST(Sos, RejectsOversizedBlocks) {
  auto v = make_vars({"x", "y", "z"});
  auto sp = single(v, {"x", "y", "z"}, parse_polynomial("x^8 + y^8 + z^8", v));
  sp.max_block = 10;
  EXPECT_THROW(assemble_sdp(sp), SizeError);
}
