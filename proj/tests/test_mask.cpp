#include <gtest/gtest.h>

#include <random>

#include "invsdp/mask.hpp"

using namespace invsdp;

namespace {

std::string bench(const std::string& name) { return std::string(INVSDP_BENCH_DIR) + "/" + name; }

bool holds(const Implication& imp, const std::vector<Rational>& pt) {
  for (const auto& h : imp.hyps) {
    auto v = h.poly.eval(pt);
    if (h.sign == Sign::Zero ? !v.is_zero() : v.sign() < 0) return true;
  }
  for (const auto& c : imp.concl) {
    auto v = c.poly.eval(pt);
    if (c.sign == Sign::Zero ? !v.is_zero() : v.sign() < 0) return false;
  }
  return true;
}

std::vector<Constraint> eqs(const ProgramFile& f, const std::vector<std::string>& texts) {
  std::vector<Constraint> out;
  for (const auto& t : texts) out.push_back({parse_polynomial(t, f.program->vars), Rel::Eq});
  return out;
}

}  // namespace

TEST(CoreSplit, Freire1) {
  auto f = load_program(bench("freire1.inv"));
  EXPECT_EQ(check_core_split(*f.program, {"x", "r"}), "");
  EXPECT_NE(check_core_split(*f.program, {"x"}), "");  // x's update reads r
  EXPECT_NE(check_core_split(*f.program, {"r"}), "");  // the guard reads x
  auto s = identify_core_variables(*f.program);
  EXPECT_EQ(s.core, (std::vector<std::string>{"x", "r"}));
  EXPECT_EQ(s.noncore, (std::vector<std::string>{"y"}));
}

TEST(CoreSplit, PreferTheLargestNoncorePart) {
  auto f = load_program(bench("cohencu.inv"));
  // Both {n} and {z} are valid one-variable cores here.
  auto s = identify_core_variables(*f.program);
  EXPECT_EQ(s.core.size(), 1U);
  EXPECT_EQ(s.noncore.size(), 3U);
  EXPECT_EQ(check_core_split(*f.program, s.core), "");
  auto d = identify_core_variables(*f.program, std::vector<std::string>{"n"});
  EXPECT_EQ(d.core, (std::vector<std::string>{"n"}));
}

TEST(CoreSplit, NonlinearNoncoreUpdateIsRejected) {
  auto f = parse_program("vars n, s; pre { n == 0; s == 1; } while (n - 5 <= 0) { n := n + 1; s := s^2; } post { }");
  EXPECT_NE(check_core_split(*f.program, {"n"}), "");
  EXPECT_THROW(identify_core_variables(*f.program, std::vector<std::string>{"n"}), NotMaskable);
}

TEST(CoreSplit, NestedLoopsAreNotMaskable) {
  auto f = load_program(bench("nested.inv"));
  EXPECT_NE(check_core_split(*f.program, {"x"}), "");
}

TEST(Substitution, EveryMaskedConditionIsAffineInTheParameters) {
  for (const char* name : {"freire1.inv", "petter.inv", "cohencu.inv", "sum2power2.inv", "sum3power2.inv"}) {
    auto f = load_program(bench(name));
    std::vector<std::size_t> pidx;
    for (const auto& p : *f.tpl->params) pidx.push_back(*var_index(f.tpl->ring, p));
    for (const auto& imp : substitute_conditions(*f.program, *f.tpl)) {
      for (const auto& h : imp.hyps) EXPECT_EQ(h.poly.degree_in(pidx).value_or(0), 0) << name << " " << imp.id;
      for (const auto& c : imp.concl) EXPECT_LE(c.poly.degree_in(pidx).value_or(0), 1) << name << " " << imp.id;
      for (const auto& z : f.tpl->noncore)
        if (imp.id != "init") EXPECT_EQ(std::count(imp.quantified.begin(), imp.quantified.end(), z), 0);
    }
  }
}

TEST(Substitution, AgreesWithTheOriginalConditions) {
  auto f = load_program(bench("freire1.inv"));
  const auto& t = *f.tpl;
  auto orig = invariant_conditions(*f.program, t);
  auto sub = substitute_conditions(*f.program, t);
  ASSERT_EQ(orig.size(), sub.size());
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<long> num(-20, 20), den(1, 4), pa(-3, 3);
  const VarList& ring = t.ring;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Rational> pt(ring->size());
    for (const auto& p : *t.params) pt[*var_index(ring, p)] = Rational(pa(rng), 2);
    for (const auto& y : t.core) pt[*var_index(ring, y)] = Rational(num(rng), den(rng));
    for (std::size_t r = 0; r < t.noncore.size(); ++r) pt[*var_index(ring, t.noncore[r])] = t.eq_rhs[r].eval(pt);
    for (std::size_t i = 0; i < orig.size(); ++i)
      EXPECT_EQ(holds(orig[i], pt), holds(sub[i], pt)) << orig[i].id;
  }
}

TEST(Mask, Freire1RecoversTheExactInvariant) {
  auto f = load_program(bench("freire1.inv"));
  auto r = run_mask(*f.program, *f.tpl);
  ASSERT_TRUE(r.found);
  EXPECT_EQ(r.order, 2);
  EXPECT_EQ(r.verdict.level, VerifyLevel::ExactPass);
  ASSERT_EQ(r.invariant.size(), 2U);
  EXPECT_EQ(r.invariant[0].rel, Rel::Eq);
  EXPECT_EQ(r.invariant[0].poly, eqs(f, {"y - 2x - r^2 + r"})[0].poly);
}

TEST(Mask, PetterAndCohencu) {
  auto p = load_program(bench("petter.inv"));
  auto rp = run_mask(*p.program, *p.tpl);
  ASSERT_TRUE(rp.found);
  EXPECT_EQ(rp.invariant[0].poly, eqs(p, {"x - y^6/6 + y^5/2 - 5y^4/12 + y^2/12"})[0].poly);
  auto c = load_program(bench("cohencu.inv"));
  auto rc = run_mask(*c.program, *c.tpl);
  ASSERT_TRUE(rc.found);
  auto want = eqs(c, {"x - n^3", "y - 3n^2 - 3n - 1", "z - 6n - 6"});
  ASSERT_EQ(rc.invariant.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(rc.invariant[i].poly, want[i].poly);
}

TEST(Mask, SumOfPowers) {
  for (int k : {2, 3}) {
    auto g = gen_sum_power(k, 2);
    auto r = run_mask(*g.file.program, *g.file.tpl);
    ASSERT_TRUE(r.found) << k;
    const VarList& v = g.file.program->vars;
    QPolynomial sum(v);
    for (int i = 1; i <= k; ++i) sum += QPolynomial::variable(v, "n" + std::to_string(i));
    ASSERT_EQ(r.invariant.size(), 1U);
    EXPECT_EQ(r.invariant[0].poly, QPolynomial::variable(v, "s") - sum.pow(2));
  }
}

TEST(Mask, FoundImpliesCertifiedVerdict) {
  for (const char* name : {"freire1.inv", "petter.inv", "cohencu.inv", "sum2power2.inv", "sum3power2.inv"}) {
    auto f = load_program(bench(name));
    auto r = run_mask(*f.program, *f.tpl);
    if (r.found) EXPECT_TRUE(r.verdict.passed()) << name;
    for (const auto& a : r.attempts) EXPECT_GE(a.order, 1);
  }
}

TEST(Mask, FeasibilityModeAlsoWorks) {
  auto f = load_program(bench("freire1.inv"));
  MaskSettings s;
  s.feasibility_only = true;
  auto r = run_mask(*f.program, *f.tpl, s);
  ASSERT_TRUE(r.found);
  EXPECT_EQ(r.invariant[0].poly, eqs(f, {"y - 2x - r^2 + r"})[0].poly);
}

TEST(Mask, UnreachableRelaxationCapReportsNothing) {
  auto f = load_program(bench("petter.inv"));
  MaskSettings s;
  s.relax_max = 1;  // the degree-6 mask needs order 4
  auto r = run_mask(*f.program, *f.tpl, s);
  if (!r.found) {
    EXPECT_TRUE(r.params.empty());
    EXPECT_FALSE(r.attempts.empty());
  } else {
    EXPECT_TRUE(r.verdict.passed());
  }
}

TEST(GenSumPower, TextParsesBack) {
  auto g = gen_sum_power(3, 3);
  auto again = parse_program(g.text);
  EXPECT_EQ(again.tpl->num_params(), 20U);
  EXPECT_EQ(again.program->vars->size(), 4U);
  EXPECT_THROW(gen_sum_power(0, 2), StructuralError);
}
