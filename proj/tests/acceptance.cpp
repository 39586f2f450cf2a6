// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "invsdp/cluster.hpp"
#include "invsdp/mask.hpp"
#include "invsdp/sos.hpp"
#include "invsdp/verify.hpp"

using namespace invsdp;

namespace {

std::string bench(const std::string& name) { return std::string(INVSDP_BENCH_DIR) + "/" + name; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

long binom(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Every conclusion of every condition certified by verify_sos (vacuous or
// exactly reduced conditions need no certificate).
bool passes_verify_sos(const LoopProgram& prog, const std::vector<Constraint>& inv,
                       const std::vector<Constraint>* inner = nullptr) {
  VerifySettings vs;
  for (const auto& imp : invariant_conditions(prog, inv, inner)) {
    Reduced r = reduce(imp);
    if (r.vacuous) continue;
    auto ex = verify_exact(r);
    for (std::size_t c = 0; c < r.imp.concl.size(); ++c) {
      if (ex[c].result == ExactResult::Pass) continue;
      if (!verify_sos(r, r.imp.concl[c], vs).pass) return false;
    }
  }
  return true;
}

Outcome mask_freire1() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  auto f = load_program(bench("freire1.inv"));
  auto r = run_mask(*f.program, *f.tpl);
  double t = seconds_since(t0);
  o.require(r.found, "found");
  if (!r.found) return o;
  auto want = parse_polynomial("y - 2x - r^2 + r", f.program->vars);
  o.require(r.order == 2, "relaxation order 2");
  o.require(!r.invariant.empty() && r.invariant[0].rel == Rel::Eq && r.invariant[0].poly == want,
            "exact y = 2x + r^2 - r");
  o.require(r.verdict.level == VerifyLevel::ExactPass, "verify_exact");
  o.require(t <= 60, "60 s budget");
  o.detail << "order " << r.order << ", invariant " << r.invariant[0].poly.to_string() << " == 0, "
           << level_name(r.verdict.level) << ", " << t << " s";
  return o;
}

Outcome cluster_contract_profile() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  auto f = load_program(bench("contract.inv"));
  ClusterSettings s;
  s.degree_max = 3;
  auto res = run_cluster(*f.program, {f.tpl.get(), nullptr}, s);
  double t = seconds_since(t0);
  for (const auto& u : res) o.detail << "d=" << u.degree << (u.feasible ? " feasible" : " infeasible") << "; ";
  o.require(res.size() == 3, "three degrees");
  if (res.size() != 3) return o;
  o.require(!res[0].feasible, "d=1 infeasible");
  o.require(!res[1].feasible, "d=2 infeasible");
  o.require(res[2].feasible, "d=3 feasible");
  const auto& w = res[2].witness;
  o.require(w && passes_verify_sos(*f.program, w->invariant), "d=3 witness passes verify_sos");
  if (w) o.detail << "witness a=(" << w->a[0] << ", " << w->a[1] << "); ";
  auto known = std::vector<Constraint>{{parse_polynomial("x^2 - 10y^2 - 7.9971", f.program->vars), Rel::Le}};
  bool pw = passes_verify_sos(*f.program, known);
  o.require(pw, "x^2 - 10y^2 - 7.9971 <= 0 passes verify_sos");
  o.detail << "x^2-10y^2-7.9971 " << (pw ? "certified" : "not certified") << "; " << t << " s";
  o.require(t <= 300, "300 s budget");
  return o;
}

Outcome cluster_monotonicity() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  auto f = load_program(bench("contract.inv"));
  ClusterSettings s;
  s.degree_max = 6;
  auto res = run_cluster(*f.program, {f.tpl.get(), nullptr}, s);
  double t = seconds_since(t0);
  o.require(res.size() == 6, "six degrees");
  for (std::size_t i = 2; i < res.size(); ++i) {
    o.require(res[i].solved, "d=" + std::to_string(i + 1) + " solved");
    o.detail << "v" << i + 1 << "=" << res[i].objective << " ";
    if (i > 2) o.require(res[i].objective <= res[i - 1].objective + 1e-6, "v" + std::to_string(i + 1) + " <= v" + std::to_string(i));
  }
  o.detail << "; " << t << " s";
  o.require(t <= 900, "900 s budget");
  return o;
}

Outcome partition_coverage() {
  Outcome o;
  auto f = load_program(bench("contract.inv"));
  ClusterTemplates t{f.tpl.get(), nullptr};
  ClusterSettings s;
  Box quarter{{-1, -1}, {0, 0}};
  // One level of four boxes is two bisections; splitting is forced.
  auto pr = partition_refine(*f.program, t, 3, quarter, 2, 1e-3, -1e9, s);
  o.require(pr.splits.size() == 3 && pr.leaves.size() == 4, "four leaf boxes");
  for (const auto& sp : pr.splits) {
    o.require(sp.dv >= -1e-6, "dv >= -1e-6");
    o.detail << "dv=" << sp.dv << "; ";
  }
  // The same degree solved without splitting, both over the quarter and
  // over the full parameter box.
  std::vector<UnderApprox> refs = {solve_cluster(*f.program, t, 3, quarter, s),
                                   solve_cluster(*f.program, t, 3, Box::unit(2), s)};
  const char* names[2] = {"quarter", "full box"};
  for (int k = 0; k < 2; ++k) {
    int inside = 0, missed = 0;
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j) {
        std::vector<double> a = {-1 + i / 99.0, -1 + j / 99.0};
        if (!refs[k].feasible || refs[k].h.eval(a) > 0) continue;
        ++inside;
        bool covered = false;
        for (const auto& leaf : pr.leaves) {
          const Box& b = leaf.box;
          bool in = a[0] >= b.lo[0] && a[0] <= b.hi[0] && a[1] >= b.lo[1] && a[1] <= b.hi[1];
          covered = covered || (in && leaf.feasible && leaf.h.eval(a) <= 0);
        }
        missed += !covered;
      }
    o.detail << names[k] << ": " << inside << " grid points, " << missed << " uncovered; ";
    o.require(missed == 0, std::string("coverage of the ") + names[k] + " sublevel set");
  }
  return o;
}

Outcome sum_power_recovery() {
  Outcome o;
  for (int k : {2, 3}) {
    auto g = gen_sum_power(k, 2);
    auto r = run_mask(*g.file.program, *g.file.tpl);
    const VarList& v = g.file.program->vars;
    QPolynomial sum(v);
    for (int i = 1; i <= k; ++i) sum += QPolynomial::variable(v, "n" + std::to_string(i));
    bool exact = r.found && r.invariant.size() == 1 && r.invariant[0].poly == QPolynomial::variable(v, "s") - sum.pow(2);
    o.require(exact, "k=" + std::to_string(k) + " exact recovery");
    o.detail << "k=" << k << ": " << (r.found ? r.invariant[0].poly.to_string() + " == 0" : "not found") << "; ";
  }
  bool counts = true;
  for (int k = 1; k <= 4; ++k)
    for (int d = 1; d <= 6; ++d)
      counts = counts && static_cast<long>(gen_sum_power(k, d).file.tpl->num_params()) == binom(k + d, d);
  o.require(counts, "C(k+d,d) parameter counts");
  auto n66 = gen_sum_power(2, 10).file.tpl->num_params();
  o.require(n66 == 66, "66 parameters at k=2, d=10");
  o.detail << "k=2,d=10: " << n66 << " parameters";
  return o;
}

Outcome moment_oracle() {
  Outcome o;
  struct Case {
    std::vector<std::pair<double, double>> box;
  };
  std::vector<Case> cases = {{{{-1, 1}, {-1, 1}, {-1, 1}}}, {{{0, 2}, {-1, 3}}}};
  std::mt19937_64 rng(20240611);
  const int N = 1000000;
  for (const auto& c : cases) {
    const std::size_t n = c.box.size();
    std::vector<std::pair<Rational, Rational>> qbox;
    for (auto [l, u] : c.box) qbox.push_back({Rational::from_double(l), Rational::from_double(u)});
    auto mv = moment_vector(qbox, 8);
    auto basis = monomial_basis(n, 8);
    std::vector<double> sum(basis.size(), 0), sq(basis.size(), 0);
    std::vector<std::uniform_real_distribution<double>> U;
    for (auto [l, u] : c.box) U.emplace_back(l, u);
    std::vector<double> x(n);
    for (int s = 0; s < N; ++s) {
      for (std::size_t j = 0; j < n; ++j) x[j] = U[j](rng);
      for (std::size_t k = 0; k < basis.size(); ++k) {
        double v = 1;
        for (std::size_t j = 0; j < n; ++j) v *= std::pow(x[j], basis[k][j]);
        sum[k] += v;
        sq[k] += v * v;
      }
    }
    int bad = 0;
    double worst = 0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      double mean = sum[k] / N;
      double se = std::sqrt(std::max(0.0, sq[k] / N - mean * mean) / N);
      double z = se > 0 ? std::fabs(mv[k].to_double() - mean) / se : 0;
      worst = std::max(worst, z);
      bad += z > 3;
    }
    o.require(bad == 0, std::to_string(n) + "-dim box within 3 SE");
    o.detail << n << "-dim: " << basis.size() << " moments, worst " << worst << " SE; ";
  }
  std::vector<std::pair<Rational, Rational>> sym(3, {Rational(-1), Rational(1)});
  auto mv = moment_vector(sym, 8);
  auto basis = monomial_basis(3, 8);
  int mismatches = 0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    Rational expect(1);
    for (std::size_t j = 0; j < 3; ++j) expect = basis[k][j] % 2 ? Rational(0) : expect * Rational(1, basis[k][j] + 1);
    mismatches += mv[k] != expect;
  }
  o.require(mismatches == 0, "closed form on [-1,1]^3");
  o.detail << "closed form mismatches " << mismatches;
  return o;
}

struct RandomSos {
  VarList vars;
  std::vector<std::string> names;
  QPolynomial p;
};

RandomSos random_sos(std::mt19937_64& rng) {
  // (variables, half degree); Gram sizes 3, 5, 3, 6, 4, 10.
  static const std::vector<std::pair<int, int>> shapes = {{1, 2}, {1, 4}, {2, 1}, {2, 2}, {3, 1}, {3, 2}};
  auto [n, d] = shapes[std::uniform_int_distribution<std::size_t>(0, shapes.size() - 1)(rng)];
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
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

Outcome sos_round_trip() {
  Outcome o;
  std::mt19937_64 rng(17);
  int certified = 0;
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto c = random_sos(rng);
    SosProgram sp;
    sp.ring = c.vars;
    SosConstraint k;
    k.id = "p";
    k.target = c.p;
    k.indeterminates = c.names;
    sp.constraints.push_back(k);
    sp.order = relaxation_order(sp);
    auto sol = solve_sos(sp);
    worst = std::max(worst, sol.max_residual);
    certified += sol.sdp.status == SdpStatus::Optimal && sol.max_residual <= 1e-6;
  }
  o.require(certified == 50, "50 feasible certificates");
  o.detail << certified << "/50 certified, worst residual " << worst << "; ";
  int refuted = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto c = random_sos(rng);
    std::vector<Rational> pt(c.names.size(), Rational(1, 2));
    QPolynomial q = c.p - QPolynomial::constant(c.vars, c.p.eval(pt) + Rational(1));
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
    refuted += infeasible || sol.decisions.at("g") > 0;
  }
  o.require(refuted == 50, "50 negative polynomials refuted");
  o.detail << refuted << "/50 negative-somewhere refuted";
  return o;
}

Outcome sdp_unit() {
  Outcome o;
  SdpProblem p;
  p.blocks = {{2, BlockKind::Psd}};
  p.C.add(0, 0, 0, 1.0);
  p.C.add(0, 1, 1, 1.0);
  BlockSparse a;
  a.add(0, 0, 1, 0.5);
  p.A.push_back(a);
  p.b.push_back(1.0);
  auto sol = solve_sdp(p);
  o.require(sol.status == SdpStatus::Optimal && std::fabs(sol.objective - 2) <= 1e-7, "2x2 objective 2");
  o.detail << "2x2 objective " << sol.objective << "; ";

  SdpProblem bad;
  bad.blocks = {{3, BlockKind::Psd}};
  for (double r : {1.0, 2.0}) {
    BlockSparse t;
    for (int i = 0; i < 3; ++i) t.add(0, i, i, 1.0);
    bad.A.push_back(t);
    bad.b.push_back(r);
  }
  auto inf = solve_sdp(bad);
  o.require(inf.status == SdpStatus::PrimalInfeasible, "contradictory equalities are PrimalInfeasible");
  o.detail << "contradiction " << status_name(inf.status) << "; ";

  // Weak duality on the SDPs the corpus produces.
  std::vector<SosProgram> programs;
  {
    auto f = load_program(bench("contract.inv"));
    for (int d = 1; d <= 3; ++d) programs.push_back(build_cluster_program(*f.program, {f.tpl.get(), nullptr}, d, Box::unit(2)));
    auto n = load_program(bench("nested.inv"));
    programs.push_back(build_cluster_program(*n.program, {n.tpl.get(), n.program->branches[0].inner_template.get()}, 4,
                                             Box::unit(2)));
  }
  for (const char* name : {"freire1.inv", "petter.inv", "cohencu.inv", "sum2power2.inv", "sum3power2.inv"}) {
    auto f = load_program(bench(name));
    // Every order the mask loop may try, as in run_mask.
    auto sp = build_mask_program(*f.program, *f.tpl);
    for (int d = sp.order; d <= std::max(sp.order, MaskSettings{}.relax_max); ++d) {
      sp.order = d;
      for (auto& c : sp.constraints)
        if (c.order != 0) c.order = d;
      programs.push_back(sp);
    }
  }
  int solves = 0, violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& sp : programs) {
    auto as = assemble_sdp(sp);
    auto s = solve_sdp(as.sdp);
    if (s.status == SdpStatus::PrimalInfeasible || s.status == SdpStatus::DualInfeasible) continue;
    ++solves;
    double slack = s.objective - s.dual_objective;
    double tol = 1e-6 * (1 + std::fabs(s.objective) + std::fabs(s.dual_objective));
    worst = std::min(worst, slack);
    violations += slack < -tol;
  }
  o.require(violations == 0, "weak duality on corpus solves");
  o.detail << solves << " corpus solves, min primal-dual difference " << worst;
  return o;
}

Outcome soundness_gate() {
  Outcome o;
  struct Emitted {
    std::string name;
    ProgramFile* file;
    std::vector<Constraint> inv, inner;
  };
  std::vector<std::unique_ptr<ProgramFile>> files;
  std::vector<Emitted> emitted;
  for (const char* name : {"freire1.inv", "petter.inv", "cohencu.inv", "sum2power2.inv", "sum3power2.inv"}) {
    files.push_back(std::make_unique<ProgramFile>(load_program(bench(name))));
    auto r = run_mask(*files.back()->program, *files.back()->tpl);
    if (r.found) emitted.push_back({name, files.back().get(), r.invariant, {}});
  }
  {
    files.push_back(std::make_unique<ProgramFile>(load_program(bench("contract.inv"))));
    ClusterSettings s;
    s.degree_max = 3;
    for (const auto& u : run_cluster(*files.back()->program, {files.back()->tpl.get(), nullptr}, s))
      if (u.witness && u.witness->verified && *u.witness->verified >= VerifyLevel::SosPass)
        emitted.push_back({"contract d=" + std::to_string(u.degree), files.back().get(), u.witness->invariant, {}});
  }
  {
    files.push_back(std::make_unique<ProgramFile>(load_program(bench("nested.inv"))));
    const auto& prog = *files.back()->program;
    auto u = solve_cluster(prog, {files.back()->tpl.get(), prog.branches[0].inner_template.get()}, 4, Box::unit(2), {});
    if (u.witness && u.witness->verified && *u.witness->verified >= VerifyLevel::SosPass)
      emitted.push_back({"nested d=4", files.back().get(), u.witness->invariant, u.witness->inner_invariant});
  }
  int falsified = 0;
  for (const auto& e : emitted) {
    const auto& prog = *e.file->program;
    auto imps = invariant_conditions(prog, e.inv, prog.nested() ? &e.inner : nullptr);
    for (const auto& imp : imps) {
      Reduced r = reduce(imp);
      if (r.vacuous) continue;
      for (std::uint64_t seed = 1; seed <= 5; ++seed)
        if (auto cx = falsify(r, prog.bound, 100000, seed * 104729, 10)) {
          ++falsified;
          o.detail << e.name << " " << imp.id << " falsified; ";
        }
    }
  }
  o.require(emitted.size() >= 8, "every corpus program emits an invariant");
  o.require(falsified == 0, "no sampled counterexample");
  o.detail << emitted.size() << " emitted invariants, " << falsified << " falsifications";
  return o;
}

Outcome rationalization() {
  Outcome o;
  Rational w = rationalize(0.41667, 1e-5);
  o.require(w == Rational(5, 12), "0.41667 -> 5/12");
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<long> num(-5000, 5000), den(1, 1000);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    Rational q(num(rng), den(rng));
    ok += rationalize(q.to_double(), 1e-9) == q;
  }
  o.require(ok == 1000, "1000 round trips");
  o.detail << "0.41667 -> " << w.str() << ", " << ok << "/1000 round trips";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"mask-freire1-exact", mask_freire1},
      {"cluster-contract-profile", cluster_contract_profile},
      {"cluster-monotonicity", cluster_monotonicity},
      {"partition-coverage", partition_coverage},
      {"sum-k-power-recovery", sum_power_recovery},
      {"moment-oracle", moment_oracle},
      {"sos-round-trip", sos_round_trip},
      {"sdp-unit", sdp_unit},
      {"soundness-gate", soundness_gate},
      {"rationalization", rationalization},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
