// invsdp command-line front end.
//
// Exit codes: 0 invariant found and verified (or verification passed),
// 1 usage or I/O error, 2 nothing found within the caps or inconclusive,
// 3 a verification failed.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "invsdp/cluster.hpp"
#include "invsdp/kernels.hpp"
#include "invsdp/mask.hpp"
#include "invsdp/plot.hpp"
#include "invsdp/report.hpp"
#include "invsdp/sdp.hpp"

using namespace invsdp;

namespace {

constexpr int kOk = 0, kError = 1, kNone = 2, kFail = 3;

struct Options {
  std::string input;
  std::string output;
  int degree_max = 3;
  int relax_max = 4;
  int jobs = 1;
  std::uint64_t seed = 1;
  double feas_tol = 1e-6;
  int partition_depth = 0;
  double eps_d = 0.05;
  double eps_v = 1e-3;
  int grid = 400;
  int samples = 100000;
  std::vector<double> box;
  std::vector<std::string> core;
  bool feasibility_only = false;
  bool free_multipliers = false;
  std::string invariant;
  int k = 2, d = 2;
  std::string sdp_out;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
}

Json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return Json::parse(f);
}

VerifySettings verify_settings(const Options& o) {
  VerifySettings v;
  v.seed = o.seed;
  v.samples = o.samples;
  v.max_order = o.relax_max;
  return v;
}

const Template* inner_template(const LoopProgram& prog) {
  for (const auto& b : prog.branches)
    if (b.inner_template) return b.inner_template.get();
  return nullptr;
}

int exit_for(const std::optional<VerifyLevel>& lvl) {
  if (!lvl) return kNone;
  if (*lvl == VerifyLevel::Fail) return kFail;
  return *lvl == VerifyLevel::SampledOnly ? kNone : kOk;
}

int run_cluster_cmd(const Options& o) {
  ProgramFile f = load_program(o.input);
  if (!f.tpl) throw std::runtime_error("program has no template");
  const Template* inner = inner_template(*f.program);
  if (f.program->nested() && !inner) throw std::runtime_error("nested loop needs an inner template");
  ClusterTemplates t{f.tpl.get(), inner};
  auto params = t.params();
  ClusterSettings s;
  s.degree_max = o.degree_max;
  s.jobs = o.jobs;
  s.feas_tol = o.feas_tol;
  s.verify = verify_settings(o);
  std::optional<Box> box;
  if (!o.box.empty()) {
    if (o.box.size() != 2 * params.size()) throw std::runtime_error("--box needs lo,hi for every parameter");
    Box b;
    for (std::size_t j = 0; j < params.size(); ++j) {
      b.lo.push_back(o.box[2 * j]);
      b.hi.push_back(o.box[2 * j + 1]);
    }
    box = b;
  }
  Json out;
  out["command"] = "cluster";
  out["input"] = o.input;
  out["params"] = params;
  std::optional<VerifyLevel> best;
  auto track = [&](const UnderApprox& u) {
    if (!u.feasible || !u.witness || !u.witness->verified) return;
    // Any verified witness wins; a failing one only matters if nothing passes.
    auto lvl = *u.witness->verified;
    if (!best || lvl > *best) best = lvl;
  };
  if (o.partition_depth > 0) {
    Box b = box ? *box : Box::unit(params.size());
    auto pr = partition_refine(*f.program, t, o.degree_max, b, o.partition_depth, o.eps_d, o.eps_v, s);
    for (const auto& u : pr.leaves) track(u);
    out["partition"] = partition_json(pr, params);
  } else {
    Json results = Json::array();
    for (const auto& u : run_cluster(*f.program, t, s, box)) {
      track(u);
      results.push_back(cluster_json(u, params));
    }
    out["results"] = std::move(results);
  }
  write_text(o.output, dump(out));
  return exit_for(best);
}

int run_mask_cmd(const Options& o) {
  ProgramFile f = load_program(o.input);
  if (!f.tpl || f.tpl->kind != TemplateKind::Masked) throw std::runtime_error("program needs a masked template");
  MaskSettings s;
  s.relax_max = o.relax_max;
  s.feas_tol = o.feas_tol;
  s.feasibility_only = o.feasibility_only;
  s.free_equality_multipliers = o.free_multipliers;
  s.verify = verify_settings(o);
  if (!o.core.empty()) {
    std::string why = check_core_split(*f.program, o.core);
    if (!why.empty()) throw NotMaskable(why);
    if (o.core != f.tpl->core) throw std::runtime_error("--core differs from the template's declared core");
  }
  MaskResult r = run_mask(*f.program, *f.tpl, s);
  Json out = mask_json(r, *f.tpl);
  out["command"] = "mask";
  out["input"] = o.input;
  write_text(o.output, dump(out));
  if (!r.found) return kNone;
  return exit_for(r.verdict.level);
}

int run_verify_cmd(const Options& o) {
  ProgramFile f = load_program(o.input);
  Json j = read_json(o.invariant);
  auto inv = constraints_from_json(j, f.program->vars);
  std::vector<Constraint> inner;
  if (j.contains("inner_constraints")) inner = constraints_from_json(Json{{"constraints", j["inner_constraints"]}}, f.program->vars);
  if (f.program->nested() && inner.empty()) throw std::runtime_error("nested loop needs inner_constraints");
  Verdict v = verify_invariant(*f.program, inv, f.program->nested() ? &inner : nullptr, verify_settings(o));
  Json out = verdict_json(v);
  write_text(o.output, dump(out));
  return exit_for(v.level);
}

int run_plot_cmd(const Options& o) {
  Json j = read_json(o.input);
  auto params = j.at("params").get<std::vector<std::string>>();
  if (params.size() != 2) throw std::runtime_error("plots need exactly two parameters");
  const Json& items = j.contains("partition") ? j["partition"]["leaves"] : j.at("results");
  std::vector<PlotLayer> layers;
  Box view;
  for (const auto& u : items) {
    Box b{u["box"]["lo"].get<std::vector<double>>(), u["box"]["hi"].get<std::vector<double>>()};
    if (view.lo.empty()) view = b;
    for (int k = 0; k < 2; ++k) {
      view.lo[k] = std::min(view.lo[k], b.lo[k]);
      view.hi[k] = std::max(view.hi[k], b.hi[k]);
    }
    if (!u.at("feasible").get<bool>()) continue;
    layers.push_back({h_from_json(u, params), b, "d=" + std::to_string(u.at("degree").get<int>())});
  }
  if (view.lo.empty()) throw std::runtime_error("result file holds no entries");
  write_text(o.output, sublevel_svg(layers, view, o.grid, params));
  return layers.empty() ? kNone : kOk;
}

int run_gen_cmd(const Options& o) {
  write_text(o.output, gen_sum_power(o.k, o.d).text);
  return kOk;
}

int run_sdp_solve_cmd(const Options& o) {
  std::ifstream in(o.input);
  if (!in) throw std::runtime_error("cannot open '" + o.input + "'");
  SdpProblem p = read_sdp(in);
  SdpSolution sol = solve_sdp(p);
  std::ostringstream os;
  write_solution(os, sol);
  write_text(o.sdp_out, os.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial loop invariant synthesis by sum-of-squares programming"};
  app.require_subcommand(1);
  Options o;
  std::string isa;
  app.add_option("--simd", isa, "Kernel ISA override (scalar or avx2)");

  auto common = [&](CLI::App* c) {
    c->add_option("-o,--output", o.output, "Output file (default stdout)");
    c->add_option("--seed", o.seed, "Sampling seed");
    c->add_option("--jobs", o.jobs, "Parallel SDP solves")->check(CLI::PositiveNumber);
    c->add_option("--feas-tol", o.feas_tol, "Residual accepted from a non-optimal final iterate")
        ->check(CLI::PositiveNumber);
    c->add_option("--relax-max", o.relax_max, "Largest relaxation order")->check(CLI::PositiveNumber);
    c->add_option("--samples", o.samples, "Falsification samples per condition")->check(CLI::PositiveNumber);
  };

  auto* cluster = app.add_subcommand("cluster", "Under-approximate the valid parameter set");
  cluster->add_option("input", o.input, "Program file")->required()->check(CLI::ExistingFile);
  cluster->add_option("--degree-max", o.degree_max, "Largest degree of h")->check(CLI::PositiveNumber);
  cluster->add_option("--partition-depth", o.partition_depth, "Bisections per path at degree --degree-max")
      ->check(CLI::NonNegativeNumber);
  cluster->add_option("--eps-d", o.eps_d, "Smallest box diameter worth splitting");
  cluster->add_option("--eps-v", o.eps_v, "Smallest objective gain worth splitting");
  cluster->add_option("--box", o.box, "Parameter box as lo,hi per parameter")->delimiter(',');
  common(cluster);

  auto* mask = app.add_subcommand("mask", "Synthesize a masked-template invariant");
  mask->add_option("input", o.input, "Program file")->required()->check(CLI::ExistingFile);
  mask->add_option("--core", o.core, "Expected core variables")->delimiter(',');
  mask->add_flag("--feasibility-only", o.feasibility_only, "Drop the slack objective");
  mask->add_flag("--free-multipliers", o.free_multipliers, "Free multipliers for equality hypotheses");
  common(mask);

  auto* verify = app.add_subcommand("verify", "Verify a concrete invariant");
  verify->add_option("input", o.input, "Program file")->required()->check(CLI::ExistingFile);
  verify->add_option("invariant", o.invariant, "Invariant JSON")->required()->check(CLI::ExistingFile);
  common(verify);

  auto* plot = app.add_subcommand("plot", "Draw h = 0 contours of a cluster result");
  plot->add_option("input", o.input, "Cluster result JSON")->required()->check(CLI::ExistingFile);
  plot->add_option("--grid", o.grid, "Lattice points per axis")->check(CLI::Range(16, 4000));
  plot->add_option("-o,--output", o.output, "SVG file (default stdout)");

  auto* gen = app.add_subcommand("gen-sumpower", "Emit a sum-of-powers benchmark program");
  gen->add_option("-k", o.k, "Number of counters")->check(CLI::Range(1, 12));
  gen->add_option("-d", o.d, "Power")->check(CLI::Range(1, 12));
  gen->add_option("-o,--output", o.output, "Program file (default stdout)");

  auto* sdp = app.add_subcommand("sdp-solve", "Solve an SDP file with the embedded solver");
  sdp->group("");  // backend plumbing for INVSDP_SOLVER=external:...
  sdp->add_option("input", o.input)->required();
  sdp->add_option("output", o.sdp_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (!isa.empty()) kernels::set_isa(isa == "avx2" ? kernels::Isa::Avx2 : kernels::Isa::Scalar);
    if (cluster->parsed()) return run_cluster_cmd(o);
    if (mask->parsed()) return run_mask_cmd(o);
    if (verify->parsed()) return run_verify_cmd(o);
    if (plot->parsed()) return run_plot_cmd(o);
    if (gen->parsed()) return run_gen_cmd(o);
    if (sdp->parsed()) return run_sdp_solve_cmd(o);
  } catch (const std::exception& e) {
    std::cerr << "invsdp: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
