#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unistd.h>

#include "invsdp/sdp.hpp"

namespace invsdp {

// Problem format (whitespace separated, '#' comment lines):
//   invsdp-sdp 1
//   <m> <nblocks>
//   <size_1> ... <size_nblocks>       negative size = free diagonal block
//   <b_1> ... <b_m>
//   <mat> <block> <i> <j> <value>     mat 0 = C, mat k = A_k; all 1-based, i <= j
void write_sdp(std::ostream& os, const SdpProblem& p) {
  os << "invsdp-sdp 1\n" << p.A.size() << ' ' << p.blocks.size() << '\n';
  for (std::size_t k = 0; k < p.blocks.size(); ++k)
    os << (k ? " " : "") << (p.blocks[k].kind == BlockKind::Free ? -p.blocks[k].size : p.blocks[k].size);
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < p.b.size(); ++i) os << (i ? " " : "") << p.b[i];
  os << '\n';
  auto dump = [&](std::size_t mat, const BlockSparse& M) {
    for (const auto& e : M.entries)
      os << mat << ' ' << e.block + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
  };
  dump(0, p.C);
  for (std::size_t i = 0; i < p.A.size(); ++i) dump(i + 1, p.A[i]);
}

namespace {

std::istringstream strip_comments(std::istream& is) {
  std::ostringstream out;
  std::string line;
  while (std::getline(is, line)) {
    auto h = line.find('#');
    if (h != std::string::npos) line.resize(h);
    out << line << '\n';
  }
  return std::istringstream(out.str());
}

}  // namespace

SdpProblem read_sdp(std::istream& raw) {
  auto is = strip_comments(raw);
  std::string magic;
  int version = 0;
  std::size_t m = 0, nb = 0;
  if (!(is >> magic >> version) || magic != "invsdp-sdp" || version != 1)
    throw std::runtime_error("not an invsdp-sdp file");
  if (!(is >> m >> nb)) throw std::runtime_error("bad header");
  SdpProblem p;
  for (std::size_t k = 0; k < nb; ++k) {
    long s;
    if (!(is >> s) || s == 0) throw std::runtime_error("bad block size");
    p.blocks.push_back({static_cast<int>(s < 0 ? -s : s), s < 0 ? BlockKind::Free : BlockKind::Psd});
  }
  p.b.resize(m);
  for (auto& v : p.b)
    if (!(is >> v)) throw std::runtime_error("bad b vector");
  p.A.resize(m);
  std::size_t mat;
  int blk, i, j;
  double v;
  while (is >> mat >> blk >> i >> j >> v) {
    if (mat > m) throw std::runtime_error("matrix index out of range");
    (mat == 0 ? p.C : p.A[mat - 1]).add(blk - 1, i - 1, j - 1, v);
  }
  if (!is.eof()) throw std::runtime_error("trailing garbage in sdp file");
  p.validate();
  return p;
}

// Solution format:
//   invsdp-sol 1
//   status <name>
//   iterations <k>
//   objective <v> <dual v>
//   y <y_1> ... <y_m>
//   X <block> <i> <j> <value>   and   S <block> <i> <j> <value>, 1-based, i <= j
void write_solution(std::ostream& os, const SdpSolution& sol) {
  os << "invsdp-sol 1\nstatus " << status_name(sol.status) << "\niterations " << sol.iterations << '\n'
     << std::setprecision(17) << "objective " << sol.objective << ' ' << sol.dual_objective << "\ny";
  for (int i = 0; i < sol.y.size(); ++i) os << ' ' << sol.y[i];
  os << '\n';
  auto dump = [&](const char* tag, const std::vector<Eigen::MatrixXd>& mats) {
    for (std::size_t k = 0; k < mats.size(); ++k)
      for (int c = 0; c < mats[k].cols(); ++c)
        for (int r = 0; r <= c; ++r)
          if (mats[k](r, c) != 0.0) os << tag << ' ' << k + 1 << ' ' << r + 1 << ' ' << c + 1 << ' ' << mats[k](r, c) << '\n';
  };
  dump("X", sol.X);
  dump("S", sol.S);
}

SdpSolution read_solution(std::istream& is, const SdpProblem& p) {
  SdpSolution sol;
  for (const auto& b : p.blocks) {
    sol.X.push_back(Eigen::MatrixXd::Zero(b.size, b.size));
    sol.S.push_back(Eigen::MatrixXd::Zero(b.size, b.size));
  }
  sol.y = Eigen::VectorXd::Zero(static_cast<int>(p.A.size()));
  std::string line, tag;
  bool have_status = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    if (!(ls >> tag)) continue;
    if (tag == "invsdp-sol") continue;
    if (tag == "status") {
      std::string name;
      ls >> name;
      for (auto s : {SdpStatus::Optimal, SdpStatus::PrimalInfeasible, SdpStatus::DualInfeasible,
                     SdpStatus::MaxIterations, SdpStatus::NumericalFailure})
        if (name == status_name(s)) {
          sol.status = s;
          have_status = true;
        }
    } else if (tag == "iterations") {
      ls >> sol.iterations;
    } else if (tag == "objective") {
      ls >> sol.objective >> sol.dual_objective;
    } else if (tag == "y") {
      for (int i = 0; i < sol.y.size(); ++i) ls >> sol.y[i];
    } else if (tag == "X" || tag == "S") {
      int k, r, c;
      double v;
      ls >> k >> r >> c >> v;
      auto& mats = tag == "X" ? sol.X : sol.S;
      if (k < 1 || k > static_cast<int>(mats.size()) || r < 1 || c < 1 || r > mats[k - 1].rows() ||
          c > mats[k - 1].rows())
        throw std::runtime_error("solution entry out of range");
      mats[k - 1](r - 1, c - 1) = v;
      mats[k - 1](c - 1, r - 1) = v;
    }
    if (ls.fail()) throw std::runtime_error("malformed solution line: " + line);
  }
  if (!have_status) throw std::runtime_error("solution lacks a status line");
  sol.residuals = residuals(p, sol);
  return sol;
}

namespace {

SdpSolution solve_external(const SdpProblem& p, const std::string& cmd) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path();
  std::string stem = "invsdp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  auto in = dir / (stem + ".sdp"), out = dir / (stem + ".sol");
  {
    std::ofstream f(in);
    write_sdp(f, p);
  }
  std::string full = cmd + " '" + in.string() + "' '" + out.string() + "'";
  int rc = std::system(full.c_str());
  SdpSolution sol;
  std::ifstream f(out);
  if (rc != 0 || !f) {
    std::filesystem::remove(in);
    throw std::runtime_error("external solver failed: " + full);
  }
  sol = read_solution(f, p);
  std::filesystem::remove(in);
  std::filesystem::remove(out);
  return sol;
}

}  // namespace

SdpSolution solve_with_backend(const SdpProblem& p, const SolverSettings& s) {
  const char* env = std::getenv("INVSDP_SOLVER");
  std::string sel = env ? env : "embedded";
  if (sel.empty() || sel == "embedded") return solve_sdp(p, s);
  const std::string prefix = "external:";
  if (sel.rfind(prefix, 0) == 0) return solve_external(p, sel.substr(prefix.size()));
  throw std::runtime_error("unknown INVSDP_SOLVER value '" + sel + "'");
}

}  // namespace invsdp
