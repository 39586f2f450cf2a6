#include "invsdp/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace invsdp::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(INVSDP_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  const char* env = std::getenv("INVSDP_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) throw std::runtime_error(std::string("ISA not supported: ") + isa_name(isa));
  current().store(isa, std::memory_order_relaxed);
}

#ifdef INVSDP_HAVE_AVX2
#define INVSDP_DISPATCH(fn, ...) \
  (active_isa() == Isa::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define INVSDP_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double dot(const double* a, const double* b, std::size_t n) { return INVSDP_DISPATCH(dot, a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) { INVSDP_DISPATCH(axpy, alpha, x, y, n); }

void eval_batch(const PackedPolynomial& p, const double* points, std::size_t npts, double* out) {
  INVSDP_DISPATCH(eval_batch, p, points, npts, out);
}

PackedPolynomial pack(const Polynomial& p) {
  PackedPolynomial out;
  out.nvars = p.nvars();
  for (const auto& [m, c] : p.terms()) {
    for (std::size_t v = 0; v < m.size(); ++v) {
      out.exps.push_back(static_cast<std::uint16_t>(m[v]));
      out.max_exp = std::max(out.max_exp, m[v]);
    }
    out.coeffs.push_back(c);
  }
  return out;
}

}  // namespace invsdp::kernels
