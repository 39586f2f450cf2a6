#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "invsdp/polynomial.hpp"

// Numeric inner loops with a scalar reference implementation and an AVX2
// variant chosen at runtime. INVSDP_SIMD=scalar forces the reference path.
namespace invsdp::kernels {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Override the dispatch; throws std::runtime_error if the CPU lacks the ISA.
void set_isa(Isa isa);

double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Dense term table used for evaluating one polynomial at many points.
struct PackedPolynomial {
  std::size_t nvars = 0;
  int max_exp = 0;
  std::vector<std::uint16_t> exps;  // nterms * nvars, term-major
  std::vector<double> coeffs;
  std::size_t nterms() const { return coeffs.size(); }
};

PackedPolynomial pack(const Polynomial& p);

// points is row-major npts x nvars; out receives npts values.
void eval_batch(const PackedPolynomial& p, const double* points, std::size_t npts, double* out);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void eval_batch(const PackedPolynomial& p, const double* points, std::size_t npts, double* out);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void eval_batch(const PackedPolynomial& p, const double* points, std::size_t npts, double* out);
}  // namespace avx2

}  // namespace invsdp::kernels
