// Built with -mavx2 -mfma -ffp-contract=off; only reached after a CPU check.
#include <immintrin.h>

#include <vector>

#include "invsdp/kernels.hpp"

namespace invsdp::kernels::avx2 {

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  __m256d s = _mm256_add_pd(s0, s1);
  __m128d h = _mm_add_pd(_mm256_castpd256_pd128(s), _mm256_extractf128_pd(s, 1));
  double r = _mm_cvtsd_f64(_mm_add_sd(h, _mm_unpackhi_pd(h, h)));
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four points per lane group; the arithmetic order matches the scalar path so
// results agree bit for bit.
void eval_batch(const PackedPolynomial& p, const double* points, std::size_t npts, double* out) {
  const std::size_t nv = p.nvars;
  const std::size_t stride = static_cast<std::size_t>(p.max_exp) + 1;
  // Wrapped so the vector sees a plain aligned class, not a vector type.
  struct Lane {
    __m256d v;
  };
  std::vector<Lane> pw(nv * stride);
  std::size_t k = 0;
  for (; k + 4 <= npts; k += 4) {
    const double* x = points + k * nv;
    for (std::size_t v = 0; v < nv; ++v) {
      __m256d xv = _mm256_set_pd(x[3 * nv + v], x[2 * nv + v], x[nv + v], x[v]);
      Lane* row = &pw[v * stride];
      row[0].v = _mm256_set1_pd(1.0);
      for (std::size_t e = 1; e < stride; ++e) row[e].v = _mm256_mul_pd(row[e - 1].v, xv);
    }
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t t = 0; t < p.nterms(); ++t) {
      __m256d term = _mm256_set1_pd(p.coeffs[t]);
      const std::uint16_t* ex = &p.exps[t * nv];
      for (std::size_t v = 0; v < nv; ++v) term = _mm256_mul_pd(term, pw[v * stride + ex[v]].v);
      acc = _mm256_add_pd(acc, term);
    }
    _mm256_storeu_pd(out + k, acc);
  }
  if (k < npts) scalar::eval_batch(p, points + k * nv, npts - k, out + k);
}

}  // namespace invsdp::kernels::avx2
