#include "invsdp/kernels.hpp"

namespace invsdp::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void eval_batch(const PackedPolynomial& p, const double* points, std::size_t npts, double* out) {
  const std::size_t nv = p.nvars;
  const std::size_t stride = static_cast<std::size_t>(p.max_exp) + 1;
  std::vector<double> pw(nv * stride);
  for (std::size_t k = 0; k < npts; ++k) {
    const double* x = points + k * nv;
    for (std::size_t v = 0; v < nv; ++v) {
      double* row = &pw[v * stride];
      row[0] = 1.0;
      for (std::size_t e = 1; e < stride; ++e) row[e] = row[e - 1] * x[v];
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < p.nterms(); ++t) {
      double term = p.coeffs[t];
      const std::uint16_t* ex = &p.exps[t * nv];
      for (std::size_t v = 0; v < nv; ++v) term = term * pw[v * stride + ex[v]];
      acc = acc + term;
    }
    out[k] = acc;
  }
}

}  // namespace invsdp::kernels::scalar
