#pragma once

#include <cstddef>
#include <string>

namespace laeo::kernels {

// Data-parallel inner loops of the trainer: dense matvec for the predictor,
// gradient accumulation, and the Adam update. Scalar reference kernels plus
// an AVX2 variant, selected once at startup; force_backend exists so the
// equivalence tests can pin either side. SIMD variants may reassociate sums
// (and use FMA), so cross-backend comparisons carry a small tolerance.

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_available(Backend b);
void force_backend(Backend b);   // throws std::invalid_argument if unavailable
void use_best_backend();
std::string backend_name(Backend b);

// y[i] += a * x[i]
void axpy(std::size_t n, double a, const double* x, double* y);

double dot(std::size_t n, const double* x, const double* y);

// y = A x, A row-major m x n
void matvec(std::size_t m, std::size_t n, const double* a, const double* x, double* y);

// y = A^T x, A row-major m x n, x has m entries, y has n
void matvec_t(std::size_t m, std::size_t n, const double* a, const double* x, double* y);

// A += alpha * u v^T, A row-major m x n
void outer_accum(std::size_t m, std::size_t n, double* a, double alpha, const double* u,
                 const double* v);

// One Adam update over a flat parameter vector. bc1/bc2 are the bias
// corrections 1 - beta^t for the current step, computed by the caller.
void adam_step(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double bc1, double bc2);

}  // namespace laeo::kernels
