#include "laeo/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace laeo::kernels {

namespace scalar {

void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void matvec(std::size_t m, std::size_t n, const double* a, const double* x, double* y) {
  for (std::size_t i = 0; i < m; ++i) y[i] = dot(n, a + i * n, x);
}

void matvec_t(std::size_t m, std::size_t n, const double* a, const double* x, double* y) {
  for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < m; ++i) axpy(n, x[i], a + i * n, y);
}

void outer_accum(std::size_t m, std::size_t n, double* a, double alpha, const double* u,
                 const double* v) {
  for (std::size_t i = 0; i < m; ++i) axpy(n, alpha * u[i], v, a + i * n);
}

void adam_step(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace scalar

#if defined(LAEO_HAVE_AVX2_SOURCES)
namespace avx2 {
void axpy(std::size_t, double, const double*, double*);
double dot(std::size_t, const double*, const double*);
void matvec(std::size_t, std::size_t, const double*, const double*, double*);
void matvec_t(std::size_t, std::size_t, const double*, const double*, double*);
void outer_accum(std::size_t, std::size_t, double*, double, const double*, const double*);
void adam_step(std::size_t, double*, const double*, double*, double*, double, double, double,
               double, double, double);
}  // namespace avx2
#endif

namespace {

struct Dispatch {
  Backend backend;
  void (*axpy)(std::size_t, double, const double*, double*);
  double (*dot)(std::size_t, const double*, const double*);
  void (*matvec)(std::size_t, std::size_t, const double*, const double*, double*);
  void (*matvec_t)(std::size_t, std::size_t, const double*, const double*, double*);
  void (*outer_accum)(std::size_t, std::size_t, double*, double, const double*, const double*);
  void (*adam_step)(std::size_t, double*, const double*, double*, double*, double, double,
                    double, double, double, double);
};

constexpr Dispatch kScalar{Backend::scalar, scalar::axpy,   scalar::dot,
                           scalar::matvec,  scalar::matvec_t, scalar::outer_accum,
                           scalar::adam_step};

bool cpu_has_avx2() {
#if defined(LAEO_HAVE_AVX2_SOURCES) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Dispatch make_dispatch(Backend b) {
#if defined(LAEO_HAVE_AVX2_SOURCES)
  if (b == Backend::avx2)
    return {Backend::avx2, avx2::axpy,   avx2::dot,       avx2::matvec,
            avx2::matvec_t, avx2::outer_accum, avx2::adam_step};
#endif
  (void)b;
  return kScalar;
}

Dispatch& dispatch() {
  static Dispatch d = make_dispatch(cpu_has_avx2() ? Backend::avx2 : Backend::scalar);
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  return cpu_has_avx2();
}

void force_backend(Backend b) {
  if (!backend_available(b))
    throw std::invalid_argument("kernels: backend " + backend_name(b) + " unavailable");
  dispatch() = make_dispatch(b);
}

void use_best_backend() { force_backend(cpu_has_avx2() ? Backend::avx2 : Backend::scalar); }

std::string backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

void axpy(std::size_t n, double a, const double* x, double* y) { dispatch().axpy(n, a, x, y); }

double dot(std::size_t n, const double* x, const double* y) { return dispatch().dot(n, x, y); }

void matvec(std::size_t m, std::size_t n, const double* a, const double* x, double* y) {
  dispatch().matvec(m, n, a, x, y);
}

void matvec_t(std::size_t m, std::size_t n, const double* a, const double* x, double* y) {
  dispatch().matvec_t(m, n, a, x, y);
}

void outer_accum(std::size_t m, std::size_t n, double* a, double alpha, const double* u,
                 const double* v) {
  dispatch().outer_accum(m, n, a, alpha, u, v);
}

void adam_step(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double bc1, double bc2) {
  dispatch().adam_step(n, p, g, m, v, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace laeo::kernels
