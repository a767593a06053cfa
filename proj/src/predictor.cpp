#include "laeo/predictor.hpp"

#include <cmath>
#include <stdexcept>

#include "laeo/kernels.hpp"
#include "laeo/util.hpp"

namespace laeo {

MlpOffsets mlp_offsets(const MlpShape& shape) {
  if (shape.hidden1 < 1 || shape.hidden2 < 1) {
    throw std::invalid_argument("mlp_offsets: hidden sizes must be positive");
  }
  const std::size_t in = FeatureVector::kWidth;
  const std::size_t h1 = static_cast<std::size_t>(shape.hidden1);
  const std::size_t h2 = static_cast<std::size_t>(shape.hidden2);
  MlpOffsets o;
  o.w1 = 0;
  o.b1 = o.w1 + h1 * in;
  o.w2 = o.b1 + h1;
  o.b2 = o.w2 + h2 * h1;
  o.w3 = o.b2 + h2;
  o.b3 = o.w3 + 3 * h2;
  o.total = o.b3 + 3;
  return o;
}

PredictorParams init_predictor(PredictorMode mode, uint64_t seed, int sample_count,
                               const MlpShape& shape) {
  PredictorParams p;
  p.mode = mode;
  p.sample_count = sample_count;
  p.shape = shape;
  if (mode == PredictorMode::direct) {
    if (sample_count < 0) {
      throw std::invalid_argument("init_predictor: sample_count must be non-negative");
    }
    p.values.assign(static_cast<std::size_t>(sample_count) * 2 * 3, 0.0);
    return p;
  }
  const MlpOffsets o = mlp_offsets(shape);
  p.values.assign(o.total, 0.0);
  Rng rng(mix_seed(seed, 0x11117u));
  const auto fill_normal = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) p.values[i] = 0.1 * rng.normal();
  };
  fill_normal(o.w1, o.b1);
  fill_normal(o.w2, o.b2);
  fill_normal(o.w3, o.b3);
  return p;
}

std::size_t direct_slot(int sample_index, bool mirrored) {
  return (static_cast<std::size_t>(sample_index) * 2 + (mirrored ? 1 : 0)) * 3;
}

namespace {

void check_direct_bounds(const PredictorParams& params, int sample_index) {
  if (sample_index < 0 || sample_index >= params.sample_count) {
    throw std::invalid_argument("predictor: sample_index out of range");
  }
}

}  // namespace

GazePrediction forward(const PredictorParams& params, const FeatureVector& features,
                       int sample_index, bool mirrored, ForwardCache* cache) {
  if (params.mode == PredictorMode::direct) {
    check_direct_bounds(params, sample_index);
    const std::size_t s = direct_slot(sample_index, mirrored);
    GazePrediction pred;
    pred.angles = {params.values[s], params.values[s + 1]};
    pred.log_sigma = params.values[s + 2];
    return pred;
  }

  const FeatureVector in_features = mirrored ? features.mirrored() : features;
  const MlpOffsets o = mlp_offsets(params.shape);
  const std::size_t in = FeatureVector::kWidth;
  const std::size_t h1 = static_cast<std::size_t>(params.shape.hidden1);
  const std::size_t h2 = static_cast<std::size_t>(params.shape.hidden2);

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.input = in_features.v;
  c.h1_pre.assign(h1, 0.0);
  c.h1.assign(h1, 0.0);
  c.h2_pre.assign(h2, 0.0);
  c.h2.assign(h2, 0.0);

  const double* w = params.values.data();
  kernels::matvec(h1, in, w + o.w1, c.input.data(), c.h1_pre.data());
  kernels::axpy(h1, 1.0, w + o.b1, c.h1_pre.data());
  for (std::size_t i = 0; i < h1; ++i) c.h1[i] = std::tanh(c.h1_pre[i]);

  kernels::matvec(h2, h1, w + o.w2, c.h1.data(), c.h2_pre.data());
  kernels::axpy(h2, 1.0, w + o.b2, c.h2_pre.data());
  for (std::size_t i = 0; i < h2; ++i) c.h2[i] = std::tanh(c.h2_pre[i]);

  kernels::matvec(3, h2, w + o.w3, c.h2.data(), c.out_pre.data());
  kernels::axpy(3, 1.0, w + o.b3, c.out_pre.data());

  GazePrediction pred;
  pred.angles.pitch = (kPi / 2.0) * std::tanh(c.out_pre[0]);
  pred.angles.yaw = c.out_pre[1];
  pred.log_sigma = c.out_pre[2];
  return pred;
}

void backward(const PredictorParams& params, const FeatureVector& features, int sample_index,
              bool mirrored, const ForwardCache& cache, const PredGrad& upstream,
              std::vector<double>& grad_accum) {
  if (grad_accum.size() != params.values.size()) {
    throw std::invalid_argument("backward: gradient buffer size mismatch");
  }
  if (params.mode == PredictorMode::direct) {
    check_direct_bounds(params, sample_index);
    const std::size_t s = direct_slot(sample_index, mirrored);
    grad_accum[s] += upstream.pitch;
    grad_accum[s + 1] += upstream.yaw;
    grad_accum[s + 2] += upstream.log_sigma;
    return;
  }
  (void)features;  // already folded into the cached input

  const MlpOffsets o = mlp_offsets(params.shape);
  const std::size_t in = FeatureVector::kWidth;
  const std::size_t h1 = static_cast<std::size_t>(params.shape.hidden1);
  const std::size_t h2 = static_cast<std::size_t>(params.shape.hidden2);
  const double* w = params.values.data();
  double* g = grad_accum.data();

  const double th0 = std::tanh(cache.out_pre[0]);
  std::array<double, 3> dout{upstream.pitch * (kPi / 2.0) * (1.0 - th0 * th0), upstream.yaw,
                             upstream.log_sigma};

  kernels::axpy(3, 1.0, dout.data(), g + o.b3);
  kernels::outer_accum(3, h2, g + o.w3, 1.0, dout.data(), cache.h2.data());

  std::vector<double> dh2(h2, 0.0);
  kernels::matvec_t(3, h2, w + o.w3, dout.data(), dh2.data());
  for (std::size_t i = 0; i < h2; ++i) dh2[i] *= 1.0 - cache.h2[i] * cache.h2[i];

  kernels::axpy(h2, 1.0, dh2.data(), g + o.b2);
  kernels::outer_accum(h2, h1, g + o.w2, 1.0, dh2.data(), cache.h1.data());

  std::vector<double> dh1(h1, 0.0);
  kernels::matvec_t(h2, h1, w + o.w2, dh2.data(), dh1.data());
  for (std::size_t i = 0; i < h1; ++i) dh1[i] *= 1.0 - cache.h1[i] * cache.h1[i];

  kernels::axpy(h1, 1.0, dh1.data(), g + o.b1);
  kernels::outer_accum(h1, in, g + o.w1, 1.0, dh1.data(), cache.input.data());
}

}  // namespace laeo
