#include "lamp/adam.hpp"

#include <cmath>
#include <string>

namespace lamp {

AdamState AdamState::like(const MlpParams& p) {
  AdamState s;
  s.m = MlpGrads::zeros_like(p).layers;
  s.v = MlpGrads::zeros_like(p).layers;
  s.trainable.assign(p.layers.size(), 1);
  return s;
}

void AdamState::freeze_below(std::size_t first_trainable_layer) {
  for (std::size_t l = 0; l < trainable.size(); ++l)
    trainable[l] = l >= first_trainable_layer;
}

namespace {

void adam_update(Vec& p, const Vec& g, Vec& m, Vec& v, real lr_t, real beta1,
                 real beta2, real eps) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = beta1 * m[i] + (real(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (real(1) - beta2) * g[i] * g[i];
    p[i] -= lr_t * m[i] / (std::sqrt(v[i]) + eps);
  }
}

}  // namespace

void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s, const AdamConfig& cfg) {
  if (g.layers.size() != p.layers.size() || s.m.size() != p.layers.size())
    throw UsageError("adam_step: state/grads do not match params");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (!g.layers[l].w.all_finite() || !g.layers[l].b.all_finite())
      throw TrainingError("adam_step: non-finite gradient in layer " + std::to_string(l));
  }
  s.step += 1;
  // Classic bias correction folded into the step size. eps sits outside the
  // correction (the common implementation), so the first step with m=v=0 and
  // g != 0 moves each coordinate by ~lr * sign(g).
  const real t = static_cast<real>(s.step);
  const real lr_t = cfg.lr * std::sqrt(real(1) - std::pow(cfg.beta2, t)) /
                    (real(1) - std::pow(cfg.beta1, t));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (!s.trainable[l]) continue;
    adam_update(p.layers[l].w.data, g.layers[l].w.data, s.m[l].w.data, s.v[l].w.data,
                lr_t, cfg.beta1, cfg.beta2, cfg.eps);
    adam_update(p.layers[l].b.data, g.layers[l].b.data, s.m[l].b.data, s.v[l].b.data,
                lr_t, cfg.beta1, cfg.beta2, cfg.eps);
  }
  p.version += 1;
}

}  // namespace lamp
