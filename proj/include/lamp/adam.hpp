#pragma once

#include <cstdint>
#include <vector>

#include "lamp/mlp.hpp"

namespace lamp {

struct AdamConfig {
  real lr = real(1e-4);
  real beta1 = real(0.9);
  real beta2 = real(0.999);
  real eps = real(1e-8);
};

// Bias-corrected Adam over one MlpParams. Layers can be frozen individually
// (linear-probe finetuning trains only the head).
struct AdamState {
  std::vector<LayerGrads> m;  // first moments, same shapes as params
  std::vector<LayerGrads> v;  // second moments
  std::vector<char> trainable;
  std::uint64_t step = 0;

  static AdamState like(const MlpParams& p);
  void freeze_below(std::size_t first_trainable_layer);
};

// One update. Throws TrainingError naming the layer if a gradient is not
// finite. Zero gradients leave the (never-updated) parameters untouched.
void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s, const AdamConfig& cfg);

}  // namespace lamp
