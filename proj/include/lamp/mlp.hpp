#pragma once

#include <cstdint>
#include <vector>

#include "lamp/common.hpp"
#include "lamp/tensor.hpp"

namespace lamp {

enum class Act { identity, elu, tanh };

// Fixed-topology MLP. Weights are (in x out) so the forward pass streams rows
// of W against a batch row of X — the hot loop vectorizes without transposes.
struct Layer {
  Tensor w;  // (in, out)
  Tensor b;  // (out)
  Act act = Act::identity;
};

struct MlpParams {
  std::vector<Layer> layers;
  // Bumped by every optimizer step; tapes record it so a tape taken before an
  // update cannot silently back-propagate through the new weights.
  std::uint64_t version = 0;

  // dims = {in, h1, ..., out}; hidden layers get `hidden`, last layer `out`.
  static MlpParams make(const std::vector<std::size_t>& dims, Act hidden, Act out,
                        Rng& rng);

  std::size_t in_dim() const { return layers.front().w.shape[0]; }
  std::size_t out_dim() const { return layers.back().w.shape[1]; }
  std::size_t param_count() const;
};

struct MlpTape {
  const MlpParams* params = nullptr;
  std::uint64_t version = 0;
  std::vector<Tensor> inputs;   // per layer: (B, in)
  std::vector<Tensor> preact;   // per layer: (B, out), before activation
};

struct LayerGrads {
  Tensor w;
  Tensor b;
};

struct MlpGrads {
  std::vector<LayerGrads> layers;
  static MlpGrads zeros_like(const MlpParams& p);
  void accumulate(const MlpGrads& o, real scale = real(1));
  bool all_finite() const;
};

// input: (B, in) or (in) for a single row. Returns (B, out) / (out) to match.
// Pass a tape to record activations for backward.
Tensor mlp_forward(const MlpParams& p, const Tensor& input, MlpTape* tape = nullptr);

struct BackwardResult {
  MlpGrads grads;
  Tensor grad_input;  // same shape as the forward input
};

// grad_output: (B, out). The tape must come from the same params at the same
// version, otherwise UsageError.
BackwardResult mlp_backward(const MlpParams& p, const MlpTape& tape,
                            const Tensor& grad_output);

}  // namespace lamp
