#include "lamp/mlp.hpp"

#include <cmath>
#include <cstring>

namespace lamp {
namespace {

inline real act_apply(Act a, real x) {
  switch (a) {
    case Act::identity: return x;
    case Act::elu: return x > real(0) ? x : std::exp(x) - real(1);
    case Act::tanh: return std::tanh(x);
  }
  return x;
}

// Derivative from the pre-activation value.
inline real act_deriv(Act a, real pre) {
  switch (a) {
    case Act::identity: return real(1);
    case Act::elu: return pre > real(0) ? real(1) : std::exp(pre);
    case Act::tanh: {
      real t = std::tanh(pre);
      return real(1) - t * t;
    }
  }
  return real(1);
}

}  // namespace

MlpParams MlpParams::make(const std::vector<std::size_t>& dims, Act hidden, Act out,
                          Rng& rng) {
  if (dims.size() < 2) throw UsageError("MlpParams::make: need at least in/out dims");
  for (std::size_t d : dims)
    if (d == 0) throw UsageError("MlpParams::make: zero-width layer");
  MlpParams p;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.w = Tensor::zeros({dims[l], dims[l + 1]});
    layer.b = Tensor::zeros({dims[l + 1]});
    layer.act = (l + 2 == dims.size()) ? out : hidden;
    // Scaled-normal init; biases start at zero.
    real scale = real(1) / std::sqrt(static_cast<real>(dims[l]));
    for (real& v : layer.w.data) v = static_cast<real>(rng.normal(0.0, 1.0)) * scale;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.w.size() + l.b.size();
  return n;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
  MlpGrads g;
  for (const Layer& l : p.layers) {
    LayerGrads lg;
    lg.w = Tensor::zeros(l.w.shape);
    lg.b = Tensor::zeros(l.b.shape);
    g.layers.push_back(std::move(lg));
  }
  return g;
}

void MlpGrads::accumulate(const MlpGrads& o, real scale) {
  if (layers.size() != o.layers.size()) throw UsageError("MlpGrads::accumulate: shape mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].w.size(); ++i)
      layers[l].w.data[i] += scale * o.layers[l].w.data[i];
    for (std::size_t i = 0; i < layers[l].b.size(); ++i)
      layers[l].b.data[i] += scale * o.layers[l].b.data[i];
  }
}

bool MlpGrads::all_finite() const {
  for (const LayerGrads& l : layers)
    if (!l.w.all_finite() || !l.b.all_finite()) return false;
  return true;
}

Tensor mlp_forward(const MlpParams& p, const Tensor& input, MlpTape* tape) {
  bool vector_in = input.shape.size() == 1;
  Tensor x = input;
  if (vector_in) x.shape = {1, input.shape[0]};
  if (x.shape.size() != 2 || x.shape[1] != p.in_dim())
    throw UsageError("mlp_forward: input width does not match first layer");

  if (tape) {
    tape->params = &p;
    tape->version = p.version;
    tape->inputs.clear();
    tape->preact.clear();
  }

  const std::size_t B = x.shape[0];
  for (const Layer& layer : p.layers) {
    const std::size_t in = layer.w.shape[0], out = layer.w.shape[1];
    Tensor y = Tensor::zeros({B, out});
    // y = x W + b, streaming rows of W so the inner loop is contiguous.
    for (std::size_t bi = 0; bi < B; ++bi) {
      real* yrow = &y.data[bi * out];
      const real* xrow = &x.data[bi * in];
      for (std::size_t k = 0; k < in; ++k) {
        const real xv = xrow[k];
        const real* wrow = &layer.w.data[k * out];
        for (std::size_t j = 0; j < out; ++j) yrow[j] += xv * wrow[j];
      }
      for (std::size_t j = 0; j < out; ++j) yrow[j] += layer.b.data[j];
    }
    if (tape) {
      tape->inputs.push_back(std::move(x));
      tape->preact.push_back(y);
    }
    if (layer.act != Act::identity)
      for (real& v : y.data) v = act_apply(layer.act, v);
    x = std::move(y);
  }
  if (vector_in) x.shape = {x.size()};
  return x;
}

BackwardResult mlp_backward(const MlpParams& p, const MlpTape& tape,
                            const Tensor& grad_output) {
  if (tape.params != &p || tape.version != p.version)
    throw UsageError("mlp_backward: stale tape (params changed since forward)");
  if (tape.inputs.size() != p.layers.size())
    throw UsageError("mlp_backward: tape was recorded without activations");

  bool vector_grad = grad_output.shape.size() == 1;
  Tensor g = grad_output;
  if (vector_grad) g.shape = {1, grad_output.shape[0]};
  const std::size_t B = g.shape[0];
  if (g.shape[1] != p.out_dim() || B != tape.inputs[0].shape[0])
    throw UsageError("mlp_backward: grad_output shape mismatch");

  BackwardResult res;
  res.grads = MlpGrads::zeros_like(p);

  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const Layer& layer = p.layers[li];
    const Tensor& xin = tape.inputs[li];
    const Tensor& pre = tape.preact[li];
    const std::size_t in = layer.w.shape[0], out = layer.w.shape[1];

    // dPre = g * act'(pre)
    Tensor dpre = g;
    if (layer.act != Act::identity)
      for (std::size_t i = 0; i < dpre.size(); ++i)
        dpre.data[i] *= act_deriv(layer.act, pre.data[i]);

    LayerGrads& lg = res.grads.layers[li];
    Tensor dx = Tensor::zeros({B, in});
    for (std::size_t bi = 0; bi < B; ++bi) {
      const real* drow = &dpre.data[bi * out];
      const real* xrow = &xin.data[bi * in];
      real* dxrow = &dx.data[bi * in];
      for (std::size_t j = 0; j < out; ++j) lg.b.data[j] += drow[j];
      // dW += x^T dPre ; dX = dPre W^T. Both keep the stride-1 axis innermost.
      for (std::size_t k = 0; k < in; ++k) {
        const real xv = xrow[k];
        const real* wrow = &layer.w.data[k * out];
        real* gwrow = &lg.w.data[k * out];
        real acc = real(0);
        for (std::size_t j = 0; j < out; ++j) {
          gwrow[j] += xv * drow[j];
          acc += drow[j] * wrow[j];
        }
        dxrow[k] = acc;
      }
    }
    g = std::move(dx);
  }
  if (vector_grad) g.shape = {g.size()};
  res.grad_input = std::move(g);
  return res;
}

}  // namespace lamp
