#include "lamp/explore.hpp"

#include <cmath>

namespace lamp::explore {

namespace {

constexpr std::size_t kVis = static_cast<std::size_t>(encoders::kVisDim);
constexpr std::size_t kAct = 4;
constexpr std::size_t kLang = static_cast<std::size_t>(encoders::kLangDim);

// One query row in member input layout: vis | action | [lang].
Tensor query_row(const encoders::VisFeature& vis, const env::Action& action,
                 const encoders::LangEmbedding* lang, bool conditioned) {
  std::size_t in = kVis + kAct + (conditioned ? kLang : 0);
  Tensor x = Tensor::zeros({in});
  for (std::size_t i = 0; i < kVis; ++i) x.data[i] = vis.v[i];
  for (std::size_t i = 0; i < kAct; ++i) x.data[kVis + i] = action.v[i];
  if (conditioned) {
    if (lang == nullptr) throw UsageError("disagreement_bonus: ensemble wants a language embedding");
    for (std::size_t i = 0; i < kLang; ++i) x.data[kVis + kAct + i] = lang->v[i];
  }
  return x;
}

// Batched member input from a replay batch; validates row counts agree.
Tensor batch_input(const ExploreBatch& b, bool conditioned) {
  std::size_t rows = b.vis.rows();
  if (rows == 0 || b.action.rows() != rows || b.next_vis.rows() != rows)
    throw UsageError("update_explorers: batch row counts disagree");
  if (b.vis.cols() != kVis || b.action.cols() != kAct || b.next_vis.cols() != kVis)
    throw UsageError("update_explorers: batch column layout");
  if (conditioned && (b.lang.rows() != rows || b.lang.cols() != kLang))
    throw UsageError("update_explorers: ensemble wants language rows");
  std::size_t in = kVis + kAct + (conditioned ? kLang : 0);
  Tensor x = Tensor::zeros({rows, in});
  for (std::size_t r = 0; r < rows; ++r) {
    real* row = &x.data[r * in];
    const real* v = &b.vis.data[r * kVis];
    for (std::size_t i = 0; i < kVis; ++i) row[i] = v[i];
    const real* a = &b.action.data[r * kAct];
    for (std::size_t i = 0; i < kAct; ++i) row[kVis + i] = a[i];
    if (conditioned) {
      const real* l = &b.lang.data[r * kLang];
      for (std::size_t i = 0; i < kLang; ++i) row[kVis + kAct + i] = l[i];
    }
  }
  return x;
}

// MSE mean over all entries; grad_output sized for d(mse)/d(pred).
real mse_and_grad(const Tensor& pred, const Tensor& target, Tensor& grad_out) {
  grad_out = Tensor::zeros(pred.shape);
  real loss = 0;
  real inv = real(1) / static_cast<real>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    real d = pred.data[i] - target.data[i];
    loss += d * d * inv;
    grad_out.data[i] = real(2) * d * inv;
  }
  return loss;
}

}  // namespace

EnsembleModel EnsembleModel::make(const ExploreConfig& cfg, Rng& rng) {
  if (cfg.ensemble_size < 1) throw ConfigError("ensemble_size must be positive");
  EnsembleModel m;
  m.lang_conditioned = cfg.condition_on_language;
  std::size_t in = kVis + kAct + (cfg.condition_on_language ? kLang : 0);
  for (int k = 0; k < cfg.ensemble_size; ++k) {
    m.members.push_back(
        MlpParams::make({in, cfg.hidden, cfg.hidden, kVis}, Act::elu, Act::identity, rng));
    m.opt.push_back(AdamState::like(m.members.back()));
  }
  return m;
}

RndModel RndModel::make(Rng& rng) {
  RndModel m;
  m.target = MlpParams::make({kVis, kHidden, kEmbedDim}, Act::elu, Act::identity, rng);
  m.predictor = MlpParams::make({kVis, kHidden, kEmbedDim}, Act::elu, Act::identity, rng);
  m.opt = AdamState::like(m.predictor);
  return m;
}

real disagreement_bonus(const EnsembleModel& m, const encoders::VisFeature& vis,
                        const env::Action& action, const encoders::LangEmbedding* lang) {
  Tensor x = query_row(vis, action, lang, m.lang_conditioned);
  const std::size_t n = m.members.size();
  std::vector<Tensor> preds;
  preds.reserve(n);
  for (const MlpParams& p : m.members) preds.push_back(mlp_forward(p, x));

  // Population variance per output dim across members, averaged over dims.
  real bonus = 0;
  for (std::size_t d = 0; d < kVis; ++d) {
    real mean = 0;
    for (const Tensor& p : preds) mean += p.data[d];
    mean /= static_cast<real>(n);
    real var = 0;
    for (const Tensor& p : preds) {
      real c = p.data[d] - mean;
      var += c * c;
    }
    bonus += var / static_cast<real>(n);
  }
  return bonus / static_cast<real>(kVis);
}

real rnd_bonus(const RndModel& m, const encoders::VisFeature& vis) {
  Tensor x = Tensor::zeros({kVis});
  for (std::size_t i = 0; i < kVis; ++i) x.data[i] = vis.v[i];
  Tensor t = mlp_forward(m.target, x);
  Tensor p = mlp_forward(m.predictor, x);
  real err = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    real d = p.data[i] - t.data[i];
    err += d * d;
  }
  return err / static_cast<real>(t.size());
}

real update_explorers(EnsembleModel& m, const ExploreBatch& batch, const AdamConfig& cfg) {
  Tensor x = batch_input(batch, m.lang_conditioned);
  real total = 0;
  Tensor grad_out;
  for (std::size_t k = 0; k < m.members.size(); ++k) {
    MlpTape tape;
    Tensor pred = mlp_forward(m.members[k], x, &tape);
    real loss = mse_and_grad(pred, batch.next_vis, grad_out);
    if (!is_finite(loss)) throw TrainingError("ensemble member loss is not finite");
    BackwardResult back = mlp_backward(m.members[k], tape, grad_out);
    adam_step(m.members[k], back.grads, m.opt[k], cfg);
    total += loss;
  }
  return total / static_cast<real>(m.members.size());
}

real update_explorers(RndModel& m, const ExploreBatch& batch, const AdamConfig& cfg) {
  if (batch.vis.rows() == 0 || batch.vis.cols() != kVis)
    throw UsageError("update_explorers: batch vis layout");
  Tensor target = mlp_forward(m.target, batch.vis);
  MlpTape tape;
  Tensor pred = mlp_forward(m.predictor, batch.vis, &tape);
  Tensor grad_out;
  real loss = mse_and_grad(pred, target, grad_out);
  if (!is_finite(loss)) throw TrainingError("rnd predictor loss is not finite");
  BackwardResult back = mlp_backward(m.predictor, tape, grad_out);
  adam_step(m.predictor, back.grads, m.opt, cfg);
  return loss;
}

}  // namespace lamp::explore
