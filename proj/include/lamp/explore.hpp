#pragma once

#include <vector>

#include "lamp/adam.hpp"
#include "lamp/encoders.hpp"
#include "lamp/env.hpp"
#include "lamp/mlp.hpp"

namespace lamp::explore {

// Both explorers train with the same optimizer settings.
inline AdamConfig explore_adam() {
  AdamConfig c;
  c.lr = real(3e-4);
  c.eps = real(1e-5);
  return c;
}

struct ExploreConfig {
  int ensemble_size = 10;
  std::size_t hidden = 64;  // two hidden layers of this width per member
  // When set, members also see the episode's language embedding, so novelty
  // can differ per instruction. Off by default: the bonus measures dynamics
  // surprise, which is language-independent.
  bool condition_on_language = false;
};

// Ensemble of one-step dynamics models (vis, action[, lang]) -> next vis.
// Novelty is how much the members disagree about the same query.
struct EnsembleModel {
  std::vector<MlpParams> members;
  std::vector<AdamState> opt;
  bool lang_conditioned = false;

  static EnsembleModel make(const ExploreConfig& cfg, Rng& rng);
  std::size_t in_dim() const { return members.front().in_dim(); }
};

// Random network distillation: a trainable predictor chases a frozen random
// target; error is high on states the predictor has not seen.
struct RndModel {
  static constexpr std::size_t kEmbedDim = 512;
  static constexpr std::size_t kHidden = 256;

  MlpParams target;  // never updated
  MlpParams predictor;
  AdamState opt;

  static RndModel make(Rng& rng);
};

// Replayed transitions, one row per step. `lang` may be empty (0 rows) unless
// the ensemble is language-conditioned.
struct ExploreBatch {
  Tensor vis;       // (B, kVisDim)
  Tensor action;    // (B, 4)
  Tensor next_vis;  // (B, kVisDim)
  Tensor lang;      // (B, kLangDim) or empty
};

// Mean over output dims of the population variance across member predictions.
// Zero iff all members predict identically.
real disagreement_bonus(const EnsembleModel& m, const encoders::VisFeature& vis,
                        const env::Action& action,
                        const encoders::LangEmbedding* lang = nullptr);

// Mean squared error between predictor and frozen target embeddings.
real rnd_bonus(const RndModel& m, const encoders::VisFeature& vis);

// One Adam step per member, each regressing onto the observed next feature.
// Returns the mean member loss. Throws TrainingError on a non-finite loss.
real update_explorers(EnsembleModel& m, const ExploreBatch& batch,
                      const AdamConfig& cfg = explore_adam());

// One Adam step of the predictor toward the frozen target. Returns the loss.
real update_explorers(RndModel& m, const ExploreBatch& batch,
                      const AdamConfig& cfg = explore_adam());

}  // namespace lamp::explore
