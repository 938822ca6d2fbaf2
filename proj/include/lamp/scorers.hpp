#pragma once

#include <span>
#include <vector>

#include "lamp/common.hpp"
#include "lamp/encoders.hpp"
#include "lamp/prompts.hpp"

namespace lamp::scorers {

enum class ScorerKind { r3m, zest, video };

std::string_view scorer_name(ScorerKind k);
std::optional<ScorerKind> scorer_from_name(std::string_view s);

struct ScorerConfig {
  ScorerKind kind = ScorerKind::r3m;
  real noise_std = real(0.05);       // sigma
  real confidence_tau = real(0.2);   // below this max prototype cosine: neutral
  real dist_norm = real(1.7320508075688772);
  real lift_norm = real(0.3);
  std::uint64_t projection_seed = 0x9a7e5c02e5ull;  // pinned lang->vis projection
  void validate() const;
};

// A finished rollout as the scorers see it: features[0] is the reset frame,
// features[t+1] the frame after actions[t].
struct Episode {
  std::uint64_t episode_seed = 0;
  std::vector<encoders::VisFeature> features;
  std::vector<env::Action> actions;
};

struct RewardTrace {
  Vec r_lamp, r_explore, r_mixed, r_task;  // all sized to episode length
  int prompt_id = 0;
  std::uint64_t episode_seed = 0;
};

class Scorer {
 public:
  Scorer(const ScorerConfig& cfg, encoders::ClassPrototypes protos,
         const encoders::EncoderConfig& enc_cfg = {});

  // Progress-delta score in [0,1]; 0.5 is "no progress yet" and also the
  // low-confidence output for prompts matching no class prototype.
  real r3m_score(const encoders::VisFeature& f1, const encoders::VisFeature& fi,
                 const encoders::LangEmbedding& lang, std::uint64_t noise_seed) const;

  // (fi - f0) . P(lang - lang_inv) + noise. Unbounded.
  real zest_score(const encoders::VisFeature& f0, const encoders::VisFeature& fi,
                  const encoders::LangEmbedding& lang,
                  const encoders::LangEmbedding& lang_inv,
                  std::uint64_t noise_seed) const;

  // Mean-pool of 8 evenly spaced history frames dotted with P(lang) + noise.
  real video_score(std::span<const encoders::VisFeature> frames,
                   const encoders::LangEmbedding& lang,
                   std::uint64_t noise_seed) const;

  const ScorerConfig& config() const { return cfg_; }
  const encoders::EncoderConfig& encoder_config() const { return enc_cfg_; }
  const encoders::ClassPrototypes& prototypes() const { return protos_; }

  // Projects a language embedding into visual-feature space with the pinned
  // seeded matrix (exposed for tests).
  std::array<real, encoders::kVisDim> project(const encoders::LangEmbedding& l) const;

 private:
  ScorerConfig cfg_;
  encoders::ClassPrototypes protos_;
  encoders::EncoderConfig enc_cfg_;
  std::vector<real> proj_;  // kVisDim x kLangDim, row-major
};

// 0-based frame picks for a history of length i: max(1, floor(k*i/8)) - 1.
std::vector<int> video_frame_indices(int history_len);

// Labels every step of the episode; noise seeds derive from
// (episode_seed, step, scorer kind) so any labeling order gives identical
// traces. threads <= 1 labels inline; otherwise steps fan out in chunks.
RewardTrace label_episode(const Episode& ep, const prompts::Prompt& prompt,
                          const Scorer& scorer, int threads = 1);

struct MixConfig {
  real alpha = real(0.9);
  bool normalize_explore = true;
  bool normalize_lamp = true;
  real momentum = real(0.99);
  real eps = real(1e-8);
  void validate() const;  // alpha outside [0,1] -> ConfigError
};

// Debiased EMA of the mean square; divides rewards by sqrt of it.
struct RunningScale {
  real m2 = 0;
  std::uint64_t updates = 0;
  real momentum = real(0.99);
  void update(const Vec& r);
  real scale() const;  // 1 before any update
};

class RewardMixer {
 public:
  explicit RewardMixer(const MixConfig& cfg);
  // Updates the per-channel scales, then returns
  // alpha * explore_norm + (1-alpha) * lamp_norm.
  Vec mix(const Vec& r_explore, const Vec& r_lamp);

  const RunningScale& explore_scale() const { return explore_; }
  const RunningScale& lamp_scale() const { return lamp_; }
  void restore(const RunningScale& explore, const RunningScale& lamp);

 private:
  MixConfig cfg_;
  RunningScale explore_, lamp_;
};

}  // namespace lamp::scorers
