#include "lamp/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace lamp::scorers {

using encoders::kLangDim;
using encoders::kVisDim;
using encoders::LangEmbedding;
using encoders::VisFeature;

std::string_view scorer_name(ScorerKind k) {
  switch (k) {
    case ScorerKind::r3m: return "r3m";
    case ScorerKind::zest: return "zest";
    case ScorerKind::video: return "video";
  }
  return "?";
}

std::optional<ScorerKind> scorer_from_name(std::string_view s) {
  if (s == "r3m") return ScorerKind::r3m;
  if (s == "zest") return ScorerKind::zest;
  if (s == "video") return ScorerKind::video;
  return std::nullopt;
}

void ScorerConfig::validate() const {
  if (noise_std < real(0)) throw ConfigError("scorer: noise_std must be >= 0");
  if (confidence_tau <= real(0) || confidence_tau >= real(1))
    throw ConfigError("scorer: confidence_tau must lie in (0,1)");
  if (dist_norm <= real(0) || lift_norm <= real(0))
    throw ConfigError("scorer: distance norms must be positive");
}

Scorer::Scorer(const ScorerConfig& cfg, encoders::ClassPrototypes protos,
               const encoders::EncoderConfig& enc_cfg)
    : cfg_(cfg), protos_(std::move(protos)), enc_cfg_(enc_cfg) {
  cfg_.validate();
  // Fixed projection, 1/sqrt(in) scaling: language deltas land in vis space
  // at O(1) magnitude.
  Rng rng(cfg_.projection_seed);
  proj_.resize(static_cast<std::size_t>(kVisDim) * kLangDim);
  const real scale = real(1) / std::sqrt(static_cast<real>(kLangDim));
  for (real& v : proj_) v = static_cast<real>(rng.normal()) * scale;
}

std::array<real, kVisDim> Scorer::project(const LangEmbedding& l) const {
  std::array<real, kVisDim> out{};
  for (int i = 0; i < kVisDim; ++i) {
    real s = 0;
    const real* row = &proj_[static_cast<std::size_t>(i) * kLangDim];
    for (int j = 0; j < kLangDim; ++j) s += row[j] * l.v[j];
    out[i] = s;
  }
  return out;
}

namespace {

real noise(const ScorerConfig& cfg, std::uint64_t seed) {
  if (cfg.noise_std == real(0)) return real(0);
  Rng rng(seed);
  return static_cast<real>(rng.normal(0.0, static_cast<double>(cfg.noise_std)));
}

// Shaped per-class progress read from one feature's class slot; absent
// classes count as zero progress.
real slot_progress(const VisFeature& f, int cls, const ScorerConfig& cfg) {
  const int base = encoders::slot_offset(cls);
  if (f.v[base] == real(0)) return real(0);
  const real rel_x = f.v[base + 1], rel_y = f.v[base + 2], rel_z = f.v[base + 3];
  const real rel_norm = std::sqrt(rel_x * rel_x + rel_y * rel_y + rel_z * rel_z);
  const real obj_z = f.v[2] + rel_z;  // ee_z + relative z
  return real(0.5) * (real(1) - clamp01(rel_norm / cfg.dist_norm)) +
         real(0.25) * f.v[base + 4] +
         real(0.25) * clamp01(obj_z / cfg.lift_norm);
}

}  // namespace

real Scorer::r3m_score(const VisFeature& f1, const VisFeature& fi,
                       const LangEmbedding& lang, std::uint64_t noise_seed) const {
  const real eta = noise(cfg_, noise_seed);
  int best = -1;
  real best_cos = real(-2);
  if (!lang.is_zero()) {
    for (int c = 0; c < env::kNumClasses; ++c) {
      real cosv = encoders::dot(lang, protos_.by_class[c]);
      if (cosv > best_cos) {  // strict: ties keep the lowest class index
        best_cos = cosv;
        best = c;
      }
    }
  }
  if (best < 0 || best_cos < cfg_.confidence_tau) return clamp01(real(0.5) + eta);

  const real delta = slot_progress(fi, best, cfg_) - slot_progress(f1, best, cfg_);
  return clamp01(real(0.5) + delta + eta);
}

real Scorer::zest_score(const VisFeature& f0, const VisFeature& fi,
                        const LangEmbedding& lang, const LangEmbedding& lang_inv,
                        std::uint64_t noise_seed) const {
  LangEmbedding delta;
  for (int j = 0; j < kLangDim; ++j) delta.v[j] = lang.v[j] - lang_inv.v[j];
  const auto lang_vis = project(delta);
  real s = 0;
  for (int i = 0; i < kVisDim; ++i) s += (fi.v[i] - f0.v[i]) * lang_vis[i];
  return s + noise(cfg_, noise_seed);
}

std::vector<int> video_frame_indices(int history_len) {
  if (history_len < 1) throw UsageError("video_score: empty history");
  std::vector<int> idx(8);
  for (int k = 1; k <= 8; ++k) {
    long long one_based = (static_cast<long long>(k) * history_len) / 8;
    idx[k - 1] = static_cast<int>(std::max(1ll, one_based)) - 1;
  }
  return idx;
}

real Scorer::video_score(std::span<const VisFeature> frames, const LangEmbedding& lang,
                         std::uint64_t noise_seed) const {
  const auto idx = video_frame_indices(static_cast<int>(frames.size()));
  VisFeature pooled;
  for (int i : idx)
    for (int d = 0; d < kVisDim; ++d) pooled.v[d] += frames[i].v[d];
  for (int d = 0; d < kVisDim; ++d) pooled.v[d] /= real(8);

  const auto lang_vis = project(lang);
  real s = 0;
  for (int d = 0; d < kVisDim; ++d) s += pooled.v[d] * lang_vis[d];
  return s + noise(cfg_, noise_seed);
}

RewardTrace label_episode(const Episode& ep, const prompts::Prompt& prompt,
                          const Scorer& scorer, int threads) {
  if (ep.features.size() < 2)
    throw UsageError("label_episode: episode needs at least one transition");
  const int n = static_cast<int>(ep.features.size()) - 1;

  RewardTrace trace;
  trace.prompt_id = prompt.prompt_id;
  trace.episode_seed = ep.episode_seed;
  trace.r_lamp.assign(n, real(0));
  trace.r_explore.assign(n, real(0));
  trace.r_mixed.assign(n, real(0));
  trace.r_task.assign(n, real(0));

  const ScorerKind kind = scorer.config().kind;
  const LangEmbedding lang = encoders::embed_language(prompt.text, scorer.encoder_config());
  LangEmbedding lang_inv;
  if (kind == ScorerKind::zest)
    lang_inv = encoders::embed_language(prompts::inverse_prompt(prompt).text,
                                        scorer.encoder_config());

  auto label_range = [&](int lo, int hi) {
    for (int t = lo; t < hi; ++t) {
      const std::uint64_t seed = mix_seed(mix_seed(ep.episode_seed, 0x5c04e5ull),
                                          static_cast<std::uint64_t>(t),
                                          static_cast<std::uint64_t>(kind));
      switch (kind) {
        case ScorerKind::r3m:
          trace.r_lamp[t] = scorer.r3m_score(ep.features[0], ep.features[t + 1], lang, seed);
          break;
        case ScorerKind::zest:
          trace.r_lamp[t] =
              scorer.zest_score(ep.features[0], ep.features[t + 1], lang, lang_inv, seed);
          break;
        case ScorerKind::video:
          trace.r_lamp[t] = scorer.video_score(
              std::span<const VisFeature>(ep.features.data(), static_cast<std::size_t>(t) + 2),
              lang, seed);
          break;
      }
    }
  };

  if (threads <= 1) {
    label_range(0, n);
  } else {
    // Noise seeds are per-step, so any chunking yields the same trace.
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      int lo = w * chunk, hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(label_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return trace;
}

void MixConfig::validate() const {
  if (alpha < real(0) || alpha > real(1))
    throw ConfigError("mix: alpha must lie in [0,1]");
  if (momentum <= real(0) || momentum >= real(1))
    throw ConfigError("mix: momentum must lie in (0,1)");
}

void RunningScale::update(const Vec& r) {
  if (r.empty()) return;
  real mean_sq = 0;
  for (real v : r) mean_sq += v * v;
  mean_sq /= static_cast<real>(r.size());
  m2 = momentum * m2 + (real(1) - momentum) * mean_sq;
  updates += 1;
}

real RunningScale::scale() const {
  if (updates == 0) return real(1);
  // Same bias correction as Adam's second moment.
  const real debiased = m2 / (real(1) - std::pow(momentum, static_cast<real>(updates)));
  return std::sqrt(debiased);
}

RewardMixer::RewardMixer(const MixConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  explore_.momentum = cfg_.momentum;
  lamp_.momentum = cfg_.momentum;
}

Vec RewardMixer::mix(const Vec& r_explore, const Vec& r_lamp) {
  if (r_explore.size() != r_lamp.size())
    throw UsageError("mix: channel lengths differ");
  if (cfg_.normalize_explore) explore_.update(r_explore);
  if (cfg_.normalize_lamp) lamp_.update(r_lamp);

  Vec out(r_explore.size());
  const real se = cfg_.normalize_explore ? explore_.scale() + cfg_.eps : real(1);
  const real sl = cfg_.normalize_lamp ? lamp_.scale() + cfg_.eps : real(1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const real e = cfg_.normalize_explore ? r_explore[i] / se : r_explore[i];
    const real l = cfg_.normalize_lamp ? r_lamp[i] / sl : r_lamp[i];
    out[i] = cfg_.alpha * e + (real(1) - cfg_.alpha) * l;
  }
  return out;
}

void RewardMixer::restore(const RunningScale& explore, const RunningScale& lamp) {
  explore_ = explore;
  lamp_ = lamp;
}

}  // namespace lamp::scorers
