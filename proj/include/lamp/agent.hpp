#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lamp/adam.hpp"
#include "lamp/encoders.hpp"
#include "lamp/env.hpp"
#include "lamp/mlp.hpp"

namespace lamp::agent {

inline AdamConfig agent_adam() {
  AdamConfig c;
  c.lr = real(1e-4);
  c.eps = real(1e-5);
  return c;
}

constexpr real kDiscount = real(0.99);
constexpr real kEntropyCoef = real(1e-4);

// Policy head: concat(vis, lang) -> (mean, raw) of a 4-dim Gaussian. The
// sampled pre-activation is squashed by tanh so actions live in (-1,1)^4.
// log-std = -1.5 + 3.5*tanh(raw) keeps it inside [-5, 2] differentiably.
struct Actor {
  MlpParams net;
  AdamState opt;

  static Actor make(Rng& rng, std::size_t hidden = 64);
};

// Twin Q networks over concat(vis, lang, action) with slow target copies.
// Targets are refreshed by full copy every `target_period` critic updates.
struct Critics {
  MlpParams q1, q2;
  MlpParams t1, t2;  // updated only by the copy rule
  AdamState opt1, opt2;
  std::uint64_t updates = 0;
  int target_period = 100;

  static Critics make(Rng& rng, std::size_t hidden = 64);
};

struct Transition {
  encoders::VisFeature feature;
  env::Action action;
  encoders::VisFeature next_feature;
  encoders::LangEmbedding lang;
  real r_lamp = 0;
  real r_explore = 0;
  real r_mixed = 0;
  real r_task = 0;
  bool done = false;
};

enum class RewardChannel { lamp, explore, mixed, task };

// Column-packed sample ready for the trainers.
struct AgentBatch {
  Tensor feat;       // (B, kVisDim)
  Tensor lang;       // (B, kLangDim)
  Tensor action;     // (B, 4)
  Tensor next_feat;  // (B, kVisDim)
  Tensor reward;     // (B)
  Tensor done;       // (B), 0 or 1
  std::size_t rows() const { return feat.rows(); }
};

// FIFO ring with uniform seeded sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100'000);

  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest retained transition.
  const Transition& at(std::size_t i) const;

  // Throws UsageError when fewer than n transitions are stored.
  AgentBatch sample(std::size_t n, std::uint64_t seed, RewardChannel channel) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of the oldest element once full
  std::vector<Transition> data_;
};

enum class ActMode { stochastic, deterministic };

// Deterministic mode returns tanh(mean); stochastic mode draws one seeded
// reparameterized sample. Same inputs and seed give the same action.
env::Action act(const Actor& actor, const encoders::VisFeature& feature,
                const encoders::LangEmbedding& lang, ActMode mode, std::uint64_t seed);

// min(Q1, Q2) of the live critics; the evaluation-side action score.
real min_q(const Critics& critics, const encoders::VisFeature& feature,
           const encoders::LangEmbedding& lang, const env::Action& action);

// TD(0) toward r + gamma * (1-done) * min(target Q) at a fresh policy action
// drawn for the next feature. One Adam step per critic; targets re-copied
// every `target_period` calls. Returns the summed twin MSE.
real critic_update(Critics& critics, const Actor& actor, const AgentBatch& batch,
                   real gamma = kDiscount, std::uint64_t seed = 0,
                   const AdamConfig& cfg = agent_adam());

// One Adam step maximizing min-Q of the reparameterized action plus
// entropy_coef times the entropy estimate (-log pi of the sample). The
// critics supply gradients but are not modified. Returns the minimized loss.
real actor_update(Actor& actor, const Critics& critics, const AgentBatch& batch,
                  real entropy_coef = kEntropyCoef, std::uint64_t seed = 0,
                  const AdamConfig& cfg = agent_adam());

// Loss and gradients the updates above apply; exposed so tests can hold them
// against finite differences.
std::pair<real, MlpGrads> actor_grads(const Actor& actor, const Critics& critics,
                                      const AgentBatch& batch, real entropy_coef,
                                      std::uint64_t seed);
struct CriticGrads {
  real loss = 0;
  MlpGrads g1, g2;
};
CriticGrads critic_grads(const Critics& critics, const Actor& actor,
                         const AgentBatch& batch, real gamma, std::uint64_t seed);

}  // namespace lamp::agent
