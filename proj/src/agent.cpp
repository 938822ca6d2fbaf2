#include "lamp/agent.hpp"

#include <cmath>
#include <numbers>

namespace lamp::agent {

namespace {

constexpr std::size_t kVis = static_cast<std::size_t>(encoders::kVisDim);
constexpr std::size_t kLang = static_cast<std::size_t>(encoders::kLangDim);
constexpr std::size_t kAct = 4;
constexpr std::size_t kPolicyIn = kVis + kLang;
constexpr std::size_t kCriticIn = kVis + kLang + kAct;

// log-std = kStdMid + kStdHalf * tanh(raw) spans [-5, 2].
constexpr real kStdMid = real(-1.5);
constexpr real kStdHalf = real(3.5);
// Keeps log(1 - tanh^2) finite when the squash saturates.
constexpr real kSquashEps = real(1e-12);

Tensor policy_input(const AgentBatch& b, bool next) {
  const Tensor& f = next ? b.next_feat : b.feat;
  std::size_t rows = f.rows();
  Tensor x = Tensor::zeros({rows, kPolicyIn});
  for (std::size_t r = 0; r < rows; ++r) {
    real* row = &x.data[r * kPolicyIn];
    for (std::size_t i = 0; i < kVis; ++i) row[i] = f.data[r * kVis + i];
    for (std::size_t i = 0; i < kLang; ++i) row[kVis + i] = b.lang.data[r * kLang + i];
  }
  return x;
}

Tensor critic_input(const Tensor& feat, const Tensor& lang, const Tensor& action) {
  std::size_t rows = feat.rows();
  Tensor x = Tensor::zeros({rows, kCriticIn});
  for (std::size_t r = 0; r < rows; ++r) {
    real* row = &x.data[r * kCriticIn];
    for (std::size_t i = 0; i < kVis; ++i) row[i] = feat.data[r * kVis + i];
    for (std::size_t i = 0; i < kLang; ++i) row[kVis + i] = lang.data[r * kLang + i];
    for (std::size_t i = 0; i < kAct; ++i)
      row[kVis + kLang + i] = action.data[r * kAct + i];
  }
  return x;
}

void check_batch(const AgentBatch& b) {
  std::size_t rows = b.rows();
  if (rows == 0) throw UsageError("agent update: empty batch");
  if (b.lang.rows() != rows || b.action.rows() != rows || b.next_feat.rows() != rows ||
      b.reward.size() != rows || b.done.size() != rows)
    throw UsageError("agent update: batch row counts disagree");
  if (b.feat.cols() != kVis || b.lang.cols() != kLang || b.action.cols() != kAct ||
      b.next_feat.cols() != kVis)
    throw UsageError("agent update: batch column layout");
}

}  // namespace

Actor Actor::make(Rng& rng, std::size_t hidden) {
  Actor a;
  a.net = MlpParams::make({kPolicyIn, hidden, hidden, 2 * kAct}, Act::elu, Act::identity, rng);
  a.opt = AdamState::like(a.net);
  return a;
}

Critics Critics::make(Rng& rng, std::size_t hidden) {
  Critics c;
  c.q1 = MlpParams::make({kCriticIn, hidden, hidden, 1}, Act::elu, Act::identity, rng);
  c.q2 = MlpParams::make({kCriticIn, hidden, hidden, 1}, Act::elu, Act::identity, rng);
  c.t1 = c.q1;
  c.t2 = c.q2;
  c.opt1 = AdamState::like(c.q1);
  c.opt2 = AdamState::like(c.q2);
  return c;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  data_.reserve(capacity < 4096 ? capacity : 4096);
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[head_] = t;  // overwrite the oldest
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw UsageError("replay index out of range");
  return data_[(head_ + i) % data_.size()];
}

AgentBatch ReplayBuffer::sample(std::size_t n, std::uint64_t seed,
                                RewardChannel channel) const {
  if (n == 0) throw UsageError("replay sample: n must be positive");
  if (data_.size() < n) throw UsageError("replay sample: not enough transitions");
  Rng rng(seed);
  AgentBatch b;
  b.feat = Tensor::zeros({n, kVis});
  b.lang = Tensor::zeros({n, kLang});
  b.action = Tensor::zeros({n, kAct});
  b.next_feat = Tensor::zeros({n, kVis});
  b.reward = Tensor::zeros({n});
  b.done = Tensor::zeros({n});
  for (std::size_t r = 0; r < n; ++r) {
    const Transition& t = at(rng.uniform_int(data_.size()));
    for (std::size_t i = 0; i < kVis; ++i) {
      b.feat.data[r * kVis + i] = t.feature.v[i];
      b.next_feat.data[r * kVis + i] = t.next_feature.v[i];
    }
    for (std::size_t i = 0; i < kLang; ++i) b.lang.data[r * kLang + i] = t.lang.v[i];
    for (std::size_t i = 0; i < kAct; ++i) b.action.data[r * kAct + i] = t.action.v[i];
    switch (channel) {
      case RewardChannel::lamp: b.reward.data[r] = t.r_lamp; break;
      case RewardChannel::explore: b.reward.data[r] = t.r_explore; break;
      case RewardChannel::mixed: b.reward.data[r] = t.r_mixed; break;
      case RewardChannel::task: b.reward.data[r] = t.r_task; break;
    }
    b.done.data[r] = t.done ? real(1) : real(0);
  }
  return b;
}

env::Action act(const Actor& actor, const encoders::VisFeature& feature,
                const encoders::LangEmbedding& lang, ActMode mode, std::uint64_t seed) {
  Tensor x = Tensor::zeros({kPolicyIn});
  for (std::size_t i = 0; i < kVis; ++i) x.data[i] = feature.v[i];
  for (std::size_t i = 0; i < kLang; ++i) x.data[kVis + i] = lang.v[i];
  Tensor out = mlp_forward(actor.net, x);

  env::Action a;
  Rng rng(seed);
  for (std::size_t i = 0; i < kAct; ++i) {
    real mean = out.data[i];
    if (mode == ActMode::deterministic) {
      a.v[i] = std::tanh(mean);
    } else {
      real log_std = kStdMid + kStdHalf * std::tanh(out.data[kAct + i]);
      a.v[i] = std::tanh(mean + std::exp(log_std) * real(rng.normal()));
    }
  }
  return a;
}

real min_q(const Critics& critics, const encoders::VisFeature& feature,
           const encoders::LangEmbedding& lang, const env::Action& action) {
  Tensor x = Tensor::zeros({kCriticIn});
  for (std::size_t i = 0; i < kVis; ++i) x.data[i] = feature.v[i];
  for (std::size_t i = 0; i < kLang; ++i) x.data[kVis + i] = lang.v[i];
  for (std::size_t i = 0; i < kAct; ++i) x.data[kVis + kLang + i] = action.v[i];
  real q1 = mlp_forward(critics.q1, x).data[0];
  real q2 = mlp_forward(critics.q2, x).data[0];
  return q1 < q2 ? q1 : q2;
}

CriticGrads critic_grads(const Critics& critics, const Actor& actor,
                         const AgentBatch& batch, real gamma, std::uint64_t seed) {
  check_batch(batch);
  const std::size_t rows = batch.rows();

  // Fresh squashed policy actions at the next features; target side only, so
  // nothing here keeps a tape.
  Tensor next_pol = mlp_forward(actor.net, policy_input(batch, /*next=*/true));
  Tensor next_act = Tensor::zeros({rows, kAct});
  Rng rng(mix_seed(seed, 0x7a26e7ull));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < kAct; ++i) {
      real mean = next_pol.data[r * 2 * kAct + i];
      real log_std = kStdMid + kStdHalf * std::tanh(next_pol.data[r * 2 * kAct + kAct + i]);
      next_act.data[r * kAct + i] = std::tanh(mean + std::exp(log_std) * real(rng.normal()));
    }
  }

  Tensor xt = critic_input(batch.next_feat, batch.lang, next_act);
  Tensor tq1 = mlp_forward(critics.t1, xt);
  Tensor tq2 = mlp_forward(critics.t2, xt);

  Tensor y = Tensor::zeros({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    real boot = tq1.data[r] < tq2.data[r] ? tq1.data[r] : tq2.data[r];
    y.data[r] = batch.reward.data[r] + gamma * (real(1) - batch.done.data[r]) * boot;
    if (!is_finite(y.data[r])) throw TrainingError("critic TD target is not finite");
  }

  Tensor x = critic_input(batch.feat, batch.lang, batch.action);
  MlpTape tape1, tape2;
  Tensor q1 = mlp_forward(critics.q1, x, &tape1);
  Tensor q2 = mlp_forward(critics.q2, x, &tape2);

  CriticGrads out;
  Tensor g1 = Tensor::zeros(q1.shape);
  Tensor g2 = Tensor::zeros(q2.shape);
  const real inv = real(1) / static_cast<real>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    real d1 = q1.data[r] - y.data[r];
    real d2 = q2.data[r] - y.data[r];
    out.loss += (d1 * d1 + d2 * d2) * inv;
    g1.data[r] = real(2) * d1 * inv;
    g2.data[r] = real(2) * d2 * inv;
  }
  if (!is_finite(out.loss)) throw TrainingError("critic loss is not finite");
  out.g1 = mlp_backward(critics.q1, tape1, g1).grads;
  out.g2 = mlp_backward(critics.q2, tape2, g2).grads;
  return out;
}

real critic_update(Critics& critics, const Actor& actor, const AgentBatch& batch,
                   real gamma, std::uint64_t seed, const AdamConfig& cfg) {
  CriticGrads g = critic_grads(critics, actor, batch, gamma, seed);
  adam_step(critics.q1, g.g1, critics.opt1, cfg);
  adam_step(critics.q2, g.g2, critics.opt2, cfg);
  ++critics.updates;
  if (critics.target_period > 0 &&
      critics.updates % static_cast<std::uint64_t>(critics.target_period) == 0) {
    critics.t1 = critics.q1;
    critics.t2 = critics.q2;
  }
  return g.loss;
}

std::pair<real, MlpGrads> actor_grads(const Actor& actor, const Critics& critics,
                                      const AgentBatch& batch, real entropy_coef,
                                      std::uint64_t seed) {
  check_batch(batch);
  const std::size_t rows = batch.rows();
  const real inv = real(1) / static_cast<real>(rows);

  MlpTape pol_tape;
  Tensor pol = mlp_forward(actor.net, policy_input(batch, /*next=*/false), &pol_tape);

  // Reparameterized sample per row: a = tanh(mean + std * eps), eps fixed.
  Tensor eps = Tensor::zeros({rows, kAct});
  Rng rng(mix_seed(seed, 0xac7093ull));
  for (real& e : eps.data) e = real(rng.normal());

  Tensor action = Tensor::zeros({rows, kAct});
  Tensor tanh_u = Tensor::zeros({rows, kAct});
  Tensor sigma = Tensor::zeros({rows, kAct});
  real entropy_sum = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < kAct; ++i) {
      real mean = pol.data[r * 2 * kAct + i];
      real log_std = kStdMid + kStdHalf * std::tanh(pol.data[r * 2 * kAct + kAct + i]);
      real sd = std::exp(log_std);
      real u = mean + sd * eps.data[r * kAct + i];
      real a = std::tanh(u);
      action.data[r * kAct + i] = a;
      tanh_u.data[r * kAct + i] = a;
      sigma.data[r * kAct + i] = sd;
      // -log pi of the sample: Gaussian part plus the tanh volume correction.
      entropy_sum += log_std + real(0.5) * std::log(real(2) * std::numbers::pi_v<real>) +
                     real(0.5) * eps.data[r * kAct + i] * eps.data[r * kAct + i] +
                     std::log(real(1) - a * a + kSquashEps);
    }
  }

  MlpTape q1_tape, q2_tape;
  Tensor xc = critic_input(batch.feat, batch.lang, action);
  Tensor q1 = mlp_forward(critics.q1, xc, &q1_tape);
  Tensor q2 = mlp_forward(critics.q2, xc, &q2_tape);

  real loss = 0;
  Tensor gq1 = Tensor::zeros(q1.shape);
  Tensor gq2 = Tensor::zeros(q2.shape);
  for (std::size_t r = 0; r < rows; ++r) {
    if (q1.data[r] <= q2.data[r]) {
      loss -= q1.data[r] * inv;
      gq1.data[r] = -inv;
    } else {
      loss -= q2.data[r] * inv;
      gq2.data[r] = -inv;
    }
  }
  loss -= entropy_coef * entropy_sum * inv;
  if (!is_finite(loss)) throw TrainingError("actor loss is not finite");

  // d(loss)/d(action) through whichever critic carried each row.
  Tensor gin1 = mlp_backward(critics.q1, q1_tape, gq1).grad_input;
  Tensor gin2 = mlp_backward(critics.q2, q2_tape, gq2).grad_input;

  Tensor gpol = Tensor::zeros(pol.shape);
  const real ec = entropy_coef * inv;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < kAct; ++i) {
      real a = tanh_u.data[r * kAct + i];
      real one_m_a2 = real(1) - a * a;
      real qg = gin1.data[r * kCriticIn + kVis + kLang + i] +
                gin2.data[r * kCriticIn + kVis + kLang + i];
      real sd_eps = sigma.data[r * kAct + i] * eps.data[r * kAct + i];
      // d(-c*H)/du with H holding log(1 - a^2 + eps) exactly.
      real dsquash_du = real(-2) * a * one_m_a2 / (one_m_a2 + kSquashEps);
      real g_u = qg * one_m_a2 - ec * dsquash_du;
      real g_mean = g_u;
      real g_logstd = g_u * sd_eps - ec;
      real raw = pol.data[r * 2 * kAct + kAct + i];
      real th = std::tanh(raw);
      gpol.data[r * 2 * kAct + i] = g_mean;
      gpol.data[r * 2 * kAct + kAct + i] = g_logstd * kStdHalf * (real(1) - th * th);
    }
  }
  return {loss, mlp_backward(actor.net, pol_tape, gpol).grads};
}

real actor_update(Actor& actor, const Critics& critics, const AgentBatch& batch,
                  real entropy_coef, std::uint64_t seed, const AdamConfig& cfg) {
  auto [loss, grads] = actor_grads(actor, critics, batch, entropy_coef, seed);
  adam_step(actor.net, grads, actor.opt, cfg);
  return loss;
}

}  // namespace lamp::agent
