#include "lamp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "lamp/checkpoint.hpp"

namespace lamp::pipeline {

namespace {

// Seed stream tags: every consumer derives from (cfg.seed, tag[, index]) so
// adding a stream never shifts an existing one.
constexpr std::uint64_t kTagInit = 0x101;
constexpr std::uint64_t kTagDataset = 0x102;
constexpr std::uint64_t kTagPrompt = 0x103;
constexpr std::uint64_t kTagEpisode = 0x104;
constexpr std::uint64_t kTagAction = 0x105;
constexpr std::uint64_t kTagBatch = 0x106;
constexpr std::uint64_t kTagCritic = 0x107;
constexpr std::uint64_t kTagActor = 0x108;
constexpr std::uint64_t kTagHead = 0x109;
constexpr std::uint64_t kTagSelect = 0x10a;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

real vec_mean(const Vec& v) {
  if (v.empty()) return 0;
  real s = 0;
  for (real x : v) s += x;
  return s / static_cast<real>(v.size());
}

explore::ExploreBatch to_explore(const agent::AgentBatch& b, bool lang_conditioned) {
  explore::ExploreBatch eb;
  eb.vis = b.feat;
  eb.action = b.action;
  eb.next_vis = b.next_feat;
  if (lang_conditioned) eb.lang = b.lang;
  return eb;
}

// Training state shared by both loops; channels differ per mode.
struct Learner {
  const RunConfig& cfg;
  Checkpoint& ck;
  agent::ReplayBuffer buffer;
  agent::RewardChannel channel;
  // Pretraining remixes rewards at sample time (see remix below); the mixer
  // owns the normalizer state and is only read here.
  const scorers::RewardMixer* mixer = nullptr;
  AdamConfig critic_opt = agent::agent_adam();
  std::int64_t updates_done = 0;

  // Novelty is a moving target: a transition's bonus decays as the ensemble
  // learns it, so the value stored at collection time goes stale and early
  // wandering keeps looking as novel as a genuinely rare grasp. Query the
  // current explorer for each sampled row instead, normalize by the mixer's
  // current scales, and recombine with the (frozen, never stale) lamp score.
  void remix(agent::AgentBatch& b) const {
    const std::size_t rows = b.rows();
    const real se = cfg.mix.normalize_explore
                        ? mixer->explore_scale().scale() + cfg.mix.eps
                        : real(1);
    const real sl = cfg.mix.normalize_lamp ? mixer->lamp_scale().scale() + cfg.mix.eps
                                           : real(1);
    for (std::size_t i = 0; i < rows; ++i) {
      encoders::VisFeature vis, next_vis;
      env::Action act;
      encoders::LangEmbedding lang;
      for (int d = 0; d < encoders::kVisDim; ++d) {
        vis.v[static_cast<std::size_t>(d)] = b.feat(i, static_cast<std::size_t>(d));
        next_vis.v[static_cast<std::size_t>(d)] =
            b.next_feat(i, static_cast<std::size_t>(d));
      }
      for (std::size_t d = 0; d < 4; ++d) act.v[d] = b.action(i, d);
      real bonus = 0;
      if (cfg.explorer == ExplorerKind::p2e) {
        const encoders::LangEmbedding* lp = nullptr;
        if (ck.ensemble.lang_conditioned) {
          for (int d = 0; d < encoders::kLangDim; ++d)
            lang.v[static_cast<std::size_t>(d)] = b.lang(i, static_cast<std::size_t>(d));
          lp = &lang;
        }
        bonus = explore::disagreement_bonus(ck.ensemble, vis, act, lp);
      } else {
        bonus = explore::rnd_bonus(ck.rnd, next_vis);
      }
      // b.reward arrived holding the raw lamp channel.
      b.reward.data[i] =
          cfg.mix.alpha * (bonus / se) + (real(1) - cfg.mix.alpha) * (b.reward.data[i] / sl);
    }
  }

  void updates_to(std::int64_t target) {
    for (; updates_done < target; ++updates_done) {
      const auto u = static_cast<std::uint64_t>(updates_done);
      auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size),
                                 mix_seed(cfg.seed, kTagBatch, u), channel);
      if (mixer) remix(batch);
      agent::critic_update(ck.critics, ck.actor, batch, cfg.gamma,
                           mix_seed(cfg.seed, kTagCritic, u), critic_opt);
      agent::actor_update(ck.actor, ck.critics, batch, cfg.entropy_coef,
                          mix_seed(cfg.seed, kTagActor, u));
      if (updates_done % cfg.explorer_every == 0) {
        if (cfg.explorer == ExplorerKind::p2e)
          explore::update_explorers(ck.ensemble, to_explore(batch, ck.ensemble.lang_conditioned));
        else
          explore::update_explorers(ck.rnd, to_explore(batch, false));
      }
    }
  }
};

void dump_diagnostic(const TrainingError& e, std::uint64_t hash, std::int64_t step,
                     int episode) {
  std::cerr << "{\"error\":\"non-finite loss\",\"what\":\"" << e.what()
            << "\",\"step\":" << step << ",\"episode\":" << episode
            << ",\"config_hash\":\"" << hex64(hash) << "\"}" << std::endl;
}

EvalResult actor_probe(const agent::Actor& actor, const encoders::LangEmbedding& lang,
                       const env::TaskSpec& task, const env::EnvConfig& env_cfg,
                       const encoders::EncoderConfig& enc, int n,
                       std::uint64_t seed_base) {
  Policy pi = [&](const env::SceneState& s) {
    return agent::act(actor, encoders::encode_scene(s, enc), lang,
                      agent::ActMode::deterministic, 0);
  };
  return evaluate_policy(pi, task, n, env_cfg, seed_base);
}

void note_probe(RunSummary& s, const EvalResult& p, std::int64_t step) {
  if (s.steps_to_success < 0 && p.success_rate >= kSuccessBar) s.steps_to_success = step;
  if (s.steps_to_return < 0 && p.mean_return >= kReturnBar) s.steps_to_return = step;
}

// --- checkpoint packing -----------------------------------------------------

void pack_net(NamedTensors& out, const std::string& prefix, const MlpParams& p) {
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    out.add(prefix + "/" + std::to_string(i) + "/w", p.layers[i].w);
    out.add(prefix + "/" + std::to_string(i) + "/b", p.layers[i].b);
  }
}

void unpack_net(const NamedTensors& in, const std::string& prefix, MlpParams& p) {
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const std::string wn = prefix + "/" + std::to_string(i) + "/w";
    const std::string bn = prefix + "/" + std::to_string(i) + "/b";
    const Tensor& w = in.require(wn);
    const Tensor& b = in.require(bn);
    if (w.shape != p.layers[i].w.shape || b.shape != p.layers[i].b.shape)
      throw ConfigError("checkpoint tensor " + wn + " does not match the architecture");
    p.layers[i].w = w;
    p.layers[i].b = b;
  }
}

// u64 fields ride as two exact 32-bit halves; doubles only hold 53 bits.
void push_u64(Vec& v, std::uint64_t x) {
  v.push_back(static_cast<real>(x >> 32));
  v.push_back(static_cast<real>(x & 0xffffffffull));
}

std::uint64_t pop_u64(const Tensor& t, std::size_t& i) {
  const auto hi = static_cast<std::uint64_t>(t.data[i++]);
  const auto lo = static_cast<std::uint64_t>(t.data[i++]);
  return (hi << 32) | lo;
}

constexpr std::size_t kMetaLen = 16;

}  // namespace

std::string_view mode_name(RunMode m) {
  return m == RunMode::pretrain ? "pretrain" : "finetune";
}

std::string_view explorer_name(ExplorerKind k) {
  return k == ExplorerKind::p2e ? "p2e" : "rnd";
}

std::optional<ExplorerKind> explorer_from_name(std::string_view s) {
  if (s == "p2e") return ExplorerKind::p2e;
  if (s == "rnd") return ExplorerKind::rnd;
  return std::nullopt;
}

void RunConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (warmup < 0) throw ConfigError("warmup must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (explorer_every < 1) throw ConfigError("explorer_every must be >= 1");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (replay_capacity < 1) throw ConfigError("replay_capacity must be >= 1");
  if (dataset_size < 1) throw ConfigError("dataset_size must be >= 1");
  if (eval_every_episodes < 1) throw ConfigError("eval_every_episodes must be >= 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(gamma >= 0 && gamma < 1)) throw ConfigError("gamma must be in [0, 1)");
  if (!(entropy_coef >= 0)) throw ConfigError("entropy_coef must be >= 0");
  if (!(critic_head_lr > 0)) throw ConfigError("critic_head_lr must be > 0");
  if (!(enc.texture_noise_std >= 0)) throw ConfigError("texture_noise_std must be >= 0");
  prompts::style_from_int(static_cast<int>(prompt_style));
  scorer.validate();
  mix.validate();
  env.validate();
}

std::uint64_t config_hash(const RunConfig& c) {
  std::ostringstream s;
  s << "mode=" << mode_name(c.mode) << ";seed=" << c.seed << ";steps=" << c.steps
    << ";scorer=" << scorers::scorer_name(c.scorer.kind)
    << ";sigma=" << format_real(c.scorer.noise_std)
    << ";tau=" << format_real(c.scorer.confidence_tau)
    << ";dist=" << format_real(c.scorer.dist_norm)
    << ";lift=" << format_real(c.scorer.lift_norm) << ";proj=" << c.scorer.projection_seed
    << ";explorer=" << explorer_name(c.explorer)
    << ";style=" << static_cast<int>(c.prompt_style) << ";dataset=" << c.dataset_size
    << ";alpha=" << format_real(c.mix.alpha) << ";norm_e=" << c.mix.normalize_explore
    << ";norm_l=" << c.mix.normalize_lamp << ";mom=" << format_real(c.mix.momentum)
    << ";mix_eps=" << format_real(c.mix.eps) << ";horizon=" << c.env.horizon
    << ";objs=" << c.env.min_objects << ".." << c.env.max_objects
    << ";step_scale=" << format_real(c.env.step_scale)
    << ";grasp=" << format_real(c.env.grasp_radius)
    << ";liftz=" << format_real(c.env.lift_height)
    << ";pair=" << format_real(c.env.min_pairwise)
    << ";texp=" << format_real(c.env.default_texture_prob)
    << ";texn=" << c.env.texture_count << ";req="
    << (c.env.required_class ? env::class_name(*c.env.required_class) : "none")
    << ";salt=" << c.enc.hash_salt
    << ";vis_noise=" << format_real(c.enc.texture_noise_std) << ";warmup=" << c.warmup
    << ";batch=" << c.batch_size << ";expevery=" << c.explorer_every
    << ";hidden=" << c.hidden << ";cap=" << c.replay_capacity
    << ";evalevery=" << c.eval_every_episodes << ";evaln=" << c.eval_episodes
    << ";gamma=" << format_real(c.gamma) << ";entropy=" << format_real(c.entropy_coef)
    << ";head_lr=" << format_real(c.critic_head_lr);
  return fnv1a64(s.str());
}

Checkpoint fresh_checkpoint(const RunConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, kTagInit));
  Checkpoint c;
  c.actor = agent::Actor::make(rng, cfg.hidden);
  c.critics = agent::Critics::make(rng, cfg.hidden);
  c.ensemble = explore::EnsembleModel::make({}, rng);
  c.rnd = explore::RndModel::make(rng);
  c.config_hash = config_hash(cfg);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  NamedTensors t;
  pack_net(t, "actor", ckpt.actor.net);
  pack_net(t, "critic_q1", ckpt.critics.q1);
  pack_net(t, "critic_q2", ckpt.critics.q2);
  pack_net(t, "critic_t1", ckpt.critics.t1);
  pack_net(t, "critic_t2", ckpt.critics.t2);
  for (std::size_t i = 0; i < ckpt.ensemble.members.size(); ++i)
    pack_net(t, "ensemble/" + std::to_string(i), ckpt.ensemble.members[i]);
  pack_net(t, "rnd_target", ckpt.rnd.target);
  pack_net(t, "rnd_predictor", ckpt.rnd.predictor);

  Vec meta;
  push_u64(meta, ckpt.config_hash);
  push_u64(meta, ckpt.dataset_hash);
  push_u64(meta, static_cast<std::uint64_t>(ckpt.step));
  push_u64(meta, ckpt.critics.updates);
  meta.push_back(ckpt.explore_scale.m2);
  push_u64(meta, ckpt.explore_scale.updates);
  meta.push_back(ckpt.explore_scale.momentum);
  meta.push_back(ckpt.lamp_scale.m2);
  push_u64(meta, ckpt.lamp_scale.updates);
  meta.push_back(ckpt.lamp_scale.momentum);
  t.add("meta", Tensor::from({meta.size()}, meta));
  save_blob(path, t);

  std::ofstream side(path.string() + ".json", std::ios::binary);
  side << "{\"step\":" << ckpt.step << ",\"config_hash\":\"" << hex64(ckpt.config_hash)
       << "\",\"dataset_hash\":\"" << hex64(ckpt.dataset_hash) << "\"}\n";
  if (!side) throw IoError("cannot write " + path.string() + ".json");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  NamedTensors t = load_blob(path);
  const Tensor& a0 = t.require("actor/0/w");
  if (a0.shape.size() != 2) throw ConfigError("checkpoint: actor/0/w is not a matrix");
  const std::size_t hidden = a0.shape[1];

  std::size_t members = 0;
  while (t.find("ensemble/" + std::to_string(members) + "/0/w") != nullptr) ++members;
  if (members == 0) throw ConfigError("checkpoint: no ensemble members");
  const Tensor& e0 = t.require("ensemble/0/0/w");
  explore::ExploreConfig ec;
  ec.ensemble_size = static_cast<int>(members);
  ec.hidden = e0.shape[1];
  ec.condition_on_language =
      e0.shape[0] == static_cast<std::size_t>(encoders::kVisDim + 4 + encoders::kLangDim);

  Rng dummy(0);
  Checkpoint c;
  c.actor = agent::Actor::make(dummy, hidden);
  c.critics = agent::Critics::make(dummy, hidden);
  c.ensemble = explore::EnsembleModel::make(ec, dummy);
  c.rnd = explore::RndModel::make(dummy);

  unpack_net(t, "actor", c.actor.net);
  unpack_net(t, "critic_q1", c.critics.q1);
  unpack_net(t, "critic_q2", c.critics.q2);
  unpack_net(t, "critic_t1", c.critics.t1);
  unpack_net(t, "critic_t2", c.critics.t2);
  for (std::size_t i = 0; i < c.ensemble.members.size(); ++i)
    unpack_net(t, "ensemble/" + std::to_string(i), c.ensemble.members[i]);
  unpack_net(t, "rnd_target", c.rnd.target);
  unpack_net(t, "rnd_predictor", c.rnd.predictor);

  const Tensor& meta = t.require("meta");
  if (meta.data.size() != kMetaLen)
    throw ConfigError("checkpoint: meta block has wrong length");
  std::size_t i = 0;
  c.config_hash = pop_u64(meta, i);
  c.dataset_hash = pop_u64(meta, i);
  c.step = static_cast<std::int64_t>(pop_u64(meta, i));
  c.critics.updates = pop_u64(meta, i);
  c.explore_scale.m2 = meta.data[i++];
  c.explore_scale.updates = pop_u64(meta, i);
  c.explore_scale.momentum = meta.data[i++];
  c.lamp_scale.m2 = meta.data[i++];
  c.lamp_scale.updates = pop_u64(meta, i);
  c.lamp_scale.momentum = meta.data[i++];
  return c;
}

std::string RunMetrics::csv() const {
  std::string out = "# config_hash=" + hex64(config_hash) + " alpha=" + format_real(alpha) + "\n";
  out +=
      "step,episode,mode,task,prompt_style,alpha,scorer,r_task_mean,r_lamp_mean,"
      "r_explore_mean,success_rate,wall_ms\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + std::to_string(r.episode) + ",";
    out += std::string(mode_name(r.mode)) + "," + r.task + ",";
    out += std::to_string(r.prompt_style) + "," + format_real(r.alpha) + "," + r.scorer + ",";
    out += format_real(r.r_task_mean) + ",";
    if (r.lamp_channels)
      out += format_real(r.r_lamp_mean) + "," + format_real(r.r_explore_mean);
    else
      out += ",";  // finetune learns from the task reward alone
    out += "," + format_real(r.success_rate) + "," + format_real(r.wall_ms) + "\n";
  }
  return out;
}

void RunMetrics::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  f << csv();
  if (!f) throw IoError("cannot write " + path.string());
}

std::string RunMetrics::summary_json() const {
  std::ostringstream s;
  s << "{\"seed\":" << summary.seed << ",\"config_hash\":\"" << hex64(config_hash)
    << "\",\"alpha\":" << format_real(alpha)
    << ",\"final_return\":" << format_real(summary.final_return)
    << ",\"final_success\":" << format_real(summary.final_success)
    << ",\"steps_to_success\":" << summary.steps_to_success
    << ",\"steps_to_return\":" << summary.steps_to_return
    << ",\"learning_task_reads\":" << learning_task_reads << ",\"rows\":" << rows.size()
    << "}\n";
  return s.str();
}

void RunMetrics::write_summary(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  f << summary_json();
  if (!f) throw IoError("cannot write " + path.string());
}

EvalResult evaluate_policy(const Policy& policy, const env::TaskSpec& task,
                           int n_episodes, const env::EnvConfig& env_cfg,
                           std::uint64_t seed_base) {
  if (n_episodes <= 0) throw UsageError("evaluate: n_episodes must be positive");
  env_cfg.validate();
  real ret = 0;
  int successes = 0;
  for (int e = 0; e < n_episodes; ++e) {
    auto scene = env::reset(env_cfg, mix_seed(seed_base, static_cast<std::uint64_t>(e)));
    real sum = 0;
    int steps = 0;
    bool ok = false;
    bool done = false;
    while (!done) {
      auto sr = env::step(env_cfg, scene, policy(scene));
      scene = sr.state;
      done = sr.done;
      const auto tr = env::task_reward(env_cfg, scene, task);
      sum += tr.reward;
      ok = ok || tr.success;
      ++steps;
    }
    ret += sum / static_cast<real>(steps);
    if (ok) ++successes;
  }
  return {ret / static_cast<real>(n_episodes),
          static_cast<real>(successes) / static_cast<real>(n_episodes)};
}

EvalResult evaluate(const Checkpoint& ckpt, const env::TaskSpec& task,
                    const prompts::Prompt& prompt, int n_episodes, const RunConfig& cfg,
                    std::uint64_t seed_base) {
  auto env_cfg = cfg.env;
  env_cfg.required_class = task.target_class;
  const auto lang = encoders::embed_language(prompt.text, cfg.enc);
  return actor_probe(ckpt.actor, lang, task, env_cfg, cfg.enc, n_episodes, seed_base);
}

prompts::Prompt select_instruction(const Checkpoint& ckpt,
                                   std::span<const prompts::Prompt> candidates,
                                   const env::TaskSpec& task, int episodes_per_candidate,
                                   const RunConfig& cfg) {
  if (candidates.empty()) throw UsageError("select_instruction: no candidates");
  if (episodes_per_candidate <= 0)
    throw UsageError("select_instruction: episodes_per_candidate must be positive");
  const std::uint64_t seed_base = mix_seed(kProbeSeedBase, kTagSelect);
  std::size_t best = 0;
  real best_mean = -std::numeric_limits<real>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto r =
        evaluate(ckpt, task, candidates[i], episodes_per_candidate, cfg, seed_base);
    const bool wins = r.mean_return > best_mean ||
                      (r.mean_return == best_mean &&
                       candidates[i].prompt_id < candidates[best].prompt_id);
    if (wins) {
      best = i;
      best_mean = r.mean_return;
    }
  }
  return candidates[best];
}

prompts::Prompt default_task_prompt(const env::TaskSpec& task,
                                    const prompts::Lexicons& lex) {
  // Route through the style-1 generator so the surface form cannot drift
  // from what pretraining datasets contain.
  auto ds = prompts::generate_dataset(prompts::PromptStyle::simple, lex, 0, 1);
  env::SceneState scene;
  scene.objects.push_back({task.target_class, {real(0.5), real(0.5), real(0)}, false});
  Rng rng(0);
  return prompts::substitute_noun(ds.prompts.front(), scene, prompts::PromptStyle::simple,
                                  rng, lex);
}

PretrainResult pretrain(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  cfg.mode = RunMode::pretrain;
  cfg.env.mode = env::EnvMode::pretrain;
  cfg.validate();

  const auto& lex = prompts::builtin_lexicons();
  const auto dataset = prompts::generate_dataset(
      cfg.prompt_style, lex, mix_seed(cfg.seed, kTagDataset), cfg.dataset_size);
  const auto protos = encoders::class_prototypes(lex, cfg.enc);
  const scorers::Scorer scorer(cfg.scorer, protos, cfg.enc);
  scorers::RewardMixer mixer(cfg.mix);

  PretrainResult out{fresh_checkpoint(cfg), {}};
  Checkpoint& ck = out.checkpoint;
  ck.dataset_hash = prompts::dataset_hash(dataset);
  RunMetrics& m = out.metrics;
  m.config_hash = ck.config_hash;
  m.alpha = cfg.mix.alpha;
  m.summary.seed = cfg.seed;

  // Held-out probe: shaped pick_up on a guaranteed mug, same seeds every time.
  env::TaskSpec probe_task;
  probe_task.task_id = env::TaskId::pick_up;
  probe_task.target_class = kProbeClass;
  auto probe_env = cfg.env;
  probe_env.required_class = kProbeClass;
  const auto probe_prompt = default_task_prompt(probe_task, lex);
  const auto probe_lang = encoders::embed_language(probe_prompt.text, cfg.enc);
  EvalResult last_probe{};

  // Sample the raw lamp channel; remix() swaps in fresh exploration bonuses.
  Learner learner{cfg, ck, agent::ReplayBuffer(cfg.replay_capacity),
                  agent::RewardChannel::lamp, &mixer};
  Rng prompt_rng(mix_seed(cfg.seed, kTagPrompt));
  std::int64_t step_count = 0;
  int episode = 0;

  while (step_count < cfg.steps) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ep_seed = mix_seed(cfg.seed, kTagEpisode, static_cast<std::uint64_t>(episode));
    auto scene = env::reset(cfg.env, ep_seed);
    const auto& tmpl = dataset.prompts[prompt_rng.uniform_int(dataset.prompts.size())];
    const auto prompt = prompts::substitute_noun(tmpl, scene, cfg.prompt_style, prompt_rng, lex);
    const auto lang = encoders::embed_language(prompt.text, cfg.enc);

    scorers::Episode ep;
    ep.episode_seed = ep_seed;
    ep.features.push_back(encoders::encode_scene(scene, cfg.enc));
    bool done = false;
    for (int t = 0; !done; ++t) {
      const auto a = agent::act(ck.actor, ep.features.back(), lang,
                                agent::ActMode::stochastic,
                                mix_seed(ep_seed, kTagAction, static_cast<std::uint64_t>(t)));
      auto sr = env::step(cfg.env, scene, a);
      scene = sr.state;
      done = sr.done;
      ep.actions.push_back(a);
      ep.features.push_back(encoders::encode_scene(scene, cfg.enc));
    }
    const auto T = static_cast<int>(ep.actions.size());

    const auto trace = scorers::label_episode(ep, prompt, scorer, cfg.threads);
    Vec r_explore(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      r_explore[static_cast<std::size_t>(i)] =
          cfg.explorer == ExplorerKind::p2e
              ? explore::disagreement_bonus(
                    ck.ensemble, ep.features[static_cast<std::size_t>(i)], ep.actions[static_cast<std::size_t>(i)],
                    ck.ensemble.lang_conditioned ? &lang : nullptr)
              : explore::rnd_bonus(ck.rnd, ep.features[static_cast<std::size_t>(i) + 1]);
    }
    const Vec r_mixed = mixer.mix(r_explore, trace.r_lamp);

    for (int i = 0; i < T; ++i) {
      const auto k = static_cast<std::size_t>(i);
      agent::Transition tr;
      tr.feature = ep.features[k];
      tr.action = ep.actions[k];
      tr.next_feature = ep.features[k + 1];
      tr.lang = lang;
      tr.r_lamp = trace.r_lamp[k];
      tr.r_explore = r_explore[k];
      tr.r_mixed = r_mixed[k];
      tr.r_task = 0;  // learning never touches the scripted reward
      // Episodes end by horizon truncation, never by environment termination,
      // so targets bootstrap through the cut; done=1 here would alias states
      // by a time-to-horizon the features cannot see.
      tr.done = false;
      learner.buffer.push(tr);
    }
    step_count += T;

    try {
      learner.updates_to(std::max<std::int64_t>(0, step_count - cfg.warmup));
    } catch (const TrainingError& e) {
      dump_diagnostic(e, m.config_hash, step_count, episode);
      throw;
    }

    episode += 1;
    if (episode % cfg.eval_every_episodes == 0) {
      last_probe = actor_probe(ck.actor, probe_lang, probe_task, probe_env, cfg.enc,
                               cfg.eval_episodes, kProbeSeedBase);
      note_probe(m.summary, last_probe, step_count);
    }

    MetricsRow row;
    row.step = step_count;
    row.episode = episode - 1;
    row.mode = RunMode::pretrain;
    row.task = std::string(env::task_name(probe_task.task_id));
    row.prompt_style = static_cast<int>(cfg.prompt_style);
    row.alpha = cfg.mix.alpha;
    row.scorer = std::string(scorers::scorer_name(cfg.scorer.kind));
    row.r_task_mean = last_probe.mean_return;
    row.r_lamp_mean = vec_mean(trace.r_lamp);
    row.r_explore_mean = vec_mean(r_explore);
    row.success_rate = last_probe.success_rate;
    if (cfg.record_wall_time)
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    m.rows.push_back(row);
  }

  // Final probe so the summary always reflects the returned parameters.
  last_probe = actor_probe(ck.actor, probe_lang, probe_task, probe_env, cfg.enc,
                           cfg.eval_episodes, kProbeSeedBase);
  note_probe(m.summary, last_probe, step_count);
  m.summary.final_return = last_probe.mean_return;
  m.summary.final_success = last_probe.success_rate;

  ck.step = step_count;
  ck.explore_scale = mixer.explore_scale();
  ck.lamp_scale = mixer.lamp_scale();
  return out;
}

FinetuneResult finetune(const Checkpoint& start, const env::TaskSpec& task,
                        const prompts::Prompt& prompt, const RunConfig& cfg_in,
                        const FinetuneOptions& opts) {
  RunConfig cfg = cfg_in;
  cfg.mode = RunMode::finetune;
  cfg.env.mode = env::EnvMode::finetune;
  cfg.env.required_class = task.target_class;
  cfg.validate();

  FinetuneResult out{start, {}};
  Checkpoint& ck = out.checkpoint;
  if (ck.actor.net.layers.empty() ||
      ck.actor.net.layers.front().w.shape[1] != cfg.hidden ||
      ck.critics.q1.layers.front().w.shape[1] != cfg.hidden)
    throw ConfigError("finetune: checkpoint hidden width does not match config");

  // Checkpoints carry parameters, not optimizer moments: start Adam fresh.
  ck.actor.opt = AdamState::like(ck.actor.net);
  ck.critics.opt1 = AdamState::like(ck.critics.q1);
  ck.critics.opt2 = AdamState::like(ck.critics.q2);
  ck.critics.updates = 0;
  for (std::size_t i = 0; i < ck.ensemble.members.size(); ++i)
    ck.ensemble.opt[i] = AdamState::like(ck.ensemble.members[i]);
  ck.rnd.opt = AdamState::like(ck.rnd.predictor);

  if (opts.freeze_critic_trunk) {
    // Linear probe: fresh final layers, trunk weights never touched again.
    Rng head_rng(mix_seed(cfg.seed, kTagHead));
    for (MlpParams* q : {&ck.critics.q1, &ck.critics.q2}) {
      std::vector<std::size_t> dims{q->layers.front().w.shape[0]};
      for (const auto& l : q->layers) dims.push_back(l.w.shape[1]);
      auto fresh = MlpParams::make(dims, q->layers.front().act, q->layers.back().act, head_rng);
      q->layers.back() = fresh.layers.back();
      ++q->version;
    }
    ck.critics.t1 = ck.critics.q1;
    ck.critics.t2 = ck.critics.q2;
    ck.critics.opt1 = AdamState::like(ck.critics.q1);
    ck.critics.opt2 = AdamState::like(ck.critics.q2);
    ck.critics.opt1.freeze_below(ck.critics.q1.layers.size() - 1);
    ck.critics.opt2.freeze_below(ck.critics.q2.layers.size() - 1);
  }

  RunMetrics& m = out.metrics;
  m.config_hash = config_hash(cfg);
  m.alpha = cfg.mix.alpha;
  m.summary.seed = cfg.seed;
  ck.config_hash = m.config_hash;

  const auto lang = encoders::embed_language(prompt.text, cfg.enc);
  EvalResult last_probe{};

  Learner learner{cfg, ck, agent::ReplayBuffer(cfg.replay_capacity),
                  agent::RewardChannel::task};
  if (opts.freeze_critic_trunk) learner.critic_opt.lr = cfg.critic_head_lr;
  std::int64_t step_count = 0;
  int episode = 0;

  while (step_count < cfg.steps) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ep_seed = mix_seed(cfg.seed, kTagEpisode, static_cast<std::uint64_t>(episode));
    auto scene = env::reset(cfg.env, ep_seed);
    auto feature = encoders::encode_scene(scene, cfg.enc);
    real reward_sum = 0;
    int T = 0;
    bool done = false;
    for (int t = 0; !done; ++t) {
      const auto a = agent::act(ck.actor, feature, lang, agent::ActMode::stochastic,
                                mix_seed(ep_seed, kTagAction, static_cast<std::uint64_t>(t)));
      auto sr = env::step(cfg.env, scene, a);
      scene = sr.state;
      done = sr.done;
      const auto next = encoders::encode_scene(scene, cfg.enc);
      const auto tr = env::task_reward(cfg.env, scene, task);
      m.learning_task_reads += 1;

      agent::Transition row;
      row.feature = feature;
      row.action = a;
      row.next_feature = next;
      row.lang = lang;
      row.r_task = tr.reward;
      row.done = false;  // horizon truncation, not termination: bootstrap through
      learner.buffer.push(row);

      feature = next;
      reward_sum += tr.reward;
      ++T;
    }
    step_count += T;

    try {
      learner.updates_to(std::max<std::int64_t>(0, step_count - cfg.warmup));
    } catch (const TrainingError& e) {
      dump_diagnostic(e, m.config_hash, step_count, episode);
      throw;
    }

    episode += 1;
    if (episode % cfg.eval_every_episodes == 0) {
      last_probe = actor_probe(ck.actor, lang, task, cfg.env, cfg.enc,
                               cfg.eval_episodes, kProbeSeedBase);
      note_probe(m.summary, last_probe, step_count);
    }

    MetricsRow row;
    row.step = step_count;
    row.episode = episode - 1;
    row.mode = RunMode::finetune;
    row.task = std::string(env::task_name(task.task_id));
    row.prompt_style = static_cast<int>(prompt.style);
    row.alpha = cfg.mix.alpha;
    row.scorer = std::string(scorers::scorer_name(cfg.scorer.kind));
    row.r_task_mean = reward_sum / static_cast<real>(T);
    row.lamp_channels = false;
    row.success_rate = last_probe.success_rate;
    if (cfg.record_wall_time)
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    m.rows.push_back(row);
  }

  last_probe = actor_probe(ck.actor, lang, task, cfg.env, cfg.enc, cfg.eval_episodes,
                           kProbeSeedBase);
  note_probe(m.summary, last_probe, step_count);
  m.summary.final_return = last_probe.mean_return;
  m.summary.final_success = last_probe.success_rate;

  ck.step = start.step + step_count;
  return out;
}

}  // namespace lamp::pipeline
