#include "lamp/encoders.hpp"

#include <cctype>
#include <cmath>

namespace lamp::encoders {

LangEmbedding embed_language(std::string_view text, const EncoderConfig& cfg) {
  LangEmbedding e;
  // Seed the hash state with the salt so one config knob re-rolls every bucket.
  // FNV's multiply never carries high bits downward, so without a finalizer
  // the low 6 bits see only 64 distinct seeds and re-rolling the salt would
  // cycle through 64 collision patterns total; splitmix64 diffuses the full
  // hash before the reduction.
  const std::uint64_t salted = fnv1a64_u64(cfg.hash_salt);

  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    e.v[splitmix64(fnv1a64(token, salted)) % kLangDim] += real(1);
    token.clear();
  };
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u))
      token.push_back(static_cast<char>(std::tolower(u)));
    else
      flush();
  }
  flush();

  real norm = 0;
  for (real x : e.v) norm += x * x;
  if (norm > real(0)) {
    norm = std::sqrt(norm);
    for (real& x : e.v) x /= norm;
  }
  return e;
}

VisFeature encode_scene(const env::SceneState& state, const EncoderConfig& cfg) {
  VisFeature f;
  f.v[0] = state.ee_pos.x;
  f.v[1] = state.ee_pos.y;
  f.v[2] = state.ee_pos.z;
  f.v[3] = state.gripper_closed ? real(1) : real(0);

  // One slot per class; first instance wins if a class ever repeats.
  for (const env::ObjectInstance& o : state.objects) {
    const int base = slot_offset(static_cast<int>(o.class_id));
    if (f.v[base] != real(0)) continue;
    f.v[base] = real(1);
    f.v[base + 1] = o.position.x - state.ee_pos.x;
    f.v[base + 2] = o.position.y - state.ee_pos.y;
    f.v[base + 3] = o.position.z - state.ee_pos.z;
    f.v[base + 4] = o.grasped ? real(1) : real(0);
  }

  if (state.texture_id != 0) {
    Rng rng(mix_seed(static_cast<std::uint64_t>(state.texture_id), 0x7e47ull));
    for (int i = 0; i < 8; ++i)
      f.v[kNoiseOffset + i] =
          static_cast<real>(rng.normal(0.0, static_cast<double>(cfg.texture_noise_std)));
  }
  return f;
}

ClassPrototypes class_prototypes(const prompts::Lexicons& lex, const EncoderConfig& cfg) {
  ClassPrototypes out;
  for (int c = 0; c < env::kNumClasses; ++c) {
    const auto& synonyms = lex.nouns[c].synonyms;
    if (synonyms.empty())
      throw ConfigError("prototypes: empty synonym list");
    LangEmbedding mean;
    for (const std::string& s : synonyms) {
      LangEmbedding e = embed_language(s, cfg);
      for (int i = 0; i < kLangDim; ++i) mean.v[i] += e.v[i];
    }
    real norm = 0;
    for (real x : mean.v) norm += x * x;
    if (norm <= real(0))
      throw ConfigError(std::string("prototypes: degenerate zero mean for class ") +
                        std::string(env::class_name(static_cast<env::ObjectClass>(c))));
    norm = std::sqrt(norm);
    for (real& x : mean.v) x /= norm;
    out.by_class[c] = mean;
  }
  return out;
}

std::string prototypes_tsv(const ClassPrototypes& protos) {
  std::string out = "class";
  for (int c = 0; c < env::kNumClasses; ++c) {
    out += '\t';
    out += env::class_name(static_cast<env::ObjectClass>(c));
  }
  out += '\n';
  for (int a = 0; a < env::kNumClasses; ++a) {
    out += env::class_name(static_cast<env::ObjectClass>(a));
    for (int b = 0; b < env::kNumClasses; ++b) {
      out += '\t';
      out += format_real(static_cast<double>(dot(protos.by_class[a], protos.by_class[b])));
    }
    out += '\n';
  }
  return out;
}

}  // namespace lamp::encoders
