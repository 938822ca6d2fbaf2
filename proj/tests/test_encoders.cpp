#include <doctest.h>

#include <cmath>

#include "lamp/encoders.hpp"
#include "lamp/prompts.hpp"

using namespace lamp;
using namespace lamp::encoders;

namespace {

real cosine(const LangEmbedding& a, const LangEmbedding& b) {
  // Embeddings are unit norm (or zero), so the dot is already the cosine.
  return dot(a, b);
}

}  // namespace

TEST_CASE("language embedding is unit norm, case/punct-insensitive, and count-sensitive") {
  EncoderConfig cfg;
  LangEmbedding e = embed_language("Pick up the mug.", cfg);
  real norm2 = 0;
  for (real v : e.v) norm2 += v * v;
  CHECK(std::abs(norm2 - real(1)) < real(1e-12));

  CHECK(embed_language("PICK UP, THE: mug!!", cfg).v == e.v);
  CHECK(embed_language("pick up the mug", cfg).v == e.v);

  // Repeating a token changes counts, hence direction — but "mug mug" alone
  // normalizes to the same unit vector as "mug".
  CHECK(embed_language("mug mug", cfg).v == embed_language("mug", cfg).v);
  CHECK(embed_language("mug mug pick", cfg).v != embed_language("mug pick", cfg).v);

  LangEmbedding zero = embed_language("", cfg);
  CHECK(zero.is_zero());
  CHECK(embed_language("...!?", cfg).is_zero());
  for (real v : zero.v) CHECK(v == real(0));
}

TEST_CASE("embedding depends on the salt") {
  EncoderConfig a, b;
  b.hash_salt = a.hash_salt + 1;
  CHECK(embed_language("pick up the mug", a).v != embed_language("pick up the mug", b).v);
}

TEST_CASE("embedding matches a direct bucket-count construction") {
  // Oracle: hash each token with the salted FNV seed by hand, diffuse, bucket
  // mod 64, accumulate counts, L2-normalize.
  EncoderConfig cfg;
  const std::string text = "lift the red mug";
  const std::vector<std::string> tokens = {"lift", "the", "red", "mug"};
  std::array<real, kLangDim> counts{};
  const std::uint64_t seed = fnv1a64_u64(cfg.hash_salt);
  for (const auto& t : tokens) counts[splitmix64(fnv1a64(t, seed)) % kLangDim] += 1;
  real n = 0;
  for (real c : counts) n += c * c;
  n = std::sqrt(n);
  for (real& c : counts) c /= n;
  LangEmbedding e = embed_language(text, cfg);
  for (int i = 0; i < kLangDim; ++i) CHECK(e.v[i] == doctest::Approx(counts[i]).epsilon(1e-12));
}

TEST_CASE("embedding lipschitz bound: one-token edits move the vector at most 2") {
  EncoderConfig cfg;
  Rng rng(404);
  const std::vector<std::string> words = {"pick", "lift",  "mug",   "bag",  "grasp",
                                          "take", "raise", "bring", "hoist"};
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t len = 1 + rng.uniform_int(6);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < len; ++i)
      tokens.push_back(words[rng.uniform_int(words.size())]);
    std::string a;
    for (const auto& t : tokens) a += t + " ";
    tokens[rng.uniform_int(tokens.size())] = words[rng.uniform_int(words.size())];
    std::string b;
    for (const auto& t : tokens) b += t + " ";
    LangEmbedding ea = embed_language(a, cfg), eb = embed_language(b, cfg);
    real d2 = 0;
    for (int i = 0; i < kLangDim; ++i) d2 += (ea.v[i] - eb.v[i]) * (ea.v[i] - eb.v[i]);
    CHECK(std::sqrt(d2) <= real(2) + real(1e-12));
  }
}

TEST_CASE("scene encoding lays out slots as documented") {
  env::SceneState s;
  s.ee_pos = {real(0.5), real(0.5), real(0.4)};
  s.gripper_closed = true;
  env::ObjectInstance mug;
  mug.class_id = env::ObjectClass::mug;
  mug.position = {real(0.3), real(0.7), real(0.05)};
  mug.grasped = true;
  s.objects.push_back(mug);
  s.texture_id = 0;

  EncoderConfig cfg;
  VisFeature f = encode_scene(s, cfg);
  CHECK(f.v[0] == real(0.5));
  CHECK(f.v[1] == real(0.5));
  CHECK(f.v[2] == real(0.4));
  CHECK(f.v[3] == real(1));  // gripper closed

  const int off = slot_offset(static_cast<int>(env::ObjectClass::mug));
  CHECK(f.v[off + 0] == real(1));  // present
  CHECK(f.v[off + 1] == doctest::Approx(0.3 - 0.5));
  CHECK(f.v[off + 2] == doctest::Approx(0.7 - 0.5));
  CHECK(f.v[off + 3] == doctest::Approx(0.05 - 0.4));
  CHECK(f.v[off + 4] == real(1));  // grasped

  // All other class slots empty.
  for (int c = 0; c < env::kNumClasses; ++c) {
    if (c == static_cast<int>(env::ObjectClass::mug)) continue;
    const int o = slot_offset(c);
    for (int k = 0; k < 5; ++k) CHECK(f.v[o + k] == real(0));
  }
  // Plain texture: all noise dims zero.
  for (int i = kNoiseOffset; i < kVisDim; ++i) CHECK(f.v[i] == real(0));
}

TEST_CASE("duplicate-class scenes keep the first instance in the slot") {
  env::SceneState s;
  s.ee_pos = {real(0.5), real(0.5), real(0.4)};
  env::ObjectInstance a, b;
  a.class_id = b.class_id = env::ObjectClass::bowl;
  a.position = {real(0.1), real(0.1), real(0)};
  b.position = {real(0.9), real(0.9), real(0)};
  s.objects = {a, b};
  s.texture_id = 0;
  VisFeature f = encode_scene(s, EncoderConfig{});
  const int off = slot_offset(static_cast<int>(env::ObjectClass::bowl));
  CHECK(f.v[off + 1] == doctest::Approx(0.1 - 0.5));
  CHECK(f.v[off + 2] == doctest::Approx(0.1 - 0.5));
}

TEST_CASE("texture noise is a pure function of texture id") {
  env::SceneState s;
  s.ee_pos = {real(0.5), real(0.5), real(0.4)};
  s.texture_id = 17;
  EncoderConfig cfg;
  VisFeature f1 = encode_scene(s, cfg);
  VisFeature f2 = encode_scene(s, cfg);
  for (int i = 0; i < kVisDim; ++i) CHECK(f1.v[i] == f2.v[i]);

  s.texture_id = 18;
  VisFeature g = encode_scene(s, cfg);
  bool differs = false;
  for (int i = kNoiseOffset; i < kVisDim; ++i) differs |= g.v[i] != f1.v[i];
  CHECK(differs);

  // Noise dims are shared across steps within an episode (same texture).
  s.ee_pos = {real(0.1), real(0.2), real(0.3)};
  VisFeature h = encode_scene(s, cfg);
  for (int i = kNoiseOffset; i < kVisDim; ++i) CHECK(h.v[i] == g.v[i]);

  // Empirical spread sanity: across many textures, per-dim stddev ~ 0.5.
  real sum = 0, sum2 = 0;
  int n = 0;
  for (int t = 1; t <= 96; ++t) {
    s.texture_id = t;
    VisFeature ft = encode_scene(s, cfg);
    for (int i = kNoiseOffset; i < kVisDim; ++i) {
      sum += ft.v[i];
      sum2 += ft.v[i] * ft.v[i];
      ++n;
    }
  }
  real mean = sum / n;
  real var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < real(0.1));
  CHECK(std::sqrt(var) == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("class prototypes are unit norm and self-identify") {
  EncoderConfig cfg;
  const auto& lx = prompts::builtin_lexicons();
  ClassPrototypes protos = class_prototypes(lx, cfg);
  for (int c = 0; c < env::kNumClasses; ++c) {
    real n2 = 0;
    for (real v : protos.by_class[c].v) n2 += v * v;
    CHECK(std::abs(n2 - real(1)) < real(1e-12));
    // The canonical noun's embedding must be closest to its own prototype.
    LangEmbedding canon = embed_language(lx.nouns[c].canonical, cfg);
    real own = cosine(canon, protos.by_class[c]);
    for (int o = 0; o < env::kNumClasses; ++o) {
      if (o == c) continue;
      CHECK(own > cosine(canon, protos.by_class[o]));
    }
  }
}

TEST_CASE("synonyms resolve to their class within a stray budget") {
  // The reward pathway leans on argmax-prototype recovery. With 64 buckets
  // and ~460 corpus tokens some collisions are unavoidable, so the guarantee
  // is graded: canonical nouns must self-identify outright (the scan that
  // pinned the default salt enforces this), every synonym must keep a
  // positive pull toward its own prototype, and confidently-wrong synonyms
  // are capped at the budget the salt was selected under.
  EncoderConfig cfg;
  const real tau = real(0.2);
  const auto& lx = prompts::builtin_lexicons();
  ClassPrototypes protos = class_prototypes(lx, cfg);
  int strays = 0;
  for (int c = 0; c < env::kNumClasses; ++c) {
    bool canonical = true;
    for (const std::string& syn : lx.nouns[c].synonyms) {
      LangEmbedding e = embed_language(syn, cfg);
      int best = -1;
      real best_cos = real(-2);
      for (int o = 0; o < env::kNumClasses; ++o) {
        real cs = cosine(e, protos.by_class[o]);
        if (cs > best_cos) {
          best_cos = cs;
          best = o;
        }
      }
      real own = cosine(e, protos.by_class[c]);
      CHECK_MESSAGE(own >= real(0.1), "synonym '", syn, "' own-cos=", own);
      if (canonical) {
        CHECK_MESSAGE(best == c, "canonical '", syn, "' resolved to class ", best);
        CHECK(own >= tau);
      } else if (best != c && best_cos >= tau) {
        ++strays;
      }
      canonical = false;
    }
  }
  CHECK(strays <= 12);
  // Named example: "handbag" must read as bag, not mug.
  LangEmbedding hb = embed_language("handbag", cfg);
  CHECK(cosine(hb, protos.by_class[static_cast<int>(env::ObjectClass::bag)]) >
        cosine(hb, protos.by_class[static_cast<int>(env::ObjectClass::mug)]));
}

TEST_CASE("prompt resolution degrades along the style axis as designed") {
  // Style 1 prompts are what evaluation probes use, so they must resolve
  // outright: confident and argmax-correct for every class. The verb-grid
  // styles resolve statistically, and styles that substitute random related
  // nouns (3, 5) must resolve strictly less often than their synonym
  // counterparts (2, 4) — that falloff is the semantic-relevance axis the
  // scored rewards are built on.
  EncoderConfig cfg;
  const real tau = real(0.2);
  const auto& lx = prompts::builtin_lexicons();
  ClassPrototypes protos = class_prototypes(lx, cfg);

  for (int c = 0; c < env::kNumClasses; ++c) {
    std::string text = "Pick up the " + lx.nouns[c].canonical + ".";
    LangEmbedding e = embed_language(text, cfg);
    real own = cosine(e, protos.by_class[c]);
    CHECK_MESSAGE(own >= real(0.22), "'", text, "' own-cos=", own);
    for (int o = 0; o < env::kNumClasses; ++o) {
      if (o == c) continue;
      CHECK_MESSAGE(own > cosine(e, protos.by_class[o]), "'", text,
                    "' outscored by class ", o);
    }
  }

  Rng rng(2024);
  std::array<int, 6> resolved{};
  std::array<int, 6> total{};
  for (int style = 2; style <= 5; ++style) {
    prompts::PromptStyle st = prompts::style_from_int(style);
    prompts::PromptDataset ds = prompts::generate_dataset(st, lx, 1000 + style, 30);
    for (std::uint64_t es = 0; es < 5; ++es) {
      env::SceneState scene = env::reset(env::EnvConfig{}, 9000 + es);
      for (const prompts::Prompt& tmpl : ds.prompts) {
        prompts::Prompt p = prompts::substitute_noun(tmpl, scene, st, rng, lx);
        REQUIRE(p.referenced_class.has_value());
        LangEmbedding e = embed_language(p.text, cfg);
        int c = static_cast<int>(*p.referenced_class);
        int best = 0;
        real best_cos = real(-2);
        for (int o = 0; o < env::kNumClasses; ++o) {
          real cs = cosine(e, protos.by_class[o]);
          if (cs > best_cos) {
            best_cos = cs;
            best = o;
          }
        }
        ++total[static_cast<std::size_t>(style)];
        if (best == c && best_cos >= tau) ++resolved[static_cast<std::size_t>(style)];
      }
    }
  }
  auto rate = [&](int style) {
    return real(resolved[static_cast<std::size_t>(style)]) /
           real(total[static_cast<std::size_t>(style)]);
  };
  // Synonym styles carry usable signal...
  CHECK(rate(2) >= real(0.25));
  CHECK(rate(4) >= real(0.25));
  // ...and random-noun styles resolve strictly less often.
  CHECK(rate(3) < rate(2));
  CHECK(rate(5) < rate(4));
}

TEST_CASE("shakespeare snippets are mostly neutral, leakage stays budgeted") {
  // Perfect neutrality is unattainable at this width: every one of the 64
  // buckets carries prototype mass, so a k-token snippet lands at expected
  // cosine ~ sqrt(k)/64 * |prototype|_1 ~ 0.15 against every class, and the
  // max over 40 snippets x 8 classes clears tau for any lexicon shape. The
  // pinned salt minimizes the bleed-through instead; this locks the budget.
  EncoderConfig cfg;
  const real tau = real(0.2);
  const auto& lx = prompts::builtin_lexicons();
  ClassPrototypes protos = class_prototypes(lx, cfg);
  int leaked_pairs = 0;
  int neutral_snippets = 0;
  real worst = real(-2);
  for (const std::string& snippet : lx.shakespeare) {
    LangEmbedding e = embed_language(snippet, cfg);
    real max_cos = real(-2);
    for (int c = 0; c < env::kNumClasses; ++c) {
      real cs = cosine(e, protos.by_class[c]);
      if (cs >= tau) ++leaked_pairs;
      max_cos = std::max(max_cos, cs);
    }
    if (max_cos < tau) ++neutral_snippets;
    worst = std::max(worst, max_cos);
  }
  const int pairs = static_cast<int>(lx.shakespeare.size()) * env::kNumClasses;
  CHECK(pairs == 320);
  CHECK(leaked_pairs <= 45);           // scan cap; pinned salt sits at 36
  CHECK(worst < real(0.6));            // no snippet reads as a confident prompt
  CHECK(neutral_snippets >= 15);       // most snippets are fully neutral
}

TEST_CASE("prototype cosine table is emitted as tsv") {
  const auto& lx = prompts::builtin_lexicons();
  ClassPrototypes protos = class_prototypes(lx, EncoderConfig{});
  std::string tsv = prototypes_tsv(protos);
  // Header row + one row per class.
  std::size_t lines = std::count(tsv.begin(), tsv.end(), '\n');
  CHECK(lines == std::size_t(env::kNumClasses) + 1);
  CHECK(tsv.find("mug") != std::string::npos);
  CHECK(tsv.find("\t1\t") != std::string::npos);  // self-cosine formats as 1
}
