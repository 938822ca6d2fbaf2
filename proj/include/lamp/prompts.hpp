#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lamp/common.hpp"
#include "lamp/env.hpp"

namespace lamp::prompts {

// Six instruction families: 1 fixed template, 2–5 the relevant/irrelevant verb
// by synonym/random noun grid, 6 Shakespeare distractors.
enum class PromptStyle : int {
  simple = 1,
  relevant_synonym = 2,
  relevant_random = 3,
  irrelevant_synonym = 4,
  irrelevant_random = 5,
  shakespeare = 6,
};

PromptStyle style_from_int(int v);  // ConfigError outside 1..6

struct NounEntry {
  std::string canonical;  // always synonyms.front()
  std::vector<std::string> synonyms;
  std::vector<std::string> random_nouns;
};

struct Lexicons {
  std::array<NounEntry, env::kNumClasses> nouns;
  std::vector<std::string> relevant_verbs;    // templates with one [NOUN] slot
  std::vector<std::string> irrelevant_verbs;  // same
  std::vector<std::string> shakespeare;
  void validate() const;  // ConfigError on any broken list
};

// Loads the four lexicon files (verbs_relevant.txt, verbs_irrelevant.txt,
// shakespeare.txt, nouns.tsv) from dir and validates.
Lexicons load_lexicons(const std::filesystem::path& dir);
// Shipped data: $LAMP_DATA if set, else the build-time data directory. Cached.
const Lexicons& builtin_lexicons();

struct Prompt {
  std::string text;
  PromptStyle style = PromptStyle::simple;
  std::optional<env::ObjectClass> referenced_class;  // set by substitution, 1–5 only
  int prompt_id = 0;
  bool inverse_fallback = false;  // inverse_prompt had no antonym for this text
};

bool has_noun_slot(const Prompt& p);

struct PromptDataset {
  std::vector<Prompt> prompts;
  std::uint64_t seed = 0;
  PromptStyle style = PromptStyle::simple;
};

PromptDataset generate_dataset(PromptStyle style, const Lexicons& lex,
                               std::uint64_t seed, int n);

// Resolves the [NOUN] slot against a scene: uniform object pick, then the
// style's noun source (canonical / synonym / random noun of that class).
Prompt substitute_noun(const Prompt& tmpl, const env::SceneState& scene,
                       PromptStyle style, Rng& rng, const Lexicons& lex);

// Antonym-table verb inversion ("Pick up" -> "Put down"); unmatched texts get
// the "do not " prefix and the fallback flag.
Prompt inverse_prompt(const Prompt& p);

void write_tsv(const std::filesystem::path& path, const PromptDataset& ds);
PromptDataset read_tsv(const std::filesystem::path& path);

// Row-content hash; stable across write/read round-trips.
std::uint64_t dataset_hash(const PromptDataset& ds);

}  // namespace lamp::prompts
