#include "lamp/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lamp::prompts {

namespace {

constexpr std::string_view kSlot = "[NOUN]";
constexpr std::string_view kStyle1Template = "Pick up the [NOUN].";

int count_slots(std::string_view s) {
  int n = 0;
  for (std::size_t pos = 0; (pos = s.find(kSlot, pos)) != std::string_view::npos;
       pos += kSlot.size())
    ++n;
  return n;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("lexicons: cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

PromptStyle style_from_int(int v) {
  if (v < 1 || v > 6) throw ConfigError("prompt style must be 1..6");
  return static_cast<PromptStyle>(v);
}

void Lexicons::validate() const {
  auto check_templates = [](const std::vector<std::string>& ts, const char* which) {
    if (ts.size() < 40)
      throw ConfigError(std::string("lexicons: need at least 40 ") + which +
                        " verb templates");
    for (const std::string& t : ts)
      if (count_slots(t) != 1)
        throw ConfigError("lexicons: template must contain [NOUN] exactly once: " + t);
  };
  check_templates(relevant_verbs, "relevant");
  check_templates(irrelevant_verbs, "irrelevant");
  if (shakespeare.empty()) throw ConfigError("lexicons: empty shakespeare list");
  for (const std::string& s : shakespeare)
    if (count_slots(s) != 0)
      throw ConfigError("lexicons: shakespeare snippet must not contain a slot");
  for (int c = 0; c < env::kNumClasses; ++c) {
    const NounEntry& e = nouns[c];
    auto cls = std::string(env::class_name(static_cast<env::ObjectClass>(c)));
    if (e.synonyms.empty())
      throw ConfigError("lexicons: empty synonym list for " + cls);
    if (e.canonical != e.synonyms.front())
      throw ConfigError("lexicons: canonical noun must lead the synonym list for " + cls);
    if (e.random_nouns.empty())
      throw ConfigError("lexicons: empty random-noun list for " + cls);
    for (const std::string& r : e.random_nouns)
      if (std::find(e.synonyms.begin(), e.synonyms.end(), r) != e.synonyms.end())
        throw ConfigError("lexicons: random noun '" + r + "' is a synonym of " + cls);
  }
}

Lexicons load_lexicons(const std::filesystem::path& dir) {
  Lexicons lex;
  lex.relevant_verbs = read_lines(dir / "verbs_relevant.txt");
  lex.irrelevant_verbs = read_lines(dir / "verbs_irrelevant.txt");
  lex.shakespeare = read_lines(dir / "shakespeare.txt");

  std::vector<bool> seen(env::kNumClasses, false);
  for (const std::string& line : read_lines(dir / "nouns.tsv")) {
    auto cols = split(line, '\t');
    if (cols.size() != 3)
      throw ConfigError("lexicons: nouns.tsv rows need class<TAB>synonyms<TAB>randoms");
    auto cls = env::class_from_name(cols[0]);
    if (!cls) throw ConfigError("lexicons: unknown class in nouns.tsv: " + cols[0]);
    NounEntry e;
    e.synonyms = split(cols[1], '|');
    e.random_nouns = split(cols[2], '|');
    e.canonical = e.synonyms.empty() ? std::string() : e.synonyms.front();
    lex.nouns[static_cast<int>(*cls)] = std::move(e);
    seen[static_cast<int>(*cls)] = true;
  }
  for (int c = 0; c < env::kNumClasses; ++c)
    if (!seen[c])
      throw ConfigError(std::string("lexicons: nouns.tsv missing class ") +
                        std::string(env::class_name(static_cast<env::ObjectClass>(c))));
  lex.validate();
  return lex;
}

const Lexicons& builtin_lexicons() {
  static const Lexicons lex = [] {
    const char* env_dir = std::getenv("LAMP_DATA");
#ifdef LAMP_DATA_DIR
    const char* fallback = LAMP_DATA_DIR;
#else
    const char* fallback = "data";
#endif
    return load_lexicons(env_dir ? env_dir : fallback);
  }();
  return lex;
}

bool has_noun_slot(const Prompt& p) { return count_slots(p.text) == 1; }

PromptDataset generate_dataset(PromptStyle style, const Lexicons& lex,
                               std::uint64_t seed, int n) {
  if (n < 1) throw UsageError("generate_dataset: need n >= 1");
  lex.validate();
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(style)));

  PromptDataset ds;
  ds.seed = seed;
  ds.style = style;
  for (int i = 0; i < n; ++i) {
    Prompt p;
    p.style = style;
    p.prompt_id = i;
    switch (style) {
      case PromptStyle::simple:
        p.text = kStyle1Template;
        break;
      case PromptStyle::relevant_synonym:
      case PromptStyle::relevant_random:
        p.text = lex.relevant_verbs[rng.uniform_int(lex.relevant_verbs.size())];
        break;
      case PromptStyle::irrelevant_synonym:
      case PromptStyle::irrelevant_random:
        p.text = lex.irrelevant_verbs[rng.uniform_int(lex.irrelevant_verbs.size())];
        break;
      case PromptStyle::shakespeare:
        p.text = lex.shakespeare[rng.uniform_int(lex.shakespeare.size())];
        break;
    }
    ds.prompts.push_back(std::move(p));
  }
  return ds;
}

Prompt substitute_noun(const Prompt& tmpl, const env::SceneState& scene,
                       PromptStyle style, Rng& rng, const Lexicons& lex) {
  if (tmpl.style != style)
    throw UsageError("substitute_noun: style does not match the template");
  if (style == PromptStyle::shakespeare)
    throw UsageError("substitute_noun: style-6 prompts have no noun slot");
  if (scene.objects.empty())
    throw UsageError("substitute_noun: scene has no objects");
  if (!has_noun_slot(tmpl))
    throw UsageError("substitute_noun: template has no [NOUN] slot: " + tmpl.text);

  const env::ObjectClass cls =
      scene.objects[rng.uniform_int(scene.objects.size())].class_id;
  const NounEntry& entry = lex.nouns[static_cast<int>(cls)];

  std::string noun;
  switch (style) {
    case PromptStyle::simple:
      noun = entry.canonical;
      break;
    case PromptStyle::relevant_synonym:
    case PromptStyle::irrelevant_synonym:
      noun = entry.synonyms[rng.uniform_int(entry.synonyms.size())];
      break;
    case PromptStyle::relevant_random:
    case PromptStyle::irrelevant_random:
      noun = entry.random_nouns[rng.uniform_int(entry.random_nouns.size())];
      break;
    case PromptStyle::shakespeare:
      break;  // unreachable
  }

  Prompt out = tmpl;
  out.text.replace(out.text.find(kSlot), kSlot.size(), noun);
  out.referenced_class = cls;
  return out;
}

namespace {

// Symmetric verb/antonym pairs; lookup goes both directions so inversion is
// an involution on anything registered. Case-sensitive; imperative forms
// capitalized, participles lowercase.
const std::vector<std::pair<std::string_view, std::string_view>>& antonym_pairs() {
  static const std::vector<std::pair<std::string_view, std::string_view>> t = {
      {"Pick up", "Put down"},
      {"Take hold of", "Let go of"},
      {"Hold onto", "Set loose"},
      {"Hold", "Set down"},
      {"Lift", "Lower"},
      {"Raise", "Drop"},
      {"Grasp", "Release"},
      {"Seize", "Free"},
      {"Retrieve", "Return"},
      {"picked up", "put down"},
      {"picks up", "puts down"},
      {"lifted", "lowered"},
      {"lifts", "lowers"},
      {"raised", "dropped"},
      {"grasped", "released"},
      {"seized", "freed"},
      {"taken up", "set down"},
      {"elevated", "brought down"},
      {"hoisted", "let down"},
      {"hoists", "lets down"},
      {"held", "let go"},
      {"secures", "releases"},
      {"seizes", "frees"},
  };
  return t;
}

bool word_boundary(std::string_view text, std::size_t pos, std::size_t len) {
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  if (pos > 0 && alnum(text[pos - 1])) return false;
  if (pos + len < text.size() && alnum(text[pos + len])) return false;
  return true;
}

std::size_t find_phrase(std::string_view text, std::string_view phrase) {
  std::size_t pos = 0;
  while ((pos = text.find(phrase, pos)) != std::string_view::npos) {
    if (word_boundary(text, pos, phrase.size())) return pos;
    ++pos;
  }
  return std::string_view::npos;
}

}  // namespace

Prompt inverse_prompt(const Prompt& p) {
  // Leftmost registered phrase wins; longest phrase on position ties.
  std::size_t best_pos = std::string_view::npos;
  std::string_view best_from, best_to;
  for (const auto& [a, b] : antonym_pairs()) {
    for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
      std::size_t pos = find_phrase(p.text, from);
      if (pos == std::string_view::npos) continue;
      if (pos < best_pos || (pos == best_pos && from.size() > best_from.size())) {
        best_pos = pos;
        best_from = from;
        best_to = to;
      }
    }
  }

  Prompt out = p;
  if (best_pos == std::string_view::npos) {
    out.text = "do not " + p.text;
    out.inverse_fallback = true;
  } else {
    out.text.replace(best_pos, best_from.size(), best_to);
    out.inverse_fallback = false;
  }
  return out;
}

void write_tsv(const std::filesystem::path& path, const PromptDataset& ds) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("prompts: cannot open " + path.string() + " for write");
  os << "prompt_id\tstyle\treferenced_class\ttext\n";
  for (const Prompt& p : ds.prompts) {
    os << p.prompt_id << '\t' << static_cast<int>(p.style) << '\t'
       << (p.referenced_class ? env::class_name(*p.referenced_class) : "-") << '\t'
       << p.text << '\n';
  }
  if (!os) throw IoError("prompts: write failed for " + path.string());
}

PromptDataset read_tsv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("prompts: cannot open " + path.string());
  PromptDataset ds;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("prompt_id\t", 0) == 0) continue;  // header
    }
    auto cols = split(line, '\t');
    if (cols.size() < 4) throw IoError("prompts: malformed tsv row: " + line);
    Prompt p;
    p.prompt_id = std::stoi(cols[0]);
    p.style = style_from_int(std::stoi(cols[1]));
    if (cols[2] != "-") {
      auto cls = env::class_from_name(cols[2]);
      if (!cls) throw IoError("prompts: unknown class in tsv: " + cols[2]);
      p.referenced_class = cls;
    }
    // Text is the remainder; re-join in case it ever contains tabs.
    std::string text = cols[3];
    for (std::size_t i = 4; i < cols.size(); ++i) text += "\t" + cols[i];
    p.text = std::move(text);
    ds.prompts.push_back(std::move(p));
  }
  if (!ds.prompts.empty()) ds.style = ds.prompts.front().style;
  return ds;
}

std::uint64_t dataset_hash(const PromptDataset& ds) {
  std::uint64_t h = kFnvOffset;
  for (const Prompt& p : ds.prompts) {
    h = fnv1a64_u64(static_cast<std::uint64_t>(p.prompt_id), h);
    h = fnv1a64_u64(static_cast<std::uint64_t>(p.style), h);
    h = fnv1a64(p.referenced_class ? env::class_name(*p.referenced_class) : "-", h);
    h = fnv1a64(p.text, h);
  }
  return h;
}

}  // namespace lamp::prompts
