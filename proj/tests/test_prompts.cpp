#include <doctest.h>

#include <filesystem>
#include <regex>
#include <set>

#include "lamp/prompts.hpp"

using namespace lamp;
using namespace lamp::prompts;

namespace {

const Lexicons& lex() { return builtin_lexicons(); }

env::SceneState scene_with(std::initializer_list<env::ObjectClass> classes) {
  env::SceneState s;
  real x = real(0.2);
  for (env::ObjectClass c : classes) {
    env::ObjectInstance o;
    o.class_id = c;
    o.position = {x, real(0.5), real(0)};
    s.objects.push_back(o);
    x += real(0.2);
  }
  return s;
}

}  // namespace

TEST_CASE("shipped lexicons validate and meet the size floor") {
  const Lexicons& l = lex();
  CHECK(l.relevant_verbs.size() == 40);
  CHECK(l.irrelevant_verbs.size() == 40);
  CHECK(l.shakespeare.size() == 40);
  for (int c = 0; c < env::kNumClasses; ++c) {
    CHECK(l.nouns[c].synonyms.size() >= 10);
    CHECK(l.nouns[c].random_nouns.size() >= 10);
    CHECK(l.nouns[c].canonical == l.nouns[c].synonyms.front());
  }
  // Spot checks straight from the source tables.
  CHECK(std::find(l.relevant_verbs.begin(), l.relevant_verbs.end(),
                  "Lift the [NOUN] with your hands") != l.relevant_verbs.end());
  CHECK(std::find(l.irrelevant_verbs.begin(), l.irrelevant_verbs.end(),
                  "The [NOUN] is rotated") != l.irrelevant_verbs.end());
  CHECK(std::find(l.shakespeare.begin(), l.shakespeare.end(), "Holla, Barnardo.") !=
        l.shakespeare.end());
  const auto& bag = l.nouns[static_cast<int>(env::ObjectClass::bag)];
  CHECK(std::find(bag.synonyms.begin(), bag.synonyms.end(), "handbag") != bag.synonyms.end());
  CHECK(std::find(bag.random_nouns.begin(), bag.random_nouns.end(), "vase") !=
        bag.random_nouns.end());
}

TEST_CASE("broken lexicons are rejected") {
  Lexicons l = lex();
  l.relevant_verbs.resize(10);
  CHECK_THROWS_AS(l.validate(), ConfigError);

  l = lex();
  l.relevant_verbs[0] = "Pick up the thing";  // no slot
  CHECK_THROWS_AS(l.validate(), ConfigError);

  l = lex();
  l.nouns[0].random_nouns.push_back(l.nouns[0].synonyms[1]);  // synonym leak
  CHECK_THROWS_AS(l.validate(), ConfigError);

  l = lex();
  l.nouns[3].canonical = "soup bowl";  // not the first synonym
  CHECK_THROWS_AS(l.validate(), ConfigError);

  CHECK_THROWS_AS(load_lexicons("/nonexistent-dir"), ConfigError);
}

TEST_CASE("dataset generation is pure and dense") {
  for (int style = 1; style <= 6; ++style) {
    PromptDataset a = generate_dataset(style_from_int(style), lex(), 42, 50);
    PromptDataset b = generate_dataset(style_from_int(style), lex(), 42, 50);
    REQUIRE(a.prompts.size() == 50);
    for (int i = 0; i < 50; ++i) {
      CHECK(a.prompts[i].prompt_id == i);
      CHECK(a.prompts[i].text == b.prompts[i].text);
      CHECK(a.prompts[i].style == style_from_int(style));
      CHECK(!a.prompts[i].referenced_class.has_value());  // unresolved until episode time
    }
  }
  PromptDataset c = generate_dataset(PromptStyle::relevant_synonym, lex(), 43, 50);
  PromptDataset d = generate_dataset(PromptStyle::relevant_synonym, lex(), 42, 50);
  bool any_diff = false;
  for (int i = 0; i < 50; ++i) any_diff |= c.prompts[i].text != d.prompts[i].text;
  CHECK(any_diff);

  CHECK_THROWS_AS(generate_dataset(PromptStyle::simple, lex(), 1, 0), UsageError);
  CHECK_THROWS_AS(style_from_int(7), ConfigError);
  CHECK_THROWS_AS(style_from_int(0), ConfigError);
}

TEST_CASE("style templates draw from the right pools") {
  auto in = [](const std::vector<std::string>& pool, const std::string& t) {
    return std::find(pool.begin(), pool.end(), t) != pool.end();
  };
  PromptDataset s1 = generate_dataset(PromptStyle::simple, lex(), 7, 20);
  for (const Prompt& p : s1.prompts) CHECK(p.text == "Pick up the [NOUN].");
  for (PromptStyle st : {PromptStyle::relevant_synonym, PromptStyle::relevant_random})
    for (const Prompt& p : generate_dataset(st, lex(), 7, 40).prompts)
      CHECK(in(lex().relevant_verbs, p.text));
  for (PromptStyle st : {PromptStyle::irrelevant_synonym, PromptStyle::irrelevant_random})
    for (const Prompt& p : generate_dataset(st, lex(), 7, 40).prompts)
      CHECK(in(lex().irrelevant_verbs, p.text));
  for (const Prompt& p : generate_dataset(PromptStyle::shakespeare, lex(), 7, 40).prompts) {
    CHECK(in(lex().shakespeare, p.text));
    CHECK(p.text.find("[NOUN]") == std::string::npos);
  }
}

TEST_CASE("substitution resolves the slot against the scene") {
  Rng rng(5);
  env::SceneState scene = scene_with({env::ObjectClass::bag});

  Prompt tmpl;
  tmpl.text = "Pick up the [NOUN].";
  tmpl.style = PromptStyle::simple;
  Prompt p = substitute_noun(tmpl, scene, PromptStyle::simple, rng, lex());
  CHECK(p.text == "Pick up the bag.");
  CHECK(p.referenced_class == env::ObjectClass::bag);

  // Styles 2/4 only emit synonyms of the chosen class; 3/5 only random nouns.
  const auto& entry = lex().nouns[static_cast<int>(env::ObjectClass::bag)];
  auto is_in = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  Prompt base;
  base.text = "The [NOUN] is rotated";
  for (int i = 0; i < 50; ++i) {
    base.style = PromptStyle::irrelevant_synonym;
    Prompt syn = substitute_noun(base, scene, base.style, rng, lex());
    std::string noun = syn.text.substr(4, syn.text.size() - 4 - 11);  // between "The " and " is rotated"
    CHECK(is_in(entry.synonyms, noun));
    base.style = PromptStyle::irrelevant_random;
    Prompt rnd = substitute_noun(base, scene, base.style, rng, lex());
    noun = rnd.text.substr(4, rnd.text.size() - 4 - 11);
    CHECK(is_in(entry.random_nouns, noun));
    CHECK(!is_in(entry.synonyms, noun));
  }
}

TEST_CASE("substitution picks scene objects uniformly at random") {
  Rng rng(11);
  env::SceneState scene =
      scene_with({env::ObjectClass::mug, env::ObjectClass::bowl, env::ObjectClass::lid});
  Prompt tmpl;
  tmpl.text = "Pick up the [NOUN].";
  tmpl.style = PromptStyle::simple;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 3000; ++i) {
    Prompt p = substitute_noun(tmpl, scene, PromptStyle::simple, rng, lex());
    REQUIRE(p.referenced_class.has_value());
    if (*p.referenced_class == env::ObjectClass::mug) ++counts[0];
    if (*p.referenced_class == env::ObjectClass::bowl) ++counts[1];
    if (*p.referenced_class == env::ObjectClass::lid) ++counts[2];
  }
  for (int c : counts) CHECK(c > 800);  // ~1000 each
}

TEST_CASE("substitution rejects misuse") {
  Rng rng(5);
  env::SceneState scene = scene_with({env::ObjectClass::bag});
  Prompt shak;
  shak.text = "Holla, Barnardo.";
  shak.style = PromptStyle::shakespeare;
  CHECK_THROWS_AS(substitute_noun(shak, scene, PromptStyle::shakespeare, rng, lex()),
                  UsageError);
  Prompt tmpl;
  tmpl.text = "Pick up the [NOUN].";
  tmpl.style = PromptStyle::simple;
  env::SceneState empty;
  CHECK_THROWS_AS(substitute_noun(tmpl, empty, PromptStyle::simple, rng, lex()),
                  UsageError);
  CHECK_THROWS_AS(substitute_noun(tmpl, scene, PromptStyle::relevant_synonym, rng, lex()),
                  UsageError);  // style mismatch
}

TEST_CASE("inverse_prompt flips the verb phrase and keeps the noun") {
  Prompt p;
  p.text = "Pick up the mug.";
  p.style = PromptStyle::simple;
  Prompt inv = inverse_prompt(p);
  CHECK(inv.text == "Put down the mug.");
  CHECK(!inv.inverse_fallback);
  Prompt back = inverse_prompt(inv);
  CHECK(back.text == p.text);
}

TEST_CASE("inverse_prompt falls back with a flag when no antonym applies") {
  Prompt p;
  p.text = "The mug has been rinsed";
  p.style = PromptStyle::irrelevant_synonym;
  Prompt inv = inverse_prompt(p);
  CHECK(inv.inverse_fallback);
  CHECK(inv.text == "do not The mug has been rinsed");
}

TEST_CASE("inverse is an involution on every relevant verb template") {
  Rng rng(3);
  env::SceneState scene = scene_with({env::ObjectClass::cup});
  for (const std::string& tmpl_text : lex().relevant_verbs) {
    Prompt tmpl;
    tmpl.text = tmpl_text;
    tmpl.style = PromptStyle::relevant_synonym;
    Prompt p = substitute_noun(tmpl, scene, tmpl.style, rng, lex());
    Prompt inv = inverse_prompt(p);
    CHECK(!inv.inverse_fallback);  // table covers all relevant templates
    CHECK(inv.text != p.text);
    Prompt back = inverse_prompt(inv);
    CHECK(back.text == p.text);
  }
}

TEST_CASE("style-2 and style-5 invariants hold after substitution") {
  Rng rng(17);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    env::SceneState scene = env::reset(env::EnvConfig{}, 500 + seed);
    PromptDataset d2 = generate_dataset(PromptStyle::relevant_synonym, lex(), seed, 10);
    for (const Prompt& tmpl : d2.prompts) {
      Prompt p = substitute_noun(tmpl, scene, PromptStyle::relevant_synonym, rng, lex());
      REQUIRE(p.referenced_class.has_value());
      // Scene must contain the referenced class.
      bool found = false;
      for (const auto& o : scene.objects) found |= o.class_id == *p.referenced_class;
      CHECK(found);
      // Text must be the template with some synonym of that class substituted.
      const auto& entry = lex().nouns[static_cast<int>(*p.referenced_class)];
      bool matches = false;
      for (const std::string& syn : entry.synonyms) {
        std::string expect = tmpl.text;
        expect.replace(expect.find("[NOUN]"), 6, syn);
        matches |= expect == p.text;
      }
      CHECK(matches);
    }
    PromptDataset d5 = generate_dataset(PromptStyle::irrelevant_random, lex(), seed, 10);
    for (const Prompt& tmpl : d5.prompts) {
      Prompt p = substitute_noun(tmpl, scene, PromptStyle::irrelevant_random, rng, lex());
      const auto& entry = lex().nouns[static_cast<int>(*p.referenced_class)];
      bool is_synonym = false;
      for (const std::string& syn : entry.synonyms) {
        std::string expect = tmpl.text;
        expect.replace(expect.find("[NOUN]"), 6, syn);
        is_synonym |= expect == p.text;
      }
      CHECK(!is_synonym);
    }
  }
}

TEST_CASE("style-6 snippets avoid all class vocabulary tokens") {
  std::set<std::string> vocab;
  for (int c = 0; c < env::kNumClasses; ++c)
    for (const std::string& syn : lex().nouns[c].synonyms) {
      std::string token;
      for (char ch : syn) {
        if (std::isalnum(static_cast<unsigned char>(ch)))
          token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        else if (!token.empty()) {
          vocab.insert(token);
          token.clear();
        }
      }
      if (!token.empty()) vocab.insert(token);
    }
  for (const std::string& snippet : lex().shakespeare) {
    std::string token;
    auto check_token = [&] {
      if (!token.empty()) {
        CHECK_MESSAGE(vocab.count(token) == 0, "class token '", token, "' in: ", snippet);
        token.clear();
      }
    };
    for (char ch : snippet) {
      if (std::isalnum(static_cast<unsigned char>(ch)))
        token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      else
        check_token();
    }
    check_token();
  }
}

TEST_CASE("prompt tsv round-trips and hashes stably") {
  auto path = std::filesystem::temp_directory_path() / "lamp_prompts_test.tsv";
  PromptDataset ds = generate_dataset(PromptStyle::relevant_synonym, lex(), 99, 25);
  write_tsv(path, ds);
  PromptDataset back = read_tsv(path);
  REQUIRE(back.prompts.size() == ds.prompts.size());
  for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
    CHECK(back.prompts[i].prompt_id == ds.prompts[i].prompt_id);
    CHECK(back.prompts[i].style == ds.prompts[i].style);
    CHECK(back.prompts[i].text == ds.prompts[i].text);
  }
  CHECK(dataset_hash(back) == dataset_hash(ds));
  CHECK(back.style == ds.style);

  PromptDataset other = generate_dataset(PromptStyle::relevant_synonym, lex(), 98, 25);
  CHECK(dataset_hash(other) != dataset_hash(ds));

  CHECK_THROWS_AS(read_tsv("/nonexistent/prompts.tsv"), IoError);
  std::filesystem::remove(path);
}
