// Scans hash salts for the bag-of-words language encoder.
//
// Synonym lists, style templates, and the distractor passages all land in the
// same 64 hash buckets, so the pinned salt decides which unrelated tokens
// alias into a prototype's buckets. Perfect separation is out of reach here:
// with ~460 distinct corpus tokens every bucket is occupied, so a k-token
// passage has expected cosine ~ sqrt(k)/64 * |proto|_1 against every class,
// and with ~18 tokens per synonym list a couple of same-bucket collisions are
// the norm rather than the exception at any salt. High head weight buys
// style-1 margins but lets short passages leak; flat prototypes do the
// reverse. The scan therefore guarantees the properties the pipeline leans on
// and minimizes the rest lexicographically:
//
//   hard: every canonical noun resolves to its own class;
//         "Pick up the <canonical>." clears the confidence threshold for
//         every class; for mug (the probe class) it also wins the argmax
//         with a margin;
//         "handbag" lands nearer the bag prototype than the mug prototype;
//         lenient caps on everything scored below.
//   minimized, in order: style-1 prompts whose argmax is a wrong class,
//         distractor passage/class pairs above the threshold, the worst
//         passage cosine, synonyms resolving confidently to a wrong class,
//         template prompts resolving confidently to a wrong class.
//
// The hot loop re-implements only the token hashing; the reported winner is
// re-verified through embed_language/class_prototypes. Pin the winner as
// EncoderConfig::hash_salt and keep --report output for the paper trail.

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lamp/encoders.hpp"
#include "lamp/env.hpp"
#include "lamp/prompts.hpp"

namespace {

constexpr int kDim = lamp::encoders::kLangDim;
constexpr int kC = lamp::env::kNumClasses;
constexpr int kProbeClass = static_cast<int>(lamp::env::ObjectClass::mug);

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) out.push_back(token);
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
  return out;
}

// Token ids with multiplicity; every document the scan scores is one of these.
struct Doc {
  std::vector<int> tok;
  std::string text;  // for reporting only
};

struct Corpus {
  std::vector<std::string> tokens;  // id -> text
  std::array<std::vector<Doc>, kC> synonyms;
  std::array<Doc, kC> style1;
  std::vector<Doc> snippets;
  std::vector<Doc> templates;  // relevant + irrelevant, slot stripped
  Doc handbag;

  int intern(const std::string& t) {
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (tokens[i] == t) return static_cast<int>(i);
    tokens.push_back(t);
    return static_cast<int>(tokens.size()) - 1;
  }

  Doc make_doc(const std::string& text) {
    Doc d;
    d.text = text;
    for (const std::string& t : tokenize(text)) d.tok.push_back(intern(t));
    return d;
  }
};

Corpus build_corpus(const lamp::prompts::Lexicons& lex) {
  Corpus c;
  for (int k = 0; k < kC; ++k) {
    for (const std::string& s : lex.nouns[static_cast<std::size_t>(k)].synonyms)
      c.synonyms[static_cast<std::size_t>(k)].push_back(c.make_doc(s));
    c.style1[static_cast<std::size_t>(k)] =
        c.make_doc("Pick up the " + lex.nouns[static_cast<std::size_t>(k)].canonical + ".");
  }
  for (const std::string& s : lex.shakespeare) c.snippets.push_back(c.make_doc(s));
  auto add_templates = [&](const std::vector<std::string>& tmpls) {
    for (std::string t : tmpls) {
      if (auto pos = t.find("[NOUN]"); pos != std::string::npos) t.erase(pos, 6);
      c.templates.push_back(c.make_doc(t));
    }
  };
  add_templates(lex.relevant_verbs);
  add_templates(lex.irrelevant_verbs);
  c.handbag = c.make_doc("handbag");
  return c;
}

struct Thresholds {
  double tau = 0.2;           // low-confidence cutoff the encoder ships with
  double style1_min = 0.21;   // canonical prompts must reach this, > tau
  double probe_margin = 0.03; // probe-class style-1 winner over runner-up
  int max_style1_wrong = 2;   // style-1 prompts allowed a wrong argmax
  int max_leak_pairs = 96;    // passage/class pairs at or above tau (of 320)
  double max_leak_cos = 0.75; // worst passage cosine
  int max_strays = 30;        // synonyms allowed to resolve to a wrong class
  int max_sweep_wrong_pct = 60;  // template x synonym prompts confidently wrong
};

// Lexicographic quality of a surviving salt; lower is better. sweep_wrong is
// last so the expensive template sweep can be skipped unless a candidate ties
// or beats the incumbent on everything before it.
struct Score {
  int style1_wrong = 0;
  int leak_pairs = 0;
  double leak_cos = 0;
  int strays = 0;
  int sweep_wrong = -1;  // -1: not computed yet
  double probe_margin = 0;

  bool prefix_less(const Score& o) const {
    if (style1_wrong != o.style1_wrong) return style1_wrong < o.style1_wrong;
    if (leak_pairs != o.leak_pairs) return leak_pairs < o.leak_pairs;
    if (leak_cos != o.leak_cos) return leak_cos < o.leak_cos;
    return strays < o.strays;
  }
  bool prefix_equal(const Score& o) const {
    return style1_wrong == o.style1_wrong && leak_pairs == o.leak_pairs &&
           leak_cos == o.leak_cos && strays == o.strays;
  }
  bool operator<(const Score& o) const {
    if (!prefix_equal(o)) return prefix_less(o);
    if (sweep_wrong != o.sweep_wrong) return sweep_wrong < o.sweep_wrong;
    return probe_margin > o.probe_margin;
  }
};

// Scratch reused across salts so the hot loop never allocates.
struct Scratch {
  std::vector<std::uint8_t> bucket;                 // token id -> bucket
  std::array<std::array<double, kDim>, kC> proto{}; // row-normalized
  std::array<int, 32> ubkt{};                       // sparse doc accumulation
  std::array<double, 32> ucnt{};
  std::vector<int> sweep_tok;                       // template + synonym
};

void hash_tokens(const Corpus& c, std::uint64_t salt, Scratch& s) {
  const std::uint64_t seeded = lamp::fnv1a64_u64(salt);
  s.bucket.resize(c.tokens.size());
  for (std::size_t i = 0; i < c.tokens.size(); ++i)
    s.bucket[i] = static_cast<std::uint8_t>(
        lamp::splitmix64(lamp::fnv1a64(c.tokens[i], seeded)) % kDim);
}

// Sparse (bucket, count) pairs for one token list; returns pair count.
int doc_pairs(const std::vector<int>& tok, Scratch& s) {
  int n = 0;
  for (int tid : tok) {
    int b = s.bucket[static_cast<std::size_t>(tid)];
    int j = 0;
    while (j < n && s.ubkt[static_cast<std::size_t>(j)] != b) ++j;
    if (j == n) {
      s.ubkt[static_cast<std::size_t>(n)] = b;
      s.ucnt[static_cast<std::size_t>(n)] = 1.0;
      ++n;
    } else {
      s.ucnt[static_cast<std::size_t>(j)] += 1.0;
    }
  }
  return n;
}

void build_prototypes(const Corpus& c, Scratch& s) {
  for (int k = 0; k < kC; ++k) {
    auto& row = s.proto[static_cast<std::size_t>(k)];
    row.fill(0.0);
    for (const Doc& d : c.synonyms[static_cast<std::size_t>(k)]) {
      int n = doc_pairs(d.tok, s);
      double norm = 0;
      for (int j = 0; j < n; ++j) {
        double cnt = s.ucnt[static_cast<std::size_t>(j)];
        norm += cnt * cnt;
      }
      norm = std::sqrt(norm);
      for (int j = 0; j < n; ++j)
        row[static_cast<std::size_t>(s.ubkt[static_cast<std::size_t>(j)])] +=
            s.ucnt[static_cast<std::size_t>(j)] / norm;
    }
    double norm = 0;
    for (double x : row) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : row) x /= norm;
  }
}

// Cosine of one token list against every prototype.
std::array<double, kC> doc_cos(const std::vector<int>& tok, Scratch& s) {
  std::array<double, kC> out{};
  int n = doc_pairs(tok, s);
  double norm = 0;
  for (int j = 0; j < n; ++j) {
    double cnt = s.ucnt[static_cast<std::size_t>(j)];
    norm += cnt * cnt;
  }
  norm = std::sqrt(norm);
  for (int k = 0; k < kC; ++k) {
    const auto& row = s.proto[static_cast<std::size_t>(k)];
    double dot = 0;
    for (int j = 0; j < n; ++j)
      dot += s.ucnt[static_cast<std::size_t>(j)] *
             row[static_cast<std::size_t>(s.ubkt[static_cast<std::size_t>(j)])];
    out[static_cast<std::size_t>(k)] = dot / norm;
  }
  return out;
}

// Stage a salt failed at, or kPass with its quality score (sweep left lazy).
enum Stage { kPass = 0, kStyle1, kCanonical, kSynonym, kHandbag, kLeak, kSweep, kStages };

int eval_salt(const Corpus& c, std::uint64_t salt, const Thresholds& th, Scratch& s,
              Score& score) {
  hash_tokens(c, salt, s);
  build_prototypes(c, s);
  score = Score{};

  for (int k = 0; k < kC; ++k) {
    auto cos = doc_cos(c.style1[static_cast<std::size_t>(k)].tok, s);
    double own = cos[static_cast<std::size_t>(k)];
    if (own < th.style1_min) return kStyle1;
    double other = -1e9;
    for (int j = 0; j < kC; ++j)
      if (j != k) other = std::max(other, cos[static_cast<std::size_t>(j)]);
    if (k == kProbeClass) {
      if (other > own - th.probe_margin) return kStyle1;
      score.probe_margin = own - other;
    } else if (other >= own && ++score.style1_wrong > th.max_style1_wrong) {
      return kStyle1;
    }
  }

  // The canonical noun is what style prompts and the probe lean on, so a
  // canonical that fails to self-identify is disqualifying. Other synonyms
  // ride on one or two buckets; wrong resolutions are counted and capped.
  for (int k = 0; k < kC; ++k) {
    bool first = true;
    for (const Doc& d : c.synonyms[static_cast<std::size_t>(k)]) {
      auto cos = doc_cos(d.tok, s);
      int best = 0;
      for (int j = 1; j < kC; ++j)
        if (cos[static_cast<std::size_t>(j)] > cos[static_cast<std::size_t>(best)]) best = j;
      double mx = cos[static_cast<std::size_t>(best)];
      if (first && (mx < th.tau || best != k)) return kCanonical;
      if (!first && mx >= th.tau && best != k && ++score.strays > th.max_strays)
        return kSynonym;
      first = false;
    }
  }

  {
    auto cos = doc_cos(c.handbag.tok, s);
    if (cos[static_cast<std::size_t>(lamp::env::ObjectClass::bag)] <=
        cos[static_cast<std::size_t>(lamp::env::ObjectClass::mug)])
      return kHandbag;
  }

  for (const Doc& d : c.snippets) {
    auto cos = doc_cos(d.tok, s);
    for (double x : cos) {
      if (x >= th.tau) ++score.leak_pairs;
      score.leak_cos = std::max(score.leak_cos, x);
    }
    if (score.leak_pairs > th.max_leak_pairs) return kLeak;
  }
  if (score.leak_cos > th.max_leak_cos) return kLeak;
  return kPass;
}

// Expensive part, run only on candidates that might beat the incumbent.
int sweep_wrong_count(const Corpus& c, Scratch& s) {
  int wrong = 0;
  for (int k = 0; k < kC; ++k) {
    for (const Doc& syn : c.synonyms[static_cast<std::size_t>(k)]) {
      for (const Doc& t : c.templates) {
        s.sweep_tok = t.tok;
        s.sweep_tok.insert(s.sweep_tok.end(), syn.tok.begin(), syn.tok.end());
        auto cos = doc_cos(s.sweep_tok, s);
        int best = 0;
        for (int j = 1; j < kC; ++j)
          if (cos[static_cast<std::size_t>(j)] > cos[static_cast<std::size_t>(best)]) best = j;
        if (cos[static_cast<std::size_t>(best)] >= 0.2 && best != k) ++wrong;
      }
    }
  }
  return wrong;
}

int sweep_total_count(const Corpus& c) {
  int syn = 0;
  for (int k = 0; k < kC; ++k) syn += static_cast<int>(c.synonyms[static_cast<std::size_t>(k)].size());
  return syn * static_cast<int>(c.templates.size());
}

// Slow-path re-check through the real encoder, plus the printed report.
bool report_salt(const lamp::prompts::Lexicons& lex, std::uint64_t salt, const Thresholds& th) {
  namespace enc = lamp::encoders;
  enc::EncoderConfig cfg;
  cfg.hash_salt = salt;
  enc::ClassPrototypes protos = enc::class_prototypes(lex, cfg);

  auto cos_all = [&](std::string_view text) {
    enc::LangEmbedding e = enc::embed_language(text, cfg);
    std::array<double, kC> out{};
    for (int k = 0; k < kC; ++k)
      out[static_cast<std::size_t>(k)] =
          enc::dot(e, protos.by_class[static_cast<std::size_t>(k)]);
    return out;
  };

  bool ok = true;
  std::vector<std::string> strays;
  int style1_wrong = 0, sweep_wrong = 0, sweep_total = 0;
  std::printf("salt 0x%llx\n", static_cast<unsigned long long>(salt));
  std::printf("%-8s %-8s %-8s %-8s %-10s\n", "class", "style1", "margin", "synmin", "resolve");

  double worst_style1 = 1e9, probe_margin = 0;
  for (int k = 0; k < kC; ++k) {
    const auto& entry = lex.nouns[static_cast<std::size_t>(k)];
    auto s1 = cos_all("Pick up the " + entry.canonical + ".");
    double own = s1[static_cast<std::size_t>(k)];
    double other = -1e9;
    for (int j = 0; j < kC; ++j)
      if (j != k) other = std::max(other, s1[static_cast<std::size_t>(j)]);
    worst_style1 = std::min(worst_style1, own);
    if (own < th.style1_min) ok = false;
    if (k == kProbeClass) {
      probe_margin = own - other;
      if (other > own - th.probe_margin) ok = false;
    } else if (other >= own) {
      ++style1_wrong;
    }

    double synmin = 1e9;
    for (const std::string& s : entry.synonyms) {
      auto cs = cos_all(s);
      int best = 0;
      for (int j = 1; j < kC; ++j)
        if (cs[static_cast<std::size_t>(j)] > cs[static_cast<std::size_t>(best)]) best = j;
      if (cs[static_cast<std::size_t>(best)] >= th.tau && best != k)
        strays.push_back(s + " -> " + lex.nouns[static_cast<std::size_t>(best)].canonical);
      synmin = std::min(synmin, cs[static_cast<std::size_t>(k)]);
    }

    int resolved = 0, total = 0;
    for (std::string t : lex.relevant_verbs) {
      if (auto pos = t.find("[NOUN]"); pos != std::string::npos) t.erase(pos, 6);
      for (const std::string& s : entry.synonyms) {
        auto cs = cos_all(t + " " + s);
        int best = 0;
        for (int j = 1; j < kC; ++j)
          if (cs[static_cast<std::size_t>(j)] > cs[static_cast<std::size_t>(best)]) best = j;
        ++total;
        if (cs[static_cast<std::size_t>(best)] >= th.tau) {
          if (best == k)
            ++resolved;
          else
            ++sweep_wrong;
        }
      }
    }
    sweep_total += total;
    std::printf("%-8s %-8.3f %-8.3f %-8.3f %3d/%-3d\n", entry.canonical.c_str(), own,
                own - std::max(other, 0.0), synmin, resolved, total);
  }
  if (style1_wrong > th.max_style1_wrong) ok = false;
  if (static_cast<int>(strays.size()) > th.max_strays) ok = false;

  for (std::string t : lex.irrelevant_verbs) {
    if (auto pos = t.find("[NOUN]"); pos != std::string::npos) t.erase(pos, 6);
    for (int k = 0; k < kC; ++k) {
      for (const std::string& s : lex.nouns[static_cast<std::size_t>(k)].synonyms) {
        auto cs = cos_all(t + " " + s);
        int best = 0;
        for (int j = 1; j < kC; ++j)
          if (cs[static_cast<std::size_t>(j)] > cs[static_cast<std::size_t>(best)]) best = j;
        ++sweep_total;
        if (cs[static_cast<std::size_t>(best)] >= th.tau && best != k) ++sweep_wrong;
      }
    }
  }
  if (sweep_wrong * 100 > sweep_total * th.max_sweep_wrong_pct) ok = false;

  int leak_pairs = 0;
  double snip_max = -1e9;
  std::string snip_arg;
  for (const std::string& s : lex.shakespeare) {
    auto cs = cos_all(s);
    for (double x : cs) {
      if (x >= th.tau) ++leak_pairs;
      if (x > snip_max) {
        snip_max = x;
        snip_arg = s;
      }
    }
  }
  if (leak_pairs > th.max_leak_pairs || snip_max > th.max_leak_cos) ok = false;

  auto hb = cos_all("handbag");
  bool hb_ok = hb[static_cast<std::size_t>(lamp::env::ObjectClass::bag)] >
               hb[static_cast<std::size_t>(lamp::env::ObjectClass::mug)];
  if (!hb_ok) ok = false;

  double pair_max = -1e9;
  for (int a = 0; a < kC; ++a)
    for (int b = a + 1; b < kC; ++b)
      pair_max = std::max(pair_max, static_cast<double>(enc::dot(
                                        protos.by_class[static_cast<std::size_t>(a)],
                                        protos.by_class[static_cast<std::size_t>(b)])));

  std::printf("style1 min      %.3f (floor %.2f), wrong argmax %d (cap %d)\n", worst_style1,
              th.style1_min, style1_wrong, th.max_style1_wrong);
  std::printf("probe margin    %.3f (floor %.2f)\n", probe_margin, th.probe_margin);
  std::printf("snippet leaks   %d/320 pairs >= tau (cap %d), max %.3f (\"%s\", cap %.2f)\n",
              leak_pairs, th.max_leak_pairs, snip_max, snip_arg.c_str(), th.max_leak_cos);
  std::printf("handbag         bag %.3f vs mug %.3f  %s\n",
              hb[static_cast<std::size_t>(lamp::env::ObjectClass::bag)],
              hb[static_cast<std::size_t>(lamp::env::ObjectClass::mug)], hb_ok ? "ok" : "WRONG");
  std::printf("proto pair max  %.3f\n", pair_max);
  std::printf("stray synonyms  %zu (cap %d)", strays.size(), th.max_strays);
  for (const std::string& s : strays) std::printf("  [%s]", s.c_str());
  std::printf("\n");
  std::printf("sweep wrong     %d/%d (cap %d%%)\n", sweep_wrong, sweep_total,
              th.max_sweep_wrong_pct);
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hash-salt scan for the language encoder"};
  std::uint64_t start = 1, count = 50'000'000, report = 0, stats = 0;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  Thresholds th;
  app.add_option("--start", start, "first salt to try");
  app.add_option("--count", count, "how many salts to scan");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--tau", th.tau, "low-confidence threshold");
  app.add_option("--style1-min", th.style1_min, "canonical prompt cosine floor");
  app.add_option("--probe-margin", th.probe_margin, "probe-class style-1 margin");
  app.add_option("--max-style1-wrong", th.max_style1_wrong, "style-1 wrong argmax cap");
  app.add_option("--max-leak-pairs", th.max_leak_pairs, "passage/class pairs >= tau");
  app.add_option("--max-leak-cos", th.max_leak_cos, "worst passage cosine");
  app.add_option("--max-strays", th.max_strays, "wrong synonyms cap");
  app.add_option("--max-sweep-pct", th.max_sweep_wrong_pct, "wrong template prompts, percent");
  app.add_option("--report", report, "skip the scan; report this salt");
  app.add_option("--stats", stats, "tally failure stages over this many salts");
  CLI11_PARSE(app, argc, argv);

  const lamp::prompts::Lexicons& lex = lamp::prompts::builtin_lexicons();
  if (report != 0) return report_salt(lex, report, th) ? 0 : 1;

  Corpus corpus = build_corpus(lex);
  if (threads < 1) threads = 1;

  if (stats != 0) {
    Scratch s;
    std::array<std::uint64_t, kStages> tally{};
    std::vector<double> own_mins, margin_mins;
    std::vector<int> leak_counts;
    for (std::uint64_t salt = start; salt < start + stats; ++salt) {
      Score sc;
      ++tally[static_cast<std::size_t>(eval_salt(corpus, salt, th, s, sc))];

      // Landscape regardless of gates, to pick reachable thresholds.
      hash_tokens(corpus, salt, s);
      build_prototypes(corpus, s);
      double own_min = 1e9, margin_min = 1e9;
      for (int k = 0; k < kC; ++k) {
        auto cos = doc_cos(corpus.style1[static_cast<std::size_t>(k)].tok, s);
        double own = cos[static_cast<std::size_t>(k)];
        own_min = std::min(own_min, own);
        for (int j = 0; j < kC; ++j)
          if (j != k) margin_min = std::min(margin_min, own - cos[static_cast<std::size_t>(j)]);
      }
      own_mins.push_back(own_min);
      margin_mins.push_back(margin_min);
      int leaks = 0;
      for (const Doc& d : corpus.snippets) {
        auto cos = doc_cos(d.tok, s);
        for (double x : cos)
          if (x >= th.tau) ++leaks;
      }
      leak_counts.push_back(leaks);
    }
    auto dquant = [](std::vector<double>& v, const char* name) {
      std::sort(v.begin(), v.end());
      std::size_t n = v.size();
      std::printf("%s: p50 %.3f p90 %.3f p99 %.3f max %.3f\n", name, v[n / 2], v[n * 9 / 10],
                  v[n * 99 / 100], v[n - 1]);
    };
    auto iquant = [](std::vector<int>& v, const char* name) {
      std::sort(v.begin(), v.end());
      std::size_t n = v.size();
      std::printf("%s: min %d p1 %d p10 %d p50 %d\n", name, v[0], v[n / 100], v[n / 10],
                  v[n / 2]);
    };
    dquant(own_mins, "style1 own min ");
    dquant(margin_mins, "style1 mrg min ");
    iquant(leak_counts, "snippet leaks  ");
    const char* names[kStages] = {"pass",    "style1", "canonical", "synonym",
                                  "handbag", "leak",   "sweep"};
    for (int i = 0; i < kStages; ++i)
      std::printf("%-10s %llu\n", names[i],
                  static_cast<unsigned long long>(tally[static_cast<std::size_t>(i)]));
    return tally[0] > 0 ? 0 : 1;
  }

  constexpr std::uint64_t kBlock = 8192;
  const std::uint64_t nblocks = (count + kBlock - 1) / kBlock;
  std::atomic<std::uint64_t> next{0};
  std::mutex mu;
  Score best;
  std::uint64_t best_salt = 0;
  bool have_best = false;

  auto t0 = std::chrono::steady_clock::now();
  auto worker = [&] {
    Scratch s;
    for (;;) {
      std::uint64_t b = next.fetch_add(1);
      if (b >= nblocks) break;
      std::uint64_t lo = start + b * kBlock;
      std::uint64_t hi = std::min(lo + kBlock, start + count);
      for (std::uint64_t salt = lo; salt < hi; ++salt) {
        if (salt == 0) continue;
        Score sc;
        if (eval_salt(corpus, salt, th, s, sc) != kPass) continue;
        {
          std::lock_guard<std::mutex> g(mu);
          if (have_best && best.prefix_less(sc)) continue;  // cannot win
        }
        sc.sweep_wrong = sweep_wrong_count(corpus, s);
        std::lock_guard<std::mutex> g(mu);
        if (!have_best || sc < best) {
          best = sc;
          best_salt = salt;
          have_best = true;
          std::fprintf(stderr,
                       "candidate 0x%llx: s1wrong %d leaks %d max %.3f strays %d sweep %d "
                       "probe-margin %.3f\n",
                       static_cast<unsigned long long>(salt), sc.style1_wrong, sc.leak_pairs,
                       sc.leak_cos, sc.strays, sc.sweep_wrong, sc.probe_margin);
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!have_best) {
    std::fprintf(stderr, "no salt in [%llu, %llu) passed (%.1fs)\n",
                 static_cast<unsigned long long>(start),
                 static_cast<unsigned long long>(start + count), dt);
    return 1;
  }
  int sweep_total = sweep_total_count(corpus);
  std::fprintf(stderr, "scanned %.1fs; best (sweep %d/%d):\n", dt, best.sweep_wrong,
               sweep_total);
  return report_salt(lex, best_salt, th) ? 0 : 1;
}
