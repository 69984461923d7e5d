#ifndef PICOTAG_TESTS_FIXTURES_HPP
#define PICOTAG_TESTS_FIXTURES_HPP

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "picotag/corpus.hpp"
#include "picotag/patterns.hpp"

namespace picotag::testing {

using TokenSpec = std::pair<std::string, std::string>;  // surface, pos

inline Sentence make_sentence(const std::vector<TokenSpec>& specs) {
  Sentence s;
  for (const auto& [surface, pos] : specs) s.tokens.emplace_back(surface, pos);
  return s;
}

inline Sentence make_labeled(const std::vector<TokenSpec>& specs,
                             Category cat, const std::vector<int>& tags) {
  Sentence s = make_sentence(specs);
  std::vector<IoTag> io;
  for (int t : tags) io.push_back(t == 1 ? IoTag::In : IoTag::Out);
  s.labels[cat] = std::move(io);
  return s;
}

inline Pattern make_pattern(std::vector<std::string> grams, Category cat,
                            std::uint64_t freq_rel = 10,
                            std::uint64_t freq_irrel = 0) {
  Pattern p;
  p.grams = std::move(grams);
  p.category = cat;
  p.freq_rel = freq_rel;
  p.freq_total = freq_rel + freq_irrel;
  auto [prob, score] = score_pattern(freq_rel, freq_irrel);
  p.prob = prob;
  p.score = score;
  return p;
}

inline PatternLexicon make_lexicon(
    const std::vector<std::vector<std::string>>& grams, Category cat) {
  PatternLexicon lex;
  for (const auto& g : grams) lex.add(make_pattern(g, cat));
  return lex;
}

// The planted mining fixture. The relevant pool realizes "treated_with" 50
// times through rotating subjects/objects (so no other syntactic candidate
// reaches the frequency floor), plus an adjacent filler pair "really truly"
// that only the bigram baseline can see. Distractors: "random_noise" is a
// syntactic candidate occurring 50/50 across the pools (prob 0.5), and the
// irrelevant pool carries 2 occurrences of "treated with".
struct PlantedFixture {
  SegmentCorpus rel;
  SegmentCorpus irrel;
};

inline PlantedFixture planted_fixture() {
  PlantedFixture fx;
  auto seg = [](Category cat, const std::vector<TokenSpec>& specs) {
    return Segment{cat, make_sentence(specs)};
  };
  auto noun = [](int k, const char* stem) {
    return std::string(stem) + static_cast<char>('a' + k % 25);
  };

  for (int k = 0; k < 50; ++k) {
    // "really truly <subj> treated with <obj> ." — rule (a) gives
    // treated_with; subjects/objects rotate over 25 names, 2 uses each.
    fx.rel.segments.push_back(seg(
        Category::P, {{"really", "RB"},
                      {"truly", "RB"},
                      {noun(k, "subj"), "NNS"},
                      {"treated", "VBN"},
                      {"with", "IN"},
                      {noun(k, "obj"), "NN"},
                      {".", "."}}));
    // "<x> random noise <y> ." with "random" tagged as a noun and "noise" as
    // a preposition, so (random, noise) is a rule-(a) candidate.
    fx.rel.segments.push_back(seg(
        Category::P, {{noun(k, "filla"), "NN"},
                      {"random", "NN"},
                      {"noise", "IN"},
                      {noun(k, "fillb"), "NN"},
                      {".", "."}}));
  }
  for (int k = 0; k < 50; ++k) {
    fx.irrel.segments.push_back(seg(
        Category::P, {{noun(k, "fillc"), "NN"},
                      {"random", "NN"},
                      {"noise", "IN"},
                      {noun(k, "filld"), "NN"},
                      {".", "."}}));
  }
  for (int k = 0; k < 2; ++k) {
    fx.irrel.segments.push_back(seg(
        Category::P, {{noun(k, "subx"), "NNS"},
                      {"treated", "VBN"},
                      {"with", "IN"},
                      {noun(k, "objx"), "NN"},
                      {".", "."}}));
  }
  return fx;
}

// Separable toy corpus: the surface form decides the tag ("inx" tokens are
// In, "outx" tokens are Out). 50 sentences of length 6.
inline std::vector<Sentence> separable_corpus(Category cat,
                                              std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 4);
  std::bernoulli_distribution coin(0.4);
  std::vector<Sentence> out;
  for (int s = 0; s < 50; ++s) {
    std::vector<TokenSpec> specs;
    std::vector<int> tags;
    for (int t = 0; t < 6; ++t) {
      bool in = coin(rng);
      std::string word = (in ? "in" : "out") + std::to_string(pick(rng));
      specs.push_back({word, in ? "NN" : "VB"});
      tags.push_back(in ? 1 : 0);
    }
    out.push_back(make_labeled(specs, cat, tags));
  }
  return out;
}

}  // namespace picotag::testing

#endif  // PICOTAG_TESTS_FIXTURES_HPP
