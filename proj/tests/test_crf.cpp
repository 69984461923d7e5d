#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "picotag/crf.hpp"
#include "picotag/metrics.hpp"

using namespace picotag;
using picotag::testing::make_labeled;
using picotag::testing::make_lexicon;
using picotag::testing::make_sentence;
using picotag::testing::separable_corpus;

namespace {

std::array<PatternLexicon, 3> no_lexicons() { return {}; }

Sentence chronic_sentence() {
  return make_sentence({{"patients", "NNS"},
                        {"with", "IN"},
                        {"chronic", "JJ"},
                        {"sinus", "NN"},
                        {"issues", "NNS"}});
}

std::array<PatternLexicon, 3> chronic_lexicons() {
  std::array<PatternLexicon, 3> lex;
  lex[0] = make_lexicon({{"patients", "with"}}, Category::P);
  return lex;
}

bool has_feature(const std::vector<Feature>& feats, FeatTpl tpl,
                 const std::string& payload) {
  return std::find(feats.begin(), feats.end(), Feature{tpl, payload}) !=
         feats.end();
}

// random labeled sentences over a small vocabulary
std::vector<Sentence> random_sentences(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 7);
  std::uniform_int_distribution<int> word(0, 8);
  std::bernoulli_distribution coin(0.4);
  std::vector<Sentence> out;
  for (int s = 0; s < n; ++s) {
    std::vector<picotag::testing::TokenSpec> specs;
    std::vector<int> tags;
    int T = len(rng);
    for (int t = 0; t < T; ++t) {
      specs.push_back({"w" + std::to_string(word(rng)), "NN"});
      tags.push_back(coin(rng) ? 1 : 0);
    }
    out.push_back(make_labeled(specs, Category::P, tags));
  }
  return out;
}

double token_accuracy(const CrfModel& model,
                      const std::vector<Sentence>& data) {
  std::size_t hit = 0, total = 0;
  for (const auto& s : data) {
    auto pred = viterbi_decode(model, s);
    const auto& gold = s.labels.at(model.category());
    for (std::size_t t = 0; t < gold.size(); ++t) {
      hit += pred[t] == gold[t];
      ++total;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("indicator block for 'chronic' matches the worked example") {
  auto block = pattern_indicator_block(chronic_sentence(), 2,
                                       chronic_lexicons());
  std::array<bool, 9> expect = {true, false, false, false, false,
                                false, false, false, false};
  CHECK(block == expect);
}

TEST_CASE("extract_features: observables and context") {
  Sentence s = chronic_sentence();
  auto feats = extract_features(s, 2, chronic_lexicons(), true);
  CHECK(has_feature(feats, FeatTpl::Word0, "chronic"));
  CHECK(has_feature(feats, FeatTpl::Pos0, "JJ"));
  CHECK(has_feature(feats, FeatTpl::WordPrev, "with"));
  CHECK(has_feature(feats, FeatTpl::WordNext, "sinus"));
  CHECK(has_feature(feats, FeatTpl::Punct, "none"));
  CHECK(has_feature(feats, FeatTpl::PatternInd, "prev:P"));
  CHECK_FALSE(has_feature(feats, FeatTpl::PatternInd, "cur:P"));
  CHECK_FALSE(has_feature(feats, FeatTpl::PatternInd, "next:P"));

  SUBCASE("without patterns no indicator features appear") {
    auto plain = extract_features(s, 2, chronic_lexicons(), false);
    for (const auto& f : plain) CHECK(f.tpl != FeatTpl::PatternInd);
  }
}

TEST_CASE("extract_features: boundary sentinels") {
  Sentence s = make_sentence({{"alpha", "NN"}, {"beta", "NN"}});
  auto at0 = extract_features(s, 0, no_lexicons(), false);
  CHECK(has_feature(at0, FeatTpl::WordPrev, "<BOS>"));
  CHECK(has_feature(at0, FeatTpl::BigramPrev,
                    std::string("<BOS>") + '\x1f' + "<BOS>"));
  auto at1 = extract_features(s, 1, no_lexicons(), false);
  CHECK(has_feature(at1, FeatTpl::WordNext, "<EOS>"));
  CHECK(has_feature(at1, FeatTpl::BigramPrev,
                    std::string("<BOS>") + '\x1f' + "alpha"));
}

TEST_CASE("extract_features: surface predicates") {
  Sentence s = make_sentence({{"ABC-123", "NN"},
                              {"Chronic", "JJ"},
                              {"230", "CD"},
                              {"WHO", "NNP"},
                              {":", ":"},
                              {".", "."},
                              {"+/-", "SYM"}});
  auto f0 = extract_features(s, 0, no_lexicons(), false);
  CHECK_FALSE(has_feature(f0, FeatTpl::IsDigit, ""));
  CHECK(has_feature(f0, FeatTpl::IsHyphen, ""));
  CHECK_FALSE(has_feature(f0, FeatTpl::IsUpper, ""));
  CHECK_FALSE(has_feature(f0, FeatTpl::IsTitle, ""));

  auto f1 = extract_features(s, 1, no_lexicons(), false);
  CHECK(has_feature(f1, FeatTpl::IsTitle, ""));
  auto f2 = extract_features(s, 2, no_lexicons(), false);
  CHECK(has_feature(f2, FeatTpl::IsDigit, ""));
  auto f3 = extract_features(s, 3, no_lexicons(), false);
  CHECK(has_feature(f3, FeatTpl::IsUpper, ""));
  auto f4 = extract_features(s, 4, no_lexicons(), false);
  CHECK(has_feature(f4, FeatTpl::Punct, "colon"));
  auto f5 = extract_features(s, 5, no_lexicons(), false);
  CHECK(has_feature(f5, FeatTpl::Punct, "fullstop"));
  auto f6 = extract_features(s, 6, no_lexicons(), false);
  CHECK(has_feature(f6, FeatTpl::Punct, "other_symbol"));
}

TEST_CASE("log_potentials: zero weights, linearity, additivity") {
  CrfModel model(Category::P, 0.0, false, no_lexicons());
  Sentence s = make_labeled({{"a", "NN"}, {"b", "NN"}}, Category::P, {0, 1});
  std::vector<Sentence> batch = {s};
  nll_and_gradient(model, batch, Category::P);  // interns the features

  Potentials zero = log_potentials(model, s);
  for (const auto& row : zero.emission) {
    CHECK(row[0] == 0.0);
    CHECK(row[1] == 0.0);
  }

  // single-weight bump changes exactly the matching cells
  int id = model.features().lookup({FeatTpl::Word0, "a"});
  REQUIRE(id >= 0);
  model.emission_weights()[2 * id + 1] += 0.75;
  Potentials bumped = log_potentials(model, s);
  CHECK(bumped.emission[0][1] == doctest::Approx(0.75));
  CHECK(bumped.emission[0][0] == 0.0);
  CHECK(bumped.emission[1][1] == 0.0);

  // potentials are additive in the weights
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> w1(model.emission_weights().size());
  std::vector<double> w2(model.emission_weights().size());
  for (auto& w : w1) w = g(rng);
  for (auto& w : w2) w = g(rng);

  auto with_weights = [&](const std::vector<double>& w) {
    model.emission_weights() = w;
    return log_potentials(model, s);
  };
  auto p1 = with_weights(w1);
  auto p2 = with_weights(w2);
  std::vector<double> sum(w1.size());
  for (std::size_t i = 0; i < w1.size(); ++i) sum[i] = w1[i] + w2[i];
  auto ps = with_weights(sum);
  for (std::size_t t = 0; t < s.size(); ++t) {
    for (int y = 0; y < 2; ++y) {
      CHECK(ps.emission[t][y] ==
            doctest::Approx(p1.emission[t][y] + p2.emission[t][y])
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("nll: zero weights on a single token costs log 2") {
  CrfModel model(Category::P, 0.0, false, no_lexicons());
  std::vector<Sentence> batch = {
      make_labeled({{"x", "NN"}}, Category::P, {1})};
  auto [loss, grad] = nll_and_gradient(model, batch, Category::P);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("nll: duplicated sentence doubles the data term") {
  std::mt19937_64 rng(13);
  auto sentences = random_sentences(1, rng);
  CrfModel model(Category::P, 0.3, false, no_lexicons());
  std::vector<Sentence> once = {sentences[0]};
  std::vector<Sentence> twice = {sentences[0], sentences[0]};
  nll_and_gradient(model, twice, Category::P);  // intern everything first

  // randomize weights so the data term is nonzero
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto& w : model.emission_weights()) w = g(rng);
  for (auto& w : model.transition_weights()) w = g(rng);

  double reg = 0.5 * model.l2() * model.squared_norm();
  auto [l1, g1] = nll_and_gradient(model, once, Category::P);
  auto [l2, g2] = nll_and_gradient(model, twice, Category::P);
  CHECK(l2 - reg == doctest::Approx(2.0 * (l1 - reg)).epsilon(1e-10));
}

TEST_CASE("nll: missing labels raise an error") {
  CrfModel model(Category::P, 0.0, false, no_lexicons());
  std::vector<Sentence> batch = {make_sentence({{"x", "NN"}})};
  CHECK_THROWS_AS(nll_and_gradient(model, batch, Category::P),
                  std::invalid_argument);
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> g(0.0, 0.8);
  const double h = 1e-5;

  double max_rel = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    auto batch = random_sentences(4, rng);
    CrfModel model(Category::P, 0.1, false, no_lexicons());
    nll_and_gradient(model, batch, Category::P);
    for (auto& w : model.emission_weights()) w = g(rng);
    for (auto& w : model.transition_weights()) w = g(rng);

    auto [loss, grad] = nll_and_gradient(model, batch, Category::P);

    std::uniform_int_distribution<std::size_t> pick(
        0, model.emission_weights().size() - 1);
    for (int k = 0; k < 20; ++k) {
      std::size_t i = pick(rng);
      double saved = model.emission_weights()[i];
      model.emission_weights()[i] = saved + h;
      double up = nll_and_gradient(model, batch, Category::P).first;
      model.emission_weights()[i] = saved - h;
      double down = nll_and_gradient(model, batch, Category::P).first;
      model.emission_weights()[i] = saved;
      double fd = (up - down) / (2 * h);
      double rel = std::abs(fd - grad.d_emit[i]) /
                   std::max({std::abs(fd), std::abs(grad.d_emit[i]), 1e-3});
      max_rel = std::max(max_rel, rel);
    }
    for (int i = 0; i < 4; ++i) {
      double saved = model.transition_weights()[i];
      model.transition_weights()[i] = saved + h;
      double up = nll_and_gradient(model, batch, Category::P).first;
      model.transition_weights()[i] = saved - h;
      double down = nll_and_gradient(model, batch, Category::P).first;
      model.transition_weights()[i] = saved;
      double fd = (up - down) / (2 * h);
      double rel = std::abs(fd - grad.d_trans[i]) /
                   std::max({std::abs(fd), std::abs(grad.d_trans[i]), 1e-3});
      max_rel = std::max(max_rel, rel);
    }
  }
  CHECK(max_rel < 1e-6);
}

TEST_CASE("gradient vanishes at the empirical distribution") {
  // one-token universe: 3 of 4 sentences are In; set the word weight so the
  // model's In probability is exactly 3/4, with no regularizer
  std::vector<Sentence> batch;
  for (int k = 0; k < 3; ++k) {
    batch.push_back(make_labeled({{"w", "NN"}}, Category::P, {1}));
  }
  batch.push_back(make_labeled({{"w", "NN"}}, Category::P, {0}));

  CrfModel model(Category::P, 0.0, false, no_lexicons());
  nll_and_gradient(model, batch, Category::P);

  // every feature at the single position is active in every sentence, so a
  // single bias via one feature suffices: In - Out = log 3
  int id = model.features().lookup({FeatTpl::Word0, "w"});
  REQUIRE(id >= 0);
  model.emission_weights()[2 * id + 1] = std::log(3.0);

  auto [loss, grad] = nll_and_gradient(model, batch, Category::P);
  for (double d : grad.d_emit) CHECK(std::abs(d) < 1e-10);
}

TEST_CASE("viterbi_decode: untrained model predicts all Out") {
  CrfModel model(Category::P, 0.0, false, no_lexicons());
  auto pred = viterbi_decode(model, chronic_sentence());
  for (IoTag t : pred) CHECK(t == IoTag::Out);
}

TEST_CASE("viterbi_decode: strong emission flips one position") {
  CrfModel model(Category::P, 0.0, false, no_lexicons());
  Sentence s = make_labeled({{"a", "NN"}, {"b", "NN"}, {"c", "NN"}},
                            Category::P, {0, 0, 0});
  std::vector<Sentence> batch = {s};
  nll_and_gradient(model, batch, Category::P);
  int id = model.features().lookup({FeatTpl::Word0, "b"});
  REQUIRE(id >= 0);
  model.emission_weights()[2 * id + 1] = 10.0;
  auto pred = viterbi_decode(model, s);
  CHECK(pred == std::vector<IoTag>{IoTag::Out, IoTag::In, IoTag::Out});
}

TEST_CASE("training fits the separable corpus") {
  auto corpus = separable_corpus(Category::P);
  CrfTrainConfig config;
  config.epochs = 20;
  config.l2 = 1e-4;
  config.seed = 3;
  CrfModel model = train_crf(corpus, Category::P, config, no_lexicons(), false);
  CHECK(token_accuracy(model, corpus) >= 0.99);
}

TEST_CASE("training is deterministic given the seed") {
  auto corpus = separable_corpus(Category::P);
  CrfTrainConfig config;
  config.epochs = 5;
  config.seed = 17;
  CrfModel a = train_crf(corpus, Category::P, config, no_lexicons(), false);
  CrfModel b = train_crf(corpus, Category::P, config, no_lexicons(), false);
  REQUIRE(a.emission_weights().size() == b.emission_weights().size());
  for (std::size_t i = 0; i < a.emission_weights().size(); ++i) {
    CHECK(a.emission_weights()[i] == b.emission_weights()[i]);
  }
  for (int i = 0; i < 4; ++i) {
    CHECK(a.transition_weights()[i] == b.transition_weights()[i]);
  }
}

TEST_CASE("weight norm decreases monotonically in l2") {
  auto corpus = separable_corpus(Category::P);
  double prev = std::numeric_limits<double>::infinity();
  for (double l2 : {0.0, 0.01, 0.1, 1.0}) {
    CrfTrainConfig config;
    config.epochs = 8;
    config.l2 = l2;
    config.seed = 5;
    CrfModel model =
        train_crf(corpus, Category::P, config, no_lexicons(), false);
    double norm = std::sqrt(model.squared_norm());
    CHECK(norm < prev);
    prev = norm;
  }
}

TEST_CASE("empty training data is rejected") {
  CrfTrainConfig config;
  CHECK_THROWS_AS(
      train_crf({}, Category::P, config, no_lexicons(), false),
      std::invalid_argument);
}

TEST_CASE("pattern features with empty lexicons change nothing") {
  auto corpus = separable_corpus(Category::P);
  CrfTrainConfig config;
  config.epochs = 6;
  config.seed = 21;
  CrfModel plain =
      train_crf(corpus, Category::P, config, no_lexicons(), false);
  CrfModel with_empty =
      train_crf(corpus, Category::P, config, no_lexicons(), true);
  for (const auto& s : corpus) {
    CHECK(viterbi_decode(plain, s) == viterbi_decode(with_empty, s));
  }
}

TEST_CASE("model JSON round trip preserves weights exactly") {
  auto corpus = separable_corpus(Category::P);
  CrfTrainConfig config;
  config.epochs = 3;
  config.seed = 9;
  CrfModel model = train_crf(corpus, Category::P, config, no_lexicons(), false);

  std::stringstream buf;
  model.save(buf);
  CrfModel loaded = CrfModel::load(buf);

  CHECK(loaded.category() == model.category());
  CHECK(loaded.l2() == model.l2());
  REQUIRE(loaded.features().size() == model.features().size());
  for (const auto& s : corpus) {
    Potentials a = log_potentials(model, s);
    Potentials b = log_potentials(loaded, s);
    for (std::size_t t = 0; t < s.size(); ++t) {
      CHECK(a.emission[t][0] == b.emission[t][0]);
      CHECK(a.emission[t][1] == b.emission[t][1]);
    }
  }
}

TEST_CASE("dev set selects the best snapshot") {
  auto corpus = separable_corpus(Category::P);
  std::vector<Sentence> dev(corpus.begin(), corpus.begin() + 10);
  CrfTrainConfig config;
  config.epochs = 10;
  config.patience = 3;
  config.seed = 2;
  CrfModel model =
      train_crf(corpus, Category::P, config, no_lexicons(), false, &dev);
  PrfScore score;
  for (const auto& s : dev) {
    score += token_prf({s.labels.at(Category::P)}, {viterbi_decode(model, s)});
  }
  CHECK(score.f1() > 0.9);
}
