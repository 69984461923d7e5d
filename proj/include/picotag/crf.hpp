#ifndef PICOTAG_CRF_HPP
#define PICOTAG_CRF_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "picotag/corpus.hpp"
#include "picotag/inference.hpp"
#include "picotag/patterns.hpp"

namespace picotag {

// Token-level feature templates. Transition features live outside this
// enumeration (they carry a label pair, not a payload).
enum class FeatTpl : std::uint8_t {
  Word0 = 0,
  Pos0,
  IsDigit,
  IsTitle,
  IsUpper,
  IsHyphen,
  Punct,       // payload: colon | fullstop | other_symbol | none
  WordPrev,    // word at i-1, BOS sentinel at the boundary
  WordNext,    // word at i+1, EOS sentinel
  BigramPrev,  // (t[i-2], t[i-1])
  BigramNext,  // (t[i+1], t[i+2])
  TrigramPrev,
  TrigramNext,
  PatternInd,  // payload: slot(prev|cur|next) ':' category letter
};

const char* feat_tpl_name(FeatTpl tpl);

struct Feature {
  FeatTpl tpl;
  std::string payload;
  bool operator==(const Feature&) const = default;
};

// The nine indicators, in the order
//   [prev-bigram P,I,O | cur-unigram P,I,O | next-bigram P,I,O].
std::array<bool, 9> pattern_indicator_block(
    const Sentence& sentence, std::size_t i,
    const std::array<PatternLexicon, 3>& lexicons);

// Token observables plus context n-grams; with_patterns adds the indicator
// features that are on at this position.
std::vector<Feature> extract_features(
    const Sentence& sentence, std::size_t i,
    const std::array<PatternLexicon, 3>& lexicons, bool with_patterns);

// Interned (template, payload) -> dense id map.
class FeatureIndex {
 public:
  int intern(const Feature& f);          // inserts when absent
  int lookup(const Feature& f) const;    // -1 when absent
  const Feature& feature(int id) const { return features_[id]; }
  std::size_t size() const { return features_.size(); }

 private:
  static std::string key(const Feature& f);
  std::unordered_map<std::string, int> ids_;
  std::vector<Feature> features_;
};

class CrfModel {
 public:
  CrfModel() = default;
  CrfModel(Category category, double l2, bool use_patterns,
           std::array<PatternLexicon, 3> lexicons);

  Category category() const { return category_; }
  double l2() const { return l2_; }
  bool use_patterns() const { return use_patterns_; }
  const std::array<PatternLexicon, 3>& lexicons() const { return lexicons_; }
  void set_lexicons(std::array<PatternLexicon, 3> lexicons);

  FeatureIndex& features() { return index_; }
  const FeatureIndex& features() const { return index_; }

  // Emission weights laid out as [feature_id * 2 + label]; transition
  // weights as [prev * 2 + cur].
  std::vector<double>& emission_weights() { return w_emit_; }
  const std::vector<double>& emission_weights() const { return w_emit_; }
  std::array<double, 4>& transition_weights() { return w_trans_; }
  const std::array<double, 4>& transition_weights() const { return w_trans_; }

  void sync_weight_size();  // grows w_emit_ after interning

  double squared_norm() const;

  void save(std::ostream& out) const;
  static CrfModel load(std::istream& in);

 private:
  Category category_ = Category::P;
  double l2_ = 0.0;
  bool use_patterns_ = false;
  std::array<PatternLexicon, 3> lexicons_;
  FeatureIndex index_;
  std::vector<double> w_emit_;
  std::array<double, 4> w_trans_{};
};

struct Potentials {
  EmissionTable emission;
  TransTable trans;
};

// emission[t][y] = sum of weights of features active at t conjoined with y;
// transition[a][b] = weight of the (a, b) transition feature.
Potentials log_potentials(const CrfModel& model, const Sentence& sentence);

std::vector<IoTag> viterbi_decode(const CrfModel& model,
                                  const Sentence& sentence);

struct CrfGradient {
  std::vector<double> d_emit;       // aligned with emission_weights()
  std::array<double, 4> d_trans{};  // aligned with transition_weights()
};

// loss = sum over the batch of (log Z - gold score) + (l2/2) * ||w||^2;
// gradient = expected feature counts - empirical counts + l2 * w.
// Features are interned on the fly (new ones start at weight zero).
std::pair<double, CrfGradient> nll_and_gradient(CrfModel& model,
                                                std::span<const Sentence> batch,
                                                Category category);

struct CrfTrainConfig {
  double l2 = 1e-4;
  int epochs = 20;
  std::size_t batch_size = 8;
  double lr = 0.5;
  double decay = 0.05;  // step size lr / (1 + decay * epoch)
  std::uint64_t seed = 1;
  int patience = 0;  // 0 disables early stopping even with a dev set
};

// Mini-batch SGD, shuffled per epoch under the seed. With a dev set, returns
// the snapshot with the best dev F1; otherwise the final model.
CrfModel train_crf(const std::vector<Sentence>& train, Category category,
                   const CrfTrainConfig& config,
                   std::array<PatternLexicon, 3> lexicons, bool use_patterns,
                   const std::vector<Sentence>* dev = nullptr);

}  // namespace picotag

#endif  // PICOTAG_CRF_HPP
