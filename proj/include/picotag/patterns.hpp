#ifndef PICOTAG_PATTERNS_HPP
#define PICOTAG_PATTERNS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "picotag/corpus.hpp"

namespace picotag {

// A scored 1-3 gram lexical-syntactic pattern.
struct Pattern {
  std::vector<std::string> grams;  // lowercased, 1..3, digit-free
  Category category = Category::P;
  std::uint64_t freq_rel = 0;
  std::uint64_t freq_total = 0;
  double prob = 0.0;   // freq_rel / freq_total
  double score = 0.0;  // prob * log2(freq_rel), -inf when freq_rel == 0

  std::string joined() const;  // grams joined by '_'
};

class PatternLexicon {
 public:
  void add(Pattern p);

  bool contains_unigram(Category cat, std::string_view lower) const;
  bool contains_bigram(Category cat, std::string_view first,
                       std::string_view second) const;

  // Longest pattern arity (3 or 2) whose grams match the lowercased tokens
  // starting at `i`, across all categories; 0 when nothing matches.
  // Unigrams never merge, so arity 1 is not reported here.
  std::size_t longest_match_at(const std::vector<Token>& tokens,
                               std::size_t i) const;

  const std::vector<Pattern>& patterns() const { return patterns_; }
  std::size_t size() const { return patterns_.size(); }
  bool empty() const { return patterns_.empty(); }

 private:
  std::vector<Pattern> patterns_;
  // index key: category byte + arity byte + grams joined by '\x1f'
  std::unordered_set<std::string> index_;
  std::size_t max_arity_ = 0;
};

bool is_stopword(std::string_view lower);
bool contains_digit(std::string_view s);

// N-gram candidates around the NP contexts of the sentence (chunked and
// role-assigned internally). All grams lowercased; anything containing a
// digit is dropped, and unigram candidates are NP heads minus stopwords.
std::vector<std::vector<std::string>> generate_candidates(
    const Sentence& sentence);

struct CandidateCount {
  std::vector<std::string> grams;
  std::uint64_t freq_rel = 0;
  std::uint64_t freq_irrel = 0;
};

// Occurrence counts of every generated candidate in each pool. Counts are
// additive across shards: counts(A + B) == counts(A) + counts(B) pointwise.
std::vector<CandidateCount> count_patterns(const SegmentCorpus& rel,
                                           const SegmentCorpus& irrel,
                                           Category category);

// prob = freq_rel / (freq_rel + freq_irrel); score = prob * log2(freq_rel)
// with a -infinity sentinel when freq_rel == 0. Throws std::domain_error when
// both counts are zero.
std::pair<double, double> score_pattern(std::uint64_t freq_rel,
                                        std::uint64_t freq_irrel);

struct MineOptions {
  std::uint64_t min_freq = 10;  // counted over both pools
  double min_prob = 0.8;
};

PatternLexicon mine_patterns(const SegmentCorpus& rel,
                             const SegmentCorpus& irrel, Category category,
                             const MineOptions& opts = {});

// Plain adjacent-token bigrams with the same thresholds and digit filter but
// no syntactic restriction.
PatternLexicon mine_bigrams_baseline(const SegmentCorpus& rel,
                                     const SegmentCorpus& irrel,
                                     Category category,
                                     const MineOptions& opts = {});

struct LexiconMatch {
  bool prev_bigram = false;  // (t[i-2], t[i-1]) is a bigram pattern
  bool cur_unigram = false;  // t[i] is a unigram pattern
  bool next_bigram = false;  // (t[i+1], t[i+2]) is a bigram pattern
};

// Trigram patterns are ignored at match time. Throws std::out_of_range for a
// bad index.
LexiconMatch match_lexicon(const Sentence& sentence,
                           const PatternLexicon& lexicon, Category category,
                           std::size_t i);

// TSV, sorted by score descending (ties by pattern string). Lines starting
// with '#' other than the header are treated as comments on read.
void write_lexicon_tsv(const PatternLexicon& lexicon, std::ostream& out,
                       const std::vector<std::string>& comments = {});
PatternLexicon read_lexicon_tsv(std::istream& in);

}  // namespace picotag

#endif  // PICOTAG_PATTERNS_HPP
