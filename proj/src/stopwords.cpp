#include <string_view>
#include <unordered_set>

#include "picotag/patterns.hpp"

namespace picotag {

namespace {

// Static English function-word list used to keep unigram patterns to content
// words. Roughly the usual core-NLP inventory: determiners, prepositions,
// conjunctions, pronouns, auxiliaries and a few adverbial fillers.
const std::unordered_set<std::string_view>& stopword_set() {
  static const std::unordered_set<std::string_view> kStopwords = {
      "a",       "about",   "above",   "after",   "again",   "against",
      "all",     "also",    "am",      "an",      "and",     "any",
      "are",     "as",      "at",      "be",      "because", "been",
      "before",  "being",   "below",   "between", "both",    "but",
      "by",      "can",     "cannot",  "could",   "did",     "do",
      "does",    "doing",   "done",    "down",    "during",  "each",
      "either",  "etc",     "few",     "for",     "from",    "further",
      "had",     "has",     "have",    "having",  "he",      "her",
      "here",    "hers",    "herself", "him",     "himself", "his",
      "how",     "i",       "if",      "in",      "into",    "is",
      "it",      "its",     "itself",  "just",    "may",     "me",
      "might",   "more",    "most",    "must",    "my",      "myself",
      "neither", "no",      "nor",     "not",     "of",      "off",
      "on",      "once",    "only",    "onto",    "or",      "other",
      "our",     "ours",    "out",     "over",    "own",     "per",
      "same",    "shall",   "she",     "should",  "so",      "some",
      "such",    "than",    "that",    "the",     "their",   "theirs",
      "them",    "then",    "there",   "these",   "they",    "this",
      "those",   "through", "to",      "too",     "under",   "until",
      "up",      "upon",    "us",      "very",    "was",     "we",
      "were",    "what",    "when",    "where",   "whether", "which",
      "while",   "who",     "whom",    "whose",   "why",     "will",
      "with",    "within",  "without", "would",   "you",     "your",
      "yours",   "'s",      "'t",      "n't",
  };
  return kStopwords;
}

}  // namespace

bool is_stopword(std::string_view lower) {
  return stopword_set().count(lower) > 0;
}

}  // namespace picotag
