#include "picotag/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "picotag/chunker.hpp"

namespace picotag {

namespace {

constexpr char kGramSep = '\x1f';

std::string gram_key(Category cat, const std::vector<std::string>& grams) {
  std::string key;
  key += static_cast<char>(static_cast<int>(cat) + 1);
  key += static_cast<char>('0' + grams.size());
  for (const auto& g : grams) {
    key += kGramSep;
    key += g;
  }
  return key;
}

std::string merge_key(std::size_t arity, const std::vector<Token>& tokens,
                      std::size_t begin) {
  std::string key;
  key += static_cast<char>('0' + arity);
  for (std::size_t k = 0; k < arity; ++k) {
    key += kGramSep;
    key += tokens[begin + k].lower;
  }
  return key;
}

}  // namespace

std::string Pattern::joined() const {
  std::string out;
  for (std::size_t i = 0; i < grams.size(); ++i) {
    if (i > 0) out += '_';
    out += grams[i];
  }
  return out;
}

void PatternLexicon::add(Pattern p) {
  std::string key = gram_key(p.category, p.grams);
  if (!index_.insert(key).second) return;  // duplicate gram sequence

  std::string any;
  any += static_cast<char>('0' + p.grams.size());
  for (const auto& g : p.grams) {
    any += kGramSep;
    any += g;
  }
  index_.insert("*" + any);
  max_arity_ = std::max(max_arity_, p.grams.size());
  patterns_.push_back(std::move(p));
}

bool PatternLexicon::contains_unigram(Category cat,
                                      std::string_view lower) const {
  std::string key;
  key += static_cast<char>(static_cast<int>(cat) + 1);
  key += '1';
  key += kGramSep;
  key += lower;
  return index_.count(key) > 0;
}

bool PatternLexicon::contains_bigram(Category cat, std::string_view first,
                                     std::string_view second) const {
  std::string key;
  key += static_cast<char>(static_cast<int>(cat) + 1);
  key += '2';
  key += kGramSep;
  key += first;
  key += kGramSep;
  key += second;
  return index_.count(key) > 0;
}

std::size_t PatternLexicon::longest_match_at(const std::vector<Token>& tokens,
                                             std::size_t i) const {
  std::size_t longest = std::min(max_arity_, tokens.size() - i);
  for (std::size_t arity = longest; arity >= 2; --arity) {
    bool clean = true;
    for (std::size_t k = 0; k < arity; ++k) {
      if (tokens[i + k].surface.find('_') != std::string::npos) {
        clean = false;
        break;
      }
    }
    if (clean && index_.count("*" + merge_key(arity, tokens, i)) > 0) {
      return arity;
    }
  }
  return 0;
}

bool contains_digit(std::string_view s) {
  return s.find_first_of("0123456789") != std::string_view::npos;
}

std::vector<std::vector<std::string>> generate_candidates(
    const Sentence& sentence) {
  const auto& toks = sentence.tokens;
  auto spans = assign_roles(sentence, chunk_nps(sentence));

  std::vector<std::vector<std::string>> out;
  auto emit = [&out](std::vector<std::string> grams) {
    for (const auto& g : grams) {
      if (contains_digit(g)) return;
    }
    out.push_back(std::move(grams));
  };

  for (const auto& span : spans) {
    const std::string& head = toks[span.head].lower;

    if (!is_stopword(head)) emit({head});

    if (span.end < toks.size() &&
        (toks[span.end].pos == "WDT" || toks[span.end].pos == "WP")) {
      emit({head, toks[span.end].lower});
    }

    switch (span.role) {
      case NpRole::PrepObject: {
        std::size_t g = *span.governor;
        if (g >= 1 &&
            (is_noun_pos(toks[g - 1].pos) || is_verb_pos(toks[g - 1].pos))) {
          emit({toks[g - 1].lower, toks[g].lower});
        }
        if (g >= 2 && is_prep_pos(toks[g - 1].pos) &&
            is_verb_pos(toks[g - 2].pos)) {
          emit({toks[g - 2].lower, toks[g - 1].lower, toks[g].lower});
        }
        break;
      }
      case NpRole::Subject:
        emit({head, toks[*span.governor].lower});
        break;
      case NpRole::DirectObject:
      case NpRole::IndirectObject:
        emit({toks[*span.governor].lower, head});
        break;
      case NpRole::Other:
        break;
    }
  }
  return out;
}

std::vector<CandidateCount> count_patterns(const SegmentCorpus& rel,
                                           const SegmentCorpus& irrel,
                                           Category /*category*/) {
  std::map<std::vector<std::string>, std::pair<std::uint64_t, std::uint64_t>>
      counts;
  for (const auto& seg : rel.segments) {
    for (auto& cand : generate_candidates(seg.sentence)) {
      ++counts[std::move(cand)].first;
    }
  }
  for (const auto& seg : irrel.segments) {
    for (auto& cand : generate_candidates(seg.sentence)) {
      ++counts[std::move(cand)].second;
    }
  }
  std::vector<CandidateCount> out;
  out.reserve(counts.size());
  for (auto& [grams, c] : counts) {
    out.push_back({grams, c.first, c.second});
  }
  return out;
}

std::pair<double, double> score_pattern(std::uint64_t freq_rel,
                                        std::uint64_t freq_irrel) {
  if (freq_rel + freq_irrel == 0) {
    throw std::domain_error("score_pattern: both counts are zero");
  }
  double prob = static_cast<double>(freq_rel) /
                static_cast<double>(freq_rel + freq_irrel);
  double score = freq_rel == 0
                     ? -std::numeric_limits<double>::infinity()
                     : prob * std::log2(static_cast<double>(freq_rel));
  return {prob, score};
}

namespace {

PatternLexicon build_lexicon(std::vector<CandidateCount> counts,
                             Category category, const MineOptions& opts) {
  PatternLexicon lexicon;
  for (auto& cc : counts) {
    std::uint64_t total = cc.freq_rel + cc.freq_irrel;
    if (total < opts.min_freq) continue;
    auto [prob, score] = score_pattern(cc.freq_rel, cc.freq_irrel);
    if (prob < opts.min_prob) continue;
    Pattern p;
    p.grams = std::move(cc.grams);
    p.category = category;
    p.freq_rel = cc.freq_rel;
    p.freq_total = total;
    p.prob = prob;
    p.score = score;
    lexicon.add(std::move(p));
  }
  return lexicon;
}

}  // namespace

PatternLexicon mine_patterns(const SegmentCorpus& rel,
                             const SegmentCorpus& irrel, Category category,
                             const MineOptions& opts) {
  return build_lexicon(count_patterns(rel, irrel, category), category, opts);
}

PatternLexicon mine_bigrams_baseline(const SegmentCorpus& rel,
                                     const SegmentCorpus& irrel,
                                     Category category,
                                     const MineOptions& opts) {
  std::map<std::vector<std::string>, std::pair<std::uint64_t, std::uint64_t>>
      counts;
  auto count_pool = [&counts](const SegmentCorpus& pool, bool relevant) {
    for (const auto& seg : pool.segments) {
      const auto& toks = seg.sentence.tokens;
      for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        if (contains_digit(toks[i].lower) || contains_digit(toks[i + 1].lower))
          continue;
        std::vector<std::string> bigram = {toks[i].lower, toks[i + 1].lower};
        auto& c = counts[std::move(bigram)];
        if (relevant) {
          ++c.first;
        } else {
          ++c.second;
        }
      }
    }
  };
  count_pool(rel, true);
  count_pool(irrel, false);

  std::vector<CandidateCount> flat;
  flat.reserve(counts.size());
  for (auto& [grams, c] : counts) flat.push_back({grams, c.first, c.second});
  return build_lexicon(std::move(flat), category, opts);
}

LexiconMatch match_lexicon(const Sentence& sentence,
                           const PatternLexicon& lexicon, Category category,
                           std::size_t i) {
  const auto& toks = sentence.tokens;
  if (i >= toks.size()) {
    throw std::out_of_range("match_lexicon: token index " + std::to_string(i) +
                            " out of range for sentence of length " +
                            std::to_string(toks.size()));
  }
  LexiconMatch m;
  if (i >= 2) {
    m.prev_bigram =
        lexicon.contains_bigram(category, toks[i - 2].lower, toks[i - 1].lower);
  }
  m.cur_unigram = lexicon.contains_unigram(category, toks[i].lower);
  if (i + 2 < toks.size()) {
    m.next_bigram =
        lexicon.contains_bigram(category, toks[i + 1].lower, toks[i + 2].lower);
  }
  return m;
}

void write_lexicon_tsv(const PatternLexicon& lexicon, std::ostream& out,
                       const std::vector<std::string>& comments) {
  out << "#category\tpattern\tfreq_rel\tfreq_total\tprob\tscore\n";
  for (const auto& c : comments) out << "# " << c << '\n';

  std::vector<const Pattern*> rows;
  rows.reserve(lexicon.patterns().size());
  for (const auto& p : lexicon.patterns()) rows.push_back(&p);
  std::sort(rows.begin(), rows.end(), [](const Pattern* a, const Pattern* b) {
    if (a->score != b->score) return a->score > b->score;
    if (auto c = a->joined().compare(b->joined()); c != 0) return c < 0;
    return a->category < b->category;
  });

  char buf[64];
  for (const Pattern* p : rows) {
    out << category_letter(p->category) << '\t' << p->joined() << '\t'
        << p->freq_rel << '\t' << p->freq_total << '\t';
    std::snprintf(buf, sizeof(buf), "%.6f", p->prob);
    out << buf << '\t';
    if (std::isfinite(p->score)) {
      std::snprintf(buf, sizeof(buf), "%.6f", p->score);
      out << buf << '\n';
    } else {
      out << "-inf\n";
    }
  }
}

PatternLexicon read_lexicon_tsv(std::istream& in) {
  PatternLexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string cat_s, joined, freq_rel_s, freq_total_s, prob_s, score_s;
    if (!std::getline(row, cat_s, '\t') || !std::getline(row, joined, '\t') ||
        !std::getline(row, freq_rel_s, '\t') ||
        !std::getline(row, freq_total_s, '\t') ||
        !std::getline(row, prob_s, '\t') || !std::getline(row, score_s)) {
      throw ParseError(line_no, "lexicon row needs 6 tab-separated fields");
    }
    auto cat = cat_s.size() == 1 ? category_from_letter(cat_s[0])
                                 : std::nullopt;
    if (!cat) throw ParseError(line_no, "unknown category " + cat_s);

    Pattern p;
    p.category = *cat;
    std::string gram;
    std::istringstream grams(joined);
    while (std::getline(grams, gram, '_')) p.grams.push_back(gram);
    if (p.grams.empty() || p.grams.size() > 3) {
      throw ParseError(line_no, "pattern arity must be 1..3: " + joined);
    }
    try {
      p.freq_rel = std::stoull(freq_rel_s);
      p.freq_total = std::stoull(freq_total_s);
      p.prob = std::stod(prob_s);
      p.score = std::stod(score_s);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad numeric field");
    }
    lexicon.add(std::move(p));
  }
  return lexicon;
}

}  // namespace picotag
