#include "picotag/chunker.hpp"

#include <unordered_map>

namespace picotag {

namespace {

bool is_det_pos(std::string_view pos) { return pos == "DT" || pos == "PDT"; }

bool is_modifier_pos(std::string_view pos) {
  return pos == "JJ" || pos == "JJR" || pos == "JJS" || pos == "VBN" ||
         pos == "VBG";
}

bool is_be_form(std::string_view lower) {
  return lower == "am" || lower == "is" || lower == "are" || lower == "was" ||
         lower == "were" || lower == "be" || lower == "been" ||
         lower == "being";
}

}  // namespace

bool is_noun_pos(std::string_view pos) {
  return pos == "NN" || pos == "NNS" || pos == "NNP" || pos == "NNPS" ||
         pos == "CD";
}

bool is_verb_pos(std::string_view pos) {
  return pos.size() >= 2 && pos[0] == 'V' && pos[1] == 'B';
}

bool is_prep_pos(std::string_view pos) { return pos == "IN" || pos == "TO"; }

std::vector<NpSpan> chunk_nps(const Sentence& sentence) {
  const auto& toks = sentence.tokens;
  std::vector<NpSpan> spans;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t j = i;
    if (j < toks.size() && is_det_pos(toks[j].pos)) ++j;
    while (j < toks.size() && is_modifier_pos(toks[j].pos)) ++j;
    std::size_t noun_begin = j;
    while (j < toks.size() && is_noun_pos(toks[j].pos)) ++j;
    if (j == noun_begin) {
      ++i;  // no noun here, try the next start
      continue;
    }
    NpSpan span;
    span.start = i;
    span.end = j;
    span.head = j - 1;  // last noun-family token
    spans.push_back(span);
    i = j;
  }
  return spans;
}

std::vector<NpSpan> assign_roles(const Sentence& sentence,
                                 std::vector<NpSpan> spans) {
  const auto& toks = sentence.tokens;
  std::vector<int> span_of(toks.size(), -1);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    for (std::size_t t = spans[s].start; t < spans[s].end; ++t) {
      span_of[t] = static_cast<int>(s);
    }
  }

  // verb index -> span index of its direct object, filled left to right
  std::unordered_map<std::size_t, std::size_t> dobj_of_verb;

  for (std::size_t s = 0; s < spans.size(); ++s) {
    NpSpan& span = spans[s];

    if (span.start > 0 && is_prep_pos(toks[span.start - 1].pos)) {
      span.role = NpRole::PrepObject;
      span.governor = span.start - 1;
      continue;
    }

    // nearest following verb with no intervening NP
    bool placed = false;
    for (std::size_t t = span.end; t < toks.size(); ++t) {
      if (span_of[t] >= 0) break;
      if (is_verb_pos(toks[t].pos)) {
        span.role = NpRole::Subject;
        span.governor = t;
        if (is_be_form(toks[t].lower) && t + 1 < toks.size() &&
            toks[t + 1].pos == "VBN") {
          span.passive = true;
        }
        placed = true;
        break;
      }
    }
    if (placed) continue;

    // nearest preceding verb with no intervening NP. An NP already assigned
    // as an object may be stepped over on the way to its own governor, which
    // is how a second post-verbal NP becomes the indirect object.
    for (std::size_t t = span.start; t-- > 0;) {
      if (span_of[t] >= 0) {
        const NpSpan& blocker = spans[static_cast<std::size_t>(span_of[t])];
        bool blocker_is_object = blocker.role == NpRole::DirectObject ||
                                 blocker.role == NpRole::IndirectObject;
        if (!blocker_is_object || !blocker.governor) break;
        t = blocker.start;  // loop decrement moves past the span
        continue;
      }
      if (is_verb_pos(toks[t].pos)) {
        auto it = dobj_of_verb.find(t);
        if (it == dobj_of_verb.end()) {
          span.role = NpRole::DirectObject;
          dobj_of_verb.emplace(t, s);
        } else {
          span.role = NpRole::IndirectObject;
        }
        span.governor = t;
        break;
      }
    }
  }
  return spans;
}

}  // namespace picotag
