#ifndef PICOTAG_CHUNKER_HPP
#define PICOTAG_CHUNKER_HPP

#include <optional>
#include <vector>

#include "picotag/corpus.hpp"

namespace picotag {

enum class NpRole : std::uint8_t {
  Subject,
  DirectObject,
  IndirectObject,
  PrepObject,
  Other,
};

struct NpSpan {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::size_t head = 0;   // index of the NP head, start <= head < end
  NpRole role = NpRole::Other;
  // Verb for Subject/DirectObject/IndirectObject, preposition for PrepObject.
  // Always outside [start, end).
  std::optional<std::size_t> governor;
  // Subject of a passive construction (be-form + VBN after the span).
  bool passive = false;
};

bool is_noun_pos(std::string_view pos);
bool is_verb_pos(std::string_view pos);
bool is_prep_pos(std::string_view pos);

// Maximal non-overlapping NP spans matched by the POS pattern
//   (DT|PDT)? (JJ|JJR|JJS|VBN|VBG)* (NN|NNS|NNP|NNPS|CD)+
// with head = last noun-family token. Sorted by start.
std::vector<NpSpan> chunk_nps(const Sentence& sentence);

// Role heuristics over the chunked spans:
//   - preposition (IN/TO) immediately before the span   -> PrepObject
//   - nearest following verb with no intervening NP     -> Subject
//   - nearest preceding verb with no intervening NP     -> DirectObject,
//     or IndirectObject when that verb already has one
//   - otherwise                                         -> Other
std::vector<NpSpan> assign_roles(const Sentence& sentence,
                                 std::vector<NpSpan> spans);

}  // namespace picotag

#endif  // PICOTAG_CHUNKER_HPP
