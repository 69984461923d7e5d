#ifndef PICOTAG_CORPUS_HPP
#define PICOTAG_CORPUS_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace picotag {

// The three extraction categories. Each category gets its own binary IO
// label track; a token may be inside spans of several categories at once.
enum class Category : std::uint8_t { P = 0, I = 1, O = 2 };

constexpr std::array<Category, 3> kCategories = {Category::P, Category::I,
                                                 Category::O};

char category_letter(Category c);
std::optional<Category> category_from_letter(char c);

enum class IoTag : std::uint8_t { Out = 0, In = 1 };

struct Token {
  std::string surface;
  std::string pos;
  std::string lower;  // cached lowercase of surface

  Token() = default;
  Token(std::string surface_, std::string pos_);
  bool operator==(const Token&) const = default;
};

std::string to_lower(std::string_view s);

struct Sentence {
  std::vector<Token> tokens;
  // category -> IO tags, one per token. Tracks are independent.
  std::map<Category, std::vector<IoTag>> labels;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  bool operator==(const Document&) const = default;
};

struct Segment {
  Category category;
  Sentence sentence;  // unlabeled
};

struct SegmentCorpus {
  std::vector<Segment> segments;
};

// Thrown when a JSONL line is not valid JSON.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Thrown when a JSONL line parses but violates the schema.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::size_t line, const std::string& field,
              const std::string& what);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// One JSON object per line:
//   {"doc_id": str, "tokens": [str], "pos": [str],
//    "labels": {"P": [0|1], ...}, "sent_breaks": [int]}
// Label arrays span the whole document line; sent_breaks holds end-exclusive
// sentence offsets (missing sent_breaks means one sentence). Unknown fields
// are ignored.
std::vector<Document> parse_labeled_jsonl(std::istream& in);
void write_labeled_jsonl(const std::vector<Document>& docs, std::ostream& out);

// Single-line variants so callers can stream without holding a corpus.
Document parse_labeled_document(const std::string& json_line,
                                std::size_t line_no);
void write_labeled_document(const Document& doc, std::ostream& out);

// Lines {"tokens": [str], "pos": [str]}; every segment gets `category`.
SegmentCorpus parse_segments(std::istream& in, Category category);
Segment parse_segment_line(const std::string& json_line, std::size_t line_no,
                           Category category);

class PatternLexicon;

// A sentence after pattern merging, plus the alignment back to the original
// token positions (merged index -> original indices, in order).
struct MergedSentence {
  Sentence sentence;
  std::vector<std::vector<std::size_t>> alignment;
};

// Greedy left-to-right longest-match replacement of pattern occurrences by a
// single token (constituent lowers joined by '_'). POS of a merged token is
// the POS of its final constituent; labels are decided by majority vote with
// the final constituent breaking ties. Tokens whose surface already contains
// '_' never participate, so merging is idempotent.
MergedSentence merge_pattern_tokens(const Sentence& sentence,
                                    const PatternLexicon& lexicon);

// Copies each merged token's tag to all its constituents.
std::vector<IoTag> project_to_original(const MergedSentence& merged,
                                       const std::vector<IoTag>& merged_tags);

}  // namespace picotag

#endif  // PICOTAG_CORPUS_HPP
