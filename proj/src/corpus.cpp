#include "picotag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "picotag/patterns.hpp"

namespace picotag {

using nlohmann::json;

char category_letter(Category c) {
  switch (c) {
    case Category::P: return 'P';
    case Category::I: return 'I';
    case Category::O: return 'O';
  }
  return '?';
}

std::optional<Category> category_from_letter(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'P': return Category::P;
    case 'I': return Category::I;
    case 'O': return Category::O;
    default: return std::nullopt;
  }
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

Token::Token(std::string surface_, std::string pos_)
    : surface(std::move(surface_)), pos(std::move(pos_)),
      lower(to_lower(surface)) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

SchemaError::SchemaError(std::size_t line, const std::string& field,
                         const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": field \"" +
                         field + "\": " + what),
      line_(line), field_(field) {}

namespace {

std::vector<std::string> get_string_array(const json& obj, const char* field,
                                          std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_array()) {
    throw SchemaError(line, field, "missing or not an array");
  }
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) throw SchemaError(line, field, "non-string element");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::vector<IoTag> get_tag_array(const json& arr, const std::string& field,
                                 std::size_t line, std::size_t expected) {
  if (!arr.is_array()) throw SchemaError(line, field, "not an array");
  if (arr.size() != expected) {
    throw SchemaError(line, field,
                      "length " + std::to_string(arr.size()) +
                          " does not match token count " +
                          std::to_string(expected));
  }
  std::vector<IoTag> tags;
  tags.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
      throw SchemaError(line, field, "elements must be 0 or 1");
    }
    tags.push_back(v.get<int>() == 1 ? IoTag::In : IoTag::Out);
  }
  return tags;
}

std::vector<Token> build_tokens(const std::vector<std::string>& surfaces,
                                const std::vector<std::string>& pos,
                                std::size_t line) {
  if (surfaces.size() != pos.size()) {
    throw SchemaError(line, "pos",
                      "length " + std::to_string(pos.size()) +
                          " does not match token count " +
                          std::to_string(surfaces.size()));
  }
  std::vector<Token> tokens;
  tokens.reserve(surfaces.size());
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    if (surfaces[i].empty()) {
      throw SchemaError(line, "tokens", "empty token surface");
    }
    tokens.emplace_back(surfaces[i], pos[i]);
  }
  return tokens;
}

json parse_line(const std::string& text, std::size_t line) {
  json obj = json::parse(text, nullptr, false);
  if (obj.is_discarded()) throw ParseError(line, "malformed JSON");
  if (!obj.is_object()) throw ParseError(line, "not a JSON object");
  return obj;
}

}  // namespace

std::vector<Document> parse_labeled_jsonl(std::istream& in) {
  std::vector<Document> docs;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    docs.push_back(parse_labeled_document(text, line_no));
  }
  return docs;
}

Document parse_labeled_document(const std::string& json_line,
                                std::size_t line_no) {
  json obj = parse_line(json_line, line_no);

  Document doc;
  auto id_it = obj.find("doc_id");
  if (id_it == obj.end() || !id_it->is_string()) {
    throw SchemaError(line_no, "doc_id", "missing or not a string");
  }
  doc.doc_id = id_it->get<std::string>();

  auto tokens = build_tokens(get_string_array(obj, "tokens", line_no),
                             get_string_array(obj, "pos", line_no), line_no);
  const std::size_t n = tokens.size();

  std::map<Category, std::vector<IoTag>> label_tracks;
  if (auto lab = obj.find("labels"); lab != obj.end()) {
    if (!lab->is_object()) {
      throw SchemaError(line_no, "labels", "not an object");
    }
    for (const auto& [key, arr] : lab->items()) {
      if (key.size() != 1) {
        throw SchemaError(line_no, "labels", "unknown category " + key);
      }
      auto cat = category_from_letter(key[0]);
      if (!cat) {
        throw SchemaError(line_no, "labels", "unknown category " + key);
      }
      label_tracks[*cat] = get_tag_array(arr, "labels." + key, line_no, n);
    }
  }

  std::vector<std::size_t> breaks;
  if (auto br = obj.find("sent_breaks"); br != obj.end()) {
    if (!br->is_array()) {
      throw SchemaError(line_no, "sent_breaks", "not an array");
    }
    std::size_t prev = 0;
    for (const auto& v : *br) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw SchemaError(line_no, "sent_breaks", "offsets must be >= 0");
      }
      auto off = static_cast<std::size_t>(v.get<long long>());
      if (off <= prev || off > n) {
        throw SchemaError(line_no, "sent_breaks",
                          "offsets must be strictly increasing and <= " +
                              std::to_string(n));
      }
      breaks.push_back(off);
      prev = off;
    }
    if (!breaks.empty() && breaks.back() != n) {
      throw SchemaError(line_no, "sent_breaks",
                        "last offset must equal the token count");
    }
  }
  if (breaks.empty() && n > 0) breaks.push_back(n);

  std::size_t begin = 0;
  for (std::size_t end : breaks) {
    Sentence sent;
    sent.tokens.assign(tokens.begin() + begin, tokens.begin() + end);
    for (const auto& [cat, track] : label_tracks) {
      sent.labels[cat] =
          std::vector<IoTag>(track.begin() + begin, track.begin() + end);
    }
    doc.sentences.push_back(std::move(sent));
    begin = end;
  }
  return doc;
}

void write_labeled_jsonl(const std::vector<Document>& docs,
                         std::ostream& out) {
  for (const auto& doc : docs) write_labeled_document(doc, out);
}

void write_labeled_document(const Document& doc, std::ostream& out) {
  json obj;
  obj["doc_id"] = doc.doc_id;
  json tokens = json::array();
  json pos = json::array();
  json breaks = json::array();
  std::map<Category, std::vector<int>> tracks;
  for (const auto& sent : doc.sentences) {
    for (const auto& tok : sent.tokens) {
      tokens.push_back(tok.surface);
      pos.push_back(tok.pos);
    }
    for (const auto& [cat, tags] : sent.labels) {
      auto& track = tracks[cat];
      track.resize(tokens.size() - sent.tokens.size(), 0);
      for (IoTag t : tags) track.push_back(t == IoTag::In ? 1 : 0);
    }
    breaks.push_back(tokens.size());
  }
  obj["tokens"] = tokens;
  obj["pos"] = pos;
  obj["sent_breaks"] = breaks;
  json labels = json::object();
  for (auto& [cat, track] : tracks) {
    track.resize(tokens.size(), 0);
    labels[std::string(1, category_letter(cat))] = track;
  }
  obj["labels"] = labels;
  out << obj.dump() << '\n';
}

SegmentCorpus parse_segments(std::istream& in, Category category) {
  SegmentCorpus corpus;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    corpus.segments.push_back(parse_segment_line(text, line_no, category));
  }
  return corpus;
}

Segment parse_segment_line(const std::string& json_line, std::size_t line_no,
                           Category category) {
  json obj = parse_line(json_line, line_no);
  Segment seg;
  seg.category = category;
  seg.sentence.tokens =
      build_tokens(get_string_array(obj, "tokens", line_no),
                   get_string_array(obj, "pos", line_no), line_no);
  return seg;
}

MergedSentence merge_pattern_tokens(const Sentence& sentence,
                                    const PatternLexicon& lexicon) {
  MergedSentence out;
  const auto& tokens = sentence.tokens;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t arity = 0;
    if (tokens[i].surface.find('_') == std::string::npos) {
      arity = lexicon.longest_match_at(tokens, i);
    }
    if (arity < 2) {
      out.sentence.tokens.push_back(tokens[i]);
      out.alignment.push_back({i});
      ++i;
      continue;
    }
    std::string joined = tokens[i].lower;
    std::vector<std::size_t> span;
    span.push_back(i);
    for (std::size_t k = 1; k < arity; ++k) {
      joined += '_';
      joined += tokens[i + k].lower;
      span.push_back(i + k);
    }
    Token merged(std::move(joined), tokens[i + arity - 1].pos);
    out.sentence.tokens.push_back(std::move(merged));
    out.alignment.push_back(std::move(span));
    i += arity;
  }

  for (const auto& [cat, tags] : sentence.labels) {
    std::vector<IoTag> merged_tags;
    merged_tags.reserve(out.alignment.size());
    for (const auto& span : out.alignment) {
      std::size_t in_votes = 0;
      for (std::size_t orig : span) {
        if (tags[orig] == IoTag::In) ++in_votes;
      }
      std::size_t out_votes = span.size() - in_votes;
      IoTag tag;
      if (in_votes > out_votes) {
        tag = IoTag::In;
      } else if (out_votes > in_votes) {
        tag = IoTag::Out;
      } else {
        tag = tags[span.back()];  // tie: final constituent decides
      }
      merged_tags.push_back(tag);
    }
    out.sentence.labels[cat] = std::move(merged_tags);
  }
  return out;
}

std::vector<IoTag> project_to_original(const MergedSentence& merged,
                                       const std::vector<IoTag>& merged_tags) {
  std::size_t original_len = 0;
  for (const auto& span : merged.alignment) original_len += span.size();
  std::vector<IoTag> out(original_len, IoTag::Out);
  for (std::size_t m = 0; m < merged.alignment.size(); ++m) {
    for (std::size_t orig : merged.alignment[m]) out[orig] = merged_tags[m];
  }
  return out;
}

}  // namespace picotag
