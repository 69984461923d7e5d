#include "picotag/crf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"
#include "picotag/metrics.hpp"

namespace picotag {

using nlohmann::json;

namespace {

constexpr char kSep = '\x1f';
constexpr const char* kBos = "<BOS>";
constexpr const char* kEos = "<EOS>";

const char* kTplNames[] = {
    "w0",    "pos0",  "digit", "title", "upper", "hyphen", "punct",
    "w-1",   "w+1",   "big-",  "big+",  "tri-",  "tri+",   "pat",
};

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

bool is_title_word(const std::string& s) {
  if (s.empty() || !std::isupper(static_cast<unsigned char>(s[0]))) {
    return false;
  }
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (std::isupper(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

bool all_upper(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isupper(c) != 0;
  });
}

const char* punct_class(const std::string& s) {
  if (s == ":") return "colon";
  if (s == ".") return "fullstop";
  if (!s.empty() && std::none_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) != 0;
      })) {
    return "other_symbol";
  }
  return "none";
}

// surface at offset from i, or the BOS/EOS sentinel
const std::string& word_at(const Sentence& s, long long pos) {
  static const std::string bos = kBos;
  static const std::string eos = kEos;
  if (pos < 0) return bos;
  if (pos >= static_cast<long long>(s.tokens.size())) return eos;
  return s.tokens[static_cast<std::size_t>(pos)].surface;
}

std::string ngram_payload(const Sentence& s, long long begin, int n) {
  std::string out = word_at(s, begin);
  for (int k = 1; k < n; ++k) {
    out += kSep;
    out += word_at(s, begin + k);
  }
  return out;
}

}  // namespace

const char* feat_tpl_name(FeatTpl tpl) {
  return kTplNames[static_cast<int>(tpl)];
}

std::array<bool, 9> pattern_indicator_block(
    const Sentence& sentence, std::size_t i,
    const std::array<PatternLexicon, 3>& lexicons) {
  std::array<bool, 9> block{};
  for (int c = 0; c < 3; ++c) {
    LexiconMatch m = match_lexicon(sentence, lexicons[c],
                                   static_cast<Category>(c), i);
    block[0 + c] = m.prev_bigram;
    block[3 + c] = m.cur_unigram;
    block[6 + c] = m.next_bigram;
  }
  return block;
}

std::vector<Feature> extract_features(
    const Sentence& sentence, std::size_t i,
    const std::array<PatternLexicon, 3>& lexicons, bool with_patterns) {
  const auto& tok = sentence.tokens.at(i);
  const long long pos = static_cast<long long>(i);

  std::vector<Feature> feats;
  feats.reserve(16);
  feats.push_back({FeatTpl::Word0, tok.surface});
  feats.push_back({FeatTpl::Pos0, tok.pos});
  if (all_digits(tok.surface)) feats.push_back({FeatTpl::IsDigit, ""});
  if (is_title_word(tok.surface)) feats.push_back({FeatTpl::IsTitle, ""});
  if (all_upper(tok.surface)) feats.push_back({FeatTpl::IsUpper, ""});
  if (tok.surface.find('-') != std::string::npos) {
    feats.push_back({FeatTpl::IsHyphen, ""});
  }
  feats.push_back({FeatTpl::Punct, punct_class(tok.surface)});
  feats.push_back({FeatTpl::WordPrev, word_at(sentence, pos - 1)});
  feats.push_back({FeatTpl::WordNext, word_at(sentence, pos + 1)});
  feats.push_back({FeatTpl::BigramPrev, ngram_payload(sentence, pos - 2, 2)});
  feats.push_back({FeatTpl::BigramNext, ngram_payload(sentence, pos + 1, 2)});
  feats.push_back({FeatTpl::TrigramPrev, ngram_payload(sentence, pos - 3, 3)});
  feats.push_back({FeatTpl::TrigramNext, ngram_payload(sentence, pos + 1, 3)});

  if (with_patterns) {
    static const char* kSlots[] = {"prev", "cur", "next"};
    auto block = pattern_indicator_block(sentence, i, lexicons);
    for (int k = 0; k < 9; ++k) {
      if (!block[k]) continue;
      std::string payload = kSlots[k / 3];
      payload += ':';
      payload += category_letter(static_cast<Category>(k % 3));
      feats.push_back({FeatTpl::PatternInd, std::move(payload)});
    }
  }
  return feats;
}

std::string FeatureIndex::key(const Feature& f) {
  std::string k;
  k += static_cast<char>(static_cast<int>(f.tpl) + 1);
  k += f.payload;
  return k;
}

int FeatureIndex::intern(const Feature& f) {
  auto [it, inserted] =
      ids_.emplace(key(f), static_cast<int>(features_.size()));
  if (inserted) features_.push_back(f);
  return it->second;
}

int FeatureIndex::lookup(const Feature& f) const {
  auto it = ids_.find(key(f));
  return it == ids_.end() ? -1 : it->second;
}

CrfModel::CrfModel(Category category, double l2, bool use_patterns,
                   std::array<PatternLexicon, 3> lexicons)
    : category_(category), l2_(l2), use_patterns_(use_patterns),
      lexicons_(std::move(lexicons)) {}

void CrfModel::set_lexicons(std::array<PatternLexicon, 3> lexicons) {
  lexicons_ = std::move(lexicons);
}

void CrfModel::sync_weight_size() { w_emit_.resize(2 * index_.size(), 0.0); }

double CrfModel::squared_norm() const {
  double sq = std::inner_product(w_emit_.begin(), w_emit_.end(),
                                 w_emit_.begin(), 0.0);
  for (double w : w_trans_) sq += w * w;
  return sq;
}

Potentials log_potentials(const CrfModel& model, const Sentence& sentence) {
  Potentials out;
  out.emission.assign(sentence.size(), {0.0, 0.0});
  const auto& w = model.emission_weights();
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    for (const Feature& f : extract_features(sentence, t, model.lexicons(),
                                             model.use_patterns())) {
      int id = model.features().lookup(f);
      if (id < 0) continue;
      out.emission[t][0] += w[2 * id];
      out.emission[t][1] += w[2 * id + 1];
    }
  }
  const auto& wt = model.transition_weights();
  out.trans = {{{wt[0], wt[1]}, {wt[2], wt[3]}}};
  return out;
}

std::vector<IoTag> viterbi_decode(const CrfModel& model,
                                  const Sentence& sentence) {
  Potentials p = log_potentials(model, sentence);
  return viterbi(p.emission, p.trans);
}

namespace {

struct PreparedSentence {
  std::vector<std::vector<int>> feature_ids;  // per position
  std::vector<IoTag> gold;
};

PreparedSentence prepare_sentence(CrfModel& model, const Sentence& sentence,
                                  Category category, bool require_labels) {
  PreparedSentence out;
  if (require_labels) {
    auto it = sentence.labels.find(category);
    if (it == sentence.labels.end() || it->second.size() != sentence.size()) {
      throw std::invalid_argument(
          "sentence is missing labels for category " +
          std::string(1, category_letter(category)));
    }
    out.gold = it->second;
  }
  out.feature_ids.resize(sentence.size());
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    for (const Feature& f : extract_features(sentence, t, model.lexicons(),
                                             model.use_patterns())) {
      out.feature_ids[t].push_back(model.features().intern(f));
    }
  }
  return out;
}

Potentials prepared_potentials(const CrfModel& model,
                               const PreparedSentence& ps) {
  Potentials out;
  out.emission.assign(ps.feature_ids.size(), {0.0, 0.0});
  const auto& w = model.emission_weights();
  for (std::size_t t = 0; t < ps.feature_ids.size(); ++t) {
    for (int id : ps.feature_ids[t]) {
      out.emission[t][0] += w[2 * id];
      out.emission[t][1] += w[2 * id + 1];
    }
  }
  const auto& wt = model.transition_weights();
  out.trans = {{{wt[0], wt[1]}, {wt[2], wt[3]}}};
  return out;
}

// data-term loss and gradient of one prepared sentence, accumulated in place
double accumulate_sentence_gradient(const CrfModel& model,
                                    const PreparedSentence& ps,
                                    CrfGradient& grad) {
  Potentials pot = prepared_potentials(model, ps);
  CrfLoss nll = crf_nll(pot.emission, pot.trans, ps.gold);
  for (std::size_t t = 0; t < ps.feature_ids.size(); ++t) {
    for (int id : ps.feature_ids[t]) {
      grad.d_emit[2 * id] += nll.d_emission[t][0];
      grad.d_emit[2 * id + 1] += nll.d_emission[t][1];
    }
  }
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) grad.d_trans[2 * a + b] += nll.d_trans[a][b];
  }
  return nll.loss;
}

}  // namespace

std::pair<double, CrfGradient> nll_and_gradient(CrfModel& model,
                                                std::span<const Sentence> batch,
                                                Category category) {
  std::vector<PreparedSentence> prepared;
  prepared.reserve(batch.size());
  for (const Sentence& s : batch) {
    prepared.push_back(prepare_sentence(model, s, category, true));
  }
  model.sync_weight_size();

  CrfGradient grad;
  grad.d_emit.assign(model.emission_weights().size(), 0.0);
  double loss = 0.0;
  for (const auto& ps : prepared) {
    loss += accumulate_sentence_gradient(model, ps, grad);
  }

  const double l2 = model.l2();
  loss += 0.5 * l2 * model.squared_norm();
  const auto& w = model.emission_weights();
  for (std::size_t i = 0; i < w.size(); ++i) grad.d_emit[i] += l2 * w[i];
  for (int i = 0; i < 4; ++i) {
    grad.d_trans[i] += l2 * model.transition_weights()[i];
  }
  return {loss, std::move(grad)};
}

CrfModel train_crf(const std::vector<Sentence>& train, Category category,
                   const CrfTrainConfig& config,
                   std::array<PatternLexicon, 3> lexicons, bool use_patterns,
                   const std::vector<Sentence>* dev) {
  if (train.empty()) {
    throw std::invalid_argument("train_crf: empty training data");
  }
  CrfModel model(category, config.l2, use_patterns, std::move(lexicons));

  std::vector<PreparedSentence> prepared;
  prepared.reserve(train.size());
  for (const Sentence& s : train) {
    prepared.push_back(prepare_sentence(model, s, category, true));
  }
  model.sync_weight_size();

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> best_w;
  std::array<double, 4> best_trans{};
  double best_f1 = -1.0;
  int stale = 0;

  auto dev_f1 = [&]() {
    PrfScore score;
    for (const Sentence& s : *dev) {
      auto it = s.labels.find(category);
      if (it == s.labels.end()) continue;
      auto pred = viterbi_decode(model, s);
      score += token_prf({it->second}, {pred});
    }
    return score.f1();
  };

  const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = config.lr / (1.0 + config.decay * epoch);

    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      std::size_t end = std::min(order.size(), begin + batch_size);
      CrfGradient grad;
      grad.d_emit.assign(model.emission_weights().size(), 0.0);
      for (std::size_t k = begin; k < end; ++k) {
        accumulate_sentence_gradient(model, prepared[order[k]], grad);
      }
      const double scale = lr / static_cast<double>(end - begin);
      auto& w = model.emission_weights();
      auto& wt = model.transition_weights();
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= scale * grad.d_emit[i] + lr * config.l2 * w[i];
      }
      for (int i = 0; i < 4; ++i) {
        wt[i] -= scale * grad.d_trans[i] + lr * config.l2 * wt[i];
      }
    }

    if (dev != nullptr) {
      double f1 = dev_f1();
      if (f1 > best_f1) {
        best_f1 = f1;
        best_w = model.emission_weights();
        best_trans = model.transition_weights();
        stale = 0;
      } else if (++stale >= config.patience && config.patience > 0) {
        break;
      }
    }
  }

  if (dev != nullptr && best_f1 >= 0.0) {
    model.emission_weights() = best_w;
    model.transition_weights() = best_trans;
  }
  return model;
}

void CrfModel::save(std::ostream& out) const {
  json doc;
  doc["version"] = 1;
  doc["category"] = std::string(1, category_letter(category_));
  doc["l2"] = l2_;
  doc["uses_patterns"] = use_patterns_;

  char buf[40];
  json feats = json::array();
  static const char* kLabels[] = {"OUT", "IN"};
  for (std::size_t id = 0; id < index_.size(); ++id) {
    const Feature& f = index_.feature(static_cast<int>(id));
    for (int y = 0; y < 2; ++y) {
      std::snprintf(buf, sizeof(buf), "%.17g", w_emit_[2 * id + y]);
      feats.push_back(json::array(
          {feat_tpl_name(f.tpl), f.payload, kLabels[y], std::string(buf)}));
    }
  }
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      std::snprintf(buf, sizeof(buf), "%.17g", w_trans_[2 * a + b]);
      feats.push_back(json::array(
          {"transition", "",
           std::string(kLabels[a]) + ">" + kLabels[b], std::string(buf)}));
    }
  }
  doc["features"] = std::move(feats);
  out << doc.dump() << '\n';
}

CrfModel CrfModel::load(std::istream& in) {
  json doc = json::parse(in);
  CrfModel model;
  auto cat = category_from_letter(doc.at("category").get<std::string>().at(0));
  if (!cat) throw std::invalid_argument("model: unknown category");
  model.category_ = *cat;
  model.l2_ = doc.at("l2").get<double>();
  model.use_patterns_ = doc.value("uses_patterns", false);

  std::unordered_map<std::string, FeatTpl> tpl_by_name;
  for (int t = 0; t <= static_cast<int>(FeatTpl::PatternInd); ++t) {
    tpl_by_name[kTplNames[t]] = static_cast<FeatTpl>(t);
  }

  for (const auto& row : doc.at("features")) {
    std::string tpl_name = row.at(0).get<std::string>();
    std::string payload = row.at(1).get<std::string>();
    std::string ctx = row.at(2).get<std::string>();
    double weight = std::stod(row.at(3).get<std::string>());
    if (tpl_name == "transition") {
      int a = ctx.substr(0, ctx.find('>')) == "IN" ? 1 : 0;
      int b = ctx.substr(ctx.find('>') + 1) == "IN" ? 1 : 0;
      model.w_trans_[2 * a + b] = weight;
      continue;
    }
    auto it = tpl_by_name.find(tpl_name);
    if (it == tpl_by_name.end()) {
      throw std::invalid_argument("model: unknown feature template " + tpl_name);
    }
    int id = model.index_.intern({it->second, payload});
    model.sync_weight_size();
    model.w_emit_[2 * id + (ctx == "IN" ? 1 : 0)] = weight;
  }
  return model;
}

}  // namespace picotag
