// picotag: mine extraction patterns from weakly labeled medical abstract
// segments, train CRF / BiLSTM-CRF taggers for P/I/O span extraction, and
// analyze the embedding space of merged pattern tokens.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "picotag/chunker.hpp"
#include "picotag/corpus.hpp"
#include "picotag/crf.hpp"
#include "picotag/embeddings.hpp"
#include "picotag/metrics.hpp"
#include "picotag/neural.hpp"
#include "picotag/patterns.hpp"

namespace pt = picotag;

namespace {

int g_log_level = 1;  // 0 debug, 1 info, 2 warn, 3 error

void log_at(int level, const std::string& msg) {
  static const char* kNames[] = {"debug", "info", "warn", "error"};
  if (level >= g_log_level) {
    std::cerr << "[" << kNames[level] << "] " << msg << '\n';
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  return out;
}

pt::Category parse_category(const std::string& s) {
  auto cat = s.size() == 1 ? pt::category_from_letter(s[0]) : std::nullopt;
  if (!cat) {
    throw std::invalid_argument("category must be one of P, I, O: " + s);
  }
  return *cat;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Lexicon flags shared by the training/tagging commands.
struct LexiconFlags {
  std::string p, i, o;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lexicon-p", p, "P pattern lexicon TSV");
    cmd->add_option("--lexicon-i", i, "I pattern lexicon TSV");
    cmd->add_option("--lexicon-o", o, "O pattern lexicon TSV");
  }

  bool any() const { return !p.empty() || !i.empty() || !o.empty(); }

  std::array<pt::PatternLexicon, 3> load() const {
    std::array<pt::PatternLexicon, 3> lex;
    const std::string* paths[3] = {&p, &i, &o};
    for (int c = 0; c < 3; ++c) {
      if (paths[c]->empty()) continue;
      auto in = open_input(*paths[c]);
      lex[c] = pt::read_lexicon_tsv(in);
    }
    return lex;
  }

  void require_all(const char* why) const {
    if (p.empty() || i.empty() || o.empty()) {
      throw std::invalid_argument(std::string(why) +
                                  " needs --lexicon-p, --lexicon-i and "
                                  "--lexicon-o");
    }
  }
};

std::vector<std::vector<std::string>> read_token_lines(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::vector<std::string> toks;
    std::string tok;
    while (row >> tok) toks.push_back(std::move(tok));
    if (!toks.empty()) sentences.push_back(std::move(toks));
  }
  return sentences;
}

std::vector<pt::Sentence> flatten(const std::vector<pt::Document>& docs) {
  std::vector<pt::Sentence> out;
  for (const auto& d : docs) {
    out.insert(out.end(), d.sentences.begin(), d.sentences.end());
  }
  return out;
}

// ---------------------------------------------------------------- mine ----

struct MineArgs {
  std::string relevant, irrelevant, out;
  std::string category;
  std::uint64_t min_freq = 10;
  double min_prob = 0.8;
  bool baseline_bigrams = false;
};

void run_mine(const MineArgs& a) {
  pt::Category cat = parse_category(a.category);
  auto rel_in = open_input(a.relevant);
  auto irrel_in = open_input(a.irrelevant);
  pt::SegmentCorpus rel = pt::parse_segments(rel_in, cat);
  pt::SegmentCorpus irrel = pt::parse_segments(irrel_in, cat);

  pt::MineOptions opts{a.min_freq, a.min_prob};
  pt::PatternLexicon lexicon =
      a.baseline_bigrams ? pt::mine_bigrams_baseline(rel, irrel, cat, opts)
                         : pt::mine_patterns(rel, irrel, cat, opts);

  std::string config = "run: mine --category " + a.category + " --min-freq " +
                       std::to_string(a.min_freq) + " --min-prob " +
                       fmt(a.min_prob) +
                       (a.baseline_bigrams ? " --baseline-bigrams" : "");
  auto out = open_output(a.out);
  pt::write_lexicon_tsv(lexicon, out, {config});
  log_at(1, "mined " + std::to_string(lexicon.size()) + " patterns -> " + a.out);
}

// ----------------------------------------------------------- train-crf ----

struct TrainCrfArgs {
  std::string train, dev, out;
  std::string category;
  pt::CrfTrainConfig config;
  LexiconFlags lexicons;
};

void run_train_crf(const TrainCrfArgs& a) {
  pt::Category cat = parse_category(a.category);
  auto train_in = open_input(a.train);
  auto docs = pt::parse_labeled_jsonl(train_in);
  auto sentences = flatten(docs);

  std::vector<pt::Sentence> dev;
  if (!a.dev.empty()) {
    auto dev_in = open_input(a.dev);
    dev = flatten(pt::parse_labeled_jsonl(dev_in));
  }

  bool use_patterns = a.lexicons.any();
  if (use_patterns) a.lexicons.require_all("pattern-augmented CRF");

  pt::CrfModel model =
      pt::train_crf(sentences, cat, a.config, a.lexicons.load(), use_patterns,
                    a.dev.empty() ? nullptr : &dev);
  auto out = open_output(a.out);
  model.save(out);
  log_at(1, "trained CRF (" + std::to_string(model.features().size()) +
                " features, seed " + std::to_string(a.config.seed) + ") -> " +
                a.out);
}

// -------------------------------------------------------- train-neural ----

struct TrainNeuralArgs {
  std::string train, dev, out, embeddings;
  std::string category;
  std::string strategy = "none";
  pt::NeuralConfig config;
  LexiconFlags lexicons;
};

void run_train_neural(const TrainNeuralArgs& a) {
  pt::Category cat = parse_category(a.category);
  auto strat = pt::strategy_from_name(a.strategy);
  if (!strat) throw std::invalid_argument("unknown strategy: " + a.strategy);

  auto train_in = open_input(a.train);
  auto sentences = flatten(pt::parse_labeled_jsonl(train_in));
  std::vector<pt::Sentence> dev;
  if (!a.dev.empty()) {
    auto dev_in = open_input(a.dev);
    dev = flatten(pt::parse_labeled_jsonl(dev_in));
  }

  auto emb_in = open_input(a.embeddings);
  pt::WordVectors pretrained = pt::read_word2vec_text(emb_in);

  pt::NeuralConfig config = a.config;
  config.strategy = *strat;
  config.word_dim = static_cast<int>(pretrained.vectors.cols());

  if (*strat == pt::Strategy::BeforeCrf || *strat == pt::Strategy::BeforeLstm) {
    a.lexicons.require_all("indicator strategy");
  }
  if (*strat == pt::Strategy::Embedding) {
    const std::string* path = &a.lexicons.p;
    if (cat == pt::Category::I) path = &a.lexicons.i;
    if (cat == pt::Category::O) path = &a.lexicons.o;
    if (path->empty()) {
      throw std::invalid_argument(
          "embedding strategy needs the lexicon of the trained category");
    }
  }

  pt::NeuralModel model =
      pt::train_neural(sentences, cat, config, pretrained, a.lexicons.load(),
                       a.dev.empty() ? nullptr : &dev);
  pt::save_neural(model, a.out + ".json", a.out + ".bin");
  log_at(1, "trained " + a.strategy + " model -> " + a.out + ".json/.bin");
}

// ----------------------------------------------------------------- tag ----

struct TagArgs {
  std::string model, input, out;
  LexiconFlags lexicons;
  int threads = 1;
};

bool is_neural_manifest(const std::string& path) {
  auto in = open_input(path);
  std::string head(512, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  return head.find("\"tensors\"") != std::string::npos;
}

std::string blob_path_for(const std::string& manifest) {
  auto dot = manifest.rfind('.');
  if (dot == std::string::npos) return manifest + ".bin";
  return manifest.substr(0, dot) + ".bin";
}

void run_tag(const TagArgs& a) {
  auto input = open_input(a.input);
  auto docs = pt::parse_labeled_jsonl(input);

  pt::Category cat;
  std::function<std::vector<pt::IoTag>(const pt::Sentence&)> decode;

  pt::CrfModel crf;
  pt::NeuralModel neural;
  if (is_neural_manifest(a.model)) {
    neural = pt::load_neural(a.model, blob_path_for(a.model), {});
    switch (neural.config.strategy) {
      case pt::Strategy::BeforeCrf:
      case pt::Strategy::BeforeLstm:
        a.lexicons.require_all("tagging with an indicator-strategy model");
        break;
      case pt::Strategy::Embedding: {
        const std::string* path = &a.lexicons.p;
        if (neural.category == pt::Category::I) path = &a.lexicons.i;
        if (neural.category == pt::Category::O) path = &a.lexicons.o;
        if (path->empty()) {
          throw std::invalid_argument(
              "tagging with an embedding-strategy model needs the lexicon of "
              "its category");
        }
        break;
      }
      case pt::Strategy::None:
        break;
    }
    neural.lexicons = a.lexicons.load();
    cat = neural.category;
    decode = [&neural](const pt::Sentence& s) {
      return pt::neural_decode(neural, s);
    };
  } else {
    auto model_in = open_input(a.model);
    crf = pt::CrfModel::load(model_in);
    if (crf.use_patterns()) {
      a.lexicons.require_all("tagging with a pattern-augmented CRF");
    }
    crf.set_lexicons(a.lexicons.load());
    cat = crf.category();
    decode = [&crf](const pt::Sentence& s) {
      return pt::viterbi_decode(crf, s);
    };
  }

  // decoding with a frozen model is safe to parallelize per document
  const int threads = std::max(1, a.threads);
  if (threads == 1) {
    for (auto& doc : docs) {
      for (auto& sent : doc.sentences) {
        sent.labels.clear();
        sent.labels[cat] = decode(sent);
      }
    }
  } else {
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < threads; ++w) {
      workers.emplace_back([&]() {
        for (std::size_t d = next.fetch_add(1); d < docs.size();
             d = next.fetch_add(1)) {
          for (auto& sent : docs[d].sentences) {
            auto tags = decode(sent);
            sent.labels.clear();
            sent.labels[cat] = std::move(tags);
          }
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  auto out = open_output(a.out);
  pt::write_labeled_jsonl(docs, out);
  log_at(1, "tagged " + std::to_string(docs.size()) + " documents -> " + a.out);
}

// ---------------------------------------------------------------- eval ----

struct EvalArgs {
  std::string gold, pred, out;
  std::vector<std::string> categories;
};

void run_eval(const EvalArgs& a) {
  auto gold_in = open_input(a.gold);
  auto pred_in = open_input(a.pred);
  auto gold = pt::parse_labeled_jsonl(gold_in);
  auto pred = pt::parse_labeled_jsonl(pred_in);

  std::vector<pt::Category> cats;
  if (!a.categories.empty()) {
    for (const auto& s : a.categories) cats.push_back(parse_category(s));
  } else {
    for (pt::Category c : pt::kCategories) {
      auto has = [c](const std::vector<pt::Document>& docs) {
        for (const auto& d : docs) {
          for (const auto& s : d.sentences) {
            if (s.labels.count(c)) return true;
          }
        }
        return false;
      };
      if (has(gold) && has(pred)) cats.push_back(c);
    }
  }

  std::vector<std::pair<pt::Category, pt::PrfScore>> rows;
  for (pt::Category c : cats) {
    rows.emplace_back(c, pt::token_prf_docs(gold, pred, c));
  }

  std::string config = "run: eval --gold " + a.gold + " --pred " + a.pred;
  if (a.out.empty() || a.out == "-") {
    pt::write_prf_tsv(std::cout, rows, {config});
  } else {
    auto out = open_output(a.out);
    pt::write_prf_tsv(out, rows, {config});
  }
}

// --------------------------------------------------------------- embed ----

struct EmbedArgs {
  std::string input, out;
  std::string merge_lexicon;
  bool collocations = false;
  std::string collocations_out;
  pt::SkipgramConfig config;
  pt::CollocationConfig colloc;
};

void run_embed(const EmbedArgs& a) {
  auto sentences = read_token_lines(a.input);

  if (!a.merge_lexicon.empty()) {
    auto lex_in = open_input(a.merge_lexicon);
    pt::PatternLexicon lexicon = pt::read_lexicon_tsv(lex_in);
    for (auto& sent : sentences) {
      pt::Sentence s;
      for (auto& tok : sent) s.tokens.emplace_back(std::move(tok), "");
      auto merged = pt::merge_pattern_tokens(s, lexicon);
      sent.clear();
      for (auto& tok : merged.sentence.tokens) {
        sent.push_back(std::move(tok.surface));
      }
    }
    log_at(1, "merged pattern occurrences from " + a.merge_lexicon);
  }

  if (a.collocations) {
    auto merged = pt::discover_collocations(sentences, a.colloc);
    sentences = pt::apply_collocations(sentences, merged);
    log_at(1, "merged " + std::to_string(merged.size()) + " collocations");
    if (!a.collocations_out.empty()) {
      auto out = open_output(a.collocations_out);
      for (const auto& tok : merged) out << tok << '\n';
    }
  }

  pt::EmbeddingModel model = pt::train_skipgram(sentences, a.config);
  auto out = open_output(a.out);
  pt::write_word2vec_text(model.to_word_vectors(), out);
  log_at(1, "trained " + std::to_string(model.vocab.size()) + " vectors -> " +
                a.out);
}

// ----------------------------------------------------------- neighbors ----

struct NeighborsArgs {
  std::string vectors, token;
  int k = 10;
  int max_vocab = 0;
};

void run_neighbors(const NeighborsArgs& a) {
  auto in = open_input(a.vectors);
  auto model = pt::EmbeddingModel::from_word_vectors(pt::read_word2vec_text(in));
  char buf[32];
  for (const auto& n : pt::cosine_neighbors(model, a.token, a.k, a.max_vocab)) {
    std::snprintf(buf, sizeof(buf), "%.6f", n.cosine);
    std::cout << n.token << '\t' << buf << '\n';
  }
}

// ------------------------------------------------------------- overlap ----

struct OverlapArgs {
  std::string vectors, out, patterns;
  int k = 10;
  int max_vocab = 0;
};

void run_overlap(const OverlapArgs& a) {
  auto in = open_input(a.vectors);
  auto model = pt::EmbeddingModel::from_word_vectors(pt::read_word2vec_text(in));

  std::vector<std::string> patterns;
  if (!a.patterns.empty()) {
    auto pat_in = open_input(a.patterns);
    std::string line;
    while (std::getline(pat_in, line)) {
      if (!line.empty()) patterns.push_back(line);
    }
  } else {
    for (const auto& tok : model.vocab) {
      if (tok.find('_') != std::string::npos) patterns.push_back(tok);
    }
  }

  auto report = pt::overlap_statistic(model, patterns, a.k, a.max_vocab);
  if (report.entries.size() < patterns.size()) {
    log_at(2, std::to_string(patterns.size() - report.entries.size()) +
                  " pattern(s) not in the vocabulary were skipped");
  }
  std::string config = "run: overlap --vectors " + a.vectors + " --k " +
                       std::to_string(a.k);
  auto out = open_output(a.out);
  pt::write_overlap_tsv(report, out, {config});
  log_at(1, "overlap over " + std::to_string(report.entries.size()) +
                " patterns -> " + a.out);
}

// ------------------------------------------------------------- project ----

struct ProjectArgs {
  std::string vectors, out, tokens;
  int k = 20;
  std::uint64_t seed = 1;
};

void run_project(const ProjectArgs& a) {
  auto in = open_input(a.vectors);
  auto model = pt::EmbeddingModel::from_word_vectors(pt::read_word2vec_text(in));

  std::vector<std::string> tokens;
  if (!a.tokens.empty()) {
    auto tok_in = open_input(a.tokens);
    std::string line;
    while (std::getline(tok_in, line)) {
      if (line.empty()) continue;
      if (model.find(line) < 0) {
        throw std::invalid_argument("token not in vocabulary: " + line);
      }
      tokens.push_back(line);
    }
  } else {
    tokens = model.vocab;
  }

  Eigen::MatrixXd rows(tokens.size(), model.input_vectors.cols());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) =
        model.input_vectors.row(model.find(tokens[i]));
  }

  pt::PcaResult pca = pt::pca_project(rows, 2);
  std::vector<int> clusters = pt::kmeans_cluster(pca.coords, a.k, a.seed);

  auto out = open_output(a.out);
  out << "token,x,y,cluster\n";
  char buf[64];
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto r = static_cast<Eigen::Index>(i);
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", pca.coords(r, 0),
                  pca.coords(r, 1));
    out << tokens[i] << ',' << buf << ',' << clusters[i] << '\n';
  }
  log_at(1, "projected " + std::to_string(tokens.size()) + " tokens -> " +
                a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pattern mining and P/I/O sequence tagging toolkit"};
  app.require_subcommand(1);

  std::uint64_t global_seed = 1;
  int threads = 1;
  std::string log_level = "info";
  app.add_option("--seed", global_seed, "default seed for all commands");
  app.add_option("--threads", threads, "worker threads where supported");
  app.add_option("--log-level", log_level, "debug|info|warn|error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  MineArgs mine;
  auto* mine_cmd = app.add_subcommand("mine", "mine a pattern lexicon");
  mine_cmd->add_option("--relevant", mine.relevant, "relevant segments JSONL")
      ->required();
  mine_cmd
      ->add_option("--irrelevant", mine.irrelevant, "irrelevant segments JSONL")
      ->required();
  mine_cmd->add_option("--category", mine.category, "P|I|O")->required();
  mine_cmd->add_option("--min-freq", mine.min_freq,
                       "minimum total occurrences across both pools");
  mine_cmd->add_option("--min-prob", mine.min_prob, "minimum relevance probability")
      ->check(CLI::Range(0.0, 1.0));
  mine_cmd->add_flag("--baseline-bigrams", mine.baseline_bigrams,
                     "mine plain adjacent bigrams instead of syntactic patterns");
  mine_cmd->add_option("--out", mine.out, "lexicon TSV output")->required();

  TrainCrfArgs tcrf;
  auto* tcrf_cmd = app.add_subcommand("train-crf", "train a linear-chain CRF");
  tcrf_cmd->add_option("--train", tcrf.train, "labeled JSONL")->required();
  tcrf_cmd->add_option("--dev", tcrf.dev, "labeled JSONL for early stopping");
  tcrf_cmd->add_option("--category", tcrf.category, "P|I|O")->required();
  tcrf_cmd->add_option("--l2", tcrf.config.l2, "L2 strength");
  tcrf_cmd->add_option("--epochs", tcrf.config.epochs, "training epochs");
  tcrf_cmd->add_option("--batch-size", tcrf.config.batch_size, "SGD batch size");
  tcrf_cmd->add_option("--lr", tcrf.config.lr, "initial step size");
  tcrf_cmd->add_option("--decay", tcrf.config.decay, "per-epoch decay");
  tcrf_cmd->add_option("--patience", tcrf.config.patience,
                       "early-stop patience (0 = off)");
  tcrf_cmd->add_option("--model-seed", tcrf.config.seed,
                       "override the global --seed for this run");
  tcrf.lexicons.attach(tcrf_cmd);
  tcrf_cmd->add_option("--out", tcrf.out, "model JSON output")->required();

  TrainNeuralArgs tn;
  auto* tn_cmd = app.add_subcommand("train-neural", "train a BiLSTM-CRF");
  tn_cmd->add_option("--train", tn.train, "labeled JSONL")->required();
  tn_cmd->add_option("--dev", tn.dev, "labeled JSONL for early stopping");
  tn_cmd->add_option("--category", tn.category, "P|I|O")->required();
  tn_cmd->add_option("--embeddings", tn.embeddings,
                     "pre-trained word2vec text vectors")
      ->required();
  tn_cmd->add_option("--strategy", tn.strategy,
                     "none|before-crf|before-lstm|embedding");
  tn_cmd->add_option("--char-dim", tn.config.char_dim, "char LSTM size");
  tn_cmd->add_option("--hidden", tn.config.hidden, "word LSTM size");
  tn_cmd->add_option("--dropout", tn.config.dropout, "input dropout rate")
      ->check(CLI::Range(0.0, 0.999));
  tn_cmd->add_option("--lr", tn.config.lr, "Adam learning rate");
  tn_cmd->add_option("--epochs", tn.config.epochs, "training epochs");
  tn_cmd->add_option("--patience", tn.config.patience,
                     "early-stop patience (0 = off)");
  tn_cmd->add_option("--model-seed", tn.config.seed,
                     "override the global --seed for this run");
  tn.lexicons.attach(tn_cmd);
  tn_cmd->add_option("--out", tn.out, "checkpoint prefix (.json + .bin)")
      ->required();

  TagArgs tag;
  auto* tag_cmd = app.add_subcommand("tag", "tag documents with a model");
  tag_cmd->add_option("--model", tag.model, "CRF JSON or neural manifest")
      ->required();
  tag_cmd->add_option("--input", tag.input, "JSONL documents")->required();
  tag.lexicons.attach(tag_cmd);
  tag_cmd->add_option("--out", tag.out, "JSONL predictions")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "token-level P/R/F1");
  eval_cmd->add_option("--gold", eval.gold, "gold labeled JSONL")->required();
  eval_cmd->add_option("--pred", eval.pred, "predicted labeled JSONL")
      ->required();
  eval_cmd->add_option("--category", eval.categories,
                       "categories to score (default: all present)");
  eval_cmd->add_option("--out", eval.out, "TSV output ('-' for stdout)");

  EmbedArgs embed;
  auto* embed_cmd =
      app.add_subcommand("embed", "train skip-gram vectors over a text corpus");
  embed_cmd->add_option("--input", embed.input, "tokenized text, one sentence per line")
      ->required();
  embed_cmd->add_option("--dim", embed.config.dim, "vector dimensionality");
  embed_cmd->add_option("--window", embed.config.window, "context window");
  embed_cmd->add_option("--negatives", embed.config.negatives,
                        "negative samples per pair");
  embed_cmd->add_option("--subsample", embed.config.subsample,
                        "frequent-word subsampling threshold");
  embed_cmd->add_option("--epochs", embed.config.epochs, "passes over the corpus");
  embed_cmd->add_option("--min-count", embed.config.min_count,
                        "minimum token frequency");
  embed_cmd->add_option("--lr", embed.config.lr, "initial learning rate");
  embed_cmd->add_option("--merge-lexicon", embed.merge_lexicon,
                        "merge pattern occurrences from this lexicon first");
  embed_cmd->add_flag("--collocations", embed.collocations,
                      "merge discovered collocations first");
  embed_cmd->add_option("--delta", embed.colloc.delta, "collocation discount");
  embed_cmd->add_option("--threshold", embed.colloc.threshold,
                        "collocation score threshold");
  embed_cmd->add_option("--passes", embed.colloc.passes, "collocation passes");
  embed_cmd->add_option("--collocations-out", embed.collocations_out,
                        "write the merged collocation list here");
  embed_cmd->add_option("--out", embed.out, "word2vec text output")->required();

  NeighborsArgs nb;
  auto* nb_cmd = app.add_subcommand("neighbors", "top-k cosine neighbors");
  nb_cmd->add_option("--vectors", nb.vectors, "word2vec text vectors")
      ->required();
  nb_cmd->add_option("--token", nb.token, "query token")->required();
  nb_cmd->add_option("--k", nb.k, "neighborhood size");
  nb_cmd->add_option("--max-vocab", nb.max_vocab,
                     "restrict candidates to the N most frequent entries");

  OverlapArgs ov;
  auto* ov_cmd = app.add_subcommand(
      "overlap", "pattern vs constituent neighborhood overlap");
  ov_cmd->add_option("--vectors", ov.vectors, "word2vec text vectors")
      ->required();
  ov_cmd->add_option("--patterns", ov.patterns,
                     "pattern tokens, one per line (default: all '_' tokens)");
  ov_cmd->add_option("--k", ov.k, "neighborhood size");
  ov_cmd->add_option("--max-vocab", ov.max_vocab,
                     "restrict candidates to the N most frequent entries");
  ov_cmd->add_option("--out", ov.out, "report TSV")->required();

  ProjectArgs proj;
  auto* proj_cmd =
      app.add_subcommand("project", "PCA + k-means scatter export");
  proj_cmd->add_option("--vectors", proj.vectors, "word2vec text vectors")
      ->required();
  proj_cmd->add_option("--tokens", proj.tokens,
                       "tokens to project, one per line (default: all)");
  proj_cmd->add_option("--k", proj.k, "k-means cluster count");
  proj_cmd->add_option("--out", proj.out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  g_log_level = log_level == "debug"  ? 0
                : log_level == "info" ? 1
                : log_level == "warn" ? 2
                                      : 3;
  // the global seed feeds every seeded command unless overridden
  if (tcrf_cmd->count("--model-seed") == 0) tcrf.config.seed = global_seed;
  if (tn_cmd->count("--model-seed") == 0) tn.config.seed = global_seed;
  embed.config.seed = global_seed;
  proj.seed = global_seed;
  embed.config.threads = threads;
  tag.threads = threads;
  if (threads > 1) {
    log_at(2, "training commands ignore --threads; results stay deterministic");
  }

  try {
    if (mine_cmd->parsed()) run_mine(mine);
    if (tcrf_cmd->parsed()) run_train_crf(tcrf);
    if (tn_cmd->parsed()) run_train_neural(tn);
    if (tag_cmd->parsed()) run_tag(tag);
    if (eval_cmd->parsed()) run_eval(eval);
    if (embed_cmd->parsed()) run_embed(embed);
    if (nb_cmd->parsed()) run_neighbors(nb);
    if (ov_cmd->parsed()) run_overlap(ov);
    if (proj_cmd->parsed()) run_project(proj);
  } catch (const pt::ParseError& e) {
    log_at(3, e.what());
    return 2;
  } catch (const pt::SchemaError& e) {
    log_at(3, e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    log_at(3, e.what());
    return 2;
  } catch (const std::domain_error& e) {
    log_at(3, e.what());
    return 2;
  } catch (const std::exception& e) {
    log_at(3, std::string("internal error: ") + e.what());
    return 1;
  }
  return 0;
}
