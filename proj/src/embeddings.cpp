#include "picotag/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace picotag {

using Eigen::MatrixXd;
using Eigen::VectorXd;

WordVectors read_word2vec_text(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::invalid_argument("word2vec text: empty stream");
  }
  std::istringstream hs(header);
  long long v = 0, d = 0;
  if (!(hs >> v >> d) || v < 0 || d <= 0) {
    throw std::invalid_argument("word2vec text: bad header \"" + header + "\"");
  }
  WordVectors wv;
  wv.vocab.reserve(static_cast<std::size_t>(v));
  wv.vectors.resize(v, d);
  std::string line;
  for (long long r = 0; r < v; ++r) {
    if (!std::getline(in, line)) {
      throw std::invalid_argument("word2vec text: truncated after " +
                               std::to_string(r) + " rows");
    }
    std::istringstream row(line);
    std::string token;
    if (!(row >> token)) {
      throw std::invalid_argument("word2vec text: empty row " +
                               std::to_string(r + 2));
    }
    for (long long k = 0; k < d; ++k) {
      double value = 0.0;
      if (!(row >> value)) {
        throw std::invalid_argument("word2vec text: row " + std::to_string(r + 2) +
                                 " has fewer than " + std::to_string(d) +
                                 " values");
      }
      wv.vectors(r, k) = value;
    }
    wv.vocab.push_back(std::move(token));
  }
  return wv;
}

void write_word2vec_text(const WordVectors& wv, std::ostream& out) {
  out << wv.vocab.size() << ' ' << wv.vectors.cols() << '\n';
  char buf[32];
  for (std::size_t r = 0; r < wv.vocab.size(); ++r) {
    out << wv.vocab[r];
    for (Eigen::Index k = 0; k < wv.vectors.cols(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.6f",
                    wv.vectors(static_cast<Eigen::Index>(r), k));
      out << ' ' << buf;
    }
    out << '\n';
  }
}

int EmbeddingModel::find(std::string_view token) const {
  auto it = index.find(std::string(token));
  return it == index.end() ? -1 : it->second;
}

EmbeddingModel EmbeddingModel::from_word_vectors(WordVectors wv) {
  EmbeddingModel m;
  m.vocab = std::move(wv.vocab);
  m.input_vectors = std::move(wv.vectors);
  for (std::size_t i = 0; i < m.vocab.size(); ++i) {
    m.index[m.vocab[i]] = static_cast<int>(i);
  }
  return m;
}

WordVectors EmbeddingModel::to_word_vectors() const {
  return {vocab, input_vectors};
}

namespace {

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SgnsPairGrad sgns_pair_loss(const VectorXd& center_in,
                            const VectorXd& context_out,
                            const std::vector<VectorXd>& negatives_out) {
  SgnsPairGrad out;
  double pos_dot = center_in.dot(context_out);
  out.loss = softplus(-pos_dot);
  double pos_coef = sigmoid(pos_dot) - 1.0;  // d loss / d pos_dot
  out.d_center = pos_coef * context_out;
  out.d_context = pos_coef * center_in;
  out.d_negatives.reserve(negatives_out.size());
  for (const auto& neg : negatives_out) {
    double dot = center_in.dot(neg);
    out.loss += softplus(dot);
    double coef = sigmoid(dot);
    out.d_center += coef * neg;
    out.d_negatives.push_back(coef * center_in);
  }
  return out;
}

namespace {

struct SgnsTrainer {
  const SkipgramConfig& cfg;
  EmbeddingModel& model;
  std::vector<double> neg_cumulative;  // over count^0.75
  double total_words = 0.0;            // sum of vocab counts

  int sample_negative(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, neg_cumulative.back());
    double x = u(rng);
    auto it =
        std::upper_bound(neg_cumulative.begin(), neg_cumulative.end(), x);
    auto idx = std::distance(neg_cumulative.begin(), it);
    return static_cast<int>(
        std::min<std::ptrdiff_t>(idx, neg_cumulative.size() - 1));
  }

  double keep_probability(int word) const {
    if (cfg.subsample <= 0.0) return 1.0;
    double f = static_cast<double>(model.counts[word]);
    double thr = cfg.subsample * total_words;
    double p = (std::sqrt(f / thr) + 1.0) * thr / f;
    return std::min(p, 1.0);
  }

  // One pass over a range of sentences. words_before counts in-vocab tokens
  // consumed in earlier epochs/shards and drives the learning-rate decay.
  // Returns (pair loss sum, pair count, in-vocab words consumed).
  std::tuple<double, std::uint64_t, std::uint64_t> run(
      const std::vector<std::vector<std::string>>& sentences,
      std::size_t begin, std::size_t end, std::uint64_t words_before,
      std::uint64_t planned_words, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> window_dist(1, cfg.window);

    double loss_sum = 0.0;
    std::uint64_t pairs = 0;
    std::uint64_t words = 0;
    std::vector<int> kept;

    for (std::size_t s = begin; s < end; ++s) {
      kept.clear();
      for (const auto& tok : sentences[s]) {
        int id = model.find(tok);
        if (id < 0) continue;
        ++words;
        if (cfg.subsample > 0.0 && u01(rng) >= keep_probability(id)) continue;
        kept.push_back(id);
      }
      double progress = static_cast<double>(words_before + words) /
                        static_cast<double>(planned_words + 1);
      double alpha = std::max(cfg.lr * (1.0 - progress), cfg.lr * 1e-4);

      for (std::size_t i = 0; i < kept.size(); ++i) {
        int win = window_dist(rng);
        std::size_t lo = i >= static_cast<std::size_t>(win) ? i - win : 0;
        std::size_t hi = std::min(kept.size() - 1, i + win);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          int center = kept[i];
          int context = kept[j];
          std::vector<VectorXd> negs;
          std::vector<int> neg_ids;
          negs.reserve(cfg.negatives);
          for (int n = 0; n < cfg.negatives; ++n) {
            int neg = sample_negative(rng);
            if (neg == context) continue;
            neg_ids.push_back(neg);
            negs.push_back(model.output_vectors.row(neg).transpose());
          }
          SgnsPairGrad g = sgns_pair_loss(
              model.input_vectors.row(center).transpose(),
              model.output_vectors.row(context).transpose(), negs);
          model.input_vectors.row(center) -= alpha * g.d_center.transpose();
          model.output_vectors.row(context) -=
              alpha * g.d_context.transpose();
          for (std::size_t n = 0; n < neg_ids.size(); ++n) {
            model.output_vectors.row(neg_ids[n]) -=
                alpha * g.d_negatives[n].transpose();
          }
          loss_sum += g.loss;
          ++pairs;
        }
      }
    }
    return {loss_sum, pairs, words};
  }
};

}  // namespace

EmbeddingModel train_skipgram(
    const std::vector<std::vector<std::string>>& sentences,
    const SkipgramConfig& config, std::vector<double>* epoch_mean_loss) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& sent : sentences) {
    for (const auto& tok : sent) ++counts[tok];
  }

  EmbeddingModel model;
  for (const auto& [tok, n] : counts) {
    if (n >= static_cast<std::uint64_t>(config.min_count)) {
      model.vocab.push_back(tok);
      model.counts.push_back(n);
    }
  }
  if (model.vocab.empty()) {
    throw std::invalid_argument(
        "train_skipgram: min_count leaves the vocabulary empty");
  }
  // count-descending, ties lexicographic
  std::vector<std::size_t> order(model.vocab.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (model.counts[a] != model.counts[b]) {
      return model.counts[a] > model.counts[b];
    }
    return model.vocab[a] < model.vocab[b];
  });
  {
    std::vector<std::string> vocab;
    std::vector<std::uint64_t> cnt;
    for (std::size_t idx : order) {
      vocab.push_back(std::move(model.vocab[idx]));
      cnt.push_back(model.counts[idx]);
    }
    model.vocab = std::move(vocab);
    model.counts = std::move(cnt);
  }
  for (std::size_t i = 0; i < model.vocab.size(); ++i) {
    model.index[model.vocab[i]] = static_cast<int>(i);
  }

  const auto V = static_cast<Eigen::Index>(model.vocab.size());
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> init(-0.5 / config.dim,
                                              0.5 / config.dim);
  model.input_vectors.resize(V, config.dim);
  for (Eigen::Index r = 0; r < V; ++r) {
    for (int k = 0; k < config.dim; ++k) model.input_vectors(r, k) = init(rng);
  }
  model.output_vectors = MatrixXd::Zero(V, config.dim);

  SgnsTrainer trainer{config, model, {}, 0.0};
  trainer.neg_cumulative.reserve(model.vocab.size());
  double acc = 0.0;
  for (std::uint64_t c : model.counts) {
    acc += std::pow(static_cast<double>(c), 0.75);
    trainer.neg_cumulative.push_back(acc);
    trainer.total_words += static_cast<double>(c);
  }

  const std::uint64_t corpus_words = std::accumulate(
      model.counts.begin(), model.counts.end(), std::uint64_t{0});
  const std::uint64_t planned =
      corpus_words * static_cast<std::uint64_t>(config.epochs);

  std::uint64_t words_done = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::uint64_t pairs = 0;
    if (config.threads <= 1) {
      auto [l, p, w] =
          trainer.run(sentences, 0, sentences.size(), words_done, planned, rng);
      loss_sum = l;
      pairs = p;
      words_done += w;
    } else {
      // asynchronous shard updates; nondeterministic by contract
      const int n_threads =
          std::min<int>(config.threads, static_cast<int>(sentences.size()));
      std::vector<std::thread> workers;
      std::vector<std::tuple<double, std::uint64_t, std::uint64_t>> results(
          n_threads);
      std::size_t shard = (sentences.size() + n_threads - 1) / n_threads;
      for (int w = 0; w < n_threads; ++w) {
        std::size_t begin = w * shard;
        std::size_t end = std::min(sentences.size(), begin + shard);
        workers.emplace_back([&, w, begin, end]() {
          std::mt19937_64 trng(config.seed + 0x9e3779b97f4a7c15ull * (w + 1) +
                               epoch);
          results[w] = trainer.run(sentences, begin, end, words_done, planned,
                                   trng);
        });
      }
      for (auto& t : workers) t.join();
      for (const auto& [l, p, w] : results) {
        loss_sum += l;
        pairs += p;
        words_done += w;
      }
    }
    if (epoch_mean_loss != nullptr) {
      epoch_mean_loss->push_back(pairs == 0 ? 0.0
                                            : loss_sum /
                                                  static_cast<double>(pairs));
    }
  }
  return model;
}

std::vector<std::string> discover_collocations(
    const std::vector<std::vector<std::string>>& sentences,
    const CollocationConfig& config) {
  std::vector<std::vector<std::string>> current = sentences;
  std::vector<std::string> merged;
  std::unordered_set<std::string> seen;

  for (int pass = 0; pass < config.passes; ++pass) {
    std::map<std::string, std::uint64_t> unigram;
    std::map<std::pair<std::string, std::string>, std::uint64_t> pair_counts;
    std::uint64_t corpus_size = 0;
    for (const auto& sent : current) {
      for (std::size_t i = 0; i < sent.size(); ++i) {
        ++unigram[sent[i]];
        ++corpus_size;
        if (i + 1 < sent.size()) ++pair_counts[{sent[i], sent[i + 1]}];
      }
    }
    std::vector<std::string> found;
    for (const auto& [pair, n] : pair_counts) {
      double score = (static_cast<double>(n) - config.delta) /
                     (static_cast<double>(unigram[pair.first]) *
                      static_cast<double>(unigram[pair.second])) *
                     static_cast<double>(corpus_size);
      if (score > config.threshold) {
        std::string token = pair.first + "_" + pair.second;
        if (seen.insert(token).second) merged.push_back(token);
        found.push_back(std::move(token));
      }
    }
    if (found.empty()) break;
    if (pass + 1 < config.passes) current = apply_collocations(current, found);
  }
  return merged;
}

std::vector<std::vector<std::string>> apply_collocations(
    const std::vector<std::vector<std::string>>& sentences,
    const std::vector<std::string>& merged) {
  std::unordered_set<std::string> merge_set(merged.begin(), merged.end());
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  for (const auto& sent : sentences) {
    std::vector<std::string> row;
    row.reserve(sent.size());
    std::size_t i = 0;
    while (i < sent.size()) {
      if (i + 1 < sent.size() &&
          merge_set.count(sent[i] + "_" + sent[i + 1]) > 0) {
        row.push_back(sent[i] + "_" + sent[i + 1]);
        i += 2;
      } else {
        row.push_back(sent[i]);
        ++i;
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

double cosine(const MatrixXd& vectors, int a, int b) {
  double na = vectors.row(a).norm();
  double nb = vectors.row(b).norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return vectors.row(a).dot(vectors.row(b)) / (na * nb);
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<Neighbor> cosine_neighbors(const EmbeddingModel& model,
                                       std::string_view token, int k,
                                       int max_vocab) {
  int query = model.find(token);
  if (query < 0) {
    // hint with the closest spellings
    std::vector<std::pair<std::size_t, int>> near;
    for (std::size_t i = 0; i < model.vocab.size(); ++i) {
      near.emplace_back(edit_distance(token, model.vocab[i]),
                        static_cast<int>(i));
    }
    std::partial_sort(near.begin(),
                      near.begin() + std::min<std::size_t>(3, near.size()),
                      near.end());
    std::string hint;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, near.size()); ++i) {
      if (!hint.empty()) hint += ", ";
      hint += model.vocab[near[i].second];
    }
    throw std::invalid_argument("token \"" + std::string(token) +
                                "\" not in vocabulary (closest spellings: " +
                                hint + ")");
  }

  int limit = max_vocab > 0
                  ? std::min<int>(max_vocab, static_cast<int>(model.vocab.size()))
                  : static_cast<int>(model.vocab.size());
  std::vector<std::pair<double, int>> scored;
  scored.reserve(limit);
  for (int i = 0; i < limit; ++i) {
    if (i == query) continue;
    scored.emplace_back(cosine(model.input_vectors, query, i), i);
  }
  auto better = [](const std::pair<double, int>& a,
                   const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;  // ties by vocabulary index
  };
  std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k),
                                           scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                    better);
  std::vector<Neighbor> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({model.vocab[scored[i].second], scored[i].first});
  }
  return out;
}

OverlapReport overlap_statistic(const EmbeddingModel& model,
                                const std::vector<std::string>& patterns,
                                int k, int max_vocab) {
  OverlapReport report;
  std::uint64_t zero = 0;
  double sum = 0.0;
  for (const auto& pattern : patterns) {
    if (model.find(pattern) < 0) continue;
    OverlapEntry entry;
    entry.pattern = pattern;
    auto pattern_top = cosine_neighbors(model, pattern, k, max_vocab);
    for (const auto& n : pattern_top) entry.top_pattern.push_back(n.token);
    std::unordered_set<std::string> pattern_set(entry.top_pattern.begin(),
                                                entry.top_pattern.end());

    std::vector<std::string> constituents;
    std::istringstream parts(pattern);
    std::string part;
    while (std::getline(parts, part, '_')) {
      if (!part.empty()) constituents.push_back(part);
    }

    bool any = false;
    int best_overlap = -1;
    for (const auto& word : constituents) {
      if (model.find(word) < 0) continue;
      any = true;
      auto word_top = cosine_neighbors(model, word, k, max_vocab);
      int overlap = 0;
      for (const auto& n : word_top) {
        if (pattern_set.count(n.token)) ++overlap;
      }
      if (overlap > best_overlap) {
        best_overlap = overlap;
        entry.best_constituent = word;
        entry.top_constituent.clear();
        for (const auto& n : word_top) {
          entry.top_constituent.push_back(n.token);
        }
      }
    }
    if (!any) {
      entry.constituent_oov = true;
      entry.overlap = 0;
    } else {
      entry.overlap = best_overlap;
    }
    sum += entry.overlap;
    if (entry.overlap == 0) ++zero;
    report.entries.push_back(std::move(entry));
  }
  if (!report.entries.empty()) {
    report.mean_overlap = sum / static_cast<double>(report.entries.size());
    report.zero_fraction =
        static_cast<double>(zero) / static_cast<double>(report.entries.size());
  }
  return report;
}

void write_overlap_tsv(const OverlapReport& report, std::ostream& out,
                       const std::vector<std::string>& comments) {
  out << "#pattern\tbest_constituent\toverlap\ttop10_pattern\ttop10_"
         "constituent\n";
  for (const auto& c : comments) out << "# " << c << '\n';
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", report.mean_overlap);
  out << "# mean_overlap\t" << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", report.zero_fraction);
  out << "# zero_overlap_fraction\t" << buf << '\n';
  auto joined = [](const std::vector<std::string>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i > 0) s += '|';
      s += items[i];
    }
    return s;
  };
  for (const auto& e : report.entries) {
    out << e.pattern << '\t' << e.best_constituent << '\t' << e.overlap << '\t'
        << joined(e.top_pattern) << '\t' << joined(e.top_constituent) << '\n';
  }
}

PcaResult pca_project(const MatrixXd& rows, int dims) {
  if (rows.rows() < dims + 1) {
    throw std::invalid_argument("pca_project: need at least " +
                                std::to_string(dims + 1) + " points, got " +
                                std::to_string(rows.rows()));
  }
  const auto n = rows.rows();
  Eigen::RowVectorXd mean = rows.colwise().mean();
  MatrixXd centered = rows.rowwise() - mean;
  MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("pca_project: eigendecomposition failed");
  }
  // ascending from Eigen; flip to descending
  const auto d = cov.rows();
  PcaResult out;
  out.eigenvalues.resize(d);
  MatrixXd all(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.eigenvalues(i) = solver.eigenvalues()(d - 1 - i);
    all.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  out.components = all.leftCols(dims);
  for (int c = 0; c < dims; ++c) {
    Eigen::Index arg = 0;
    out.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.components(arg, c) < 0.0) out.components.col(c) *= -1.0;
  }
  out.coords = centered * out.components;
  return out;
}

std::vector<int> kmeans_cluster(const MatrixXd& coords, int k,
                                std::uint64_t seed,
                                std::vector<double>* inertia_trace) {
  const auto n = coords.rows();
  if (k <= 0 || k > n) {
    throw std::invalid_argument("kmeans_cluster: k must be in [1, " +
                                std::to_string(n) + "], got " +
                                std::to_string(k));
  }
  std::mt19937_64 rng(seed);

  // k-means++ seeding
  MatrixXd centroids(k, coords.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = coords.row(first(rng));
  VectorXd dist2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist2(i) = (coords.row(i) - centroids.row(0)).squaredNorm();
  }
  for (int c = 1; c < k; ++c) {
    double total = dist2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double x = u(rng);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (x <= acc) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);
    }
    centroids.row(c) = coords.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      dist2(i) = std::min(
          dist2(i), (coords.row(i) - centroids.row(c)).squaredNorm());
    }
  }

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (coords.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double d = (coords.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      inertia += best_d;
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (inertia_trace != nullptr) inertia_trace->push_back(inertia);
    if (!changed && iter > 0) break;

    MatrixXd sums = MatrixXd::Zero(k, coords.cols());
    std::vector<int> sizes(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += coords.row(i);
      ++sizes[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) centroids.row(c) = sums.row(c) / sizes[c];
    }
  }
  return assign;
}

}  // namespace picotag
