#ifndef PICOTAG_EMBEDDINGS_HPP
#define PICOTAG_EMBEDDINGS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace picotag {

// word2vec text format: header "vocab_size dim", then one token per line
// followed by its vector, space-separated.
struct WordVectors {
  std::vector<std::string> vocab;
  Eigen::MatrixXd vectors;  // vocab.size() x dim
};

WordVectors read_word2vec_text(std::istream& in);
void write_word2vec_text(const WordVectors& wv, std::ostream& out);

struct SkipgramConfig {
  int dim = 200;
  int window = 5;
  int negatives = 5;
  double subsample = 1e-3;
  int epochs = 5;
  int min_count = 5;
  double lr = 0.025;  // linear decay over total planned words
  std::uint64_t seed = 1;
  int threads = 1;  // > 1: asynchronous updates, nondeterministic
};

struct EmbeddingModel {
  std::vector<std::string> vocab;  // count-descending, ties lexicographic
  std::unordered_map<std::string, int> index;
  std::vector<std::uint64_t> counts;  // empty when loaded from a vectors file
  Eigen::MatrixXd input_vectors;      // V x d; used for all similarity queries
  Eigen::MatrixXd output_vectors;     // V x d; empty when loaded from a file

  int find(std::string_view token) const;
  static EmbeddingModel from_word_vectors(WordVectors wv);
  WordVectors to_word_vectors() const;
};

// Loss and gradients of one SGNS decision:
//   -log sigmoid(u.v) - sum_j log sigmoid(-u.v_j)
struct SgnsPairGrad {
  double loss = 0.0;
  Eigen::VectorXd d_center;
  Eigen::VectorXd d_context;
  std::vector<Eigen::VectorXd> d_negatives;
};

SgnsPairGrad sgns_pair_loss(const Eigen::VectorXd& center_in,
                            const Eigen::VectorXd& context_out,
                            const std::vector<Eigen::VectorXd>& negatives_out);

// Skip-gram with negative sampling over the token stream. Deterministic for
// threads == 1 and a fixed seed. Throws std::invalid_argument when min_count
// leaves the vocabulary empty.
EmbeddingModel train_skipgram(
    const std::vector<std::vector<std::string>>& sentences,
    const SkipgramConfig& config,
    std::vector<double>* epoch_mean_loss = nullptr);

struct CollocationConfig {
  double delta = 5.0;
  double threshold = 10.0;
  int passes = 1;
};

// Adjacent pairs with
//   score(a, b) = (count(ab) - delta) / (count(a) * count(b)) * corpus_size
// above the threshold, merged as "a_b". With passes > 1, merging and
// re-discovery repeat, so longer units can form.
std::vector<std::string> discover_collocations(
    const std::vector<std::vector<std::string>>& sentences,
    const CollocationConfig& config);

// Greedy left-to-right replacement of listed pairs by their merged token.
std::vector<std::vector<std::string>> apply_collocations(
    const std::vector<std::vector<std::string>>& sentences,
    const std::vector<std::string>& merged);

struct Neighbor {
  std::string token;
  double cosine = 0.0;
};

// Top-k by cosine over input vectors, query excluded, ties by vocabulary
// index. Zero-norm vectors have cosine 0. max_vocab > 0 restricts candidates
// to the max_vocab most frequent entries. Throws std::invalid_argument for
// an OOV query, listing the closest spellings as a hint.
std::vector<Neighbor> cosine_neighbors(const EmbeddingModel& model,
                                       std::string_view token, int k = 10,
                                       int max_vocab = 0);

struct OverlapEntry {
  std::string pattern;
  std::string best_constituent;  // empty when every constituent is OOV
  int overlap = 0;               // in [0, 10]
  std::vector<std::string> top_pattern;
  std::vector<std::string> top_constituent;
  bool constituent_oov = false;
};

struct OverlapReport {
  std::vector<OverlapEntry> entries;
  double mean_overlap = 0.0;
  double zero_fraction = 0.0;
};

// Per pattern, the largest top-k neighborhood intersection against any of
// its '_'-separated constituents.
OverlapReport overlap_statistic(const EmbeddingModel& model,
                                const std::vector<std::string>& patterns,
                                int k = 10, int max_vocab = 0);

void write_overlap_tsv(const OverlapReport& report, std::ostream& out,
                       const std::vector<std::string>& comments = {});

struct PcaResult {
  Eigen::MatrixXd coords;       // n x dims
  Eigen::VectorXd eigenvalues;  // all of them, descending
  Eigen::MatrixXd components;   // d x dims, sign-fixed
};

// Exact PCA of the rows (mean-centered, covariance eigendecomposition).
// Components are sign-fixed by making the largest-magnitude loading
// positive. Requires at least dims + 1 rows.
PcaResult pca_project(const Eigen::MatrixXd& rows, int dims = 2);

// k-means++ under the seed, Lloyd iterations to a fixed point or 300 rounds.
// inertia_trace, when set, records the within-cluster sum of squares after
// every assignment step.
std::vector<int> kmeans_cluster(const Eigen::MatrixXd& coords, int k,
                                std::uint64_t seed,
                                std::vector<double>* inertia_trace = nullptr);

}  // namespace picotag

#endif  // PICOTAG_EMBEDDINGS_HPP
