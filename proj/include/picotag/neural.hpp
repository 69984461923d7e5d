#ifndef PICOTAG_NEURAL_HPP
#define PICOTAG_NEURAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "picotag/corpus.hpp"
#include "picotag/embeddings.hpp"
#include "picotag/inference.hpp"
#include "picotag/patterns.hpp"

namespace picotag {

enum class Strategy : std::uint8_t {
  None = 0,
  BeforeCrf,   // indicators concatenated to the BiLSTM outputs
  BeforeLstm,  // indicators concatenated to the BiLSTM inputs
  Embedding,   // pattern occurrences merged into single vocabulary units
};

const char* strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(std::string_view name);

struct NeuralConfig {
  int word_dim = 200;
  int char_dim = 25;  // char embedding width and char LSTM size per direction
  int hidden = 200;   // word LSTM size per direction
  double dropout = 0.5;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 30;
  int patience = 0;  // 0 disables early stopping even with a dev set
  std::uint64_t seed = 1;
  Strategy strategy = Strategy::None;
};

// Gate blocks stacked in the order input, forget, cell, output.
struct LstmParams {
  Eigen::MatrixXd w_in;   // 4H x In
  Eigen::MatrixXd w_rec;  // 4H x H
  Eigen::MatrixXd bias;   // 4H x 1
};

// Thrown when a forward pass produces a non-finite value.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& tensor);
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

struct NeuralModel {
  NeuralConfig config;
  Category category = Category::P;

  std::vector<std::string> vocab;  // includes <unk> at index 0
  std::unordered_map<std::string, int> vocab_index;
  std::vector<std::string> char_vocab;  // single-char strings, <unk> at 0
  std::unordered_map<std::string, int> char_index;

  Eigen::MatrixXd word_emb;  // V x word_dim, fine-tuned
  Eigen::MatrixXd char_emb;  // C x char_dim
  LstmParams char_fwd, char_bwd;
  LstmParams word_fwd, word_bwd;
  Eigen::MatrixXd proj_w;  // 2 x proj_input_dim()
  Eigen::MatrixXd proj_b;  // 2 x 1
  Eigen::MatrixXd trans;   // 2 x 2 CRF transitions

  // Needed for the indicator strategies and Embedding-mode merging; supplied
  // at construction or load time, not serialized with the tensors.
  std::array<PatternLexicon, 3> lexicons;

  int word_id(std::string_view surface) const;  // 0 (<unk>) when absent
  int rep_dim() const;         // word_dim + 2 * char_dim (+9 for BeforeLstm)
  int proj_input_dim() const;  // 2 * hidden (+9 for BeforeCrf)
};

// Named views over every parameter tensor, in a fixed order. Used by Adam,
// the checkpoint writer, and the gradient checks.
struct TensorRef {
  std::string name;
  Eigen::MatrixXd* tensor;
};
std::vector<TensorRef> named_tensors(NeuralModel& model);

// Xavier-uniform projections and recurrent matrices, zero biases with the
// forget gate at 1, <unk> word row uniform in [-0.25, 0.25]. Word rows come
// from `pretrained` (tokens absent from it share the <unk> row); the char
// vocabulary is collected from `corpus`. Dimensions must match config.
NeuralModel init_neural_model(Category category, const NeuralConfig& config,
                              const WordVectors& pretrained,
                              const std::vector<Sentence>& corpus,
                              std::array<PatternLexicon, 3> lexicons);

// concat(word embedding, char BiLSTM final states), plus the 9 indicators
// for BeforeLstm. Eval mode (no dropout). For Embedding the sentence must
// already be pattern-merged.
Eigen::VectorXd token_representation(const NeuralModel& model,
                                     const Sentence& sentence, std::size_t i);

struct NeuralForward {
  EmissionTable emission;
  TransTable trans;
  double loss = 0.0;  // CRF NLL against the gold labels of model.category
};

// Full pass: char BiLSTMs, word BiLSTM, emission projection, CRF loss.
// Dropout masks are sampled from `rng` in train mode only. The sentence must
// carry labels for model.category (and be pre-merged for Embedding).
NeuralForward bilstm_crf_forward(const NeuralModel& model,
                                 const Sentence& sentence, bool train_mode,
                                 std::mt19937_64* rng);

struct LstmGrads {
  Eigen::MatrixXd w_in, w_rec, bias;
};

struct NeuralGradients {
  std::map<int, Eigen::VectorXd> word_emb;  // touched rows only
  std::map<int, Eigen::VectorXd> char_emb;
  LstmGrads char_fwd, char_bwd, word_fwd, word_bwd;
  Eigen::MatrixXd proj_w, proj_b;
  Eigen::MatrixXd trans;
};

std::pair<double, NeuralGradients> loss_and_gradients(const NeuralModel& model,
                                                      const Sentence& sentence,
                                                      bool train_mode,
                                                      std::mt19937_64* rng);

// Adam moments, parallel to named_tensors order. Embedding tables get lazy
// row updates: rows without a gradient keep their moments untouched.
struct AdamState {
  long long step = 0;
  std::vector<Eigen::MatrixXd> m, v;
};

AdamState make_adam(NeuralModel& model);
void adam_step(NeuralModel& model, AdamState& state,
               const NeuralGradients& grads);

// Viterbi over the produced potentials. Embedding models merge the sentence
// first and copy each merged token's tag back to its constituents.
std::vector<IoTag> neural_decode(const NeuralModel& model,
                                 const Sentence& sentence);

// Per-sentence Adam updates, shuffled per epoch under config.seed, no
// gradient clipping. Returns the best-dev-F1 snapshot when dev is given and
// patience > 0, the final model otherwise. epoch_loss_out, when set,
// receives the mean training loss of each epoch.
NeuralModel train_neural(const std::vector<Sentence>& train, Category category,
                         const NeuralConfig& config,
                         const WordVectors& pretrained,
                         std::array<PatternLexicon, 3> lexicons,
                         const std::vector<Sentence>* dev = nullptr,
                         std::vector<double>* epoch_loss_out = nullptr);

// Checkpoint = JSON manifest (config, strategy, vocabularies, vocab hash,
// tensor table) + little-endian double blob.
void save_neural(const NeuralModel& model, const std::string& manifest_path,
                 const std::string& blob_path);
NeuralModel load_neural(const std::string& manifest_path,
                        const std::string& blob_path,
                        std::array<PatternLexicon, 3> lexicons);

}  // namespace picotag

#endif  // PICOTAG_NEURAL_HPP
