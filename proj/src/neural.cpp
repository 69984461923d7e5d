#include "picotag/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "picotag/crf.hpp"
#include "picotag/metrics.hpp"

namespace picotag {

using nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::None: return "none";
    case Strategy::BeforeCrf: return "before-crf";
    case Strategy::BeforeLstm: return "before-lstm";
    case Strategy::Embedding: return "embedding";
  }
  return "?";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
  if (name == "none") return Strategy::None;
  if (name == "before-crf") return Strategy::BeforeCrf;
  if (name == "before-lstm") return Strategy::BeforeLstm;
  if (name == "embedding") return Strategy::Embedding;
  return std::nullopt;
}

NumericError::NumericError(const std::string& tensor)
    : std::runtime_error("non-finite value in tensor " + tensor),
      tensor_(tensor) {}

namespace {

constexpr const char* kUnk = "<unk>";
constexpr int kIndicators = 9;

void check_finite(const char* name, const MatrixXd& m) {
  if (!m.allFinite()) throw NumericError(name);
}

void check_finite_vecs(const char* name, const std::vector<VectorXd>& vs) {
  for (const auto& v : vs) {
    if (!v.allFinite()) throw NumericError(name);
  }
}

// deterministic column-major fill
template <typename Dist>
void fill(MatrixXd& m, Dist& dist, std::mt19937_64& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
}

void xavier_fill(MatrixXd& m, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  fill(m, dist, rng);
}

}  // namespace

int NeuralModel::word_id(std::string_view surface) const {
  auto it = vocab_index.find(std::string(surface));
  if (it != vocab_index.end()) return it->second;
  it = vocab_index.find(to_lower(surface));
  if (it != vocab_index.end()) return it->second;
  return 0;  // <unk>
}

int NeuralModel::rep_dim() const {
  int dim = config.word_dim + 2 * config.char_dim;
  if (config.strategy == Strategy::BeforeLstm) dim += kIndicators;
  return dim;
}

int NeuralModel::proj_input_dim() const {
  int dim = 2 * config.hidden;
  if (config.strategy == Strategy::BeforeCrf) dim += kIndicators;
  return dim;
}

std::vector<TensorRef> named_tensors(NeuralModel& m) {
  return {
      {"word_emb", &m.word_emb},
      {"char_emb", &m.char_emb},
      {"char_fwd.w_in", &m.char_fwd.w_in},
      {"char_fwd.w_rec", &m.char_fwd.w_rec},
      {"char_fwd.bias", &m.char_fwd.bias},
      {"char_bwd.w_in", &m.char_bwd.w_in},
      {"char_bwd.w_rec", &m.char_bwd.w_rec},
      {"char_bwd.bias", &m.char_bwd.bias},
      {"word_fwd.w_in", &m.word_fwd.w_in},
      {"word_fwd.w_rec", &m.word_fwd.w_rec},
      {"word_fwd.bias", &m.word_fwd.bias},
      {"word_bwd.w_in", &m.word_bwd.w_in},
      {"word_bwd.w_rec", &m.word_bwd.w_rec},
      {"word_bwd.bias", &m.word_bwd.bias},
      {"proj_w", &m.proj_w},
      {"proj_b", &m.proj_b},
      {"trans", &m.trans},
  };
}

namespace {

LstmParams make_lstm(int input_dim, int hidden, std::mt19937_64& rng) {
  LstmParams p;
  p.w_in.resize(4 * hidden, input_dim);
  p.w_rec.resize(4 * hidden, hidden);
  p.bias = MatrixXd::Zero(4 * hidden, 1);
  xavier_fill(p.w_in, rng);
  xavier_fill(p.w_rec, rng);
  p.bias.block(hidden, 0, hidden, 1).setOnes();  // forget gate bias
  return p;
}

// One directional run with everything the backward pass needs.
struct LstmState {
  std::vector<VectorXd> xs;
  std::vector<VectorXd> gi, gf, gg, go, c, h, tanh_c;
};

void lstm_forward(const LstmParams& p, std::vector<VectorXd> xs,
                  LstmState& st) {
  const auto H = p.w_rec.cols();
  const std::size_t T = xs.size();
  st.xs = std::move(xs);
  st.gi.resize(T);
  st.gf.resize(T);
  st.gg.resize(T);
  st.go.resize(T);
  st.c.resize(T);
  st.h.resize(T);
  st.tanh_c.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    VectorXd pre = p.w_in * st.xs[t] + p.bias.col(0);
    if (t > 0) pre += p.w_rec * st.h[t - 1];
    st.gi[t] = (1.0 / (1.0 + (-pre.segment(0, H).array()).exp())).matrix();
    st.gf[t] = (1.0 / (1.0 + (-pre.segment(H, H).array()).exp())).matrix();
    st.gg[t] = pre.segment(2 * H, H).array().tanh().matrix();
    st.go[t] = (1.0 / (1.0 + (-pre.segment(3 * H, H).array()).exp())).matrix();
    st.c[t] = st.gi[t].cwiseProduct(st.gg[t]);
    if (t > 0) st.c[t] += st.gf[t].cwiseProduct(st.c[t - 1]);
    st.tanh_c[t] = st.c[t].array().tanh().matrix();
    st.h[t] = st.go[t].cwiseProduct(st.tanh_c[t]);
  }
}

LstmGrads make_zero_grads(const LstmParams& p) {
  LstmGrads g;
  g.w_in = MatrixXd::Zero(p.w_in.rows(), p.w_in.cols());
  g.w_rec = MatrixXd::Zero(p.w_rec.rows(), p.w_rec.cols());
  g.bias = MatrixXd::Zero(p.bias.rows(), 1);
  return g;
}

// dh_out[t] = dL/dh_t from layers above; accumulates parameter grads into g
// and returns dL/dx_t.
std::vector<VectorXd> lstm_backward(const LstmParams& p, const LstmState& st,
                                    const std::vector<VectorXd>& dh_out,
                                    LstmGrads& g) {
  const auto H = p.w_rec.cols();
  const std::size_t T = st.xs.size();
  std::vector<VectorXd> dx(T);
  VectorXd dh_rec = VectorXd::Zero(H);
  VectorXd dc = VectorXd::Zero(H);
  for (std::size_t t = T; t-- > 0;) {
    VectorXd dh = dh_out[t] + dh_rec;
    VectorXd dgo = dh.cwiseProduct(st.tanh_c[t]);
    dc += dh.cwiseProduct(st.go[t])
              .cwiseProduct(
                  (1.0 - st.tanh_c[t].array().square()).matrix());
    VectorXd dgi = dc.cwiseProduct(st.gg[t]);
    VectorXd dgg = dc.cwiseProduct(st.gi[t]);
    VectorXd dgf = t > 0 ? VectorXd(dc.cwiseProduct(st.c[t - 1]))
                         : VectorXd(VectorXd::Zero(H));

    VectorXd dpre(4 * H);
    dpre.segment(0, H) =
        dgi.cwiseProduct(st.gi[t]).cwiseProduct((1.0 - st.gi[t].array()).matrix());
    dpre.segment(H, H) =
        dgf.cwiseProduct(st.gf[t]).cwiseProduct((1.0 - st.gf[t].array()).matrix());
    dpre.segment(2 * H, H) =
        dgg.cwiseProduct((1.0 - st.gg[t].array().square()).matrix());
    dpre.segment(3 * H, H) =
        dgo.cwiseProduct(st.go[t]).cwiseProduct((1.0 - st.go[t].array()).matrix());

    g.w_in += dpre * st.xs[t].transpose();
    g.bias.col(0) += dpre;
    if (t > 0) {
      g.w_rec += dpre * st.h[t - 1].transpose();
      dh_rec = p.w_rec.transpose() * dpre;
      dc = dc.cwiseProduct(st.gf[t]);
    }
    dx[t] = p.w_in.transpose() * dpre;
  }
  return dx;
}

struct ForwardCache {
  std::vector<int> word_ids;
  std::vector<std::vector<int>> char_ids;
  std::vector<LstmState> char_fw, char_bw;
  std::vector<VectorXd> rep;   // word LSTM inputs (after dropout)
  std::vector<VectorXd> mask;  // empty in eval mode or when dropout == 0
  LstmState word_fw, word_bw;
  std::vector<VectorXd> feat;  // emission projection inputs
  EmissionTable emission;
  TransTable trans;
};

std::vector<int> char_ids_of(const NeuralModel& model,
                             const std::string& surface) {
  std::vector<int> ids;
  ids.reserve(surface.size());
  for (char c : surface) {
    auto it = model.char_index.find(std::string(1, c));
    ids.push_back(it == model.char_index.end() ? 0 : it->second);
  }
  return ids;
}

VectorXd char_representation(const NeuralModel& model,
                             const std::vector<int>& ids, LstmState& fw,
                             LstmState& bw) {
  std::vector<VectorXd> xs(ids.size()), rxs(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    xs[k] = model.char_emb.row(ids[k]).transpose();
    rxs[ids.size() - 1 - k] = xs[k];
  }
  lstm_forward(model.char_fwd, std::move(xs), fw);
  lstm_forward(model.char_bwd, std::move(rxs), bw);
  VectorXd rep(2 * model.config.char_dim);
  rep.segment(0, model.config.char_dim) = fw.h.back();
  rep.segment(model.config.char_dim, model.config.char_dim) = bw.h.back();
  return rep;
}

std::array<bool, 9> indicators_at(const NeuralModel& model,
                                  const Sentence& sentence, std::size_t i) {
  return pattern_indicator_block(sentence, i, model.lexicons);
}

void run_forward(const NeuralModel& model, const Sentence& sentence,
                 bool train_mode, std::mt19937_64* rng, ForwardCache& cache) {
  const auto& cfg = model.config;
  const std::size_t T = sentence.size();
  if (T == 0) throw std::invalid_argument("empty sentence");

  cache.word_ids.resize(T);
  cache.char_ids.resize(T);
  cache.char_fw.resize(T);
  cache.char_bw.resize(T);
  cache.rep.resize(T);

  const bool use_dropout = train_mode && cfg.dropout > 0.0;
  if (use_dropout && rng == nullptr) {
    throw std::invalid_argument("train-mode forward needs an rng for dropout");
  }
  if (use_dropout) cache.mask.resize(T);

  std::bernoulli_distribution keep(1.0 - cfg.dropout);
  for (std::size_t t = 0; t < T; ++t) {
    const Token& tok = sentence.tokens[t];
    cache.word_ids[t] = model.word_id(tok.surface);
    cache.char_ids[t] = char_ids_of(model, tok.surface);

    VectorXd rep(model.rep_dim());
    rep.segment(0, cfg.word_dim) =
        model.word_emb.row(cache.word_ids[t]).transpose();
    rep.segment(cfg.word_dim, 2 * cfg.char_dim) = char_representation(
        model, cache.char_ids[t], cache.char_fw[t], cache.char_bw[t]);
    if (cfg.strategy == Strategy::BeforeLstm) {
      auto block = indicators_at(model, sentence, t);
      for (int k = 0; k < kIndicators; ++k) {
        rep(cfg.word_dim + 2 * cfg.char_dim + k) = block[k] ? 1.0 : 0.0;
      }
    }
    if (use_dropout) {
      VectorXd mask(rep.size());
      const double scale = 1.0 / (1.0 - cfg.dropout);
      for (Eigen::Index k = 0; k < mask.size(); ++k) {
        mask(k) = keep(*rng) ? scale : 0.0;
      }
      cache.mask[t] = mask;
      rep = rep.cwiseProduct(mask);
    }
    cache.rep[t] = std::move(rep);
  }
  check_finite_vecs("char_lstm_h", cache.rep);

  std::vector<VectorXd> rrep(T);
  for (std::size_t t = 0; t < T; ++t) rrep[T - 1 - t] = cache.rep[t];
  lstm_forward(model.word_fwd, cache.rep, cache.word_fw);
  lstm_forward(model.word_bwd, std::move(rrep), cache.word_bw);
  check_finite_vecs("word_lstm_h", cache.word_fw.h);
  check_finite_vecs("word_lstm_h", cache.word_bw.h);

  cache.feat.resize(T);
  cache.emission.assign(T, {0.0, 0.0});
  for (std::size_t t = 0; t < T; ++t) {
    VectorXd feat(model.proj_input_dim());
    feat.segment(0, cfg.hidden) = cache.word_fw.h[t];
    feat.segment(cfg.hidden, cfg.hidden) = cache.word_bw.h[T - 1 - t];
    if (cfg.strategy == Strategy::BeforeCrf) {
      auto block = indicators_at(model, sentence, t);
      for (int k = 0; k < kIndicators; ++k) {
        feat(2 * cfg.hidden + k) = block[k] ? 1.0 : 0.0;
      }
    }
    VectorXd e = model.proj_w * feat + model.proj_b.col(0);
    if (!e.allFinite()) throw NumericError("emission");
    cache.emission[t] = {e(0), e(1)};
    cache.feat[t] = std::move(feat);
  }
  cache.trans = {{{model.trans(0, 0), model.trans(0, 1)},
                  {model.trans(1, 0), model.trans(1, 1)}}};
}

const std::vector<IoTag>& gold_labels(const NeuralModel& model,
                                      const Sentence& sentence) {
  auto it = sentence.labels.find(model.category);
  if (it == sentence.labels.end() || it->second.size() != sentence.size()) {
    throw std::invalid_argument(
        "sentence is missing labels for category " +
        std::string(1, category_letter(model.category)));
  }
  return it->second;
}

}  // namespace

NeuralModel init_neural_model(Category category, const NeuralConfig& config,
                              const WordVectors& pretrained,
                              const std::vector<Sentence>& corpus,
                              std::array<PatternLexicon, 3> lexicons) {
  if (pretrained.vectors.cols() != config.word_dim) {
    throw std::invalid_argument(
        "pretrained embedding dimension " +
        std::to_string(pretrained.vectors.cols()) +
        " does not match configured word_dim " +
        std::to_string(config.word_dim));
  }
  NeuralModel m;
  m.config = config;
  m.category = category;
  m.lexicons = std::move(lexicons);

  m.vocab.push_back(kUnk);
  m.vocab_index[kUnk] = 0;
  for (const auto& w : pretrained.vocab) {
    if (m.vocab_index.count(w)) continue;
    m.vocab_index[w] = static_cast<int>(m.vocab.size());
    m.vocab.push_back(w);
  }

  std::set<char> chars;
  for (const auto& s : corpus) {
    for (const auto& tok : s.tokens) {
      for (char c : tok.surface) chars.insert(c);
    }
  }
  m.char_vocab.push_back(kUnk);
  m.char_index[kUnk] = 0;
  for (char c : chars) {
    std::string key(1, c);
    m.char_index[key] = static_cast<int>(m.char_vocab.size());
    m.char_vocab.push_back(key);
  }

  std::mt19937_64 rng(config.seed);

  m.word_emb.resize(static_cast<Eigen::Index>(m.vocab.size()),
                    config.word_dim);
  std::uniform_real_distribution<double> unk_dist(-0.25, 0.25);
  for (int k = 0; k < config.word_dim; ++k) m.word_emb(0, k) = unk_dist(rng);
  for (std::size_t r = 0; r < pretrained.vocab.size(); ++r) {
    int id = m.vocab_index.at(pretrained.vocab[r]);
    m.word_emb.row(id) = pretrained.vectors.row(static_cast<Eigen::Index>(r));
  }

  m.char_emb.resize(static_cast<Eigen::Index>(m.char_vocab.size()),
                    config.char_dim);
  xavier_fill(m.char_emb, rng);

  m.char_fwd = make_lstm(config.char_dim, config.char_dim, rng);
  m.char_bwd = make_lstm(config.char_dim, config.char_dim, rng);
  m.word_fwd = make_lstm(m.rep_dim(), config.hidden, rng);
  m.word_bwd = make_lstm(m.rep_dim(), config.hidden, rng);

  m.proj_w.resize(2, m.proj_input_dim());
  xavier_fill(m.proj_w, rng);
  m.proj_b = MatrixXd::Zero(2, 1);
  m.trans = MatrixXd::Zero(2, 2);
  return m;
}

Eigen::VectorXd token_representation(const NeuralModel& model,
                                     const Sentence& sentence, std::size_t i) {
  const auto& cfg = model.config;
  VectorXd rep(model.rep_dim());
  rep.segment(0, cfg.word_dim) =
      model.word_emb.row(model.word_id(sentence.tokens.at(i).surface))
          .transpose();
  LstmState fw, bw;
  rep.segment(cfg.word_dim, 2 * cfg.char_dim) = char_representation(
      model, char_ids_of(model, sentence.tokens[i].surface), fw, bw);
  if (cfg.strategy == Strategy::BeforeLstm) {
    auto block = indicators_at(model, sentence, i);
    for (int k = 0; k < kIndicators; ++k) {
      rep(cfg.word_dim + 2 * cfg.char_dim + k) = block[k] ? 1.0 : 0.0;
    }
  }
  return rep;
}

NeuralForward bilstm_crf_forward(const NeuralModel& model,
                                 const Sentence& sentence, bool train_mode,
                                 std::mt19937_64* rng) {
  ForwardCache cache;
  run_forward(model, sentence, train_mode, rng, cache);
  NeuralForward out;
  out.emission = cache.emission;
  out.trans = cache.trans;
  out.loss =
      crf_nll(cache.emission, cache.trans, gold_labels(model, sentence)).loss;
  return out;
}

std::pair<double, NeuralGradients> loss_and_gradients(const NeuralModel& model,
                                                      const Sentence& sentence,
                                                      bool train_mode,
                                                      std::mt19937_64* rng) {
  const auto& cfg = model.config;
  const std::size_t T = sentence.size();

  ForwardCache cache;
  run_forward(model, sentence, train_mode, rng, cache);
  CrfLoss nll = crf_nll(cache.emission, cache.trans,
                        gold_labels(model, sentence));

  NeuralGradients g;
  g.char_fwd = make_zero_grads(model.char_fwd);
  g.char_bwd = make_zero_grads(model.char_bwd);
  g.word_fwd = make_zero_grads(model.word_fwd);
  g.word_bwd = make_zero_grads(model.word_bwd);
  g.proj_w = MatrixXd::Zero(model.proj_w.rows(), model.proj_w.cols());
  g.proj_b = MatrixXd::Zero(2, 1);
  g.trans = MatrixXd::Zero(2, 2);

  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) g.trans(a, b) = nll.d_trans[a][b];
  }

  // emission projection
  std::vector<VectorXd> dh_fwd(T), dh_bwd(T);
  for (std::size_t t = 0; t < T; ++t) {
    VectorXd de(2);
    de << nll.d_emission[t][0], nll.d_emission[t][1];
    g.proj_w += de * cache.feat[t].transpose();
    g.proj_b.col(0) += de;
    VectorXd dfeat = model.proj_w.transpose() * de;
    dh_fwd[t] = dfeat.segment(0, cfg.hidden);
    dh_bwd[T - 1 - t] = dfeat.segment(cfg.hidden, cfg.hidden);
    // BeforeCrf indicator slice has no parameters upstream
  }

  // word BiLSTM
  std::vector<VectorXd> dx_f =
      lstm_backward(model.word_fwd, cache.word_fw, dh_fwd, g.word_fwd);
  std::vector<VectorXd> dx_b =
      lstm_backward(model.word_bwd, cache.word_bw, dh_bwd, g.word_bwd);
  std::vector<VectorXd> drep(T);
  for (std::size_t t = 0; t < T; ++t) drep[t] = dx_f[t] + dx_b[T - 1 - t];

  if (!cache.mask.empty()) {
    for (std::size_t t = 0; t < T; ++t) {
      drep[t] = drep[t].cwiseProduct(cache.mask[t]);
    }
  }

  // split into word embedding rows and char BiLSTM finals
  for (std::size_t t = 0; t < T; ++t) {
    VectorXd dword = drep[t].segment(0, cfg.word_dim);
    auto [it, inserted] = g.word_emb.try_emplace(cache.word_ids[t], dword);
    if (!inserted) it->second += dword;

    const std::size_t n_chars = cache.char_ids[t].size();
    std::vector<VectorXd> dh_cf(n_chars, VectorXd::Zero(cfg.char_dim));
    std::vector<VectorXd> dh_cb(n_chars, VectorXd::Zero(cfg.char_dim));
    dh_cf.back() = drep[t].segment(cfg.word_dim, cfg.char_dim);
    dh_cb.back() = drep[t].segment(cfg.word_dim + cfg.char_dim, cfg.char_dim);

    std::vector<VectorXd> dxc_f =
        lstm_backward(model.char_fwd, cache.char_fw[t], dh_cf, g.char_fwd);
    std::vector<VectorXd> dxc_b =
        lstm_backward(model.char_bwd, cache.char_bw[t], dh_cb, g.char_bwd);
    for (std::size_t k = 0; k < n_chars; ++k) {
      VectorXd dc = dxc_f[k] + dxc_b[n_chars - 1 - k];
      auto [cit, cinserted] = g.char_emb.try_emplace(cache.char_ids[t][k], dc);
      if (!cinserted) cit->second += dc;
    }
  }

  return {nll.loss, std::move(g)};
}

std::vector<IoTag> neural_decode(const NeuralModel& model,
                                 const Sentence& sentence) {
  if (model.config.strategy == Strategy::Embedding) {
    MergedSentence merged = merge_pattern_tokens(
        sentence, model.lexicons[static_cast<int>(model.category)]);
    ForwardCache cache;
    run_forward(model, merged.sentence, false, nullptr, cache);
    auto tags = viterbi(cache.emission, cache.trans);
    return project_to_original(merged, tags);
  }
  ForwardCache cache;
  run_forward(model, sentence, false, nullptr, cache);
  return viterbi(cache.emission, cache.trans);
}

AdamState make_adam(NeuralModel& model) {
  AdamState st;
  for (const auto& ref : named_tensors(model)) {
    st.m.push_back(MatrixXd::Zero(ref.tensor->rows(), ref.tensor->cols()));
    st.v.push_back(MatrixXd::Zero(ref.tensor->rows(), ref.tensor->cols()));
  }
  return st;
}

namespace {

void adam_update_block(const NeuralConfig& cfg, long long step, MatrixXd& w,
                       MatrixXd& m, MatrixXd& v, const MatrixXd& grad) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square())
          .matrix();
  w.array() -= cfg.lr * (m.array() / bc1) /
               ((v.array() / bc2).sqrt() + cfg.adam_eps);
}

}  // namespace

void adam_step(NeuralModel& model, AdamState& st, const NeuralGradients& g) {
  ++st.step;
  auto refs = named_tensors(model);
  const auto& cfg = model.config;

  // tensors 0 and 1 are the embedding tables: lazy row updates
  for (const auto& [row, grad] : g.word_emb) {
    MatrixXd gr = grad.transpose();
    MatrixXd w = model.word_emb.row(row);
    MatrixXd m = st.m[0].row(row);
    MatrixXd v = st.v[0].row(row);
    adam_update_block(cfg, st.step, w, m, v, gr);
    model.word_emb.row(row) = w;
    st.m[0].row(row) = m;
    st.v[0].row(row) = v;
  }
  for (const auto& [row, grad] : g.char_emb) {
    MatrixXd gr = grad.transpose();
    MatrixXd w = model.char_emb.row(row);
    MatrixXd m = st.m[1].row(row);
    MatrixXd v = st.v[1].row(row);
    adam_update_block(cfg, st.step, w, m, v, gr);
    model.char_emb.row(row) = w;
    st.m[1].row(row) = m;
    st.v[1].row(row) = v;
  }

  const MatrixXd* dense[] = {
      &g.char_fwd.w_in, &g.char_fwd.w_rec, &g.char_fwd.bias,
      &g.char_bwd.w_in, &g.char_bwd.w_rec, &g.char_bwd.bias,
      &g.word_fwd.w_in, &g.word_fwd.w_rec, &g.word_fwd.bias,
      &g.word_bwd.w_in, &g.word_bwd.w_rec, &g.word_bwd.bias,
      &g.proj_w,        &g.proj_b,         &g.trans,
  };
  for (std::size_t k = 0; k < std::size(dense); ++k) {
    std::size_t idx = k + 2;
    adam_update_block(cfg, st.step, *refs[idx].tensor, st.m[idx], st.v[idx],
                      *dense[k]);
  }
}

NeuralModel train_neural(const std::vector<Sentence>& train, Category category,
                         const NeuralConfig& config,
                         const WordVectors& pretrained,
                         std::array<PatternLexicon, 3> lexicons,
                         const std::vector<Sentence>* dev,
                         std::vector<double>* epoch_loss_out) {
  if (train.empty()) {
    throw std::invalid_argument("train_neural: empty training data");
  }

  std::vector<Sentence> prepared;
  prepared.reserve(train.size());
  if (config.strategy == Strategy::Embedding) {
    const PatternLexicon& lex = lexicons[static_cast<int>(category)];
    for (const Sentence& s : train) {
      prepared.push_back(merge_pattern_tokens(s, lex).sentence);
    }
  } else {
    prepared = train;
  }

  NeuralModel model =
      init_neural_model(category, config, pretrained, prepared, lexicons);
  AdamState adam = make_adam(model);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);

  NeuralModel best = model;
  double best_f1 = -1.0;
  int stale = 0;

  auto dev_f1 = [&]() {
    PrfScore score;
    for (const Sentence& s : *dev) {
      auto it = s.labels.find(category);
      if (it == s.labels.end()) continue;
      score += token_prf({it->second}, {neural_decode(model, s)});
    }
    return score.f1();
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      auto [loss, grads] = loss_and_gradients(model, prepared[idx], true, &rng);
      adam_step(model, adam, grads);
      epoch_loss += loss;
    }
    if (epoch_loss_out != nullptr) {
      epoch_loss_out->push_back(epoch_loss /
                                static_cast<double>(prepared.size()));
    }
    if (dev != nullptr) {
      double f1 = dev_f1();
      if (f1 > best_f1) {
        best_f1 = f1;
        best = model;
        stale = 0;
      } else if (++stale >= config.patience && config.patience > 0) {
        break;
      }
    }
  }
  return dev != nullptr && best_f1 >= 0.0 ? best : model;
}

namespace {

std::string fnv1a_hex(const std::vector<std::string>& items) {
  std::uint64_t h = 1469598103934665603ull;
  auto eat = [&h](char c) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  };
  for (const auto& s : items) {
    for (char c : s) eat(c);
    eat('\n');
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

json config_to_json(const NeuralConfig& c) {
  return json{{"word_dim", c.word_dim},   {"char_dim", c.char_dim},
              {"hidden", c.hidden},       {"dropout", c.dropout},
              {"lr", c.lr},               {"beta1", c.beta1},
              {"beta2", c.beta2},         {"adam_eps", c.adam_eps},
              {"epochs", c.epochs},       {"patience", c.patience},
              {"seed", c.seed}};
}

NeuralConfig config_from_json(const json& j) {
  NeuralConfig c;
  c.word_dim = j.at("word_dim").get<int>();
  c.char_dim = j.at("char_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_neural(const NeuralModel& model, const std::string& manifest_path,
                 const std::string& blob_path) {
  auto refs = named_tensors(const_cast<NeuralModel&>(model));

  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw std::invalid_argument("cannot write " + blob_path);
  json tensors = json::object();
  std::uint64_t offset = 0;
  for (const auto& ref : refs) {
    const MatrixXd& t = *ref.tensor;
    tensors[ref.name] = {{"shape", {t.rows(), t.cols()}}, {"offset", offset}};
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        double v = t(i, j);
        blob.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
    }
    offset += static_cast<std::uint64_t>(t.size()) * sizeof(double);
  }
  blob.close();

  json manifest;
  manifest["version"] = 1;
  manifest["category"] = std::string(1, category_letter(model.category));
  manifest["strategy"] = strategy_name(model.config.strategy);
  manifest["config"] = config_to_json(model.config);
  manifest["vocab"] = model.vocab;
  manifest["char_vocab"] = model.char_vocab;
  manifest["vocab_hash"] = fnv1a_hex(model.vocab);
  manifest["tensors"] = std::move(tensors);

  std::ofstream out(manifest_path);
  if (!out) throw std::invalid_argument("cannot write " + manifest_path);
  out << manifest.dump() << '\n';
}

NeuralModel load_neural(const std::string& manifest_path,
                        const std::string& blob_path,
                        std::array<PatternLexicon, 3> lexicons) {
  std::ifstream in(manifest_path);
  if (!in) throw std::invalid_argument("cannot read " + manifest_path);
  json manifest = json::parse(in);

  NeuralModel m;
  m.config = config_from_json(manifest.at("config"));
  auto strat =
      strategy_from_name(manifest.at("strategy").get<std::string>());
  if (!strat) {
    throw std::invalid_argument("unknown strategy " +
                             manifest.at("strategy").get<std::string>());
  }
  m.config.strategy = *strat;
  auto cat =
      category_from_letter(manifest.at("category").get<std::string>().at(0));
  if (!cat) throw std::invalid_argument("unknown category in manifest");
  m.category = *cat;
  m.lexicons = std::move(lexicons);

  m.vocab = manifest.at("vocab").get<std::vector<std::string>>();
  m.char_vocab = manifest.at("char_vocab").get<std::vector<std::string>>();
  if (fnv1a_hex(m.vocab) != manifest.at("vocab_hash").get<std::string>()) {
    throw std::invalid_argument("vocab hash mismatch in " + manifest_path);
  }
  for (std::size_t i = 0; i < m.vocab.size(); ++i) {
    m.vocab_index[m.vocab[i]] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < m.char_vocab.size(); ++i) {
    m.char_index[m.char_vocab[i]] = static_cast<int>(i);
  }

  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw std::invalid_argument("cannot read " + blob_path);
  const json& tensors = manifest.at("tensors");
  for (const auto& ref : named_tensors(m)) {
    const json& spec = tensors.at(ref.name);
    auto rows = spec.at("shape").at(0).get<Eigen::Index>();
    auto cols = spec.at("shape").at(1).get<Eigen::Index>();
    ref.tensor->resize(rows, cols);
    blob.seekg(static_cast<std::streamoff>(spec.at("offset").get<std::uint64_t>()));
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        double v = 0.0;
        blob.read(reinterpret_cast<char*>(&v), sizeof(double));
        (*ref.tensor)(i, j) = v;
      }
    }
    if (!blob) throw std::invalid_argument("tensor blob truncated: " + ref.name);
  }
  return m;
}

}  // namespace picotag
