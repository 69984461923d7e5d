#ifndef PICOTAG_INFERENCE_HPP
#define PICOTAG_INFERENCE_HPP

#include <array>
#include <vector>

#include "picotag/corpus.hpp"

namespace picotag {

// Linear-chain potentials over the fixed IO label set (Out = 0, In = 1).
// emission[t][y] and transition[prev][cur] are log-space scores.
using EmissionTable = std::vector<std::array<double, 2>>;
using TransTable = std::array<std::array<double, 2>, 2>;

inline constexpr std::size_t kNumLabels = 2;

double logsumexp2(double a, double b);

double sequence_score(const EmissionTable& emission, const TransTable& trans,
                      const std::vector<IoTag>& labels);

// log of the sum over all 2^T label sequences, forward recursion in log
// space. T >= 1.
double log_partition(const EmissionTable& emission, const TransTable& trans);

// Same quantity via the backward recursion; used to cross-check the forward
// pass.
double log_partition_backward(const EmissionTable& emission,
                              const TransTable& trans);

struct Marginals {
  double log_z = 0.0;
  // unary[t][y] = P(y_t = y)
  std::vector<std::array<double, 2>> unary;
  // pairwise[t][a][b] = P(y_{t-1} = a, y_t = b), defined for t >= 1
  std::vector<std::array<std::array<double, 2>, 2>> pairwise;
};

Marginals forward_backward(const EmissionTable& emission,
                           const TransTable& trans);

// Argmax label sequence. Score ties are broken toward the lower label index
// (Out before In) at every backpointer decision and at the final state, so
// the output is deterministic; an all-zero model decodes to all Out.
std::vector<IoTag> viterbi(const EmissionTable& emission,
                           const TransTable& trans);

struct CrfLoss {
  double loss = 0.0;  // log Z - gold score
  EmissionTable d_emission;
  TransTable d_trans{};
};

// Negative log-likelihood of `gold` under the potentials, with gradients
// w.r.t. every potential entry (model marginals minus empirical counts).
CrfLoss crf_nll(const EmissionTable& emission, const TransTable& trans,
                const std::vector<IoTag>& gold);

}  // namespace picotag

#endif  // PICOTAG_INFERENCE_HPP
