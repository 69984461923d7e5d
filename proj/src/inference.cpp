#include "picotag/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace picotag {

double logsumexp2(double a, double b) {
  double m = std::max(a, b);
  if (!std::isfinite(m)) return m;  // both -inf (or a stray inf)
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

namespace {

void check_nonempty(const EmissionTable& emission) {
  if (emission.empty()) {
    throw std::invalid_argument("sequence potentials need T >= 1");
  }
}

}  // namespace

double sequence_score(const EmissionTable& emission, const TransTable& trans,
                      const std::vector<IoTag>& labels) {
  check_nonempty(emission);
  double score = emission[0][static_cast<int>(labels[0])];
  for (std::size_t t = 1; t < emission.size(); ++t) {
    int prev = static_cast<int>(labels[t - 1]);
    int cur = static_cast<int>(labels[t]);
    score += trans[prev][cur] + emission[t][cur];
  }
  return score;
}

double log_partition(const EmissionTable& emission, const TransTable& trans) {
  check_nonempty(emission);
  std::array<double, 2> alpha = emission[0];
  for (std::size_t t = 1; t < emission.size(); ++t) {
    std::array<double, 2> next;
    for (int y = 0; y < 2; ++y) {
      next[y] = logsumexp2(alpha[0] + trans[0][y], alpha[1] + trans[1][y]) +
                emission[t][y];
    }
    alpha = next;
  }
  return logsumexp2(alpha[0], alpha[1]);
}

double log_partition_backward(const EmissionTable& emission,
                              const TransTable& trans) {
  check_nonempty(emission);
  const std::size_t T = emission.size();
  std::array<double, 2> beta = {0.0, 0.0};
  for (std::size_t t = T - 1; t > 0; --t) {
    std::array<double, 2> prev;
    for (int y = 0; y < 2; ++y) {
      prev[y] = logsumexp2(trans[y][0] + emission[t][0] + beta[0],
                           trans[y][1] + emission[t][1] + beta[1]);
    }
    beta = prev;
  }
  return logsumexp2(emission[0][0] + beta[0], emission[0][1] + beta[1]);
}

Marginals forward_backward(const EmissionTable& emission,
                           const TransTable& trans) {
  check_nonempty(emission);
  const std::size_t T = emission.size();

  std::vector<std::array<double, 2>> alpha(T), beta(T);
  alpha[0] = emission[0];
  for (std::size_t t = 1; t < T; ++t) {
    for (int y = 0; y < 2; ++y) {
      alpha[t][y] =
          logsumexp2(alpha[t - 1][0] + trans[0][y], alpha[t - 1][1] + trans[1][y]) +
          emission[t][y];
    }
  }
  beta[T - 1] = {0.0, 0.0};
  for (std::size_t t = T - 1; t > 0; --t) {
    for (int y = 0; y < 2; ++y) {
      beta[t - 1][y] = logsumexp2(trans[y][0] + emission[t][0] + beta[t][0],
                                  trans[y][1] + emission[t][1] + beta[t][1]);
    }
  }

  Marginals m;
  m.log_z = logsumexp2(alpha[T - 1][0], alpha[T - 1][1]);
  m.unary.resize(T);
  m.pairwise.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (int y = 0; y < 2; ++y) {
      m.unary[t][y] = std::exp(alpha[t][y] + beta[t][y] - m.log_z);
    }
  }
  for (std::size_t t = 1; t < T; ++t) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        m.pairwise[t][a][b] = std::exp(alpha[t - 1][a] + trans[a][b] +
                                       emission[t][b] + beta[t][b] - m.log_z);
      }
    }
  }
  return m;
}

std::vector<IoTag> viterbi(const EmissionTable& emission,
                           const TransTable& trans) {
  check_nonempty(emission);
  const std::size_t T = emission.size();
  std::vector<std::array<double, 2>> delta(T);
  std::vector<std::array<int, 2>> back(T);

  delta[0] = emission[0];
  for (std::size_t t = 1; t < T; ++t) {
    for (int y = 0; y < 2; ++y) {
      double via0 = delta[t - 1][0] + trans[0][y];
      double via1 = delta[t - 1][1] + trans[1][y];
      // ties go to the lower previous label
      int best = via1 > via0 ? 1 : 0;
      back[t][y] = best;
      delta[t][y] = (best == 1 ? via1 : via0) + emission[t][y];
    }
  }

  std::vector<IoTag> path(T);
  int y = delta[T - 1][1] > delta[T - 1][0] ? 1 : 0;
  path[T - 1] = static_cast<IoTag>(y);
  for (std::size_t t = T - 1; t > 0; --t) {
    y = back[t][y];
    path[t - 1] = static_cast<IoTag>(y);
  }
  return path;
}

CrfLoss crf_nll(const EmissionTable& emission, const TransTable& trans,
                const std::vector<IoTag>& gold) {
  check_nonempty(emission);
  if (gold.size() != emission.size()) {
    throw std::invalid_argument("gold label length does not match potentials");
  }
  Marginals m = forward_backward(emission, trans);

  CrfLoss out;
  out.loss = m.log_z - sequence_score(emission, trans, gold);
  out.d_emission.assign(emission.size(), {0.0, 0.0});
  for (std::size_t t = 0; t < emission.size(); ++t) {
    for (int y = 0; y < 2; ++y) out.d_emission[t][y] = m.unary[t][y];
    out.d_emission[t][static_cast<int>(gold[t])] -= 1.0;
  }
  for (std::size_t t = 1; t < emission.size(); ++t) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) out.d_trans[a][b] += m.pairwise[t][a][b];
    }
    out.d_trans[static_cast<int>(gold[t - 1])][static_cast<int>(gold[t])] -=
        1.0;
  }
  return out;
}

}  // namespace picotag
