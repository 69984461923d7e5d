#include "picotag/metrics.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace picotag {

double PrfScore::precision() const {
  return tp + fp == 0 ? 0.0
                      : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double PrfScore::recall() const {
  return tp + fn == 0 ? 0.0
                      : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double PrfScore::f1() const {
  double p = precision();
  double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

PrfScore& PrfScore::operator+=(const PrfScore& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

PrfScore token_prf(const std::vector<std::vector<IoTag>>& gold,
                   const std::vector<std::vector<IoTag>>& pred) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("token_prf: " + std::to_string(gold.size()) +
                                " gold vs " + std::to_string(pred.size()) +
                                " predicted sequences");
  }
  PrfScore score;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw std::invalid_argument(
          "token_prf: length mismatch in sentence " + std::to_string(s) +
          " (" + std::to_string(gold[s].size()) + " gold vs " +
          std::to_string(pred[s].size()) + " predicted)");
    }
    for (std::size_t t = 0; t < gold[s].size(); ++t) {
      bool g = gold[s][t] == IoTag::In;
      bool p = pred[s][t] == IoTag::In;
      if (g && p) ++score.tp;
      if (!g && p) ++score.fp;
      if (g && !p) ++score.fn;
    }
  }
  return score;
}

PrfScore token_prf_docs(const std::vector<Document>& gold,
                        const std::vector<Document>& pred, Category category) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("token_prf_docs: document count mismatch");
  }
  std::vector<std::vector<IoTag>> g, p;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (gold[d].sentences.size() != pred[d].sentences.size()) {
      throw std::invalid_argument("token_prf_docs: sentence count mismatch in " +
                                  gold[d].doc_id);
    }
    for (std::size_t s = 0; s < gold[d].sentences.size(); ++s) {
      auto gi = gold[d].sentences[s].labels.find(category);
      auto pi = pred[d].sentences[s].labels.find(category);
      if (gi == gold[d].sentences[s].labels.end() ||
          pi == pred[d].sentences[s].labels.end()) {
        continue;
      }
      g.push_back(gi->second);
      p.push_back(pi->second);
    }
  }
  return token_prf(g, p);
}

void write_prf_tsv(std::ostream& out,
                   const std::vector<std::pair<Category, PrfScore>>& rows,
                   const std::vector<std::string>& comments) {
  out << "#category\tprecision\trecall\tf1\ttp\tfp\tfn\n";
  for (const auto& c : comments) out << "# " << c << '\n';
  char buf[32];
  for (const auto& [cat, score] : rows) {
    out << category_letter(cat);
    double vals[3] = {score.precision(), score.recall(), score.f1()};
    for (double v : vals) {
      std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
      out << '\t' << buf;
    }
    out << '\t' << score.tp << '\t' << score.fp << '\t' << score.fn << '\n';
  }
}

}  // namespace picotag
