#ifndef PICOTAG_METRICS_HPP
#define PICOTAG_METRICS_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "picotag/corpus.hpp"

namespace picotag {

// Token-level counts with the positive class = In. Zero denominators score 0.
struct PrfScore {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;

  PrfScore& operator+=(const PrfScore& other);
};

// Counts summed over all aligned tag sequences. Throws std::invalid_argument
// naming the offending sentence on a length mismatch.
PrfScore token_prf(const std::vector<std::vector<IoTag>>& gold,
                   const std::vector<std::vector<IoTag>>& pred);

// Convenience over parallel document lists; sentences missing the category
// in either side are skipped.
PrfScore token_prf_docs(const std::vector<Document>& gold,
                        const std::vector<Document>& pred, Category category);

// TSV rows: category, precision, recall, f1 (percentages, 2 decimals), then
// the raw tp/fp/fn counts.
void write_prf_tsv(std::ostream& out,
                   const std::vector<std::pair<Category, PrfScore>>& rows,
                   const std::vector<std::string>& comments = {});

}  // namespace picotag

#endif  // PICOTAG_METRICS_HPP
