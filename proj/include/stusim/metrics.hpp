#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "stusim/text.hpp"

namespace stusim {

/// Longest common subsequence length over token vectors.
inline std::size_t lcs_length(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> previous(b.size() + 1, 0);
  std::vector<std::size_t> current(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      current[j] = a[i - 1] == b[j - 1] ? previous[j - 1] + 1
                                        : std::max(previous[j], current[j - 1]);
    }
    std::swap(previous, current);
  }
  return previous[b.size()];
}

/// ROUGE-L in F1 form (beta = 1) over lowercase alphanumeric tokens,
/// scaled to [0, 100]. 0 when either side has no tokens.
inline double rouge_l(const std::string& candidate, const std::string& reference) {
  const std::vector<std::string> c = tokenize(candidate);
  const std::vector<std::string> r = tokenize(reference);
  if (c.empty() || r.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(c, r));
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(c.size());
  const double recall = lcs / static_cast<double>(r.size());
  return 100.0 * (2.0 * precision * recall) / (precision + recall);
}

/// BLEU-4: geometric mean of 1..4-gram modified precisions with brevity
/// penalty, scaled to [0, 100]. Zero-count n-gram orders use add-one
/// smoothing ((m+1)/(t+1)); candidates shorter than n tokens contribute a
/// smoothed term of 1 for that order. 0 when either side has no tokens.
inline double bleu_4(const std::string& candidate, const std::string& reference) {
  const std::vector<std::string> c = tokenize(candidate);
  const std::vector<std::string> r = tokenize(reference);
  if (c.empty() || r.empty()) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, std::size_t> candidate_grams;
    std::map<std::vector<std::string>, std::size_t> reference_grams;
    if (c.size() >= n)
      for (std::size_t i = 0; i + n <= c.size(); ++i)
        ++candidate_grams[{c.begin() + static_cast<std::ptrdiff_t>(i),
                           c.begin() + static_cast<std::ptrdiff_t>(i + n)}];
    if (r.size() >= n)
      for (std::size_t i = 0; i + n <= r.size(); ++i)
        ++reference_grams[{r.begin() + static_cast<std::ptrdiff_t>(i),
                           r.begin() + static_cast<std::ptrdiff_t>(i + n)}];
    std::size_t matches = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : candidate_grams) {
      total += count;
      auto it = reference_grams.find(gram);
      if (it != reference_grams.end()) matches += std::min(count, it->second);
    }
    const double precision = (matches == 0 || total == 0)
                                 ? (static_cast<double>(matches) + 1.0) /
                                       (static_cast<double>(total) + 1.0)
                                 : static_cast<double>(matches) / static_cast<double>(total);
    log_sum += std::log(precision);
  }
  const double geometric_mean = std::exp(log_sum / 4.0);
  const double brevity = c.size() >= r.size()
                             ? 1.0
                             : std::exp(1.0 - static_cast<double>(r.size()) /
                                                  static_cast<double>(c.size()));
  return 100.0 * brevity * geometric_mean;
}

}  // namespace stusim
