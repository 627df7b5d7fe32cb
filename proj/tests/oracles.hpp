#pragma once

// Independent reference implementations used only by tests. They are written
// with plain loops over std::vector and share no code with the library paths
// they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double cosine(const Vec& a, const Vec& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Exhaustive argmax over every (hypothesis, premise) pair; collects all
// maximizers and returns the smallest index.
inline std::vector<int> brute_force_alignment(const std::vector<Vec>& hyps, const std::vector<Vec>& prems) {
  std::vector<int> out;
  for (const auto& u : prems) {
    std::vector<double> sims;
    for (const auto& h : hyps) sims.push_back(cosine(h, u));
    double best = *std::max_element(sims.begin(), sims.end());
    std::vector<int> winners;
    for (std::size_t i = 0; i < sims.size(); ++i)
      if (sims[i] == best) winners.push_back(static_cast<int>(i));
    out.push_back(*std::min_element(winners.begin(), winners.end()));
  }
  return out;
}

// Corpus BLEU with clipped n-gram counts, computed by direct scanning of the
// token lists (no hashing), geometric mean of n-gram precisions with uniform
// weights, brevity penalty, and a 1e-9 floor for zero precisions.
inline int count_ngram(const std::vector<std::string>& toks, const std::vector<std::string>& gram) {
  int c = 0;
  if (toks.size() < gram.size()) return 0;
  for (std::size_t i = 0; i + gram.size() <= toks.size(); ++i)
    if (std::equal(gram.begin(), gram.end(), toks.begin() + static_cast<long>(i))) ++c;
  return c;
}

inline double reference_bleu(const std::vector<std::vector<std::string>>& cands,
                             const std::vector<std::vector<std::string>>& refs, int max_n) {
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    double matched = 0, total = 0;
    for (std::size_t s = 0; s < cands.size(); ++s) {
      const auto& c = cands[s];
      if (c.size() < static_cast<std::size_t>(n)) continue;
      total += static_cast<double>(c.size() - static_cast<std::size_t>(n) + 1);
      std::vector<std::vector<std::string>> seen;
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= c.size(); ++i) {
        std::vector<std::string> gram(c.begin() + static_cast<long>(i), c.begin() + static_cast<long>(i) + n);
        if (std::find(seen.begin(), seen.end(), gram) != seen.end()) continue;
        seen.push_back(gram);
        matched += std::min(count_ngram(c, gram), count_ngram(refs[s], gram));
      }
    }
    double p = (matched > 0 && total > 0) ? matched / total : 1e-9;
    log_sum += std::log(p);
  }
  double c_len = 0, r_len = 0;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    c_len += static_cast<double>(cands[s].size());
    r_len += static_cast<double>(refs[s].size());
  }
  double bp = c_len >= r_len ? 1.0 : (c_len == 0 ? 0.0 : std::exp(1.0 - r_len / c_len));
  return 100.0 * bp * std::exp(log_sum / max_n);
}

}  // namespace oracle
