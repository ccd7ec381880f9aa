#include "causarc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace causarc {

ClassificationReport classification_report(const std::vector<int>& y_true,
                                           const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty())
    throw std::invalid_argument("classification_report: label vectors must match and be non-empty");
  size_t n = y_true.size();

  std::map<int, int> support, tp, fp;
  for (size_t i = 0; i < n; ++i) {
    ++support[y_true[i]];
    if (y_pred[i] == y_true[i])
      ++tp[y_true[i]];
    else
      ++fp[y_pred[i]];
  }

  ClassificationReport r;
  double correct = 0.0;
  for (size_t i = 0; i < n; ++i)
    if (y_true[i] == y_pred[i]) correct += 1.0;
  r.accuracy = correct / static_cast<double>(n);

  for (const auto& [cls, sup] : support) {
    int tpc = tp.count(cls) ? tp[cls] : 0;
    int fpc = fp.count(cls) ? fp[cls] : 0;
    int pred_pos = tpc + fpc;
    double prec = pred_pos == 0 ? 0.0 : static_cast<double>(tpc) / pred_pos;
    double rec = static_cast<double>(tpc) / sup;
    double f1 = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
    double w = static_cast<double>(sup) / static_cast<double>(n);
    r.weighted_precision += w * prec;
    r.weighted_recall += w * rec;
    r.weighted_f1 += w * f1;
  }
  return r;
}

namespace {

using Ngram = std::vector<int>;

std::map<Ngram, int> ngram_counts(const std::vector<int>& seq, int n) {
  std::map<Ngram, int> counts;
  if (static_cast<int>(seq.size()) < n) return counts;
  for (size_t i = 0; i + n <= seq.size(); ++i)
    ++counts[Ngram(seq.begin() + i, seq.begin() + i + n)];
  return counts;
}

int clipped_overlap(const std::map<Ngram, int>& cand, const std::map<Ngram, int>& ref) {
  int m = 0;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

PrfScore prf(double matches, double cand_total, double ref_total) {
  PrfScore s;
  if (cand_total > 0.0) s.precision = matches / cand_total;
  if (ref_total > 0.0) s.recall = matches / ref_total;
  if (s.precision + s.recall > 0.0)
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace

PrfScore rouge_n(const std::vector<int>& cand, const std::vector<int>& ref, int n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
  auto cc = ngram_counts(cand, n);
  auto rc = ngram_counts(ref, n);
  double cand_total = 0.0, ref_total = 0.0;
  for (const auto& [g, c] : cc) cand_total += c;
  for (const auto& [g, c] : rc) ref_total += c;
  return prf(clipped_overlap(cc, rc), cand_total, ref_total);
}

PrfScore rouge_l(const std::vector<int>& cand, const std::vector<int>& ref) {
  size_t a = cand.size(), b = ref.size();
  if (a == 0 || b == 0) return {};
  std::vector<std::vector<int>> dp(a + 1, std::vector<int>(b + 1, 0));
  for (size_t i = 1; i <= a; ++i)
    for (size_t j = 1; j <= b; ++j)
      dp[i][j] = cand[i - 1] == ref[j - 1] ? dp[i - 1][j - 1] + 1
                                           : std::max(dp[i - 1][j], dp[i][j - 1]);
  return prf(dp[a][b], static_cast<double>(a), static_cast<double>(b));
}

double bleu_n(const std::vector<std::vector<int>>& cands,
              const std::vector<std::vector<int>>& refs, int max_n) {
  if (max_n < 1) throw std::invalid_argument("bleu_n: max_n must be >= 1");
  if (cands.size() != refs.size() || cands.empty())
    throw std::invalid_argument("bleu_n: corpora must match and be non-empty");

  double cand_len = 0.0, ref_len = 0.0;
  for (size_t i = 0; i < cands.size(); ++i) {
    cand_len += static_cast<double>(cands[i].size());
    ref_len += static_cast<double>(refs[i].size());
  }
  if (cand_len == 0.0) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    double matches = 0.0, total = 0.0;
    for (size_t i = 0; i < cands.size(); ++i) {
      auto cc = ngram_counts(cands[i], n);
      auto rc = ngram_counts(refs[i], n);
      matches += clipped_overlap(cc, rc);
      for (const auto& [g, c] : cc) total += c;
    }
    if (matches == 0.0 || total == 0.0) return 0.0;
    log_sum += std::log(matches / total);
  }
  double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / max_n);
}

}  // namespace causarc
