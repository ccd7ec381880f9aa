#pragma once

#include <vector>

namespace causarc {

struct ClassificationReport {
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
};

// Support-weighted precision/recall/F1 over the classes present in y_true.
// A class with zero predicted positives contributes precision 0; F1 is 0
// whenever precision + recall is 0.
ClassificationReport classification_report(const std::vector<int>& y_true,
                                           const std::vector<int>& y_pred);

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Clipped n-gram overlap for one candidate/reference pair. A reference (or
// candidate) shorter than n yields all-zero scores.
PrfScore rouge_n(const std::vector<int>& cand, const std::vector<int>& ref, int n);

// Longest-common-subsequence F-measure (beta = 1).
PrfScore rouge_l(const std::vector<int>& cand, const std::vector<int>& ref);

// Corpus-level BLEU-n: modified n-gram precisions with clipping, geometric
// mean over orders 1..n, brevity penalty. Any zero precision gives 0; there
// is no smoothing.
double bleu_n(const std::vector<std::vector<int>>& cands,
              const std::vector<std::vector<int>>& refs, int max_n);

}  // namespace causarc
