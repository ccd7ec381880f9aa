#include <cmath>

#include "doctest.h"

#include "causarc/metrics.hpp"
#include "causarc/rng.hpp"

using namespace causarc;

namespace {

// independent confusion-count recomputation
ClassificationReport brute_report(const std::vector<int>& yt, const std::vector<int>& yp) {
  ClassificationReport r;
  int n = static_cast<int>(yt.size());
  int correct = 0;
  for (int i = 0; i < n; ++i)
    if (yt[i] == yp[i]) ++correct;
  r.accuracy = static_cast<double>(correct) / n;
  for (int cls : {0, 1}) {
    int tp = 0, fp = 0, fn = 0, support = 0;
    for (int i = 0; i < n; ++i) {
      if (yt[i] == cls) ++support;
      if (yp[i] == cls && yt[i] == cls) ++tp;
      if (yp[i] == cls && yt[i] != cls) ++fp;
      if (yp[i] != cls && yt[i] == cls) ++fn;
    }
    if (support == 0) continue;
    double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    double rec = static_cast<double>(tp) / (tp + fn);
    double f1 = p + rec > 0 ? 2 * p * rec / (p + rec) : 0.0;
    double w = static_cast<double>(support) / n;
    r.weighted_precision += w * p;
    r.weighted_recall += w * rec;
    r.weighted_f1 += w * f1;
  }
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("weighted report hand case") {
  ClassificationReport r = classification_report({0, 1, 1, 0, 1}, {0, 1, 0, 0, 0});
  CHECK(r.accuracy == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(r.weighted_precision == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.weighted_recall == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(r.weighted_f1 == doctest::Approx(0.56666666666666665).epsilon(1e-15));
}

TEST_CASE("class never predicted contributes zero precision") {
  ClassificationReport r = classification_report({0, 0, 1}, {0, 0, 0});
  CHECK(r.accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.weighted_precision == doctest::Approx(0.44444444444444442).epsilon(1e-15));
  CHECK(r.weighted_recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.weighted_f1 == doctest::Approx(0.53333333333333333).epsilon(1e-15));
}

TEST_CASE("perfect and single-class predictions") {
  ClassificationReport perfect = classification_report({0, 1, 0, 1}, {0, 1, 0, 1});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.weighted_f1 == 1.0);

  // all-true-one corpus: only class 1 carries support
  ClassificationReport ones = classification_report({1, 1, 1}, {1, 0, 1});
  CHECK(ones.weighted_precision == 1.0);
  CHECK(ones.weighted_recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("report matches brute force on random instances") {
  RngStream rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + rng.uniform_int(0, 11);
    std::vector<int> yt(n), yp(n);
    for (int i = 0; i < n; ++i) {
      yt[i] = rng.uniform_int(0, 1);
      yp[i] = rng.uniform_int(0, 1);
    }
    ClassificationReport a = classification_report(yt, yp);
    ClassificationReport b = brute_report(yt, yp);
    CHECK(a.accuracy == doctest::Approx(b.accuracy).epsilon(1e-14));
    CHECK(a.weighted_precision == doctest::Approx(b.weighted_precision).epsilon(1e-14));
    CHECK(a.weighted_recall == doctest::Approx(b.weighted_recall).epsilon(1e-14));
    CHECK(a.weighted_f1 == doctest::Approx(b.weighted_f1).epsilon(1e-14));
  }
}

TEST_CASE("rouge-n hand cases") {
  PrfScore uni = rouge_n({1, 2, 8, 9}, {2, 1, 3}, 1);
  CHECK(uni.precision == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(uni.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(uni.f1 == doctest::Approx(0.5714285714285714).epsilon(1e-15));

  PrfScore bi = rouge_n({1, 2, 3, 4}, {2, 3, 4, 5}, 2);
  CHECK(bi.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(bi.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(bi.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  // clipping: repeated candidate tokens only match as often as the reference has them
  PrfScore clip = rouge_n({7, 7, 7, 7}, {7, 7}, 1);
  CHECK(clip.precision == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(clip.recall == doctest::Approx(1.0).epsilon(1e-15));

  PrfScore exact = rouge_n({4, 5, 6}, {4, 5, 6}, 2);
  CHECK(exact.f1 == 1.0);
  PrfScore miss = rouge_n({1, 2}, {3, 4}, 1);
  CHECK(miss.f1 == 0.0);
}

TEST_CASE("rouge-n degenerate lengths give zeros") {
  PrfScore short_ref = rouge_n({1, 2, 3}, {4}, 2);
  CHECK(short_ref.precision == 0.0);
  CHECK(short_ref.recall == 0.0);
  CHECK(short_ref.f1 == 0.0);
  PrfScore short_cand = rouge_n({1}, {1, 2, 3}, 2);
  CHECK(short_cand.f1 == 0.0);
  PrfScore empty = rouge_n({}, {1, 2}, 1);
  CHECK(empty.f1 == 0.0);
}

TEST_CASE("rouge-l longest common subsequence") {
  PrfScore s = rouge_l({1, 2, 3, 4, 5}, {1, 3, 5, 6});
  CHECK(s.precision == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(s.recall == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  PrfScore same = rouge_l({9, 8, 7}, {9, 8, 7});
  CHECK(same.f1 == 1.0);
  PrfScore none = rouge_l({1, 2}, {3, 4});
  CHECK(none.f1 == 0.0);
  // order matters for LCS even when the bags match
  PrfScore rev = rouge_l({1, 2, 3}, {3, 2, 1});
  CHECK(rev.precision == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("bleu hand cases") {
  CHECK(bleu_n({{1, 2, 3, 4}}, {{1, 2, 4, 3}}, 2) ==
        doctest::Approx(0.57735026918962573).epsilon(1e-12));

  // corpus pooling: p1 = 6/7, p2 = 3/5, brevity exp(1 - 9/7)
  double corpus = bleu_n({{5, 6, 7, 8, 9}, {1, 2}}, {{5, 6, 7, 10, 9}, {1, 2, 3, 4}}, 2);
  CHECK(corpus == doctest::Approx(0.53891229596924906).epsilon(1e-12));

  // brevity penalty alone: perfect unigrams, candidate half the reference
  CHECK(bleu_n({{3, 4}}, {{3, 4, 5, 6}}, 1) ==
        doctest::Approx(0.36787944117144233).epsilon(1e-12));

  // clipped repeats
  CHECK(bleu_n({{2, 2, 2, 2, 2, 2, 2}}, {{2, 2}}, 1) ==
        doctest::Approx(0.2857142857142857).epsilon(1e-12));

  // a zero higher-order precision zeroes the score; no smoothing
  CHECK(bleu_n({{1, 2, 3}}, {{1, 3, 2}}, 2) == 0.0);
  CHECK(bleu_n({{4, 4, 4, 4}}, {{4, 4, 4, 4}}, 4) == 1.0);
}

TEST_CASE("bleu ignores orders longer than the candidate") {
  // candidate shorter than n: that order has no n-grams, so the score is 0
  CHECK(bleu_n({{5}}, {{5}}, 2) == 0.0);
  CHECK(bleu_n({{5}}, {{5}}, 1) == 1.0);
}

}  // TEST_SUITE
