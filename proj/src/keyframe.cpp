#include "causarc/keyframe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace causarc {

std::vector<int> candidate_indices(int n_total, int c) {
  if (n_total < 1) throw std::invalid_argument("candidate_indices: n_total must be >= 1");
  if (c < 1) throw std::invalid_argument("candidate_indices: c must be >= 1");
  std::vector<int> out;
  out.reserve(c);
  if (n_total >= c) {
    if (c == 1) return {0};
    double step = static_cast<double>(n_total - 1) / (c - 1);
    for (int j = 0; j < c; ++j) out.push_back(static_cast<int>(std::llround(j * step)));
  } else {
    int base = c / n_total;
    int extra = c % n_total;
    for (int i = 0; i < n_total; ++i) {
      int reps = base + (i < extra ? 1 : 0);
      for (int r = 0; r < reps; ++r) out.push_back(i);
    }
  }
  return out;
}

namespace {

double sq_dist_row(const Matrix& a, int ra, const Matrix& b, int rb) {
  double s = 0.0;
  const double* pa = a.row_ptr(ra);
  const double* pb = b.row_ptr(rb);
  for (int j = 0; j < a.cols; ++j) {
    double d = pa[j] - pb[j];
    s += d * d;
  }
  return s;
}

}  // namespace

KmeansResult kmeans(const Matrix& points, int k, RngStream& rng, int max_iter) {
  int n = points.rows;
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= n");

  // k-means++ seeding
  Matrix centroids(k, points.cols);
  std::vector<int> chosen;
  chosen.push_back(rng.uniform_int(0, n - 1));
  std::vector<double> d2(n, 0.0);
  while (static_cast<int>(chosen.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (int c : chosen) best = std::min(best, sq_dist_row(points, i, points, c));
      d2[i] = best;
      total += best;
    }
    int pick;
    if (total <= 0.0) {
      pick = rng.uniform_int(0, n - 1);  // all points coincide with centroids
    } else {
      double r = rng.uniform() * total;
      pick = n - 1;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    }
    chosen.push_back(pick);
  }
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < points.cols; ++j) centroids.at(c, j) = points.at(chosen[c], j);

  KmeansResult res;
  res.assignment.assign(n, 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist_row(points, i, centroids, 0);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist_row(points, i, centroids, c);
        if (d < bd) {  // strict: ties keep the lowest cluster id
          bd = d;
          best = c;
        }
      }
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
    }

    // recompute centroids; reseed empties to the point farthest from its
    // current centroid
    std::vector<int> counts(k, 0);
    Matrix sums(k, points.cols);
    for (int i = 0; i < n; ++i) {
      ++counts[res.assignment[i]];
      for (int j = 0; j < points.cols; ++j) sums.at(res.assignment[i], j) += points.at(i, j);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (int j = 0; j < points.cols; ++j) centroids.at(c, j) = sums.at(c, j) / counts[c];
      } else {
        int far = 0;
        double fd = -1.0;
        for (int i = 0; i < n; ++i) {
          if (counts[res.assignment[i]] <= 1) continue;  // don't orphan another cluster
          double d = sq_dist_row(points, i, centroids, res.assignment[i]);
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        --counts[res.assignment[far]];
        for (int j = 0; j < points.cols; ++j) {
          sums.at(res.assignment[far], j) -= points.at(far, j);
          centroids.at(res.assignment[far], j) =
              sums.at(res.assignment[far], j) / counts[res.assignment[far]];
          centroids.at(c, j) = points.at(far, j);
        }
        res.assignment[far] = c;
        counts[c] = 1;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }
  res.centroids = std::move(centroids);
  return res;
}

KeyframeSelection select_keyframes(const Matrix& frames, const KeyframeConfig& cfg) {
  int n = frames.rows;
  if (n < 1) throw std::invalid_argument("select_keyframes: no frames");
  if (cfg.k < 1) throw std::invalid_argument("select_keyframes: k must be >= 1");
  if (cfg.k > cfg.c) throw std::invalid_argument("select_keyframes: k must be <= c");
  if (cfg.k > n)
    throw std::invalid_argument(
        "select_keyframes: k exceeds the number of distinct frames available");

  KeyframeSelection sel;
  sel.candidates = candidate_indices(n, cfg.c);
  int nc = static_cast<int>(sel.candidates.size());

  int dw = cfg.time_mode == TimeMode::kAppend ? frames.cols + 1 : frames.cols;
  sel.weighted = Matrix(nc, dw);
  for (int i = 0; i < nc; ++i) {
    double tw = cfg.alpha * static_cast<double>(sel.candidates[i]) / n;
    for (int j = 0; j < frames.cols; ++j) {
      double v = frames.at(sel.candidates[i], j);
      sel.weighted.at(i, j) = cfg.time_mode == TimeMode::kBroadcast ? v + tw : v;
    }
    if (cfg.time_mode == TimeMode::kAppend) sel.weighted.at(i, frames.cols) = tw;
  }

  RngStream rng(cfg.seed);
  KmeansResult km = kmeans(sel.weighted, cfg.k, rng);
  sel.assignment = km.assignment;
  sel.centroids = std::move(km.centroids);

  // Per cluster, the member nearest its centroid. Duplicate original indices
  // can appear in oversampled candidate lists; such a cluster takes its
  // nearest not-yet-chosen member instead.
  std::vector<std::vector<int>> members(cfg.k);
  for (int i = 0; i < nc; ++i) members[sel.assignment[i]].push_back(i);

  std::vector<bool> used_original(n, false);
  std::vector<int> picked;
  std::vector<int> starved;  // clusters whose members were all taken
  for (int c = 0; c < cfg.k; ++c) {
    int best = -1;
    double bd = std::numeric_limits<double>::max();
    for (int i : members[c]) {
      if (used_original[sel.candidates[i]]) continue;
      double d = sq_dist_row(sel.weighted, i, sel.centroids, c);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    if (best < 0) {
      starved.push_back(c);
      continue;
    }
    used_original[sel.candidates[best]] = true;
    picked.push_back(sel.candidates[best]);
  }
  for (int c : starved) {
    // fall back to the globally nearest unused candidate for this centroid
    int best = -1;
    double bd = std::numeric_limits<double>::max();
    for (int i = 0; i < nc; ++i) {
      if (used_original[sel.candidates[i]]) continue;
      double d = sq_dist_row(sel.weighted, i, sel.centroids, c);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    if (best < 0) throw std::logic_error("select_keyframes: ran out of distinct frames");
    used_original[sel.candidates[best]] = true;
    picked.push_back(sel.candidates[best]);
  }

  std::sort(picked.begin(), picked.end());
  sel.indices = std::move(picked);
  sel.rows = Matrix(cfg.k, frames.cols);
  for (int i = 0; i < cfg.k; ++i)
    for (int j = 0; j < frames.cols; ++j) sel.rows.at(i, j) = frames.at(sel.indices[i], j);
  return sel;
}

}  // namespace causarc
