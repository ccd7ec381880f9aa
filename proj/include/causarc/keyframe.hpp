#pragma once

#include <cstdint>
#include <vector>

#include "causarc/matrix.hpp"
#include "causarc/rng.hpp"

namespace causarc {

enum class TimeMode { kBroadcast, kAppend };

struct KeyframeConfig {
  int k = 100;       // clusters / selected frames
  int c = 500;       // candidate pool size
  double alpha = 0.1;  // temporal weighting strength
  uint64_t seed = 0;
  TimeMode time_mode = TimeMode::kBroadcast;
};

// Uniformly covering candidate index list. n_total >= c uses evenly spaced
// rounding (first and last frames always included, gap sizes differ by at
// most one); n_total < c repeats each index, earlier ones first, preserving
// ascending order.
std::vector<int> candidate_indices(int n_total, int c);

struct KmeansResult {
  Matrix centroids;            // k x d
  std::vector<int> assignment;  // cluster id per point, ties to the lowest id
  int iterations = 0;
};

// Seeded k-means with k-means++ initialization, at most max_iter rounds, and
// empty clusters reseeded to the point farthest from its centroid.
KmeansResult kmeans(const Matrix& points, int k, RngStream& rng, int max_iter = 100);

struct KeyframeSelection {
  std::vector<int> indices;  // strictly increasing original frame indices, size k
  Matrix rows;               // k x d_e original embedding rows
  // diagnostics for verification
  std::vector<int> candidates;   // original index per candidate
  std::vector<int> assignment;   // cluster per candidate
  Matrix centroids;              // k x d_weighted
  Matrix weighted;               // candidate features after time weighting
};

// Clusters time-weighted candidate embeddings and keeps, per cluster, the
// member nearest its centroid, sorted by time. Weighted features are
// F + alpha * t with t = original_index / n_total, either added to every
// coordinate (broadcast) or appended as an extra coordinate.
KeyframeSelection select_keyframes(const Matrix& frames, const KeyframeConfig& cfg);

}  // namespace causarc
