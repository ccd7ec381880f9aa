#pragma once

#include <string>
#include <vector>

#include "causarc/config.hpp"
#include "causarc/matrix.hpp"
#include "causarc/rng.hpp"

namespace causarc {

// Reserved vocabulary ids. Content words start at kFirstWordId. The marker
// token appears in a text if and only if the sample is sarcastic, which makes
// the synthetic task learnable from the text modality alone while the
// explanation channel stays label-informative through class templates.
constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kClsId = 3;
constexpr int kMarkerId = 4;
constexpr int kFirstWordId = 5;

struct ExplanationSequence {
  // [BOS, tokens..., EOS]; at most max_expl_len tokens follow BOS, so total
  // length is at most max_expl_len + 1.
  std::vector<int> tokens;
  bool is_ground_truth = false;
};

std::vector<std::string> validate_explanation(const ExplanationSequence& e, int vocab_size,
                                              int max_expl_len);

struct MultimodalSample {
  std::string id;
  std::vector<int> text_tokens;  // token path; empty when text_features is set
  Matrix text_features;          // ingested path: n x d_in_text
  Matrix visual;                 // v x d_in_visual
  Matrix acoustic;               // 1 x d_in_acoustic
  int label = 0;                 // 0 literal, 1 sarcastic
  ExplanationSequence gt_explanation;

  bool has_text_features() const { return text_features.rows > 0; }
};

std::vector<std::string> validate_sample(const MultimodalSample& s, const ModelConfig& cfg);

struct SyntheticCorpusSpec {
  int num_samples = 64;
  double sarcasm_rate = 0.5;
  double noise_scale = 0.1;  // stddev around the per-label modality prototypes
  int min_text_len = 4;
  uint64_t seed = 0;
};

struct Dataset {
  std::vector<MultimodalSample> samples;
  std::vector<std::string> vocab;  // id -> surface form; may be empty for ingested sets
  bool feature_mode = false;
  int d_in_text = 0;  // ingested feature widths; 0 in token mode
  int d_in_visual = 0;
  int d_in_acoustic = 0;
};

std::vector<std::string> default_vocab(int vocab_size);

// Ground-truth explanation for a sample: a class template with its slot
// filled by the first content word of the text.
ExplanationSequence make_gt_explanation(int label, int slot_token, int variant);

Dataset generate_synthetic_dataset(const ModelConfig& cfg, const SyntheticCorpusSpec& spec);

void save_dataset_json(const Dataset& ds, const std::string& path);
Dataset load_dataset_json(const std::string& path);

std::string detokenize(const std::vector<std::string>& vocab, const std::vector<int>& tokens);

}  // namespace causarc
