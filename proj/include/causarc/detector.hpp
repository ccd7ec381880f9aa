#pragma once

#include "causarc/model.hpp"

namespace causarc {

enum class InterventionMode { kNone, kDoE, kDoF };

enum class ExplanationSource { kGenerated, kGroundTruthIntervened, kNoiseIntervened };

struct DetectionOutput {
  double probs[2] = {0.0, 0.0};  // sums to 1
  int predicted_label = 0;
  ExplanationSequence explanation_used;
  ExplanationSource source = ExplanationSource::kGenerated;
};

struct LossBreakdown {
  double reconstruction = 0.0;
  double kl = 0.0;
  double exp = 0.0;
  double total = 0.0;  // always the sum of the three
};

// Classifier head over the latent feature and the pooled fused sequence.
Var classify_logits(Tape& t, const Model& m, Var F, Var M_bar);
DetectionOutput classify_plain(const Model& m, const Matrix& F, const Matrix& M_bar);

// Which latent the reconstruction term draws its samples from. kFromQ is the
// derivation's default (ground-truth branch); total_loss passes the branch
// chosen by the intervention draw.
enum class ReconSource { kFromQ, kFromP };

struct ClsLossVars {
  Var reconstruction;  // mean over H reparameterized samples of the CE at the true label
  Var kl;              // KL(q || p), closed form
  Var total;           // reconstruction + kl
};
ClsLossVars classification_loss(Tape& t, const Model& m, int label, Var M_bar,
                                const LatentVars& q, const LatentVars& p, int H, RngStream& rng,
                                ReconSource recon_source = ReconSource::kFromQ);

struct TotalLossVars {
  Var total, reconstruction, kl, exp;
  bool intervened = false;        // this step's draw replaced the generated explanation
  ExplanationSequence generated;  // the decoded sequence used for the p branch
};

// Full training loss for one sample: encode and fuse, decode a candidate
// explanation (token ids detached), draw the intervention, encode both
// sequences with the shared encoder, then combine the classification and
// teacher-forced explanation terms. Draw order per call is fixed (one
// bernoulli, then H * d_f normals) so re-seeding the stream reproduces it.
TotalLossVars total_loss(Tape& t, const Model& m, const MultimodalSample& s, RngStream& rng,
                         const ExplanationSequence* cached_generated = nullptr);

LossBreakdown breakdown_of(const Tape& t, const TotalLossVars& lv);

// Inference. kNone decodes an explanation and uses its latent mean; kDoE uses
// the ground-truth explanation's mean; kDoF replaces the latent with a
// standard-normal draw from noise_rng (required for kDoF), making the
// prediction independent of any explanation text.
DetectionOutput infer(const Model& m, const MultimodalSample& s, InterventionMode mode,
                      RngStream* noise_rng = nullptr, DecodeMode decode = DecodeMode::kGreedy,
                      int beam_width = 4);

}  // namespace causarc
