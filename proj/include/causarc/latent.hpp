#pragma once

#include "causarc/config.hpp"
#include "causarc/data.hpp"
#include "causarc/nn.hpp"

namespace causarc {

// The encoder predicts log-variance rather than variance so the value is
// unconstrained; it is clamped to this range before any exponentiation.
constexpr double kLogVarMin = -20.0;
constexpr double kLogVarMax = 20.0;

// Diagonal Gaussian over the latent explanation feature, 1 x d_f each.
struct LatentGaussian {
  Matrix mu;
  Matrix log_var;
};

struct LatentVars {
  Var mu;
  Var log_var;
};

// Bidirectional transformer encoder over [CLS] + explanation tokens, with two
// small MLP heads mapping the CLS state to mu and log-variance. The same
// parameters serve both the ground-truth and the generated branch.
struct ExplEncoderP {
  Param* embed = nullptr;  // vocab x d
  Param* pos = nullptr;    // (max_expl_len + 2) x d
  std::vector<EncoderLayerP> layers;
  LayerNormP final_ln;
  LinearP mu_hidden, mu_out;    // d -> d tanh -> d_f
  LinearP sig_hidden, sig_out;  // d -> d tanh -> d_f
};

ExplEncoderP make_expl_encoder(ParamStore& ps, const ModelConfig& cfg,
                               ParamGroup g = ParamGroup::kNew);

// cls_out, when given, receives the 1 x d pooled sequence state feeding the
// two heads.
LatentVars encode_explanation(Tape& t, const ExplEncoderP& p, const std::vector<int>& tokens,
                              Var* cls_out = nullptr);
LatentGaussian encode_explanation_plain(const ExplEncoderP& p, const std::vector<int>& tokens);

// Training-time causal intervention: with probability epsilon the ground
// truth replaces the generated sequence.
struct InterventionChoice {
  bool used_ground_truth = false;
  const ExplanationSequence* chosen = nullptr;
};
InterventionChoice intervene_select(const ExplanationSequence& generated,
                                    const ExplanationSequence& ground_truth, double epsilon,
                                    RngStream& rng);

// Reparameterized draw F = mu + eps .* exp(log_var / 2). Gradients flow to mu
// and log_var; eps enters as a constant.
Var sample_latent(Tape& t, const LatentVars& g, const Matrix& eps_noise);
Matrix sample_latent_plain(const LatentGaussian& g, RngStream& rng);

// KL(q || p) between diagonal Gaussians, closed form:
//   0.5 * sum( exp(lv_q - lv_p) + (mu_p - mu_q)^2 * exp(-lv_p) - 1 + lv_p - lv_q )
// Gradients flow into both arguments.
Var kl_diag_gaussians(Tape& t, const LatentVars& q, const LatentVars& p);
double kl_diag_gaussians(const LatentGaussian& q, const LatentGaussian& p);

double diag_gaussian_log_pdf(const LatentGaussian& g, const Matrix& x);

}  // namespace causarc
