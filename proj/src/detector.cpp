#include "causarc/detector.hpp"

#include <cmath>
#include <stdexcept>

namespace causarc {

Var classify_logits(Tape& t, const Model& m, Var F, Var M_bar) {
  return linear(t, m.classifier, t.concat_cols(F, M_bar));
}

DetectionOutput classify_plain(const Model& m, const Matrix& F, const Matrix& M_bar) {
  Tape t(false);
  Var logits = classify_logits(t, m, t.input(F), t.input(M_bar));
  const Matrix& probs = t.val(t.softmax_rows(logits));
  DetectionOutput out;
  out.probs[0] = probs.at(0, 0);
  out.probs[1] = probs.at(0, 1);
  out.predicted_label = probs.at(0, 1) > probs.at(0, 0) ? 1 : 0;
  return out;
}

ClsLossVars classification_loss(Tape& t, const Model& m, int label, Var M_bar,
                                const LatentVars& q, const LatentVars& p, int H, RngStream& rng,
                                ReconSource recon_source) {
  if (label != 0 && label != 1) throw std::invalid_argument("classification_loss: bad label");
  if (H < 1) throw std::invalid_argument("classification_loss: H must be >= 1");
  const LatentVars& used = recon_source == ReconSource::kFromQ ? q : p;
  Var recon;
  for (int i = 0; i < H; ++i) {
    Matrix eps(1, m.cfg.d_f);
    for (auto& e : eps.data) e = rng.normal();
    Var f = sample_latent(t, used, eps);
    Var lp = t.log_softmax_rows(classify_logits(t, m, f, M_bar));
    Var nll = t.scale(t.pick(lp, 0, label), -1.0);
    recon = i == 0 ? nll : t.add(recon, nll);
  }
  ClsLossVars out;
  out.reconstruction = H == 1 ? recon : t.scale(recon, 1.0 / H);
  out.kl = kl_diag_gaussians(t, q, p);
  out.total = t.add(out.reconstruction, out.kl);
  return out;
}

TotalLossVars total_loss(Tape& t, const Model& m, const MultimodalSample& s, RngStream& rng,
                         const ExplanationSequence* cached_generated) {
  if (s.gt_explanation.tokens.empty())
    throw std::invalid_argument("total_loss: sample lacks a ground-truth explanation");
  EncodedSample enc = encode_and_fuse(t, m, s);

  TotalLossVars out;
  // Token ids are discrete; the generated sequence enters the loss only
  // through the shared encoder, never through decode gradients.
  out.generated = cached_generated ? *cached_generated
                                   : decode_explanation(m.decoder, t.val(enc.M), m.cfg);

  InterventionChoice choice = intervene_select(out.generated, s.gt_explanation, m.cfg.epsilon, rng);
  out.intervened = choice.used_ground_truth;

  LatentVars q = encode_explanation(t, m.expl_enc, s.gt_explanation.tokens);
  LatentVars p = encode_explanation(t, m.expl_enc, out.generated.tokens);

  ClsLossVars cls = classification_loss(t, m, s.label, enc.M_bar, q, p, m.cfg.mc_samples, rng,
                                        choice.used_ground_truth ? ReconSource::kFromQ
                                                                 : ReconSource::kFromP);
  out.reconstruction = cls.reconstruction;
  out.kl = cls.kl;
  out.exp = explanation_loss(t, m.decoder, enc.M, s.gt_explanation);
  out.total = t.add(cls.total, out.exp);
  return out;
}

LossBreakdown breakdown_of(const Tape& t, const TotalLossVars& lv) {
  LossBreakdown b;
  b.reconstruction = t.val(lv.reconstruction).at(0, 0);
  b.kl = t.val(lv.kl).at(0, 0);
  b.exp = t.val(lv.exp).at(0, 0);
  b.total = t.val(lv.total).at(0, 0);
  return b;
}

DetectionOutput infer(const Model& m, const MultimodalSample& s, InterventionMode mode,
                      RngStream* noise_rng, DecodeMode decode, int beam_width) {
  Tape t(false);
  EncodedSample enc = encode_and_fuse(t, m, s);
  const Matrix& m_bar = t.val(enc.M_bar);

  DetectionOutput out;
  Matrix f;
  switch (mode) {
    case InterventionMode::kNone: {
      ExplanationSequence e_hat =
          decode_explanation(m.decoder, t.val(enc.M), m.cfg, decode, beam_width);
      f = encode_explanation_plain(m.expl_enc, e_hat.tokens).mu;
      out.explanation_used = std::move(e_hat);
      out.source = ExplanationSource::kGenerated;
      break;
    }
    case InterventionMode::kDoE: {
      if (s.gt_explanation.tokens.empty())
        throw std::invalid_argument("infer: do(E) requires a ground-truth explanation");
      f = encode_explanation_plain(m.expl_enc, s.gt_explanation.tokens).mu;
      out.explanation_used = s.gt_explanation;
      out.source = ExplanationSource::kGroundTruthIntervened;
      break;
    }
    case InterventionMode::kDoF: {
      if (!noise_rng) throw std::invalid_argument("infer: do(F) requires a noise stream");
      f = Matrix(1, m.cfg.d_f);
      for (auto& v : f.data) v = noise_rng->normal();
      out.explanation_used = decode_explanation(m.decoder, t.val(enc.M), m.cfg, decode, beam_width);
      out.source = ExplanationSource::kNoiseIntervened;
      break;
    }
  }
  DetectionOutput scored = classify_plain(m, f, m_bar);
  out.probs[0] = scored.probs[0];
  out.probs[1] = scored.probs[1];
  out.predicted_label = scored.predicted_label;
  return out;
}

}  // namespace causarc
