#pragma once

#include "causarc/config.hpp"
#include "causarc/data.hpp"
#include "causarc/nn.hpp"

namespace causarc {

enum class DecodeMode { kGreedy, kBeam };

// Causal transformer decoder with cross-attention into the fused sequence M.
struct DecoderP {
  Param* embed = nullptr;  // vocab x d
  Param* pos = nullptr;    // (max_expl_len + 1) x d
  std::vector<DecoderLayerP> layers;
  LayerNormP final_ln;
  LinearP lm_head;  // d -> vocab
};

DecoderP make_decoder(ParamStore& ps, const ModelConfig& cfg, ParamGroup g = ParamGroup::kBase);

// Log-softmax over next-token logits for each prefix position. Input is the
// full token sequence; row i scores the token at position i+1.
Var decoder_logprobs(Tape& t, const DecoderP& p, Var M, const std::vector<int>& tokens);

// Mean teacher-forced negative log-likelihood of the target sequence given M.
// Positions after the first EOS carry zero weight, so trailing padding does
// not affect the value.
Var explanation_loss(Tape& t, const DecoderP& p, Var M, const ExplanationSequence& target);

// Fraction of teacher-forced argmax predictions matching the target, same
// masking as explanation_loss.
double explanation_token_accuracy(const DecoderP& p, const Matrix& M,
                                  const ExplanationSequence& target);

// Greedy or length-normalized beam decoding from BOS. EOS is forced once
// max_expl_len tokens have been generated; ties resolve to the lowest token
// id, so beam width 1 reproduces greedy exactly.
ExplanationSequence decode_explanation(const DecoderP& p, const Matrix& M, const ModelConfig& cfg,
                                       DecodeMode mode = DecodeMode::kGreedy, int beam_width = 4);

}  // namespace causarc
