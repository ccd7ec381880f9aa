#pragma once

#include <vector>

#include "causarc/config.hpp"
#include "causarc/nn.hpp"

namespace causarc {

// Context-aware attention: standard multi-head attention whose key/value
// projections are blended with a context sequence through learned
// per-position gates before the head split.
struct ContextAttnP {
  MhaP attn;
  Param* U_k = nullptr;   // d_c x d
  Param* U_v = nullptr;   // d_c x d
  Param* W_k1 = nullptr;  // d x 1
  Param* W_k2 = nullptr;  // d x 1
  Param* W_v1 = nullptr;  // d x 1
  Param* W_v2 = nullptr;  // d x 1
};

struct AtfP {
  MhaP align_v, align_a;      // cross-attention alignment onto the text
  ContextAttnP con_v, con_a;  // context-aware self-attention over the text
  ContextAttnP out_v, out_a;  // reciprocal contextual cross-attention
  LinearP gate_v, gate_a;     // 2d -> d fusion gates
  int d = 0;
};

AtfP make_atf(ParamStore& ps, const ModelConfig& cfg, ParamGroup g = ParamGroup::kNew);

// Introspection for tests: attention rows must each sum to 1, lambdas and
// fusion gates must lie strictly inside (0, 1).
struct AtfTrace {
  std::vector<Matrix> attention;  // per-head weight matrices, in call order
  std::vector<Matrix> lambdas;    // per-position mixing gates (m x 1)
  Matrix gate_v, gate_a;          // n x d fusion gates
};

// Plain cross-attention; query comes from the non-text modality, keys and
// values from the text.
Var cross_attention(Tape& t, const MhaP& p, Var query_seq, Var kv_seq, AtfTrace* trace = nullptr);

struct AlignedPair {
  Var v_align, a_align;
};
AlignedPair align_modalities(Tape& t, const AtfP& p, Var T, Var V, Var A, AtfTrace* trace = nullptr);

Var context_self_attention(Tape& t, const ContextAttnP& p, Var x, Var context,
                           AtfTrace* trace = nullptr);
Var context_cross_attention(Tape& t, const ContextAttnP& p, Var query_seq, Var kv_seq, Var context,
                            AtfTrace* trace = nullptr);

Var gated_fuse(Tape& t, const AtfP& p, Var T, Var v_out, Var a_out, AtfTrace* trace = nullptr);

// Full fusion pass: align both modalities onto the text, build contextual
// representations with the other modality as context, and gate them into the
// text sequence. Returns M with the same shape as T.
Var atf_forward(Tape& t, const AtfP& p, Var T, Var V, Var A, AtfTrace* trace = nullptr);

}  // namespace causarc
