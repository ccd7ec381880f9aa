#include "causarc/atf.hpp"

#include <stdexcept>

namespace causarc {

namespace {

// Blends projected keys or values with the context term:
//   lambda = sigmoid(K W1 + (C U) W2)        per-position scalar in (0, 1)
//   K_hat  = (1 - lambda) .* K + lambda .* (C U)
// The context product C U is row-aligned with K when the row counts match;
// otherwise it is mean-pooled and broadcast.
Var mix_with_context(Tape& t, Var K, Var CU, Param& W1, Param& W2, AtfTrace* trace) {
  int m = t.val(K).rows;
  Var cu = CU;
  if (t.val(cu).rows != m) {
    if (t.val(cu).rows != 1) cu = t.mean_rows(cu);
    cu = t.matmul(t.input(Matrix::full(m, 1, 1.0)), cu);  // broadcast to m rows
  }
  Var lambda = t.sigmoid(t.add(t.matmul(K, t.param(W1)), t.matmul(cu, t.param(W2))));
  if (trace) trace->lambdas.push_back(t.val(lambda));
  Var one_minus = t.sub(t.input(Matrix::full(m, 1, 1.0)), lambda);
  return t.add(t.mul(K, one_minus), t.mul(cu, lambda));
}

Var context_attention(Tape& t, const ContextAttnP& p, Var query_seq, Var kv_seq, Var context,
                      AtfTrace* trace) {
  Var Q = linear(t, p.attn.q, query_seq);
  Var K = linear(t, p.attn.k, kv_seq);
  Var V = linear(t, p.attn.v, kv_seq);
  Var cu_k = t.matmul(context, t.param(*p.U_k));
  Var cu_v = t.matmul(context, t.param(*p.U_v));
  Var k_hat = mix_with_context(t, K, cu_k, *p.W_k1, *p.W_k2, trace);
  Var v_hat = mix_with_context(t, V, cu_v, *p.W_v1, *p.W_v2, trace);
  std::vector<Matrix>* attn_trace = trace ? &trace->attention : nullptr;
  return linear(t, p.attn.o, attention_core(t, Q, k_hat, v_hat, p.attn.heads, nullptr, attn_trace));
}

ContextAttnP make_context_attn(ParamStore& ps, const std::string& prefix, int d, int d_c, int heads,
                               ParamGroup g) {
  ContextAttnP p;
  p.attn = make_mha(ps, prefix + ".attn", d, heads, g);
  p.U_k = &ps.add(prefix + ".U_k", d_c, d, g, Init::kFanIn);
  p.U_v = &ps.add(prefix + ".U_v", d_c, d, g, Init::kFanIn);
  p.W_k1 = &ps.add(prefix + ".W_k1", d, 1, g, Init::kFanIn);
  p.W_k2 = &ps.add(prefix + ".W_k2", d, 1, g, Init::kFanIn);
  p.W_v1 = &ps.add(prefix + ".W_v1", d, 1, g, Init::kFanIn);
  p.W_v2 = &ps.add(prefix + ".W_v2", d, 1, g, Init::kFanIn);
  return p;
}

}  // namespace

AtfP make_atf(ParamStore& ps, const ModelConfig& cfg, ParamGroup g) {
  if (cfg.d_c != cfg.d)
    throw std::invalid_argument("make_atf: d_c must equal d in this implementation");
  AtfP p;
  p.d = cfg.d;
  p.align_v = make_mha(ps, "atf.align_v", cfg.d, cfg.n_heads, g);
  p.align_a = make_mha(ps, "atf.align_a", cfg.d, cfg.n_heads, g);
  p.con_v = make_context_attn(ps, "atf.con_v", cfg.d, cfg.d_c, cfg.n_heads, g);
  p.con_a = make_context_attn(ps, "atf.con_a", cfg.d, cfg.d_c, cfg.n_heads, g);
  p.out_v = make_context_attn(ps, "atf.out_v", cfg.d, cfg.d_c, cfg.n_heads, g);
  p.out_a = make_context_attn(ps, "atf.out_a", cfg.d, cfg.d_c, cfg.n_heads, g);
  p.gate_v = make_linear(ps, "atf.gate_v", 2 * cfg.d, cfg.d, g);
  p.gate_a = make_linear(ps, "atf.gate_a", 2 * cfg.d, cfg.d, g);
  return p;
}

Var cross_attention(Tape& t, const MhaP& p, Var query_seq, Var kv_seq, AtfTrace* trace) {
  std::vector<Matrix>* attn_trace = trace ? &trace->attention : nullptr;
  return mha(t, p, query_seq, kv_seq, nullptr, attn_trace);
}

AlignedPair align_modalities(Tape& t, const AtfP& p, Var T, Var V, Var A, AtfTrace* trace) {
  AlignedPair out;
  out.v_align = cross_attention(t, p.align_v, V, T, trace);
  out.a_align = cross_attention(t, p.align_a, A, T, trace);
  return out;
}

Var context_self_attention(Tape& t, const ContextAttnP& p, Var x, Var context, AtfTrace* trace) {
  return context_attention(t, p, x, x, context, trace);
}

Var context_cross_attention(Tape& t, const ContextAttnP& p, Var query_seq, Var kv_seq, Var context,
                            AtfTrace* trace) {
  return context_attention(t, p, query_seq, kv_seq, context, trace);
}

Var gated_fuse(Tape& t, const AtfP& p, Var T, Var v_out, Var a_out, AtfTrace* trace) {
  Var w_v = t.sigmoid(linear(t, p.gate_v, t.concat_cols(T, v_out)));
  Var w_a = t.sigmoid(linear(t, p.gate_a, t.concat_cols(T, a_out)));
  if (trace) {
    trace->gate_v = t.val(w_v);
    trace->gate_a = t.val(w_a);
  }
  return t.add(t.add(T, t.mul(v_out, w_v)), t.mul(a_out, w_a));
}

Var atf_forward(Tape& t, const AtfP& p, Var T, Var V, Var A, AtfTrace* trace) {
  if (t.val(V).cols != p.d || t.val(A).cols != p.d || t.val(T).cols != p.d)
    throw std::invalid_argument("atf_forward: all inputs must have width d");
  AlignedPair aligned = align_modalities(t, p, T, V, A, trace);
  Var v_con = context_self_attention(t, p.con_v, T, aligned.v_align, trace);
  Var a_con = context_self_attention(t, p.con_a, T, aligned.a_align, trace);
  Var v_out = context_cross_attention(t, p.out_v, T, v_con, a_con, trace);
  Var a_out = context_cross_attention(t, p.out_a, T, a_con, v_con, trace);
  return gated_fuse(t, p, T, v_out, a_out, trace);
}

}  // namespace causarc
