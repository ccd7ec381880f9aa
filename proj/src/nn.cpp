#include "causarc/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace causarc {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Param& ParamStore::add(const std::string& name, int rows, int cols, ParamGroup g, Init init) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Param p;
  p.name = name;
  p.group = g;
  p.value = Matrix(rows, cols);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      p.value = Matrix::full(rows, cols, 1.0);
      break;
    case Init::kIdentity:
      if (rows != cols) throw std::invalid_argument("identity init needs square matrix: " + name);
      p.value = Matrix::identity(rows);
      break;
    case Init::kFanIn: {
      RngStream rs = RngStream(seed_).split(fnv1a64(name));
      double bound = 1.0 / std::sqrt(static_cast<double>(rows));
      for (auto& v : p.value.data) v = (rs.uniform() * 2.0 - 1.0) * bound;
      break;
    }
  }
  p.zero_grad();
  params_.push_back(std::move(p));
  Param& ref = params_.back();
  by_name_[name] = &ref;
  return ref;
}

Param* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p.zero_grad();
}

LinearP make_linear(ParamStore& ps, const std::string& prefix, int in, int out, ParamGroup g) {
  LinearP lp;
  lp.W = &ps.add(prefix + ".W", in, out, g, Init::kFanIn);
  lp.b = &ps.add(prefix + ".b", 1, out, g, Init::kZeros);
  return lp;
}

Var linear(Tape& t, const LinearP& p, Var x) {
  return t.add(t.matmul(x, t.param(*p.W)), t.param(*p.b));
}

LayerNormP make_ln(ParamStore& ps, const std::string& prefix, int d, ParamGroup g) {
  LayerNormP ln;
  ln.gamma = &ps.add(prefix + ".gamma", 1, d, g, Init::kOnes);
  ln.beta = &ps.add(prefix + ".beta", 1, d, g, Init::kZeros);
  return ln;
}

Var apply_ln(Tape& t, const LayerNormP& p, Var x) {
  return t.layer_norm(x, t.param(*p.gamma), t.param(*p.beta));
}

MhaP make_mha(ParamStore& ps, const std::string& prefix, int d, int heads, ParamGroup g) {
  if (d % heads != 0) throw std::invalid_argument("mha: d must divide by heads");
  MhaP p;
  p.q = make_linear(ps, prefix + ".q", d, d, g);
  p.k = make_linear(ps, prefix + ".k", d, d, g);
  p.v = make_linear(ps, prefix + ".v", d, d, g);
  p.o = make_linear(ps, prefix + ".o", d, d, g);
  p.heads = heads;
  return p;
}

Var attention_core(Tape& t, Var Q, Var K, Var V, int heads, const Matrix* mask,
                   std::vector<Matrix>* trace) {
  int d = t.val(Q).cols;
  if (d % heads != 0) throw std::invalid_argument("attention_core: d must divide by heads");
  int dh = d / heads;
  double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    Var Qh = heads == 1 ? Q : t.slice_cols(Q, h * dh, (h + 1) * dh);
    Var Kh = heads == 1 ? K : t.slice_cols(K, h * dh, (h + 1) * dh);
    Var Vh = heads == 1 ? V : t.slice_cols(V, h * dh, (h + 1) * dh);
    Var scores = t.scale(t.matmul(Qh, t.transpose(Kh)), inv_scale);
    Var attn = t.softmax_rows(scores, mask);
    if (trace) trace->push_back(t.val(attn));
    outs.push_back(t.matmul(attn, Vh));
  }
  if (heads == 1) return outs[0];
  Var out = outs[0];
  for (int h = 1; h < heads; ++h) out = t.concat_cols(out, outs[h]);
  return out;
}

Var mha(Tape& t, const MhaP& p, Var x_q, Var x_kv, const Matrix* mask,
        std::vector<Matrix>* trace) {
  Var Q = linear(t, p.q, x_q);
  Var K = linear(t, p.k, x_kv);
  Var V = linear(t, p.v, x_kv);
  return linear(t, p.o, attention_core(t, Q, K, V, p.heads, mask, trace));
}

FfnP make_ffn(ParamStore& ps, const std::string& prefix, int d, int mult, ParamGroup g) {
  FfnP f;
  f.in = make_linear(ps, prefix + ".in", d, d * mult, g);
  f.out = make_linear(ps, prefix + ".out", d * mult, d, g);
  return f;
}

Var ffn(Tape& t, const FfnP& p, Var x) {
  return linear(t, p.out, t.tanh_(linear(t, p.in, x)));
}

EncoderLayerP make_encoder_layer(ParamStore& ps, const std::string& prefix, int d, int heads,
                                 int ff_mult, ParamGroup g) {
  EncoderLayerP l;
  l.ln1 = make_ln(ps, prefix + ".ln1", d, g);
  l.ln2 = make_ln(ps, prefix + ".ln2", d, g);
  l.attn = make_mha(ps, prefix + ".attn", d, heads, g);
  l.ff = make_ffn(ps, prefix + ".ff", d, ff_mult, g);
  return l;
}

Var encoder_layer(Tape& t, const EncoderLayerP& p, Var x, const Matrix* mask,
                  std::vector<Matrix>* trace) {
  Var h = apply_ln(t, p.ln1, x);
  x = t.add(x, mha(t, p.attn, h, h, mask, trace));
  x = t.add(x, ffn(t, p.ff, apply_ln(t, p.ln2, x)));
  return x;
}

DecoderLayerP make_decoder_layer(ParamStore& ps, const std::string& prefix, int d, int heads,
                                 int ff_mult, ParamGroup g) {
  DecoderLayerP l;
  l.ln1 = make_ln(ps, prefix + ".ln1", d, g);
  l.ln2 = make_ln(ps, prefix + ".ln2", d, g);
  l.ln3 = make_ln(ps, prefix + ".ln3", d, g);
  l.self_attn = make_mha(ps, prefix + ".self", d, heads, g);
  l.cross_attn = make_mha(ps, prefix + ".cross", d, heads, g);
  l.ff = make_ffn(ps, prefix + ".ff", d, ff_mult, g);
  return l;
}

Var decoder_layer(Tape& t, const DecoderLayerP& p, Var x, Var mem, const Matrix* causal) {
  Var h = apply_ln(t, p.ln1, x);
  x = t.add(x, mha(t, p.self_attn, h, h, causal));
  x = t.add(x, mha(t, p.cross_attn, apply_ln(t, p.ln2, x), mem));
  x = t.add(x, ffn(t, p.ff, apply_ln(t, p.ln3, x)));
  return x;
}

Matrix causal_mask(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m.at(i, j) = -1e9;
  return m;
}

}  // namespace causarc
