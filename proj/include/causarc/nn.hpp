#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "causarc/graph.hpp"
#include "causarc/rng.hpp"

namespace causarc {

enum class Init { kFanIn, kZeros, kOnes, kIdentity };

// Owns every trainable parameter of a model. Each parameter is initialized
// from its own split stream keyed by a hash of its name, so values do not
// depend on registration order or on which optional modules exist.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : seed_(seed) {}
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Param& add(const std::string& name, int rows, int cols, ParamGroup g, Init init);
  Param* find(const std::string& name);
  const std::deque<Param>& all() const { return params_; }
  std::deque<Param>& all() { return params_; }
  void zero_grads();
  size_t count() const { return params_.size(); }

 private:
  uint64_t seed_;
  std::deque<Param> params_;  // deque: stable addresses for module back-pointers
  std::unordered_map<std::string, Param*> by_name_;
};

uint64_t fnv1a64(const std::string& s);

struct LinearP {
  Param* W = nullptr;  // in x out
  Param* b = nullptr;  // 1 x out
};
LinearP make_linear(ParamStore& ps, const std::string& prefix, int in, int out, ParamGroup g);
Var linear(Tape& t, const LinearP& p, Var x);

struct LayerNormP {
  Param* gamma = nullptr;
  Param* beta = nullptr;
};
LayerNormP make_ln(ParamStore& ps, const std::string& prefix, int d, ParamGroup g);
Var apply_ln(Tape& t, const LayerNormP& p, Var x);

struct MhaP {
  LinearP q, k, v, o;
  int heads = 1;
};
MhaP make_mha(ParamStore& ps, const std::string& prefix, int d, int heads, ParamGroup g);

// Scaled dot-product over already-projected full-width Q, K, V. Splits into
// heads, optional additive mask (n_q x n_k, shared across heads), returns the
// concatenated head outputs without the output projection. If trace is given,
// each head's weight matrix is appended to it.
Var attention_core(Tape& t, Var Q, Var K, Var V, int heads, const Matrix* mask = nullptr,
                   std::vector<Matrix>* trace = nullptr);

Var mha(Tape& t, const MhaP& p, Var x_q, Var x_kv, const Matrix* mask = nullptr,
        std::vector<Matrix>* trace = nullptr);

struct FfnP {
  LinearP in, out;  // d -> mult*d -> d, tanh in between
};
FfnP make_ffn(ParamStore& ps, const std::string& prefix, int d, int mult, ParamGroup g);
Var ffn(Tape& t, const FfnP& p, Var x);

// Pre-norm block: x += MHA(LN1(x)); x += FFN(LN2(x)).
struct EncoderLayerP {
  LayerNormP ln1, ln2;
  MhaP attn;
  FfnP ff;
};
EncoderLayerP make_encoder_layer(ParamStore& ps, const std::string& prefix, int d, int heads,
                                 int ff_mult, ParamGroup g);
Var encoder_layer(Tape& t, const EncoderLayerP& p, Var x, const Matrix* mask = nullptr,
                  std::vector<Matrix>* trace = nullptr);

struct DecoderLayerP {
  LayerNormP ln1, ln2, ln3;
  MhaP self_attn, cross_attn;
  FfnP ff;
};
DecoderLayerP make_decoder_layer(ParamStore& ps, const std::string& prefix, int d, int heads,
                                 int ff_mult, ParamGroup g);
Var decoder_layer(Tape& t, const DecoderLayerP& p, Var x, Var mem, const Matrix* causal);

// n x n additive mask: 0 at or below the diagonal, -1e9 above.
Matrix causal_mask(int n);

}  // namespace causarc
