#pragma once

#include <memory>

#include "causarc/atf.hpp"
#include "causarc/config.hpp"
#include "causarc/data.hpp"
#include "causarc/decoder.hpp"
#include "causarc/latent.hpp"

namespace causarc {

// Toy trainable encoders standing in for pretrained feature extractors: a
// token embedding plus a small self-attention stack for text, and linear
// projections for the visual and acoustic features.
struct TextEncoderP {
  Param* embed = nullptr;  // vocab x d
  Param* pos = nullptr;    // max_text_len x d
  std::vector<EncoderLayerP> layers;  // atf_insertion_layer of them
};

struct ModalProjP {
  LinearP vis;  // d_in_visual -> d
  LinearP ac;   // d_in_acoustic -> d
};

// Linear adapters used instead of the toy encoders when training on ingested
// feature files. Square adapters initialize to identity so exporting features
// and ingesting them back reproduces the same step-1 loss.
struct AdapterP {
  LinearP text, vis, ac;
};

struct FeatureDims {
  int text = 0, visual = 0, acoustic = 0;
  bool active() const { return text > 0; }
};

struct Model {
  ModelConfig cfg;
  FeatureDims feat;  // set when built for an ingested dataset
  ParamStore params;
  TextEncoderP text_enc;
  ModalProjP proj;
  AdapterP adapters;  // only registered in feature mode
  AtfP atf;
  DecoderP decoder;
  ExplEncoderP expl_enc;
  LinearP classifier;  // (d_f + d) -> 2

  explicit Model(const ModelConfig& cfg, FeatureDims feat = {});
};

std::unique_ptr<Model> make_model(const ModelConfig& cfg, FeatureDims feat = {});
std::unique_ptr<Model> make_model_for_dataset(const ModelConfig& cfg, const Dataset& ds);

struct EncodedSample {
  Var T, V, A;  // unimodal sequences, width d
  Var M;        // fused sequence, n x d
  Var M_bar;    // mean-pooled fused representation, 1 x d
};

// (T, V, A) projections without fusion.
struct ToyEncoded {
  Var T, V, A;
};
ToyEncoded toy_encode(Tape& t, const Model& m, const MultimodalSample& s);

EncodedSample encode_and_fuse(Tape& t, const Model& m, const MultimodalSample& s,
                              AtfTrace* trace = nullptr);

}  // namespace causarc
