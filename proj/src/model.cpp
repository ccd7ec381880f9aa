#include "causarc/model.hpp"

#include <numeric>
#include <stdexcept>

namespace causarc {

Model::Model(const ModelConfig& cfg_, FeatureDims feat_)
    : cfg(cfg_), feat(feat_), params(cfg_.seed) {
  auto errs = validate_config(cfg);
  if (!errs.empty()) throw std::invalid_argument("invalid config: " + errs.front());

  text_enc.embed = &params.add("text_enc.embed", cfg.vocab_size, cfg.d, ParamGroup::kBase, Init::kFanIn);
  text_enc.pos = &params.add("text_enc.pos", cfg.max_text_len, cfg.d, ParamGroup::kBase, Init::kFanIn);
  for (int l = 0; l < cfg.atf_insertion_layer; ++l)
    text_enc.layers.push_back(make_encoder_layer(params, "text_enc.layer" + std::to_string(l),
                                                 cfg.d, cfg.n_heads, cfg.ffn_multiplier,
                                                 ParamGroup::kBase));
  proj.vis = make_linear(params, "proj.vis", cfg.d_in_visual, cfg.d, ParamGroup::kBase);
  proj.ac = make_linear(params, "proj.ac", cfg.d_in_acoustic, cfg.d, ParamGroup::kBase);

  if (feat.active()) {
    auto make_adapter = [&](const std::string& name, int d_in) {
      LinearP lp;
      lp.W = &params.add(name + ".W", d_in, cfg.d, ParamGroup::kNew,
                         d_in == cfg.d ? Init::kIdentity : Init::kFanIn);
      lp.b = &params.add(name + ".b", 1, cfg.d, ParamGroup::kNew, Init::kZeros);
      return lp;
    };
    adapters.text = make_adapter("adapter.text", feat.text);
    adapters.vis = make_adapter("adapter.vis", feat.visual);
    adapters.ac = make_adapter("adapter.ac", feat.acoustic);
  }

  atf = make_atf(params, cfg, ParamGroup::kNew);
  decoder = make_decoder(params, cfg, ParamGroup::kBase);
  expl_enc = make_expl_encoder(params, cfg, ParamGroup::kNew);
  classifier = make_linear(params, "classifier", cfg.d_f + cfg.d, 2, ParamGroup::kNew);
}

std::unique_ptr<Model> make_model(const ModelConfig& cfg, FeatureDims feat) {
  return std::make_unique<Model>(cfg, feat);
}

std::unique_ptr<Model> make_model_for_dataset(const ModelConfig& cfg, const Dataset& ds) {
  FeatureDims feat;
  if (ds.feature_mode) {
    feat.text = ds.d_in_text;
    feat.visual = ds.d_in_visual;
    feat.acoustic = ds.d_in_acoustic;
    if (!feat.active())
      throw std::invalid_argument("make_model_for_dataset: ingested dataset lacks feature dims");
  }
  return std::make_unique<Model>(cfg, feat);
}

ToyEncoded toy_encode(Tape& t, const Model& m, const MultimodalSample& s) {
  ToyEncoded out;
  if (s.has_text_features()) {
    if (!m.feat.active())
      throw std::invalid_argument("toy_encode: feature sample given to a token-mode model");
    if (s.text_features.cols != m.feat.text || s.visual.cols != m.feat.visual ||
        s.acoustic.cols != m.feat.acoustic)
      throw std::invalid_argument("toy_encode: sample feature dims do not match the model");
    out.T = linear(t, m.adapters.text, t.input(s.text_features));
    out.V = linear(t, m.adapters.vis, t.input(s.visual));
    out.A = linear(t, m.adapters.ac, t.input(s.acoustic));
    return out;
  }
  if (s.text_tokens.empty()) throw std::invalid_argument("toy_encode: sample has no text");
  if (static_cast<int>(s.text_tokens.size()) > m.cfg.max_text_len)
    throw std::invalid_argument("toy_encode: text exceeds max_text_len");
  if (s.visual.cols != m.cfg.d_in_visual || s.acoustic.cols != m.cfg.d_in_acoustic)
    throw std::invalid_argument("toy_encode: modality dims do not match the config");
  int n = static_cast<int>(s.text_tokens.size());
  std::vector<int> pos_ids(n);
  std::iota(pos_ids.begin(), pos_ids.end(), 0);
  Var x = t.add(t.rows_of(t.param(*m.text_enc.embed), s.text_tokens),
                t.rows_of(t.param(*m.text_enc.pos), pos_ids));
  for (const auto& layer : m.text_enc.layers) x = encoder_layer(t, layer, x);
  out.T = x;
  out.V = linear(t, m.proj.vis, t.input(s.visual));
  out.A = linear(t, m.proj.ac, t.input(s.acoustic));
  return out;
}

EncodedSample encode_and_fuse(Tape& t, const Model& m, const MultimodalSample& s, AtfTrace* trace) {
  ToyEncoded enc = toy_encode(t, m, s);
  EncodedSample out;
  out.T = enc.T;
  out.V = enc.V;
  out.A = enc.A;
  out.M = atf_forward(t, m.atf, enc.T, enc.V, enc.A, trace);
  out.M_bar = t.mean_rows(out.M);
  return out;
}

}  // namespace causarc
