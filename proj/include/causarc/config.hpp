#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace causarc {

// Model and run configuration. Serialized as flat "key = value" text, one key
// per line, '#' starts a comment. Every field has a toy default that trains
// in seconds on the synthetic corpus.
struct ModelConfig {
  int d = 64;                   // shared hidden width
  int d_f = 32;                 // latent explanation-feature width
  int d_c = 64;                 // context width for fusion (kept equal to d)
  int n_heads = 2;
  int vocab_size = 128;
  int max_text_len = 12;
  int max_frames = 6;
  int max_expl_len = 12;        // generated tokens after BOS, EOS forced at cap
  double epsilon = 0.1;         // intervention probability
  int mc_samples = 1;           // reconstruction samples per step (H)
  int atf_insertion_layer = 1;  // toy text-encoder depth; fusion runs after its last layer
  uint64_t seed = 0;
  double lr_base = 1e-4;        // backbone-analogue parameters
  double lr_new = 1e-3;         // fusion, latent and classifier heads

  // plumbing knobs beyond the core contract
  int d_in_visual = 16;
  int d_in_acoustic = 12;
  int decoder_layers = 2;
  int expl_encoder_layers = 2;
  int ffn_multiplier = 2;
  int batch_size = 8;
  int epochs = 20;
  int beam_width = 4;
  bool cache_generated_explanations = false;  // decode once per epoch instead of per step
  double early_stop_f1 = 0.0;                 // stop when both thresholds hit; 0 disables
  double early_stop_token_acc = 0.0;
};

// Returns a list of human-readable problems; empty means valid. Never throws.
std::vector<std::string> validate_config(const ModelConfig& cfg);

ModelConfig parse_config_text(const std::string& text);
ModelConfig load_config_file(const std::string& path);
void save_config_file(const ModelConfig& cfg, const std::string& path);
std::string config_to_text(const ModelConfig& cfg);

// Applies one "key=value" override; throws std::invalid_argument on unknown
// keys or unparseable values.
void apply_config_override(ModelConfig& cfg, const std::string& key, const std::string& value);

std::map<std::string, std::string> config_to_kv(const ModelConfig& cfg);

}  // namespace causarc
