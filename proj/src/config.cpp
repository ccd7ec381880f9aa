#include "causarc/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace causarc {

namespace {

struct Field {
  std::string key;
  std::function<std::string(const ModelConfig&)> get;
  std::function<void(ModelConfig&, const std::string&)> set;
};

template <typename T>
T parse_num(const std::string& s) {
  std::istringstream is(s);
  T v{};
  is >> v;
  if (is.fail()) throw std::invalid_argument("bad numeric value: " + s);
  std::string rest;
  is >> rest;
  if (!rest.empty()) throw std::invalid_argument("trailing junk in value: " + s);
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("bad bool value: " + s);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

#define INT_FIELD(name) \
  {#name, [](const ModelConfig& c) { return std::to_string(c.name); }, \
   [](ModelConfig& c, const std::string& s) { c.name = parse_num<int>(s); }}
#define DBL_FIELD(name) \
  {#name, [](const ModelConfig& c) { return fmt_double(c.name); }, \
   [](ModelConfig& c, const std::string& s) { c.name = parse_num<double>(s); }}
#define BOOL_FIELD(name) \
  {#name, [](const ModelConfig& c) { return c.name ? std::string("true") : std::string("false"); }, \
   [](ModelConfig& c, const std::string& s) { c.name = parse_bool(s); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      INT_FIELD(d),
      INT_FIELD(d_f),
      INT_FIELD(d_c),
      INT_FIELD(n_heads),
      INT_FIELD(vocab_size),
      INT_FIELD(max_text_len),
      INT_FIELD(max_frames),
      INT_FIELD(max_expl_len),
      DBL_FIELD(epsilon),
      INT_FIELD(mc_samples),
      INT_FIELD(atf_insertion_layer),
      {"seed", [](const ModelConfig& c) { return std::to_string(c.seed); },
       [](ModelConfig& c, const std::string& s) { c.seed = parse_num<uint64_t>(s); }},
      DBL_FIELD(lr_base),
      DBL_FIELD(lr_new),
      INT_FIELD(d_in_visual),
      INT_FIELD(d_in_acoustic),
      INT_FIELD(decoder_layers),
      INT_FIELD(expl_encoder_layers),
      INT_FIELD(ffn_multiplier),
      INT_FIELD(batch_size),
      INT_FIELD(epochs),
      INT_FIELD(beam_width),
      BOOL_FIELD(cache_generated_explanations),
      DBL_FIELD(early_stop_f1),
      DBL_FIELD(early_stop_token_acc),
  };
  return f;
}

#undef INT_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> validate_config(const ModelConfig& c) {
  std::vector<std::string> errs;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  need(c.d >= 1, "d must be >= 1");
  need(c.d_f >= 1, "d_f must be >= 1");
  need(c.d_c >= 1, "d_c must be >= 1");
  need(c.n_heads >= 1, "n_heads must be >= 1");
  if (c.n_heads >= 1 && c.d >= 1)
    need(c.d % c.n_heads == 0, "d must be divisible by n_heads");
  need(c.vocab_size >= 8, "vocab_size must be >= 8 (reserved ids plus content)");
  need(c.max_text_len >= 1, "max_text_len must be >= 1");
  need(c.max_frames >= 1, "max_frames must be >= 1");
  need(c.max_expl_len >= 1, "max_expl_len must be >= 1");
  need(c.epsilon >= 0.0 && c.epsilon <= 1.0, "epsilon must be in [0, 1]");
  need(c.mc_samples >= 1, "mc_samples must be >= 1");
  need(c.atf_insertion_layer >= 1, "atf_insertion_layer must be >= 1");
  need(c.lr_base > 0.0, "lr_base must be > 0");
  need(c.lr_new > 0.0, "lr_new must be > 0");
  need(c.d_in_visual >= 1, "d_in_visual must be >= 1");
  need(c.d_in_acoustic >= 1, "d_in_acoustic must be >= 1");
  need(c.decoder_layers >= 1, "decoder_layers must be >= 1");
  need(c.expl_encoder_layers >= 1, "expl_encoder_layers must be >= 1");
  need(c.ffn_multiplier >= 1, "ffn_multiplier must be >= 1");
  need(c.batch_size >= 1, "batch_size must be >= 1");
  need(c.epochs >= 1, "epochs must be >= 1");
  need(c.beam_width >= 1, "beam_width must be >= 1");
  return errs;
}

ModelConfig parse_config_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    apply_config_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ModelConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const ModelConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.key << " = " << f.get(cfg) << "\n";
  return os.str();
}

void save_config_file(const ModelConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << config_to_text(cfg);
}

void apply_config_override(ModelConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key: " + key);
}

std::map<std::string, std::string> config_to_kv(const ModelConfig& cfg) {
  std::map<std::string, std::string> kv;
  for (const auto& f : fields()) kv[f.key] = f.get(cfg);
  return kv;
}

}  // namespace causarc
