#include "causarc/data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace causarc {

namespace {

using nlohmann::json;

constexpr int kSlot = -1;

// Two template variants per class; kSlot is replaced by a text content word.
const std::vector<std::vector<int>>& templates_for(int label) {
  auto w = [](int i) { return kFirstWordId + i; };
  static const std::vector<std::vector<int>> sarcastic = {
      {kBosId, w(0), w(1), kSlot, w(2), w(3), w(4), kEosId},
      {kBosId, w(0), w(5), kSlot, w(6), w(7), w(4), kEosId},
  };
  static const std::vector<std::vector<int>> literal = {
      {kBosId, w(0), w(8), w(9), kSlot, kEosId},
      {kBosId, w(0), w(10), w(11), kSlot, kEosId},
  };
  return label == 1 ? sarcastic : literal;
}

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  auto d = j.at("data").get<std::vector<double>>();
  if (d.size() != m.size()) throw std::runtime_error("dataset: matrix data size mismatch");
  m.data = std::move(d);
  return m;
}

}  // namespace

std::vector<std::string> validate_explanation(const ExplanationSequence& e, int vocab_size,
                                              int max_expl_len) {
  std::vector<std::string> errs;
  if (e.tokens.size() < 2) {
    errs.push_back("explanation must contain at least [BOS, EOS]");
    return errs;
  }
  if (e.tokens.front() != kBosId) errs.push_back("explanation must start with BOS");
  if (e.tokens.back() != kEosId) errs.push_back("explanation must end with EOS");
  if (static_cast<int>(e.tokens.size()) > max_expl_len + 1)
    errs.push_back("explanation longer than max_expl_len + 1");
  for (int t : e.tokens)
    if (t < 0 || t >= vocab_size) {
      errs.push_back("explanation token id out of vocabulary range");
      break;
    }
  return errs;
}

std::vector<std::string> validate_sample(const MultimodalSample& s, const ModelConfig& cfg) {
  std::vector<std::string> errs;
  if (s.text_tokens.empty() && !s.has_text_features())
    errs.push_back("sample has neither text tokens nor text features");
  if (!s.text_tokens.empty() && s.has_text_features())
    errs.push_back("sample has both text tokens and text features");
  if (!s.text_tokens.empty()) {
    if (static_cast<int>(s.text_tokens.size()) > cfg.max_text_len)
      errs.push_back("text longer than max_text_len");
    for (int t : s.text_tokens)
      if (t < 0 || t >= cfg.vocab_size) {
        errs.push_back("text token id out of vocabulary range");
        break;
      }
  }
  if (s.visual.rows < 1) errs.push_back("visual must have at least one frame row");
  if (s.visual.rows > cfg.max_frames) errs.push_back("visual has more rows than max_frames");
  if (s.acoustic.rows != 1) errs.push_back("acoustic must be a single row");
  if (s.label != 0 && s.label != 1) errs.push_back("label must be 0 or 1");
  if (!s.gt_explanation.tokens.empty()) {
    auto sub = validate_explanation(s.gt_explanation, cfg.vocab_size, cfg.max_expl_len);
    errs.insert(errs.end(), sub.begin(), sub.end());
  }
  if (!s.visual.all_finite() || !s.acoustic.all_finite())
    errs.push_back("modality features must be finite");
  return errs;
}

std::vector<std::string> default_vocab(int vocab_size) {
  static const std::vector<std::string> words = {
      "speaker", "mocks", "with", "ironic", "praise", "ridicules", "by", "overdone",
      "sincerely", "describes", "plainly", "reports", "weather", "food", "effort",
      "service", "really", "great", "awful", "lovely",
  };
  std::vector<std::string> v = {"<pad>", "<bos>", "<eos>", "<cls>", "yeah-right"};
  for (int i = static_cast<int>(v.size()); i < vocab_size; ++i) {
    size_t wi = static_cast<size_t>(i - kFirstWordId);
    if (wi < words.size()) {
      v.push_back(words[wi]);
    } else {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "w%03d", i);
      v.push_back(buf);
    }
  }
  return v;
}

ExplanationSequence make_gt_explanation(int label, int slot_token, int variant) {
  const auto& tpls = templates_for(label);
  const auto& tpl = tpls[static_cast<size_t>(variant) % tpls.size()];
  ExplanationSequence e;
  e.is_ground_truth = true;
  for (int t : tpl) e.tokens.push_back(t == kSlot ? slot_token : t);
  return e;
}

Dataset generate_synthetic_dataset(const ModelConfig& cfg, const SyntheticCorpusSpec& spec) {
  if (cfg.vocab_size < kFirstWordId + 16)
    throw std::invalid_argument("generate_synthetic_dataset: vocab_size too small for templates");
  if (cfg.max_expl_len < 7)
    throw std::invalid_argument("generate_synthetic_dataset: max_expl_len must be >= 7");
  if (cfg.max_text_len < spec.min_text_len)
    throw std::invalid_argument("generate_synthetic_dataset: max_text_len below min_text_len");
  if (spec.num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
  if (spec.sarcasm_rate < 0.0 || spec.sarcasm_rate > 1.0)
    throw std::invalid_argument("sarcasm_rate must be in [0, 1]");

  RngStream rng(spec.seed);
  Dataset ds;
  ds.vocab = default_vocab(cfg.vocab_size);
  ds.samples.reserve(spec.num_samples);

  // Per-label prototypes: opposite alternating patterns, well separated
  // relative to the noise scale so the modality channels carry the label.
  auto proto = [](int label, int j) {
    double base = (j % 2 == 0) ? 0.8 : -0.8;
    return label == 1 ? base : -base;
  };

  for (int n = 0; n < spec.num_samples; ++n) {
    MultimodalSample s;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "s%04d", n);
    s.id = idbuf;
    s.label = rng.bernoulli(spec.sarcasm_rate) ? 1 : 0;

    int len = rng.uniform_int(spec.min_text_len, cfg.max_text_len);
    s.text_tokens.resize(len);
    for (int i = 0; i < len; ++i)
      s.text_tokens[i] = rng.uniform_int(kFirstWordId, cfg.vocab_size - 1);
    if (s.label == 1) s.text_tokens[rng.uniform_int(0, len - 1)] = kMarkerId;

    int slot = kFirstWordId;
    for (int t : s.text_tokens)
      if (t >= kFirstWordId) {
        slot = t;
        break;
      }
    s.gt_explanation = make_gt_explanation(s.label, slot, rng.uniform_int(0, 1));

    int frames = cfg.max_frames == 1 ? 1 : rng.uniform_int(2, cfg.max_frames);
    s.visual = Matrix(frames, cfg.d_in_visual);
    for (int i = 0; i < frames; ++i)
      for (int j = 0; j < cfg.d_in_visual; ++j)
        s.visual.at(i, j) = proto(s.label, j) + spec.noise_scale * rng.normal();
    s.acoustic = Matrix(1, cfg.d_in_acoustic);
    for (int j = 0; j < cfg.d_in_acoustic; ++j)
      s.acoustic.at(0, j) = proto(s.label, j + 1) + spec.noise_scale * rng.normal();

    auto errs = validate_sample(s, cfg);
    if (!errs.empty())
      throw std::logic_error("generated sample failed validation: " + errs.front());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_dataset_json(const Dataset& ds, const std::string& path) {
  json j;
  j["format"] = "causarc-dataset";
  j["version"] = 1;
  j["vocab"] = ds.vocab;
  j["feature_mode"] = ds.feature_mode;
  j["d_in_text"] = ds.d_in_text;
  j["d_in_visual"] = ds.d_in_visual;
  j["d_in_acoustic"] = ds.d_in_acoustic;
  json arr = json::array();
  for (const auto& s : ds.samples) {
    json sj;
    sj["id"] = s.id;
    sj["label"] = s.label;
    sj["text"] = s.text_tokens;
    if (s.has_text_features()) sj["text_features"] = matrix_to_json(s.text_features);
    sj["explanation"] = s.gt_explanation.tokens;
    sj["visual"] = matrix_to_json(s.visual);
    sj["acoustic"] = matrix_to_json(s.acoustic);
    arr.push_back(std::move(sj));
  }
  j["samples"] = std::move(arr);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out << j.dump(1) << "\n";
}

Dataset load_dataset_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  json j;
  in >> j;
  if (j.value("format", "") != "causarc-dataset")
    throw std::runtime_error("not a causarc dataset file: " + path);
  Dataset ds;
  ds.vocab = j.value("vocab", std::vector<std::string>{});
  ds.feature_mode = j.value("feature_mode", false);
  ds.d_in_text = j.value("d_in_text", 0);
  ds.d_in_visual = j.value("d_in_visual", 0);
  ds.d_in_acoustic = j.value("d_in_acoustic", 0);
  for (const auto& sj : j.at("samples")) {
    MultimodalSample s;
    s.id = sj.at("id").get<std::string>();
    s.label = sj.at("label").get<int>();
    s.text_tokens = sj.value("text", std::vector<int>{});
    if (sj.contains("text_features")) s.text_features = matrix_from_json(sj["text_features"]);
    s.gt_explanation.tokens = sj.value("explanation", std::vector<int>{});
    s.gt_explanation.is_ground_truth = true;
    s.visual = matrix_from_json(sj.at("visual"));
    s.acoustic = matrix_from_json(sj.at("acoustic"));
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::string detokenize(const std::vector<std::string>& vocab, const std::vector<int>& tokens) {
  std::ostringstream os;
  bool first = true;
  for (int t : tokens) {
    if (!first) os << ' ';
    first = false;
    if (t >= 0 && t < static_cast<int>(vocab.size()))
      os << vocab[t];
    else
      os << "t" << t;
  }
  return os.str();
}

}  // namespace causarc
