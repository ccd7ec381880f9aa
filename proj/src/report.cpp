#include "causarc/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace causarc {

ClassificationReport eval_classification(const Model& m, const Dataset& ds, InterventionMode mode,
                                         uint64_t noise_seed, DecodeMode decode, int beam_width) {
  std::vector<int> y_true, y_pred;
  y_true.reserve(ds.samples.size());
  y_pred.reserve(ds.samples.size());
  RngStream noise(noise_seed);
  for (const auto& s : ds.samples) {
    DetectionOutput out = infer(m, s, mode, &noise, decode, beam_width);
    y_true.push_back(s.label);
    y_pred.push_back(out.predicted_label);
  }
  return classification_report(y_true, y_pred);
}

GenerationReport eval_generation(const Model& m, const Dataset& ds, DecodeMode decode,
                                 int beam_width) {
  GenerationReport rep;
  std::vector<std::vector<int>> cands, refs;
  double r1 = 0.0, r2 = 0.0, rl = 0.0, tok_acc = 0.0;
  int n = 0;
  for (const auto& s : ds.samples) {
    if (s.gt_explanation.tokens.empty()) continue;
    Tape t(false);
    EncodedSample enc = encode_and_fuse(t, m, s);
    ExplanationSequence hyp = decode_explanation(m.decoder, t.val(enc.M), m.cfg, decode, beam_width);
    // score inner tokens only: BOS and EOS are shared scaffolding
    auto inner = [](const std::vector<int>& seq) {
      std::vector<int> out;
      for (size_t i = 1; i < seq.size(); ++i) {
        if (seq[i] == kEosId) break;
        out.push_back(seq[i]);
      }
      return out;
    };
    std::vector<int> c = inner(hyp.tokens);
    std::vector<int> r = inner(s.gt_explanation.tokens);
    r1 += rouge_n(c, r, 1).f1;
    r2 += rouge_n(c, r, 2).f1;
    rl += rouge_l(c, r).f1;
    tok_acc += explanation_token_accuracy(m.decoder, t.val(enc.M), s.gt_explanation);
    cands.push_back(std::move(c));
    refs.push_back(std::move(r));
    ++n;
  }
  if (n == 0) return rep;
  rep.rouge1_f1 = r1 / n;
  rep.rouge2_f1 = r2 / n;
  rep.rouge_l_f1 = rl / n;
  rep.token_accuracy = tok_acc / n;
  for (int k = 1; k <= 4; ++k) rep.bleu[k - 1] = bleu_n(cands, refs, k);
  return rep;
}

nlohmann::json to_json(const ClassificationReport& r) {
  return nlohmann::json{{"accuracy", r.accuracy},
                        {"weighted_precision", r.weighted_precision},
                        {"weighted_recall", r.weighted_recall},
                        {"weighted_f1", r.weighted_f1}};
}

nlohmann::json to_json(const GenerationReport& r) {
  nlohmann::json j{{"rouge1_f1", r.rouge1_f1}, {"rouge2_f1", r.rouge2_f1},
                   {"rouge_l_f1", r.rouge_l_f1}, {"bleu1", r.bleu[0]},
                   {"bleu2", r.bleu[1]},         {"bleu3", r.bleu[2]},
                   {"bleu4", r.bleu[3]},         {"token_accuracy", r.token_accuracy}};
  // reported for schema completeness; these require external models
  j["meteor"] = nullptr;
  j["bertscore"] = nullptr;
  return j;
}

nlohmann::json run_intervention_experiment(const Model& m, const Dataset& ds,
                                           uint64_t noise_seed) {
  nlohmann::json j;
  j["noise_seed"] = noise_seed;
  j["normal"] = to_json(eval_classification(m, ds, InterventionMode::kNone, noise_seed));
  j["do_e"] = to_json(eval_classification(m, ds, InterventionMode::kDoE, noise_seed));
  j["do_f"] = to_json(eval_classification(m, ds, InterventionMode::kDoF, noise_seed));
  return j;
}

std::string make_run_id(const ModelConfig& cfg, size_t dataset_size) {
  std::string blob = config_to_text(cfg) + "#" + std::to_string(dataset_size);
  uint64_t h = fnv1a64(blob);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

struct Series {
  const char* name;
  const char* color;
  std::vector<double> ys;
};

}  // namespace

void render_loss_svg(const std::vector<StepLoss>& steps, const std::string& path) {
  const int w = 720, h = 420, ml = 56, mr = 16, mt = 20, mb = 36;
  std::vector<Series> series = {{"total", "#1b6ca8", {}},
                                {"reconstruction", "#c44536", {}},
                                {"kl", "#3a7d44", {}},
                                {"exp", "#8d6a9f", {}}};
  for (const auto& s : steps) {
    series[0].ys.push_back(s.loss.total);
    series[1].ys.push_back(s.loss.reconstruction);
    series[2].ys.push_back(s.loss.kl);
    series[3].ys.push_back(s.loss.exp);
  }
  double lo = 0.0, hi = 1.0;
  if (!steps.empty()) {
    lo = 1e300;
    hi = -1e300;
    for (const auto& ser : series)
      for (double y : ser.ys) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    if (hi - lo < 1e-12) hi = lo + 1.0;
  }
  double n = steps.empty() ? 1.0 : static_cast<double>(steps.size());
  auto px = [&](size_t i) {
    return ml + (n <= 1 ? 0.0 : (w - ml - mr) * (static_cast<double>(i) / (n - 1)));
  };
  auto py = [&](double y) { return mt + (h - mt - mb) * (1.0 - (y - lo) / (hi - lo)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << (h - mb)
      << "\" stroke=\"#444\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << (h - mb) << "\" x2=\"" << (w - mr) << "\" y2=\""
      << (h - mb) << "\" stroke=\"#444\"/>\n";
  for (int g = 0; g <= 4; ++g) {
    double y = lo + (hi - lo) * g / 4.0;
    svg << "<text x=\"" << (ml - 6) << "\" y=\"" << (py(y) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#444\">";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", y);
    svg << buf << "</text>\n";
  }
  svg << "<text x=\"" << (ml + (w - ml - mr) / 2) << "\" y=\"" << (h - 10)
      << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#444\">step</text>\n";
  int legend_x = w - mr - 150;
  int legend_y = mt + 8;
  for (const auto& ser : series) {
    if (!ser.ys.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < ser.ys.size(); ++i) svg << px(i) << "," << py(ser.ys[i]) << " ";
      svg << "\"/>\n";
    }
    svg << "<rect x=\"" << legend_x << "\" y=\"" << (legend_y - 8)
        << "\" width=\"10\" height=\"10\" fill=\"" << ser.color << "\"/>\n";
    svg << "<text x=\"" << (legend_x + 14) << "\" y=\"" << legend_y
        << "\" font-size=\"11\" fill=\"#222\">" << ser.name << "</text>\n";
    legend_y += 16;
  }
  svg << "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << svg.str();
}

}  // namespace causarc
