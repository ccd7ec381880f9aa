#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "causarc/detector.hpp"
#include "causarc/metrics.hpp"

namespace causarc {

struct GenerationReport {
  double rouge1_f1 = 0.0;
  double rouge2_f1 = 0.0;
  double rouge_l_f1 = 0.0;
  double bleu[4] = {0.0, 0.0, 0.0, 0.0};
  double token_accuracy = 0.0;  // teacher-forced argmax accuracy
};

ClassificationReport eval_classification(const Model& m, const Dataset& ds, InterventionMode mode,
                                         uint64_t noise_seed = 0,
                                         DecodeMode decode = DecodeMode::kGreedy,
                                         int beam_width = 4);

// Decodes an explanation per sample and scores it against the ground truth.
// ROUGE values are averaged per sample; BLEU is corpus-level.
GenerationReport eval_generation(const Model& m, const Dataset& ds,
                                 DecodeMode decode = DecodeMode::kGreedy, int beam_width = 4);

nlohmann::json to_json(const ClassificationReport& r);
// Includes null placeholders for metrics outside this implementation's scope.
nlohmann::json to_json(const GenerationReport& r);

// Runs all three inference modes with a shared noise seed and reports their
// classification quality side by side.
nlohmann::json run_intervention_experiment(const Model& m, const Dataset& ds, uint64_t noise_seed);

std::string make_run_id(const ModelConfig& cfg, size_t dataset_size);

struct StepLoss {
  int epoch = 0;
  int step = 0;
  LossBreakdown loss;
};

// Minimal dependency-free chart: one polyline per loss component.
void render_loss_svg(const std::vector<StepLoss>& steps, const std::string& path);

}  // namespace causarc
