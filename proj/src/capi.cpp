#include "causarc/causarc.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "causarc/data.hpp"
#include "causarc/features_io.hpp"
#include "causarc/keyframe.hpp"
#include "causarc/train.hpp"

struct causarc_config {
  causarc::ModelConfig cfg;
};
struct causarc_dataset {
  causarc::Dataset ds;
};
struct causarc_model {
  std::unique_ptr<causarc::Model> model;
  std::unique_ptr<causarc::TrainerState> state;  // carried across train calls
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

template <typename F>
causarc_status wrap(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CAUSARC_OK;
  } catch (const causarc::TrainNanError& e) {
    g_last_error = e.what();
    return CAUSARC_ERR_NUMERIC;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return CAUSARC_ERR_INVALID_ARGUMENT;
  } catch (const std::runtime_error& e) {
    g_last_error = e.what();
    return CAUSARC_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CAUSARC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CAUSARC_ERR_INTERNAL;
  }
}

causarc_status fail_arg(const char* msg) {
  g_last_error = msg;
  return CAUSARC_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* causarc_version(void) { return "0.1.0"; }

const char* causarc_last_error(void) { return g_last_error.c_str(); }

void causarc_string_free(char* s) { std::free(s); }

causarc_status causarc_config_create(causarc_config** out) {
  if (!out) return fail_arg("out is null");
  return wrap([&] { *out = new causarc_config(); });
}

causarc_status causarc_config_load(const char* path, causarc_config** out) {
  if (!path || !out) return fail_arg("null argument");
  return wrap([&] { *out = new causarc_config{causarc::load_config_file(path)}; });
}

causarc_status causarc_config_save(const causarc_config* cfg, const char* path) {
  if (!cfg || !path) return fail_arg("null argument");
  return wrap([&] { causarc::save_config_file(cfg->cfg, path); });
}

causarc_status causarc_config_set(causarc_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail_arg("null argument");
  return wrap([&] { causarc::apply_config_override(cfg->cfg, key, value); });
}

causarc_status causarc_config_get(const causarc_config* cfg, const char* key, char** out_value) {
  if (!cfg || !key || !out_value) return fail_arg("null argument");
  return wrap([&] {
    auto kv = causarc::config_to_kv(cfg->cfg);
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("unknown config key: " + std::string(key));
    *out_value = dup_string(it->second);
  });
}

causarc_status causarc_config_validate(const causarc_config* cfg, char** out_problems) {
  if (!cfg || !out_problems) return fail_arg("null argument");
  return wrap([&] {
    std::string joined;
    for (const auto& p : causarc::validate_config(cfg->cfg)) {
      if (!joined.empty()) joined += '\n';
      joined += p;
    }
    *out_problems = dup_string(joined);
  });
}

void causarc_config_free(causarc_config* cfg) { delete cfg; }

causarc_status causarc_dataset_generate(const causarc_config* cfg, int num_samples,
                                        double sarcasm_rate, uint64_t seed,
                                        causarc_dataset** out) {
  if (!cfg || !out) return fail_arg("null argument");
  return wrap([&] {
    causarc::SyntheticCorpusSpec spec;
    spec.num_samples = num_samples;
    spec.sarcasm_rate = sarcasm_rate;
    spec.seed = seed;
    *out = new causarc_dataset{causarc::generate_synthetic_dataset(cfg->cfg, spec)};
  });
}

causarc_status causarc_dataset_load(const char* path, causarc_dataset** out) {
  if (!path || !out) return fail_arg("null argument");
  return wrap([&] { *out = new causarc_dataset{causarc::load_dataset_json(path)}; });
}

causarc_status causarc_dataset_save(const causarc_dataset* ds, const char* path) {
  if (!ds || !path) return fail_arg("null argument");
  return wrap([&] { causarc::save_dataset_json(ds->ds, path); });
}

causarc_status causarc_dataset_ingest(const char* manifest_path, causarc_dataset** out,
                                      char** out_errors) {
  if (!manifest_path || !out) return fail_arg("null argument");
  return wrap([&] {
    causarc::IngestResult r = causarc::ingest_features(manifest_path);
    std::string joined;
    for (const auto& e : r.errors) {
      if (!joined.empty()) joined += '\n';
      joined += e;
    }
    *out = new causarc_dataset{std::move(r.dataset)};
    if (out_errors) *out_errors = dup_string(joined);
  });
}

causarc_status causarc_dataset_size(const causarc_dataset* ds, size_t* out) {
  if (!ds || !out) return fail_arg("null argument");
  *out = ds->ds.samples.size();
  return CAUSARC_OK;
}

void causarc_dataset_free(causarc_dataset* ds) { delete ds; }

causarc_status causarc_model_create(const causarc_config* cfg, causarc_model** out) {
  if (!cfg || !out) return fail_arg("null argument");
  return wrap([&] {
    auto m = new causarc_model();
    m->model = causarc::make_model(cfg->cfg);
    *out = m;
  });
}

causarc_status causarc_model_create_for_dataset(const causarc_config* cfg,
                                                const causarc_dataset* ds, causarc_model** out) {
  if (!cfg || !ds || !out) return fail_arg("null argument");
  return wrap([&] {
    auto m = new causarc_model();
    m->model = causarc::make_model_for_dataset(cfg->cfg, ds->ds);
    *out = m;
  });
}

causarc_status causarc_model_load(const char* path, causarc_model** out) {
  if (!path || !out) return fail_arg("null argument");
  return wrap([&] {
    causarc::LoadedCheckpoint ck = causarc::load_checkpoint(path);
    auto m = new causarc_model();
    m->model = std::move(ck.model);
    m->state = std::move(ck.state);
    *out = m;
  });
}

causarc_status causarc_model_save(const causarc_model* m, const char* path) {
  if (!m || !m->model || !path) return fail_arg("null argument");
  return wrap([&] { causarc::save_checkpoint(path, *m->model, m->state.get()); });
}

void causarc_model_free(causarc_model* m) { delete m; }

causarc_status causarc_train(causarc_model* m, const causarc_dataset* ds, int epochs,
                             const char* out_dir, int plot, int verbose,
                             char** out_report_json) {
  if (!m || !m->model || !ds) return fail_arg("null argument");
  return wrap([&] {
    if (!m->state) m->state = std::make_unique<causarc::TrainerState>(*m->model);
    causarc::TrainOptions opt;
    opt.epochs = epochs;
    opt.out_dir = out_dir ? out_dir : "";
    opt.plot = plot != 0;
    opt.verbose = verbose != 0;
    causarc::TrainResult r = causarc::train(*m->model, *m->state, ds->ds, opt);
    if (out_report_json) *out_report_json = dup_string(r.report.dump(2));
  });
}

namespace {

causarc::InterventionMode mode_of(int mode) {
  switch (mode) {
    case 0: return causarc::InterventionMode::kNone;
    case 1: return causarc::InterventionMode::kDoE;
    case 2: return causarc::InterventionMode::kDoF;
    default: throw std::invalid_argument("mode must be 0, 1 or 2");
  }
}

}  // namespace

causarc_status causarc_evaluate(const causarc_model* m, const causarc_dataset* ds, int mode,
                                uint64_t noise_seed, char** out_report_json) {
  if (!m || !m->model || !ds || !out_report_json) return fail_arg("null argument");
  return wrap([&] {
    causarc::InterventionMode im = mode_of(mode);
    nlohmann::json j;
    j["mode"] = mode == 0 ? "normal" : mode == 1 ? "do_e" : "do_f";
    j["classification"] =
        causarc::to_json(causarc::eval_classification(*m->model, ds->ds, im, noise_seed));
    if (mode == 0) j["generation"] = causarc::to_json(causarc::eval_generation(*m->model, ds->ds));
    *out_report_json = dup_string(j.dump(2));
  });
}

causarc_status causarc_intervention_experiment(const causarc_model* m, const causarc_dataset* ds,
                                               uint64_t noise_seed, char** out_report_json) {
  if (!m || !m->model || !ds || !out_report_json) return fail_arg("null argument");
  return wrap([&] {
    nlohmann::json j = causarc::run_intervention_experiment(*m->model, ds->ds, noise_seed);
    *out_report_json = dup_string(j.dump(2));
  });
}

causarc_status causarc_export_features(const causarc_model* m, const causarc_dataset* ds,
                                       const char* out_dir) {
  if (!m || !m->model || !ds || !out_dir) return fail_arg("null argument");
  return wrap([&] { causarc::export_features(*m->model, ds->ds, out_dir); });
}

causarc_status causarc_keyframes_file(const char* features_path, int k, int candidates,
                                      double alpha, uint64_t seed, int append_time,
                                      char** out_indices_json) {
  if (!features_path || !out_indices_json) return fail_arg("null argument");
  return wrap([&] {
    causarc::Matrix frames = causarc::read_matrix_any(features_path);
    causarc::KeyframeConfig kc;
    kc.k = k;
    kc.c = candidates;
    kc.alpha = alpha;
    kc.seed = seed;
    kc.time_mode = append_time ? causarc::TimeMode::kAppend : causarc::TimeMode::kBroadcast;
    causarc::KeyframeSelection sel = causarc::select_keyframes(frames, kc);
    nlohmann::json j = sel.indices;
    *out_indices_json = dup_string(j.dump());
  });
}

causarc_status causarc_plot_report(const char* report_json_path, const char* svg_path) {
  if (!report_json_path || !svg_path) return fail_arg("null argument");
  return wrap([&] {
    std::ifstream f(report_json_path);
    if (!f) throw std::runtime_error(std::string("cannot open ") + report_json_path);
    nlohmann::json j = nlohmann::json::parse(f);
    std::vector<causarc::StepLoss> steps;
    for (const auto& e : j.at("loss_curve")) {
      causarc::StepLoss sl;
      sl.epoch = e.at("epoch").get<int>();
      sl.step = e.at("step").get<int>();
      sl.loss.reconstruction = e.at("reconstruction").get<double>();
      sl.loss.kl = e.at("kl").get<double>();
      sl.loss.exp = e.at("exp").get<double>();
      sl.loss.total = e.at("total").get<double>();
      steps.push_back(sl);
    }
    causarc::render_loss_svg(steps, svg_path);
  });
}

}  // extern "C"
