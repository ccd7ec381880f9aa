// Command-line front end. Everything goes through the public C API so this
// file doubles as a usage example for the shared library.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "causarc/causarc.h"

namespace {

void check(causarc_status st) {
  if (st != CAUSARC_OK) {
    std::fprintf(stderr, "error: %s\n", causarc_last_error());
    std::exit(static_cast<int>(st));
  }
}

void print_owned(char* s) {
  if (!s) return;
  std::printf("%s\n", s);
  causarc_string_free(s);
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
  std::string seed;

  causarc_config* build() const {
    causarc_config* cfg = nullptr;
    if (path.empty())
      check(causarc_config_create(&cfg));
    else
      check(causarc_config_load(path.c_str(), &cfg));
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
        std::exit(1);
      }
      check(causarc_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    if (!seed.empty()) check(causarc_config_set(cfg, "seed", seed.c_str()));
    char* problems = nullptr;
    check(causarc_config_validate(cfg, &problems));
    if (problems && problems[0]) {
      std::fprintf(stderr, "invalid config:\n%s\n", problems);
      std::exit(1);
    }
    causarc_string_free(problems);
    return cfg;
  }
};

void add_config_opts(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.path, "config file (key = value lines)");
  cmd->add_option("--set", args.sets, "override one config key, key=value")->take_all();
  cmd->add_option("--seed", args.seed, "shorthand for --set seed=N");
}

causarc_dataset* open_dataset(const std::string& data_path, const std::string& manifest) {
  causarc_dataset* ds = nullptr;
  if (!manifest.empty()) {
    char* errs = nullptr;
    check(causarc_dataset_ingest(manifest.c_str(), &ds, &errs));
    if (errs && errs[0]) std::fprintf(stderr, "ingest warnings:\n%s\n", errs);
    causarc_string_free(errs);
  } else {
    check(causarc_dataset_load(data_path.c_str(), &ds));
  }
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causarc: variational multimodal sarcasm detection and explanation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", causarc_version());

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset as JSON");
  ConfigArgs gen_cfg;
  add_config_opts(gen, gen_cfg);
  std::string gen_out = "dataset.json";
  int gen_n = 64;
  double gen_rate = 0.5;
  uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "output path");
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--sarcasm-rate", gen_rate, "fraction of sarcastic samples");
  gen->add_option("--data-seed", gen_seed, "corpus seed");

  // train
  auto* tr = app.add_subcommand("train", "train a model, optionally resuming a checkpoint");
  ConfigArgs tr_cfg;
  add_config_opts(tr, tr_cfg);
  std::string tr_data, tr_manifest, tr_out_dir, tr_resume;
  int tr_epochs = 0;
  bool tr_plot = false, tr_verbose = false;
  tr->add_option("--data", tr_data, "dataset JSON");
  tr->add_option("--manifest", tr_manifest, "feature manifest.csv (ingested mode)");
  tr->add_option("--out-dir", tr_out_dir, "directory for checkpoints and report.json");
  tr->add_option("--resume", tr_resume, "checkpoint to continue from");
  tr->add_option("--epochs", tr_epochs, "override configured epoch count");
  tr->add_flag("--plot", tr_plot, "render loss.svg into --out-dir");
  tr->add_flag("-v,--verbose", tr_verbose, "print one line per epoch");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string ev_data, ev_manifest, ev_ckpt, ev_mode = "normal";
  uint64_t ev_noise = 0;
  ev->add_option("--data", ev_data, "dataset JSON");
  ev->add_option("--manifest", ev_manifest, "feature manifest.csv");
  ev->add_option("--ckpt", ev_ckpt, "model checkpoint")->required();
  ev->add_option("--mode", ev_mode, "normal | do-e | do-f");
  ev->add_option("--noise-seed", ev_noise, "seed for do-f latent draws");

  // intervene
  auto* iv = app.add_subcommand("intervene", "run all three inference modes side by side");
  std::string iv_data, iv_manifest, iv_ckpt;
  uint64_t iv_noise = 0;
  iv->add_option("--data", iv_data, "dataset JSON");
  iv->add_option("--manifest", iv_manifest, "feature manifest.csv");
  iv->add_option("--ckpt", iv_ckpt, "model checkpoint")->required();
  iv->add_option("--noise-seed", iv_noise, "seed for do-f latent draws");

  // keyframes
  auto* kf = app.add_subcommand("keyframes", "select keyframes from a feature matrix file");
  std::string kf_features;
  int kf_k = 4, kf_c = 16;
  double kf_alpha = 0.1;
  uint64_t kf_seed = 0;
  bool kf_append = false;
  kf->add_option("--features", kf_features, "frame embeddings, CSV or CAFM binary")->required();
  kf->add_option("--k", kf_k, "frames to keep");
  kf->add_option("--candidates", kf_c, "candidate pool size");
  kf->add_option("--alpha", kf_alpha, "temporal weighting strength");
  kf->add_option("--kf-seed", kf_seed, "clustering seed");
  kf->add_flag("--append-time", kf_append, "append the temporal weight instead of broadcasting");

  // export-features
  auto* ex = app.add_subcommand("export-features", "write encoder outputs plus manifest.csv");
  std::string ex_data, ex_ckpt, ex_out_dir = "features";
  ConfigArgs ex_cfg;
  add_config_opts(ex, ex_cfg);
  ex->add_option("--data", ex_data, "dataset JSON")->required();
  ex->add_option("--ckpt", ex_ckpt, "checkpoint (omit for a freshly initialized model)");
  ex->add_option("--out-dir", ex_out_dir, "output directory");

  // plot
  auto* pl = app.add_subcommand("plot", "render the loss curve of a report.json");
  std::string pl_report, pl_out = "loss.svg";
  pl->add_option("--report", pl_report, "report.json from train")->required();
  pl->add_option("--out", pl_out, "output SVG path");

  CLI11_PARSE(app, argc, argv);

  if (*gen) {
    causarc_config* cfg = gen_cfg.build();
    causarc_dataset* ds = nullptr;
    check(causarc_dataset_generate(cfg, gen_n, gen_rate, gen_seed, &ds));
    check(causarc_dataset_save(ds, gen_out.c_str()));
    size_t n = 0;
    causarc_dataset_size(ds, &n);
    std::printf("wrote %zu samples to %s\n", n, gen_out.c_str());
    causarc_dataset_free(ds);
    causarc_config_free(cfg);
  } else if (*tr) {
    if (tr_data.empty() == tr_manifest.empty()) {
      std::fprintf(stderr, "error: pass exactly one of --data or --manifest\n");
      return 1;
    }
    causarc_dataset* ds = open_dataset(tr_data, tr_manifest);
    causarc_model* m = nullptr;
    if (!tr_resume.empty()) {
      check(causarc_model_load(tr_resume.c_str(), &m));
    } else {
      causarc_config* cfg = tr_cfg.build();
      check(causarc_model_create_for_dataset(cfg, ds, &m));
      causarc_config_free(cfg);
    }
    char* report = nullptr;
    check(causarc_train(m, ds, tr_epochs, tr_out_dir.empty() ? nullptr : tr_out_dir.c_str(),
                        tr_plot ? 1 : 0, tr_verbose ? 1 : 0, &report));
    print_owned(report);
    causarc_model_free(m);
    causarc_dataset_free(ds);
  } else if (*ev) {
    if (ev_data.empty() == ev_manifest.empty()) {
      std::fprintf(stderr, "error: pass exactly one of --data or --manifest\n");
      return 1;
    }
    int mode = ev_mode == "normal" ? 0 : ev_mode == "do-e" ? 1 : ev_mode == "do-f" ? 2 : -1;
    if (mode < 0) {
      std::fprintf(stderr, "error: unknown mode '%s'\n", ev_mode.c_str());
      return 1;
    }
    causarc_dataset* ds = open_dataset(ev_data, ev_manifest);
    causarc_model* m = nullptr;
    check(causarc_model_load(ev_ckpt.c_str(), &m));
    char* report = nullptr;
    check(causarc_evaluate(m, ds, mode, ev_noise, &report));
    print_owned(report);
    causarc_model_free(m);
    causarc_dataset_free(ds);
  } else if (*iv) {
    if (iv_data.empty() == iv_manifest.empty()) {
      std::fprintf(stderr, "error: pass exactly one of --data or --manifest\n");
      return 1;
    }
    causarc_dataset* ds = open_dataset(iv_data, iv_manifest);
    causarc_model* m = nullptr;
    check(causarc_model_load(iv_ckpt.c_str(), &m));
    char* report = nullptr;
    check(causarc_intervention_experiment(m, ds, iv_noise, &report));
    print_owned(report);
    causarc_model_free(m);
    causarc_dataset_free(ds);
  } else if (*kf) {
    char* indices = nullptr;
    check(causarc_keyframes_file(kf_features.c_str(), kf_k, kf_c, kf_alpha, kf_seed,
                                 kf_append ? 1 : 0, &indices));
    print_owned(indices);
  } else if (*ex) {
    causarc_dataset* ds = nullptr;
    check(causarc_dataset_load(ex_data.c_str(), &ds));
    causarc_model* m = nullptr;
    if (!ex_ckpt.empty()) {
      check(causarc_model_load(ex_ckpt.c_str(), &m));
    } else {
      causarc_config* cfg = ex_cfg.build();
      check(causarc_model_create_for_dataset(cfg, ds, &m));
      causarc_config_free(cfg);
    }
    check(causarc_export_features(m, ds, ex_out_dir.c_str()));
    std::printf("wrote features and manifest.csv to %s\n", ex_out_dir.c_str());
    causarc_model_free(m);
    causarc_dataset_free(ds);
  } else if (*pl) {
    check(causarc_plot_report(pl_report.c_str(), pl_out.c_str()));
    std::printf("wrote %s\n", pl_out.c_str());
  }
  return 0;
}
