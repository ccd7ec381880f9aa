#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "causarc/causarc.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

#define REQUIRE_OK(expr) REQUIRE((expr) == CAUSARC_OK)

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  causarc_string_free(s);
  return out;
}

causarc_config* small_config() {
  causarc_config* cfg = nullptr;
  REQUIRE_OK(causarc_config_create(&cfg));
  const char* kv[][2] = {
      {"d", "16"},          {"d_c", "16"},
      {"d_f", "8"},         {"n_heads", "2"},
      {"vocab_size", "32"}, {"max_text_len", "8"},
      {"max_frames", "3"},  {"max_expl_len", "8"},
      {"d_in_visual", "4"}, {"d_in_acoustic", "3"},
      {"decoder_layers", "1"}, {"expl_encoder_layers", "1"},
      {"batch_size", "4"},  {"epochs", "1"},
  };
  for (const auto& e : kv) REQUIRE_OK(causarc_config_set(cfg, e[0], e[1]));
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::path("tmp_test_capi") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("version and error strings") {
  const char* v = causarc_version();
  REQUIRE(v != nullptr);
  CHECK(std::string(v).size() > 0);

  causarc_config* cfg = nullptr;
  CHECK(causarc_config_load(nullptr, &cfg) == CAUSARC_ERR_INVALID_ARGUMENT);
  CHECK(std::string(causarc_last_error()) == "null argument");
}

TEST_CASE("config lifecycle") {
  causarc_config* cfg = nullptr;
  REQUIRE_OK(causarc_config_create(&cfg));

  char* val = nullptr;
  REQUIRE_OK(causarc_config_get(cfg, "d", &val));
  CHECK(take(val) == "64");

  REQUIRE_OK(causarc_config_set(cfg, "d", "16"));
  REQUIRE_OK(causarc_config_get(cfg, "d", &val));
  CHECK(take(val) == "16");

  CHECK(causarc_config_get(cfg, "no_such_key", &val) == CAUSARC_ERR_INVALID_ARGUMENT);
  CHECK(std::string(causarc_last_error()).find("unknown") != std::string::npos);
  CHECK(causarc_config_set(cfg, "d", "zebra") == CAUSARC_ERR_INVALID_ARGUMENT);

  REQUIRE_OK(causarc_config_set(cfg, "n_heads", "2"));
  char* problems = nullptr;
  REQUIRE_OK(causarc_config_validate(cfg, &problems));
  CHECK(take(problems) == "");

  REQUIRE_OK(causarc_config_set(cfg, "epsilon", "1.5"));
  REQUIRE_OK(causarc_config_validate(cfg, &problems));
  CHECK(take(problems).find("epsilon") != std::string::npos);
  REQUIRE_OK(causarc_config_set(cfg, "epsilon", "0.2"));

  fs::path dir = fresh_dir("config");
  std::string path = (dir / "run.cfg").string();
  REQUIRE_OK(causarc_config_save(cfg, path.c_str()));
  causarc_config* back = nullptr;
  REQUIRE_OK(causarc_config_load(path.c_str(), &back));
  REQUIRE_OK(causarc_config_get(back, "epsilon", &val));
  CHECK(std::stod(take(val)) == 0.2);  // doubles round-trip at full precision
  REQUIRE_OK(causarc_config_get(back, "d", &val));
  CHECK(take(val) == "16");
  causarc_config_free(back);

  causarc_config* missing = nullptr;
  CHECK(causarc_config_load((dir / "nope.cfg").string().c_str(), &missing) == CAUSARC_ERR_IO);
  causarc_config_free(cfg);
}

TEST_CASE("dataset lifecycle") {
  causarc_config* cfg = small_config();
  causarc_dataset* ds = nullptr;
  REQUIRE_OK(causarc_dataset_generate(cfg, 8, 0.5, 0, &ds));
  size_t n = 0;
  REQUIRE_OK(causarc_dataset_size(ds, &n));
  CHECK(n == 8);

  fs::path dir = fresh_dir("dataset");
  std::string path = (dir / "corpus.json").string();
  REQUIRE_OK(causarc_dataset_save(ds, path.c_str()));
  causarc_dataset* back = nullptr;
  REQUIRE_OK(causarc_dataset_load(path.c_str(), &back));
  REQUIRE_OK(causarc_dataset_size(back, &n));
  CHECK(n == 8);
  causarc_dataset_free(back);

  causarc_dataset* bad = nullptr;
  CHECK(causarc_dataset_generate(cfg, 8, 1.5, 0, &bad) == CAUSARC_ERR_INVALID_ARGUMENT);
  CHECK(causarc_dataset_load((dir / "ghost.json").string().c_str(), &bad) == CAUSARC_ERR_IO);
  CHECK(causarc_dataset_size(ds, nullptr) == CAUSARC_ERR_INVALID_ARGUMENT);

  causarc_dataset_free(ds);
  causarc_config_free(cfg);
}

TEST_CASE("model training, evaluation and persistence") {
  causarc_config* cfg = small_config();
  causarc_dataset* ds = nullptr;
  REQUIRE_OK(causarc_dataset_generate(cfg, 8, 0.5, 0, &ds));
  causarc_model* m = nullptr;
  REQUIRE_OK(causarc_model_create(cfg, &m));

  char* rep = nullptr;
  fs::path dir = fresh_dir("model");
  REQUIRE_OK(causarc_train(m, ds, 1, dir.string().c_str(), 0, 0, &rep));
  json report = json::parse(take(rep));
  CHECK(report.contains("run_id"));
  CHECK(report.contains("loss_curve"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "final.ckpt"));

  char* ev = nullptr;
  REQUIRE_OK(causarc_evaluate(m, ds, 0, 0, &ev));
  json evj = json::parse(take(ev));
  CHECK(evj["mode"] == "normal");
  CHECK(evj.contains("classification"));
  CHECK(evj.contains("generation"));

  REQUIRE_OK(causarc_evaluate(m, ds, 2, 7, &ev));
  json dofj = json::parse(take(ev));
  CHECK(dofj["mode"] == "do_f");
  CHECK_FALSE(dofj.contains("generation"));
  CHECK(causarc_evaluate(m, ds, 5, 0, &ev) == CAUSARC_ERR_INVALID_ARGUMENT);

  char* ix = nullptr;
  REQUIRE_OK(causarc_intervention_experiment(m, ds, 3, &ix));
  json ixj = json::parse(take(ix));
  for (const char* key : {"noise_seed", "normal", "do_e", "do_f"}) CHECK(ixj.contains(key));

  // save, reload, and confirm the reloaded model scores identically
  std::string ckpt = (dir / "manual.ckpt").string();
  REQUIRE_OK(causarc_model_save(m, ckpt.c_str()));
  causarc_model* back = nullptr;
  REQUIRE_OK(causarc_model_load(ckpt.c_str(), &back));
  char *ea = nullptr, *eb = nullptr;
  REQUIRE_OK(causarc_evaluate(m, ds, 1, 0, &ea));
  REQUIRE_OK(causarc_evaluate(back, ds, 1, 0, &eb));
  CHECK(take(ea) == take(eb));

  // the embedded trainer state lets training continue where it stopped
  REQUIRE_OK(causarc_train(back, ds, 2, nullptr, 0, 0, &rep));
  json resumed = json::parse(take(rep));
  CHECK(resumed["epoch_metrics"].size() == 1);  // only epoch 1 remained

  causarc_model* nope = nullptr;
  CHECK(causarc_model_load((dir / "ghost.ckpt").string().c_str(), &nope) == CAUSARC_ERR_IO);

  causarc_model_free(back);
  causarc_model_free(m);
  causarc_dataset_free(ds);
  causarc_config_free(cfg);
}

TEST_CASE("feature export and ingest") {
  causarc_config* cfg = small_config();
  causarc_dataset* ds = nullptr;
  REQUIRE_OK(causarc_dataset_generate(cfg, 6, 0.5, 1, &ds));
  causarc_model* m = nullptr;
  REQUIRE_OK(causarc_model_create(cfg, &m));

  fs::path dir = fresh_dir("features");
  REQUIRE_OK(causarc_export_features(m, ds, dir.string().c_str()));
  REQUIRE(fs::exists(dir / "manifest.csv"));

  causarc_dataset* feat = nullptr;
  char* errors = nullptr;
  REQUIRE_OK(
      causarc_dataset_ingest((dir / "manifest.csv").string().c_str(), &feat, &errors));
  CHECK(take(errors) == "");
  size_t n = 0;
  REQUIRE_OK(causarc_dataset_size(feat, &n));
  CHECK(n == 6);

  causarc_model* fm = nullptr;
  REQUIRE_OK(causarc_model_create_for_dataset(cfg, feat, &fm));
  char* rep = nullptr;
  REQUIRE_OK(causarc_train(fm, feat, 1, nullptr, 0, 0, &rep));
  causarc_string_free(rep);

  // a token-mode model cannot train on ingested features
  causarc_model* tok = nullptr;
  REQUIRE_OK(causarc_model_create(cfg, &tok));
  CHECK(causarc_train(tok, feat, 1, nullptr, 0, 0, nullptr) == CAUSARC_ERR_INVALID_ARGUMENT);

  causarc_model_free(tok);
  causarc_model_free(fm);
  causarc_dataset_free(feat);
  causarc_model_free(m);
  causarc_dataset_free(ds);
  causarc_config_free(cfg);
}

TEST_CASE("keyframe selection from a feature file") {
  fs::path dir = fresh_dir("keyframes");
  std::string path = (dir / "frames.csv").string();
  std::ofstream out(path);
  for (int i = 0; i < 12; ++i) {
    double base = i < 6 ? 0.0 : 5.0;
    out << base + 0.01 * i << ',' << base - 0.01 * i << '\n';
  }
  out.close();

  char* idx = nullptr;
  REQUIRE_OK(causarc_keyframes_file(path.c_str(), 2, 12, 0.0, 0, 0, &idx));
  json j = json::parse(take(idx));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  CHECK(j[0].get<int>() < 6);
  CHECK(j[1].get<int>() >= 6);

  REQUIRE_OK(causarc_keyframes_file(path.c_str(), 3, 6, 0.5, 1, 1, &idx));
  json ja = json::parse(take(idx));
  CHECK(ja.size() == 3);

  CHECK(causarc_keyframes_file(path.c_str(), 20, 24, 0.0, 0, 0, &idx) ==
        CAUSARC_ERR_INVALID_ARGUMENT);
  CHECK(causarc_keyframes_file((dir / "ghost.csv").string().c_str(), 2, 4, 0.0, 0, 0, &idx) ==
        CAUSARC_ERR_IO);
}

TEST_CASE("loss curve plotting") {
  causarc_config* cfg = small_config();
  causarc_dataset* ds = nullptr;
  REQUIRE_OK(causarc_dataset_generate(cfg, 8, 0.5, 2, &ds));
  causarc_model* m = nullptr;
  REQUIRE_OK(causarc_model_create(cfg, &m));

  fs::path dir = fresh_dir("plot");
  REQUIRE_OK(causarc_train(m, ds, 1, dir.string().c_str(), 0, 0, nullptr));
  std::string svg = (dir / "curve.svg").string();
  REQUIRE_OK(causarc_plot_report((dir / "report.json").string().c_str(), svg.c_str()));

  std::ifstream in(svg);
  REQUIRE(in.good());
  std::string content((std::istreambuf_iterator<char>(in)), {});
  CHECK(content.rfind("<svg", 0) == 0);
  CHECK(content.find("polyline") != std::string::npos);

  CHECK(causarc_plot_report((dir / "ghost.json").string().c_str(), svg.c_str()) ==
        CAUSARC_ERR_IO);

  causarc_model_free(m);
  causarc_dataset_free(ds);
  causarc_config_free(cfg);
}
