#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "causarc/features_io.hpp"
#include "causarc/train.hpp"

using namespace causarc;
namespace fs = std::filesystem;

namespace {

ModelConfig train_cfg() {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.d_c = 16;
  cfg.d_f = 8;
  cfg.n_heads = 2;
  cfg.vocab_size = 32;
  cfg.max_text_len = 8;
  cfg.max_frames = 3;
  cfg.max_expl_len = 8;
  cfg.d_in_visual = 4;
  cfg.d_in_acoustic = 3;
  cfg.decoder_layers = 1;
  cfg.expl_encoder_layers = 1;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  return cfg;
}

Dataset train_set(const ModelConfig& cfg, int n, uint64_t seed = 0) {
  SyntheticCorpusSpec spec;
  spec.num_samples = n;
  spec.seed = seed;
  return generate_synthetic_dataset(cfg, spec);
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::path("tmp_test_train") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool params_equal(const Model& a, const Model& b) {
  if (a.params.count() != b.params.count()) return false;
  auto ia = a.params.all().begin();
  auto ib = b.params.all().begin();
  for (; ia != a.params.all().end(); ++ia, ++ib) {
    if (ia->name != ib->name) return false;
    if (max_abs_diff(ia->value, ib->value) != 0.0) return false;
  }
  return true;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("adam walks a quadratic to its minimum") {
  ModelConfig cfg = train_cfg();
  ParamStore ps(0);
  Param& w = ps.add("w", 1, 1, ParamGroup::kNew, Init::kZeros);
  Adam opt(ps, 0.05, 0.05);
  for (int i = 0; i < 100; ++i) {
    ps.zero_grads();
    Tape t;
    Var diff = t.sub(t.param(w), t.input(Matrix(1, 1, {0.7})));
    t.backward(t.mul(diff, diff));
    opt.step();
  }
  CHECK(opt.t() == 100);
  CHECK(std::abs(w.value.at(0, 0) - 0.7) < 0.05);
}

TEST_CASE("parameter groups use their own learning rate") {
  ParamStore ps(0);
  Param& wb = ps.add("wb", 1, 1, ParamGroup::kBase, Init::kZeros);
  Param& wn = ps.add("wn", 1, 1, ParamGroup::kNew, Init::kZeros);
  Adam opt(ps, 0.0, 0.1);
  ps.zero_grads();
  Tape t;
  Var db = t.sub(t.param(wb), t.input(Matrix(1, 1, {1.0})));
  Var dn = t.sub(t.param(wn), t.input(Matrix(1, 1, {1.0})));
  t.backward(t.add(t.mul(db, db), t.mul(dn, dn)));
  opt.step();
  CHECK(wb.value.at(0, 0) == 0.0);
  CHECK(wn.value.at(0, 0) != 0.0);
}

TEST_CASE("training reduces the loss on a small corpus") {
  ModelConfig cfg = train_cfg();
  cfg.epochs = 6;
  auto m = make_model(cfg);
  TrainerState st(*m);
  Dataset ds = train_set(cfg, 8);
  TrainResult res = train(*m, st, ds);
  REQUIRE(res.epochs.size() == 6);
  REQUIRE(res.steps.size() == 6 * 2);  // 8 samples, batches of 4
  CHECK(res.epochs.back().mean_loss.total < res.epochs.front().mean_loss.total);
  for (const auto& s : res.steps) CHECK(std::isfinite(s.loss.total));
  CHECK(st.next_epoch == 6);
}

TEST_CASE("identical seeds give bitwise identical runs") {
  ModelConfig cfg = train_cfg();
  Dataset ds = train_set(cfg, 8);
  double totals[2];
  std::unique_ptr<Model> models[2];
  for (int i = 0; i < 2; ++i) {
    models[i] = make_model(cfg);
    TrainerState st(*models[i]);
    TrainResult res = train(*models[i], st, ds);
    totals[i] = res.steps.back().loss.total;
  }
  CHECK(totals[0] == totals[1]);
  CHECK(params_equal(*models[0], *models[1]));
}

TEST_CASE("epsilon edges drive the intervention counter") {
  ModelConfig cfg = train_cfg();
  cfg.epochs = 1;
  Dataset ds = train_set(cfg, 8);

  cfg.epsilon = 1.0;
  auto m1 = make_model(cfg);
  TrainerState st1(*m1);
  CHECK(train(*m1, st1, ds).epochs[0].intervened == 8);

  cfg.epsilon = 0.0;
  auto m0 = make_model(cfg);
  TrainerState st0(*m0);
  CHECK(train(*m0, st0, ds).epochs[0].intervened == 0);
}

TEST_CASE("dataset problems are rejected up front") {
  ModelConfig cfg = train_cfg();
  auto m = make_model(cfg);
  TrainerState st(*m);
  Dataset empty;
  CHECK_THROWS_AS((void)train(*m, st, empty), std::invalid_argument);
  Dataset feat;
  feat.feature_mode = true;
  feat.samples.emplace_back();
  CHECK_THROWS_AS((void)train(*m, st, feat), std::invalid_argument);
}

TEST_CASE("non-finite losses abort with a dump file") {
  ModelConfig cfg = train_cfg();
  auto m = make_model(cfg);
  m->params.find("classifier.W")->value.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainerState st(*m);
  Dataset ds = train_set(cfg, 4);
  fs::path dir = fresh_dir("nan");
  TrainOptions opt;
  opt.out_dir = dir.string();
  std::string dump;
  try {
    (void)train(*m, st, ds, opt);
    FAIL("expected TrainNanError");
  } catch (const TrainNanError& e) {
    dump = e.dump_path;
  }
  REQUIRE_FALSE(dump.empty());
  nlohmann::json j = nlohmann::json::parse(slurp(dump));
  CHECK(j.contains("epoch"));
  CHECK(j.contains("step"));
  CHECK(j.contains("samples"));
}

TEST_CASE("early stopping cuts the run short") {
  ModelConfig cfg = train_cfg();
  cfg.epochs = 50;
  cfg.early_stop_f1 = 1e-6;  // satisfied by any non-degenerate epoch
  auto m = make_model(cfg);
  TrainerState st(*m);
  Dataset ds = train_set(cfg, 8);
  TrainResult res = train(*m, st, ds);
  CHECK(res.epochs.size() < 50);
}

TEST_CASE("checkpoints restore parameters and trainer state") {
  ModelConfig cfg = train_cfg();
  auto m = make_model(cfg);
  TrainerState st(*m);
  Dataset ds = train_set(cfg, 8);
  (void)train(*m, st, ds);

  fs::path dir = fresh_dir("ckpt");
  std::string path = (dir / "model.ckpt").string();
  save_checkpoint(path, *m, &st);
  LoadedCheckpoint loaded = load_checkpoint(path);
  REQUIRE(loaded.model);
  REQUIRE(loaded.state);
  CHECK(params_equal(*m, *loaded.model));
  CHECK(config_to_text(loaded.model->cfg) == config_to_text(m->cfg));
  CHECK(loaded.state->adam.t() == st.adam.t());
  CHECK(loaded.state->next_epoch == st.next_epoch);
  CHECK(loaded.state->rng.save_state() == st.rng.save_state());

  // stateless save loads with a null trainer state
  std::string bare = (dir / "bare.ckpt").string();
  save_checkpoint(bare, *m);
  LoadedCheckpoint plain = load_checkpoint(bare);
  CHECK(plain.model);
  CHECK_FALSE(plain.state);

  // serialization is stable byte for byte
  std::string path2 = (dir / "model2.ckpt").string();
  save_checkpoint(path2, *m, &st);
  CHECK(slurp(path) == slurp(path2));

  std::ofstream trunc(dir / "trunc.ckpt", std::ios::binary);
  trunc << slurp(path).substr(0, 100);
  trunc.close();
  CHECK_THROWS_AS((void)load_checkpoint((dir / "trunc.ckpt").string()), std::runtime_error);
  std::ofstream junk(dir / "junk.ckpt", std::ios::binary);
  junk << "NOTACKPT and then some";
  junk.close();
  CHECK_THROWS_AS((void)load_checkpoint((dir / "junk.ckpt").string()), std::runtime_error);
  CHECK_THROWS_AS((void)load_checkpoint((dir / "ghost.ckpt").string()), std::runtime_error);
}

TEST_CASE("a resumed run matches an uninterrupted one") {
  ModelConfig cfg = train_cfg();
  Dataset ds = train_set(cfg, 8);

  auto full = make_model(cfg);
  TrainerState full_st(*full);
  TrainOptions four;
  four.epochs = 4;
  (void)train(*full, full_st, ds, four);

  auto half = make_model(cfg);
  TrainerState half_st(*half);
  TrainOptions two;
  two.epochs = 2;
  (void)train(*half, half_st, ds, two);
  fs::path dir = fresh_dir("resume");
  std::string path = (dir / "half.ckpt").string();
  save_checkpoint(path, *half, &half_st);

  LoadedCheckpoint loaded = load_checkpoint(path);
  REQUIRE(loaded.state);
  CHECK(loaded.state->next_epoch == 2);
  (void)train(*loaded.model, *loaded.state, ds, four);

  CHECK(params_equal(*full, *loaded.model));
  CHECK(full_st.rng.save_state() == loaded.state->rng.save_state());
  CHECK(full_st.adam.t() == loaded.state->adam.t());
}

TEST_CASE("ingested features reproduce the token-mode first step") {
  ModelConfig cfg = train_cfg();
  cfg.epsilon = 0.0;  // keep both runs on the same intervention branch
  Dataset ds = train_set(cfg, 4);

  auto tok = make_model(cfg);
  fs::path dir = fresh_dir("ingest");
  export_features(*tok, ds, dir.string());
  IngestResult ing = ingest_features((dir / "manifest.csv").string());
  REQUIRE(ing.errors.empty());
  auto feat = make_model_for_dataset(cfg, ing.dataset);

  TrainOptions one;
  one.epochs = 1;
  TrainerState st_tok(*tok);
  TrainResult r_tok = train(*tok, st_tok, ds, one);
  TrainerState st_feat(*feat);
  TrainResult r_feat = train(*feat, st_feat, ing.dataset, one);

  // identity adapters over exported features leave the first batch bit-equal
  CHECK(r_feat.steps[0].loss.total == r_tok.steps[0].loss.total);
}

TEST_CASE("run ids hash the configuration and corpus size") {
  ModelConfig cfg = train_cfg();
  std::string id = make_run_id(cfg, 64);
  CHECK(id.size() == 16);
  CHECK(id == make_run_id(cfg, 64));
  CHECK(id != make_run_id(cfg, 65));
  ModelConfig other = cfg;
  other.seed = 99;
  CHECK(id != make_run_id(other, 64));
}

TEST_CASE("an output directory collects report and artifacts") {
  ModelConfig cfg = train_cfg();
  auto m = make_model(cfg);
  TrainerState st(*m);
  Dataset ds = train_set(cfg, 8);
  fs::path dir = fresh_dir("report");
  TrainOptions opt;
  opt.out_dir = dir.string();
  opt.plot = true;
  TrainResult res = train(*m, st, ds, opt);

  CHECK(fs::exists(dir / "epoch_000.ckpt"));
  CHECK(fs::exists(dir / "epoch_001.ckpt"));
  CHECK(fs::exists(dir / "final.ckpt"));
  CHECK(fs::exists(dir / "loss.svg"));
  REQUIRE(fs::exists(dir / "report.json"));

  nlohmann::json rep = nlohmann::json::parse(slurp(dir / "report.json"));
  for (const char* key : {"run_id", "config", "dataset", "classification", "generation",
                          "interventions", "loss_curve", "epoch_metrics"})
    CHECK(rep.contains(key));
  CHECK(rep["generation"]["meteor"].is_null());
  CHECK(rep["generation"]["bertscore"].is_null());
  for (const char* key : {"normal", "do_e", "do_f"}) CHECK(rep["interventions"].contains(key));
  CHECK(rep["run_id"] == make_run_id(cfg, ds.samples.size()));
  CHECK(res.report == rep);

  std::string svg = slurp(dir / "loss.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("evaluation helpers are deterministic") {
  ModelConfig cfg = train_cfg();
  auto m = make_model(cfg);
  Dataset ds = train_set(cfg, 6);

  ClassificationReport a = eval_classification(*m, ds, InterventionMode::kDoF, 11);
  ClassificationReport b = eval_classification(*m, ds, InterventionMode::kDoF, 11);
  CHECK(a.weighted_f1 == b.weighted_f1);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.accuracy >= 0.0);
  CHECK(a.accuracy <= 1.0);

  GenerationReport g = eval_generation(*m, ds);
  CHECK(g.token_accuracy >= 0.0);
  CHECK(g.token_accuracy <= 1.0);
  for (double v : {g.rouge1_f1, g.rouge2_f1, g.rouge_l_f1, g.bleu[0], g.bleu[3]}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

}  // TEST_SUITE
