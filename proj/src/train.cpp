#include "causarc/train.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace causarc {

namespace {

constexpr uint64_t kTrainStream = 1;

void write_raw(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void read_raw(std::istream& is, void* p, size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("truncated checkpoint");
}
template <typename T>
void write_pod(std::ostream& os, T v) {
  write_raw(os, &v, sizeof v);
}
template <typename T>
T read_pod(std::istream& is) {
  T v;
  read_raw(is, &v, sizeof v);
  return v;
}
void write_str(std::ostream& os, const std::string& s) {
  write_pod<uint64_t>(os, s.size());
  write_raw(os, s.data(), s.size());
}
std::string read_str(std::istream& is) {
  uint64_t n = read_pod<uint64_t>(is);
  if (n > (1u << 26)) throw std::runtime_error("corrupt checkpoint string length");
  std::string s(n, '\0');
  if (n) read_raw(is, s.data(), n);
  return s;
}
void write_doubles(std::ostream& os, const std::vector<double>& d) {
  write_raw(os, d.data(), d.size() * sizeof(double));
}
void read_doubles(std::istream& is, std::vector<double>& d) {
  read_raw(is, d.data(), d.size() * sizeof(double));
}

constexpr char kMagic[8] = {'C', 'A', 'R', 'C', 'C', 'K', 'P', '1'};

}  // namespace

Adam::Adam(ParamStore& ps, double lr_base, double lr_new)
    : ps_(&ps), lr_base_(lr_base), lr_new_(lr_new) {
  for (const auto& p : ps.all()) {
    m_.emplace_back(p.value.rows, p.value.cols);
    v_.emplace_back(p.value.rows, p.value.cols);
  }
}

void Adam::step() {
  ++t_;
  double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  size_t i = 0;
  for (auto& p : ps_->all()) {
    double lr = p.group == ParamGroup::kBase ? lr_base_ : lr_new_;
    auto& m = m_[i].data;
    auto& v = v_[i].data;
    const auto& g = p.grad.data;
    auto& w = p.value.data;
    for (size_t k = 0; k < w.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
    ++i;
  }
}

void Adam::save(std::ostream& os) const {
  write_pod<int64_t>(os, t_);
  for (const auto& m : m_) write_doubles(os, m.data);
  for (const auto& v : v_) write_doubles(os, v.data);
}

void Adam::load(std::istream& is) {
  t_ = read_pod<int64_t>(is);
  for (auto& m : m_) read_doubles(is, m.data);
  for (auto& v : v_) read_doubles(is, v.data);
}

TrainerState::TrainerState(Model& m)
    : adam(m.params, m.cfg.lr_base, m.cfg.lr_new),
      rng(RngStream(m.cfg.seed).split(kTrainStream)) {}

namespace {

std::string write_nan_dump(const std::string& dir, int epoch, int step,
                           const std::vector<std::pair<std::string, LossBreakdown>>& batch) {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["step"] = step;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, b] : batch) {
    arr.push_back({{"id", id},
                   {"reconstruction", b.reconstruction},
                   {"kl", b.kl},
                   {"exp", b.exp},
                   {"total", b.total}});
  }
  j["samples"] = arr;
  std::string path = (dir.empty() ? std::string(".") : dir) + "/nan_dump.json";
  std::ofstream f(path);
  f << j.dump(2) << "\n";
  return path;
}

bool finite(const LossBreakdown& b) {
  return std::isfinite(b.reconstruction) && std::isfinite(b.kl) && std::isfinite(b.exp) &&
         std::isfinite(b.total);
}

}  // namespace

TrainResult train(Model& m, TrainerState& st, const Dataset& ds, const TrainOptions& opt) {
  if (ds.samples.empty()) throw std::invalid_argument("train: empty dataset");
  if (ds.feature_mode != m.feat.active())
    throw std::invalid_argument("train: dataset feature mode does not match the model");
  int epochs = opt.epochs > 0 ? opt.epochs : m.cfg.epochs;
  int batch = std::max(1, m.cfg.batch_size);
  if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir);

  TrainResult res;
  std::unordered_map<std::string, ExplanationSequence> decode_cache;
  bool early = m.cfg.early_stop_f1 > 0.0 || m.cfg.early_stop_token_acc > 0.0;

  for (int epoch = st.next_epoch; epoch < epochs; ++epoch) {
    decode_cache.clear();  // refreshed once per epoch when caching is on
    std::vector<int> order(ds.samples.size());
    std::iota(order.begin(), order.end(), 0);
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[st.rng.uniform_int(0, i)]);

    LossBreakdown epoch_sum;
    int intervened = 0;
    int step = 0;
    for (size_t off = 0; off < order.size(); off += static_cast<size_t>(batch)) {
      size_t end = std::min(off + static_cast<size_t>(batch), order.size());
      int bn = static_cast<int>(end - off);
      m.params.zero_grads();
      LossBreakdown mean;
      std::vector<std::pair<std::string, LossBreakdown>> batch_losses;
      bool bad = false;
      for (size_t bi = off; bi < end; ++bi) {
        const MultimodalSample& s = ds.samples[static_cast<size_t>(order[bi])];
        Tape t;
        const ExplanationSequence* cached = nullptr;
        if (m.cfg.cache_generated_explanations) {
          auto it = decode_cache.find(s.id);
          if (it != decode_cache.end()) cached = &it->second;
        }
        TotalLossVars lv = total_loss(t, m, s, st.rng, cached);
        if (m.cfg.cache_generated_explanations && !cached)
          decode_cache.emplace(s.id, lv.generated);
        LossBreakdown b = breakdown_of(t, lv);
        batch_losses.emplace_back(s.id, b);
        if (!finite(b)) {
          bad = true;
          break;
        }
        double gap = std::fabs(b.total - (b.reconstruction + b.kl + b.exp));
        if (gap > 1e-9)
          throw std::logic_error("loss terms do not sum to the total, gap " + std::to_string(gap));
        mean.reconstruction += b.reconstruction / bn;
        mean.kl += b.kl / bn;
        mean.exp += b.exp / bn;
        mean.total += b.total / bn;
        if (lv.intervened) ++intervened;
        t.backward(t.scale(lv.total, 1.0 / bn));
      }
      if (bad) {
        std::string dump = write_nan_dump(opt.out_dir, epoch, step, batch_losses);
        throw TrainNanError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                                std::to_string(step) + "; batch dumped to " + dump,
                            dump);
      }
      st.adam.step();
      res.steps.push_back({epoch, step, mean});
      epoch_sum.reconstruction += mean.reconstruction * bn;
      epoch_sum.kl += mean.kl * bn;
      epoch_sum.exp += mean.exp * bn;
      epoch_sum.total += mean.total * bn;
      ++step;
    }

    ClassificationReport cr = eval_classification(m, ds, InterventionMode::kNone);
    GenerationReport gr = eval_generation(m, ds);
    double n = static_cast<double>(ds.samples.size());
    EpochSummary es;
    es.epoch = epoch;
    es.mean_loss = {epoch_sum.reconstruction / n, epoch_sum.kl / n, epoch_sum.exp / n,
                    epoch_sum.total / n};
    es.weighted_f1 = cr.weighted_f1;
    es.token_accuracy = gr.token_accuracy;
    es.intervened = intervened;
    res.epochs.push_back(es);
    st.next_epoch = epoch + 1;

    if (opt.verbose) {
      std::printf("epoch %3d  loss %.4f (rec %.4f kl %.4f exp %.4f)  f1 %.3f  tok %.3f  gt-draws %d\n",
                  epoch, es.mean_loss.total, es.mean_loss.reconstruction, es.mean_loss.kl,
                  es.mean_loss.exp, es.weighted_f1, es.token_accuracy, intervened);
      std::fflush(stdout);
    }
    if (!opt.out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d.ckpt", epoch);
      save_checkpoint(opt.out_dir + "/" + name, m, &st);
    }
    if (early && cr.weighted_f1 >= m.cfg.early_stop_f1 &&
        gr.token_accuracy >= m.cfg.early_stop_token_acc)
      break;
  }

  nlohmann::json rep;
  rep["run_id"] = make_run_id(m.cfg, ds.samples.size());
  rep["config"] = config_to_kv(m.cfg);
  rep["dataset"] = {{"num_samples", ds.samples.size()}, {"feature_mode", ds.feature_mode}};
  rep["classification"] = to_json(eval_classification(m, ds, InterventionMode::kNone));
  rep["generation"] = to_json(eval_generation(m, ds));
  rep["interventions"] = run_intervention_experiment(m, ds, m.cfg.seed);
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& sl : res.steps)
    curve.push_back({{"epoch", sl.epoch},
                     {"step", sl.step},
                     {"reconstruction", sl.loss.reconstruction},
                     {"kl", sl.loss.kl},
                     {"exp", sl.loss.exp},
                     {"total", sl.loss.total}});
  rep["loss_curve"] = curve;
  nlohmann::json em = nlohmann::json::array();
  for (const auto& e : res.epochs)
    em.push_back({{"epoch", e.epoch},
                  {"mean_total", e.mean_loss.total},
                  {"weighted_f1", e.weighted_f1},
                  {"token_accuracy", e.token_accuracy},
                  {"intervened", e.intervened}});
  rep["epoch_metrics"] = em;
  res.report = rep;

  if (!opt.out_dir.empty()) {
    save_checkpoint(opt.out_dir + "/final.ckpt", m, &st);
    std::ofstream f(opt.out_dir + "/report.json");
    f << rep.dump(2) << "\n";
    if (opt.plot) render_loss_svg(res.steps, opt.out_dir + "/loss.svg");
  }
  return res;
}

void save_checkpoint(const std::string& path, const Model& m, const TrainerState* st) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_raw(f, kMagic, sizeof kMagic);
  write_str(f, config_to_text(m.cfg));
  write_pod<int32_t>(f, m.feat.text);
  write_pod<int32_t>(f, m.feat.visual);
  write_pod<int32_t>(f, m.feat.acoustic);
  write_pod<uint64_t>(f, m.params.count());
  for (const auto& p : m.params.all()) {
    write_str(f, p.name);
    write_pod<uint8_t>(f, p.group == ParamGroup::kBase ? 0 : 1);
    write_pod<int32_t>(f, p.value.rows);
    write_pod<int32_t>(f, p.value.cols);
    write_doubles(f, p.value.data);
  }
  write_pod<uint8_t>(f, st ? 1 : 0);
  if (st) {
    st->adam.save(f);
    write_str(f, st->rng.save_state());
    write_pod<int32_t>(f, st->next_epoch);
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[8];
  read_raw(f, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error(path + " is not a checkpoint");
  ModelConfig cfg = parse_config_text(read_str(f));
  FeatureDims feat;
  feat.text = read_pod<int32_t>(f);
  feat.visual = read_pod<int32_t>(f);
  feat.acoustic = read_pod<int32_t>(f);

  LoadedCheckpoint out;
  out.model = make_model(cfg, feat);
  uint64_t n = read_pod<uint64_t>(f);
  if (n != out.model->params.count())
    throw std::runtime_error("checkpoint parameter count mismatch");
  for (uint64_t i = 0; i < n; ++i) {
    std::string name = read_str(f);
    uint8_t group = read_pod<uint8_t>(f);
    int32_t rows = read_pod<int32_t>(f);
    int32_t cols = read_pod<int32_t>(f);
    Param* p = out.model->params.find(name);
    if (!p) throw std::runtime_error("checkpoint has unknown parameter " + name);
    if (p->value.rows != rows || p->value.cols != cols)
      throw std::runtime_error("shape mismatch for parameter " + name);
    if ((p->group == ParamGroup::kBase ? 0 : 1) != group)
      throw std::runtime_error("group mismatch for parameter " + name);
    read_doubles(f, p->value.data);
  }
  if (read_pod<uint8_t>(f)) {
    out.state = std::make_unique<TrainerState>(*out.model);
    out.state->adam.load(f);
    out.state->rng.load_state(read_str(f));
    out.state->next_epoch = read_pod<int32_t>(f);
  }
  return out;
}

}  // namespace causarc
