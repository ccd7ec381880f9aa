#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "causarc/report.hpp"

namespace causarc {

// Adam with bias correction and one learning rate per parameter group. Moment
// buffers are keyed by registration order, which checkpoints preserve.
class Adam {
 public:
  Adam(ParamStore& ps, double lr_base, double lr_new);

  void step();
  int64_t t() const { return t_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  ParamStore* ps_;
  double lr_base_, lr_new_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Everything train() mutates besides the model parameters, so a checkpoint
// written mid-run resumes bit-exactly: optimizer moments, the shuffle and
// sampling stream, and the next epoch index.
struct TrainerState {
  Adam adam;
  RngStream rng;
  int next_epoch = 0;

  explicit TrainerState(Model& m);
};

struct TrainOptions {
  int epochs = 0;        // <= 0 means cfg.epochs
  std::string out_dir;   // when set: per-epoch checkpoints, report.json, final.ckpt
  bool plot = false;     // also render loss.svg (needs out_dir)
  bool verbose = false;  // one line per epoch on stdout
};

struct EpochSummary {
  int epoch = 0;
  LossBreakdown mean_loss;  // averaged over the epoch's samples
  double weighted_f1 = 0.0;
  double token_accuracy = 0.0;
  int intervened = 0;  // training steps whose draw used the ground truth
};

struct TrainResult {
  std::vector<StepLoss> steps;  // batch means, in order
  std::vector<EpochSummary> epochs;
  nlohmann::json report;
};

// Thrown when a loss term goes non-finite. The offending batch is dumped as
// JSON next to the checkpoints (or to the current directory without out_dir).
class TrainNanError : public std::runtime_error {
 public:
  TrainNanError(const std::string& msg, std::string dump)
      : std::runtime_error(msg), dump_path(std::move(dump)) {}
  std::string dump_path;
};

TrainResult train(Model& m, TrainerState& st, const Dataset& ds, const TrainOptions& opt = {});

// Binary checkpoint: config text, feature dims, every named parameter as f64,
// and optionally the trainer state. Loading rebuilds the model from the
// embedded config and fails on any missing or shape-mismatched parameter.
void save_checkpoint(const std::string& path, const Model& m, const TrainerState* st = nullptr);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  std::unique_ptr<TrainerState> state;  // null when the file carries none
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace causarc
