#include "causarc/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace causarc {

DecoderP make_decoder(ParamStore& ps, const ModelConfig& cfg, ParamGroup g) {
  DecoderP p;
  p.embed = &ps.add("decoder.embed", cfg.vocab_size, cfg.d, g, Init::kFanIn);
  p.pos = &ps.add("decoder.pos", cfg.max_expl_len + 1, cfg.d, g, Init::kFanIn);
  for (int l = 0; l < cfg.decoder_layers; ++l)
    p.layers.push_back(make_decoder_layer(ps, "decoder.layer" + std::to_string(l), cfg.d,
                                          cfg.n_heads, cfg.ffn_multiplier, g));
  p.final_ln = make_ln(ps, "decoder.final_ln", cfg.d, g);
  p.lm_head = make_linear(ps, "decoder.lm_head", cfg.d, cfg.vocab_size, g);
  return p;
}

static Var decoder_hidden(Tape& t, const DecoderP& p, Var M, const std::vector<int>& tokens) {
  int n = static_cast<int>(tokens.size());
  if (n < 1) throw std::invalid_argument("decoder: empty token sequence");
  if (n > t.val(t.param(*p.pos)).rows)
    throw std::invalid_argument("decoder: sequence exceeds positional table");
  std::vector<int> pos_ids(n);
  std::iota(pos_ids.begin(), pos_ids.end(), 0);
  Var x = t.add(t.rows_of(t.param(*p.embed), tokens), t.rows_of(t.param(*p.pos), pos_ids));
  Matrix mask = causal_mask(n);
  for (const auto& layer : p.layers) x = decoder_layer(t, layer, x, M, &mask);
  return apply_ln(t, p.final_ln, x);
}

Var decoder_logprobs(Tape& t, const DecoderP& p, Var M, const std::vector<int>& tokens) {
  Var h = decoder_hidden(t, p, M, tokens);
  return t.log_softmax_rows(linear(t, p.lm_head, h));
}

// Weight 1 for predictions up to and including the first EOS, 0 afterwards.
static std::vector<double> eos_weights(const std::vector<int>& targets) {
  std::vector<double> w(targets.size(), 0.0);
  bool done = false;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (done) break;
    w[i] = 1.0;
    if (targets[i] == kEosId) done = true;
  }
  return w;
}

Var explanation_loss(Tape& t, const DecoderP& p, Var M, const ExplanationSequence& target) {
  const auto& toks = target.tokens;
  if (toks.size() < 2 || toks.front() != kBosId)
    throw std::invalid_argument("explanation_loss: target must start with BOS and contain >= 2 tokens");
  std::vector<int> inputs(toks.begin(), toks.end() - 1);
  std::vector<int> targets(toks.begin() + 1, toks.end());
  Var lp = decoder_logprobs(t, p, M, inputs);
  return t.masked_mean_nll(lp, targets, eos_weights(targets));
}

double explanation_token_accuracy(const DecoderP& p, const Matrix& M,
                                  const ExplanationSequence& target) {
  const auto& toks = target.tokens;
  if (toks.size() < 2) return 0.0;
  Tape t(false);
  Var mv = t.input(M);
  std::vector<int> inputs(toks.begin(), toks.end() - 1);
  std::vector<int> targets(toks.begin() + 1, toks.end());
  const Matrix& lp = t.val(decoder_logprobs(t, p, mv, inputs));
  auto w = eos_weights(targets);
  double hit = 0.0, total = 0.0;
  for (int i = 0; i < lp.rows; ++i) {
    if (w[i] == 0.0) continue;
    int arg = 0;
    for (int j = 1; j < lp.cols; ++j)
      if (lp.at(i, j) > lp.at(i, arg)) arg = j;
    total += 1.0;
    if (arg == targets[i]) hit += 1.0;
  }
  return total == 0.0 ? 0.0 : hit / total;
}

namespace {

struct Beam {
  std::vector<int> tokens;
  double logprob = 0.0;
  bool done = false;
  double score() const {
    // length-normalized over generated tokens (excluding BOS)
    return logprob / static_cast<double>(tokens.size() - 1);
  }
};

Matrix next_logprobs(const DecoderP& p, const Matrix& M, const std::vector<int>& prefix) {
  Tape t(false);
  Var mv = t.input(M);
  const Matrix& lp = t.val(decoder_logprobs(t, p, mv, prefix));
  Matrix last(1, lp.cols);
  for (int j = 0; j < lp.cols; ++j) last.at(0, j) = lp.at(lp.rows - 1, j);
  return last;
}

}  // namespace

ExplanationSequence decode_explanation(const DecoderP& p, const Matrix& M, const ModelConfig& cfg,
                                       DecodeMode mode, int beam_width) {
  int width = mode == DecodeMode::kGreedy ? 1 : std::max(1, beam_width);
  std::vector<Beam> beams = {Beam{{kBosId}, 0.0, false}};
  std::vector<Beam> completed;

  for (int step = 1; step <= cfg.max_expl_len && !beams.empty(); ++step) {
    std::vector<Beam> cands;
    for (const auto& b : beams) {
      Matrix lp = next_logprobs(p, M, b.tokens);
      if (step == cfg.max_expl_len) {
        Beam nb = b;
        nb.tokens.push_back(kEosId);
        nb.logprob += lp.at(0, kEosId);
        nb.done = true;
        cands.push_back(std::move(nb));
        continue;
      }
      for (int tok = 0; tok < lp.cols; ++tok) {
        Beam nb = b;
        nb.tokens.push_back(tok);
        nb.logprob += lp.at(0, tok);
        nb.done = tok == kEosId;
        cands.push_back(std::move(nb));
      }
    }
    // stable: candidates were generated in (beam, token) order, so equal
    // scores resolve to the lowest token id
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Beam& a, const Beam& b) { return a.logprob > b.logprob; });
    // keep the top `width` overall; finished ones retire, shrinking the
    // active set, which is what makes width 1 identical to greedy
    beams.clear();
    for (int i = 0; i < width && i < static_cast<int>(cands.size()); ++i) {
      if (cands[i].done)
        completed.push_back(std::move(cands[i]));
      else
        beams.push_back(std::move(cands[i]));
    }
  }

  if (completed.empty()) throw std::logic_error("decode_explanation: no completed hypothesis");
  const Beam* best = &completed[0];
  for (const auto& c : completed)
    if (c.score() > best->score()) best = &c;

  ExplanationSequence e;
  e.tokens = best->tokens;
  e.is_ground_truth = false;
  return e;
}

}  // namespace causarc
