#include "causarc/latent.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace causarc {

ExplEncoderP make_expl_encoder(ParamStore& ps, const ModelConfig& cfg, ParamGroup g) {
  ExplEncoderP p;
  p.embed = &ps.add("expl_enc.embed", cfg.vocab_size, cfg.d, g, Init::kFanIn);
  p.pos = &ps.add("expl_enc.pos", cfg.max_expl_len + 2, cfg.d, g, Init::kFanIn);
  for (int l = 0; l < cfg.expl_encoder_layers; ++l)
    p.layers.push_back(make_encoder_layer(ps, "expl_enc.layer" + std::to_string(l), cfg.d,
                                          cfg.n_heads, cfg.ffn_multiplier, g));
  p.final_ln = make_ln(ps, "expl_enc.final_ln", cfg.d, g);
  p.mu_hidden = make_linear(ps, "expl_enc.mu_hidden", cfg.d, cfg.d, g);
  p.mu_out = make_linear(ps, "expl_enc.mu_out", cfg.d, cfg.d_f, g);
  p.sig_hidden = make_linear(ps, "expl_enc.sig_hidden", cfg.d, cfg.d, g);
  p.sig_out = make_linear(ps, "expl_enc.sig_out", cfg.d, cfg.d_f, g);
  return p;
}

LatentVars encode_explanation(Tape& t, const ExplEncoderP& p, const std::vector<int>& tokens,
                              Var* cls_out) {
  if (tokens.empty()) throw std::invalid_argument("encode_explanation: empty token sequence");
  std::vector<int> with_cls;
  with_cls.reserve(tokens.size() + 1);
  with_cls.push_back(kClsId);
  with_cls.insert(with_cls.end(), tokens.begin(), tokens.end());
  int n = static_cast<int>(with_cls.size());
  if (n > t.val(t.param(*p.pos)).rows)
    throw std::invalid_argument("encode_explanation: sequence exceeds positional table");
  std::vector<int> pos_ids(n);
  std::iota(pos_ids.begin(), pos_ids.end(), 0);
  Var x = t.add(t.rows_of(t.param(*p.embed), with_cls), t.rows_of(t.param(*p.pos), pos_ids));
  for (const auto& layer : p.layers) x = encoder_layer(t, layer, x);
  Var cls = t.slice_rows(apply_ln(t, p.final_ln, x), 0, 1);
  if (cls_out) *cls_out = cls;
  LatentVars out;
  out.mu = linear(t, p.mu_out, t.tanh_(linear(t, p.mu_hidden, cls)));
  Var lv = linear(t, p.sig_out, t.tanh_(linear(t, p.sig_hidden, cls)));
  out.log_var = t.clamp(lv, kLogVarMin, kLogVarMax);
  return out;
}

LatentGaussian encode_explanation_plain(const ExplEncoderP& p, const std::vector<int>& tokens) {
  Tape t(false);
  LatentVars lv = encode_explanation(t, p, tokens);
  return {t.val(lv.mu), t.val(lv.log_var)};
}

InterventionChoice intervene_select(const ExplanationSequence& generated,
                                    const ExplanationSequence& ground_truth, double epsilon,
                                    RngStream& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("intervene_select: epsilon must be in [0, 1]");
  InterventionChoice c;
  c.used_ground_truth = rng.bernoulli(epsilon);
  c.chosen = c.used_ground_truth ? &ground_truth : &generated;
  return c;
}

Var sample_latent(Tape& t, const LatentVars& g, const Matrix& eps_noise) {
  if (!t.val(g.mu).same_shape(eps_noise))
    throw std::invalid_argument("sample_latent: noise shape must match mu");
  Var sigma = t.exp_(t.scale(g.log_var, 0.5));
  return t.add(g.mu, t.mul(t.input(eps_noise), sigma));
}

Matrix sample_latent_plain(const LatentGaussian& g, RngStream& rng) {
  Matrix out = g.mu;
  for (size_t i = 0; i < out.size(); ++i)
    out.data[i] += rng.normal() * std::exp(0.5 * g.log_var.data[i]);
  return out;
}

Var kl_diag_gaussians(Tape& t, const LatentVars& q, const LatentVars& p) {
  Var lv_q = t.clamp(q.log_var, kLogVarMin, kLogVarMax);
  Var lv_p = t.clamp(p.log_var, kLogVarMin, kLogVarMax);
  Var diff_lv = t.sub(lv_q, lv_p);
  Var ratio = t.exp_(diff_lv);  // sigma_q^2 / sigma_p^2
  Var dmu = t.sub(p.mu, q.mu);
  Var maha = t.mul(t.mul(dmu, dmu), t.exp_(t.scale(lv_p, -1.0)));
  Var terms = t.add_scalar(t.sub(t.add(ratio, maha), diff_lv), -1.0);
  return t.scale(t.sum_all(terms), 0.5);
}

double kl_diag_gaussians(const LatentGaussian& q, const LatentGaussian& p) {
  if (!q.mu.same_shape(p.mu) || !q.log_var.same_shape(p.log_var))
    throw std::invalid_argument("kl_diag_gaussians: shape mismatch");
  auto cl = [](double x) { return x < kLogVarMin ? kLogVarMin : (x > kLogVarMax ? kLogVarMax : x); };
  double acc = 0.0;
  for (size_t i = 0; i < q.mu.size(); ++i) {
    double lq = cl(q.log_var.data[i]);
    double lp = cl(p.log_var.data[i]);
    double dmu = p.mu.data[i] - q.mu.data[i];
    acc += std::exp(lq - lp) + dmu * dmu * std::exp(-lp) - 1.0 + lp - lq;
  }
  return 0.5 * acc;
}

double diag_gaussian_log_pdf(const LatentGaussian& g, const Matrix& x) {
  if (!g.mu.same_shape(x)) throw std::invalid_argument("diag_gaussian_log_pdf: shape mismatch");
  constexpr double kLog2Pi = 1.8378770664093454836;
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double lv = g.log_var.data[i];
    double d = x.data[i] - g.mu.data[i];
    acc += -0.5 * (kLog2Pi + lv + d * d * std::exp(-lv));
  }
  return acc;
}

}  // namespace causarc
