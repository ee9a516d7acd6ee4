#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "netburst/common.hpp"

namespace netburst {

// Decoder-only causal next-token model: learned token + position embeddings,
// pre-norm residual blocks (attention, GELU MLP), final layernorm, untied
// output projection. Everything runs in 64-bit floats so training is
// bit-reproducible for a given seed and gradient checks are exact.
struct ModelConfig {
  int vocab = 0;              // token count; an internal PAD id (== vocab) pads short slices
  int context = 512;          // max context length
  int layers = 2;             // paper-scale 12
  int hidden = 64;            // paper-scale 512
  int heads = 4;
  double learning_rate = 1e-4;
  int batch = 32;
  int patience = 10;          // validation evaluations without improvement
  int max_steps = 2000;
  int eval_every = 50;        // steps between validation evaluations
  std::uint64_t seed = 1;

  void validate() const;
};

struct LossPoint {
  long step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  long steps = 0;
  double final_train_loss = 0.0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  std::vector<LossPoint> loss_curve;
};

struct GenMode {
  enum Kind { greedy, sample };
  Kind kind = greedy;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  static GenMode Greedy() { return {}; }
  static GenMode Sample(double temperature, std::uint64_t seed) {
    GenMode m;
    m.kind = sample;
    m.temperature = temperature;
    m.seed = seed;
    return m;
  }
};

// Flat parameter layout, in order (all matrices row-major, stored [in][out]):
//   tok_emb   (vocab+1) x hidden        row `vocab` is the PAD embedding
//   pos_emb   context x hidden
//   per layer:
//     ln1_gamma, ln1_beta               hidden each
//     w_qkv hidden x 3*hidden, b_qkv 3*hidden
//     w_attn hidden x hidden,  b_attn hidden
//     ln2_gamma, ln2_beta               hidden each
//     w_fc  hidden x 4*hidden, b_fc  4*hidden
//     w_proj 4*hidden x hidden, b_proj hidden
//   lnf_gamma, lnf_beta                 hidden each
//   w_out hidden x vocab, b_out vocab
class TokenModel {
 public:
  TokenModel() = default;

  static std::size_t param_count(const ModelConfig& config);
  // Gaussian(0, 0.02) weights, zero biases, unit layernorm gains; the draw
  // order is the layout order, so initialization is seed-deterministic.
  static TokenModel random_init(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }

  // Distribution over the next token given a non-empty context; contexts
  // longer than config.context are truncated to the most recent tokens.
  std::vector<double> next_token_dist(const std::vector<int>& context) const;

  // Appends n tokens autoregressively (argmax or temperature sampling).
  std::vector<int> generate(const std::vector<int>& context, int n,
                            const GenMode& mode) const;

  // Mean of final-layernorm hidden states over all positions of seq,
  // teacher-forced; sequences beyond config.context are processed in
  // consecutive chunks so every position contributes once.
  std::vector<double> embed(const std::vector<int>& seq) const;

  // Mean next-token cross-entropy of one sequence (nats/token).
  double sequence_loss(const std::vector<int>& seq) const;

  // Checkpoint: text header + parameters as consecutive little-endian IEEE-754
  // doubles in layout order; loading reproduces outputs bit-exactly.
  void save(const std::string& path) const;
  static TokenModel load(const std::string& path);

 private:
  ModelConfig config_;
  std::vector<double> params_;
  bool trained_ = false;

  friend std::pair<TokenModel, TrainReport> train(
      const ModelConfig&, const std::vector<std::vector<int>>&,
      const std::vector<std::vector<int>>&);
};

// Adam on next-token cross-entropy over context-window slices sampled
// uniformly from the training sequences (short sequences left-padded with the
// PAD token, whose targets are excluded from the loss). Every eval_every
// steps the validation loss is computed; the returned model is the checkpoint
// with the best validation loss, and training stops early after `patience`
// evaluations without improvement. Bit-deterministic given config.seed.
// With no validation sequences, checkpoint selection and early stopping are
// disabled and best_val_loss echoes the final training loss.
std::pair<TokenModel, TrainReport> train(
    const ModelConfig& config, const std::vector<std::vector<int>>& train_seqs,
    const std::vector<std::vector<int>>& val_seqs);

// Mean next-token cross-entropy over all predictable positions of seqs.
double evaluate_loss(const TokenModel& model,
                     const std::vector<std::vector<int>>& seqs);

// Fraction of positions whose argmax prediction matches the next token.
double greedy_accuracy(const TokenModel& model,
                       const std::vector<std::vector<int>>& seqs);

// Compares the analytic gradient of the sequence cross-entropy against
// central finite differences (step 1e-5) at the given parameter indices of a
// seed-initialized model; returns the max relative error
// |a-n| / max(1e-6, |a|, |n|).
double grad_check(const ModelConfig& config, const std::vector<int>& seq,
                  const std::vector<std::size_t>& indices);

// One draw from a next-token distribution: argmax for greedy (ties to the
// lowest index), temperature-scaled categorical otherwise. The forecaster
// threads its own Rng through successive draws.
class Rng;
int sample_from_dist(const std::vector<double>& dist, const GenMode& mode,
                     Rng& rng);

}  // namespace netburst
