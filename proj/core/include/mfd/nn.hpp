#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mfd/schedule.hpp"
#include "mfd/types.hpp"

namespace mfd {

// Dense layer y = W x + b applied to a D x B batch.
struct Linear {
  Mat w;
  Mat b;  // out x 1
  Linear() = default;
  Linear(int in, int out, Rng& rng, bool zero_init = false);
  Mat forward(const Mat& x) const;
  // Accumulates into (dw, db); returns dx.
  Mat backward(const Mat& x, const Mat& dy, Mat& dw, Mat& db) const;
};

struct LayerNorm {
  static constexpr double kEps = 1e-8;
  Mat gamma;  // h x 1
  Mat beta;
  LayerNorm() = default;
  explicit LayerNorm(int h);
  // Returns the affine output; xhat and inv_std are kept for backward.
  Mat forward(const Mat& x, Mat* xhat = nullptr, Vec* inv_std = nullptr) const;
  Mat backward(const Mat& xhat, const Vec& inv_std, const Mat& dy, Mat& dgamma, Mat& dbeta) const;
};

Mat silu(const Mat& x);
Mat silu_backward(const Mat& x, const Mat& dy);

struct ScoreNetConfig {
  int input_dim = 2;
  int hidden = 128;
  int n_blocks = 2;
  int time_embed_dim = 128;
  int n_freqs = 16;
};

using Grads = std::vector<Mat>;

// Residual MLP score model s(x, t) conditioned on Fourier features of logSNR(t).
class ScoreNet {
 public:
  ScoreNet(const ScoreNetConfig& cfg, const NoiseSchedule& schedule, Rng& rng);

  const ScoreNetConfig& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return schedule_; }

  // Raw [sin, cos](f_i * logSNR) features, length 2 * n_freqs.
  Vec fourier_features(double t) const;
  const std::vector<double>& frequencies() const { return freqs_; }
  // Conditioning vector after the two-layer time MLP.
  Vec time_embedding(double t) const;

  Mat forward(const Mat& x, const Vec& t) const;
  Vec forward(const Vec& x, double t) const;

  // Variance-weighted DSM loss on x_t = alpha x0 + sigma eps; fills grads
  // (same layout as parameters()) when non-null.
  double dsm_loss_and_grad(const Mat& x0, const Mat& eps, const Vec& t, Grads* grads,
                           double weight_scale = 1.0) const;

  std::vector<Mat*> parameters();
  std::vector<const Mat*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t n_parameters() const;
  Grads zero_grads() const;

 private:
  struct Block {
    LayerNorm ln1;
    Linear fc1;
    Linear cond;
    LayerNorm ln2;
    Linear fc2;
  };
  struct Tape;

  Mat time_features(const Vec& t) const;
  Mat run(const Mat& x, const Vec& t, Tape* tape) const;
  void backprop(const Tape& tape, const Mat& dout, Grads& g) const;

  ScoreNetConfig cfg_;
  NoiseSchedule schedule_;
  std::vector<double> freqs_;
  double lambda_mid_ = 0.0;
  double lambda_half_ = 1.0;
  Linear t1_, t2_, in_;
  std::vector<Block> blocks_;
  Linear out_;
};

// Plain MLP R^D -> R^out with SiLU hidden activations and a zero-init head.
class Mlp {
 public:
  Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng);
  int input_dim() const { return in_dim_; }
  Mat forward(const Mat& x) const;
  // Returns the loss gradient w.r.t. the input and accumulates parameter grads.
  Mat backward(const Mat& x, const Mat& dout, Grads& grads) const;
  std::vector<Mat*> parameters();
  std::vector<const Mat*> parameters() const;
  Grads zero_grads() const;

 private:
  int in_dim_;
  std::vector<Linear> layers_;
};

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 1.0;
  int warmup_steps = 100;
};

struct OptimState {
  AdamWConfig cfg;
  std::vector<Mat> m;
  std::vector<Mat> v;
  long step = 0;
};

OptimState make_optim_state(const std::vector<const Mat*>& params, const AdamWConfig& cfg);
double global_norm(const Grads& g);
// Rescales g in place so its global norm is at most max_norm; returns the pre-clip norm.
double clip_global_norm(Grads& g, double max_norm);
// Clip, then one decoupled-weight-decay Adam update with linear warmup.
// Clips grads in place when clip_norm > 0.
void adamw_step(const std::vector<Mat*>& params, Grads& grads, OptimState& opt);
void adamw_step(ScoreNet& net, Grads& grads, OptimState& opt);

struct TrainConfig {
  int steps = 1000;
  int batch_size = 512;
  AdamWConfig optim;
  unsigned seed = 0;
};

// Trains on a fixed data cloud; calls `on_step(step, loss)` after each update.
std::vector<double> train_score_net(ScoreNet& net, const Cloud& data, const TrainConfig& cfg,
                                    const std::function<void(int, double)>& on_step = {});

}  // namespace mfd
