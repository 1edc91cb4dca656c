#include "mfd/nn.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

void fan_in_uniform(Mat& m, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
}


}  // namespace

Linear::Linear(int in, int out, Rng& rng, bool zero_init) : w(out, in), b(out, 1) {
  if (zero_init) {
    w.setZero();
    b.setZero();
  } else {
    fan_in_uniform(w, in, rng);
    fan_in_uniform(b, in, rng);
  }
}

Mat Linear::forward(const Mat& x) const {
  Mat y(w.rows(), x.cols());
  y.noalias() = w * x;
  y.colwise() += b.col(0);
  return y;
}

Mat Linear::backward(const Mat& x, const Mat& dy, Mat& dw, Mat& db) const {
  dw.noalias() += dy * x.transpose();
  db.col(0) += dy.rowwise().sum();
  Mat dx(w.cols(), dy.cols());
  dx.noalias() = w.transpose() * dy;
  return dx;
}

LayerNorm::LayerNorm(int h) : gamma(Mat::Ones(h, 1)), beta(Mat::Zero(h, 1)) {}

Mat LayerNorm::forward(const Mat& x, Mat* xhat_out, Vec* inv_out) const {
  const Eigen::Index h = x.rows(), n = x.cols();
  Mat y(h, n);
  Vec inv(n);
  if (xhat_out) xhat_out->resize(h, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto xc = x.col(j).array();
    const double mu = xc.mean();
    const double iv = 1.0 / std::sqrt((xc - mu).square().sum() / static_cast<double>(h) + kEps);
    inv[j] = iv;
    if (xhat_out) {
      xhat_out->col(j).array() = (xc - mu) * iv;
      y.col(j).array() = xhat_out->col(j).array() * gamma.col(0).array() + beta.col(0).array();
    } else {
      y.col(j).array() = (xc - mu) * iv * gamma.col(0).array() + beta.col(0).array();
    }
  }
  if (inv_out) *inv_out = std::move(inv);
  return y;
}

Mat LayerNorm::backward(const Mat& xhat, const Vec& inv_std, const Mat& dy, Mat& dgamma,
                        Mat& dbeta) const {
  const Eigen::Index h = xhat.rows(), n = xhat.cols();
  const auto g = gamma.col(0).array();
  Mat dx(h, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto d = dy.col(j).array();
    const auto xh = xhat.col(j).array();
    dgamma.col(0).array() += d * xh;
    dbeta.col(0).array() += d;
    auto dxh = dx.col(j).array();
    dxh = d * g;
    const double m1 = dxh.mean();
    const double m2 = (dxh * xh).mean();
    dxh = (dxh - m1 - xh * m2) * inv_std[j];
  }
  return dx;
}

Mat silu(const Mat& x) { return (x.array() / (1.0 + (-x.array()).exp())).matrix(); }

Mat silu_backward(const Mat& x, const Mat& dy) {
  Mat s = (1.0 + (-x.array()).exp()).inverse().matrix();
  s.array() = dy.array() * s.array() * (1.0 + x.array() * (1.0 - s.array()));
  return s;
}

struct ScoreNet::Tape {
  struct BlockTape {
    Mat h_in, xhat1, u1, a1, z1, xhat2, u2, a2;
    Vec inv1, inv2;
  };
  Mat x, feat, t1_pre, t1_act, c, h_final;
  Vec sigma;
  std::vector<BlockTape> blocks;
};

ScoreNet::ScoreNet(const ScoreNetConfig& cfg, const NoiseSchedule& schedule, Rng& rng)
    : cfg_(cfg), schedule_(schedule) {
  if (cfg.input_dim < 1 || cfg.hidden < 1 || cfg.n_blocks < 0 || cfg.n_freqs < 1 || cfg.time_embed_dim < 1)
    throw InvalidArgument("invalid ScoreNet configuration");
  const double lo = schedule_.log_snr(schedule_.t_max());
  const double hi = schedule_.log_snr(schedule_.t_min());
  lambda_mid_ = 0.5 * (lo + hi);
  lambda_half_ = std::max(0.5 * (hi - lo), 1e-12);
  // Lowest frequency keeps the embedding injective on [-1, 1]; highest
  // resolves about 1/64 of the range.
  for (int i = 0; i < cfg.n_freqs; ++i) {
    double frac = cfg.n_freqs > 1 ? static_cast<double>(i) / (cfg.n_freqs - 1) : 0.0;
    freqs_.push_back(0.5 * std::numbers::pi * std::pow(64.0, frac));
  }
  const int e = cfg.time_embed_dim, h = cfg.hidden;
  t1_ = Linear(2 * cfg.n_freqs, e, rng);
  t2_ = Linear(e, e, rng);
  in_ = Linear(cfg.input_dim, h, rng);
  for (int i = 0; i < cfg.n_blocks; ++i) {
    Block b;
    b.ln1 = LayerNorm(h);
    b.fc1 = Linear(h, h, rng);
    b.cond = Linear(e, h, rng);
    b.ln2 = LayerNorm(h);
    b.fc2 = Linear(h, h, rng);
    blocks_.push_back(std::move(b));
  }
  out_ = Linear(h, cfg.input_dim, rng, true);
}

Vec ScoreNet::fourier_features(double t) const {
  const double lam = (schedule_.log_snr(t) - lambda_mid_) / lambda_half_;
  const int n = cfg_.n_freqs;
  Vec f(2 * n);
  for (int i = 0; i < n; ++i) {
    f[i] = std::sin(freqs_[i] * lam);
    f[n + i] = std::cos(freqs_[i] * lam);
  }
  return f;
}

Mat ScoreNet::time_features(const Vec& t) const {
  Mat f(2 * cfg_.n_freqs, t.size());
  for (Eigen::Index j = 0; j < t.size(); ++j) f.col(j) = fourier_features(t[j]);
  return f;
}

Vec ScoreNet::time_embedding(double t) const {
  Mat f = fourier_features(t);
  return t2_.forward(silu(t1_.forward(f))).col(0);
}

Mat ScoreNet::run(const Mat& x, const Vec& t, Tape* tape) const {
  if (x.rows() != cfg_.input_dim || x.cols() != t.size()) throw InvalidArgument("ScoreNet input shape mismatch");
  const Eigen::Index n = x.cols();
  Vec sigma(n);
  for (Eigen::Index j = 0; j < n; ++j) sigma[j] = schedule_.sigma(t[j]);

  const bool shared_t = !tape && n > 0 && (t.array() == t[0]).all();
  Mat feat = shared_t ? Mat(fourier_features(t[0])) : time_features(t);
  Mat t1_pre = t1_.forward(feat);
  Mat t1_act = silu(t1_pre);
  Mat c = t2_.forward(t1_act);

  Mat h = in_.forward(x);
  if (tape) tape->blocks.resize(blocks_.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    Mat xhat1, xhat2;
    Vec inv1, inv2;
    Mat u1 = b.ln1.forward(h, tape ? &xhat1 : nullptr, tape ? &inv1 : nullptr);
    Mat a1 = silu(u1);
    Mat z1 = b.fc1.forward(a1);
    if (shared_t)
      z1.colwise() += b.cond.forward(c).col(0);
    else
      z1 += b.cond.forward(c);
    Mat u2 = b.ln2.forward(z1, tape ? &xhat2 : nullptr, tape ? &inv2 : nullptr);
    Mat a2 = silu(u2);
    Mat z2 = b.fc2.forward(a2);
    if (tape) {
      auto& bt = tape->blocks[i];
      bt.h_in = h;
      bt.xhat1 = std::move(xhat1);
      bt.inv1 = std::move(inv1);
      bt.u1 = std::move(u1);
      bt.a1 = std::move(a1);
      bt.z1 = std::move(z1);
      bt.xhat2 = std::move(xhat2);
      bt.inv2 = std::move(inv2);
      bt.u2 = std::move(u2);
      bt.a2 = std::move(a2);
    }
    h += z2;
  }
  Mat out = out_.forward(h);
  out = out.array().rowwise() / sigma.transpose().array();
  if (!out.allFinite()) throw NonFiniteActivation("ScoreNet produced a non-finite output");
  if (tape) {
    tape->x = x;
    tape->feat = std::move(feat);
    tape->t1_pre = std::move(t1_pre);
    tape->t1_act = std::move(t1_act);
    tape->c = std::move(c);
    tape->h_final = std::move(h);
    tape->sigma = std::move(sigma);
  }
  return out;
}

Mat ScoreNet::forward(const Mat& x, const Vec& t) const { return run(x, t, nullptr); }

Vec ScoreNet::forward(const Vec& x, double t) const {
  Mat xm = x;
  return run(xm, Vec::Constant(1, t), nullptr).col(0);
}

void ScoreNet::backprop(const Tape& tape, const Mat& ds, Grads& g) const {
  // Parameter layout matches parameters().
  Mat dout = ds.array().rowwise() / tape.sigma.transpose().array();
  const std::size_t ob = 6 + 10 * blocks_.size();
  Mat dh = out_.backward(tape.h_final, dout, g[ob], g[ob + 1]);
  Mat dc = Mat::Zero(tape.c.rows(), tape.c.cols());
  for (std::size_t k = blocks_.size(); k-- > 0;) {
    const Block& b = blocks_[k];
    const auto& bt = tape.blocks[k];
    const std::size_t base = 6 + 10 * k;
    Mat da2 = b.fc2.backward(bt.a2, dh, g[base + 8], g[base + 9]);
    Mat du2 = silu_backward(bt.u2, da2);
    Mat dz1 = b.ln2.backward(bt.xhat2, bt.inv2, du2, g[base + 6], g[base + 7]);
    Mat da1 = b.fc1.backward(bt.a1, dz1, g[base + 2], g[base + 3]);
    dc += b.cond.backward(tape.c, dz1, g[base + 4], g[base + 5]);
    Mat du1 = silu_backward(bt.u1, da1);
    dh += b.ln1.backward(bt.xhat1, bt.inv1, du1, g[base + 0], g[base + 1]);
  }
  in_.backward(tape.x, dh, g[4], g[5]);
  Mat dt1 = t2_.backward(tape.t1_act, dc, g[2], g[3]);
  t1_.backward(tape.feat, silu_backward(tape.t1_pre, dt1), g[0], g[1]);
}

double ScoreNet::dsm_loss_and_grad(const Mat& x0, const Mat& eps, const Vec& t, Grads* grads,
                                   double weight_scale) const {
  const Eigen::Index n = x0.cols();
  if (n == 0) throw InvalidArgument("empty DSM batch");
  Mat xt(x0.rows(), n);
  Vec var(n);
  Mat target(x0.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    ScheduleValues v = schedule_.eval(t[j]);
    xt.col(j) = v.alpha * x0.col(j) + v.sigma * eps.col(j);
    target.col(j) = -eps.col(j) / v.sigma;
    var[j] = v.var;
  }
  Tape tape;
  Mat s = run(xt, t, grads ? &tape : nullptr);
  Mat r = s - target;
  Vec per = r.colwise().squaredNorm().transpose();
  const double loss = weight_scale * var.dot(per) / static_cast<double>(n);
  if (grads) {
    const auto params = parameters();
    bool reuse = grads->size() == params.size();
    for (std::size_t i = 0; reuse && i < params.size(); ++i)
      reuse = (*grads)[i].rows() == params[i]->rows() && (*grads)[i].cols() == params[i]->cols();
    if (reuse)
      for (auto& m : *grads) m.setZero();
    else
      *grads = zero_grads();
    Mat ds = r.array().rowwise() * (2.0 * weight_scale / static_cast<double>(n) * var).transpose().array();
    backprop(tape, ds, *grads);
  }
  return loss;
}

std::vector<const Mat*> ScoreNet::parameters() const {
  std::vector<const Mat*> p{&t1_.w, &t1_.b, &t2_.w, &t2_.b, &in_.w, &in_.b};
  for (const auto& b : blocks_) {
    for (const Mat* m : {&b.ln1.gamma, &b.ln1.beta, &b.fc1.w, &b.fc1.b, &b.cond.w, &b.cond.b, &b.ln2.gamma,
                         &b.ln2.beta, &b.fc2.w, &b.fc2.b})
      p.push_back(m);
  }
  p.push_back(&out_.w);
  p.push_back(&out_.b);
  return p;
}

std::vector<Mat*> ScoreNet::parameters() {
  std::vector<Mat*> out;
  for (const Mat* m : std::as_const(*this).parameters()) out.push_back(const_cast<Mat*>(m));
  return out;
}

std::vector<std::string> ScoreNet::parameter_names() const {
  std::vector<std::string> n{"time1.w", "time1.b", "time2.w", "time2.b", "in.w", "in.b"};
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    for (const char* s : {"ln1.gamma", "ln1.beta", "fc1.w", "fc1.b", "cond.w", "cond.b", "ln2.gamma", "ln2.beta",
                          "fc2.w", "fc2.b"})
      n.push_back(p + s);
  }
  n.push_back("out.w");
  n.push_back("out.b");
  return n;
}

std::size_t ScoreNet::n_parameters() const {
  std::size_t n = 0;
  for (const Mat* m : parameters()) n += static_cast<std::size_t>(m->size());
  return n;
}

Grads ScoreNet::zero_grads() const {
  Grads g;
  for (const Mat* m : parameters()) g.push_back(Mat::Zero(m->rows(), m->cols()));
  return g;
}

Mlp::Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng) : in_dim_(input_dim) {
  int prev = input_dim;
  for (int h : hidden) {
    layers_.emplace_back(prev, h, rng);
    prev = h;
  }
  layers_.emplace_back(prev, output_dim, rng, true);
}

Mat Mlp::forward(const Mat& x) const {
  Mat a = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) a = silu(layers_[i].forward(a));
  return layers_.back().forward(a);
}

Mat Mlp::backward(const Mat& x, const Mat& dout, Grads& grads) const {
  std::vector<Mat> inputs{x}, pre;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    pre.push_back(layers_[i].forward(inputs.back()));
    inputs.push_back(silu(pre.back()));
  }
  const std::size_t last = layers_.size() - 1;
  Mat d = layers_[last].backward(inputs[last], dout, grads[2 * last], grads[2 * last + 1]);
  for (std::size_t i = last; i-- > 0;) {
    d = silu_backward(pre[i], d);
    d = layers_[i].backward(inputs[i], d, grads[2 * i], grads[2 * i + 1]);
  }
  return d;
}

std::vector<const Mat*> Mlp::parameters() const {
  std::vector<const Mat*> p;
  for (const auto& l : layers_) {
    p.push_back(&l.w);
    p.push_back(&l.b);
  }
  return p;
}

std::vector<Mat*> Mlp::parameters() {
  std::vector<Mat*> p;
  for (auto& l : layers_) {
    p.push_back(&l.w);
    p.push_back(&l.b);
  }
  return p;
}

Grads Mlp::zero_grads() const {
  Grads g;
  for (const Mat* m : parameters()) g.push_back(Mat::Zero(m->rows(), m->cols()));
  return g;
}

OptimState make_optim_state(const std::vector<const Mat*>& params, const AdamWConfig& cfg) {
  OptimState s;
  s.cfg = cfg;
  for (const Mat* p : params) {
    s.m.push_back(Mat::Zero(p->rows(), p->cols()));
    s.v.push_back(Mat::Zero(p->rows(), p->cols()));
  }
  return s;
}

double global_norm(const Grads& g) {
  double s = 0.0;
  for (const auto& m : g) s += m.squaredNorm();
  return std::sqrt(s);
}

double clip_global_norm(Grads& g, double max_norm) {
  const double n = global_norm(g);
  if (n > max_norm && n > 0.0)
    for (auto& m : g) m *= max_norm / n;
  return n;
}

void adamw_step(const std::vector<Mat*>& params, Grads& grads, OptimState& opt) {
  if (params.size() != grads.size() || params.size() != opt.m.size())
    throw InvalidArgument("optimizer state does not match parameters");
  const AdamWConfig& c = opt.cfg;
  if (c.clip_norm > 0.0) clip_global_norm(grads, c.clip_norm);
  ++opt.step;
  const double warm = c.warmup_steps > 0 ? std::min(1.0, static_cast<double>(opt.step) / c.warmup_steps) : 1.0;
  const double lr = c.lr * warm;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i];
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols())
      throw InvalidArgument("gradient shape mismatch");
    double* pw = p.data();
    double* m = opt.m[i].data();
    double* v = opt.v[i].data();
    const double* g = grads[i].data();
    bool bad = false;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      pw[k] -= lr * ((m[k] / bc1) / (std::sqrt(v[k] / bc2) + c.eps) + c.weight_decay * pw[k]);
      bad |= !(std::abs(pw[k]) <= std::numeric_limits<double>::max());
    }
    if (bad) throw NonFiniteState("parameter became non-finite");
  }
}

void adamw_step(ScoreNet& net, Grads& grads, OptimState& opt) { adamw_step(net.parameters(), grads, opt); }

std::vector<double> train_score_net(ScoreNet& net, const Cloud& data, const TrainConfig& cfg,
                                    const std::function<void(int, double)>& on_step) {
  if (data.empty()) throw InvalidArgument("empty training set");
  Rng rng(cfg.seed);
  const NoiseSchedule& sch = net.schedule();
  OptimState opt = make_optim_state(std::as_const(net).parameters(), cfg.optim);
  const int d = net.config().input_dim;
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::uniform_real_distribution<double> tdist(sch.t_min(), sch.t_max());
  std::vector<double> losses;
  Grads g;
  for (int step = 0; step < cfg.steps; ++step) {
    Mat x0(d, cfg.batch_size), eps(d, cfg.batch_size);
    Vec t(cfg.batch_size);
    for (int j = 0; j < cfg.batch_size; ++j) {
      x0.col(j) = data[pick(rng)];
      eps.col(j) = gaussian_vec(rng, d);
      t[j] = tdist(rng);
    }
    double loss = net.dsm_loss_and_grad(x0, eps, t, &g);
    adamw_step(net, g, opt);
    losses.push_back(loss);
    if (on_step) on_step(step + 1, loss);
  }
  return losses;
}

}  // namespace mfd
