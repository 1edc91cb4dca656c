#include "mfd/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfd/errors.hpp"

namespace mfd {

double eikonal_residual(const Potential& eta, const Vec& x, const Domain& domain) {
  if (!domain.contains(x)) throw OutsideDomain("eikonal residual requested outside the domain");
  return eta.gradient(x).squaredNorm() - 2.0 * eta.value(x);
}

double max_principal_angle(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) return 0.5 * M_PI;
  if (a.cols() == 0) return 0.0;
  // acos loses half the digits near 0, so small angles come from the sine side.
  const Mat ab = a.transpose() * b;
  const double s = std::clamp(Eigen::JacobiSVD<Mat>(b - a * ab).singularValues().maxCoeff(), 0.0, 1.0);
  if (s < 0.5) return std::asin(s);
  return std::acos(std::clamp(Eigen::JacobiSVD<Mat>(ab).singularValues().minCoeff(), 0.0, 1.0));
}

namespace {

Vec random_unit(Rng& rng, Eigen::Index d) {
  Vec v = gaussian_vec(rng, d);
  return v / v.norm();
}

Vec sample_in_ball(const Vec& c, double r, Rng& rng) {
  const auto d = c.size();
  double rad = r * std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
  return c + rad * random_unit(rng, d);
}

double op_norm_sym(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

MembershipReport check_membership(const Potential& eta, const Cloud& anchors, const std::vector<Mat>& tangents,
                                  const MembershipConfig& cfg, Rng& rng) {
  if (anchors.empty()) throw EmptyCloud("membership check needs anchors");
  if (tangents.size() != anchors.size()) throw InvalidArgument("one tangent basis per anchor is required");
  const double r = 0.5 * cfg.zeta_min;
  const Domain dom = Domain::balls(anchors, r);
  const auto d = anchors.front().size();
  std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
  MembershipReport rep;

  Cloud interior;
  interior.reserve(cfg.n_domain + anchors.size());
  for (std::size_t i = 0; i < cfg.n_domain; ++i) interior.push_back(sample_in_ball(anchors[pick(rng)], r, rng));
  interior.insert(interior.end(), anchors.begin(), anchors.end());
  rep.n_domain_points = interior.size();

  double eik = 0.0;
  for (const auto& x : interior) eik = std::max(eik, std::abs(eta.gradient(x).squaredNorm() - 2.0 * eta.value(x)));
  rep.eikonal = {eik <= cfg.eikonal_tol, eik};

  // Boundary points of the union: sphere points not strictly inside another ball.
  double min_dot = std::numeric_limits<double>::infinity();
  std::size_t nb = 0;
  for (std::size_t tries = 0; nb < cfg.n_boundary && tries < 20 * cfg.n_boundary; ++tries) {
    const std::size_t i = pick(rng);
    const Vec n = random_unit(rng, d);
    const Vec x = anchors[i] + r * n;
    bool inside_other = false;
    for (std::size_t j = 0; j < anchors.size() && !inside_other; ++j)
      if (j != i && (x - anchors[j]).norm() < r - 1e-12) inside_other = true;
    if (inside_other) continue;
    ++nb;
    min_dot = std::min(min_dot, eta.gradient(x).dot(n));
  }
  rep.n_boundary_points = nb;
  rep.non_escape = {nb > 0 && min_dot > 0.0, nb > 0 ? min_dot : 0.0};

  double anc = 0.0;
  for (const auto& y : anchors) anc = std::max(anc, std::abs(eta.value(y)));
  rep.anchoring = {anc <= cfg.anchor_tol, anc};

  const int target_rank = static_cast<int>(d) - cfg.k;
  int defects = 0;
  double worst_angle = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    Mat h = eta.hessian(anchors[i]);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()));
    const Vec& ev = es.eigenvalues();
    const double lmax = ev.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> ker;
    int rank = 0;
    for (Eigen::Index j = 0; j < ev.size(); ++j) {
      if (std::abs(ev[j]) >= cfg.rank_ratio * lmax && lmax > 0.0)
        ++rank;
      else
        ker.push_back(j);
    }
    if (rank != target_rank) ++defects;
    Mat kb(d, static_cast<Eigen::Index>(ker.size()));
    for (std::size_t j = 0; j < ker.size(); ++j) kb.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(ker[j]);
    worst_angle = std::max(worst_angle, max_principal_angle(tangents[i], kb));
  }
  rep.rank = {defects == 0, static_cast<double>(defects)};
  rep.angle = {worst_angle <= cfg.angle_max, worst_angle};

  // Derivative norms up to order three by finite differences.
  const double hfd = 1e-4;
  std::array<double, 3> dn{0.0, 0.0, 0.0};
  for (std::size_t s = 0; s < cfg.n_smooth; ++s) {
    const Vec x = s < interior.size() ? interior[s] : anchors[pick(rng)];
    dn[0] = std::max(dn[0], eta.gradient(x).norm());
    dn[1] = std::max(dn[1], op_norm_sym(eta.hessian(x)));
    const Vec v = random_unit(rng, d);
    const Vec xp = x + hfd * v;
    const Vec xm = x - hfd * v;
    if (dom.contains(xp) && dom.contains(xm))
      dn[2] = std::max(dn[2], op_norm_sym((eta.hessian(xp) - eta.hessian(xm)) / (2.0 * hfd)));
  }
  rep.derivative_norms = dn;
  double ratio = 0.0;
  for (int j = 0; j < 3; ++j) ratio = std::max(ratio, dn[j] / cfg.derivative_bounds[j]);
  rep.smoothness = {ratio <= 1.0, ratio};
  return rep;
}

Mat local_pca_tangent(const Cloud& points, const Vec& x_ref, double h, int k) {
  std::vector<const Vec*> nb;
  for (const auto& p : points)
    if ((p - x_ref).norm() <= h) nb.push_back(&p);
  if (static_cast<int>(nb.size()) < k + 1)
    throw TooFewNeighbors("found " + std::to_string(nb.size()) + " neighbours, need at least " + std::to_string(k + 1));
  const auto d = x_ref.size();
  Vec mean = Vec::Zero(d);
  for (const Vec* p : nb) mean += *p;
  mean /= static_cast<double>(nb.size());
  Mat cov = Mat::Zero(d, d);
  for (const Vec* p : nb) cov.noalias() += (*p - mean) * (*p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  const Vec& ev = es.eigenvalues();  // ascending
  const double top = ev[d - 1];
  if (!(top > 0.0) || ev[d - k] <= 1e-12 * top)
    throw TooFewNeighbors("neighbourhood covariance has rank below " + std::to_string(k));
  return es.eigenvectors().rightCols(k).rowwise().reverse();
}

ZeroSet extract_zero_set(const ScoreField& field, double t, const Cloud& seeds, double tol, int max_iter) {
  if (!(t > 0.0) || !(tol > 0.0) || max_iter < 1) throw InvalidArgument("extract_zero_set needs t, tol, max_iter > 0");
  ZeroSet out;
  for (const auto& seed : seeds) {
    SeedOutcome so;
    so.point = seed;
    const Vec s0 = field.eval(seed, t);
    if (s0.squaredNorm() == 0.0) {
      // A field that vanishes identically near the seed carries no zero-set information.
      const Vec probe = seed + Vec::Constant(seed.size(), 1e-6 / std::sqrt(static_cast<double>(seed.size())));
      if (field.eval(probe, t).squaredNorm() == 0.0) {
        out.seeds.push_back(so);
        ++out.n_not_converged;
        continue;
      }
    }
    Vec x = seed;
    for (int it = 1; it <= max_iter; ++it) {
      const Vec step = t * field.eval(x, t);
      if (!step.allFinite()) break;
      x += step;
      so.iterations = it;
      if (step.norm() < tol) {
        so.converged = true;
        break;
      }
    }
    so.point = x;
    if (so.converged && t * field.eval(x, t).norm() >= 10.0 * tol) so.converged = false;
    if (!so.converged) ++out.n_not_converged;
    out.seeds.push_back(so);
  }
  for (const auto& so : out.seeds) {
    if (!so.converged) continue;
    bool dup = false;
    for (const auto& p : out.points)
      if ((p - so.point).norm() <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.points.push_back(so.point);
  }
  return out;
}

DivergenceEstimate pme_loss(const Cloud& m_hat, const Cloud& data, const Vec& x_ref, double h, double t,
                            std::size_t n_mc, Rng& rng) {
  if (m_hat.empty()) throw EmptyCloud("pme loss needs a candidate cloud");
  std::vector<const Vec*> ball;
  for (const auto& p : data)
    if ((p - x_ref).norm() <= h) ball.push_back(&p);
  if (ball.empty()) throw EmptyNeighborhood("no data points inside the ball");
  if (n_mc < 2) throw InvalidArgument("pme loss needs n_mc >= 2");
  std::uniform_int_distribution<std::size_t> pick(0, ball.size() - 1);
  const double sd = std::sqrt(t);
  const auto d = x_ref.size();
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    Vec z;
    do {
      z = sd * gaussian_vec(rng, d);
    } while (z.norm() > h);
    const Vec x = *ball[pick(rng)] + z;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : m_hat) best = std::min(best, (x - m).squaredNorm());
    sum += best;
    sum2 += best * best;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), n_mc};
}

PotentialLoss potential_loss(const NetworkPotential& eta, const Mat& x0, const Mat& x, const Mat& anchors,
                             const PotentialTrainConfig& cfg, Grads* grads) {
  const auto d = x.rows();
  const auto b = x.cols();
  const double h = cfg.fd_h;
  // Column layout: [x | x + h e_0 | x - h e_0 | ... | anchors].
  Mat pts(d, b * (1 + 2 * d) + anchors.cols());
  pts.leftCols(b) = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    Mat xp = x, xm = x;
    xp.row(i).array() += h;
    xm.row(i).array() -= h;
    pts.middleCols(b * (1 + 2 * i), b) = xp;
    pts.middleCols(b * (2 + 2 * i), b) = xm;
  }
  if (anchors.cols() > 0) pts.rightCols(anchors.cols()) = anchors;
  const Vec v = eta.values(pts);

  Mat g(d, b);
  for (Eigen::Index i = 0; i < d; ++i)
    g.row(i) = (v.segment(b * (1 + 2 * i), b) - v.segment(b * (2 + 2 * i), b)).transpose() / (2.0 * h);
  const Vec eta_x = v.head(b);
  const Mat r = g - (x - x0);
  const Vec e = g.colwise().squaredNorm().transpose() - 2.0 * eta_x;
  const Vec ya = v.tail(anchors.cols());

  const double bd = static_cast<double>(b);
  PotentialLoss L;
  L.dsm = r.squaredNorm() / bd;
  L.eikonal = e.squaredNorm() / bd;
  L.anchor = anchors.cols() > 0 ? ya.squaredNorm() / static_cast<double>(anchors.cols()) : 0.0;
  L.total = L.dsm + cfg.lambda_eik * L.eikonal + cfg.lambda_anc * L.anchor;

  if (grads) {
    // dL/dG, then through the central differences onto the evaluated values.
    Mat dg = 2.0 * r / bd;
    dg += cfg.lambda_eik * (2.0 * e / bd).transpose().replicate(d, 1).cwiseProduct(2.0 * g);
    Vec dv = Vec::Zero(v.size());
    dv.head(b) = cfg.lambda_eik * (2.0 * e / bd) * (-2.0);
    for (Eigen::Index i = 0; i < d; ++i) {
      dv.segment(b * (1 + 2 * i), b) += dg.row(i).transpose() / (2.0 * h);
      dv.segment(b * (2 + 2 * i), b) -= dg.row(i).transpose() / (2.0 * h);
    }
    if (anchors.cols() > 0)
      dv.tail(anchors.cols()) = cfg.lambda_anc * 2.0 * ya / static_cast<double>(anchors.cols());
    eta.backward(pts, dv, *grads);
  }
  return L;
}

TrainedPotential train_potential_score(const Cloud& data, const Cloud& anchors, const PotentialTrainConfig& cfg) {
  if (data.empty()) throw EmptyCloud("potential training needs data");
  if (anchors.empty()) throw EmptyCloud("potential training needs anchors");
  if (cfg.steps < 1 || cfg.batch_size < 1 || !(cfg.t > 0.0) || !(cfg.fd_h > 0.0))
    throw InvalidArgument("invalid potential training configuration");
  const int d = static_cast<int>(data.front().size());
  Rng rng(cfg.seed);
  PotentialPtr base = cfg.base ? cfg.base : zero_potential(d);
  auto eta = std::make_shared<NetworkPotential>(base, d, cfg.hidden, rng);

  AdamWConfig oc;
  oc.lr = cfg.lr;
  oc.warmup_steps = std::min(100, cfg.steps / 10 + 1);
  auto params = eta->mlp().parameters();
  std::vector<const Mat*> cparams(params.begin(), params.end());
  OptimState opt = make_optim_state(cparams, oc);

  std::uniform_int_distribution<std::size_t> pick_data(0, data.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors.size() - 1);
  const double sd = std::sqrt(cfg.t);
  TrainedPotential out;
  out.losses.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    Mat x0(d, cfg.batch_size), x(d, cfg.batch_size);
    for (int j = 0; j < cfg.batch_size; ++j) {
      x0.col(j) = data[pick_data(rng)];
      x.col(j) = x0.col(j) + sd * gaussian_vec(rng, d);
    }
    Mat a(d, cfg.anchor_batch);
    for (int j = 0; j < cfg.anchor_batch; ++j) a.col(j) = anchors[pick_anchor(rng)];
    Grads g = eta->mlp().zero_grads();
    const PotentialLoss L = potential_loss(*eta, x0, x, a, cfg, &g);
    if (!std::isfinite(L.total)) throw NonFiniteState("potential loss diverged at step " + std::to_string(step));
    out.losses.push_back(L.total);
    adamw_step(params, g, opt);
  }
  out.eta = eta;
  out.domain = Domain::balls(anchors, 0.5 * cfg.zeta_min);
  out.field = potential_score(eta, out.domain);
  return out;
}

}  // namespace mfd
