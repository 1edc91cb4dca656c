#include "mfd/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>

#include "mfd/diagnostics.hpp"
#include "mfd/errors.hpp"
#include "mfd/plot.hpp"
#include "mfd/potential.hpp"
#include "mfd/sampler.hpp"
#include "mfd/score.hpp"

namespace mfd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Smallest quadrature resolution whose spacing is fine enough for smoothing at t.
int resolution_for(const Manifold& m, double t) {
  int res = 64;
  for (;;) {
    if (m.quadrature_net(res).spacing <= std::sqrt(t) / 10.0) return res;
    res = static_cast<int>(std::ceil(res * 1.1));
  }
}

SuiteResult finish(SuiteResult r, Clock::time_point t0) {
  r.seconds = seconds_since(t0);
  r.report.add("name", r.name).add("pass", r.pass).add("hard", r.hard).add("summary", r.summary).add("seconds",
                                                                                                      r.seconds);
  return r;
}

// Circle angles sorted; returns half the largest gap times the radius.
double covering_radius_circle(const Manifold& m, const Cloud& atoms) {
  std::vector<double> a;
  for (const auto& y : atoms) a.push_back(m.angle_of(y));
  std::sort(a.begin(), a.end());
  double gap = a.front() + 2.0 * M_PI - a.back();
  for (std::size_t i = 1; i < a.size(); ++i) gap = std::max(gap, a[i] - a[i - 1]);
  return 0.5 * gap * m.radius();
}

}  // namespace

SuiteResult suite_kl_rate(const KlRateOptions& o) {
  const auto t0 = Clock::now();
  const Manifold m = Manifold::circle(1.0, 3);
  const RateExperiment e = smoothing_rate_experiment(m, SurfaceDensity::uniform(), o.rate);
  SuiteResult r;
  r.name = "kl_rate";
  r.pass = e.slope >= o.slope_lo && e.slope <= o.slope_hi;
  r.summary = "slope " + fmt(e.slope) + " (95% CI " + fmt(e.ci_low) + ".." + fmt(e.ci_high) + "), target [" +
              fmt(o.slope_lo) + ", " + fmt(o.slope_hi) + "]";
  std::vector<Record> rows;
  for (std::size_t i = 0; i < e.n_grid.size(); ++i)
    rows.push_back(Record().add("n", e.n_grid[i]).add("median_kl", e.median_kl[i]));
  r.report.add("slope", e.slope).add("slope_se", e.slope_se).add("ci_low", e.ci_low).add("ci_high", e.ci_high);
  r.report.add("estimator", o.rate.estimator == KlEstimator::Plain ? "plain" : "control_variate");
  r.report.list("median_kl_by_n", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_kl_chi2(const KlChi2Options& o) {
  const auto t0 = Clock::now();
  const std::vector<Manifold> manifolds{Manifold::circle(1.0, 2), Manifold::sphere(2, 1.0, 3),
                                        Manifold::clifford_torus(M_SQRT1_2, M_SQRT1_2, 4)};
  SuiteResult r;
  r.name = "kl_chi2";
  std::vector<Record> rows;
  int violations = 0, idx = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& m : manifolds)
    for (double t : {0.5, 1.0}) {
      const SmoothedMixture p = population_smoothed(m, SurfaceDensity::uniform(), t, resolution_for(m, t));
      for (int n : {16, 128}) {
        Rng rng(o.seed * 1000u + static_cast<unsigned>(idx++));
        const SmoothedMixture q = SmoothedMixture::uniform(m.sample(SurfaceDensity::uniform(), rng, n), t);
        const DivergenceEstimate kl = kl_estimate(p, q, o.n_mc, rng);
        const DivergenceEstimate chi = chi2_upper_estimate(p, q, o.n_mc, rng);
        const double se = std::hypot(kl.std_error, chi.std_error);
        const double margin = chi.value + o.se_mult * se - kl.value;
        worst_margin = std::min(worst_margin, margin);
        if (margin < 0.0) ++violations;
        rows.push_back(Record()
                           .add("manifold", m.name())
                           .add("t", t)
                           .add("n", n)
                           .add("kl", kl.value)
                           .add("chi2", chi.value)
                           .add("se_joint", se)
                           .add("pass", margin >= 0.0));
      }
    }
  r.pass = violations == 0;
  r.summary = std::to_string(rows.size() - static_cast<std::size_t>(violations)) + "/" + std::to_string(rows.size()) +
              " pairs with KL <= chi2 + " + fmt(o.se_mult) + " SE (worst margin " + fmt(worst_margin) + ")";
  r.report.add("violations", violations).add("worst_margin", worst_margin).list("pairs", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_excess_risk(const ExcessRiskOptions& o) {
  const auto t0 = Clock::now();
  const Manifold m = Manifold::circle(1.0, 2);
  Rng rng(o.seed);
  const Cloud atoms = m.sample(SurfaceDensity::uniform(), rng, static_cast<std::size_t>(o.n_atoms));
  const SmoothedMixture mu = SmoothedMixture::uniform(atoms, o.t);
  const FieldPtr star = oracle_mixture_score(atoms);

  Vec v(2);
  v << M_SQRT1_2, M_SQRT1_2;
  Mat a(2, 2);
  a << 0.6, -0.3, 0.2, 0.5;
  std::vector<std::pair<std::string, FieldPtr>> fams{
      {"constant", custom_score(2, [star, v](const Vec& x, double t) { return Vec(star->eval(x, t) + v); },
                                "oracle+constant")},
      {"linear", custom_score(2, [star, a](const Vec& x, double t) { return Vec(star->eval(x, t) + a * x); },
                              "oracle+linear")},
      {"random_smooth", make_perturbed(star, m, 2.0, ErrorKind::RandomSmooth, rng)}};

  SuiteResult r;
  r.name = "excess_risk";
  r.pass = true;
  double worst = 0.0;
  std::vector<Record> rows;
  for (const auto& [name, s] : fams) {
    const ExcessRisk e = excess_risk_check(*s, *star, mu, o.n_mc, rng);
    worst = std::max(worst, e.rel_gap);
    r.pass = r.pass && e.rel_gap <= o.max_rel_gap;
    rows.push_back(Record()
                       .add("family", name)
                       .add("lhs", e.lhs)
                       .add("rhs", e.rhs)
                       .add("rel_gap", e.rel_gap)
                       .add("lhs_se", e.lhs_se)
                       .add("rhs_se", e.rhs_se));
  }
  r.summary = "worst relative gap " + fmt(worst) + " (limit " + fmt(o.max_rel_gap) + ")";
  r.report.add("worst_rel_gap", worst).add("n_mc", o.n_mc).list("families", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_contraction(const ContractionOptions& o) {
  const auto t0 = Clock::now();
  const Manifold m = Manifold::circle(1.0, 2);
  const NoiseSchedule ve = NoiseSchedule::ve();
  const double tstart = 0.25 * m.reach();
  const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
  SuiteResult r;
  r.name = "contraction";
  std::vector<Record> rows;
  long violations = 0, path_violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  unsigned k = 0;
  for (ErrorKind kind : {ErrorKind::ConstantDirection, ErrorKind::Tangential, ErrorKind::RandomSmooth})
    for (double eps : o.eps) {
      Rng rng(o.seed * 7919u + k++);
      const FieldPtr field = make_perturbed(exact, m, eps, kind, rng);
      const double tau = tstart * eps * eps * eps;
      const Mat x = to_matrix(m.sample_tube(rng, o.n_starts, 0.25 * m.reach()));
      const Mat y = pf_ode_run(*field, ve, x, tstart, tau, o.n_ode_steps);
      long viol = 0, pviol = 0;
      double max_dist = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double d0 = m.distance(x.col(j));
        const double d1 = m.distance(y.col(j));
        const double bound = std::sqrt(2.0) * eps + d0 * std::sqrt(tau / tstart) + 10.0 * o.integrator_tol;
        worst_slack = std::min(worst_slack, bound - d1);
        max_dist = std::max(max_dist, d1);
        if (d1 > bound) ++viol;
        if ((y.col(j) - x.col(j)).norm() > d0 + o.path_c * eps * std::log(tstart / tau)) ++pviol;
      }
      violations += viol;
      path_violations += pviol;
      rows.push_back(Record()
                         .add("kind", to_string(kind))
                         .add("eps", eps)
                         .add("violations", viol)
                         .add("path_violations", pviol)
                         .add("max_terminal_dist", max_dist));
    }
  r.pass = violations == 0;
  r.summary = std::to_string(violations) + " contraction violations, " + std::to_string(path_violations) +
              " path-length violations, min slack " + fmt(worst_slack);
  r.report.add("violations", violations).add("path_violations", path_violations).add("min_slack", worst_slack);
  r.report.list("cells", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_drift(const DriftOptions& o) {
  const auto t0 = Clock::now();
  const Manifold m = Manifold::circle(1.0, 2);
  const NoiseSchedule ve = NoiseSchedule::ve();
  const double tstart = 0.25 * m.reach();
  const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
  SuiteResult r;
  r.name = "drift";
  std::vector<double> lx, ly;
  std::vector<Record> rows;
  unsigned k = 0;
  for (double eps : o.eps) {
    Rng rng(o.seed * 7919u + k++);
    const FieldPtr field = make_perturbed(exact, m, eps, ErrorKind::Tangential, rng);
    const double tau = tstart * eps * eps * eps;
    const Mat x = to_matrix(m.sample_tube(rng, o.n_starts, 0.25 * m.reach()));
    const Mat y = pf_ode_run(*field, ve, x, tstart, tau, o.n_ode_steps);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      worst = std::max(worst, m.geodesic_distance(m.project(x.col(j)), m.project(y.col(j))));
    lx.push_back(std::log(eps));
    ly.push_back(std::log(worst));
    rows.push_back(Record().add("eps", eps).add("max_drift", worst).add("drift_over_sqrt_eps", worst / std::sqrt(eps)));
  }
  const auto [slope, se] = fit_slope(lx, ly);
  r.pass = slope >= o.exponent_lo && slope <= o.exponent_hi;
  r.summary = "fitted exponent " + fmt(slope) + " +- " + fmt(se) + ", target [" + fmt(o.exponent_lo) + ", " +
              fmt(o.exponent_hi) + "]";
  r.report.add("exponent", slope).add("exponent_se", se).list("cells", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_coverage(const CoverageOptions& o) {
  const auto t0 = Clock::now();
  const Manifold m = Manifold::circle(1.0, 2);
  const NoiseSchedule ve = NoiseSchedule::ve();
  const double zeta = m.reach();
  SamplerConfig sc;
  sc.T = o.T;
  sc.t0 = 0.25 * zeta;
  sc.tau = sc.t0 * o.eps * o.eps * o.eps;
  sc.n_sde_steps = o.n_sde_steps;
  sc.n_ode_steps = o.n_ode_steps;
  const FieldPtr exact = projection_score(m, Domain::tube(m, zeta));

  SuiteResult r;
  r.name = "coverage";
  int ok = 0;
  std::vector<Record> rows;
  for (unsigned seed : o.seeds) {
    Rng rng(seed);
    const Cloud atoms = m.sample(SurfaceDensity::uniform(), rng, static_cast<std::size_t>(o.n_train));
    const FieldPtr small = make_perturbed(exact, m, o.eps, ErrorKind::RandomSmooth, rng);
    const FieldPtr field = switched_score(oracle_mixture_score(atoms), small, sc.t0);

    const ProjectionErrorReport pe = projection_error(*small, m, sc.t0, 2000, rng);
    const double alpha = 4.0 * pe.median;
    const double delta = 0.25 * covering_radius_circle(m, atoms);
    const auto n_centers = static_cast<std::size_t>(std::ceil(2.0 * M_PI * m.radius() / (0.5 * delta)));

    const Mat samples = hybrid_sample(*field, ve, o.n_samples, sc, rng);
    CoverageReport emp = coverage_report(atoms, m, SurfaceDensity::uniform(), delta, alpha, n_centers, rng);
    CoverageReport dm = coverage_report(to_cloud(samples), m, SurfaceDensity::uniform(), delta, alpha, n_centers, rng);

    const auto [pmin, pmax] = m.density_bounds(SurfaceDensity::uniform(), rng);
    CminParams cp;
    cp.p_min = pmin;
    cp.p_max = pmax;
    cp.k = 1;
    cp.D = 2;
    cp.t0 = sc.t0;
    cp.rho = o.rho;
    cp.c_vol = 2.0;  // arc length of a geodesic ball of radius s is 2s
    cp.C_vol = 2.0;
    const double l_rho = zeta / (zeta - o.rho);
    const double kappa = delta / 6.0;
    cp.a = std::min(0.5 * o.rho, kappa / (2.0 * l_rho));
    const double cmin = cmin_lower_bound(cp);
    emp.c_min_analytic = dm.c_min_analytic = cmin;

    const bool pass = emp.c_hat == 0.0 && dm.c_hat >= cmin && cmin > 0.0;
    ok += pass;
    rows.push_back(Record()
                       .add("seed", static_cast<long>(seed))
                       .add("delta", delta)
                       .add("alpha", alpha)
                       .add("n_centers", dm.centers.size())
                       .add("c_hat_emp", emp.c_hat)
                       .add("c_hat_dm", dm.c_hat)
                       .add("c_min", cmin)
                       .add("pass", pass));
  }
  r.pass = ok == static_cast<int>(o.seeds.size());
  r.summary = std::to_string(ok) + "/" + std::to_string(o.seeds.size()) +
              " seeds with c_hat(emp) = 0 and c_hat(DM) >= c_min > 0";
  r.report.list("seeds", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_gaussian_ball(const GaussianBallOptions& o) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "gaussian_ball";
  Rng rng(o.seed);
  int ok = 0, cells = 0;
  std::vector<Record> rows;
  for (int m : {1, 2, 5})
    for (double tt : {0.25, 1.0})
      for (double rad : {0.5, 1.0}) {
        ++cells;
        const double sd = std::sqrt(tt);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < o.n_mc; ++i)
          if (sd * gaussian_vec(rng, m).norm() <= rad) ++hits;
        const double p = static_cast<double>(hits) / static_cast<double>(o.n_mc);
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(o.n_mc));
        const double bound = gaussian_ball_lower_bound(m, tt, rad);
        const bool pass = bound <= p + 3.0 * se;
        ok += pass;
        rows.push_back(Record()
                           .add("m", m)
                           .add("t0", tt)
                           .add("radius", rad)
                           .add("bound", bound)
                           .add("mc", p)
                           .add("se", se)
                           .add("exact", gaussian_ball_probability(m, tt, rad))
                           .add("pass", pass));
      }
  r.pass = ok == cells;
  r.summary = std::to_string(ok) + "/" + std::to_string(cells) + " cells with bound <= MC + 3 SE";
  r.report.list("cells", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_eikonal(const EikonalOptions& o) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "eikonal";
  r.pass = true;
  std::vector<Record> rows;
  double worst_eik = 0.0, worst_spec = 0.0;
  const std::vector<std::pair<Manifold, double>> cases{{Manifold::circle(1.0, 2), 0.1},
                                                       {Manifold::sphere(2, 1.0, 3), 0.2},
                                                       {Manifold::clifford_torus(M_SQRT1_2, M_SQRT1_2, 4), 0.2}};
  for (const auto& [m, rel_spacing] : cases) {
    Rng rng(o.seed);
    const PotentialPtr eta = squared_distance_potential(m);
    const double zeta = m.reach();
    const Cloud anchors = m.geodesic_net(rel_spacing * zeta);
    std::vector<Mat> tangents;
    for (const auto& y : anchors) tangents.push_back(m.tangent_basis(y));
    MembershipConfig mc;
    mc.k = m.intrinsic_dim();
    mc.zeta_min = zeta;
    const MembershipReport rep = check_membership(*eta, anchors, tangents, mc, rng);

    const Domain dom = Domain::balls(anchors, 0.5 * zeta);
    double eik = 0.0;
    std::size_t used = 0;
    for (const auto& x : m.sample_tube(rng, o.n_points, 0.45 * zeta)) {
      if (!dom.contains(x)) continue;
      ++used;
      eik = std::max(eik, std::abs(eikonal_residual(*eta, x, dom)));
    }
    double spec = 0.0;
    const int k = m.intrinsic_dim();
    for (const auto& y : anchors) {
      Eigen::SelfAdjointEigenSolver<Mat> es(eta->hessian(y), Eigen::EigenvaluesOnly);
      const Vec& ev = es.eigenvalues();
      for (Eigen::Index i = 0; i < ev.size(); ++i) spec = std::max(spec, std::abs(ev[i] - (i < k ? 0.0 : 1.0)));
    }
    worst_eik = std::max(worst_eik, eik);
    worst_spec = std::max(worst_spec, spec);
    const bool pass = rep.all_pass() && eik <= o.eik_tol && spec <= o.spectrum_tol && used > 0;
    r.pass = r.pass && pass;
    rows.push_back(Record()
                       .add("manifold", m.name())
                       .add("anchors", anchors.size())
                       .add("eikonal_points", used)
                       .add("max_eikonal_residual", eik)
                       .add("max_spectrum_error", spec)
                       .add("membership_eikonal", rep.eikonal.worst)
                       .add("membership_non_escape_delta", rep.non_escape.worst)
                       .add("membership_anchoring", rep.anchoring.worst)
                       .add("membership_rank_defects", rep.rank.worst)
                       .add("membership_max_angle", rep.angle.worst)
                       .add("derivative_norms", std::vector<double>(rep.derivative_norms.begin(),
                                                                    rep.derivative_norms.end()))
                       .add("all_membership_pass", rep.all_pass())
                       .add("pass", pass));
  }
  r.summary = "max eikonal residual " + fmt(worst_eik) + ", max Hessian spectrum error " + fmt(worst_spec) +
              (r.pass ? ", all membership checks pass" : ", some check failed");
  r.report.list("manifolds", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_zero_set(const ZeroSetOptions& o) {
  const auto t0 = Clock::now();
  const Manifold m = Manifold::circle(1.0, 2);
  const double t = 0.25 * m.reach();
  const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
  const Cloud net = m.geodesic_net(2.0 * M_PI * m.radius() / o.n_points);
  SuiteResult r;
  r.name = "zero_set";
  std::vector<double> medians;
  std::vector<Record> rows;
  bool bound_ok = true;
  for (std::size_t ei = 0; ei < o.eps.size(); ++ei) {
    const double eps = o.eps[ei];
    std::vector<double> dh;
    for (int s = 0; s < o.n_seeds; ++s) {
      Rng rng(static_cast<unsigned>(1000 * s + 17));
      const FieldPtr field = eps == 0.0 ? exact : make_perturbed(exact, m, eps, ErrorKind::Normal, rng);
      Cloud seeds, feet;
      std::uniform_real_distribution<double> off(-o.max_offset, o.max_offset);
      for (const auto& y : net) {
        seeds.push_back(y + off(rng) * m.normal_basis(y).col(0));
        feet.push_back(m.project(seeds.back()));
      }
      const ZeroSet z = extract_zero_set(*field, t, seeds, o.tol, o.max_iter);
      const double d = z.points.empty() ? std::numeric_limits<double>::infinity() : hausdorff(z.points, feet);
      if (!(d <= 2.0 * eps + 10.0 * o.tol)) bound_ok = false;
      dh.push_back(d);
    }
    medians.push_back(median(dh));
    rows.push_back(Record()
                       .add("eps", eps)
                       .add("median_hausdorff", medians.back())
                       .add("max_hausdorff", *std::max_element(dh.begin(), dh.end()))
                       .add("bound", 2.0 * eps + 10.0 * o.tol));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < medians.size(); ++i) monotone = monotone && medians[i] >= medians[i - 1];
  r.pass = monotone && bound_ok;
  r.summary = std::string(monotone ? "monotone" : "NOT monotone") + " median Hausdorff over eps, bound " +
              (bound_ok ? "held" : "violated") + " in every seed";
  r.report.add("monotone", monotone).add("bound_held", bound_ok).list("cells", std::move(rows));
  return finish(std::move(r), t0);
}

SuiteResult suite_large_noise(const LargeNoiseOptions& o) {
  const auto t0 = Clock::now();
  Mat atoms(1, 2);
  atoms << -1.0, 1.0;
  const NoiseSchedule ve = NoiseSchedule::ve();
  const FieldPtr field = oracle_mixture_score(atoms, Vec::Constant(2, 0.5), ve);
  SamplerConfig sc;
  sc.T = o.T;
  sc.t0 = o.t0;
  sc.tau = o.tau;
  sc.n_sde_steps = o.n_sde_steps;
  sc.n_ode_steps = o.n_ode_steps;
  Rng rng(o.seed);
  const Mat hyb = hybrid_sample(*field, ve, o.n, sc, rng);
  Mat x0(1, static_cast<Eigen::Index>(o.n));
  std::normal_distribution<double> g(0.0, std::sqrt(o.t0));
  for (Eigen::Index j = 0; j < x0.cols(); ++j) x0(0, j) = (uniform01(rng) < 0.5 ? -1.0 : 1.0) + g(rng);
  const Mat direct = pf_ode_run(*field, ve, x0, o.t0, o.tau, o.n_ode_steps);

  const double lo = std::min(hyb.minCoeff(), direct.minCoeff());
  const double hi = std::max(hyb.maxCoeff(), direct.maxCoeff());
  std::vector<double> ha(static_cast<std::size_t>(o.bins), 0.0), hb = ha;
  auto bin = [&](double v) {
    int b = static_cast<int>((v - lo) / (hi - lo) * o.bins);
    return static_cast<std::size_t>(std::clamp(b, 0, o.bins - 1));
  };
  for (Eigen::Index j = 0; j < hyb.cols(); ++j) ha[bin(hyb(0, j))] += 1.0 / static_cast<double>(hyb.cols());
  for (Eigen::Index j = 0; j < direct.cols(); ++j) hb[bin(direct(0, j))] += 1.0 / static_cast<double>(direct.cols());
  double tv = 0.0;
  for (int b = 0; b < o.bins; ++b) tv += 0.5 * std::abs(ha[static_cast<std::size_t>(b)] - hb[static_cast<std::size_t>(b)]);

  SuiteResult r;
  r.name = "large_noise";
  r.pass = tv <= o.max_tv;
  r.summary = "20-bin total variation " + fmt(tv) + " (limit " + fmt(o.max_tv) + ")";
  r.report.add("tv", tv).add("range_lo", lo).add("range_hi", hi).add("hybrid_hist", ha).add("direct_hist", hb);
  return finish(std::move(r), t0);
}

SuiteResult suite_grad_check(const GradCheckOptions& o) {
  const auto t0 = Clock::now();
  Rng rng(o.seed);
  ScoreNetConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden = o.hidden;
  cfg.n_blocks = o.n_blocks;
  cfg.time_embed_dim = o.hidden;
  cfg.n_freqs = 4;
  ScoreNet net(cfg, NoiseSchedule::vp(0.1, 20.0, 1e-3), rng);
  // Random parameters everywhere so no gradient is trivially zero.
  {
    std::normal_distribution<double> g(0.0, 0.3);
    auto params = net.parameters();
    const auto names = net.parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const bool gamma = names[i].find("gamma") != std::string::npos;
      for (Eigen::Index k = 0; k < params[i]->size(); ++k) params[i]->data()[k] = (gamma ? 1.0 : 0.0) + g(rng);
    }
  }
  Mat x0(3, o.batch), eps(3, o.batch);
  Vec t(o.batch);
  for (int j = 0; j < o.batch; ++j) {
    x0.col(j) = gaussian_vec(rng, 3);
    eps.col(j) = gaussian_vec(rng, 3);
    t[j] = 1e-3 + (1.0 - 1e-3) * uniform01(rng);
  }
  Grads g;
  net.dsm_loss_and_grad(x0, eps, t, &g);
  auto params = net.parameters();
  const auto names = net.parameter_names();
  double worst = 0.0;
  std::string worst_name;
  std::vector<Record> rows;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat fd(params[i]->rows(), params[i]->cols());
    for (Eigen::Index k = 0; k < params[i]->size(); ++k) {
      double& p = params[i]->data()[k];
      const double keep = p;
      p = keep + o.h;
      const double lp = net.dsm_loss_and_grad(x0, eps, t, nullptr);
      p = keep - o.h;
      const double lm = net.dsm_loss_and_grad(x0, eps, t, nullptr);
      p = keep;
      fd.data()[k] = (lp - lm) / (2.0 * o.h);
    }
    const double denom = std::max({g[i].norm(), fd.norm(), 1e-12});
    const double rel = (g[i] - fd).norm() / denom;
    if (rel > worst) {
      worst = rel;
      worst_name = names[i];
    }
    rows.push_back(Record().add("parameter", names[i]).add("rel_error", rel).add("grad_norm", g[i].norm()));
  }
  SuiteResult r;
  r.name = "grad_check";
  r.pass = worst <= o.rel_tol;
  r.summary = "worst relative error " + fmt(worst) + " at " + worst_name + " over " + std::to_string(params.size()) +
              " tensors (limit " + fmt(o.rel_tol) + ")";
  r.report.add("worst_rel_error", worst).list("tensors", std::move(rows));
  return finish(std::move(r), t0);
}

PresetRun run_preset(const Preset& preset, const std::string& out_dir,
                     const std::function<void(const TraceRow&)>& on_row) {
  preset.validate();
  const auto start = Clock::now();
  const Preset& p = preset;
  const Manifold m = Manifold::special_orthogonal(p.so_dim);
  const SurfaceDensity dens =
      p.distribution == "haar" ? SurfaceDensity::uniform() : SurfaceDensity::projected_normal(p.pn_sigma);
  Rng rng(p.seed);
  const Cloud train = m.sample(dens, rng, static_cast<std::size_t>(p.n_train));
  const NoiseSchedule sch = NoiseSchedule::vp(p.beta_min, p.beta_max, p.t_min);

  ScoreNetConfig nc;
  nc.input_dim = m.ambient_dim();
  nc.hidden = p.hidden;
  nc.n_blocks = p.layers;
  nc.time_embed_dim = p.hidden;
  auto net = std::make_shared<ScoreNet>(nc, sch, rng);
  const FieldPtr field = learned_score(net);

  Rng probe_rng(p.seed + 7919u);
  const Cloud probes = m.sample_tube(probe_rng, 64, 0.25 * m.reach());
  const double t_probe = std::max(p.t_min, 1e-2);
  Rng eval_rng(p.seed + 104729u);
  LangevinConfig lc;
  lc.levels = p.langevin_levels;
  lc.steps_per_level = p.langevin_steps;
  lc.c_l = p.langevin_c;
  lc.t_max = 1.0;
  lc.t_min = p.t_min;

  PresetRun run;
  run.preset = p;
  Mat last_samples;
  auto evaluate = [&](int step, double loss) {
    TraceRow row;
    row.step = step;
    row.loss = loss;
    const Mat raw = annealed_langevin(*field, sch, static_cast<std::size_t>(p.n_eval_samples), lc, eval_rng);
    Cloud projected;
    double err = 0.0;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      projected.push_back(m.project_any(raw.col(j)));
      err += (raw.col(j) - projected.back()).norm();
    }
    row.manifold_error = err / static_cast<double>(raw.cols());
    row.memorization = memorization_fraction(projected, train).fraction;
    double a = 0.0;
    int na = 0;
    for (const auto& x : probes) {
      try {
        a += alignment(*field, m, x, t_probe);
        ++na;
      } catch (const DegenerateVector&) {
      }
    }
    row.alignment = na > 0 ? a / na : 0.0;
    for (double v : {row.loss, row.alignment, row.manifold_error, row.memorization})
      if (!std::isfinite(v)) throw NonFiniteState("non-finite metric at step " + std::to_string(step));
    last_samples = to_matrix(projected);
    run.trace.push_back(row);
    if (on_row) on_row(row);
  };

  // Initial row: loss of the untrained net on one batch.
  {
    Rng lrng(p.seed + 31u);
    const int b = std::min(p.batch_size, 256);
    Mat x0(nc.input_dim, b), eps(nc.input_dim, b);
    Vec t(b);
    std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
    for (int j = 0; j < b; ++j) {
      x0.col(j) = train[pick(lrng)];
      eps.col(j) = gaussian_vec(lrng, nc.input_dim);
      t[j] = sch.t_min() + (sch.t_max() - sch.t_min()) * uniform01(lrng);
    }
    const double loss0 = net->dsm_loss_and_grad(x0, eps, t, nullptr);
    if (p.eval_initial || p.steps == 0) evaluate(0, loss0);
  }

  TrainConfig tc;
  tc.steps = p.steps;
  tc.batch_size = p.batch_size;
  tc.optim.lr = p.lr;
  tc.optim.weight_decay = p.weight_decay;
  tc.optim.clip_norm = 1.0;
  tc.optim.warmup_steps = std::min(100, std::max(1, p.steps / 10));
  tc.seed = p.seed + 1u;
  double acc = 0.0;
  int acc_n = 0;
  if (p.steps > 0)
    train_score_net(*net, train, tc, [&](int step, double loss) {
      acc += loss;
      ++acc_n;
      const bool due = (p.eval_interval > 0 && step % p.eval_interval == 0) || step == p.steps;
      if (due) {
        evaluate(step, acc / acc_n);
        acc = 0.0;
        acc_n = 0;
      }
    });

  const TraceRow& last = run.trace.back();
  run.final_memorization = last.memorization;
  run.final_manifold_error = last.manifold_error;
  run.final_alignment = last.alignment;
  run.seconds = seconds_since(start);

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    p.to_config().save((dir / "config.txt").string());
    write_trace_csv((dir / "trace.csv").string(), run.trace);
    write_cloud_csv((dir / "samples.csv").string(), last_samples);
    Record meta;
    meta.add("preset", p.name).add("seed", static_cast<long>(p.seed)).add("schedule", sch.describe());
    save_checkpoint((dir / "checkpoint.bin").string(), *net, meta);
    Record summary;
    summary.add("preset", p.name)
        .add("seed", static_cast<long>(p.seed))
        .add("scale", p.scale)
        .add("n_train", p.n_train)
        .add("hidden", p.hidden)
        .add("layers", p.layers)
        .add("steps", p.steps)
        .add("batch_size", p.batch_size)
        .add("final_memorization", run.final_memorization)
        .add("final_manifold_error", run.final_manifold_error)
        .add("final_alignment", run.final_alignment)
        .add("trace_rows", run.trace.size())
        .add("seconds", run.seconds);
    write_json((dir / "summary.json").string(), summary);
    emit_plots(run.trace, out_dir);
  }
  return run;
}

SuiteResult suite_memorization(const MemorizationOptions& o) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "memorization";
  r.hard = false;
  std::vector<Record> rows;
  std::map<std::string, std::vector<double>> fractions;
  for (const std::string name : {"deep_memo", "gen"})
    for (unsigned seed : o.seeds) {
      Preset p = scaled(preset_by_name(name), o.scale);
      p.seed = seed;
      p.batch_size = o.batch_size;
      p.n_eval_samples = o.n_eval_samples;
      p.eval_interval = 0;
      p.eval_initial = false;
      const std::string dir =
          o.out_dir.empty() ? "" : (std::filesystem::path(o.out_dir) / (name + "_seed" + std::to_string(seed))).string();
      const PresetRun run = run_preset(p, dir);
      fractions[name].push_back(run.final_memorization);
      rows.push_back(Record()
                         .add("preset", name)
                         .add("seed", static_cast<long>(seed))
                         .add("final_memorization", run.final_memorization)
                         .add("final_manifold_error", run.final_manifold_error)
                         .add("final_alignment", run.final_alignment)
                         .add("seconds", run.seconds));
    }
  const double deep = median(fractions["deep_memo"]);
  const double gen = median(fractions["gen"]);
  const bool ordered = deep > gen;
  const bool gen_ok = gen <= o.gen_max;
  r.pass = ordered && gen_ok;
  r.summary = "median memorization deep_memo " + fmt(deep) + " vs gen " + fmt(gen) + " (ordering " +
              (ordered ? "holds" : "fails") + ", gen <= " + fmt(o.gen_max) + " " + (gen_ok ? "holds" : "fails") + ")";
  r.report.add("deep_memo_median", deep)
      .add("gen_median", gen)
      .add("ordering_holds", ordered)
      .add("gen_threshold_holds", gen_ok)
      .add("batch_size", o.batch_size)
      .add("scale", o.scale)
      .list("runs", std::move(rows));
  return finish(std::move(r), t0);
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"kl_rate",    "kl_chi2",  "excess_risk", "contraction",
                                              "drift",      "coverage", "gaussian_ball", "eikonal",
                                              "zero_set",   "large_noise", "grad_check", "memorization"};
  return names;
}

SuiteResult run_theorem_suite(const std::string& name, const std::string& out_dir) {
  SuiteResult r;
  if (name == "kl_rate") r = suite_kl_rate();
  else if (name == "kl_chi2") r = suite_kl_chi2();
  else if (name == "excess_risk") r = suite_excess_risk();
  else if (name == "contraction") r = suite_contraction();
  else if (name == "drift") r = suite_drift();
  else if (name == "coverage") r = suite_coverage();
  else if (name == "gaussian_ball") r = suite_gaussian_ball();
  else if (name == "eikonal") r = suite_eikonal();
  else if (name == "zero_set") r = suite_zero_set();
  else if (name == "large_noise") r = suite_large_noise();
  else if (name == "grad_check") r = suite_grad_check();
  else if (name == "memorization") {
    MemorizationOptions o;
    if (!out_dir.empty()) o.out_dir = (std::filesystem::path(out_dir) / "runs").string();
    r = suite_memorization(o);
  } else {
    std::string valid;
    for (const auto& n : suite_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown suite '" + name + "'; valid suites: " + valid);
  }
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_json((std::filesystem::path(out_dir) / "report.json").string(), r.report);
  }
  return r;
}

Record suite_record(const SuiteResult& r) { return r.report; }

}  // namespace mfd
