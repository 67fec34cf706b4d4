#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gel/config.hpp"
#include "gel/erm.hpp"
#include "gel/loo.hpp"
#include "gel/rf_models.hpp"
#include "gel/rng.hpp"
#include "gel/types.hpp"

namespace gel {

// (rho, pi) = (w^T Sigma w / p, mu1 xi^T F w / sqrt(p)): the variance of the
// student margin and its covariance with the teacher margin.
inline std::pair<double, double> rho_pi_from_solution(const Vector& w,
                                                      const Matrix& Sigma,
                                                      const Matrix& F,
                                                      const Vector& xi, double mu1) {
  const double p = static_cast<double>(w.size());
  const double rho = w.dot(Sigma * w) / p;
  const double pi = mu1 * xi.dot(F * w) / std::sqrt(p);
  return {rho, pi};
}

inline bool map_is_smooth(OutputMapKind k) { return k != OutputMapKind::sign; }

// G(rho, pi) = E[theta_teach(z1) - theta_out(pi z1 + sqrt(rho - pi^2) z2)]^2
// over independent standard Gaussians. Tensor Gauss-Hermite for smooth maps,
// the arcsine orthant formula when both maps are sign, Monte Carlo otherwise.
inline double gaussian_gen_error_closed(double rho, double pi_, OutputMapKind teach,
                                        OutputMapKind out, int quad_order = 101) {
  if (rho < pi_ * pi_)
    throw std::domain_error("gaussian_gen_error_closed: rho < pi^2");
  const double s = std::sqrt(std::max(0.0, rho - pi_ * pi_));

  if (teach == OutputMapKind::sign && out == OutputMapKind::sign) {
    constexpr double pi_const = 3.14159265358979323846;
    const double ratio =
        rho > 0.0 ? std::clamp(pi_ / std::sqrt(rho), -1.0, 1.0) : 0.0;
    return 2.0 - (4.0 / pi_const) * std::asin(ratio);
  }
  if (map_is_smooth(teach) && map_is_smooth(out)) {
    const HermiteRule rule = gauss_hermite(quad_order);
    const int q = quad_order;
    long double acc = 0.0L;
    for (int i = 0; i < q; ++i) {
      const double z1 = static_cast<double>(rule.nodes[i]);
      const double t = apply_map(teach, z1);
      for (int j = 0; j < q; ++j) {
        const double z2 = static_cast<double>(rule.nodes[j]);
        const double o = apply_map(out, pi_ * z1 + s * z2);
        acc += rule.weights[i] * rule.weights[j] * (long double)((t - o) * (t - o));
      }
    }
    return static_cast<double>(acc);
  }
  // mixed smooth/sign: Monte Carlo with a fixed stream
  const Index n_mc = 1000000;
  Rng rng(substream_seed(0x9e11e7a1ULL, "gen_error_mc"));
  long double acc = 0.0L;
  for (Index i = 0; i < n_mc; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double d = apply_map(teach, z1) - apply_map(out, pi_ * z1 + s * z2);
    acc += (long double)(d * d);
  }
  return static_cast<double>(acc / n_mc);
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

enum class ModelKind { kernel, surrogate };

// Monte Carlo generalization error on fresh samples, Eq-style:
// E[(y_new - theta_out(r_new^T w / sqrt(p)))^2].
inline McEstimate generalization_error_mc(const Vector& w, const FeatureMatrix& F,
                                          const TeacherConfig& teacher,
                                          ModelKind model,
                                          const GaussEquivConstants& consts,
                                          const Activation& sigma, Index n_fresh,
                                          std::uint64_t seed) {
  if (n_fresh < 1000)
    throw std::invalid_argument("generalization_error_mc: n_fresh must be >= 1000");
  const Index p = F.p;
  const double sp = std::sqrt(static_cast<double>(p));
  long double sum = 0.0L, sumsq = 0.0L;
  const Index chunk = 4096;
  Index done = 0;
  std::uint64_t chunk_idx = 0;
  while (done < n_fresh) {
    const Index m = std::min(chunk, n_fresh - done);
    Rng rng(substream_seed(seed, "gen_mc", chunk_idx++));
    const Matrix C = rng.normal_matrix(m, F.d);
    const Matrix G = C * F.entries;
    Vector margin(m);
    if (model == ModelKind::kernel) {
      margin = G.unaryExpr([&](double x) { return sigma.eval(x); }) * w / sp;
    } else {
      const Matrix Z = rng.normal_matrix(m, p);
      margin = ((consts.mu1 * G + consts.mu2 * Z).array() + consts.mu0).matrix() * w /
               sp;
    }
    const Vector yv = (C * teacher.xi).unaryExpr([&](double x) {
      return apply_map(teacher.theta_teach, x);
    });
    for (Index i = 0; i < m; ++i) {
      const double e = yv[i] - apply_map(teacher.theta_out, margin[i]);
      sum += (long double)(e * e);
      sumsq += (long double)(e * e) * (e * e);
    }
    done += m;
  }
  const double n = static_cast<double>(n_fresh);
  McEstimate est;
  est.estimate = static_cast<double>(sum / n);
  const double var =
      std::max(0.0L, sumsq / n - (sum / n) * (sum / n));
  est.std_error = std::sqrt(var / n);
  return est;
}

// One coupled experiment: a single dataset, both untilted solves, all
// error and alignment statistics.
struct TrialResult {
  Index p = 0, d = 0, n = 0;
  std::uint64_t seed = 0;
  double e_train_A = 0, e_train_B = 0;
  double e_gen_A = 0, e_gen_B = 0;
  double se_gen_A = 0, se_gen_B = 0;
  double rho_A = 0, pi_A = 0, rho_B = 0, pi_B = 0;
  bool converged_A = false, converged_B = false;
  int iterations_A = 0, iterations_B = 0;
  double winf_A = 0, winf_B = 0;  // ||w*||_inf, logged for the A3 proxy
  bool ok() const { return converged_A && converged_B; }
};

// Fully-specified problem instance shared by trials, derivative estimates
// and path audits.
struct TrialInstance {
  FeatureMatrix F;
  TeacherConfig teacher;
  GaussEquivConstants consts;
  Activation sigma;
  Dataset ds;
  Matrix Sigma;
  Loss loss;
  Regularizer reg;
  SolveOptions opts;
};

inline TrialInstance make_instance(const ExperimentConfig& cfg, Index p,
                                   std::uint64_t seed) {
  TrialInstance in;
  in.sigma = make_activation(cfg.activation);
  in.consts = gauss_moments(in.sigma);
  in.F = sample_feature_matrix(cfg.d, p, substream_seed(seed, "feature"));
  in.teacher = sample_teacher(cfg.d, parse_map(cfg.teacher), parse_map(cfg.output),
                              substream_seed(seed, "teacher"));
  in.ds = generate_dataset(in.F, in.teacher, in.consts, in.sigma, cfg.n,
                           substream_seed(seed, "dataset"));
  in.Sigma = surrogate_covariance(in.F, in.consts);
  in.loss = make_loss(cfg.loss);
  in.reg = ridge(cfg.lambda);
  in.opts.tol = cfg.solver_tol;
  in.opts.max_iter = cfg.solver_max_iter;
  in.opts.line_search_beta = cfg.solver_line_search_beta;
  in.opts.line_search_c = cfg.solver_line_search_c;
  return in;
}

inline TrialResult run_trial(const ExperimentConfig& cfg, Index p,
                             std::uint64_t seed) {
  const TrialInstance in = make_instance(cfg, p, seed);
  TrialResult tr;
  tr.p = p;
  tr.d = cfg.d;
  tr.n = cfg.n;
  tr.seed = seed;

  TiltedObjective obj_a(in.ds.A, in.ds.y, in.loss, in.reg);
  TiltedObjective obj_b(in.ds.B, in.ds.y, in.loss, in.reg);
  const SolveResult ra = solve(obj_a, in.opts);
  const SolveResult rb = solve(obj_b, in.opts);
  tr.converged_A = ra.converged;
  tr.converged_B = rb.converged;
  tr.iterations_A = ra.iterations;
  tr.iterations_B = rb.iterations;
  if (!tr.ok()) return tr;

  tr.e_train_A = training_error(ra, p);
  tr.e_train_B = training_error(rb, p);
  tr.winf_A = ra.w_star.lpNorm<Eigen::Infinity>();
  tr.winf_B = rb.w_star.lpNorm<Eigen::Infinity>();
  std::tie(tr.rho_A, tr.pi_A) = rho_pi_from_solution(
      ra.w_star, in.Sigma, in.F.entries, in.teacher.xi, in.consts.mu1);
  std::tie(tr.rho_B, tr.pi_B) = rho_pi_from_solution(
      rb.w_star, in.Sigma, in.F.entries, in.teacher.xi, in.consts.mu1);

  // one shared fresh-sample stream couples the two estimates, so the linear
  // activation gives exact equality and the gap estimate loses MC variance
  const std::uint64_t gen_seed = substream_seed(seed, "gen_fresh");
  const McEstimate ga = generalization_error_mc(
      ra.w_star, in.F, in.teacher, ModelKind::kernel, in.consts, in.sigma,
      cfg.mc_fresh_samples, gen_seed);
  const McEstimate gb = generalization_error_mc(
      rb.w_star, in.F, in.teacher, ModelKind::surrogate, in.consts, in.sigma,
      cfg.mc_fresh_samples, gen_seed);
  tr.e_gen_A = ga.estimate;
  tr.se_gen_A = ga.std_error;
  tr.e_gen_B = gb.estimate;
  tr.se_gen_B = gb.std_error;
  return tr;
}

// One-sided and central difference quotients of Phi/p in tau1 and tau2 for
// the Gaussian model, plus the direct (rho, pi) at the untilted optimum.
// The suboptimality inequality makes forward <= direct <= backward exact.
struct DerivativeEstimate {
  double tau_step = 0;
  double rho_forward = 0, rho_backward = 0, rho_central = 0;
  double pi_forward = 0, pi_backward = 0, pi_central = 0;
  double rho_direct = 0, pi_direct = 0;
};

inline DerivativeEstimate derivative_estimates(const ExperimentConfig& cfg, Index p,
                                               std::uint64_t seed, double tau_step) {
  const TrialInstance in = make_instance(cfg, p, seed);
  const double eta = static_cast<double>(p) / static_cast<double>(cfg.d);
  const double ts = tau_star(cfg.lambda, in.consts.mu1, in.consts.mu2, eta);
  if (!(tau_step > 0.0) || tau_step > ts)
    throw std::invalid_argument("derivative_estimates: need 0 < tau_step <= tau*");

  auto phi = [&](double t1, double t2, const Vector& warm) {
    TiltParams tilt{t1, t2};
    TiltedObjective obj(in.ds.B, in.ds.y, in.loss, in.reg, tilt, &in.Sigma,
                        &in.F.entries, &in.teacher.xi, in.consts.mu1);
    SolveOptions o = in.opts;
    o.warm_start = warm;
    return solve(obj, o);
  };

  const SolveResult r0 = phi(0.0, 0.0, Vector());
  DerivativeEstimate de;
  de.tau_step = tau_step;
  std::tie(de.rho_direct, de.pi_direct) = rho_pi_from_solution(
      r0.w_star, in.Sigma, in.F.entries, in.teacher.xi, in.consts.mu1);
  const double pd = static_cast<double>(p);
  const double f0 = r0.value;
  const double fp1 = phi(tau_step, 0.0, r0.w_star).value;
  const double fm1 = phi(-tau_step, 0.0, r0.w_star).value;
  const double fp2 = phi(0.0, tau_step, r0.w_star).value;
  const double fm2 = phi(0.0, -tau_step, r0.w_star).value;
  de.rho_forward = (fp1 - f0) / (pd * tau_step);
  de.rho_backward = (fm1 - f0) / (-pd * tau_step);
  de.rho_central = (fp1 - fm1) / (2.0 * pd * tau_step);
  de.pi_forward = (fp2 - f0) / (pd * tau_step);
  de.pi_backward = (fm2 - f0) / (-pd * tau_step);
  de.pi_central = (fp2 - fm2) / (2.0 * pd * tau_step);
  return de;
}

struct PerPAggregate {
  Index p = 0;
  int n_ok = 0, n_failed = 0;
  double mean_train_A = 0, std_train_A = 0;
  double mean_train_B = 0, std_train_B = 0;
  double mean_gen_A = 0, std_gen_A = 0;
  double mean_gen_B = 0, std_gen_B = 0;
  double train_gap_mean = 0;  // mean |E_train(A) - E_train(B)|
  double gen_gap_mean = 0;    // mean |E_gen(A) - E_gen(B)|
};

struct UniversalityReport {
  std::vector<TrialResult> trials;
  std::vector<PerPAggregate> per_p;
  std::vector<std::uint64_t> seeds;
  bool incomplete = false;
};

inline std::uint64_t trial_seed(std::uint64_t master, Index p, int trial_index) {
  return substream_seed(master, "trial:p=" + std::to_string(p),
                        static_cast<std::uint64_t>(trial_index));
}

inline UniversalityReport sweep_p(const ExperimentConfig& cfg, int jobs = 1) {
  cfg.validate();
  UniversalityReport rep;
  struct Task {
    Index p;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (Index p : cfg.p_grid)
    for (int t = 0; t < cfg.n_trials; ++t)
      tasks.push_back({p, trial_seed(cfg.master_seed, p, t)});
  rep.trials.resize(tasks.size());
  for (const Task& t : tasks) rep.seeds.push_back(t.seed);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      rep.trials[i] = run_trial(cfg, tasks[i].p, tasks[i].seed);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (Index p : cfg.p_grid) {
    PerPAggregate agg;
    agg.p = p;
    std::vector<const TrialResult*> ok;
    for (const TrialResult& tr : rep.trials) {
      if (tr.p != p) continue;
      if (tr.ok())
        ok.push_back(&tr);
      else {
        ++agg.n_failed;
        rep.incomplete = true;
      }
    }
    agg.n_ok = static_cast<int>(ok.size());
    auto mean_std = [&](auto get, double& mean, double& sd) {
      if (ok.empty()) return;
      double m = 0;
      for (auto* t : ok) m += get(*t);
      m /= ok.size();
      double v = 0;
      for (auto* t : ok) v += (get(*t) - m) * (get(*t) - m);
      sd = ok.size() > 1 ? std::sqrt(v / (ok.size() - 1)) : 0.0;
      mean = m;
    };
    mean_std([](const TrialResult& t) { return t.e_train_A; }, agg.mean_train_A,
             agg.std_train_A);
    mean_std([](const TrialResult& t) { return t.e_train_B; }, agg.mean_train_B,
             agg.std_train_B);
    mean_std([](const TrialResult& t) { return t.e_gen_A; }, agg.mean_gen_A,
             agg.std_gen_A);
    mean_std([](const TrialResult& t) { return t.e_gen_B; }, agg.mean_gen_B,
             agg.std_gen_B);
    double dummy = 0;
    mean_std([](const TrialResult& t) { return std::abs(t.e_train_A - t.e_train_B); },
             agg.train_gap_mean, dummy);
    mean_std([](const TrialResult& t) { return std::abs(t.e_gen_A - t.e_gen_B); },
             agg.gen_gap_mean, dummy);
    rep.per_p.push_back(agg);
  }
  return rep;
}

// Lindeberg path audit: Phi_k / p on a strided grid with warm starts, plus
// the per-step quadratic-surrogate diagnostics.
struct PathAuditRow {
  Index k = 0;
  double phi_k = 0;
  double delta_to_prev = 0;  // 0 for the first evaluated point
  double psi_b = 0, psi_a = 0;
  double gamma_b = 0, gamma_a = 0;
};

struct PathAudit {
  std::vector<PathAuditRow> rows;
  double phi0_over_p = 0, phin_over_p = 0;
  double max_step_over_p = 0;   // max |Phi_k - Phi_prev| / p over the grid
  double mean_step_over_p = 0;  // mean |Phi_k - Phi_prev| / p
  double total_drift_over_p = 0;
};

inline PathAudit lindeberg_path_audit(const ExperimentConfig& cfg, Index p,
                                      std::uint64_t seed, Index k_stride) {
  if (cfg.n > cfg.path_cap)
    throw std::invalid_argument("lindeberg_path_audit: n exceeds path cap");
  if (k_stride < 1) throw std::invalid_argument("lindeberg_path_audit: bad stride");
  const TrialInstance in = make_instance(cfg, p, seed);
  const Index n = cfg.n;
  const double pd = static_cast<double>(p);

  std::vector<Index> grid;
  for (Index k = 0; k <= n; k += k_stride) grid.push_back(k);
  if (grid.back() != n) grid.push_back(n);

  PathAudit audit;
  Vector warm;
  double prev_phi = 0.0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const Index k = grid[gi];
    SolveOptions o = in.opts;
    o.warm_start = warm;
    const SolveResult r = interpolation_value(k, in.ds, in.loss, in.reg, {}, nullptr,
                                              nullptr, nullptr, 0.0, o);
    warm = r.w_star;
    PathAuditRow row;
    row.k = k;
    row.phi_k = r.value;
    row.delta_to_prev = gi == 0 ? 0.0 : r.value - prev_phi;
    if (k >= 1) {
      SolveOptions lo = in.opts;
      lo.warm_start = warm;
      const LeaveOneOutSolution loo = leave_one_out_solve(
          k, in.ds, in.loss, in.reg, {}, nullptr, nullptr, nullptr, 0.0, lo);
      const SurrogateHessian H =
          surrogate_hessian(loo, in.ds, in.loss, in.reg, {}, nullptr);
      const Vector bk = in.ds.B.row(k - 1);
      const Vector ak = in.ds.A.row(k - 1);
      row.psi_b = psi_surrogate(bk, loo, H, in.loss, in.ds.y[k - 1], p);
      row.psi_a = psi_surrogate(ak, loo, H, in.loss, in.ds.y[k - 1], p);
      row.gamma_b = gamma(bk, H, p);
      row.gamma_a = gamma(ak, H, p);
    }
    audit.rows.push_back(row);
    prev_phi = r.value;
  }

  audit.phi0_over_p = audit.rows.front().phi_k / pd;
  audit.phin_over_p = audit.rows.back().phi_k / pd;
  audit.total_drift_over_p =
      std::abs(audit.rows.back().phi_k - audit.rows.front().phi_k) / pd;
  double acc = 0.0;
  for (std::size_t i = 1; i < audit.rows.size(); ++i) {
    const double step = std::abs(audit.rows[i].delta_to_prev) / pd;
    audit.max_step_over_p = std::max(audit.max_step_over_p, step);
    acc += step;
  }
  if (audit.rows.size() > 1)
    audit.mean_step_over_p = acc / static_cast<double>(audit.rows.size() - 1);
  return audit;
}

// CSV emitters (17-significant-digit floats, '.' decimal)

inline std::string sweep_csv(const UniversalityReport& rep) {
  std::string out =
      "p,seed,e_train_A,e_train_B,e_gen_A,e_gen_B,rho_A,pi_A,rho_B,pi_B,"
      "converged_A,converged_B\n";
  for (const TrialResult& t : rep.trials) {
    out += std::to_string(t.p) + "," + std::to_string(t.seed) + "," +
           format_float(t.e_train_A) + "," + format_float(t.e_train_B) + "," +
           format_float(t.e_gen_A) + "," + format_float(t.e_gen_B) + "," +
           format_float(t.rho_A) + "," + format_float(t.pi_A) + "," +
           format_float(t.rho_B) + "," + format_float(t.pi_B) + "," +
           (t.converged_A ? "1" : "0") + "," + (t.converged_B ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string path_csv(const PathAudit& audit) {
  std::string out = "k,phi_k,delta_to_prev,psi_b,psi_a,gamma_b,gamma_a\n";
  for (const PathAuditRow& r : audit.rows) {
    out += std::to_string(r.k) + "," + format_float(r.phi_k) + "," +
           format_float(r.delta_to_prev) + "," + format_float(r.psi_b) + "," +
           format_float(r.psi_a) + "," + format_float(r.gamma_b) + "," +
           format_float(r.gamma_a) + "\n";
  }
  return out;
}

}  // namespace gel
