// Command-line driver: moments, trial, sweep, derivatives, diagnose,
// audit-path. Every file-producing command writes its outputs atomically and
// records them (with digests) in a JSON manifest so runs can be replayed and
// checked byte-for-byte.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gel/config.hpp"
#include "gel/diagnostics.hpp"
#include "gel/io.hpp"
#include "gel/lab.hpp"
#include "gel/version.hpp"

namespace {

using nlohmann::json;

std::string timestamp_utc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (key=value or JSON)");
  cmd->add_option("--out-dir", opts.out_dir, "output directory (default: $GEL_OUT_DIR or .)");
  cmd->add_option("--seed", opts.seed, "override master seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--jobs", opts.jobs, "worker threads for sweeps")
      ->check(CLI::PositiveNumber);
}

std::string resolve_out_dir(const CommonOpts& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* env = std::getenv("GEL_OUT_DIR"); env && *env) return env;
  return ".";
}

gel::ExperimentConfig load_config(const CommonOpts& opts) {
  gel::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = gel::ExperimentConfig::load(opts.config_path);
  if (opts.seed_set) cfg.master_seed = opts.seed;
  cfg.validate();
  return cfg;
}

json config_json(const gel::ExperimentConfig& cfg) { return cfg.to_json(); }

// Manifest shared by all file-producing commands. Each output file belongs to
// exactly one manifest.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const gel::ExperimentConfig& cfg,
                    const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& output_files, bool incomplete) {
  json m;
  m["command"] = command;
  m["version"] = gel::kVersion;
  m["timestamp"] = timestamp_utc();
  m["config"] = config_json(cfg);
  m["master_seed"] = cfg.master_seed;
  m["seeds"] = seeds;
  m["incomplete"] = incomplete;
  json outputs = json::object();
  for (const std::string& f : output_files) {
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  (unsigned long long)gel::file_digest(out_dir + "/" + f));
    outputs[f] = digest;
  }
  m["outputs"] = outputs;
  gel::atomic_write(out_dir + "/" + command + "_manifest.json", m.dump(2) + "\n");
}

int cmd_moments(const std::string& activation, int order) {
  const gel::Activation sigma = gel::make_activation(activation);
  const gel::GaussEquivConstants c = gel::gauss_moments(sigma, order);
  std::printf("activation=%s order=%d\n", activation.c_str(), order);
  std::printf("mu0=%s\n", gel::format_float(c.mu0).c_str());
  std::printf("mu1=%s\n", gel::format_float(c.mu1).c_str());
  std::printf("mu2=%s\n", gel::format_float(c.mu2).c_str());
  return 0;
}

int cmd_trial(const CommonOpts& opts, gel::Index p_arg) {
  const gel::ExperimentConfig cfg = load_config(opts);
  const gel::Index p = p_arg > 0 ? p_arg : cfg.p_grid.front();
  const std::uint64_t seed = gel::trial_seed(cfg.master_seed, p, 0);
  const gel::TrialResult tr = gel::run_trial(cfg, p, seed);

  gel::UniversalityReport rep;
  rep.trials.push_back(tr);
  const std::string out_dir = resolve_out_dir(opts);
  std::filesystem::create_directories(out_dir);
  gel::atomic_write(out_dir + "/trial.csv", gel::sweep_csv(rep));
  write_manifest(out_dir, "trial", cfg, {seed}, {"trial.csv"}, !tr.ok());

  std::printf("p=%lld seed=%llu converged_A=%d converged_B=%d\n", (long long)tr.p,
              (unsigned long long)tr.seed, tr.converged_A ? 1 : 0,
              tr.converged_B ? 1 : 0);
  std::printf("e_train_A=%s e_train_B=%s\n", gel::format_float(tr.e_train_A).c_str(),
              gel::format_float(tr.e_train_B).c_str());
  std::printf("e_gen_A=%s e_gen_B=%s\n", gel::format_float(tr.e_gen_A).c_str(),
              gel::format_float(tr.e_gen_B).c_str());
  std::printf("rho_A=%s pi_A=%s rho_B=%s pi_B=%s\n",
              gel::format_float(tr.rho_A).c_str(), gel::format_float(tr.pi_A).c_str(),
              gel::format_float(tr.rho_B).c_str(), gel::format_float(tr.pi_B).c_str());
  return 0;
}

int cmd_sweep(const CommonOpts& opts) {
  const gel::ExperimentConfig cfg = load_config(opts);
  const gel::UniversalityReport rep = gel::sweep_p(cfg, opts.jobs);
  const std::string out_dir = resolve_out_dir(opts);
  std::filesystem::create_directories(out_dir);
  gel::atomic_write(out_dir + "/sweep.csv", gel::sweep_csv(rep));
  write_manifest(out_dir, "sweep", cfg, rep.seeds, {"sweep.csv"}, rep.incomplete);

  for (const gel::PerPAggregate& a : rep.per_p) {
    std::printf(
        "p=%lld ok=%d failed=%d train_A=%.6g train_B=%.6g gen_A=%.6g gen_B=%.6g "
        "train_gap=%.3g gen_gap=%.3g\n",
        (long long)a.p, a.n_ok, a.n_failed, a.mean_train_A, a.mean_train_B,
        a.mean_gen_A, a.mean_gen_B, a.train_gap_mean, a.gen_gap_mean);
  }
  if (rep.incomplete) std::printf("incomplete=true (some trials not converged)\n");
  return 0;
}

int cmd_derivatives(const CommonOpts& opts, gel::Index p_arg, double tau_step_arg) {
  const gel::ExperimentConfig cfg = load_config(opts);
  const gel::Index p = p_arg > 0 ? p_arg : cfg.p_grid.front();
  const gel::Activation sigma = gel::make_activation(cfg.activation);
  const gel::GaussEquivConstants c = gel::gauss_moments(sigma);
  const double eta = double(p) / double(cfg.d);
  const double ts = gel::tau_star(cfg.lambda, c.mu1, c.mu2, eta);
  double step = tau_step_arg > 0.0 ? tau_step_arg : cfg.tilt_step;
  if (step > ts) step = ts;  // stay inside the strong-convexity window
  const std::uint64_t seed = gel::substream_seed(cfg.master_seed, "derivatives");
  const gel::DerivativeEstimate de = gel::derivative_estimates(cfg, p, seed, step);

  json rep;
  rep["p"] = (long long)p;
  rep["tau_star"] = ts;
  rep["tau_step"] = de.tau_step;
  rep["rho"] = {{"forward", de.rho_forward},
                {"direct", de.rho_direct},
                {"backward", de.rho_backward},
                {"central", de.rho_central}};
  rep["pi"] = {{"forward", de.pi_forward},
               {"direct", de.pi_direct},
               {"backward", de.pi_backward},
               {"central", de.pi_central}};
  const bool rho_ok =
      de.rho_forward <= de.rho_direct && de.rho_direct <= de.rho_backward;
  rep["rho"]["sandwich_holds"] = rho_ok;
  const std::string out_dir = resolve_out_dir(opts);
  std::filesystem::create_directories(out_dir);
  gel::atomic_write(out_dir + "/derivatives.json", rep.dump(2) + "\n");
  write_manifest(out_dir, "derivatives", cfg, {seed}, {"derivatives.json"}, false);

  std::printf("tau_star=%.6g tau_step=%.6g\n", ts, de.tau_step);
  std::printf("rho sandwich: %.12g <= %.12g <= %.12g  [%s]\n", de.rho_forward,
              de.rho_direct, de.rho_backward, rho_ok ? "holds" : "VIOLATED");
  std::printf("pi quotients: forward=%.12g direct=%.12g backward=%.12g\n",
              de.pi_forward, de.pi_direct, de.pi_backward);
  return 0;
}

int cmd_diagnose(const CommonOpts& opts, gel::Index p_arg) {
  const gel::ExperimentConfig cfg = load_config(opts);
  const gel::Index p = p_arg > 0 ? p_arg : cfg.p_grid.front();
  const gel::Activation sigma = gel::make_activation(cfg.activation);
  const gel::GaussEquivConstants c = gel::gauss_moments(sigma);
  const std::uint64_t seed = gel::substream_seed(cfg.master_seed, "diagnose");
  const gel::FeatureMatrix F = gel::sample_feature_matrix(cfg.d, p, seed);
  const gel::TeacherConfig teacher =
      gel::sample_teacher(cfg.d, gel::parse_map(cfg.teacher),
                          gel::parse_map(cfg.output), seed);
  const gel::AdmissibilityReport adm = gel::admissibility_check(F, teacher.xi);
  const gel::Index n_mc = cfg.diag_n_mc > 0 ? cfg.diag_n_mc : 10 * p;
  const gel::GapEstimate cov = gel::covariance_gap(F, sigma, c, n_mc, seed);
  gel::Vector beta = gel::Vector::Ones(p);
  const gel::GapEstimate clt = gel::clt_gap(
      F, teacher.xi, beta, [](double x, double) { return std::tanh(x); }, sigma, c,
      n_mc, seed);

  json rep;
  rep["p"] = (long long)p;
  rep["a1"] = {{"margin", adm.a1_margin},
               {"threshold", adm.a1_threshold},
               {"pass", adm.pass_a1}};
  rep["a2"] = {{"norm", adm.a2_norm},
               {"threshold", adm.a2_threshold},
               {"pass", adm.pass_a2}};
  rep["kappa_p_proxy"] = adm.kappa_p;
  rep["covariance_gap"] = {{"gap", cov.gap}, {"std_band", cov.std_band}};
  rep["clt_gap"] = {{"gap", clt.gap}, {"std_band", clt.std_band}};
  const std::string out_dir = resolve_out_dir(opts);
  std::filesystem::create_directories(out_dir);
  gel::atomic_write(out_dir + "/diagnose.json", rep.dump(2) + "\n");
  write_manifest(out_dir, "diagnose", cfg, {seed}, {"diagnose.json"}, false);

  std::printf("A1: margin=%.6g threshold=%.6g %s\n", adm.a1_margin, adm.a1_threshold,
              adm.pass_a1 ? "pass" : "FAIL");
  std::printf("A2: norm=%.6g threshold=%.6g %s\n", adm.a2_norm, adm.a2_threshold,
              adm.pass_a2 ? "pass" : "FAIL");
  std::printf("kappa_p proxy=%.6g\n", adm.kappa_p);
  std::printf("covariance gap=%.6g (band %.2g)\n", cov.gap, cov.std_band);
  std::printf("clt gap=%.6g (band %.2g)\n", clt.gap, clt.std_band);
  return 0;
}

int cmd_audit_path(const CommonOpts& opts, gel::Index p_arg, gel::Index stride_arg) {
  const gel::ExperimentConfig cfg = load_config(opts);
  const gel::Index p = p_arg > 0 ? p_arg : cfg.p_grid.front();
  const gel::Index stride = stride_arg > 0 ? stride_arg : cfg.path_stride;
  const std::uint64_t seed = gel::substream_seed(cfg.master_seed, "audit_path");
  const gel::PathAudit audit = gel::lindeberg_path_audit(cfg, p, seed, stride);
  const std::string out_dir = resolve_out_dir(opts);
  std::filesystem::create_directories(out_dir);
  gel::atomic_write(out_dir + "/path_audit.csv", gel::path_csv(audit));
  write_manifest(out_dir, "audit-path", cfg, {seed}, {"path_audit.csv"}, false);

  std::printf("phi_0/p=%.12g phi_n/p=%.12g\n", audit.phi0_over_p, audit.phin_over_p);
  std::printf("max_step/p=%.6g mean_step/p=%.6g total_drift/p=%.6g\n",
              audit.max_step_over_p, audit.mean_step_over_p,
              audit.total_drift_over_p);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-feature / Gaussian-surrogate equivalence lab"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string activation = "tanh";
  int order = 101;
  long long p_arg = 0, stride_arg = 0;
  double tau_step_arg = 0.0;

  CLI::App* moments = app.add_subcommand("moments", "print Gaussian moment constants");
  moments->add_option("--activation", activation, "activation name");
  moments->add_option("--order", order, "quadrature order (odd, >= 3)");
  add_common(moments, opts);

  CLI::App* trial = app.add_subcommand("trial", "run one coupled trial");
  trial->add_option("--p", p_arg, "feature count (default: first grid entry)");
  add_common(trial, opts);

  CLI::App* sweep = app.add_subcommand("sweep", "run the full p-grid sweep");
  add_common(sweep, opts);

  CLI::App* deriv = app.add_subcommand("derivatives", "tilt derivative sandwich");
  deriv->add_option("--p", p_arg, "feature count (default: first grid entry)");
  deriv->add_option("--tau-step", tau_step_arg, "tilt step (default: config, capped at tau*)");
  add_common(deriv, opts);

  CLI::App* diag = app.add_subcommand("diagnose", "admissibility and gap diagnostics");
  diag->add_option("--p", p_arg, "feature count (default: first grid entry)");
  add_common(diag, opts);

  CLI::App* audit = app.add_subcommand("audit-path", "interpolation path audit");
  audit->add_option("--p", p_arg, "feature count (default: first grid entry)");
  audit->add_option("--stride", stride_arg, "path stride (default: config)");
  add_common(audit, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (moments->parsed()) return cmd_moments(activation, order);
    if (trial->parsed()) return cmd_trial(opts, p_arg);
    if (sweep->parsed()) return cmd_sweep(opts);
    if (deriv->parsed()) return cmd_derivatives(opts, p_arg, tau_step_arg);
    if (diag->parsed()) return cmd_diagnose(opts, p_arg);
    if (audit->parsed()) return cmd_audit_path(opts, p_arg, stride_arg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
