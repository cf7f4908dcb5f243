// Acceptance suite. One PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only
//
// Exit status is 0 only when every criterion that ran passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "rglm/bench.hpp"
#include "rglm/cli.hpp"
#include "rglm/config.hpp"
#include "rglm/datagen.hpp"
#include "rglm/glm.hpp"
#include "rglm/optimize.hpp"
#include "rglm/shrink.hpp"
#include "test_util.hpp"

using namespace rglm;
using namespace rglm::test;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

double rel_err(const Mat& a, const Mat& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

// 1. Analytic gradients and Hessians against central differences.
Outcome criterion1() {
  Stopwatch clock;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> n_dist(5, 50), d_dist(1, 10);
  const double ps[] = {0.0, 0.1, 0.4};
  double worst_g = 0, worst_h = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = n_dist(rng), d = d_dist(rng);
    const bool logistic = k % 2 == 1;
    const double p = logistic ? ps[(k / 2) % 3] : 0.0;
    const Dataset data = logistic ? random_binary_dataset(rng, n, d) : random_linear_dataset(rng, n, d);
    const Vec beta = random_vector(rng, d, 1.0 / std::sqrt(d));
    const GlmFamily fam = logistic ? GlmFamily::logistic() : GlmFamily::linear();

    std::function<double(const Vec&)> f;
    std::function<Vec(const Vec&)> g;
    Mat H;
    if (p > 0) {
      f = [&](const Vec& b) { return weighted_nll(data, b, p); };
      g = [&](const Vec& b) { return weighted_grad(data, b, p); };
      H = weighted_hessian(data, beta, p);
    } else {
      f = [&](const Vec& b) { return nll(fam, data, b); };
      g = [&](const Vec& b) { return grad_nll(fam, data, b); };
      H = hessian_nll(fam, data, beta);
    }
    worst_g = std::max(worst_g, rel_err(g(beta), fd_gradient(f, beta)));
    worst_h = std::max(worst_h, rel_err(H, fd_jacobian(g, beta)));
  }
  const double secs = clock.seconds();
  return {worst_g <= 1e-5 && worst_h <= 1e-4 && secs < 10,
          "max grad rel err " + fmt("%.3g", worst_g) + ", max Hessian rel err " + fmt("%.3g", worst_h) + ", " +
              fmt("%.2f", secs) + " s"};
}

// 2. Shrinkage invariants on random vectors of widely varying scale.
Outcome criterion2() {
  Stopwatch clock;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> d_dist(1, 20);
  std::uniform_real_distribution<double> log_scale(-3, 3), log_tau(-2, 2);
  std::student_t_distribution<double> heavy(2.1);
  long checked = 0, bad_idem = 0, bad_bound = 0, bad_dir = 0, bad_contract = 0;
  for (int k = 0; k < 12000; ++k) {
    const int d = d_dist(rng);
    const double scale = std::pow(10.0, log_scale(rng));
    const double tau = std::pow(10.0, log_tau(rng));
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = scale * heavy(rng);
    for (ShrinkNorm norm : {ShrinkNorm::l4, ShrinkNorm::l2}) {
      const Vec y = norm_shrink(x, tau, norm);
      ++checked;
      if (norm_shrink(y, tau, norm) != y) ++bad_idem;
      // Independent norm: long double, no rescaling.
      long double acc = 0;
      for (int j = 0; j < d; ++j) {
        const long double v = y[j];
        acc += norm == ShrinkNorm::l4 ? v * v * v * v : v * v;
      }
      const double len = static_cast<double>(norm == ShrinkNorm::l4 ? std::sqrt(std::sqrt(acc)) : std::sqrt(acc));
      if (len > tau * (1 + 1e-12)) ++bad_bound;
      const double c = y.dot(x) / x.dot(x);
      if (!(c > 0 && c <= 1) || (y - c * x).norm() > 1e-12 * y.norm()) ++bad_dir;
      if ((y.cwiseAbs().array() > x.cwiseAbs().array()).any()) ++bad_contract;
    }
    const Vec y = elementwise_clip(x, tau);
    ++checked;
    if (elementwise_clip(y, tau) != y) ++bad_idem;
    if (y.cwiseAbs().maxCoeff() > tau) ++bad_bound;
    for (int j = 0; j < d; ++j)
      if (y[j] * x[j] < 0 || (x[j] != 0 && y[j] == 0)) {
        ++bad_dir;
        break;
      }
    if ((y.cwiseAbs().array() > x.cwiseAbs().array()).any()) ++bad_contract;
  }
  const double secs = clock.seconds();
  const bool pass = bad_idem + bad_bound + bad_dir + bad_contract == 0 && secs < 5;
  return {pass, std::to_string(checked) + " shrinks; violations idempotence " + std::to_string(bad_idem) + ", bound " +
                    std::to_string(bad_bound) + ", direction " + std::to_string(bad_dir) + ", contraction " +
                    std::to_string(bad_contract) + ", " + fmt("%.2f", secs) + " s"};
}

// 3. (1-p) l_w(y) + p l_w(1-y) = l(y).
Outcome criterion3() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> d_dist(1, 10);
  std::uniform_real_distribution<double> p_dist(0.0, 0.45);
  std::bernoulli_distribution coin(0.5);
  const GlmFamily logit = GlmFamily::logistic();
  double worst = 0;
  for (int k = 0; k < 10000; ++k) {
    const int d = d_dist(rng);
    const Vec x = random_vector(rng, d);
    const Vec beta = random_vector(rng, d);
    const double y = coin(rng) ? 1.0 : 0.0;
    const double p = p_dist(rng);
    const double eta = x.dot(beta);
    const double lhs = (1 - p) * sample_weighted_loss(eta, y, p) + p * sample_weighted_loss(eta, 1 - y, p);
    worst = std::max(worst, std::abs(lhs - sample_loss(logit, eta, y)));
  }
  return {worst <= 1e-12, "max abs err " + fmt("%.3g", worst) + " over 10000 tuples"};
}

// 4. Solvers against closed forms.
Outcome criterion4() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> d_dist(1, 10);
  double worst_ls = 0, worst_soft = 0, worst_kkt = 0;
  int unconverged = 0, l1_fits = 0;
  for (int k = 0; k < 100; ++k) {
    const int d = d_dist(rng);
    const int n = d + 5 + static_cast<int>(rng() % 50);
    const Dataset data = random_linear_dataset(rng, n, d);
    const FitResult fit = fit_mle(GlmFamily::linear(), data, SolverOpts{});
    const Vec ls = data.X.colPivHouseholderQr().solve(data.z);
    worst_ls = std::max(worst_ls, rel_err(fit.beta_hat, ls));
    if (!fit.converged) ++unconverged;
  }
  auto track_kkt = [&](const GlmFamily& fam, const Dataset& data, const FitResult& fit, double lambda) {
    ++l1_fits;
    if (fit.converged) worst_kkt = std::max(worst_kkt, kkt_residual(fam, data, fit.beta_hat, lambda));
    else ++unconverged;
  };
  std::uniform_real_distribution<double> lam_dist(0.01, 0.5);
  for (int k = 0; k < 50; ++k) {
    Dataset data;
    const int n = 40 + static_cast<int>(rng() % 40), d = 2 + static_cast<int>(rng() % 15);
    data.X = orthonormal_design(rng, n, d);
    data.z = random_vector(rng, n);
    const double lambda = lam_dist(rng);
    const Vec closed = soft_threshold(Vec(data.X.transpose() * data.z / static_cast<double>(n)), lambda);
    const FitResult fit = fit_l1(GlmFamily::linear(), data, lambda, SolverOpts{});
    worst_soft = std::max(worst_soft, (fit.beta_hat - closed).lpNorm<Eigen::Infinity>());
    track_kkt(GlmFamily::linear(), data, fit, lambda);
  }
  // High-dimensional fits of both families for the KKT certificate.
  for (int k = 0; k < 50; ++k) {
    const bool logistic = k % 2 == 1;
    const int n = 30 + static_cast<int>(rng() % 30), d = 20 + static_cast<int>(rng() % 60);
    const Dataset data = logistic ? random_binary_dataset(rng, n, d) : random_linear_dataset(rng, n, d);
    const GlmFamily fam = logistic ? GlmFamily::logistic() : GlmFamily::linear();
    const double lambda = lam_dist(rng) * (logistic ? 0.3 : 1.0);
    track_kkt(fam, data, fit_l1(fam, data, lambda, SolverOpts{}), lambda);
  }
  const bool pass = worst_ls <= 1e-8 && worst_soft <= 1e-7 && worst_kkt <= 1e-8;
  return {pass, "normal equations rel err " + fmt("%.3g", worst_ls) + ", soft-threshold err " +
                    fmt("%.3g", worst_soft) + ", max KKT residual " + fmt("%.3g", worst_kkt) + " over " +
                    std::to_string(l1_fits) + " l1 fits, " + std::to_string(unconverged) + " unconverged"};
}

std::string table_text(const ErrorTable& table) {
  std::ostringstream os;
  for (const auto& r : table.rows)
    os << "\n    " << r.method << ' ' << r.feature_dist << " n=" << r.n << " mean=" << fmt("%.4f", r.mean_l2_error)
       << " se=" << fmt("%.4f", r.stderr_) << " failures=" << r.failures;
  return os.str();
}

// 5. High-dimensional linear model with heavy-tailed features and noise.
Outcome criterion5() {
  Stopwatch clock;
  ExperimentConfig c = load_experiment_config(RGLM_SOURCE_DIR "/configs/fig2_small.yaml");
  c.n_grid = {200, 500, 1000};
  c.feature_dists = {FeatureDist::student_t(4.1)};
  c.trials = 50;
  const ExperimentSummary s = run_experiment(c, 1);
  const double secs = clock.seconds();
  const std::string dist = c.feature_dists[0].to_string();
  bool pass = secs < 15 * 60;
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
    const ErrorRow* clip = s.table.find("l1_clip", dist, c.n_grid[i]);
    const ErrorRow* raw = s.table.find("l1_raw", dist, c.n_grid[i]);
    pass = pass && clip->mean_l2_error < raw->mean_l2_error;
    if (i > 0) {
      pass = pass && clip->mean_l2_error < s.table.find("l1_clip", dist, c.n_grid[i - 1])->mean_l2_error;
      pass = pass && raw->mean_l2_error < s.table.find("l1_raw", dist, c.n_grid[i - 1])->mean_l2_error;
    }
  }
  return {pass, fmt("%.0f s", secs) + table_text(s.table)};
}

ExperimentConfig lowdim_config() {
  ExperimentConfig c;
  c.name = "lowdim";
  c.model = ModelKind::logistic_lowdim;
  c.d = 10;
  c.beta = BetaPattern::half_pm_half;
  c.corruption.kind = CorruptionKind::label_flip;
  c.corruption.flip_p = 0.1;
  c.solver.max_iters = 200;
  return c;
}

// 6. Low-dimensional logistic model with flipped labels.
Outcome criterion6() {
  Stopwatch clock;
  ExperimentConfig c = lowdim_config();
  c.n_grid = {500, 2000, 5000};
  c.feature_dists = {FeatureDist::student_t(2.1), FeatureDist::gaussian()};
  c.trials = 100;
  MethodSpec raw;
  raw.id = "wmle_raw";
  raw.estimator = EstimatorKind::weighted_mle;
  MethodSpec l4 = raw;
  l4.id = "wmle_l4_cv";
  l4.shrink.feature_mode = FeatureMode::norm_shrink_l4;
  l4.tau1_multipliers = {0.25, 0.5, 1, 2, 4, kInf};
  c.methods = {raw, l4};
  const ExperimentSummary s = run_experiment(c, 1);
  const double secs = clock.seconds();
  bool pass = secs < 10 * 60;
  for (int n : c.n_grid) {
    const ErrorRow* heavy_raw = s.table.find("wmle_raw", "t:2.1", n);
    const ErrorRow* heavy_l4 = s.table.find("wmle_l4_cv", "t:2.1", n);
    pass = pass && heavy_l4->mean_l2_error < heavy_raw->mean_l2_error;
    const ErrorRow* g_raw = s.table.find("wmle_raw", "gaussian", n);
    const ErrorRow* g_l4 = s.table.find("wmle_l4_cv", "gaussian", n);
    const double se = std::hypot(g_raw->stderr_, g_l4->stderr_);
    pass = pass && std::abs(g_raw->mean_l2_error - g_l4->mean_l2_error) < 2 * se;
  }
  return {pass, fmt("%.0f s", secs) + table_text(s.table)};
}

// 7. Error rate in n for the shrunk weighted MLE under Gaussian features.
Outcome criterion7() {
  Stopwatch clock;
  ExperimentConfig c = lowdim_config();
  c.n_grid = {500, 1000, 2000, 4000, 8000};
  c.trials = 200;
  MethodSpec l4;
  l4.id = "wmle_l4";
  l4.estimator = EstimatorKind::weighted_mle;
  l4.shrink.feature_mode = FeatureMode::norm_shrink_l4;
  c.methods = {l4};
  const ExperimentSummary s = run_experiment(c, 1);
  const double secs = clock.seconds();
  // Least-squares slope of log(mean error) on log(n).
  std::vector<double> lx, ly;
  for (int n : c.n_grid) {
    lx.push_back(std::log(n));
    ly.push_back(std::log(s.table.find("wmle_l4", "gaussian", n)->mean_l2_error));
  }
  const double k = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / k, my += ly[i] / k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  const double slope = sxy / sxx;
  const bool pass = slope >= -0.65 && slope <= -0.35 && secs < 15 * 60;
  return {pass, "slope " + fmt("%.4f", slope) + ", " + fmt("%.0f s", secs) + table_text(s.table)};
}

// 8. Restricted strong convexity probe.
Outcome criterion8() {
  const int n = 2000, d = 10;
  Vec beta = make_beta(d, BetaPattern::half_pm_half);
  beta /= beta.norm();
  double smallest = kInf;
  int positive = 0, total = 0;
  for (const FeatureDist& dist : {FeatureDist::gaussian(), FeatureDist::student_t(4.1)}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Mat X = gen_features(n, d, dist, derive_seed(808, "features", static_cast<std::uint64_t>(rep)));
      const Dataset data = gen_logistic(X, beta, derive_seed(808, "labels", static_cast<std::uint64_t>(rep)));
      ShrinkSpec spec;
      spec.feature_mode = FeatureMode::norm_shrink_l4;
      spec.tau1 = default_tau(n, TauScale::log_n);
      const LrscResult r = lrsc_probe(GlmFamily::logistic(), apply_shrink(data, spec), beta, 0.5, 500,
                                      derive_seed(808, "directions", static_cast<std::uint64_t>(rep)));
      ++total;
      if (r.min_ratio > 0) ++positive;
      smallest = std::min(smallest, r.min_ratio);
    }
  }
  // Linear family: the remainder is (1/2n) v'X'Xv exactly.
  std::mt19937_64 rng(809);
  double worst_identity = 0, worst_floor = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset data = random_linear_dataset(rng, 200, 8);
    const LrscResult r = lrsc_probe(GlmFamily::linear(), data, random_vector(rng, 8), 0.5, 500, 900 + rep);
    const Vec& v = r.min_direction;
    const double direct = 0.5 * (data.X * v).squaredNorm() / 200.0 / v.squaredNorm();
    worst_identity = std::max(worst_identity, std::abs(direct - r.min_ratio));
    const Mat gram = data.X.transpose() * data.X / 200.0;
    const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(gram).eigenvalues()[0];
    worst_floor = std::max(worst_floor, lmin / 2 - r.min_ratio);
  }
  const bool pass = positive == total && worst_identity <= 1e-10 && worst_floor <= 1e-10;
  return {pass, std::to_string(positive) + "/" + std::to_string(total) + " logistic probes positive (smallest " +
                    fmt("%.4g", smallest) + "); linear identity err " + fmt("%.3g", worst_identity) +
                    ", eigenvalue floor slack " + fmt("%.3g", -worst_floor)};
}

// 9. Classification with 40% flipped labels against a clean-label baseline.
Outcome criterion9() {
  const int n = 5000, d = 50, trials = 20;
  const double p = 0.4;
  const FeatureDist dist = FeatureDist::student_t(4.1);
  const Vec beta = make_beta(d, BetaPattern::half_pm_half);
  SolverOpts opts;
  opts.max_iters = 200;
  ShrinkSpec spec;
  spec.feature_mode = FeatureMode::norm_shrink_l4;
  spec.tau1 = default_tau(n, TauScale::log_n);
  double base = 0, shrunk = 0, raw = 0;
  for (int t = 0; t < trials; ++t) {
    const auto u = static_cast<std::uint64_t>(t);
    const Dataset clean = gen_logistic(gen_features(n, d, dist, derive_seed(909, "features", u)), beta,
                                       derive_seed(909, "labels", u));
    const Dataset noisy = flip_labels(clean, p, derive_seed(909, "flips", u));
    const Mat Xt = gen_features(n, d, dist, derive_seed(909, "test_features", u));
    const Dataset test = gen_logistic(Xt, beta, derive_seed(909, "test_labels", u));
    base += classification_error(Xt, test.z, fit_mle(GlmFamily::logistic(), clean, opts).beta_hat) / trials;
    shrunk += classification_error(Xt, test.z,
                                   fit_mle(GlmFamily::logistic(), apply_shrink(noisy, spec), opts, p).beta_hat) /
              trials;
    raw += classification_error(Xt, test.z, fit_mle(GlmFamily::logistic(), noisy, opts, p).beta_hat) / trials;
  }
  return {shrunk - base <= 0.02, "clean baseline " + fmt("%.4f", base) + ", shrunk weighted " + fmt("%.4f", shrunk) +
                                     " (gap " + fmt("%.2f", 100 * (shrunk - base)) + " pp), unshrunk weighted " +
                                     fmt("%.4f", raw)};
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// 10. Bench output does not depend on the worker count.
Outcome criterion10() {
  const std::string dir = "/tmp/rglm_acceptance_" + std::to_string(::getpid());
  std::filesystem::create_directories(dir);
  std::string csv[2];
  int codes[2];
  const char* workers[2] = {"1", "8"};
  for (int k = 0; k < 2; ++k) {
    const std::string out = dir + "/bench_w" + workers[k] + ".csv";
    std::ostringstream sink;
    codes[k] = run_cli({"bench", "--config", RGLM_SOURCE_DIR "/configs/fig3_lowdim_small.yaml", "--workers",
                        workers[k], "--out", out},
                       sink, sink);
    csv[k] = slurp(out);
  }
  std::filesystem::remove_all(dir);
  const bool pass = codes[0] == 0 && codes[1] == 0 && !csv[0].empty() && csv[0] == csv[1];
  return {pass, "exit codes " + std::to_string(codes[0]) + "/" + std::to_string(codes[1]) + ", " +
                    std::to_string(csv[0].size()) + " bytes, " + (csv[0] == csv[1] ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10};
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "criterion must be in 1.." << criteria.size() << '\n';
    return 2;
  }
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && static_cast<int>(k) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << k + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
