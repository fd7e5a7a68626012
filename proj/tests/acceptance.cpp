// Acceptance gate. Each criterion prints exactly one PASS/FAIL line; the
// process exits non-zero when any selected hard criterion fails.
//
//   hjbnn_acceptance                 run everything
//   hjbnn_acceptance --criterion 5   run one criterion

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hjbnn/harness.hpp"
#include "hjbnn/linalg.hpp"
#include "hjbnn/network.hpp"
#include "hjbnn/optimizers.hpp"

#ifndef HJBNN_DATA_DIR
#define HJBNN_DATA_DIR "data"
#endif

using namespace hjbnn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool informational = false;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double v) { return fmt("%.0f%%", 100.0 * v); }

Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen, double lo = -1.0,
                      double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.span()) v = d(gen);
  return m;
}

Vector uniform_vector(std::size_t n, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (double& x : v) x = d(gen);
  return v;
}

TrainerConfig offline(Algorithm a) {
  TrainerConfig c;
  c.algorithm = a;
  c.mode = Mode::Offline;
  return c;
}

TrainerConfig bp(double eta, Mode m = Mode::Offline) {
  TrainerConfig c = offline(Algorithm::BP);
  c.eta = eta;
  c.mode = m;
  return c;
}

TrainerConfig hjb(double r, Mode m = Mode::Offline) {
  TrainerConfig c = offline(Algorithm::HJB);
  c.r = r;
  c.mode = m;
  return c;
}

TrainerConfig damped(Algorithm a, double mu, double beta) {
  TrainerConfig c = offline(a);
  c.mu = mu;
  c.beta = beta;
  return c;
}

Experiment experiment(const std::string& dataset, Architecture arch, std::size_t trials,
                      std::vector<TrainerConfig> configs) {
  Experiment e;
  e.dataset_spec.name = dataset;
  e.arch = arch;
  e.n_trials = trials;
  e.base_seed = 1;
  e.trainer_configs = std::move(configs);
  return e;
}

// ---------------------------------------------------------------------------

Outcome jacobian_oracle() {
  const Timer t;
  std::mt19937_64 gen(2024);
  const Architecture archs[] = {{3, 4, 1}, {9, 30, 1}, {3, 6, 1}};
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const Architecture a = archs[c % 3];
    const Network net = unpack(a, uniform_vector(a.weight_count(), gen));
    Vector x = uniform_vector(a.n_input, gen, 0.0, 1.0);
    x[a.n_input - 1] = 1.0;
    worst = std::max(worst, max_abs_diff(jacobian(net, x), finite_difference_jacobian(net, x, 1e-6)));
  }
  const double secs = t.seconds();
  return {worst <= 1e-5 && secs < 10.0,
          "max |analytic - fd| = " + fmt("%.2e", worst) + " (tol 1e-5), " + fmt("%.2f s", secs)};
}

Outcome c_matrix_identity() {
  const Timer t;
  std::mt19937_64 gen(7);
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t m = 1 + c % 20;
    const Matrix j = uniform_matrix(m, m + 10, gen);
    const double r = 0.1 + 0.2 * c;
    const Matrix a = scale(gram_rows(j), 1.0 / r);
    const Matrix cm = build_c(j, r, 0.0, 0.0);
    worst = std::max(worst, max_abs_diff(multiply(multiply(cm, a), cm), Matrix::identity(m)));
  }
  const double secs = t.seconds();
  return {worst <= 1e-6 && secs < 5.0,
          "max |C A C - I| = " + fmt("%.2e", worst) + " (tol 1e-6), " + fmt("%.2f s", secs)};
}

Outcome scalar_path() {
  std::mt19937_64 gen(11);
  double worst = 0.0;
  bool all_defined = true;
  for (int c = 0; c < 100; ++c) {
    const Matrix j = uniform_matrix(1, 1 + c % 30, gen);
    const double e = uniform_vector(1, gen)[0];
    const double r = 0.05 + 0.1 * c;
    const auto single = step_hjb_single(j, e, r);
    if (!single) {
      all_defined = false;
      continue;
    }
    worst = std::max(worst, max_abs_diff(step_hjb(j, Vector{e}, r, 0.0, 0.0), *single));
  }
  return {all_defined && worst <= 1e-10, "max |multi - single| = " + fmt("%.2e", worst) + " (tol 1e-10)"};
}

Outcome descent() {
  std::mt19937_64 gen(13);
  double worst = INFINITY;
  for (int c = 0; c < 200; ++c) {
    const std::size_t m = 1 + c % 10;
    const Matrix j = uniform_matrix(m, 2 + c % 17, gen, -3.0, 3.0);
    const Vector e = uniform_vector(m, gen, -2.0, 2.0);
    worst = std::min(worst, lyapunov_rate(j, e, step_bp(j, e, 0.5)));
    if (auto u = step_lf(j, e, 0.3)) worst = std::min(worst, lyapunov_rate(j, e, *u));
    worst = std::min(worst, lyapunov_rate(j, e, step_lm(j, e, 0.01)));
    worst = std::min(worst, lyapunov_rate(j, e, step_hjb(j, e, 0.5, 0.0, kDefaultEps)));
  }
  return {worst >= -1e-12, "min e'Ju over BP/LF/LM/HJB = " + fmt("%.3e", worst) + " (tol -1e-12)"};
}

Outcome xor_convergence() {
  const Timer t;
  const auto rep = run_experiment(experiment("xor", {3, 4, 1}, 25, {bp(1.0), hjb(0.1)}));
  const double s_bp = rep.algorithms[0].success_score, s_hjb = rep.algorithms[1].success_score;
  const double secs = t.seconds();
  return {s_bp == 1.0 && s_hjb == 1.0 && secs < 120.0,
          "success BP " + pct(s_bp) + ", HJB " + pct(s_hjb) + " (need 100% both), " +
              fmt("%.1f s", secs)};
}

Outcome modulo2_success() {
  const Timer t;
  const auto six = run_experiment(experiment("modulo2", {3, 6, 1}, 25,
                                             {bp(1.0), hjb(0.1), damped(Algorithm::HJB_LM, 0.01, 10)}));
  const auto eight = run_experiment(experiment("modulo2", {3, 8, 1}, 25, {bp(1.0), hjb(0.1)}));
  const double bp6 = six.algorithms[0].success_score, hjb6 = six.algorithms[1].success_score;
  const double lm6 = six.algorithms[2].success_score;
  const double bp8 = eight.algorithms[0].success_score, hjb8 = eight.algorithms[1].success_score;
  const double tol = 0.15;
  const double secs = t.seconds();
  const bool ok = hjb6 >= bp6 - tol && hjb8 >= bp8 - tol && hjb8 >= 0.85 && lm6 >= 0.95 && secs < 900.0;
  return {ok, "3-6-1 BP " + pct(bp6) + " HJB " + pct(hjb6) + " HJB-LM " + pct(lm6) + "; 3-8-1 BP " +
                  pct(bp8) + " HJB " + pct(hjb8) + " (HJB >= BP-15pp, HJB@3-8-1 >= 85%, HJB-LM >= 95%), " +
                  fmt("%.1f s", secs)};
}

Outcome modulo2_speed() {
  const auto rep = run_experiment(experiment("modulo2", {3, 10, 1}, 25, {bp(1.0), hjb(0.1)}));
  const auto& b = rep.algorithms[0];
  const auto& h = rep.algorithms[1];
  if (!b.median_epochs || !h.median_epochs)
    return {false, "no converged trials for one of the algorithms"};
  const double ratio = *h.median_epochs / *b.median_epochs;
  return {ratio <= 0.3, "median epochs HJB " + fmt("%.0f", *h.median_epochs) + " vs BP " +
                            fmt("%.0f", *b.median_epochs) + ", ratio " + fmt("%.3f", ratio) +
                            " (need <= 0.3)"};
}

// HJB-LM runs are capped at 500 epochs: the criterion bounds the mean epoch
// count by 500, and the runs stall on an error plateau well before that cap.
Outcome parity8() {
  const Timer t;
  TrainerConfig hl = damped(Algorithm::HJB_LM, 1e-3, 10);
  hl.max_epochs = 500;
  const TrainerConfig lm = damped(Algorithm::LM, 1e-3, 10);
  Experiment e30 = experiment("parity", {9, 30, 1}, 20, {hl, lm});
  e30.dataset_spec.bits = 8;
  Experiment e50 = experiment("parity", {9, 50, 1}, 20, {hl});
  e50.dataset_spec.bits = 8;
  const auto r30 = run_experiment(e30);
  const auto r50 = run_experiment(e50);
  const auto& hl30 = r30.algorithms[0];
  const auto& lm30 = r30.algorithms[1];
  const auto& hl50 = r50.algorithms[0];
  const double secs = t.seconds();

  auto epochs = [](const AlgorithmReport& a) {
    return a.avg_epochs ? fmt("%.1f", *a.avg_epochs) : std::string("n/a");
  };
  const bool first = hl30.success_score >= 0.9 && hl30.avg_epochs && *hl30.avg_epochs <= 500.0;
  const bool second = hl50.avg_epochs && lm30.avg_epochs && *hl50.avg_epochs <= 1.5 * *lm30.avg_epochs;
  return {first && second && secs < 1800.0,
          "9-30-1 HJB-LM success " + pct(hl30.success_score) + " mean epochs " + epochs(hl30) +
              " (need >= 90%, <= 500); 9-50-1 HJB-LM mean " + epochs(hl50) + " vs 1.5 x LM " +
              epochs(lm30) + "; final rms HJB-LM " + fmt("%.3f", hl30.mean_final_rms) + ", " +
              fmt("%.0f s", secs)};
}

Outcome gabor_online() {
  TrainerConfig b = bp(0.5, Mode::Online), h = hjb(1.5, Mode::Online);
  b.max_epochs = h.max_epochs = 200;
  Experiment e = experiment("gabor", {3, 6, 1}, 20, {b, h});
  e.dataset_spec.n = 100;
  e.dataset_spec.seed = 7;
  e.checkpoints = {200};
  const auto rep = run_experiment(e);
  const double rb = rep.algorithms[0].rms_at_checkpoints.at(200);
  const double rh = rep.algorithms[1].rms_at_checkpoints.at(200);
  return {rh < rb, "mean rms at epoch 200: HJB " + fmt("%.4f", rh) + " vs BP " + fmt("%.4f", rb) +
                       " (need HJB < BP)"};
}

Outcome breast_cancer() {
  const Timer t;
  TrainerConfig b = bp(0.2, Mode::Online), h = hjb(2.5, Mode::Online);
  b.max_epochs = h.max_epochs = 6000;
  Experiment e = experiment("csv", {10, 15, 1}, 20, {b, h});
  e.dataset_spec.path = std::string(HJBNN_DATA_DIR) + "/breast-cancer-wisconsin.data";
  e.dataset_spec.n_inputs = 9;
  e.dataset_spec.target_column = 10;
  e.dataset_spec.skip_columns = {0};
  e.dataset_spec.split_train = 600;
  e.dataset_spec.seed = 1;
  const auto rep = run_experiment(e);
  const auto& rb = rep.algorithms[0];
  const auto& rh = rep.algorithms[1];
  const std::size_t bp_failed = rb.trials.size() - rb.converged_trials;
  const double miscl = rh.misclassification_rate.value_or(1.0);
  const bool ok = rh.converged_trials >= 15 && bp_failed >= 15 && miscl <= 0.05;
  return {ok, "HJB converged " + std::to_string(rh.converged_trials) + "/20 (need >= 15), BP failed " +
                  std::to_string(bp_failed) + "/20 (need >= 15), HJB test misclassification " +
                  pct(miscl) + " (need <= 5%), HJB mean final rms " + fmt("%.4f", rh.mean_final_rms) +
                  ", " + fmt("%.0f s", t.seconds())};
}

Outcome toy_basins() {
  auto grid = [](double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
      g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
  };
  const auto left = grid(-0.98, -0.02, 50);
  const auto right = grid(0.12, 2.48, 50);

  BasinSettings gradient;
  gradient.rule = ScalarRule::Gradient;
  gradient.eta = 0.1;
  BasinSettings lyap;
  lyap.rule = ScalarRule::HjbSingle;
  lyap.r = 1.0;
  lyap.dt = 2e-4;
  lyap.max_steps = 3'000'000;

  double worst = 0.0;
  std::string detail;
  for (const auto& [name, s] : {std::pair{"gradient", gradient}, std::pair{"hjb", lyap}}) {
    double w = 0.0;
    for (const auto& p : basin_experiment(s, left)) w = std::max(w, std::abs(p.terminal + 1.0));
    for (const auto& p : basin_experiment(s, right)) w = std::max(w, std::abs(p.terminal - 2.0));
    detail += std::string(detail.empty() ? "" : ", ") + name + " max miss " + fmt("%.2e", w);
    worst = std::max(worst, w);
  }
  return {worst <= 1e-3, detail + " (tol 1e-3)"};
}

Outcome snac() {
  TrainerConfig plain = hjb(5.0, Mode::Online);
  TrainerConfig critic = plain;
  critic.critic = CriticConfig{};
  const auto rep = run_experiment(experiment("modulo2", {3, 4, 1}, 20, {plain, critic}));
  const double sp = rep.algorithms[0].success_score, sc = rep.algorithms[1].success_score;
  return {sc > sp, "success with critic " + pct(sc) + " vs plain online HJB " + pct(sp), true};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hjbnn acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-12)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "jacobian vs finite differences", jacobian_oracle},
      {2, "C-matrix identity", c_matrix_identity},
      {3, "scalar-path equivalence", scalar_path},
      {4, "descent property", descent},
      {5, "XOR global convergence", xor_convergence},
      {6, "modulo-2 success ordering", modulo2_success},
      {7, "modulo-2 speed ordering", modulo2_speed},
      {8, "8-bit parity", parity8},
      {9, "2D Gabor online", gabor_online},
      {10, "breast cancer online", breast_cancer},
      {11, "quartic basins", toy_basins},
      {12, "adaptive critic on modulo-2", snac},
  };

  int failures = 0;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %2d %-32s %s%s: %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
                o.informational ? " (informational)" : "", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !o.informational) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
