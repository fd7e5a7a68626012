#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "hjbnn/error.hpp"
#include "hjbnn/harness.hpp"
#include "hjbnn/json_io.hpp"

using namespace hjbnn;
namespace fs = std::filesystem;

namespace {

Experiment small_experiment() {
  Experiment e;
  e.dataset_spec.name = "xor";
  e.arch = {3, 4, 1};
  e.n_trials = 4;
  e.base_seed = 10;
  e.checkpoints = {1, 5, 100000};
  TrainerConfig bp;
  bp.algorithm = Algorithm::BP;
  bp.max_epochs = 300;
  TrainerConfig hjb;
  hjb.algorithm = Algorithm::HJB;
  hjb.r = 0.1;
  hjb.max_epochs = 300;
  e.trainer_configs = {bp, hjb};
  return e;
}

SuccessReport without_times(SuccessReport r) {
  for (auto& a : r.algorithms) {
    a.avg_wall_time = 0.0;
    for (auto& t : a.trials) t.result.wall_time = 0.0;
  }
  return r;
}

TrialRecord record(bool converged, std::size_t epochs, std::vector<double> history,
                   std::optional<double> miscl = std::nullopt) {
  TrialRecord t;
  t.result.converged = converged;
  t.result.epochs_used = epochs;
  t.result.rms_history = std::move(history);
  t.result.final_rms = t.result.rms_history.back();
  t.result.wall_time = 1.0;
  t.misclassification_rate = miscl;
  return t;
}

}  // namespace

TEST_CASE("dataset specs build the named generators") {
  DatasetSpec s;
  s.name = "parity";
  s.bits = 4;
  CHECK(s.build().pattern_count() == 16);
  s.name = "gabor";
  s.n = 30;
  CHECK(s.build().pattern_count() == 30);
  s.name = "nope";
  CHECK_THROWS_AS(s.build(), ParameterError);
  s.name = "csv";
  CHECK_THROWS_AS(s.build(), ParameterError);
}

TEST_CASE("experiment validation") {
  Experiment e = small_experiment();
  CHECK_NOTHROW(e.validate());
  e.n_trials = 0;
  CHECK_THROWS_AS(e.validate(), ParameterError);
  e = small_experiment();
  e.trainer_configs.clear();
  CHECK_THROWS_AS(e.validate(), ParameterError);
  e = small_experiment();
  e.arch = {4, 4, 1};
  CHECK_THROWS_AS(run_experiment(e), DimensionError);
}

TEST_CASE("summary statistics") {
  TrainerConfig c;
  c.algorithm = Algorithm::BP;
  std::vector<TrialRecord> trials{record(true, 10, {0.5, 0.2, 0.005}, 0.1),
                                  record(false, 3, {0.5, 0.4, 0.3}, 0.3),
                                  record(true, 30, {0.9, 0.009}), record(true, 20, {0.2, 0.001})};
  const std::vector<std::size_t> cps{1, 3};
  const AlgorithmReport a = summarize(c, trials, cps);
  CHECK(a.success_score == doctest::Approx(0.75));
  CHECK(a.converged_trials == 3);
  CHECK(*a.avg_epochs == doctest::Approx(20.0));
  CHECK(*a.median_epochs == doctest::Approx(20.0));
  CHECK(a.avg_wall_time == doctest::Approx(1.0));
  CHECK(a.mean_final_rms == doctest::Approx((0.005 + 0.3 + 0.009 + 0.001) / 4));
  CHECK(*a.misclassification_rate == doctest::Approx(0.2));
  CHECK(a.rms_at_checkpoints.at(1) == doctest::Approx((0.5 + 0.5 + 0.9 + 0.2) / 4));
  // Trials that stopped before the checkpoint contribute their final RMS.
  CHECK(a.rms_at_checkpoints.at(3) == doctest::Approx((0.005 + 0.3 + 0.009 + 0.001) / 4));
  CHECK(a.label == c.default_label());

  const AlgorithmReport none = summarize(c, {record(false, 2, {0.4, 0.4})}, {});
  CHECK(none.success_score == 0.0);
  CHECK_FALSE(none.avg_epochs.has_value());
  CHECK_FALSE(none.median_epochs.has_value());
}

TEST_CASE("misclassification rate") {
  Network n = unpack({2, 1, 1}, Vector{5.0, 0.0, 0.0});  // output = sigmoid(5 * 0.5) > 0.5
  const Matrix x{{0.0, 1.0}, {1.0, 1.0}, {0.3, 1.0}, {0.2, 1.0}};
  CHECK(misclassification_rate(n, x, Matrix{{0.9}, {0.9}, {0.1}, {0.9}}) == doctest::Approx(0.25));
  n.w2(0, 0) = -5.0;
  CHECK(misclassification_rate(n, x, Matrix{{0.9}, {0.9}, {0.1}, {0.9}}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(misclassification_rate(n, Matrix(0, 2), Matrix(0, 1)), ParameterError);
  CHECK_THROWS_AS(misclassification_rate(init_weights({2, 2, 2}, 1), x, Matrix(4, 2)), DimensionError);
}

TEST_CASE("runs are reproducible and share initial networks across configs") {
  const Experiment e = small_experiment();
  const SuccessReport a = run_experiment(e);
  RunOptions two;
  two.jobs = 2;
  std::size_t calls = 0;
  two.progress = [&](const std::string&) { ++calls; };
  const SuccessReport b = run_experiment(e, two);
  CHECK(calls == 8);
  CHECK(without_times(a) == without_times(b));

  REQUIRE(a.algorithms.size() == 2);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& bp = a.algorithms[0].trials[i];
    const auto& hjb = a.algorithms[1].trials[i];
    CHECK(bp.trial == i);
    CHECK(bp.seed == 10 + i);
    CHECK(bp.init_hash == hjb.init_hash);
    CHECK(bp.init_hash == weight_hash(init_weights({3, 4, 1}, 10 + i)));
  }
  CHECK(a.algorithms[1].success_score == 1.0);
  CHECK(a.dataset_name == "xor");
  CHECK(&a.find(a.algorithms[1].label) == &a.algorithms[1]);
  CHECK_THROWS_AS(a.find("missing"), ParameterError);
}

TEST_CASE("reports survive a JSON round trip") {
  const SuccessReport a = run_experiment(small_experiment());
  const Json j = a;
  const SuccessReport back = Json::parse(j.dump()).get<SuccessReport>();
  CHECK(back == a);
}

TEST_CASE("json readers reject unknown keys and malformed values") {
  Json t = TrainerConfig{};
  t["learning_rate"] = 1.0;
  CHECK_THROWS_AS(t.get<TrainerConfig>(), ParseError);
  Json ok = TrainerConfig{};
  ok["algorithm"] = "nope";
  CHECK_THROWS_AS(ok.get<TrainerConfig>(), ParseError);
  CHECK_THROWS_AS(Json::parse(R"([[1,2],[3]])").get<Matrix>(), ParseError);

  TrainerConfig c;
  c.algorithm = Algorithm::HJB_LM;
  c.mu = 1e-3;
  c.max_epochs = 77;
  c.critic.reset();
  CHECK(Json(c).get<TrainerConfig>() == c);
  TrainerConfig with_critic;
  with_critic.mode = Mode::Online;
  with_critic.critic = CriticConfig{};
  CHECK(Json(with_critic).get<TrainerConfig>() == with_critic);

  const Network n = init_weights({3, 4, 2}, 5);
  CHECK(Json(n).get<Network>() == n);
  const Dataset d = gen_parity(3);
  const Dataset dd = Json(d).get<Dataset>();
  CHECK(dd.inputs == d.inputs);
  CHECK(dd.metadata == d.metadata);
}

TEST_CASE("csv reports") {
  const SuccessReport a = run_experiment(small_experiment());
  const std::string summary = summary_csv(a);
  std::istringstream in(summary);
  std::string line;
  std::getline(in, line);
  CHECK(line == "name,params,success_score,avg_epochs,avg_wall_time,misclassification_rate");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);

  const std::string curves = curves_csv(a);
  std::size_t expected = 1;
  for (const auto& alg : a.algorithms)
    for (const auto& t : alg.trials) expected += t.result.rms_history.size();
  CHECK(static_cast<std::size_t>(std::count(curves.begin(), curves.end(), '\n')) == expected);

  const fs::path dir = fs::temp_directory_path() / ("hjbnn_report_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  emit_report(a, (dir / "out.csv").string(), ReportFormat::Csv);
  CHECK(fs::exists(dir / "out.csv"));
  CHECK(fs::exists(dir / "out_curves.csv"));
  emit_report(a, (dir / "out.json").string(), ReportFormat::Json);
  CHECK(read_json_file((dir / "out.json").string()).get<SuccessReport>() == a);
  fs::remove_all(dir);
  CHECK_THROWS_AS(emit_report(a, "/nonexistent/dir/out.json", ReportFormat::Json), IoError);
  CHECK(parse_report_format("csv") == ReportFormat::Csv);
  CHECK_THROWS_AS(parse_report_format("xml"), ParseError);
}

TEST_CASE("basins on the quartic") {
  BasinSettings g;
  g.rule = ScalarRule::Gradient;
  const std::vector<double> grid{-0.9, -0.5, 0.5, 1.5, 2.4};
  const auto pts = basin_experiment(g, grid);
  REQUIRE(pts.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(pts[i].w0 == grid[i]);
    // The flow into w = 2 is algebraic (e and J vanish together), so only the
    // left basin reaches the Jacobian tolerance within the step budget.
    if (grid[i] < 0) CHECK(pts[i].stationary);
    CHECK(pts[i].terminal == doctest::Approx(grid[i] < 0 ? -1.0 : 2.0).epsilon(1e-3));
  }
  // Starting on a stationary point stays there.
  const std::vector<double> at_zero{0.0};
  CHECK(basin_experiment(g, at_zero)[0].steps == 0);

  BasinSettings h;
  h.rule = ScalarRule::HjbSingle;
  h.dt = 1e-3;
  h.max_steps = 200000;
  const std::vector<double> right{1.0, 2.3};
  for (const auto& p : basin_experiment(h, right)) CHECK(std::abs(p.terminal - 2.0) <= 1e-2);

  h.dt = 0.0;
  CHECK_THROWS_AS(basin_experiment(h, right), ParameterError);
  CHECK(parse_scalar_rule("hjb") == ScalarRule::HjbSingle);
  CHECK(parse_scalar_rule("bp") == ScalarRule::Gradient);
  CHECK_THROWS_AS(parse_scalar_rule("newton"), ParseError);
}
