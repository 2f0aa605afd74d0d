#include "uvesc/simulator.hpp"

#include <sstream>

#include <gtest/gtest.h>

#include "uvesc/config.hpp"

namespace uvesc {
namespace {

SimConfig Example(double t_end = 10.0) {
  const ExperimentConfig cfg = parse_config(example_config_json());
  const HessianPolytope<double> poly = cfg.polytope.build();
  SimConfig sim = make_sim_config(cfg, resolve_map(cfg, poly).map, reference_gain());
  sim.t_end = t_end;
  return sim;
}

SimConfig Scalar(double gain) {
  const DitherConfig<double> dither(VectorXd::Constant(1, 0.1), {1}, 10.0);
  return SimConfig{{1.0, VectorXd::Constant(1, 0.0), MatrixXd::Identity(1, 1)},
                   dither,
                   MatrixXd::Constant(1, 1, gain),
                   VectorXd::Constant(1, 1.0),
                   1.0,
                   max_step(dither)};
}

TEST(UnitVector, Examples) {
  EXPECT_TRUE(unit_vector(Eigen::Vector2d(3, 4), 1e-6).isApprox(Eigen::Vector2d(0.6, 0.8)));
  EXPECT_EQ(unit_vector(Eigen::Vector2d(0, 0), 1e-6), Eigen::Vector2d(0, 0));
  EXPECT_TRUE(unit_vector(Eigen::Vector2d(1e-8, 0), 1e-6).isApprox(Eigen::Vector2d(1e-2, 0)));
  EXPECT_FLOAT_EQ(unit_vector(Eigen::Vector2f(0, -2), 1e-3f).norm(), 1.0f);
  EXPECT_THROW(unit_vector(Eigen::Vector2d(1, 0), 0.0), DomainError);
}

TEST(SimulateAverage, RadialReachTimes) {
  const MatrixXd eye = MatrixXd::Identity(2, 2);
  const VectorXd g0 = Eigen::Vector2d(0.6, 0.8);
  const AverageRun a = simulate_average(-eye, eye, g0);
  ASSERT_TRUE(a.reach_time.has_value());
  EXPECT_NEAR(*a.reach_time, 1.0, 1e-4);
  const AverageRun b = simulate_average(-2 * eye, eye, g0);
  EXPECT_NEAR(*b.reach_time, 0.5, 1e-4);
  const AverageRun c = simulate_average(-eye, eye, 3 * g0);
  EXPECT_NEAR(*c.reach_time, 3.0, 1e-4);
  AverageOptions fast;
  fast.omega = 4.0;
  EXPECT_NEAR(*simulate_average(-eye, eye, g0, fast).reach_time, 4.0, 4e-4);
}

TEST(SimulateAverage, InvalidAndDivergentCases) {
  const MatrixXd eye = MatrixXd::Identity(2, 2);
  EXPECT_THROW(simulate_average(-eye, eye, Eigen::Vector2d::Zero()), DomainError);
  EXPECT_THROW(simulate_average(-eye, MatrixXd::Identity(3, 3), Eigen::Vector2d(1, 0)), DomainError);
  AverageOptions bad;
  bad.dt = 0.0;
  EXPECT_THROW(simulate_average(-eye, eye, Eigen::Vector2d(1, 0), bad), DomainError);
  const AverageRun away = simulate_average(eye, eye, Eigen::Vector2d(1, 0));
  EXPECT_FALSE(away.reach_time.has_value());
  EXPECT_NEAR(away.trace.g.back().norm(), 11.0, 1e-9);
}

TEST(SimulateAverage, LyapunovLevelDecreasesAndBoundHolds) {
  const ExperimentConfig cfg = parse_config(example_config_json());
  const auto poly = cfg.polytope.build();
  BarrierSdpSolver backend;
  const SynthesisResult r = solve({poly, cfg.synthesis.mu, cfg.synthesis.varphi}, backend);
  const MatrixXd h = resolve_map(cfg, poly).map.hessian;
  const VectorXd g0 = h * (cfg.simulation.theta0 - cfg.map.theta_star);
  AverageOptions options;
  options.dt = 1e-4;
  options.t_end = 20.0;
  const AverageRun run = simulate_average(r.k, h, g0, options);
  ASSERT_TRUE(run.reach_time.has_value());
  double previous = std::numeric_limits<double>::infinity();
  for (const VectorXd& g : run.trace.g) {
    const double v = g.dot(r.p * g) / g.norm();
    EXPECT_LE(v, previous * (1 + 1e-9));
    previous = v;
  }
  EXPECT_LE(*run.reach_time, reaching_time_bound(r.p, r.q, g0).bound + options.dt);
}

TEST(SimulateAverage, StepRefinementIsConverged) {
  const ExperimentConfig cfg = parse_config(example_config_json());
  const auto poly = cfg.polytope.build();
  const MatrixXd h = resolve_map(cfg, poly).map.hessian;
  const VectorXd g0 = h * (cfg.simulation.theta0 - cfg.map.theta_star);
  AverageOptions coarse;
  coarse.dt = 1e-3;
  coarse.t_end = 20.0;
  AverageOptions fine = coarse;
  fine.dt = 5e-4;
  const auto a = simulate_average(reference_gain(), h, g0, coarse);
  const auto b = simulate_average(reference_gain(), h, g0, fine);
  ASSERT_TRUE(a.reach_time && b.reach_time);
  EXPECT_NEAR(*a.reach_time, *b.reach_time, 1e-6);
}

TEST(AverageErrorPrediction, ClosedFormRadialDecay) {
  const MatrixXd eye = MatrixXd::Identity(1, 1);
  std::vector<double> times;
  for (int i = 0; i <= 100; ++i) times.push_back(0.01 * i);
  const auto e = average_error_prediction(-0.5 * eye, eye, VectorXd::Constant(1, 2.0), times, 1e-9);
  ASSERT_EQ(e.size(), times.size());
  EXPECT_NEAR(e.back()[0], 1.5, 1e-12);
  EXPECT_TRUE(average_error_prediction(-eye, eye, VectorXd::Constant(1, 1.0), {}, 1e-9).empty());
}

TEST(SimulateFull, OpenLoopHoldsTheEstimate) {
  const Trace trace = simulate_full(Scalar(0.0));
  ASSERT_FALSE(trace.empty());
  for (const VectorXd& th : trace.theta_hat) EXPECT_EQ(th[0], 1.0);
  for (const VectorXd& u : trace.u) EXPECT_EQ(u[0], 0.0);
}

TEST(SimulateFull, TraceInvariants) {
  const SimConfig sim = Example(1.0);
  const Trace trace = simulate_full(sim);
  ASSERT_EQ(trace.theta.size(), trace.size());
  EXPECT_EQ(trace.times.front(), 0.0);
  EXPECT_EQ(trace.times.back(), 1.0);
  EXPECT_EQ(trace.theta_hat.front(), sim.theta0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i > 0) EXPECT_GT(trace.times[i], trace.times[i - 1]);
    const VectorXd s = perturbation(trace.times[i], sim.dither);
    EXPECT_LE((trace.theta[i] - trace.theta_hat[i] - s).norm(), 1e-12);
    EXPECT_NEAR(trace.y[i], sim.map(trace.theta[i]), 1e-9);
    EXPECT_LE((trace.u[i] - sim.gain * unit_vector(trace.g_hat[i], sim.uv_epsilon)).norm(), 1e-12);
  }
}

TEST(SimulateFull, RecordStride) {
  SimConfig sim = Scalar(-1.0);
  const std::size_t steps = static_cast<std::size_t>(std::ceil(sim.t_end / sim.dt - 1e-9));
  EXPECT_EQ(simulate_full(sim).size(), steps + 1);
  sim.record_stride = 7;
  const std::size_t expected = 1 + steps / 7 + (steps % 7 == 0 ? 0 : 1);
  EXPECT_EQ(simulate_full(sim).size(), expected);
}

TEST(SimulateFull, EdgeCases) {
  SimConfig sim = Scalar(-1.0);
  sim.t_end = 0.0;
  EXPECT_TRUE(simulate_full(sim).empty());
  sim = Scalar(-1.0);
  sim.dt *= 2.0;
  EXPECT_THROW(simulate_full(sim), DomainError);
  sim = Scalar(-1.0);
  sim.theta0[0] = 1e200;
  EXPECT_THROW(simulate_full(sim), NumericalError);
  sim = Scalar(-1.0);
  sim.record_stride = 0;
  EXPECT_THROW(simulate_full(sim), DomainError);
}

TEST(SimulateFull, ExampleScenarioConverges) {
  const SimConfig sim = Example();
  const Trace trace = simulate_full(sim);
  EXPECT_LT((trace.theta_hat.back() - sim.map.theta_star).norm(), 0.3);
}

TEST(SimulateFull, StepRefinementIsConverged) {
  SimConfig coarse = Example();
  SimConfig fine = coarse;
  fine.dt = coarse.dt / 2;
  const Trace a = simulate_full(coarse);
  const Trace b = simulate_full(fine);
  EXPECT_LE((a.theta_hat.back() - b.theta_hat.back()).norm(), 1e-6);
}

TEST(SimulateFull, LiteralDemodulationStalls) {
  SimConfig sim = Example();
  sim.demodulator = {0.0, 0.0, 0};
  const Trace trace = simulate_full(sim);
  EXPECT_GT((trace.theta_hat.back() - sim.map.theta_star).norm(), 1.9);
}

TEST(AveragingGap, ShrinksWithFrequencyAndIsDeterministic) {
  SimConfig sim = Example(3.0);
  const auto a = averaging_gap(sim, {10.0, 40.0});
  const auto b = averaging_gap(sim, {10.0, 40.0});
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].sup_gap, b[0].sup_gap);
  EXPECT_EQ(a[1].sup_gap, b[1].sup_gap);
  EXPECT_LT(a[1].sup_gap, a[0].sup_gap);
  EXPECT_LE(a[1].dt, a[0].dt);
  EXPECT_THROW(averaging_gap(sim, {10.0}), DomainError);
  EXPECT_THROW(averaging_gap(sim, {20.0, 10.0}), DomainError);
}

TEST(MeasureSettling, Cases) {
  const std::vector<double> t{0, 1, 2, 3};
  const VectorXd zero = VectorXd::Zero(1);
  const auto series = [](std::initializer_list<double> v) {
    std::vector<VectorXd> out;
    for (double x : v) out.push_back(VectorXd::Constant(1, x));
    return out;
  };
  EXPECT_EQ(measure_settling(t, series({5, 0.5, 0.1, 0.0}), zero, 0.3), 2.0);
  EXPECT_EQ(measure_settling(t, series({0, 0, 0, 0}), zero, 0.3), 0.0);
  EXPECT_FALSE(measure_settling(t, series({0, 0, 0, 1}), zero, 0.3).has_value());
  EXPECT_EQ(measure_settling(t, series({0, 1, 0, 0}), zero, 0.3), 2.0);
  EXPECT_THROW(measure_settling(t, series({0}), zero, 0.3), DomainError);
  EXPECT_THROW(measure_settling(t, series({0, 0, 0, 0}), zero, 0.0), DomainError);
}

TEST(WriteTraceCsv, HeaderAndRows) {
  SimConfig sim = Scalar(-1.0);
  sim.t_end = 2 * sim.dt;
  const Trace trace = simulate_full(sim);
  std::ostringstream out;
  write_trace_csv(out, trace, 1);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,theta_hat_1,theta_1,y,g_1,u_1");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  std::ostringstream empty;
  write_trace_csv(empty, Trace{}, 2);
  EXPECT_EQ(empty.str(), "t,theta_hat_1,theta_hat_2,theta_1,theta_2,y,g_1,g_2,u_1,u_2\n");
  EXPECT_THROW(write_trace_csv(empty, trace, 2), DomainError);
}

}  // namespace
}  // namespace uvesc
