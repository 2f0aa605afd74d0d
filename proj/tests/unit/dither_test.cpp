#include "uvesc/dither.hpp"

#include <algorithm>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

namespace uvesc {
namespace {

constexpr double kPi = std::numbers::pi;

DitherConfig<double> Example() { return {Eigen::Vector2d(0.1, 0.1), {1, 7}, 10.0}; }

DitherConfig<double> Uneven() { return {Eigen::Vector3d(0.1, 0.3, 0.05), {1, 7, 17}, 3.0}; }

TEST(ValidateFrequencies, Examples) {
  const std::vector<int> ok{1, 7};
  EXPECT_TRUE(validate_frequencies(ok).valid());

  const std::vector<int> bad{1, 2};
  const ValidationReport report = validate_frequencies(bad);
  EXPECT_FALSE(report.valid());
  const auto has = [&](FrequencyConflictKind kind, int i) {
    return std::any_of(report.conflicts.begin(), report.conflicts.end(),
                       [&](const FrequencyConflict& c) { return c.kind == kind && c.i == i; });
  };
  EXPECT_TRUE(has(FrequencyConflictKind::kDifference, 0));  // 2 − 1 = 1
  EXPECT_TRUE(has(FrequencyConflictKind::kSum, 1));         // 1 + 1 = 2

  const std::vector<int> single{5};
  EXPECT_TRUE(validate_frequencies(single).valid());
  const std::vector<int> repeated{3, 3};
  EXPECT_FALSE(validate_frequencies(repeated).valid());
  const std::vector<int> half_sum{1, 4, 7};
  EXPECT_FALSE(validate_frequencies(half_sum).valid());
}

TEST(ValidateFrequencies, PermutationInvariant) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> pick(1, 30);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> m(4);
    for (int& v : m) v = pick(rng);
    std::vector<int> p = m;
    std::shuffle(p.begin(), p.end(), rng);
    EXPECT_EQ(validate_frequencies(m).valid(), validate_frequencies(p).valid());
    EXPECT_EQ(validate_frequencies(m).conflicts.size(), validate_frequencies(p).conflicts.size());
  }
}

TEST(DitherConfig, RejectsInvalidSettings) {
  EXPECT_THROW(DitherConfig<double>(Eigen::Vector2d(0.1, 0.0), {1, 7}, 10.0), DomainError);
  EXPECT_THROW(DitherConfig<double>(Eigen::Vector2d(0.1, 0.1), {1, 2}, 10.0), DomainError);
  EXPECT_THROW(DitherConfig<double>(Eigen::Vector2d(0.1, 0.1), {1}, 10.0), DomainError);
  EXPECT_THROW(DitherConfig<double>(Eigen::Vector2d(0.1, 0.1), {1, 7}, 0.0), DomainError);
  EXPECT_THROW(DitherConfig<double>(Eigen::Vector2d(0.1, 0.1), {0, 7}, 10.0), DomainError);
}

TEST(Signals, PointValues) {
  const auto cfg = Example();
  EXPECT_EQ(perturbation(0.0, cfg), VectorXd::Zero(2));
  EXPECT_EQ(demodulation(0.0, cfg), VectorXd::Zero(2));

  const DitherConfig<double> one(VectorXd::Constant(1, 0.1), {1}, 10.0);
  EXPECT_NEAR(perturbation(kPi / 20, one)[0], 0.1, 1e-15);
  EXPECT_NEAR(demodulation(kPi / 20, one)[0], 20.0, 1e-12);

  for (double t : {0.013, 0.4, 2.7}) {
    const VectorXd s = perturbation(t, cfg);
    const VectorXd m = demodulation(t, cfg);
    const VectorXd w = cfg.frequencies();
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(m[i] * s[i], 2 * std::sin(w[i] * t) * std::sin(w[i] * t), 1e-14);
    }
  }
}

TEST(DeltaMatrix, OuterProductIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> when(0.0, 50.0);
  for (const auto& cfg : {Example(), Uneven()}) {
    const auto n = cfg.dim();
    for (int i = 0; i < 100; ++i) {
      const double t = when(rng);
      const MatrixXd outer = demodulation(t, cfg) * perturbation(t, cfg).transpose();
      const MatrixXd delta = delta_matrix(t, cfg);
      EXPECT_LE((outer - MatrixXd::Identity(n, n) - delta).norm(), 1e-10);
      EXPECT_LE(delta.diagonal().cwiseAbs().maxCoeff(), 1.0 + 1e-15);
    }
  }
}

TEST(DeltaMatrix, AtTimeZeroIsMinusIdentity) {
  // M(0) = S(0) = 0, so I + Δ(0) must vanish.
  EXPECT_EQ(delta_matrix(0.0, Uneven()), -MatrixXd::Identity(3, 3));
}

TEST(CommonPeriod, Examples) {
  const auto cp = common_period(Example());
  EXPECT_NEAR(cp.period, 2 * kPi / 10, 1e-15);
  EXPECT_NEAR(cp.omega, 10.0, 1e-15);
  const std::vector<int> even{2, 4};
  EXPECT_NEAR(common_period<double>(even, 1.0).period, kPi, 1e-15);
  const DitherConfig<double> one(VectorXd::Constant(1, 0.2), {3}, 2.0);
  EXPECT_NEAR(common_period(one).period, 2 * kPi / 6, 1e-15);
}

TEST(CommonPeriod, SignalsArePeriodic) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> when(0.0, 20.0);
  for (const auto& cfg : {Example(), Uneven()}) {
    const double period = common_period(cfg).period;
    for (int i = 0; i < 100; ++i) {
      const double t = when(rng);
      EXPECT_LE((perturbation(t + period, cfg) - perturbation(t, cfg)).norm(), 1e-10);
      EXPECT_LE((demodulation(t + period, cfg) - demodulation(t, cfg)).norm(), 1e-10);
      EXPECT_LE((delta_matrix(t + period, cfg) - delta_matrix(t, cfg)).norm(), 1e-10);
    }
  }
}

TEST(SignalAverage, ZeroMeanSignals) {
  for (const auto& cfg : {Example(), Uneven()}) {
    const double period = common_period(cfg).period;
    EXPECT_LE(signal_average([&](double t) { return perturbation(t, cfg); }, period, 4096).norm(), 1e-8);
    EXPECT_LE(signal_average([&](double t) { return demodulation(t, cfg); }, period, 4096).norm(), 1e-8);
    EXPECT_LE(signal_average([&](double t) { return delta_matrix(t, cfg); }, period, 4096).norm(), 1e-8);
  }
}

TEST(SignalAverage, AveragedGainMatrixIsTheHessian) {
  const auto cfg = Example();
  MatrixXd h(2, 2);
  h << 100, 30, 30, 20;
  const auto omega_av = signal_average(
      [&](double t) -> MatrixXd { return (MatrixXd::Identity(2, 2) + delta_matrix(t, cfg)) * h; },
      common_period(cfg).period, 4096);
  EXPECT_LE((omega_av - h).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SignalAverage, ScalarAndErrors) {
  EXPECT_NEAR(signal_average([](double t) { return std::sin(t) * std::sin(t); }, 2 * kPi, 64), 0.5, 1e-14);
  EXPECT_THROW(signal_average([](double) { return 1.0; }, 1.0, 63), DomainError);
  EXPECT_THROW(signal_average([](double t) { return t > 0.5 ? std::nan("") : 0.0; }, 1.0, 64), NumericalError);
}

}  // namespace
}  // namespace uvesc
