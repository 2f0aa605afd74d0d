#include "uvesc/config.hpp"

#include <gtest/gtest.h>

namespace uvesc {
namespace {

json Example() { return example_config_json(); }

TEST(ParseConfig, ExampleValues) {
  const ExperimentConfig cfg = parse_config(Example());
  EXPECT_EQ(cfg.dim(), 2);
  ASSERT_TRUE(cfg.polytope.h0.has_value());
  EXPECT_EQ((*cfg.polytope.h0)(0, 1), 30.0);
  EXPECT_EQ(cfg.polytope.delta_bar, 0.1);
  EXPECT_EQ(cfg.synthesis.mu, 32.9034);
  EXPECT_EQ(cfg.synthesis.varphi, 0.4);
  EXPECT_EQ(cfg.synthesis.objective, Objective::kMinimizeRho);
  EXPECT_EQ(cfg.dither.multipliers, (std::vector<int>{1, 7}));
  EXPECT_EQ(cfg.dither.base_frequency, 10.0);
  EXPECT_EQ(cfg.map.q_star, 10.0);
  EXPECT_EQ(cfg.map.hessian.kind, HessianSelection::Kind::kSampled);
  EXPECT_EQ(cfg.map.hessian.seed, 1u);
  EXPECT_EQ(cfg.simulation.theta0, Eigen::Vector2d(2.5, 6.0));
  EXPECT_EQ(cfg.polytope.build().size(), 2u);
}

TEST(ParseConfig, RoundTrip) {
  const ExperimentConfig cfg = parse_config(Example());
  const json again = config_to_json(cfg);
  EXPECT_EQ(config_to_json(parse_config(again)), again);
}

TEST(ParseConfig, Rejections) {
  json j = Example();
  j.erase("polytope");
  EXPECT_THROW(parse_config(j), ConfigError);

  j = Example();
  j["polytope"]["H0"] = json::array({json::array({1.0, 0.0}), json::array({0.0, -1.0})});
  EXPECT_THROW(parse_config(j), ConfigError);

  j = Example();
  j["map"]["theta_star"] = json::array({1.0, 2.0, 3.0});
  EXPECT_THROW(parse_config(j), ConfigError);

  j = Example();
  j["dither"]["multipliers"] = json::array({1, 2});
  EXPECT_THROW(parse_config(j), ConfigError);

  j = Example();
  j["synthesis"]["mu"] = -1.0;
  EXPECT_THROW(parse_config(j), ConfigError);

  j = Example();
  j["synthesis"]["objective"] = "fastest";
  EXPECT_THROW(parse_config(j), ConfigError);

  j = Example();
  j["polytope"]["H0"] = json::array({json::array({1.0, "x"}), json::array({0.0, 1.0})});
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(ParseConfig, VertexListAndExplicitHessian) {
  json j = Example();
  j["polytope"] = {{"vertices", json::array({json::array({json::array({2.0, 0.0}), json::array({0.0, 1.0})}),
                                             json::array({json::array({3.0, 0.5}), json::array({0.5, 1.0})})})}};
  j["map"]["hessian"] = {{"explicit", json::array({json::array({2.5, 0.2}), json::array({0.2, 1.0})})}};
  const ExperimentConfig cfg = parse_config(j);
  EXPECT_EQ(cfg.polytope.build().size(), 2u);
  EXPECT_EQ(cfg.map.hessian.kind, HessianSelection::Kind::kExplicit);
  const ResolvedMap map = resolve_map(cfg, cfg.polytope.build());
  EXPECT_FALSE(map.alpha.has_value());
  EXPECT_EQ(map.map.hessian(0, 1), 0.2);
}

TEST(ResolveMap, SampledHessianIsDeterministicAndInside) {
  const ExperimentConfig cfg = parse_config(Example());
  const auto poly = cfg.polytope.build();
  const ResolvedMap a = resolve_map(cfg, poly);
  const ResolvedMap b = resolve_map(cfg, poly);
  ASSERT_TRUE(a.alpha.has_value());
  EXPECT_EQ(a.map.hessian, b.map.hessian);
  EXPECT_NEAR(a.alpha->weights().sum(), 1.0, 1e-12);
  EXPECT_LE((evaluate(poly, *a.alpha) - a.map.hessian).norm(), 1e-12);
}

TEST(MakeSimConfig, AutoStepAndScaling) {
  const ExperimentConfig cfg = parse_config(Example());
  const auto map = resolve_map(cfg, cfg.polytope.build()).map;
  const SimConfig one = make_sim_config(cfg, map, reference_gain());
  const SimConfig two = make_sim_config(cfg, map, reference_gain(), 2.0);
  EXPECT_EQ(one.dt, max_step(one.dither));
  EXPECT_EQ(two.dither.base_frequency(), 20.0);
  EXPECT_NEAR(two.dt, one.dt / 2, 1e-15);
  EXPECT_NO_THROW(one.validate());
}

}  // namespace
}  // namespace uvesc
