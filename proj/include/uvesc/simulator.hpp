#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "uvesc/dither.hpp"
#include "uvesc/errors.hpp"
#include "uvesc/linalg.hpp"

namespace uvesc {

/// g/‖g‖ outside the eps-ball, g/eps inside it.
template <typename Derived>
auto unit_vector(const Eigen::MatrixBase<Derived>& g, typename Derived::RealScalar eps) {
  using Real = typename Derived::RealScalar;
  if (!(eps > Real(0))) throw DomainError("unit_vector: eps must be positive");
  const Real norm = g.norm();
  return (g / std::max(norm, eps)).eval();
}

/// y(θ) = Q* + ½ (θ − θ*)ᵀ H (θ − θ*).
struct MapSpec {
  double q_star = 0.0;
  VectorXd theta_star;
  MatrixXd hessian;

  void validate() const;
  double operator()(const VectorXd& theta) const;
};

/// Demodulation chain between the measurement and the unit-vector law.
/// Cutoffs are given as fractions of the base dither frequency so that they
/// scale with it. highpass_ratio = 0 and lowpass_order = 0 give the bare
/// product M(t) y(t).
struct Demodulator {
  double highpass_ratio = 0.1;
  double lowpass_ratio = 0.4;
  int lowpass_order = 2;

  void validate() const;
};

struct SimConfig {
  MapSpec map;
  DitherConfig<double> dither;
  MatrixXd gain;
  VectorXd theta0;
  double t_end = 10.0;
  double dt = 0.0;
  double uv_epsilon = 1e-6;
  int record_stride = 1;
  Demodulator demodulator;

  /// Throws DomainError on inconsistent dimensions or a step above
  /// min(T/200, 2π/(200 max ωᵢ)).
  void validate() const;
};

/// Largest step accepted for the dither: min(T/200, 2π/(200 max ωᵢ)).
double max_step(const DitherConfig<double>& dither);

struct Trace {
  std::vector<double> times;
  std::vector<VectorXd> theta_hat;
  std::vector<VectorXd> theta;
  std::vector<double> y;
  std::vector<VectorXd> g_hat;
  std::vector<VectorXd> u;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// Fixed-step RK4 of the dithered loop. Throws NumericalError if the state
/// stops being finite.
Trace simulate_full(const SimConfig& cfg);

struct AverageTrace {
  std::vector<double> times;
  std::vector<VectorXd> g;
};

struct AverageRun {
  AverageTrace trace;
  std::optional<double> reach_time;
};

struct AverageOptions {
  double omega = 1.0;
  double dt = 1e-3;
  double t_end = 10.0;
  double eps_stop = 1e-5;
  /// Defaults to eps_stop / 10 when zero.
  double uv_epsilon = 0.0;
};

/// Integrates Ġ = (1/ω) H K Ĝ/‖Ĝ‖ until ‖Ĝ‖ ≤ eps_stop or t_end. The
/// crossing time is interpolated linearly in ‖Ĝ‖ between steps.
AverageRun simulate_average(const MatrixXd& k, const MatrixXd& h, const VectorXd& g0,
                            const AverageOptions& options = {});

/// θ̃_av at the given increasing times (starting at 0), with θ̃' = K φ(H θ̃).
/// One RK4 step per interval.
std::vector<VectorXd> average_error_prediction(const MatrixXd& k, const MatrixXd& h, const VectorXd& error0,
                                               const std::vector<double>& times, double uv_epsilon);

/// First sample time after which ‖series − target‖ ≤ band until the end.
std::optional<double> measure_settling(const std::vector<double>& times, const std::vector<VectorXd>& series,
                                       const VectorXd& target, double band);

struct GapSample {
  double omega;
  double sup_gap;
  double dt;
};

/// For each base frequency, sup over the run of ‖θ̂ − θ* − θ̃_av‖.
std::vector<GapSample> averaging_gap(const SimConfig& cfg, const std::vector<double>& omegas);

void write_trace_csv(std::ostream& out, const Trace& trace, Eigen::Index dim);

}  // namespace uvesc
