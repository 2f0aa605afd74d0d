#include "uvesc/simulator.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace uvesc {

void MapSpec::validate() const {
  const auto n = theta_star.size();
  if (n < 1 || hessian.rows() != n || hessian.cols() != n) {
    throw DomainError("map: theta_star and hessian dimensions disagree");
  }
  if (!std::isfinite(q_star) || !theta_star.allFinite() || !hessian.allFinite()) {
    throw DomainError("map: non-finite entries");
  }
  require_symmetric(hessian, 1e-12, "map hessian");
  if (!is_positive_definite(symmetric_part(hessian))) throw DomainError("map hessian is not positive definite");
}

double MapSpec::operator()(const VectorXd& theta) const {
  const VectorXd e = theta - theta_star;
  return q_star + 0.5 * e.dot(hessian * e);
}

void Demodulator::validate() const {
  if (!(highpass_ratio >= 0.0) || !std::isfinite(highpass_ratio)) {
    throw DomainError("demodulator: highpass_ratio must be >= 0");
  }
  if (lowpass_order < 0) throw DomainError("demodulator: lowpass_order must be >= 0");
  if (lowpass_order > 0 && (!(lowpass_ratio > 0.0) || !std::isfinite(lowpass_ratio))) {
    throw DomainError("demodulator: lowpass_ratio must be positive when lowpass_order > 0");
  }
}

double max_step(const DitherConfig<double>& dither) {
  const double period = common_period(dither).period;
  return std::min(period / 200.0, 2.0 * std::numbers::pi / (200.0 * dither.max_frequency()));
}

void SimConfig::validate() const {
  map.validate();
  const auto n = map.theta_star.size();
  if (dither.dim() != n) throw DomainError("dither dimension does not match the map");
  if (gain.rows() != n || gain.cols() != n || !gain.allFinite()) {
    throw DomainError("gain must be a finite n x n matrix");
  }
  if (theta0.size() != n || !theta0.allFinite()) throw DomainError("theta0 dimension does not match the map");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("t_end must be >= 0");
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  if (!(uv_epsilon > 0.0)) throw DomainError("uv_epsilon must be positive");
  if (record_stride < 1) throw DomainError("record_stride must be >= 1");
  demodulator.validate();
  const double limit = max_step(dither);
  if (dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "dt = " << dt << " exceeds the dither step limit " << limit;
    throw DomainError(msg.str());
  }
}

namespace {

// Fixed step count covering [0, t_end]; the last step is shortened if needed.
std::size_t step_count(double t_end, double dt) {
  if (t_end <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

template <typename Rhs>
VectorXd rk4_step(const Rhs& f, double t, const VectorXd& z, double h) {
  const VectorXd k1 = f(t, z);
  const VectorXd k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
  const VectorXd k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
  const VectorXd k4 = f(t + h, z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// RK4 with step doubling: a step whose two half-step answer disagrees with
// the full step beyond tol is split recursively. Only the stiff start-up of
// the estimate inside the regularization ball triggers a split in practice.
template <typename Rhs>
VectorXd rk4_refined(const Rhs& f, double t, const VectorXd& z, double h, int depth = 0) {
  constexpr double kTol = 1e-12;
  constexpr int kMaxDepth = 16;
  const VectorXd full = rk4_step(f, t, z, h);
  const VectorXd mid = rk4_step(f, t, z, 0.5 * h);
  const VectorXd halves = rk4_step(f, t + 0.5 * h, mid, 0.5 * h);
  if (depth >= kMaxDepth || !halves.allFinite() ||
      (full - halves).lpNorm<Eigen::Infinity>() <= kTol * (1.0 + z.lpNorm<Eigen::Infinity>())) {
    return halves;
  }
  const VectorXd left = rk4_refined(f, t, z, 0.5 * h, depth + 1);
  return rk4_refined(f, t + 0.5 * h, left, 0.5 * h, depth + 1);
}

void require_finite(const VectorXd& z, double t) {
  if (!z.allFinite()) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "non-finite state at t = " << t;
    throw NumericalError(msg.str());
  }
}

// State layout: [θ̂ (n), η (1), lowpass stages (order·n)].
class FullLoop {
 public:
  explicit FullLoop(const SimConfig& cfg) : cfg_(cfg), n_(cfg.map.theta_star.size()) {
    const double omega = cfg.dither.base_frequency();
    highpass_ = cfg.demodulator.highpass_ratio * omega;
    lowpass_ = cfg.demodulator.lowpass_ratio * omega;
    order_ = cfg.demodulator.lowpass_order;
  }

  Eigen::Index size() const { return n_ + 1 + order_ * n_; }

  VectorXd initial_state() const {
    VectorXd z = VectorXd::Zero(size());
    z.head(n_) = cfg_.theta0;
    if (highpass_ > 0.0) z[n_] = cfg_.map(cfg_.theta0 + perturbation(0.0, cfg_.dither));
    return z;
  }

  double measured(double t, const VectorXd& z) const { return cfg_.map(z.head(n_) + perturbation(t, cfg_.dither)); }

  double highpassed(double t, const VectorXd& z) const {
    const double y = measured(t, z);
    return highpass_ > 0.0 ? y - z[n_] : y;
  }

  VectorXd gradient_estimate(double t, const VectorXd& z) const {
    if (order_ == 0) return demodulation(t, cfg_.dither) * highpassed(t, z);
    return z.segment(n_ + 1 + (order_ - 1) * n_, n_);
  }

  VectorXd control(double t, const VectorXd& z) const {
    return cfg_.gain * unit_vector(gradient_estimate(t, z), cfg_.uv_epsilon);
  }

  VectorXd operator()(double t, const VectorXd& z) const {
    VectorXd dz(size());
    dz.head(n_) = control(t, z);
    const double y = measured(t, z);
    dz[n_] = highpass_ > 0.0 ? highpass_ * (y - z[n_]) : 0.0;
    VectorXd input = demodulation(t, cfg_.dither) * (highpass_ > 0.0 ? y - z[n_] : y);
    for (int j = 0; j < order_; ++j) {
      const auto stage = z.segment(n_ + 1 + j * n_, n_);
      dz.segment(n_ + 1 + j * n_, n_) = lowpass_ * (input - stage);
      input = stage;
    }
    return dz;
  }

  void record(Trace& trace, double t, const VectorXd& z) const {
    const VectorXd theta = z.head(n_) + perturbation(t, cfg_.dither);
    trace.times.push_back(t);
    trace.theta_hat.push_back(z.head(n_));
    trace.theta.push_back(theta);
    trace.y.push_back(cfg_.map(theta));
    trace.g_hat.push_back(gradient_estimate(t, z));
    trace.u.push_back(control(t, z));
  }

 private:
  const SimConfig& cfg_;
  Eigen::Index n_;
  double highpass_ = 0.0;
  double lowpass_ = 0.0;
  int order_ = 0;
};

}  // namespace

Trace simulate_full(const SimConfig& cfg) {
  cfg.validate();
  Trace trace;
  const std::size_t steps = step_count(cfg.t_end, cfg.dt);
  if (steps == 0) return trace;

  const FullLoop loop(cfg);
  VectorXd z = loop.initial_state();
  const auto stride = static_cast<std::size_t>(cfg.record_stride);
  const std::size_t expected = steps / stride + 2;
  trace.times.reserve(expected);
  loop.record(trace, 0.0, z);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t0 = static_cast<double>(k - 1) * cfg.dt;
    const double t1 = k == steps ? cfg.t_end : static_cast<double>(k) * cfg.dt;
    z = rk4_refined(loop, t0, z, t1 - t0);
    require_finite(z, t1);
    if (k % stride == 0 || k == steps) loop.record(trace, t1, z);
  }
  return trace;
}

AverageRun simulate_average(const MatrixXd& k, const MatrixXd& h, const VectorXd& g0, const AverageOptions& options) {
  const auto n = g0.size();
  if (n < 1 || k.rows() != n || k.cols() != n || h.rows() != n || h.cols() != n) {
    throw DomainError("simulate_average: dimension mismatch");
  }
  if (!(g0.norm() > 0.0)) throw DomainError("simulate_average: g0 must be nonzero");
  if (!(options.omega > 0.0) || !(options.dt > 0.0) || !(options.t_end >= 0.0) || !(options.eps_stop > 0.0)) {
    throw DomainError("simulate_average: omega, dt and eps_stop must be positive, t_end >= 0");
  }
  const double uv_eps = options.uv_epsilon > 0.0 ? options.uv_epsilon : options.eps_stop / 10.0;
  const MatrixXd hk = h * k / options.omega;
  auto rhs = [&](double, const VectorXd& g) -> VectorXd { return hk * unit_vector(g, uv_eps); };

  AverageRun run;
  VectorXd g = g0;
  run.trace.times.push_back(0.0);
  run.trace.g.push_back(g);
  if (g.norm() <= options.eps_stop) {
    run.reach_time = 0.0;
    return run;
  }
  // |Ġ| ≤ ‖HK‖/ω; a step below ½‖Ĝ‖ of travel cannot jump across the
  // origin, so the field stays smooth over every step.
  const double max_speed = Eigen::JacobiSVD<MatrixXd>(hk).singularValues()(0);
  double t = 0.0;
  while (t < options.t_end) {
    const double before = g.norm();
    double h = std::min(options.dt, options.t_end - t);
    if (max_speed > 0.0) h = std::min(h, 0.5 * before / max_speed);
    if (!(h > 0.0)) break;
    g = rk4_step(rhs, t, g, h);
    require_finite(g, t + h);
    const double t1 = options.t_end - (t + h) < 1e-12 * options.dt ? options.t_end : t + h;
    run.trace.times.push_back(t1);
    run.trace.g.push_back(g);
    const double after = g.norm();
    if (after <= options.eps_stop) {
      const double frac = (before - options.eps_stop) / (before - after);
      run.reach_time = t + frac * (t1 - t);
      break;
    }
    t = t1;
  }
  return run;
}

std::vector<VectorXd> average_error_prediction(const MatrixXd& k, const MatrixXd& h, const VectorXd& error0,
                                               const std::vector<double>& times, double uv_epsilon) {
  auto rhs = [&](double, const VectorXd& e) -> VectorXd { return k * unit_vector((h * e).eval(), uv_epsilon); };
  std::vector<VectorXd> out;
  if (times.empty()) return out;
  out.reserve(times.size());
  VectorXd e = error0;
  out.push_back(e);
  for (std::size_t s = 1; s < times.size(); ++s) {
    e = rk4_step(rhs, times[s - 1], e, times[s] - times[s - 1]);
    out.push_back(e);
  }
  return out;
}

std::optional<double> measure_settling(const std::vector<double>& times, const std::vector<VectorXd>& series,
                                       const VectorXd& target, double band) {
  if (!(band > 0.0)) throw DomainError("measure_settling: band must be positive");
  if (times.size() != series.size()) throw DomainError("measure_settling: times and series differ in length");
  std::optional<double> settled;
  for (std::size_t i = times.size(); i-- > 0;) {
    if ((series[i] - target).norm() > band) break;
    settled = times[i];
  }
  return settled;
}

std::vector<GapSample> averaging_gap(const SimConfig& cfg, const std::vector<double>& omegas) {
  if (omegas.size() < 2) throw DomainError("averaging_gap needs at least two frequencies");
  for (std::size_t i = 1; i < omegas.size(); ++i) {
    if (!(omegas[i] >= omegas[i - 1])) throw DomainError("averaging_gap: frequencies must be non-decreasing");
  }
  std::vector<GapSample> out;
  for (double omega : omegas) {
    SimConfig run = cfg;
    run.dither = cfg.dither.with_base_frequency(omega);
    run.dt = std::min(cfg.dt, max_step(run.dither));
    run.record_stride = 1;
    const Trace trace = simulate_full(run);
    const auto prediction = average_error_prediction(run.gain, run.map.hessian, run.theta0 - run.map.theta_star,
                                                     trace.times, run.uv_epsilon);
    double gap = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      gap = std::max(gap, (trace.theta_hat[i] - run.map.theta_star - prediction[i]).norm());
    }
    out.push_back({omega, gap, run.dt});
  }
  return out;
}

void write_trace_csv(std::ostream& out, const Trace& trace, Eigen::Index dim) {
  const Eigen::Index n = dim;
  if (!trace.empty() && trace.theta_hat.front().size() != n) {
    throw DomainError("write_trace_csv: trace dimension does not match");
  }
  out << "t";
  for (const char* name : {"theta_hat", "theta"}) {
    for (Eigen::Index i = 1; i <= n; ++i) out << ',' << name << '_' << i;
  }
  out << ",y";
  for (const char* name : {"g", "u"}) {
    for (Eigen::Index i = 1; i <= n; ++i) out << ',' << name << '_' << i;
  }
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < trace.size(); ++r) {
    out << trace.times[r];
    for (const auto* series : {&trace.theta_hat, &trace.theta}) {
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << (*series)[r][i];
    }
    out << ',' << trace.y[r];
    for (const auto* series : {&trace.g_hat, &trace.u}) {
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << (*series)[r][i];
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace uvesc
