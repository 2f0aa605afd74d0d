#pragma once

#include <cmath>
#include <numbers>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "uvesc/errors.hpp"
#include "uvesc/linalg.hpp"

namespace uvesc {

enum class FrequencyConflictKind { kEqual, kHalfSum, kSum, kDifference };

inline const char* to_string(FrequencyConflictKind kind) {
  switch (kind) {
    case FrequencyConflictKind::kEqual: return "equal";
    case FrequencyConflictKind::kHalfSum: return "half_sum";
    case FrequencyConflictKind::kSum: return "sum";
    case FrequencyConflictKind::kDifference: return "difference";
  }
  return "unknown";
}

/// ω'_i collides with a value built from (j, k). Indices are zero-based.
/// For kEqual only `j` is meaningful.
struct FrequencyConflict {
  FrequencyConflictKind kind;
  int i;
  int j;
  int k;
};

struct ValidationReport {
  std::vector<FrequencyConflict> conflicts;
  bool valid() const { return conflicts.empty(); }
};

/// Checks the dither separation rule on integer multipliers:
///   ω'_i ∉ { ω'_j (j ≠ i), ½(ω'_j + ω'_k) (j < k), ω'_k + ω'_l, |ω'_k − ω'_l| (k ≤ l, not k = l = i) }.
/// Never throws; an empty or non-positive list is reported through the
/// conflicts of its valid entries only.
inline ValidationReport validate_frequencies(std::span<const int> multipliers) {
  ValidationReport report;
  const int n = static_cast<int>(multipliers.size());
  for (int i = 0; i < n; ++i) {
    const long wi = multipliers[i];
    for (int j = 0; j < n; ++j) {
      if (j != i && multipliers[j] == wi) {
        report.conflicts.push_back({FrequencyConflictKind::kEqual, i, j, j});
      }
    }
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        if (2 * wi == long{multipliers[j]} + multipliers[k]) {
          report.conflicts.push_back({FrequencyConflictKind::kHalfSum, i, j, k});
        }
      }
    }
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) {
        if (k == i && l == i) continue;
        const long a = multipliers[k];
        const long b = multipliers[l];
        if (wi == a + b) {
          report.conflicts.push_back({FrequencyConflictKind::kSum, i, k, l});
        }
        if (k != l && wi == std::abs(a - b)) {
          report.conflicts.push_back({FrequencyConflictKind::kDifference, i, k, l});
        }
      }
    }
  }
  return report;
}

/// Sinusoidal dither: amplitudes aᵢ, integer multipliers ω'ᵢ and the base
/// frequency ω [rad/s], so that channel i runs at ωᵢ = ω'ᵢ·ω.
template <typename Scalar>
class DitherConfig {
 public:
  DitherConfig(Vector<Scalar> amplitudes, std::vector<int> multipliers, Scalar base_frequency)
      : amplitudes_(std::move(amplitudes)),
        multipliers_(std::move(multipliers)),
        base_frequency_(base_frequency) {
    if (amplitudes_.size() == 0 || static_cast<std::size_t>(amplitudes_.size()) != multipliers_.size()) {
      throw DomainError("dither needs one amplitude per multiplier");
    }
    if (!amplitudes_.allFinite() || (amplitudes_.array() <= Scalar(0)).any()) {
      throw DomainError("dither amplitudes must be positive");
    }
    for (int m : multipliers_) {
      if (m < 1) throw DomainError("frequency multipliers must be positive integers");
    }
    if (!(base_frequency_ > Scalar(0)) || !std::isfinite(static_cast<double>(base_frequency_))) {
      throw DomainError("base frequency must be positive");
    }
    const ValidationReport report = validate_frequencies(multipliers_);
    if (!report.valid()) {
      const auto& c = report.conflicts.front();
      throw DomainError("frequency multipliers violate the separation rule (multiplier " +
                        std::to_string(c.i + 1) + ", " + to_string(c.kind) + ")");
    }
  }

  Eigen::Index dim() const { return amplitudes_.size(); }
  const Vector<Scalar>& amplitudes() const { return amplitudes_; }
  const std::vector<int>& multipliers() const { return multipliers_; }
  Scalar base_frequency() const { return base_frequency_; }

  /// ωᵢ = ω'ᵢ·ω.
  Vector<Scalar> frequencies() const {
    Vector<Scalar> w(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
      w[i] = static_cast<Scalar>(multipliers_[static_cast<std::size_t>(i)]) * base_frequency_;
    }
    return w;
  }

  Scalar max_frequency() const { return frequencies().maxCoeff(); }

  /// a = sqrt(Σ aᵢ²).
  Scalar amplitude_norm() const { return amplitudes_.norm(); }

  DitherConfig with_base_frequency(Scalar omega) const { return {amplitudes_, multipliers_, omega}; }

 private:
  Vector<Scalar> amplitudes_;
  std::vector<int> multipliers_;
  Scalar base_frequency_;
};

/// S(t)ᵢ = aᵢ sin(ωᵢ t).
template <typename Scalar>
Vector<Scalar> perturbation(Scalar t, const DitherConfig<Scalar>& cfg) {
  return (cfg.amplitudes().array() * (cfg.frequencies().array() * t).sin()).matrix();
}

/// M(t)ᵢ = (2 / aᵢ) sin(ωᵢ t).
template <typename Scalar>
Vector<Scalar> demodulation(Scalar t, const DitherConfig<Scalar>& cfg) {
  return ((Scalar(2) / cfg.amplitudes().array()) * (cfg.frequencies().array() * t).sin()).matrix();
}

/// Δ(t) with M(t) S(t)ᵀ = I + Δ(t):
///   Δᵢᵢ = −cos(2ωᵢt),  Δᵢⱼ = (aⱼ/aᵢ)[cos((ωᵢ − ωⱼ)t) − cos((ωᵢ + ωⱼ)t)].
template <typename Scalar>
Matrix<Scalar> delta_matrix(Scalar t, const DitherConfig<Scalar>& cfg) {
  using std::cos;
  const auto n = cfg.dim();
  const Vector<Scalar> w = cfg.frequencies();
  const Vector<Scalar>& a = cfg.amplitudes();
  Matrix<Scalar> delta(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        delta(i, i) = -cos(Scalar(2) * w[i] * t);
      } else {
        delta(i, j) = a[j] / a[i] * (cos((w[i] - w[j]) * t) - cos((w[i] + w[j]) * t));
      }
    }
  }
  return delta;
}

template <typename Scalar>
struct CommonPeriod {
  Scalar period;  // T [s]
  Scalar omega;   // 2π / T [rad/s]
};

/// T = 2π·LCM{1/ωᵢ} = 2π / (ω·gcd(ω'₁, ..., ω'ₙ)). Works on any positive
/// multipliers, including sets the separation rule rejects.
template <typename Scalar>
CommonPeriod<Scalar> common_period(std::span<const int> multipliers, Scalar base_frequency) {
  int g = 0;
  for (int m : multipliers) {
    if (m < 1) throw DomainError("frequency multipliers must be positive integers");
    g = std::gcd(g, m);
  }
  if (g == 0 || !(base_frequency > Scalar(0))) {
    throw DomainError("common period needs multipliers and a positive base frequency");
  }
  const Scalar omega = base_frequency * static_cast<Scalar>(g);
  return {Scalar(2) * std::numbers::pi_v<Scalar> / omega, omega};
}

template <typename Scalar>
CommonPeriod<Scalar> common_period(const DitherConfig<Scalar>& cfg) {
  return common_period<Scalar>(std::span<const int>(cfg.multipliers()), cfg.base_frequency());
}

namespace detail {

template <typename T, typename = void>
struct plain {
  using type = T;
};
template <typename T>
struct plain<T, std::void_t<typename T::PlainObject>> {
  using type = typename T::PlainObject;
};

template <typename T>
bool all_finite(const T& value) {
  if constexpr (std::is_arithmetic_v<T>) {
    return std::isfinite(static_cast<double>(value));
  } else {
    return value.allFinite();
  }
}

}  // namespace detail

/// (1/T) ∫₀ᵀ f(s) ds by the composite trapezoid rule on `points` equal panels.
/// For T-periodic f the endpoints coincide, so this is the plain sample mean
/// over one period. `f` may return a scalar or any Eigen matrix expression.
template <typename Scalar, typename Fn>
auto signal_average(Fn&& f, Scalar period, int points) {
  using Result = typename detail::plain<std::decay_t<std::invoke_result_t<Fn&, Scalar>>>::type;
  if (points < 64) {
    throw DomainError("signal_average needs at least 64 quadrature points");
  }
  if (!(period > Scalar(0))) {
    throw DomainError("signal_average needs a positive period");
  }
  const Scalar h = period / static_cast<Scalar>(points);
  const Result first = f(Scalar(0));
  const Result last = f(period);
  if (!detail::all_finite(first) || !detail::all_finite(last)) {
    throw NumericalError("non-finite sample in signal_average");
  }
  Result acc = Scalar(0.5) * (first + last);
  for (int k = 1; k < points; ++k) {
    const Result value = f(h * static_cast<Scalar>(k));
    if (!detail::all_finite(value)) {
      throw NumericalError("non-finite sample in signal_average at t = " +
                           std::to_string(static_cast<double>(h * k)));
    }
    acc += value;
  }
  return Result(acc / static_cast<Scalar>(points));
}

}  // namespace uvesc
