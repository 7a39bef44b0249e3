#pragma once

// Per-coordinate convex potentials f_t and the two-arm dual maps.
//
//   negentropy    f(p) = p (log p - 1)
//   tsallis_half  f(p) = -2 sqrt(p)
//   log_barrier   f(p) = -log p
//   hybrid        f_t(p) = -2 sqrt(p) - c_t log p,
//                 c_t = 1 / (sqrt(k) log^{1+q} max{3, t})   (anytime)
//                 c_t = 1 / (sqrt(k) log n)                 (known horizon n)
//
// All potentials are Legendre on (0, 1]: f' is strictly increasing and
// f'(p) -> -inf as p -> 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ftrl_bandits {

enum class PotentialKind { negentropy, tsallis_half, log_barrier, hybrid };

inline std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::negentropy: return "negentropy";
    case PotentialKind::tsallis_half: return "tsallis_half";
    case PotentialKind::log_barrier: return "log_barrier";
    case PotentialKind::hybrid: return "hybrid";
  }
  return "unknown";
}

inline PotentialKind potential_kind_from_string(std::string_view name) {
  if (name == "negentropy") return PotentialKind::negentropy;
  if (name == "tsallis_half") return PotentialKind::tsallis_half;
  if (name == "log_barrier") return PotentialKind::log_barrier;
  if (name == "hybrid") return PotentialKind::hybrid;
  throw std::invalid_argument("unknown potential kind '" + std::string(name) + "'");
}

struct Potential {
  PotentialKind kind = PotentialKind::tsallis_half;
  /// Hybrid only: exponent q > 0 of the log-barrier decay.
  double q = 1.0;
  /// Hybrid only: number of arms.
  std::size_t arms = 2;
  /// Hybrid only: when set, the barrier weight is frozen at 1/(sqrt(k) log n).
  std::optional<std::uint64_t> known_horizon;

  static Potential negentropy() { return {PotentialKind::negentropy, 1.0, 2, std::nullopt}; }
  static Potential tsallis_half() { return {PotentialKind::tsallis_half, 1.0, 2, std::nullopt}; }
  static Potential log_barrier() { return {PotentialKind::log_barrier, 1.0, 2, std::nullopt}; }
  static Potential hybrid(std::size_t arms, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("hybrid potential: q must be positive");
    if (arms < 2) throw std::invalid_argument("hybrid potential: need k >= 2");
    return {PotentialKind::hybrid, q, arms, std::nullopt};
  }
  static Potential hybrid_known_horizon(std::size_t arms, std::uint64_t horizon) {
    if (horizon < 3) throw std::invalid_argument("hybrid potential: horizon must be >= 3");
    if (arms < 2) throw std::invalid_argument("hybrid potential: need k >= 2");
    return {PotentialKind::hybrid, 1.0, arms, horizon};
  }

  /// Weight c_t of the log-barrier term (0 for the pure potentials).
  double barrier_weight(std::uint64_t t) const noexcept {
    if (kind != PotentialKind::hybrid) return 0.0;
    const double root_k = std::sqrt(static_cast<double>(arms));
    if (known_horizon) return 1.0 / (root_k * std::log(static_cast<double>(*known_horizon)));
    const double log_t = std::log(static_cast<double>(t < 3 ? 3 : t));
    return 1.0 / (root_k * std::pow(log_t, 1.0 + q));
  }
};

namespace detail {
inline void check_domain(double p, const char* what) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(what) + ": p = " + std::to_string(p) +
                            " outside (0, 1]");
  }
}
}  // namespace detail

/// A potential with its round-dependent barrier weight resolved, for inner
/// loops that evaluate it many times at one round. No domain checks.
struct ResolvedPotential {
  PotentialKind kind;
  double c;  // barrier weight; 0 unless hybrid

  ResolvedPotential(const Potential& pot, std::uint64_t t)
      : kind(pot.kind), c(pot.barrier_weight(t)) {}

  double value(double p) const noexcept {
    switch (kind) {
      case PotentialKind::negentropy: return p * (std::log(p) - 1.0);
      case PotentialKind::tsallis_half: return -2.0 * std::sqrt(p);
      case PotentialKind::log_barrier: return -std::log(p);
      case PotentialKind::hybrid: return -2.0 * std::sqrt(p) - c * std::log(p);
    }
    return 0.0;
  }

  double gradient(double p) const noexcept {
    switch (kind) {
      case PotentialKind::negentropy: return std::log(p);
      case PotentialKind::tsallis_half: return -1.0 / std::sqrt(p);
      case PotentialKind::log_barrier: return -1.0 / p;
      case PotentialKind::hybrid: return -1.0 / std::sqrt(p) - c / p;
    }
    return 0.0;
  }

  double hessian(double p) const noexcept {
    switch (kind) {
      case PotentialKind::negentropy: return 1.0 / p;
      case PotentialKind::tsallis_half: return 0.5 / (p * std::sqrt(p));
      case PotentialKind::log_barrier: return 1.0 / (p * p);
      case PotentialKind::hybrid: return 0.5 / (p * std::sqrt(p)) + c / (p * p);
    }
    return 0.0;
  }

  /// Solves f'(p) = y for p > 0 without the p <= 1 restriction. Returns
  /// +inf when y is at or beyond the supremum of f' (0 for every kind but
  /// negentropy, whose gradient is unbounded).
  double inverse_gradient(double y) const noexcept {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind) {
      case PotentialKind::negentropy: return std::exp(y);
      case PotentialKind::tsallis_half: return y < 0.0 ? 1.0 / (y * y) : inf;
      case PotentialKind::log_barrier: return y < 0.0 ? -1.0 / y : inf;
      case PotentialKind::hybrid: {
        if (!(y < 0.0)) return inf;
        // u = 1/sqrt(p) solves c u^2 + u + y = 0.
        const double u = -2.0 * y / (1.0 + std::sqrt(1.0 - 4.0 * c * y));
        return 1.0 / (u * u);
      }
    }
    return inf;
  }
};

inline double value(const Potential& pot, double p, std::uint64_t t = 1) {
  detail::check_domain(p, "potential value");
  return ResolvedPotential(pot, t).value(p);
}

inline double gradient(const Potential& pot, double p, std::uint64_t t = 1) {
  detail::check_domain(p, "potential gradient");
  return ResolvedPotential(pot, t).gradient(p);
}

inline double hessian(const Potential& pot, double p, std::uint64_t t = 1) {
  detail::check_domain(p, "potential hessian");
  return ResolvedPotential(pot, t).hessian(p);
}

inline double inverse_gradient(const Potential& pot, double y, std::uint64_t t = 1) noexcept {
  return ResolvedPotential(pot, t).inverse_gradient(y);
}

// -- two-arm dual maps --------------------------------------------------------
//
// With g(p) = f(p) + f(1 - p), the two-arm FTRL iterate is
//   P_{t,1} = grad g*(eta (L_{t-1,2} - L_{t-1,1})),
// i.e. the unique p in (0,1) with g'(p) = x.

struct DualMapTwoArm {
  Potential potential;
  /// Scale applied to the argument: the map is evaluated at eta * x.
  double eta = 1.0;
  /// Round index, which only the anytime hybrid potential reads.
  std::uint64_t t = 1;
};

namespace detail {

/// g'(p) for the two-arm potential.
inline double two_arm_gradient(const ResolvedPotential& f, double p) noexcept {
  return f.gradient(p) - f.gradient(1.0 - p);
}

/// grad g* of the 1/2-Tsallis potential for x <= 0. The textbook closed form
///   (1 - sqrt(1 + 4 (2 sqrt(1 + x^2) - 2 - x^2) / x^4)) / 2
/// simplifies, with s = sqrt(1 + x^2), to (1 - sqrt(1 - 4 / (1 + s)^2)) / 2,
/// which is finite at x = 0. Below, w = 4 / (1 + s)^2 and
/// 1 - w = (s - 1)(s + 3) / (1 + s)^2 with s - 1 = x^2 / (1 + s), so neither
/// the centre nor the tail 1/x^2 suffers cancellation.
inline double tsallis_dual_nonpositive(double x) {
  const double s = std::sqrt(1.0 + x * x);
  const double w = 4.0 / ((1.0 + s) * (1.0 + s));
  const double root = std::abs(x) * std::sqrt((s + 3.0) / (1.0 + s)) / (1.0 + s);
  return 0.5 * w / (1.0 + root);
}

/// grad g* of the log barrier for x <= 0: root of x p^2 + (2 - x) p - 1 = 0.
inline double log_barrier_dual_nonpositive(double x) {
  return 2.0 / ((2.0 - x) + std::sqrt(x * x + 4.0));
}

/// grad g* of the hybrid potential for x <= 0 by safeguarded Newton.
/// On (0, 1/2] g' is increasing and concave, so Newton started left of the
/// root increases monotonically to it. The bracket uses that both the
/// Tsallis part and the barrier part of g' are negative there.
inline double hybrid_dual_nonpositive(const Potential& pot, double x, std::uint64_t t) {
  if (x == 0.0) return 0.5;
  const ResolvedPotential f(pot, t);
  const double c = f.c;
  double lo = std::max(tsallis_dual_nonpositive(x), log_barrier_dual_nonpositive(x / c));
  double hi = std::min(0.5, std::max(tsallis_dual_nonpositive(0.5 * x),
                                     log_barrier_dual_nonpositive(0.5 * x / c)));
  double p = lo;
  for (int iter = 0; iter < 200; ++iter) {
    const double h = two_arm_gradient(f, p) - x;
    if (h == 0.0) return p;
    if (h < 0.0) {
      lo = p;
    } else {
      hi = p;
    }
    const double slope = f.hessian(p) + f.hessian(1.0 - p);
    double next = p - h / slope;
    if (std::abs(next - p) <= 2e-16 * p) return next;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next <= lo || next >= hi) return p;  // bracket exhausted
    p = next;
  }
  return p;
}

}  // namespace detail

/// Evaluates grad g*(eta * x) in (0, 1).
inline double dual_gradient_two_arm(const DualMapTwoArm& map, double x) {
  const double y = map.eta * x;
  if (!std::isfinite(y)) throw std::domain_error("dual_gradient_two_arm: non-finite argument");
  const Potential& pot = map.potential;
  if (pot.kind == PotentialKind::negentropy) {
    if (y >= 0.0) return 1.0 / (1.0 + std::exp(-y));
    const double e = std::exp(y);
    return e / (1.0 + e);
  }
  const double z = -std::abs(y);
  double lower = 0.5;
  switch (pot.kind) {
    case PotentialKind::tsallis_half: lower = detail::tsallis_dual_nonpositive(z); break;
    case PotentialKind::log_barrier: lower = detail::log_barrier_dual_nonpositive(z); break;
    case PotentialKind::hybrid: lower = detail::hybrid_dual_nonpositive(pot, z, map.t); break;
    case PotentialKind::negentropy: break;
  }
  return y > 0.0 ? 1.0 - lower : lower;
}

/// n * grad g*(-a sqrt(n)) for the 1/2-Tsallis potential; tends to 1/a^2.
inline double tsallis_tail_constant(double a, std::uint64_t n) {
  if (!(a > 0.0)) throw std::invalid_argument("tsallis_tail_constant: a must be positive");
  if (n < 1) throw std::invalid_argument("tsallis_tail_constant: n must be >= 1");
  const double nd = static_cast<double>(n);
  return nd * dual_gradient_two_arm({Potential::tsallis_half()}, -a * std::sqrt(nd));
}

}  // namespace ftrl_bandits
