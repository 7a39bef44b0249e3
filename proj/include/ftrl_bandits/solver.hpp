#pragma once

// Exact FTRL step over the box-floored simplex
//
//   P = argmin_{p in simplex, p_i >= floor}  <p, L> + (1/eta) sum_i f_t(p_i).
//
// KKT: f'(p_i)/eta + L_i - lambda - mu_i = 0, mu_i >= 0, mu_i (p_i - floor) = 0.
// For a fixed multiplier lambda each coordinate is
//   p_i(lambda) = clamp(inverse_gradient(eta (lambda - L_i)), floor, 1),
// which is continuous and nondecreasing in lambda, so the multiplier is the
// root of sum_i p_i(lambda) = 1. We find it by bracketed Newton (bisection
// whenever a Newton step leaves the bracket). Each inverse_gradient is in
// closed form. Two-arm problems use the dual map directly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftrl_bandits/core.hpp"
#include "ftrl_bandits/potentials.hpp"

namespace ftrl_bandits {

struct FtrlProblem {
  /// Cumulative loss estimates L_{t-1} (a view; must outlive the call).
  std::span<const double> cost;
  Potential potential;
  double learning_rate = 1.0;
  double floor = 0.0;
  std::uint64_t t = 1;
};

struct KktCertificate {
  double multiplier = 0.0;
  double complementarity_residual = 0.0;
  double stationarity_residual = 0.0;
  double simplex_residual = 0.0;
};

struct FtrlSolution {
  ProbabilityVector distribution;
  KktCertificate certificate;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxOuterIterations = 200;
inline constexpr double kOuterTolerance = 1e-14;

namespace detail {

inline void validate(const FtrlProblem& problem) {
  const std::size_t k = problem.cost.size();
  if (k < 2) throw std::invalid_argument("FtrlProblem: need at least two arms");
  if (!(problem.learning_rate > 0.0) || !std::isfinite(problem.learning_rate)) {
    throw std::invalid_argument("FtrlProblem: learning rate must be positive and finite");
  }
  if (!(problem.floor >= 0.0) || problem.floor * static_cast<double>(k) > 1.0 + 1e-15) {
    throw std::invalid_argument("FtrlProblem: infeasible floor " +
                                std::to_string(problem.floor) + " for k = " +
                                std::to_string(k));
  }
  for (double c : problem.cost) {
    if (!std::isfinite(c)) throw std::invalid_argument("FtrlProblem: non-finite cost");
  }
}

}  // namespace detail

/// KKT residuals of `p` with simplex multiplier `multiplier`. The floor
/// multipliers are recovered as mu_i = max(0, r_i) from the raw stationarity
/// terms r_i = f'(p_i)/eta + L_i - lambda.
inline KktCertificate certify(const FtrlProblem& problem, std::span<const double> p,
                              double multiplier) {
  const double shift = *std::min_element(problem.cost.begin(), problem.cost.end());
  const double shifted_lambda = multiplier - shift;
  KktCertificate cert;
  cert.multiplier = multiplier;
  const double eta = problem.learning_rate;
  const ResolvedPotential f(problem.potential, problem.t);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < std::numeric_limits<double>::min() && problem.floor == 0.0 &&
        problem.potential.kind == PotentialKind::negentropy) {
      // exp underflow to zero or a subnormal: the stationarity term is not
      // resolvable, so only check that the exact weight is that small.
      sum += p[i];
      const double exponent = eta * (shifted_lambda - (problem.cost[i] - shift));
      const double limit = std::log(std::numeric_limits<double>::min());
      if (exponent > limit) {
        cert.stationarity_residual = std::max(cert.stationarity_residual, exponent - limit);
      }
      continue;
    }
    detail::check_domain(p[i], "certify");
    sum += p[i];
    const double r = f.gradient(p[i]) / eta +
                     (problem.cost[i] - shift) - shifted_lambda;
    const double mu = std::max(0.0, r);
    cert.stationarity_residual = std::max(cert.stationarity_residual, std::abs(r - mu));
    cert.complementarity_residual =
        std::max(cert.complementarity_residual, mu * (p[i] - problem.floor));
  }
  cert.simplex_residual = std::abs(sum - 1.0);
  return cert;
}

enum class SolveMethod {
  /// Dual-map shortcut for two arms, multiplier search otherwise.
  automatic,
  /// Always run the multiplier search (used to cross-check the shortcut).
  multiplier_search,
};

/// Solves into `out` (resized to k) and returns the simplex multiplier.
/// `out` may be reused across calls to avoid allocation.
inline double solve_into(const FtrlProblem& problem, std::vector<double>& out,
                         SolveMethod method = SolveMethod::automatic) {
  detail::validate(problem);
  const std::size_t k = problem.cost.size();
  const double kd = static_cast<double>(k);
  const double eta = problem.learning_rate;
  const double floor = problem.floor;
  const Potential& pot = problem.potential;
  const ResolvedPotential f(pot, problem.t);
  out.resize(k);

  // The solution is invariant to a common shift of the costs; shifting by
  // the minimum keeps lambda small so rounding in eta (lambda - L_i) stays
  // negligible even for costs of order 1e6.
  const double shift = *std::min_element(problem.cost.begin(), problem.cost.end());

  if (floor * kd >= 1.0 - 1e-15) {
    std::fill(out.begin(), out.end(), 1.0 / kd);
    const double lambda = (problem.cost[0] - shift) + f.gradient(out[0]) / eta;
    return lambda + shift;
  }

  if (k == 2 && method == SolveMethod::automatic) {
    // Compute the smaller coordinate directly so it keeps full relative
    // precision, then take the larger one as its complement.
    const double gap = problem.cost[1] - problem.cost[0];
    const std::size_t small = gap >= 0.0 ? 1 : 0;
    const double gap_small = small == 0 ? gap : -gap;
    const double p_small =
        std::clamp(dual_gradient_two_arm({pot, eta, problem.t}, gap_small), floor, 0.5);
    out[small] = p_small;
    out[1 - small] = 1.0 - p_small;
    const std::size_t interior = 1 - small;
    const double lambda =
        (problem.cost[interior] - shift) + f.gradient(out[interior]) / eta;
    return lambda + shift;
  }

  auto fill = [&](double lambda, double& derivative) {
    double sum = 0.0;
    derivative = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double p = f.inverse_gradient(eta * (lambda - (problem.cost[i] - shift)));
      if (p <= floor) {
        p = floor;
      } else if (p >= 1.0) {
        p = 1.0;
      } else {
        derivative += eta / f.hessian(p);
      }
      out[i] = p;
      sum += p;
    }
    return sum - 1.0;
  };

  // At lambda = min_i L_i + f'(1/k)/eta every coordinate is <= 1/k, at
  // max_i L_i + f'(1/k)/eta every coordinate is >= 1/k.
  const double anchor = f.gradient(1.0 / kd) / eta;
  double max_cost = 0.0;
  for (double c : problem.cost) max_cost = std::max(max_cost, c - shift);
  double lo = anchor;
  double hi = max_cost + anchor;
  double derivative = 0.0;
  for (double width = 1.0; fill(lo, derivative) > 0.0; width *= 2.0) lo -= width;
  for (double width = 1.0; fill(hi, derivative) < 0.0; width *= 2.0) hi += width;

  double lambda = 0.5 * (lo + hi);
  for (int iter = 0;; ++iter) {
    if (iter >= kMaxOuterIterations) {
      throw SolverError("solve: multiplier search did not converge after " +
                        std::to_string(kMaxOuterIterations) + " iterations");
    }
    const double excess = fill(lambda, derivative);
    if (excess == 0.0) break;
    if (excess > 0.0) {
      hi = lambda;
    } else {
      lo = lambda;
    }
    const double bisect = 0.5 * (lo + hi);
    if (bisect <= lo || bisect >= hi) break;  // bracket exhausted at double resolution
    // A small excess alone is not enough: when the leading coordinate is
    // clamped at 1 the excess can be tiny while the small coordinates are
    // still far off, so we also require the Newton step to be negligible.
    const double step = derivative > 0.0 ? excess / derivative : bisect - lambda;
    if (std::abs(excess) <= kOuterTolerance &&
        std::abs(step) <= 1e-15 * (1.0 + std::abs(lambda))) {
      break;
    }
    double next = derivative > 0.0 ? lambda - step : bisect;
    if (!(next > lo && next < hi)) next = bisect;
    lambda = next;
  }

  // When one arm carries almost all the mass its coordinate rounds to 1 and
  // the sum no longer pins lambda. Anchor lambda on that arm instead:
  // lambda = L_* + f'(1 - S(lambda))/eta, with S the mass of the others.
  // This map contracts by a factor of order S, so a few passes suffice.
  const std::size_t lead = static_cast<std::size_t>(
      std::max_element(out.begin(), out.end()) - out.begin());
  if (out[lead] >= 1.0 - 1e-8) {
    for (int pass = 0; pass < 8; ++pass) {
      fill(lambda, derivative);
      double rest = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (i != lead) rest += out[i];
      }
      out[lead] = 1.0 - rest;
      const double next = (problem.cost[lead] - shift) + f.gradient(out[lead]) / eta;
      if (next == lambda) break;
      lambda = next;
    }
    double rest = 0.0;
    fill(lambda, derivative);
    for (std::size_t i = 0; i < k; ++i) {
      if (i != lead) rest += out[i];
    }
    out[lead] = 1.0 - rest;
  }
  return lambda + shift;
}

inline FtrlSolution solve(const FtrlProblem& problem,
                          SolveMethod method = SolveMethod::automatic) {
  std::vector<double> p;
  const double multiplier = solve_into(problem, p, method);
  const KktCertificate cert = certify(problem, p, multiplier);
  return {ProbabilityVector(std::move(p), problem.floor), cert};
}

/// Two-arm unconstrained iterate P_{t,1} = grad g*(eta * gap), where
/// gap = L_{t-1,2} - L_{t-1,1}.
inline double solve_two_arm_unconstrained(const Potential& potential, double eta, double gap,
                                          std::uint64_t t = 1) {
  return dual_gradient_two_arm({potential, eta, t}, gap);
}

}  // namespace ftrl_bandits
