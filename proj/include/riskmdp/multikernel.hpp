#pragma once

#include <limits>
#include <optional>
#include <string>

#include "riskmdp/model.hpp"
#include "riskmdp/risk.hpp"

namespace riskmdp {

/**
 * A per-state maximizing selector of the effective risk multikernel: row i is
 * the envelope element attaining the robust value at effective state i,
 * restricted to the effective states (absorbing column dropped). Rows are
 * substochastic.
 */
struct RiskKernelSelector {
    nummat rows;  // effective x effective
};

struct RobustApplyResult {
    ValueFunction value;
    RiskKernelSelector selector;
};

/**
 * One robust (worst-case) step: for every effective state x,
 *
 *   new_v(x) = max over mu in A(x, Q(x, pi(x))) of <wbar + v, mu>,
 *
 * where wbar extends the weight by 0 at the absorbing state. The absorbing
 * entry of the result is 0. Selector rows are the per-state maximizers.
 */
RobustApplyResult robust_apply(const TransientMdp& model, const RiskSpec& spec,
                               const Policy& policy, const ValueFunction& v,
                               const WeightFunction& w);

enum class TransienceVerdict { transient, non_transient, inconclusive };

/**
 * Outcome of the risk-transience check. bound_K bounds the weighted norm of
 * every partial sum of effective-multikernel selector products: transient
 * means all such sums stay below bound_K, which guarantees a finite
 * infinite-horizon risk value.
 */
struct TransienceReport {
    TransienceVerdict verdict = TransienceVerdict::inconclusive;
    double bound_K = 0.0;             // valid when transient
    long iterations = 0;
    std::optional<long> divergence_detected_at;
    bool uniform = false;             // whether the check ranged over all controls
    bool certified_early = false;     // verdict from a contraction/growth certificate
    double partial_sum_norm = 0.0;    // ||d_final||_w, a lower estimate of the true bound
    std::string detail;
};

struct TransienceOptions {
    double tol = 1e-10;
    long max_iter = 100000;
    /// Defaults to 1e12 * max(w) when not finite.
    double blowup_threshold = std::numeric_limits<double>::quiet_NaN();
};

/**
 * Decides whether the model is risk-transient under the given stationary
 * deterministic policy by iterating d_{k+1} = robust_apply(d_k) from d_0 = 0,
 * which computes the supremum over selector products of the partial sums
 * sum_{j<=k+1} M^j w.
 *
 * Verdicts:
 *  - transient when the iteration converges (bound_K = ||d||_w), or when a
 *    contraction certificate max_x d_{k+1}(x) / (w(x) + d_k(x)) < 1 holds,
 *    which bounds every selector product geometrically;
 *  - non-transient when ||d_k||_w exceeds the blowup threshold, or when the
 *    current maximizing selector M has spectral radius >= 1 (certified by a
 *    Collatz-Wielandt lower bound), so the partial sums under the constant
 *    selector M alone already diverge;
 *  - inconclusive when max_iter is reached with neither verdict.
 */
TransienceReport check_risk_transient(const TransientMdp& model, const RiskSpec& spec,
                                      const Policy& policy, const WeightFunction& w,
                                      const TransienceOptions& opts = {});

/// Uniform variant: the robust step also maximizes over the controls of each
/// state, so a transient verdict covers every stationary Markov policy.
TransienceReport check_risk_transient_uniform(const TransientMdp& model, const RiskSpec& spec,
                                              const WeightFunction& w,
                                              const TransienceOptions& opts = {});

}  // namespace riskmdp
