#pragma once

#include <functional>
#include <string>

#include "riskmdp/model.hpp"
#include "riskmdp/multikernel.hpp"
#include "riskmdp/risk.hpp"

namespace riskmdp {

enum class SolveStatus { converged, inconclusive, diverged };

struct SolveOptions {
    double tol = 1e-9;
    long max_iter = 100000;
    /// Skip the risk-transience precheck (caller asserts transience). The
    /// blowup guard during iteration stays active either way.
    bool assume_transient = false;
    /// Defaults to 1e12 * max(w) when not finite.
    double blowup_threshold = std::numeric_limits<double>::quiet_NaN();
    /// Weight for the convergence norm; defaults to 1 on effective states.
    const WeightFunction* weight = nullptr;
    /// Observer invoked with each iterate (policy-iteration: each policy
    /// value; value iteration: each sweep).
    std::function<void(long iter, const ValueFunction&)> on_iterate;
};

/// Stage values and argmin policies of a finite-horizon problem. Index t
/// (0-based) holds stage t+1, so values[0] is the first-stage value, the
/// optimal nested risk of the whole horizon.
struct FiniteHorizonSolution {
    std::vector<ValueFunction> values;
    std::vector<Policy> policies;
};

struct InfiniteHorizonSolution {
    ValueFunction value;
    Policy policy;
    long iterations = 0;
    /// Weighted norm of one extra Bellman application at the returned value,
    /// recomputed post hoc.
    double residual = 0.0;
    SolveStatus status = SolveStatus::converged;
    std::string diagnostic;
};

/// One application of the policy operator: new_v(x) = sigma of the
/// transition cost plus v at the next state, under Q(x, pi(x)).
ValueFunction apply_policy_operator(const TransientMdp& model, const RiskSpec& spec,
                                    const Policy& policy, const ValueFunction& v);

/// One application of the optimality operator (min over controls), together
/// with an argmin policy. Ties pick the lowest control index, or keep
/// incumbent[x] when it ties and incumbent is given.
std::pair<ValueFunction, Policy> apply_bellman_operator(const TransientMdp& model,
                                                        const RiskSpec& spec,
                                                        const ValueFunction& v,
                                                        const Policy* incumbent = nullptr);

/**
 * Nested risk of a deterministic stationary policy over T stages with a
 * terminal value: the backward recursion v_t = sigma(c + v_{t+1}) starting
 * from the terminal, returning the first-stage value.
 */
ValueFunction evaluate_nested_risk(const TransientMdp& model, const RiskSpec& spec,
                                   const Policy& policy, int horizon,
                                   const ValueFunction& terminal);

/**
 * Finite-horizon dynamic programming: at every stage and state, the value is
 * the minimum over controls of sigma(c(x,u,.) + v_{t+1}, x, Q(x,u)); the
 * stored policy is an argmin (ties to the lowest control index).
 */
FiniteHorizonSolution solve_finite_horizon(const TransientMdp& model, const RiskSpec& spec,
                                           int horizon, const ValueFunction& terminal);

/**
 * Infinite-horizon value of a stationary deterministic policy: the fixed
 * point of the policy operator with v(x_A) = 0, reached by iteration from 0.
 * Unless opts.assume_transient is set, risk-transience under the policy is
 * verified first; a non-transient verdict is reported as divergence.
 */
InfiniteHorizonSolution evaluate_stationary_policy(const TransientMdp& model,
                                                   const RiskSpec& spec, const Policy& policy,
                                                   const SolveOptions& opts = {});

/**
 * Risk-averse policy iteration: alternates policy evaluation with greedy
 * improvement (ties keep the incumbent control), stopping when the policy
 * repeats or the value decrease falls below tol. Policy values are
 * entrywise nonincreasing across iterations.
 */
InfiniteHorizonSolution policy_iteration(const TransientMdp& model, const RiskSpec& spec,
                                         const Policy& initial, const SolveOptions& opts = {});

/// Convenience overload starting from the all-lowest-index policy.
InfiniteHorizonSolution policy_iteration(const TransientMdp& model, const RiskSpec& spec,
                                         const SolveOptions& opts = {});

/**
 * Risk-averse value iteration from v = 0; returns the fixed point and a
 * greedy policy. For nonnegative costs the iterates increase monotonically
 * to the optimal value.
 */
InfiniteHorizonSolution value_iteration(const TransientMdp& model, const RiskSpec& spec,
                                        const SolveOptions& opts = {});

}  // namespace riskmdp
