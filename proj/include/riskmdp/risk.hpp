#pragma once

#include <span>
#include <utility>
#include <vector>

#include "riskmdp/model.hpp"

namespace riskmdp {

enum class RiskFamily { expectation, mean_semideviation, avar };

/**
 * Selects the one-step coherent risk measure applied at every stage.
 *
 * Expectation is the risk-neutral case. Mean-semideviation adds kappa times
 * the expected deviation above the mean (kappa in [0,1]). Average Value at
 * Risk averages the worst alpha-fraction of outcomes (alpha in (0,1]; the
 * endpoint alpha = 1 is the expectation). Parameters may be constant or
 * given per state.
 */
struct RiskSpec {
    RiskFamily family = RiskFamily::expectation;
    numvec kappa;  // size 1 (constant) or one entry per state
    numvec alpha;

    static RiskSpec expectation();
    static RiskSpec semideviation(double kappa);
    static RiskSpec semideviation(numvec per_state_kappa);
    static RiskSpec avar(double alpha);
    static RiskSpec avar(numvec per_state_alpha);

    double kappa_at(int state) const;
    double alpha_at(int state) const;

    /// Throws std::invalid_argument on out-of-range parameters or a
    /// parameter vector that matches neither 1 nor num_states.
    void require_valid(int num_states) const;

    std::string describe() const;
};

/// Risk value together with the distribution from the risk envelope that
/// attains it: sigma == <phi, maximizer> within 1e-10.
struct RiskValue {
    double sigma = 0.0;
    numvec maximizer;
};

/**
 * The risk transition mapping sigma(phi, x, m): the chosen coherent risk
 * measure of the outcome function phi under the probability vector m, at
 * state x (which selects per-state parameters).
 *
 * Expectation returns <phi, m>. Mean-semideviation returns
 * <phi,m> + kappa * <(phi - <phi,m>)_+, m>. AVaR is computed exactly by
 * sorting: the average of the worst alpha-fraction of outcomes, with
 * fractional mass at the boundary atom.
 *
 * phi and m must have equal length; m must be a probability vector. The
 * support is arbitrary (states, or control/state pairs for randomized
 * policies).
 */
double evaluate_sigma(const RiskSpec& spec, int state, std::span<const double> phi,
                      std::span<const double> m);

/**
 * Maximizing element of the risk envelope A(x, m): the distribution mu*
 * attaining sigma(phi, x, m) = max_{mu in A(x,m)} <phi, mu>.
 *
 * Mean-semideviation uses the envelope densities 1 + h - <h,m> with
 * h_j = kappa * [phi_j > <phi,m>] (h_j = 0 at ties). AVaR greedily assigns
 * density min(1/alpha, remaining) to outcomes in decreasing phi order, ties
 * broken by lower index. Expectation returns m itself.
 */
RiskValue max_selector(const RiskSpec& spec, int state, std::span<const double> phi,
                       std::span<const double> m);

/**
 * Range of probability mass the risk envelope can place on a target set of
 * support positions: (min, max) of mu(B) over mu in A(x, m). Computed as
 * sigma applied to the indicator of B and its negative.
 */
std::pair<double, double> envelope_mass_bounds(const RiskSpec& spec, int state,
                                               std::span<const double> m,
                                               std::span<const int> target_positions);

}  // namespace riskmdp
