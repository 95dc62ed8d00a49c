#pragma once

#include <string>

#include "riskmdp/model.hpp"
#include "riskmdp/randomized.hpp"
#include "riskmdp/risk.hpp"
#include "riskmdp/solver.hpp"

namespace riskmdp::examples {

/**
 * Optimal stopping on offers: offers arrive i.i.d. with the given pmf over
 * integers 0..S_max; each period either the best offer so far is accepted
 * (cost -x) or a waiting cost c0 is paid. The state is the best offer so
 * far plus an absorbing post-sale state.
 */
struct AssetSellingSpec {
    numvec offer_pmf;   // index s = offer value
    double waiting_cost = 1.0;
    RiskSpec risk;
};

struct AssetSellingResult {
    int threshold = 0;            // accept any best-offer >= threshold
    numvec value_fn;              // v(x) = -max(x, threshold) per offer state
    bool degenerate = false;      // no offer level satisfied the scan rule
    double fixed_point_residual = 0.0;  // optimality-equation check of value_fn
    TransientMdp model;           // the materialized offer-state model
};

/// Full offer-state model: states are best-offers 0..S_max plus "sold";
/// controls are wait / sell everywhere.
TransientMdp asset_selling_mdp(const AssetSellingSpec& spec);

/**
 * Threshold of the risk-averse selling rule: the smallest integer x such
 * that the worst-case expected surplus min over the risk envelope of
 * sum_s (s - x)_+ mu(s) is at most the waiting cost. Also materializes the
 * model and substitutes the threshold value function into the optimality
 * equation; the residual is reported (it vanishes when the scan inequality
 * is tight at the threshold).
 */
AssetSellingResult asset_threshold(const AssetSellingSpec& spec);

/**
 * Three-state organ transplant model: a patient in state S waits (living one
 * more month, with a small death risk) or transplants (reaching post-
 * transplant life L or dying). L aggregates a monthly survival chain whose
 * risk-adjusted length r(L) is precomputed and collected as a lump sum.
 * Rewards are represented as negative costs.
 */
struct TransplantSpec {
    // Transition probabilities from S (rows sum to 1).
    double q_SS_W = 0.99882;
    double q_SD_W = 0.00118;
    double q_SL_T = 0.90782;
    double q_SD_T = 0.09218;

    double kappa = 1.0;  // mean-semideviation level for the whole problem

    // Survival model: monthly death probabilities over n months starting at
    // the age-offset month, terminal month forced fatal.
    int n_survival = 900;
    int age_offset_months = 300;
    int max_lifetime_months = 1200;

    // Lifetime distribution: mixture of Weibull, lognormal, and Gompertz.
    double mix_w1 = 0.0170, weibull_delta = 0.297, weibull_beta = 0.225;
    double mix_w2 = 0.0092, lognormal_m = 3.11, lognormal_sigma = 0.218;
    double mix_w3 = 0.9737, gompertz_b = 0.0000812, gompertz_alpha = 0.0844;
};

/// Mixture lifetime distribution function, x in years.
double lifetime_cdf(const TransplantSpec& spec, double x);

/// Conditional monthly death probabilities p_k for k = 1..max_lifetime_months:
/// the chance of dying at age k months given survival so far, from half-month
/// windows of the lifetime distribution.
numvec monthly_death_probs(const TransplantSpec& spec);

/**
 * Risk-adjusted months of life after transplant: the survival chain over
 * months age_offset..age_offset+n-1 is evaluated backward with the
 * mean-semideviation recursion; returns the negated first-state value. At
 * kappa = 0 this is the expected residual life in months.
 */
double survival_value(const TransplantSpec& spec, double kappa);

/// The 3-state model (S, L, D absorbing) with the lump reward at L.
TransientMdp transplant_mdp(const TransplantSpec& spec);

struct TransplantReport {
    double r_L = 0.0;
    std::string deterministic_action_at_S;
    numvec deterministic_values;       // over states S, L, D
    numvec randomized_lambda_at_S;     // over controls (W, T)
    numvec randomized_values;
    double randomized_inner_gap = 0.0;
};

/// Solves both the deterministic-policy and the randomized-policy problem on
/// the transplant model at the spec's kappa.
TransplantReport solve_transplant(const TransplantSpec& spec);

}  // namespace riskmdp::examples
