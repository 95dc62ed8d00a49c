#pragma once

#include <utility>

#include "riskmdp/model.hpp"
#include "riskmdp/risk.hpp"
#include "riskmdp/solver.hpp"

namespace riskmdp {

/// Probability measure on (control, next state) pairs induced by a
/// randomized decision at one state: weight(u, y) = lambda(u) * Q(y | x, u).
/// Zero-weight pairs are dropped from the support.
struct JointMeasure {
    std::vector<std::pair<int, int>> support;  // (control index, state index)
    numvec weights;
};

/// Builds the joint control/next-state measure at state x for a distribution
/// lambda over U(x).
JointMeasure compose_measure(const TransientMdp& model, int x, std::span<const double> lambda);

/// The risk transition mapping evaluated on the product support: phi must be
/// aligned with joint.support.
double sigma_joint(const RiskSpec& spec, int x, std::span<const double> phi,
                   const JointMeasure& joint);

struct RandomizedOptions {
    double tol = 1e-9;
    long max_iter = 100000;
    bool assume_transient = false;
    double blowup_threshold = std::numeric_limits<double>::quiet_NaN();
    /// Points per simplex edge of the initial grid (k+1 points for k=grid-1
    /// subdivisions). For more than two controls the grid is barycentric and
    /// its size grows combinatorially with the control count; the solver is
    /// intended for small control sets.
    int inner_grid = 101;
    /// Refinement rounds: each round re-grids a simplex shrunk around the
    /// incumbent, multiplying the spacing by 2/(inner_grid-1).
    int inner_refinements = 3;
};

struct RandomizedSolution {
    ValueFunction value;
    Policy policy;  // randomized; per-state distribution over U(x)
    long iterations = 0;
    double residual = 0.0;
    /// Final grid spacing of the inner simplex search, an optimality-gap
    /// proxy for the per-state minimization.
    double inner_gap = 0.0;
    SolveStatus status = SolveStatus::converged;
    std::string diagnostic;
};

/**
 * Value iteration for the randomized-policy optimality equation: at every
 * state the update minimizes sigma(c(x,.,.) + v(.), x, [lambda o Q]_x) over
 * distributions lambda on U(x), solved by a coarse simplex grid followed by
 * shrinking refinement around the best point. Returns the fixed point and
 * the per-state optimal lambda.
 */
RandomizedSolution randomized_bellman_solve(const TransientMdp& model, const RiskSpec& spec,
                                            const RandomizedOptions& opts = {});

}  // namespace riskmdp
