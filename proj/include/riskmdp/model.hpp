#pragma once

#include <string>
#include <vector>

namespace riskmdp {

using numvec = std::vector<double>;
using nummat = std::vector<numvec>;

/// Tolerance for probability-vector row sums throughout the library.
inline constexpr double kStochasticTol = 1e-12;

/**
 * Finite controlled Markov model with a single absorbing, zero-cost state.
 *
 * States and controls are referenced by index; names are kept for I/O and
 * diagnostics. kernel[x][u] is the transition probability vector over all
 * states when control u is applied in state x; cost[x][u][y] is the cost of
 * that transition. Total (undiscounted) cost accumulates until absorption.
 *
 * Instances are treated as immutable after construction and are safe to
 * share across threads.
 */
struct TransientMdp {
    std::vector<std::string> states;
    int absorbing = -1;
    std::vector<std::vector<std::string>> controls;  // per state
    std::vector<nummat> kernel;                      // [x][u] -> row over states
    std::vector<nummat> cost;                        // [x][u][y]

    int num_states() const { return static_cast<int>(states.size()); }
    int num_controls(int x) const { return static_cast<int>(controls[x].size()); }
    int num_effective() const { return num_states() - 1; }

    /// Position of state x among the effective (non-absorbing) states.
    int effective_index(int x) const { return x < absorbing ? x : x - 1; }
    /// Inverse of effective_index.
    int state_of_effective(int i) const { return i < absorbing ? i : i + 1; }

    int state_index(const std::string& name) const;
    int control_index(int x, const std::string& name) const;
};

/// Real-valued function over states, pinned to zero at the absorbing state.
struct ValueFunction {
    numvec v;

    ValueFunction() = default;
    explicit ValueFunction(int n) : v(n, 0.0) {}
    explicit ValueFunction(numvec values) : v(std::move(values)) {}

    double operator[](int x) const { return v[x]; }
    double& operator[](int x) { return v[x]; }
    int size() const { return static_cast<int>(v.size()); }
};

/// Stationary decision rule: one control per state, or a distribution over
/// the feasible controls of each state.
struct Policy {
    enum class Kind { deterministic, randomized };

    Kind kind = Kind::deterministic;
    std::vector<int> choice;  // deterministic: control index per state
    nummat mix;               // randomized: per-state distribution over U(x)

    static Policy deterministic(std::vector<int> choice);
    static Policy randomized(nummat mix);
};

/**
 * Weight (bounding) function over the effective states, each entry >= 1.
 * Stored over all states with the absorbing entry fixed at 0, which is the
 * extension used when weighting next-state values.
 */
struct WeightFunction {
    numvec w;  // full length; w[absorbing] == 0

    static WeightFunction ones(const TransientMdp& model);
    static WeightFunction from_effective(const TransientMdp& model, const numvec& effective);

    double operator[](int x) const { return w[x]; }
};

/// A single invariant violation found by validate(). Coordinates that do not
/// apply are -1.
struct Violation {
    std::string message;
    int state = -1;
    int control = -1;
};

/**
 * Checks every structural invariant of the model: row stochasticity within
 * 1e-12, absorbing self-loop with zero cost, finite costs, nonempty control
 * sets, and shape consistency. Violations are returned as data; an empty
 * result means the model is valid.
 */
std::vector<Violation> validate(const TransientMdp& model);

/// Throws std::invalid_argument listing all violations if the model is invalid.
void require_valid(const TransientMdp& model);

/// Throws std::invalid_argument if the policy does not match the model
/// (wrong kind-specific shape, out-of-range control, bad distribution).
void require_valid_policy(const TransientMdp& model, const Policy& policy);

/// Throws if weights are malformed (wrong length, entry < 1, nonzero at the
/// absorbing state).
void require_valid_weight(const TransientMdp& model, const WeightFunction& w);

/// Copy of the model with every kernel row renormalized to sum exactly to 1.
/// Solvers renormalize once up front so file-rounding noise cannot shift
/// fixed points.
TransientMdp normalized_copy(const TransientMdp& model);

/**
 * Effective restriction of the kernel under a deterministic policy: the
 * substochastic matrix with rows Q(y | x, pi(x)) for effective x and y
 * (absorbing row and column dropped). Row sums equal 1 - Q(x_A | x, pi(x)).
 */
nummat effective_restriction(const TransientMdp& model, const Policy& policy);

/// Weighted sup-norm max_x |v(x)| / w(x) over effective states.
double weighted_norm(const TransientMdp& model, const numvec& v, const WeightFunction& w);

}  // namespace riskmdp
