#include "riskmdp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace riskmdp {

namespace {

struct Prepared {
    TransientMdp model;
    WeightFunction weight;
    double blowup;
};

Prepared prepare(const TransientMdp& model, const RiskSpec& spec, const SolveOptions& opts) {
    require_valid(model);
    spec.require_valid(model.num_states());
    Prepared p{normalized_copy(model),
               opts.weight ? *opts.weight : WeightFunction::ones(model), 0.0};
    require_valid_weight(p.model, p.weight);
    double max_w = 0.0;
    for (double x : p.weight.w) max_w = std::max(max_w, x);
    p.blowup = std::isfinite(opts.blowup_threshold) ? opts.blowup_threshold : 1e12 * max_w;
    return p;
}

double sigma_at(const TransientMdp& model, const RiskSpec& spec, int x, int u,
                const ValueFunction& v, numvec& phi_scratch) {
    const int n = model.num_states();
    const numvec& crow = model.cost[x][u];
    for (int y = 0; y < n; ++y) phi_scratch[y] = crow[y] + v[y];
    return evaluate_sigma(spec, x, phi_scratch, model.kernel[x][u]);
}

ValueFunction policy_step(const TransientMdp& model, const RiskSpec& spec, const Policy& policy,
                          const ValueFunction& v, numvec& phi_scratch) {
    ValueFunction out(model.num_states());
    for (int x = 0; x < model.num_states(); ++x) {
        if (x == model.absorbing) continue;
        out[x] = sigma_at(model, spec, x, policy.choice[x], v, phi_scratch);
    }
    return out;
}

std::pair<ValueFunction, Policy> bellman_step(const TransientMdp& model, const RiskSpec& spec,
                                              const ValueFunction& v, const Policy* incumbent,
                                              numvec& phi_scratch) {
    const int n = model.num_states();
    ValueFunction out(n);
    Policy greedy = Policy::deterministic(std::vector<int>(n, 0));
    for (int x = 0; x < n; ++x) {
        int best_u = 0;
        double best = sigma_at(model, spec, x, 0, v, phi_scratch);
        for (int u = 1; u < model.num_controls(x); ++u) {
            const double s = sigma_at(model, spec, x, u, v, phi_scratch);
            if (s < best) {
                best = s;
                best_u = u;
            } else if (incumbent && s == best && u == incumbent->choice[x]) {
                best_u = u;  // keep the incumbent control on exact ties
            }
        }
        out[x] = x == model.absorbing ? 0.0 : best;
        greedy.choice[x] = best_u;
    }
    return {std::move(out), std::move(greedy)};
}

}  // namespace

ValueFunction apply_policy_operator(const TransientMdp& model, const RiskSpec& spec,
                                    const Policy& policy, const ValueFunction& v) {
    require_valid(model);
    spec.require_valid(model.num_states());
    require_valid_policy(model, policy);
    if (policy.kind != Policy::Kind::deterministic)
        throw std::invalid_argument("policy operator requires a deterministic policy");
    const TransientMdp m = normalized_copy(model);
    numvec scratch(m.num_states());
    return policy_step(m, spec, policy, v, scratch);
}

std::pair<ValueFunction, Policy> apply_bellman_operator(const TransientMdp& model,
                                                        const RiskSpec& spec,
                                                        const ValueFunction& v,
                                                        const Policy* incumbent) {
    require_valid(model);
    spec.require_valid(model.num_states());
    const TransientMdp m = normalized_copy(model);
    numvec scratch(m.num_states());
    return bellman_step(m, spec, v, incumbent, scratch);
}

ValueFunction evaluate_nested_risk(const TransientMdp& model, const RiskSpec& spec,
                                   const Policy& policy, int horizon,
                                   const ValueFunction& terminal) {
    require_valid(model);
    spec.require_valid(model.num_states());
    require_valid_policy(model, policy);
    if (policy.kind != Policy::Kind::deterministic)
        throw std::invalid_argument("nested risk evaluation requires a deterministic policy");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (terminal[model.absorbing] != 0.0)
        throw std::invalid_argument("terminal value must vanish at the absorbing state");

    const TransientMdp m = normalized_copy(model);
    numvec scratch(m.num_states());
    ValueFunction v = terminal;
    for (int t = 0; t < horizon; ++t) v = policy_step(m, spec, policy, v, scratch);
    return v;
}

FiniteHorizonSolution solve_finite_horizon(const TransientMdp& model, const RiskSpec& spec,
                                           int horizon, const ValueFunction& terminal) {
    require_valid(model);
    spec.require_valid(model.num_states());
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (terminal[model.absorbing] != 0.0)
        throw std::invalid_argument("terminal value must vanish at the absorbing state");

    const TransientMdp m = normalized_copy(model);
    numvec scratch(m.num_states());
    FiniteHorizonSolution sol;
    sol.values.resize(horizon);
    sol.policies.resize(horizon);

    ValueFunction v = terminal;
    for (int t = horizon - 1; t >= 0; --t) {
        auto [nv, pol] = bellman_step(m, spec, v, nullptr, scratch);
        v = std::move(nv);
        sol.values[t] = v;
        sol.policies[t] = std::move(pol);
    }
    return sol;
}

InfiniteHorizonSolution evaluate_stationary_policy(const TransientMdp& model,
                                                   const RiskSpec& spec, const Policy& policy,
                                                   const SolveOptions& opts) {
    require_valid_policy(model, policy);
    if (policy.kind != Policy::Kind::deterministic)
        throw std::invalid_argument("stationary evaluation requires a deterministic policy");
    Prepared p = prepare(model, spec, opts);

    InfiniteHorizonSolution sol;
    sol.policy = policy;

    if (!opts.assume_transient) {
        TransienceOptions topts;
        topts.max_iter = opts.max_iter;
        topts.blowup_threshold = p.blowup;
        const auto rep = check_risk_transient(p.model, spec, policy, p.weight, topts);
        if (rep.verdict == TransienceVerdict::non_transient) {
            sol.status = SolveStatus::diverged;
            sol.diagnostic = "policy is not risk-transient: " + rep.detail;
            return sol;
        }
        if (rep.verdict == TransienceVerdict::inconclusive) {
            sol.status = SolveStatus::inconclusive;
            sol.diagnostic = "risk-transience check was inconclusive";
            return sol;
        }
    }

    numvec scratch(p.model.num_states());
    ValueFunction v(p.model.num_states());
    for (long k = 1; k <= opts.max_iter; ++k) {
        ValueFunction next = policy_step(p.model, spec, policy, v, scratch);
        const double delta = [&] {
            double d = 0.0;
            for (int x = 0; x < p.model.num_states(); ++x)
                if (x != p.model.absorbing)
                    d = std::max(d, std::abs(next[x] - v[x]) / p.weight[x]);
            return d;
        }();
        v = std::move(next);
        sol.iterations = k;
        if (opts.on_iterate) opts.on_iterate(k, v);
        if (delta <= opts.tol) {
            sol.value = v;
            sol.residual = weighted_norm(
                p.model,
                [&] {
                    ValueFunction check = policy_step(p.model, spec, policy, v, scratch);
                    for (int x = 0; x < p.model.num_states(); ++x) check[x] -= v[x];
                    return check.v;
                }(),
                p.weight);
            sol.status = SolveStatus::converged;
            return sol;
        }
        if (weighted_norm(p.model, v.v, p.weight) > p.blowup) {
            sol.status = SolveStatus::diverged;
            sol.diagnostic = "policy value exceeded the blowup threshold";
            return sol;
        }
    }
    sol.value = v;
    sol.status = SolveStatus::inconclusive;
    sol.diagnostic = "policy evaluation did not converge within max_iter";
    return sol;
}

InfiniteHorizonSolution policy_iteration(const TransientMdp& model, const RiskSpec& spec,
                                         const Policy& initial, const SolveOptions& opts) {
    require_valid_policy(model, initial);
    if (initial.kind != Policy::Kind::deterministic)
        throw std::invalid_argument("policy iteration requires a deterministic policy");
    Prepared p = prepare(model, spec, opts);

    InfiniteHorizonSolution sol;

    if (!opts.assume_transient) {
        TransienceOptions topts;
        topts.max_iter = opts.max_iter;
        topts.blowup_threshold = p.blowup;
        const auto rep = check_risk_transient_uniform(p.model, spec, p.weight, topts);
        if (rep.verdict == TransienceVerdict::non_transient) {
            sol.status = SolveStatus::diverged;
            sol.diagnostic = "model is not uniformly risk-transient: " + rep.detail;
            return sol;
        }
        if (rep.verdict == TransienceVerdict::inconclusive) {
            sol.status = SolveStatus::inconclusive;
            sol.diagnostic = "uniform risk-transience check was inconclusive";
            return sol;
        }
    }

    SolveOptions eval_opts = opts;
    eval_opts.assume_transient = true;  // covered by the uniform check above
    eval_opts.on_iterate = nullptr;

    Policy current = initial;
    ValueFunction v;
    ValueFunction prev_v;
    numvec scratch(p.model.num_states());

    for (long k = 1; k <= opts.max_iter; ++k) {
        InfiniteHorizonSolution eval = evaluate_stationary_policy(p.model, spec, current, eval_opts);
        if (eval.status != SolveStatus::converged) {
            sol.status = SolveStatus::diverged;
            std::ostringstream os;
            os << "evaluation failed for policy [";
            for (int x = 0; x < p.model.num_states(); ++x) {
                if (x) os << ", ";
                os << p.model.controls[x][current.choice[x]];
            }
            os << "]: " << eval.diagnostic;
            sol.diagnostic = os.str();
            return sol;
        }
        v = eval.value;
        sol.iterations = k;
        if (opts.on_iterate) opts.on_iterate(k, v);

        auto [improved_v, improved] = bellman_step(p.model, spec, v, &current, scratch);
        const bool same_policy = improved.choice == current.choice;
        double decrease = std::numeric_limits<double>::infinity();
        if (k > 1) {
            numvec diff(p.model.num_states(), 0.0);
            for (int x = 0; x < p.model.num_states(); ++x) diff[x] = prev_v[x] - v[x];
            decrease = weighted_norm(p.model, diff, p.weight);
        }
        prev_v = v;

        if (same_policy || decrease < opts.tol) {
            sol.value = v;
            sol.policy = current;
            for (int x = 0; x < p.model.num_states(); ++x) improved_v[x] -= v[x];
            sol.residual = weighted_norm(p.model, improved_v.v, p.weight);
            sol.status = SolveStatus::converged;
            return sol;
        }
        current = std::move(improved);
    }
    sol.status = SolveStatus::inconclusive;
    sol.diagnostic = "policy iteration did not settle within max_iter";
    return sol;
}

InfiniteHorizonSolution policy_iteration(const TransientMdp& model, const RiskSpec& spec,
                                         const SolveOptions& opts) {
    return policy_iteration(
        model, spec, Policy::deterministic(std::vector<int>(model.num_states(), 0)), opts);
}

InfiniteHorizonSolution value_iteration(const TransientMdp& model, const RiskSpec& spec,
                                        const SolveOptions& opts) {
    Prepared p = prepare(model, spec, opts);

    InfiniteHorizonSolution sol;

    if (!opts.assume_transient) {
        TransienceOptions topts;
        topts.max_iter = opts.max_iter;
        topts.blowup_threshold = p.blowup;
        const auto rep = check_risk_transient_uniform(p.model, spec, p.weight, topts);
        if (rep.verdict == TransienceVerdict::non_transient) {
            sol.status = SolveStatus::diverged;
            sol.diagnostic = "model is not uniformly risk-transient: " + rep.detail;
            return sol;
        }
        if (rep.verdict == TransienceVerdict::inconclusive) {
            sol.status = SolveStatus::inconclusive;
            sol.diagnostic = "uniform risk-transience check was inconclusive";
            return sol;
        }
    }

    numvec scratch(p.model.num_states());
    ValueFunction v(p.model.num_states());
    for (long k = 1; k <= opts.max_iter; ++k) {
        auto [next, greedy] = bellman_step(p.model, spec, v, nullptr, scratch);
        double delta = 0.0;
        for (int x = 0; x < p.model.num_states(); ++x)
            if (x != p.model.absorbing)
                delta = std::max(delta, std::abs(next[x] - v[x]) / p.weight[x]);
        v = std::move(next);
        sol.iterations = k;
        if (opts.on_iterate) opts.on_iterate(k, v);
        if (delta <= opts.tol) {
            sol.value = v;
            sol.policy = std::move(greedy);
            auto [check, pol2] = bellman_step(p.model, spec, v, nullptr, scratch);
            (void)pol2;
            for (int x = 0; x < p.model.num_states(); ++x) check[x] -= v[x];
            sol.residual = weighted_norm(p.model, check.v, p.weight);
            sol.status = SolveStatus::converged;
            return sol;
        }
        if (weighted_norm(p.model, v.v, p.weight) > p.blowup) {
            sol.status = SolveStatus::diverged;
            sol.diagnostic = "value iteration exceeded the blowup threshold";
            return sol;
        }
    }
    sol.value = v;
    sol.status = SolveStatus::inconclusive;
    sol.diagnostic = "value iteration did not converge within max_iter";
    return sol;
}

}  // namespace riskmdp
