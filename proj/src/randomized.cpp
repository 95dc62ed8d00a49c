#include "riskmdp/randomized.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "riskmdp/multikernel.hpp"

namespace riskmdp {

JointMeasure compose_measure(const TransientMdp& model, int x, std::span<const double> lambda) {
    require_valid(model);
    if (static_cast<int>(lambda.size()) != model.num_controls(x))
        throw std::invalid_argument("lambda length does not match the control set");
    double sum = 0.0;
    for (double p : lambda) {
        if (p < 0.0) throw std::invalid_argument("lambda has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("lambda is not a probability vector");

    JointMeasure joint;
    for (int u = 0; u < model.num_controls(x); ++u)
        for (int y = 0; y < model.num_states(); ++y) {
            const double w = lambda[u] * model.kernel[x][u][y];
            if (w > 0.0) {
                joint.support.emplace_back(u, y);
                joint.weights.push_back(w);
            }
        }
    return joint;
}

double sigma_joint(const RiskSpec& spec, int x, std::span<const double> phi,
                   const JointMeasure& joint) {
    if (phi.size() != joint.support.size())
        throw std::invalid_argument("phi must be aligned with the joint support");
    return evaluate_sigma(spec, x, phi, joint.weights);
}

namespace {

/// Barycentric grid over the sub-simplex spanned by `vertices` (each a point
/// of the probability simplex) at the given resolution, invoking fn on every
/// grid distribution. Enumeration starts at the first vertex.
void for_each_grid_point(const nummat& vertices, int resolution,
                         const std::function<void(const numvec&)>& fn) {
    const int d = static_cast<int>(vertices.size());
    std::vector<int> comp(d, 0);
    numvec lambda(vertices[0].size());

    auto emit = [&]() {
        std::fill(lambda.begin(), lambda.end(), 0.0);
        for (int j = 0; j < d; ++j) {
            const double share = static_cast<double>(comp[j]) / resolution;
            if (share == 0.0) continue;
            for (std::size_t c = 0; c < lambda.size(); ++c) lambda[c] += share * vertices[j][c];
        }
        fn(lambda);
    };

    // Recursive composition enumeration: first coordinate takes the largest
    // share first so pure vertices are visited before interior points.
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == d - 1) {
            comp[pos] = left;
            emit();
            return;
        }
        for (int take = left; take >= 0; --take) {
            comp[pos] = take;
            rec(pos + 1, left - take);
        }
    };
    rec(0, resolution);
}

struct InnerResult {
    numvec lambda;
    double value = 0.0;
};

/// Minimizes fn over the probability simplex of dimension d by grid search
/// plus shrinking refinement. Returns the best point found and the final
/// grid spacing via *spacing.
InnerResult minimize_over_simplex(int d, int grid_points, int refinements,
                                  const std::function<double(const numvec&)>& fn,
                                  double* spacing) {
    InnerResult best;
    if (d == 1) {
        best.lambda = {1.0};
        best.value = fn(best.lambda);
        if (spacing) *spacing = 0.0;
        return best;
    }
    const int k = std::max(1, grid_points - 1);

    nummat vertices(d, numvec(d, 0.0));
    for (int j = 0; j < d; ++j) vertices[j][j] = 1.0;

    best.value = std::numeric_limits<double>::infinity();
    double h = 1.0 / k;
    for (int round = 0; round <= refinements; ++round) {
        for_each_grid_point(vertices, k, [&](const numvec& lambda) {
            const double val = fn(lambda);
            if (val < best.value) {
                best.value = val;
                best.lambda = lambda;
            }
        });
        if (round == refinements) break;
        // Shrink the simplex around the incumbent; the incumbent stays a
        // grid point of the shrunk simplex, so the best value cannot regress.
        const double scale = 2.0 / k;
        for (int j = 0; j < d; ++j)
            for (int c = 0; c < d; ++c)
                vertices[j][c] = best.lambda[c] + scale * (vertices[j][c] - best.lambda[c]);
        h *= scale;
    }
    if (spacing) *spacing = h;
    return best;
}

}  // namespace

RandomizedSolution randomized_bellman_solve(const TransientMdp& raw_model, const RiskSpec& spec,
                                            const RandomizedOptions& opts) {
    require_valid(raw_model);
    spec.require_valid(raw_model.num_states());
    const TransientMdp model = normalized_copy(raw_model);
    const WeightFunction weight = WeightFunction::ones(model);
    const double blowup =
        std::isfinite(opts.blowup_threshold) ? opts.blowup_threshold : 1e12;

    RandomizedSolution sol;

    if (!opts.assume_transient) {
        TransienceOptions topts;
        topts.max_iter = opts.max_iter;
        topts.blowup_threshold = blowup;
        const auto rep = check_risk_transient_uniform(model, spec, weight, topts);
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

    const int n = model.num_states();

    // Fixed per-state joint supports; only the weights change with lambda.
    std::vector<std::vector<std::pair<int, int>>> supports(n);
    for (int x = 0; x < n; ++x) {
        if (x == model.absorbing) continue;
        for (int u = 0; u < model.num_controls(x); ++u)
            for (int y = 0; y < n; ++y)
                if (model.kernel[x][u][y] > 0.0) supports[x].emplace_back(u, y);
    }

    ValueFunction v(n);
    Policy lam = Policy::randomized(nummat(n));
    for (int x = 0; x < n; ++x) lam.mix[x].assign(model.num_controls(x), 0.0);
    for (int x = 0; x < n; ++x) lam.mix[x][0] = 1.0;

    double spacing = 0.0;
    numvec weights_buf, phi_buf;

    auto sweep = [&](ValueFunction& out, Policy& out_lam) {
        for (int x = 0; x < n; ++x) {
            if (x == model.absorbing) {
                out[x] = 0.0;
                continue;
            }
            const auto& sup = supports[x];
            weights_buf.resize(sup.size());
            phi_buf.resize(sup.size());
            for (std::size_t a = 0; a < sup.size(); ++a) {
                const auto [u, y] = sup[a];
                phi_buf[a] = model.cost[x][u][y] + v[y];
            }
            auto objective = [&](const numvec& lambda) {
                for (std::size_t a = 0; a < sup.size(); ++a) {
                    const auto [u, y] = sup[a];
                    weights_buf[a] = lambda[u] * model.kernel[x][u][y];
                }
                return evaluate_sigma(spec, x, phi_buf, weights_buf);
            };
            double sp = 0.0;
            InnerResult inner = minimize_over_simplex(model.num_controls(x), opts.inner_grid,
                                                      opts.inner_refinements, objective, &sp);
            spacing = std::max(spacing, sp);
            out[x] = inner.value;
            out_lam.mix[x] = inner.lambda;
        }
    };

    for (long k = 1; k <= opts.max_iter; ++k) {
        ValueFunction next(n);
        Policy next_lam = lam;
        sweep(next, next_lam);
        double delta = 0.0;
        for (int x = 0; x < n; ++x)
            if (x != model.absorbing) delta = std::max(delta, std::abs(next[x] - v[x]));
        v = std::move(next);
        lam = std::move(next_lam);
        sol.iterations = k;
        if (delta <= opts.tol) {
            sol.value = v;
            sol.policy = lam;
            sol.inner_gap = spacing;
            ValueFunction check(n);
            Policy check_lam = lam;
            sweep(check, check_lam);
            double res = 0.0;
            for (int x = 0; x < n; ++x)
                if (x != model.absorbing) res = std::max(res, std::abs(check[x] - v[x]));
            sol.residual = res;
            sol.status = SolveStatus::converged;
            return sol;
        }
        if (weighted_norm(model, v.v, weight) > blowup) {
            sol.status = SolveStatus::diverged;
            sol.diagnostic = "randomized value iteration exceeded the blowup threshold";
            return sol;
        }
    }
    sol.value = v;
    sol.policy = lam;
    sol.inner_gap = spacing;
    sol.status = SolveStatus::inconclusive;
    sol.diagnostic = "randomized value iteration did not converge within max_iter";
    return sol;
}

}  // namespace riskmdp
