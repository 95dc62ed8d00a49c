#include "riskmdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace riskmdp {

int TransientMdp::state_index(const std::string& name) const {
    auto it = std::find(states.begin(), states.end(), name);
    if (it == states.end())
        throw std::invalid_argument("unknown state '" + name + "'");
    return static_cast<int>(it - states.begin());
}

int TransientMdp::control_index(int x, const std::string& name) const {
    const auto& us = controls.at(x);
    auto it = std::find(us.begin(), us.end(), name);
    if (it == us.end())
        throw std::invalid_argument("unknown control '" + name + "' at state '" + states[x] + "'");
    return static_cast<int>(it - us.begin());
}

Policy Policy::deterministic(std::vector<int> choice) {
    Policy p;
    p.kind = Kind::deterministic;
    p.choice = std::move(choice);
    return p;
}

Policy Policy::randomized(nummat mix) {
    Policy p;
    p.kind = Kind::randomized;
    p.mix = std::move(mix);
    return p;
}

WeightFunction WeightFunction::ones(const TransientMdp& model) {
    WeightFunction w;
    w.w.assign(model.num_states(), 1.0);
    w.w[model.absorbing] = 0.0;
    return w;
}

WeightFunction WeightFunction::from_effective(const TransientMdp& model, const numvec& effective) {
    if (static_cast<int>(effective.size()) != model.num_effective())
        throw std::invalid_argument("weight vector length does not match effective state count");
    WeightFunction w;
    w.w.assign(model.num_states(), 0.0);
    for (int i = 0; i < model.num_effective(); ++i)
        w.w[model.state_of_effective(i)] = effective[i];
    return w;
}

namespace {

std::string coord(const TransientMdp& m, int x, int u) {
    std::ostringstream os;
    os << "state '" << m.states[x] << "'";
    if (u >= 0 && u < m.num_controls(x)) os << ", control '" << m.controls[x][u] << "'";
    return os.str();
}

}  // namespace

std::vector<Violation> validate(const TransientMdp& model) {
    std::vector<Violation> out;
    const int n = model.num_states();

    if (n < 2) {
        out.push_back({"model needs at least two states", -1, -1});
        return out;
    }
    if (model.absorbing < 0 || model.absorbing >= n) {
        out.push_back({"absorbing state index out of range", -1, -1});
        return out;
    }
    if (static_cast<int>(model.controls.size()) != n ||
        static_cast<int>(model.kernel.size()) != n ||
        static_cast<int>(model.cost.size()) != n) {
        out.push_back({"per-state containers do not match the state count", -1, -1});
        return out;
    }

    for (int x = 0; x < n; ++x) {
        if (model.controls[x].empty())
            out.push_back({"empty control set at " + coord(model, x, -1), x, -1});
        if (model.kernel[x].size() != model.controls[x].size() ||
            model.cost[x].size() != model.controls[x].size()) {
            out.push_back({"kernel/cost rows do not match control count at " + coord(model, x, -1), x, -1});
            continue;
        }
        for (int u = 0; u < model.num_controls(x); ++u) {
            const numvec& row = model.kernel[x][u];
            const numvec& crow = model.cost[x][u];
            if (static_cast<int>(row.size()) != n || static_cast<int>(crow.size()) != n) {
                out.push_back({"row length mismatch at " + coord(model, x, u), x, u});
                continue;
            }
            double sum = 0.0;
            for (int y = 0; y < n; ++y) {
                if (row[y] < 0.0)
                    out.push_back({"negative probability at " + coord(model, x, u), x, u});
                if (!std::isfinite(crow[y]))
                    out.push_back({"non-finite cost at " + coord(model, x, u), x, u});
                sum += row[y];
            }
            if (std::abs(sum - 1.0) > kStochasticTol)
                out.push_back({"row not stochastic (sum " + std::to_string(sum) + ") at " + coord(model, x, u), x, u});
        }
    }

    const int a = model.absorbing;
    for (int u = 0; u < model.num_controls(a); ++u) {
        if (static_cast<int>(model.kernel[a].size()) <= u ||
            static_cast<int>(model.kernel[a][u].size()) != n)
            continue;  // shape problem already reported
        if (std::abs(model.kernel[a][u][a] - 1.0) > kStochasticTol)
            out.push_back({"absorbing state is not absorbing under " + coord(model, a, u), a, u});
        if (model.cost[a][u][a] != 0.0)
            out.push_back({"absorbing cost nonzero under " + coord(model, a, u), a, u});
    }
    return out;
}

void require_valid(const TransientMdp& model) {
    auto violations = validate(model);
    if (violations.empty()) return;
    std::ostringstream os;
    os << "invalid model:";
    for (const auto& v : violations) os << "\n  - " << v.message;
    throw std::invalid_argument(os.str());
}

void require_valid_policy(const TransientMdp& model, const Policy& policy) {
    const int n = model.num_states();
    if (policy.kind == Policy::Kind::deterministic) {
        if (static_cast<int>(policy.choice.size()) != n)
            throw std::invalid_argument("policy length does not match state count");
        for (int x = 0; x < n; ++x)
            if (policy.choice[x] < 0 || policy.choice[x] >= model.num_controls(x))
                throw std::invalid_argument("policy references unknown control at state '" + model.states[x] + "'");
    } else {
        if (static_cast<int>(policy.mix.size()) != n)
            throw std::invalid_argument("policy length does not match state count");
        for (int x = 0; x < n; ++x) {
            const numvec& lam = policy.mix[x];
            if (static_cast<int>(lam.size()) != model.num_controls(x))
                throw std::invalid_argument("policy distribution length mismatch at state '" + model.states[x] + "'");
            double sum = 0.0;
            for (double p : lam) {
                if (p < 0.0)
                    throw std::invalid_argument("negative policy probability at state '" + model.states[x] + "'");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kStochasticTol)
                throw std::invalid_argument("policy distribution does not sum to 1 at state '" + model.states[x] + "'");
        }
    }
}

void require_valid_weight(const TransientMdp& model, const WeightFunction& w) {
    if (static_cast<int>(w.w.size()) != model.num_states())
        throw std::invalid_argument("weight vector length does not match state count");
    if (w.w[model.absorbing] != 0.0)
        throw std::invalid_argument("weight must be 0 at the absorbing state");
    for (int x = 0; x < model.num_states(); ++x)
        if (x != model.absorbing && w.w[x] < 1.0)
            throw std::invalid_argument("weight below 1 at state '" + model.states[x] + "'");
}

TransientMdp normalized_copy(const TransientMdp& model) {
    TransientMdp out = model;
    for (int x = 0; x < out.num_states(); ++x)
        for (auto& row : out.kernel[x]) {
            double sum = 0.0;
            for (double p : row) sum += p;
            if (sum > 0.0)
                for (double& p : row) p /= sum;
        }
    return out;
}

nummat effective_restriction(const TransientMdp& model, const Policy& policy) {
    require_valid(model);
    if (policy.kind != Policy::Kind::deterministic)
        throw std::invalid_argument("effective_restriction requires a deterministic policy");
    require_valid_policy(model, policy);

    const int ne = model.num_effective();
    nummat out(ne, numvec(ne, 0.0));
    for (int i = 0; i < ne; ++i) {
        const int x = model.state_of_effective(i);
        const numvec& row = model.kernel[x][policy.choice[x]];
        for (int j = 0; j < ne; ++j) out[i][j] = row[model.state_of_effective(j)];
    }
    return out;
}

double weighted_norm(const TransientMdp& model, const numvec& v, const WeightFunction& w) {
    double norm = 0.0;
    for (int x = 0; x < model.num_states(); ++x) {
        if (x == model.absorbing) continue;
        norm = std::max(norm, std::abs(v[x]) / w[x]);
    }
    return norm;
}

}  // namespace riskmdp
