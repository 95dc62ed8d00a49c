#include "riskmdp/examples.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace riskmdp::examples {

namespace {

void require_pmf(const numvec& pmf) {
    if (pmf.empty()) throw std::invalid_argument("offer pmf is empty");
    double sum = 0.0;
    for (double p : pmf) {
        if (p < 0.0) throw std::invalid_argument("offer pmf has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("offer pmf does not sum to 1");
}

}  // namespace

TransientMdp asset_selling_mdp(const AssetSellingSpec& spec) {
    require_pmf(spec.offer_pmf);
    if (!(spec.waiting_cost > 0.0))
        throw std::invalid_argument("waiting cost must be positive");

    const int s_max = static_cast<int>(spec.offer_pmf.size()) - 1;
    const int n = s_max + 2;  // offer states plus "sold"
    const int sold = n - 1;

    TransientMdp m;
    m.states.reserve(n);
    for (int x = 0; x <= s_max; ++x) m.states.push_back("x" + std::to_string(x));
    m.states.push_back("sold");
    m.absorbing = sold;
    m.controls.assign(n, {"wait", "sell"});
    m.controls[sold] = {"stay"};
    m.kernel.assign(n, {});
    m.cost.assign(n, {});

    for (int x = 0; x <= s_max; ++x) {
        numvec wait_row(n, 0.0), sell_row(n, 0.0);
        numvec wait_cost(n, spec.waiting_cost), sell_cost(n, 0.0);
        double stay = 0.0;  // offers at or below the current best
        for (int s = 0; s <= s_max; ++s) {
            if (s > x) wait_row[s] = spec.offer_pmf[s];
            else stay += spec.offer_pmf[s];
        }
        wait_row[x] += stay;
        sell_row[sold] = 1.0;
        sell_cost[sold] = -static_cast<double>(x);
        m.kernel[x] = {wait_row, sell_row};
        m.cost[x] = {wait_cost, sell_cost};
    }
    numvec stay_row(n, 0.0);
    stay_row[sold] = 1.0;
    m.kernel[sold] = {stay_row};
    m.cost[sold] = {numvec(n, 0.0)};
    return m;
}

AssetSellingResult asset_threshold(const AssetSellingSpec& spec) {
    require_pmf(spec.offer_pmf);
    if (!(spec.waiting_cost > 0.0))
        throw std::invalid_argument("waiting cost must be positive");
    const int s_max = static_cast<int>(spec.offer_pmf.size()) - 1;
    spec.risk.require_valid(s_max + 2);

    AssetSellingResult out;
    out.model = asset_selling_mdp(spec);

    // Worst-case expected surplus over the envelope:
    //   g(x) = min_{mu in A} sum_s (s - x)_+ mu(s) = -sigma(-(s-x)_+, pmf).
    auto surplus = [&](int x) {
        numvec phi(spec.offer_pmf.size());
        for (int s = 0; s <= s_max; ++s) phi[s] = -std::max(double(s - x), 0.0);
        return -evaluate_sigma(spec.risk, x, phi, spec.offer_pmf);
    };

    out.threshold = s_max;
    out.degenerate = true;
    for (int x = 0; x <= s_max; ++x) {
        if (surplus(x) <= spec.waiting_cost) {
            out.threshold = x;
            out.degenerate = false;
            break;
        }
    }

    const int n = out.model.num_states();
    out.value_fn.assign(s_max + 1, 0.0);
    for (int x = 0; x <= s_max; ++x)
        out.value_fn[x] = -std::max(double(x), double(out.threshold));

    // Substitute the threshold value function into the optimality equation
    // v(x) = min{ -x, c0 + sigma(v(max(x, .)), pmf) } on the materialized
    // model and record the largest deviation.
    ValueFunction v(n);
    for (int x = 0; x <= s_max; ++x) v[x] = out.value_fn[x];
    auto [bellman_v, greedy] = apply_bellman_operator(out.model, spec.risk, v);
    (void)greedy;
    double residual = 0.0;
    for (int x = 0; x <= s_max; ++x)
        residual = std::max(residual, std::abs(bellman_v[x] - v[x]));
    out.fixed_point_residual = residual;
    return out;
}

double lifetime_cdf(const TransplantSpec& spec, double x) {
    if (x < 0.0) throw std::invalid_argument("lifetime is nonnegative");
    if (x == 0.0) return 0.0;
    const double weibull =
        spec.mix_w1 * (1.0 - std::exp(-std::pow(x / spec.weibull_delta, spec.weibull_beta)));
    const double lognormal =
        spec.mix_w2 * 0.5 *
        (1.0 + std::erf((std::log(x) - spec.lognormal_m) / (spec.lognormal_sigma * std::sqrt(2.0))));
    const double gompertz =
        spec.mix_w3 *
        (1.0 - std::exp(-(spec.gompertz_b / spec.gompertz_alpha) *
                        (std::exp(spec.gompertz_alpha * x) - 1.0)));
    return weibull + lognormal + gompertz;
}

numvec monthly_death_probs(const TransplantSpec& spec) {
    numvec p(spec.max_lifetime_months + 1, 0.0);  // p[k], k = 1..max
    for (int k = 1; k <= spec.max_lifetime_months; ++k) {
        const double lo = lifetime_cdf(spec, k / 12.0 - 1.0 / 24.0);
        const double hi = lifetime_cdf(spec, k / 12.0 + 1.0 / 24.0);
        const double tail = 1.0 - lo;
        p[k] = tail <= 1e-15 ? 1.0 : std::clamp((hi - lo) / tail, 0.0, 1.0);
    }
    return p;
}

double survival_value(const TransplantSpec& spec, double kappa) {
    if (!(kappa >= 0.0 && kappa <= 1.0))
        throw std::invalid_argument("kappa must lie in [0, 1]");
    if (spec.n_survival < 1) throw std::invalid_argument("survival chain is empty");
    if (spec.age_offset_months + spec.n_survival - 1 > spec.max_lifetime_months)
        throw std::invalid_argument("survival chain extends past the maximum lifetime");

    const numvec p_all = monthly_death_probs(spec);
    // Month of survival state i (1-based) is age_offset + i - 1; the last
    // state is always fatal.
    numvec p(spec.n_survival);
    for (int i = 1; i <= spec.n_survival; ++i) p[i - 1] = p_all[spec.age_offset_months + i - 1];
    p[spec.n_survival - 1] = 1.0;

    // Backward mean-semideviation recursion on the two-point transition
    // (die now vs. live on); the upward deviation sits on the death branch
    // because continuation values are nonpositive.
    double v = -1.0;
    for (int i = spec.n_survival - 2; i >= 0; --i)
        v = -1.0 + (1.0 - p[i]) * v - kappa * p[i] * (1.0 - p[i]) * v;
    return -v;
}

TransientMdp transplant_mdp(const TransplantSpec& spec) {
    if (std::abs(spec.q_SS_W + spec.q_SD_W - 1.0) > 1e-9 ||
        std::abs(spec.q_SL_T + spec.q_SD_T - 1.0) > 1e-9)
        throw std::invalid_argument("transition probabilities from S must sum to 1 per control");

    const double r_L = survival_value(spec, spec.kappa);

    TransientMdp m;
    m.states = {"S", "L", "D"};
    m.absorbing = 2;
    m.controls = {{"W", "T"}, {"continue"}, {"continue"}};
    m.kernel.assign(3, {});
    m.cost.assign(3, {});

    // S: waiting earns one month (cost -1) and risks death; transplanting
    // earns nothing immediately.
    m.kernel[0] = {{spec.q_SS_W, 0.0, spec.q_SD_W}, {0.0, spec.q_SL_T, spec.q_SD_T}};
    m.cost[0] = {{-1.0, -1.0, -1.0}, {0.0, 0.0, 0.0}};
    // L resolves into absorption with the lump reward r(L).
    m.kernel[1] = {{0.0, 0.0, 1.0}};
    m.cost[1] = {{0.0, 0.0, -r_L}};
    m.kernel[2] = {{0.0, 0.0, 1.0}};
    m.cost[2] = {{0.0, 0.0, 0.0}};
    return m;
}

TransplantReport solve_transplant(const TransplantSpec& spec) {
    TransplantReport rep;
    rep.r_L = survival_value(spec, spec.kappa);
    const TransientMdp model = transplant_mdp(spec);
    const RiskSpec risk = spec.kappa == 0.0 ? RiskSpec::expectation()
                                            : RiskSpec::semideviation(spec.kappa);

    SolveOptions opts;
    opts.assume_transient = true;  // every policy leaks mass to D from S and L
    InfiniteHorizonSolution det = policy_iteration(model, risk, opts);
    if (det.status != SolveStatus::converged)
        throw std::runtime_error("deterministic transplant solve failed: " + det.diagnostic);
    rep.deterministic_action_at_S = model.controls[0][det.policy.choice[0]];
    rep.deterministic_values = det.value.v;

    RandomizedOptions ropts;
    ropts.assume_transient = true;
    RandomizedSolution rand = randomized_bellman_solve(model, risk, ropts);
    if (rand.status != SolveStatus::converged)
        throw std::runtime_error("randomized transplant solve failed: " + rand.diagnostic);
    rep.randomized_lambda_at_S = rand.policy.mix[0];
    rep.randomized_values = rand.value.v;
    rep.randomized_inner_gap = rand.inner_gap;
    return rep;
}

}  // namespace riskmdp::examples
