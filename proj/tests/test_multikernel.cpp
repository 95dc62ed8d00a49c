#include <doctest.h>

#include <stdexcept>

#include <random>

#include "riskmdp/multikernel.hpp"
#include "test_helpers.hpp"

using namespace riskmdp;
using riskmdp::testing::two_state_chain;

namespace {

const Policy kChainPolicy = Policy::deterministic({0, 0});

}  // namespace

TEST_CASE("robust step on the chain maximizes over the envelope interval") {
    const TransientMdp m = two_state_chain();
    const WeightFunction w = WeightFunction::ones(m);

    SUBCASE("avar 0.75 reaches 2/3") {
        const auto res =
            robust_apply(m, RiskSpec::avar(0.75), kChainPolicy, ValueFunction(2), w);
        CHECK(res.value[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(res.value[1] == 0.0);
        CHECK(res.selector.rows[0][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("expectation reproduces the plain kernel application") {
        const auto res =
            robust_apply(m, RiskSpec::expectation(), kChainPolicy, ValueFunction(2), w);
        CHECK(res.value[0] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(res.selector.rows[0][0] == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("zero weight and zero value stay zero") {
        WeightFunction zero = w;
        zero.w[0] = 1.0;  // weights must stay >= 1; emulate w = 0 via v = -w
        ValueFunction v(2);
        v[0] = -1.0;
        const auto res = robust_apply(m, RiskSpec::avar(0.75), kChainPolicy, v, zero);
        CHECK(res.value[0] == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("robust step is monotone and selector rows attain the value") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        const WeightFunction w = WeightFunction::ones(m);
        const RiskSpec spec = riskmdp::testing::random_spec(rng);
        std::vector<int> choice(m.num_states(), 0);
        const Policy pi = Policy::deterministic(choice);

        ValueFunction v(m.num_states()), vbig(m.num_states());
        std::uniform_real_distribution<double> val(0.0, 3.0);
        for (int x = 0; x < m.num_states(); ++x) {
            if (x == m.absorbing) continue;
            v[x] = val(rng);
            vbig[x] = v[x] + val(rng);
        }

        const auto lo = robust_apply(m, spec, pi, v, w);
        const auto hi = robust_apply(m, spec, pi, vbig, w);
        for (int x = 0; x < m.num_states(); ++x) CHECK(lo.value[x] <= hi.value[x] + 1e-12);

        // <wbar + v, selector row> equals the reported value
        for (int i = 0; i < m.num_effective(); ++i) {
            const int x = m.state_of_effective(i);
            double inner = 0.0;
            for (int j = 0; j < m.num_effective(); ++j) {
                const int y = m.state_of_effective(j);
                inner += (w[y] + v[y]) * lo.selector.rows[i][j];
            }
            CHECK(inner == doctest::Approx(lo.value[x]).epsilon(1e-10));
        }
    }
}

TEST_CASE("chain transience across avar levels") {
    const TransientMdp m = two_state_chain();
    const WeightFunction w = WeightFunction::ones(m);

    SUBCASE("alpha below or at one half diverges") {
        for (double alpha : {0.3, 0.4, 0.5}) {
            const auto rep = check_risk_transient(m, RiskSpec::avar(alpha), kChainPolicy, w);
            CHECK(rep.verdict == TransienceVerdict::non_transient);
            CHECK(rep.divergence_detected_at.has_value());
        }
    }
    SUBCASE("alpha 0.75 converges with partial-sum bound 2") {
        const auto rep = check_risk_transient(m, RiskSpec::avar(0.75), kChainPolicy, w);
        CHECK(rep.verdict == TransienceVerdict::transient);
        // geometric series over the interval maximum 2/3
        CHECK(rep.bound_K == doctest::Approx(2.0).epsilon(1e-8));
    }
    SUBCASE("alpha 1.0 is the risk-neutral endpoint") {
        const auto rep = check_risk_transient(m, RiskSpec::avar(1.0), kChainPolicy, w);
        CHECK(rep.verdict == TransienceVerdict::transient);
        CHECK(rep.bound_K == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("semideviation is transient for every kappa") {
        for (double kappa : {0.0, 0.5, 1.0}) {
            const auto rep =
                check_risk_transient(m, RiskSpec::semideviation(kappa), kChainPolicy, w);
            CHECK(rep.verdict == TransienceVerdict::transient);
        }
    }
    SUBCASE("expectation matches the classical geometric sum") {
        const auto rep = check_risk_transient(m, RiskSpec::expectation(), kChainPolicy, w);
        CHECK(rep.verdict == TransienceVerdict::transient);
        // sum of (1/2)^j over j >= 1
        CHECK(rep.bound_K == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("selector entries respect the per-entry envelope mass bounds") {
    std::mt19937 rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const TransientMdp m =
            normalized_copy(riskmdp::testing::random_model(rng));
        const WeightFunction w = WeightFunction::ones(m);
        const RiskSpec spec = riskmdp::testing::random_spec(rng);
        const Policy pi = Policy::deterministic(std::vector<int>(m.num_states(), 0));

        ValueFunction v(m.num_states());
        for (int x = 0; x < m.num_states(); ++x)
            if (x != m.absorbing)
                v[x] = std::uniform_real_distribution<double>(0.0, 3.0)(rng);

        const auto res = robust_apply(m, spec, pi, v, w);
        for (int i = 0; i < m.num_effective(); ++i) {
            const int x = m.state_of_effective(i);
            const numvec& row = m.kernel[x][pi.choice[x]];
            for (int j = 0; j < m.num_effective(); ++j) {
                const int y = m.state_of_effective(j);
                const std::vector<int> target = {y};
                const auto [lo, hi] = envelope_mass_bounds(spec, x, row, target);
                CHECK(res.selector.rows[i][j] >= lo - 1e-10);
                CHECK(res.selector.rows[i][j] <= hi + 1e-10);
            }
        }
    }
}

TEST_CASE("partial sums are nondecreasing under the robust iteration") {
    const TransientMdp m = two_state_chain();
    const WeightFunction w = WeightFunction::ones(m);
    const RiskSpec spec = RiskSpec::avar(0.75);

    ValueFunction d(2);
    double prev = 0.0;
    for (int k = 0; k < 30; ++k) {
        d = robust_apply(m, spec, kChainPolicy, d, w).value;
        CHECK(d[0] >= prev - 1e-14);
        prev = d[0];
    }
}

TEST_CASE("uniform check covers the worst control") {
    // Second control loops on the effective state forever; only the uniform
    // check sees it.
    TransientMdp m = two_state_chain();
    m.controls[0] = {"go", "loop"};
    m.kernel[0].push_back({1.0, 0.0});
    m.cost[0].push_back({1.0, 1.0});

    const WeightFunction w = WeightFunction::ones(m);
    const auto per_policy =
        check_risk_transient(m, RiskSpec::expectation(), kChainPolicy, w);
    CHECK(per_policy.verdict == TransienceVerdict::transient);

    const auto uniform = check_risk_transient_uniform(m, RiskSpec::expectation(), w);
    CHECK(uniform.verdict == TransienceVerdict::non_transient);
    CHECK(uniform.uniform);
}

TEST_CASE("slow geometric convergence still certified transient") {
    // Contraction 0.999999 would need ~2e7 iterations to converge at tol
    // 1e-10; the certificate must settle it within the budget.
    TransientMdp m = two_state_chain();
    m.kernel[0][0] = {0.999999, 0.000001};
    const auto rep = check_risk_transient(m, RiskSpec::expectation(), kChainPolicy,
                                          WeightFunction::ones(m));
    CHECK(rep.verdict == TransienceVerdict::transient);
    CHECK(rep.certified_early);
    CHECK(rep.bound_K >= 9.9e5);  // true partial-sum limit is ~1e6
    CHECK(std::isfinite(rep.bound_K));
}
