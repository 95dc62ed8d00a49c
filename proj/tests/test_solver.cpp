#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "riskmdp/solver.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace riskmdp;
using riskmdp::testing::brute_force_finite_horizon;
using riskmdp::testing::linear_system_policy_value;
using riskmdp::testing::two_state_chain;

namespace {

const Policy kChainPolicy = Policy::deterministic({0, 0});

}  // namespace

TEST_CASE("one-step nested risk of the chain is the deterministic cost") {
    const TransientMdp m = two_state_chain();
    for (const RiskSpec& spec :
         {RiskSpec::expectation(), RiskSpec::semideviation(1.0), RiskSpec::avar(0.75)}) {
        const ValueFunction v =
            evaluate_nested_risk(m, spec, kChainPolicy, 1, ValueFunction(2));
        CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("long-horizon nested risk approaches the closed form") {
    const TransientMdp m = two_state_chain();
    const ValueFunction v =
        evaluate_nested_risk(m, RiskSpec::avar(0.75), kChainPolicy, 200, ValueFunction(2));
    CHECK(v[0] == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("expectation nested risk equals the matrix recursion") {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        const Policy pi = Policy::deterministic(std::vector<int>(m.num_states(), 0));
        const int horizon = 4;
        const ValueFunction got =
            evaluate_nested_risk(m, RiskSpec::expectation(), pi, horizon, ValueFunction(m.num_states()));

        // independent dense matrix recursion v <- c_pi + Qeff v
        numvec v(m.num_states(), 0.0);
        for (int t = 0; t < horizon; ++t) {
            numvec next(m.num_states(), 0.0);
            for (int x = 0; x < m.num_states(); ++x) {
                if (x == m.absorbing) continue;
                double acc = 0.0;
                for (int y = 0; y < m.num_states(); ++y)
                    acc += m.kernel[x][0][y] * (m.cost[x][0][y] + v[y]);
                next[x] = acc;
            }
            v = next;
        }
        for (int x = 0; x < m.num_states(); ++x)
            CHECK(got[x] == doctest::Approx(v[x]).epsilon(1e-10));
    }
}

TEST_CASE("terminal value must vanish at the absorbing state") {
    const TransientMdp m = two_state_chain();
    ValueFunction terminal(2);
    terminal[1] = 1.0;
    CHECK_THROWS_AS(
        evaluate_nested_risk(m, RiskSpec::expectation(), kChainPolicy, 3, terminal),
        std::invalid_argument);
}

TEST_CASE("finite horizon picks the cheaper immediate-absorption control") {
    TransientMdp m;
    m.states = {"s", "A"};
    m.absorbing = 1;
    m.controls = {{"costly", "cheap"}, {"stay"}};
    m.kernel = {{{0.0, 1.0}, {0.0, 1.0}}, {{0.0, 1.0}}};
    m.cost = {{{0.0, 5.0}, {0.0, 3.0}}, {{0.0, 0.0}}};

    for (const RiskSpec& spec :
         {RiskSpec::expectation(), RiskSpec::semideviation(0.7), RiskSpec::avar(0.3)}) {
        const auto sol = solve_finite_horizon(m, spec, 3, ValueFunction(2));
        CHECK(sol.values.front()[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(sol.policies.front().choice[0] == 1);
    }
}

TEST_CASE("three-stage chain value under avar 0.75") {
    const TransientMdp m = two_state_chain();
    const auto sol = solve_finite_horizon(m, RiskSpec::avar(0.75), 3, ValueFunction(2));
    // hand recursion with worst-case effective mass 2/3
    CHECK(sol.values.front()[0] == doctest::Approx(19.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("stage values satisfy the backward optimality recursion") {
    std::mt19937 rng(17);
    const TransientMdp m = riskmdp::testing::random_model(rng);
    const RiskSpec spec = RiskSpec::semideviation(0.5);
    const int horizon = 4;
    const auto sol = solve_finite_horizon(m, spec, horizon, ValueFunction(m.num_states()));

    for (int t = 0; t < horizon; ++t) {
        const ValueFunction& next =
            t + 1 < horizon ? sol.values[t + 1] : ValueFunction(m.num_states());
        const auto [recomputed, pol] = apply_bellman_operator(m, spec, next);
        (void)pol;
        for (int x = 0; x < m.num_states(); ++x)
            CHECK(sol.values[t][x] == doctest::Approx(recomputed[x]).epsilon(1e-10));
    }
}

TEST_CASE("finite horizon equals brute-force policy enumeration") {
    std::mt19937 rng(19);
    for (int trial = 0; trial < 8; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        const RiskSpec spec = riskmdp::testing::random_spec(rng);
        const auto sol = solve_finite_horizon(m, spec, 3, ValueFunction(m.num_states()));
        const numvec oracle = brute_force_finite_horizon(m, spec, 3);
        for (int x = 0; x < m.num_states(); ++x)
            CHECK(sol.values.front()[x] == doctest::Approx(oracle[x]).epsilon(1e-9));
    }
}

TEST_CASE("stationary chain values match the closed forms") {
    const TransientMdp m = two_state_chain();

    SUBCASE("avar") {
        for (double alpha : {0.6, 0.75, 0.9}) {
            const auto sol =
                evaluate_stationary_policy(m, RiskSpec::avar(alpha), kChainPolicy);
            REQUIRE(sol.status == SolveStatus::converged);
            CHECK(sol.value[0] ==
                  doctest::Approx(2 * alpha / (2 * alpha - 1)).epsilon(1e-8));
            CHECK(sol.residual <= 1e-9);
        }
    }
    SUBCASE("semideviation") {
        for (double kappa : {0.0, 0.5, 1.0}) {
            const auto sol =
                evaluate_stationary_policy(m, RiskSpec::semideviation(kappa), kChainPolicy);
            REQUIRE(sol.status == SolveStatus::converged);
            CHECK(sol.value[0] == doctest::Approx(4.0 / (2.0 - kappa)).epsilon(1e-8));
        }
    }
    SUBCASE("expectation gives the mean absorption time") {
        const auto sol =
            evaluate_stationary_policy(m, RiskSpec::expectation(), kChainPolicy);
        REQUIRE(sol.status == SolveStatus::converged);
        CHECK(sol.value[0] == doctest::Approx(2.0).epsilon(1e-8));
    }
    SUBCASE("divergent composition is refused") {
        const auto sol =
            evaluate_stationary_policy(m, RiskSpec::avar(0.4), kChainPolicy);
        CHECK(sol.status == SolveStatus::diverged);
    }
}

TEST_CASE("dominated control disappears after one improvement step") {
    TransientMdp m = two_state_chain();
    m.controls[0] = {"bad", "good"};
    m.kernel[0].push_back(m.kernel[0][0]);
    m.cost[0].push_back({0.5, 0.5});  // strictly cheaper, same kernel

    long improvements = 0;
    SolveOptions opts;
    opts.on_iterate = [&](long, const ValueFunction&) { ++improvements; };
    const auto sol = policy_iteration(m, RiskSpec::semideviation(0.5),
                                      Policy::deterministic({0, 0}), opts);
    REQUIRE(sol.status == SolveStatus::converged);
    CHECK(sol.policy.choice[0] == 1);
    CHECK(improvements <= 2);  // evaluate bad, improve, confirm
}

TEST_CASE("policy iteration agrees with value iteration on random models") {
    std::mt19937 rng(29);
    const RiskSpec spec = RiskSpec::semideviation(0.5);
    for (int trial = 0; trial < 10; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        const auto pi_sol = policy_iteration(m, spec);
        const auto vi_sol = value_iteration(m, spec);
        REQUIRE(pi_sol.status == SolveStatus::converged);
        REQUIRE(vi_sol.status == SolveStatus::converged);
        for (int x = 0; x < m.num_states(); ++x)
            CHECK(pi_sol.value[x] == doctest::Approx(vi_sol.value[x]).epsilon(1e-8));
    }
}

TEST_CASE("expectation policy iteration matches the linear-system oracle") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        const auto sol = policy_iteration(m, RiskSpec::expectation());
        REQUIRE(sol.status == SolveStatus::converged);
        const numvec oracle = linear_system_policy_value(m, sol.policy);
        for (int x = 0; x < m.num_states(); ++x)
            CHECK(sol.value[x] == doctest::Approx(oracle[x]).epsilon(1e-7));

        // and the returned policy is greedy-stable under the oracle values
        ValueFunction ov{numvec(oracle)};
        const auto [bv, greedy] = apply_bellman_operator(m, RiskSpec::expectation(), ov);
        for (int x = 0; x < m.num_states(); ++x)
            CHECK(bv[x] >= ov[x] - 1e-7);
    }
}

TEST_CASE("policy-iteration values never increase across iterations") {
    std::mt19937 rng(37);
    const RiskSpec spec = RiskSpec::semideviation(0.5);
    for (int trial = 0; trial < 10; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        std::vector<numvec> iterates;
        SolveOptions opts;
        opts.on_iterate = [&](long, const ValueFunction& v) { iterates.push_back(v.v); };
        const auto sol = policy_iteration(m, spec, opts);
        REQUIRE(sol.status == SolveStatus::converged);
        for (std::size_t k = 1; k < iterates.size(); ++k)
            for (int x = 0; x < m.num_states(); ++x)
                CHECK(iterates[k][x] <= iterates[k - 1][x] + 1e-8);
    }
}

TEST_CASE("value iteration from zero increases under nonnegative costs") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        std::vector<numvec> iterates;
        SolveOptions opts;
        opts.on_iterate = [&](long, const ValueFunction& v) { iterates.push_back(v.v); };
        const auto sol = value_iteration(m, riskmdp::testing::random_transient_spec(rng), opts);
        REQUIRE(sol.status == SolveStatus::converged);
        for (std::size_t k = 1; k < iterates.size(); ++k)
            for (int x = 0; x < m.num_states(); ++x)
                CHECK(iterates[k][x] >= iterates[k - 1][x] - 1e-12);
    }
}

TEST_CASE("optimality operator never exceeds any policy operator") {
    std::mt19937 rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        const RiskSpec spec = riskmdp::testing::random_spec(rng);
        ValueFunction v(m.num_states());
        for (int x = 0; x < m.num_states(); ++x)
            if (x != m.absorbing) v[x] = std::uniform_real_distribution<double>(-2, 2)(rng);

        const auto [dv, pol] = apply_bellman_operator(m, spec, v);
        (void)pol;
        // try every single-control-change policy
        for (int x = 0; x < m.num_states(); ++x)
            for (int u = 0; u < m.num_controls(x); ++u) {
                std::vector<int> choice(m.num_states(), 0);
                choice[x] = u;
                const ValueFunction pv =
                    apply_policy_operator(m, spec, Policy::deterministic(choice), v);
                for (int y = 0; y < m.num_states(); ++y) CHECK(dv[y] <= pv[y] + 1e-12);
            }
    }
}

TEST_CASE("risk-averse value dominates the risk-neutral value") {
    std::mt19937 rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        const TransientMdp m = riskmdp::testing::random_model(rng);
        const auto neutral = value_iteration(m, RiskSpec::expectation());
        REQUIRE(neutral.status == SolveStatus::converged);
        for (const RiskSpec& spec :
             {RiskSpec::semideviation(0.8), RiskSpec::avar(0.85)}) {
            const auto averse = value_iteration(m, spec);
            REQUIRE(averse.status == SolveStatus::converged);
            for (int x = 0; x < m.num_states(); ++x)
                CHECK(averse.value[x] >= neutral.value[x] - 1e-9);
        }
    }
}

TEST_CASE("the infinite-horizon value forgets the terminal condition") {
    const TransientMdp m = two_state_chain();
    const RiskSpec spec = RiskSpec::avar(0.75);
    ValueFunction f7(2);
    f7[0] = 7.0;
    const ValueFunction a = evaluate_nested_risk(m, spec, kChainPolicy, 300, f7);
    const ValueFunction b = evaluate_nested_risk(m, spec, kChainPolicy, 300, ValueFunction(2));
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-9));
    CHECK(a[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("bellman residual is re-verified post hoc") {
    std::mt19937 rng(53);
    const TransientMdp m = riskmdp::testing::random_model(rng);
    const auto sol = value_iteration(m, RiskSpec::semideviation(0.5));
    REQUIRE(sol.status == SolveStatus::converged);
    const auto [check, pol] = apply_bellman_operator(m, RiskSpec::semideviation(0.5), sol.value);
    (void)pol;
    double residual = 0.0;
    for (int x = 0; x < m.num_states(); ++x)
        if (x != m.absorbing) residual = std::max(residual, std::abs(check[x] - sol.value[x]));
    CHECK(residual == doctest::Approx(sol.residual).epsilon(1e-12));
    CHECK(residual <= 1e-9);
}
