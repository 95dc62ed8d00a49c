#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskmdp/examples.hpp"
#include "riskmdp/model_io.hpp"
#include "riskmdp/multikernel.hpp"
#include "riskmdp/randomized.hpp"
#include "riskmdp/solver.hpp"

namespace {

using nlohmann::json;
using namespace riskmdp;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitDivergence = 3;

std::ostream& out9() {
    std::cout << std::setprecision(9) << std::showpoint;
    return std::cout;
}

void print_values(const TransientMdp& model, const numvec& values) {
    for (int x = 0; x < model.num_states(); ++x)
        out9() << "  " << model.states[x] << " = " << values[x] << "\n";
}

json values_json(const TransientMdp& model, const numvec& values) {
    json j = json::object();
    for (int x = 0; x < model.num_states(); ++x) j[model.states[x]] = values[x];
    return j;
}

json policy_json(const TransientMdp& model, const Policy& policy) {
    json j = json::object();
    if (policy.kind == Policy::Kind::deterministic) {
        for (int x = 0; x < model.num_states(); ++x)
            j[model.states[x]] = model.controls[x][policy.choice[x]];
    } else {
        for (int x = 0; x < model.num_states(); ++x) {
            json mix = json::object();
            for (int u = 0; u < model.num_controls(x); ++u)
                mix[model.controls[x][u]] = policy.mix[x][u];
            j[model.states[x]] = mix;
        }
    }
    return j;
}

void write_report(const std::string& path, const json& report) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write report to '" + path + "'");
    out << report.dump(2) << "\n";
}

Policy load_policy_file(const TransientMdp& model, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read policy file '" + path + "'");
    json doc = json::parse(in);
    std::vector<int> choice(model.num_states(), 0);
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const int x = model.state_index(it.key());
        choice[x] = model.control_index(x, it.value().get<std::string>());
    }
    return Policy::deterministic(std::move(choice));
}

WeightFunction load_weight_arg(const TransientMdp& model, const std::string& arg) {
    if (arg == "default") return WeightFunction::ones(model);
    std::ifstream in(arg);
    if (!in) throw std::invalid_argument("cannot read weight file '" + arg + "'");
    json doc = json::parse(in);
    WeightFunction w;
    w.w.assign(model.num_states(), 1.0);
    for (auto it = doc.begin(); it != doc.end(); ++it)
        w.w[model.state_index(it.key())] = it.value().get<double>();
    w.w[model.absorbing] = 0.0;
    return w;
}

int finish_solve(const TransientMdp& model, const InfiniteHorizonSolution& sol,
                 const std::string& method, const std::string& out_path) {
    if (sol.status == SolveStatus::diverged) {
        std::cerr << "error: solver diverged (" << sol.diagnostic << ")\n";
        return kExitDivergence;
    }
    if (sol.status == SolveStatus::inconclusive) {
        std::cerr << "inconclusive: " << sol.diagnostic << "\n";
        return kExitInconclusive;
    }
    std::cout << "method: " << method << "\n";
    std::cout << "values:\n";
    print_values(model, sol.value.v);
    std::cout << "policy:\n";
    for (int x = 0; x < model.num_states(); ++x)
        std::cout << "  " << model.states[x] << " -> "
                  << model.controls[x][sol.policy.choice[x]] << "\n";
    out9() << "iterations: " << sol.iterations << "\nresidual: " << sol.residual << "\n";
    if (!out_path.empty()) {
        json report{{"method", method},
                    {"values", values_json(model, sol.value.v)},
                    {"policy", policy_json(model, sol.policy)},
                    {"iterations", sol.iterations},
                    {"residual", sol.residual}};
        write_report(out_path, report);
    }
    return kExitOk;
}

int run_solve(const std::string& model_path, const std::string& method, double tol,
              long max_iter, bool assume_transient, const std::string& out_path) {
    ModelFile file = load_model_file(model_path);
    require_valid(file.model);
    const TransientMdp model = normalized_copy(file.model);
    WeightFunction weight = file.weight ? *file.weight : WeightFunction::ones(model);
    require_valid_weight(model, weight);

    SolveOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    opts.assume_transient = assume_transient;
    opts.weight = &weight;

    if (method.rfind("finite:", 0) == 0) {
        const int horizon = std::stoi(method.substr(7));
        FiniteHorizonSolution sol = solve_finite_horizon(model, file.risk, horizon,
                                                         ValueFunction(model.num_states()));
        std::cout << "method: " << method << "\nfirst-stage values:\n";
        print_values(model, sol.values.front().v);
        std::cout << "first-stage policy:\n";
        for (int x = 0; x < model.num_states(); ++x)
            std::cout << "  " << model.states[x] << " -> "
                      << model.controls[x][sol.policies.front().choice[x]] << "\n";
        if (!out_path.empty()) {
            json report{{"method", method},
                        {"values", values_json(model, sol.values.front().v)},
                        {"policy", policy_json(model, sol.policies.front())},
                        {"iterations", horizon},
                        {"residual", 0.0}};
            write_report(out_path, report);
        }
        return kExitOk;
    }
    if (method == "policy-iter")
        return finish_solve(model, policy_iteration(model, file.risk, opts), method, out_path);
    if (method == "value-iter")
        return finish_solve(model, value_iteration(model, file.risk, opts), method, out_path);
    if (method == "randomized") {
        RandomizedOptions ropts;
        ropts.tol = tol;
        ropts.max_iter = max_iter;
        ropts.assume_transient = assume_transient;
        RandomizedSolution sol = randomized_bellman_solve(model, file.risk, ropts);
        if (sol.status == SolveStatus::diverged) {
            std::cerr << "error: solver diverged (" << sol.diagnostic << ")\n";
            return kExitDivergence;
        }
        if (sol.status == SolveStatus::inconclusive) {
            std::cerr << "inconclusive: " << sol.diagnostic << "\n";
            return kExitInconclusive;
        }
        std::cout << "method: randomized\nvalues:\n";
        print_values(model, sol.value.v);
        std::cout << "policy (distributions):\n";
        for (int x = 0; x < model.num_states(); ++x) {
            std::cout << "  " << model.states[x] << " ->";
            for (int u = 0; u < model.num_controls(x); ++u)
                out9() << " " << model.controls[x][u] << ":" << sol.policy.mix[x][u];
            std::cout << "\n";
        }
        out9() << "iterations: " << sol.iterations << "\nresidual: " << sol.residual
               << "\ninner-gap: " << sol.inner_gap << "\n";
        if (!out_path.empty()) {
            json report{{"method", method},
                        {"values", values_json(model, sol.value.v)},
                        {"policy", policy_json(model, sol.policy)},
                        {"iterations", sol.iterations},
                        {"residual", sol.residual},
                        {"inner_gap", sol.inner_gap}};
            write_report(out_path, report);
        }
        return kExitOk;
    }
    throw std::invalid_argument("unknown method '" + method +
                                "' (expected finite:T, policy-iter, value-iter, randomized)");
}

int run_check_transient(const std::string& model_path, const std::string& policy_path,
                        bool uniform, const std::string& weight_arg, double tol, long max_iter,
                        double blowup) {
    ModelFile file = load_model_file(model_path);
    require_valid(file.model);
    const TransientMdp model = normalized_copy(file.model);
    WeightFunction weight =
        weight_arg.empty() ? (file.weight ? *file.weight : WeightFunction::ones(model))
                           : load_weight_arg(model, weight_arg);

    TransienceOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    opts.blowup_threshold = blowup;

    TransienceReport rep;
    if (uniform) {
        rep = check_risk_transient_uniform(model, file.risk, weight, opts);
    } else {
        const Policy policy = load_policy_file(model, policy_path);
        rep = check_risk_transient(model, file.risk, policy, weight, opts);
    }

    switch (rep.verdict) {
        case TransienceVerdict::transient:
            out9() << "transient, K <= " << rep.bound_K << " (" << rep.detail << ", "
                   << rep.iterations << " iterations)\n";
            return kExitOk;
        case TransienceVerdict::non_transient:
            out9() << "non-transient (" << rep.detail << ", detected at iteration "
                   << *rep.divergence_detected_at << ")\n";
            return kExitDivergence;
        case TransienceVerdict::inconclusive:
            out9() << "inconclusive (" << rep.detail << ", " << rep.iterations
                   << " iterations, partial-sum norm " << rep.partial_sum_norm << ")\n";
            return kExitInconclusive;
    }
    return kExitValidation;
}

numvec parse_pmf(const std::string& text) {
    numvec pmf;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) pmf.push_back(std::stod(item));
    return pmf;
}

int run_asset(const std::string& pmf_text, double c0, const std::string& risk_text,
              const std::string& out_path) {
    examples::AssetSellingSpec spec;
    spec.offer_pmf = parse_pmf(pmf_text);
    spec.waiting_cost = c0;
    spec.risk = parse_risk_string(risk_text);

    examples::AssetSellingResult res = examples::asset_threshold(spec);
    out9() << "risk: " << spec.risk.describe() << "\n"
           << "threshold: accept any best offer >= " << res.threshold << "\n";
    if (res.degenerate) std::cout << "note: no offer level satisfied the scan rule\n";
    std::cout << "value function v(x) = -max(x, x*):\n";
    for (std::size_t x = 0; x < res.value_fn.size(); ++x)
        out9() << "  x=" << x << " -> " << res.value_fn[x] << "\n";
    out9() << "optimality-equation residual: " << res.fixed_point_residual << "\n";
    if (!out_path.empty()) {
        json report{{"threshold", res.threshold},
                    {"degenerate", res.degenerate},
                    {"values", res.value_fn},
                    {"residual", res.fixed_point_residual}};
        write_report(out_path, report);
    }
    return kExitOk;
}

int run_transplant(examples::TransplantSpec spec, bool randomized, const std::string& out_path) {
    examples::TransplantReport rep = examples::solve_transplant(spec);
    out9() << "kappa: " << spec.kappa << "\n"
           << "r(L): " << rep.r_L << " months\n"
           << "deterministic optimum at S: " << rep.deterministic_action_at_S << "\n";
    std::cout << "deterministic values:\n";
    out9() << "  S = " << rep.deterministic_values[0] << "\n  L = " << rep.deterministic_values[1]
           << "\n  D = " << rep.deterministic_values[2] << "\n";
    if (randomized) {
        out9() << "randomized optimum at S: W:" << rep.randomized_lambda_at_S[0]
               << " T:" << rep.randomized_lambda_at_S[1] << "\n"
               << "randomized value at S: " << rep.randomized_values[0] << "\n"
               << "inner optimality gap: " << rep.randomized_inner_gap << "\n";
    }
    if (!out_path.empty()) {
        json report{{"kappa", spec.kappa},
                    {"r_L", rep.r_L},
                    {"deterministic_action_at_S", rep.deterministic_action_at_S},
                    {"deterministic_values", rep.deterministic_values}};
        if (randomized) {
            report["randomized_lambda_at_S"] = rep.randomized_lambda_at_S;
            report["randomized_values"] = rep.randomized_values;
            report["inner_gap"] = rep.randomized_inner_gap;
        }
        write_report(out_path, report);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver for risk-averse undiscounted total-cost Markov decision processes"};
    app.require_subcommand(1);

    // solve
    auto* solve = app.add_subcommand("solve", "Solve a JSON model");
    std::string model_path, method = "value-iter", out_path;
    double tol = 1e-9;
    long max_iter = 100000;
    bool assume_transient = false;
    solve->add_option("--model", model_path, "Model JSON file")->required();
    solve->add_option("--method", method, "finite:T | policy-iter | value-iter | randomized");
    solve->add_option("--tol", tol, "Convergence tolerance");
    solve->add_option("--max-iter", max_iter, "Iteration budget");
    solve->add_flag("--assume-transient", assume_transient,
                    "Skip the uniform risk-transience precheck");
    solve->add_option("--out", out_path, "Write a JSON report");

    // check-transient
    auto* check = app.add_subcommand("check-transient", "Risk-transience check");
    std::string check_model, check_policy, check_weight;
    bool check_uniform = false;
    double check_tol = 1e-10, check_blowup = std::numeric_limits<double>::quiet_NaN();
    long check_max_iter = 100000;
    check->add_option("--model", check_model, "Model JSON file")->required();
    check->add_option("--policy", check_policy, "Policy JSON file (state -> control)");
    check->add_flag("--uniform", check_uniform, "Check uniformly over all policies");
    check->add_option("--weight", check_weight, "'default' or a weight JSON file");
    check->add_option("--tol", check_tol, "Convergence tolerance");
    check->add_option("--max-iter", check_max_iter, "Iteration budget");
    check->add_option("--blowup", check_blowup, "Blowup threshold");

    // example
    auto* example = app.add_subcommand("example", "Built-in example problems");
    example->require_subcommand(1);

    auto* asset = example->add_subcommand("asset-selling", "Offer-acceptance threshold");
    std::string pmf_text = "0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1";
    double c0 = 1.0;
    std::string risk_text = "expectation", asset_out;
    asset->add_option("--pmf", pmf_text, "Offer pmf over 0..S_max, comma separated");
    asset->add_option("--c0", c0, "Waiting cost");
    asset->add_option("--risk", risk_text, "expectation | semidev:K | avar:A");
    asset->add_option("--out", asset_out, "Write a JSON report");

    auto* transplant = example->add_subcommand("transplant", "Organ transplant timing");
    examples::TransplantSpec tspec;
    bool trans_randomized = false;
    std::string trans_out;
    transplant->add_option("--kappa", tspec.kappa, "Mean-semideviation level in [0,1]");
    transplant->add_flag("--randomized", trans_randomized, "Also solve for a randomized policy");
    transplant->add_option("--q-ss-w", tspec.q_SS_W, "P(stay in S | W)");
    transplant->add_option("--q-sd-w", tspec.q_SD_W, "P(death | W)");
    transplant->add_option("--q-sl-t", tspec.q_SL_T, "P(reach L | T)");
    transplant->add_option("--q-sd-t", tspec.q_SD_T, "P(death | T)");
    transplant->add_option("--n-survival", tspec.n_survival, "Survival chain length");
    transplant->add_option("--age-offset", tspec.age_offset_months, "First survival month");
    transplant->add_option("--max-lifetime", tspec.max_lifetime_months, "Maximum age in months");
    transplant->add_option("--w1", tspec.mix_w1, "Weibull mixture weight");
    transplant->add_option("--weibull-delta", tspec.weibull_delta, "Weibull scale");
    transplant->add_option("--weibull-beta", tspec.weibull_beta, "Weibull shape");
    transplant->add_option("--w2", tspec.mix_w2, "Lognormal mixture weight");
    transplant->add_option("--lognormal-m", tspec.lognormal_m, "Lognormal location");
    transplant->add_option("--lognormal-sigma", tspec.lognormal_sigma, "Lognormal scale");
    transplant->add_option("--w3", tspec.mix_w3, "Gompertz mixture weight");
    transplant->add_option("--gompertz-b", tspec.gompertz_b, "Gompertz b");
    transplant->add_option("--gompertz-alpha", tspec.gompertz_alpha, "Gompertz alpha");
    transplant->add_option("--out", trans_out, "Write a JSON report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed())
            return run_solve(model_path, method, tol, max_iter, assume_transient, out_path);
        if (check->parsed()) {
            if (!check_uniform && check_policy.empty()) {
                std::cerr << "error: check-transient needs --policy or --uniform\n";
                return kExitValidation;
            }
            return run_check_transient(check_model, check_policy, check_uniform, check_weight,
                                       check_tol, check_max_iter, check_blowup);
        }
        if (asset->parsed()) return run_asset(pmf_text, c0, risk_text, asset_out);
        if (transplant->parsed()) return run_transplant(tspec, trans_randomized, trans_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
