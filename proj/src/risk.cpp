#include "riskmdp/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace riskmdp {

RiskSpec RiskSpec::expectation() { return RiskSpec{RiskFamily::expectation, {}, {}}; }

RiskSpec RiskSpec::semideviation(double kappa) {
    return RiskSpec{RiskFamily::mean_semideviation, numvec{kappa}, {}};
}

RiskSpec RiskSpec::semideviation(numvec per_state_kappa) {
    return RiskSpec{RiskFamily::mean_semideviation, std::move(per_state_kappa), {}};
}

RiskSpec RiskSpec::avar(double alpha) { return RiskSpec{RiskFamily::avar, {}, numvec{alpha}}; }

RiskSpec RiskSpec::avar(numvec per_state_alpha) {
    return RiskSpec{RiskFamily::avar, {}, std::move(per_state_alpha)};
}

double RiskSpec::kappa_at(int state) const {
    return kappa.size() == 1 ? kappa[0] : kappa.at(state);
}

double RiskSpec::alpha_at(int state) const {
    return alpha.size() == 1 ? alpha[0] : alpha.at(state);
}

void RiskSpec::require_valid(int num_states) const {
    auto check_len = [&](const numvec& p, const char* name) {
        if (p.size() != 1 && static_cast<int>(p.size()) != num_states) {
            std::ostringstream os;
            os << name << " must be a scalar or have one entry per state";
            throw std::invalid_argument(os.str());
        }
    };
    switch (family) {
        case RiskFamily::expectation:
            break;
        case RiskFamily::mean_semideviation:
            check_len(kappa, "kappa");
            for (double k : kappa)
                if (!(k >= 0.0 && k <= 1.0))
                    throw std::invalid_argument("kappa must lie in [0, 1]");
            break;
        case RiskFamily::avar:
            check_len(alpha, "alpha");
            // alpha = 1 is admitted as the risk-neutral endpoint, where the
            // envelope collapses to the base measure.
            for (double a : alpha)
                if (!(a > 0.0 && a <= 1.0))
                    throw std::invalid_argument("alpha must lie in (0, 1]");
            break;
    }
}

std::string RiskSpec::describe() const {
    std::ostringstream os;
    switch (family) {
        case RiskFamily::expectation:
            os << "expectation";
            break;
        case RiskFamily::mean_semideviation:
            os << "semidev:";
            if (kappa.size() == 1) os << kappa[0];
            else os << "<per-state>";
            break;
        case RiskFamily::avar:
            os << "avar:";
            if (alpha.size() == 1) os << alpha[0];
            else os << "<per-state>";
            break;
    }
    return os.str();
}

namespace {

void check_args(std::span<const double> phi, std::span<const double> m) {
    if (phi.size() != m.size())
        throw std::invalid_argument("phi and m must have the same length");
    double sum = 0.0;
    for (double p : m) {
        if (p < 0.0) throw std::invalid_argument("m has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("m is not a probability vector");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Support positions sorted by decreasing phi, ties by increasing index.
std::vector<int> descending_order(std::span<const double> phi) {
    std::vector<int> idx(phi.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return phi[a] > phi[b]; });
    return idx;
}

}  // namespace

namespace {

double checked_kappa(const RiskSpec& spec, int state) {
    const double kappa = spec.kappa_at(state);
    if (!(kappa >= 0.0 && kappa <= 1.0))
        throw std::invalid_argument("kappa must lie in [0, 1]");
    return kappa;
}

double checked_alpha(const RiskSpec& spec, int state) {
    const double alpha = spec.alpha_at(state);
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1]");
    return alpha;
}

}  // namespace

double evaluate_sigma(const RiskSpec& spec, int state, std::span<const double> phi,
                      std::span<const double> m) {
    check_args(phi, m);
    switch (spec.family) {
        case RiskFamily::expectation:
            return dot(phi, m);
        case RiskFamily::mean_semideviation: {
            const double mean = dot(phi, m);
            double semidev = 0.0;
            for (std::size_t j = 0; j < m.size(); ++j)
                semidev += m[j] * std::max(phi[j] - mean, 0.0);
            return mean + checked_kappa(spec, state) * semidev;
        }
        case RiskFamily::avar: {
            // Average of the worst alpha-fraction: fill mass from the top of
            // phi, fractional at the boundary atom.  Exact for finite support.
            const double alpha = checked_alpha(spec, state);
            double remaining = alpha;
            double acc = 0.0;
            for (int j : descending_order(phi)) {
                if (remaining <= 0.0) break;
                const double take = std::min(m[j], remaining);
                acc += take * phi[j];
                remaining -= take;
            }
            return acc / alpha;
        }
    }
    throw std::logic_error("unreachable");
}

RiskValue max_selector(const RiskSpec& spec, int state, std::span<const double> phi,
                       std::span<const double> m) {
    check_args(phi, m);
    RiskValue out;
    out.maximizer.assign(m.begin(), m.end());
    switch (spec.family) {
        case RiskFamily::expectation:
            break;
        case RiskFamily::mean_semideviation: {
            const double kappa = checked_kappa(spec, state);
            const double mean = dot(phi, m);
            numvec h(m.size(), 0.0);
            double hm = 0.0;
            for (std::size_t j = 0; j < m.size(); ++j) {
                if (phi[j] > mean) h[j] = kappa;
                hm += h[j] * m[j];
            }
            for (std::size_t j = 0; j < m.size(); ++j)
                out.maximizer[j] = m[j] * (1.0 + h[j] - hm);
            break;
        }
        case RiskFamily::avar: {
            const double alpha = checked_alpha(spec, state);
            std::fill(out.maximizer.begin(), out.maximizer.end(), 0.0);
            double remaining = 1.0;
            for (int j : descending_order(phi)) {
                if (remaining <= 0.0) break;
                const double take = std::min(m[j] / alpha, remaining);
                out.maximizer[j] = take;
                remaining -= take;
            }
            break;
        }
    }
    out.sigma = dot(phi, out.maximizer);
    return out;
}

std::pair<double, double> envelope_mass_bounds(const RiskSpec& spec, int state,
                                               std::span<const double> m,
                                               std::span<const int> target_positions) {
    numvec indicator(m.size(), 0.0);
    for (int j : target_positions) indicator.at(j) = 1.0;
    const double hi = evaluate_sigma(spec, state, indicator, m);
    for (double& x : indicator) x = -x;
    const double lo = -evaluate_sigma(spec, state, indicator, m);
    return {lo, hi};
}

}  // namespace riskmdp
