#include "riskmdp/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace riskmdp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("model file: " + what);
}

numvec parse_param(const json& value, const TransientMdp& model, const char* name) {
    if (value.is_number()) return {value.get<double>()};
    if (value.is_object()) {
        numvec per_state(model.num_states(), 0.0);
        std::vector<bool> seen(model.num_states(), false);
        for (auto it = value.begin(); it != value.end(); ++it) {
            const int x = model.state_index(it.key());
            per_state[x] = it.value().get<double>();
            seen[x] = true;
        }
        for (int x = 0; x < model.num_states(); ++x)
            if (!seen[x]) fail(std::string(name) + " map is missing state '" + model.states[x] + "'");
        return per_state;
    }
    fail(std::string(name) + " must be a number or a state map");
}

}  // namespace

ModelFile parse_model_text(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("not valid JSON: ") + e.what());
    }

    ModelFile out;
    TransientMdp& m = out.model;

    try {
        if (!doc.contains("states") || !doc["states"].is_array()) fail("'states' array required");
        for (const auto& s : doc["states"]) m.states.push_back(s.get<std::string>());
        if (!doc.contains("absorbing")) fail("'absorbing' state name required");
        m.absorbing = m.state_index(doc["absorbing"].get<std::string>());

        const int n = m.num_states();
        m.controls.assign(n, {});
        if (!doc.contains("controls") || !doc["controls"].is_object())
            fail("'controls' map required");
        for (auto it = doc["controls"].begin(); it != doc["controls"].end(); ++it) {
            const int x = m.state_index(it.key());
            for (const auto& u : it.value()) m.controls[x].push_back(u.get<std::string>());
        }
        for (int x = 0; x < n; ++x)
            if (m.controls[x].empty())
                fail("state '" + m.states[x] + "' has no controls");

        m.kernel.assign(n, {});
        m.cost.assign(n, {});
        for (int x = 0; x < n; ++x) {
            m.kernel[x].assign(m.num_controls(x), numvec(n, 0.0));
            m.cost[x].assign(m.num_controls(x), numvec(n, 0.0));
        }

        if (!doc.contains("transitions") || !doc["transitions"].is_array())
            fail("'transitions' array required");
        for (const auto& t : doc["transitions"]) {
            const int x = m.state_index(t.at("x").get<std::string>());
            const int u = m.control_index(x, t.at("u").get<std::string>());
            const int y = m.state_index(t.at("y").get<std::string>());
            m.kernel[x][u][y] += t.at("p").get<double>();
        }
        if (doc.contains("costs")) {
            for (const auto& t : doc["costs"]) {
                const int x = m.state_index(t.at("x").get<std::string>());
                const int u = m.control_index(x, t.at("u").get<std::string>());
                const int y = m.state_index(t.at("y").get<std::string>());
                m.cost[x][u][y] = t.at("c").get<double>();
            }
        }

        if (doc.contains("weight")) {
            WeightFunction w;
            w.w.assign(n, 0.0);
            for (auto it = doc["weight"].begin(); it != doc["weight"].end(); ++it)
                w.w[m.state_index(it.key())] = it.value().get<double>();
            w.w[m.absorbing] = 0.0;
            out.weight = std::move(w);
        }

        RiskSpec risk = RiskSpec::expectation();
        if (doc.contains("risk")) {
            const json& r = doc["risk"];
            const std::string family = r.at("family").get<std::string>();
            if (family == "expectation") {
                risk = RiskSpec::expectation();
            } else if (family == "semideviation" || family == "mean-semideviation") {
                risk = RiskSpec::semideviation(parse_param(r.at("kappa"), m, "kappa"));
            } else if (family == "avar") {
                risk = RiskSpec::avar(parse_param(r.at("alpha"), m, "alpha"));
            } else {
                fail("unknown risk family '" + family + "'");
            }
        }
        out.risk = risk;
    } catch (const json::exception& e) {
        fail(std::string("schema violation: ") + e.what());
    }

    return out;
}

ModelFile load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_text(buf.str());
}

RiskSpec parse_risk_string(const std::string& text) {
    if (text == "expectation") return RiskSpec::expectation();
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const std::string head = text.substr(0, colon);
        const std::string tail = text.substr(colon + 1);
        try {
            const double value = std::stod(tail);
            if (head == "semidev") return RiskSpec::semideviation(value);
            if (head == "avar") return RiskSpec::avar(value);
        } catch (const std::exception&) {
            // fall through to the error below
        }
    }
    throw std::invalid_argument(
        "unrecognized risk spec '" + text + "' (expected expectation, semidev:K, or avar:A)");
}

}  // namespace riskmdp
