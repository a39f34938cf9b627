/*
   Copyright 2026 The reactfront Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "reactfront/error.hpp"
#include "reactfront/model.hpp"

// Scenario files are JSON documents. Object keys are emitted in sorted order
// (nlohmann's default std::map storage), which makes the serialized form
// canonical: parse(to_json(s)) re-serializes to the same bytes.
//
//   {
//     "a0": 0.0, "alpha": 0.5, "horizon": 2.0,
//     "drift":      {"kind": "affine",   "params": [0.5, -0.5], "modulation": {"eps": 0, "omega": 0}},
//     "volatility": {"kind": "constant", "params": [1.0]},
//     "reactivity": {"kind": "logistic", "params": [0.2, 1.8, 20, 0.1]},
//     "kernel":     {"kind": "triangular", "duration": 1.0, "params": [1.0, 0.0]},
//     "initial":    {"kind": "truncated-gaussian", "params": [1.0, 0.5]}
//   }
//
// Kernel params: constant takes none, triangular takes [height, peak],
// piecewise-linear takes "nodes": [[s, value], ...] instead.

namespace reactfront {

using json = nlohmann::json;

namespace detail {

inline void require_keys(const json& j, const std::string& where, std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    std::set<std::string> allowed;
    for (const char* k : required) {
        allowed.insert(k);
        if (!j.contains(k)) throw ValidationError(where + ": missing key '" + k + "'");
    }
    for (const char* k : optional) allowed.insert(k);
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) throw ValidationError(where + ": unknown key '" + item.key() + "'");
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(number(v, where));
    return out;
}

inline std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) throw ValidationError(where + ": expected a string");
    return j.get<std::string>();
}

} // namespace detail

inline json to_json(const CoefficientFamily& f) {
    return {{"kind", CoefficientFamily::kind_name(f.kind())},
            {"params", f.params()},
            {"modulation", {{"eps", f.modulation().eps}, {"omega", f.modulation().omega}}}};
}

inline CoefficientFamily family_from_json(const json& j, const std::string& where) {
    detail::require_keys(j, where, {"kind", "params"}, {"modulation"});
    Modulation mod;
    if (j.contains("modulation")) {
        const json& m = j.at("modulation");
        detail::require_keys(m, where + ".modulation", {"eps", "omega"});
        mod.eps = detail::number(m.at("eps"), where + ".modulation.eps");
        mod.omega = detail::number(m.at("omega"), where + ".modulation.omega");
    }
    return {CoefficientFamily::kind_from(detail::text(j.at("kind"), where + ".kind")),
            detail::numbers(j.at("params"), where + ".params"), mod};
}

inline json to_json(const KernelSpec& k) {
    json nodes = json::array();
    if (k.kind() == KernelKind::piecewise_linear)
        for (const auto& n : k.raw_nodes()) nodes.push_back({n.s, n.value});
    return {{"kind", KernelSpec::kind_name(k.kind())},
            {"duration", k.duration()},
            {"params", k.params()},
            {"nodes", nodes}};
}

inline KernelSpec kernel_from_json(const json& j) {
    detail::require_keys(j, "kernel", {"kind"}, {"duration", "params", "nodes"});
    const std::string kind = detail::text(j.at("kind"), "kernel.kind");
    const std::vector<double> params =
        j.contains("params") ? detail::numbers(j.at("params"), "kernel.params") : std::vector<double>{};
    auto duration = [&] {
        if (!j.contains("duration")) throw ValidationError("kernel: missing key 'duration'");
        return detail::number(j.at("duration"), "kernel.duration");
    };
    if (kind == "constant") {
        if (!params.empty()) throw ValidationError("kernel: constant takes no params");
        return KernelSpec::constant(duration());
    }
    if (kind == "triangular") {
        if (params.size() > 2) throw ValidationError("kernel: triangular takes [height, peak]");
        return KernelSpec::triangular(duration(), params.size() > 0 ? params[0] : 1.0,
                                      params.size() > 1 ? params[1] : 0.0);
    }
    if (kind == "piecewise-linear") {
        if (!j.contains("nodes")) throw ValidationError("kernel: piecewise-linear needs 'nodes'");
        std::vector<KernelNode> nodes;
        for (const auto& n : j.at("nodes")) {
            const auto v = detail::numbers(n, "kernel.nodes");
            if (v.size() != 2) throw ValidationError("kernel: each node is [s, value]");
            nodes.push_back({v[0], v[1]});
        }
        KernelSpec k = KernelSpec::piecewise_linear(std::move(nodes));
        if (j.contains("duration") && duration() != k.duration())
            throw ValidationError("kernel: duration disagrees with the last node");
        return k;
    }
    throw ValidationError("unknown kernel kind '" + kind + "'");
}

inline json to_json(const InitialDistribution& d) {
    return {{"kind", InitialDistribution::kind_name(d.kind())}, {"params", d.params()}};
}

inline InitialDistribution initial_from_json(const json& j) {
    detail::require_keys(j, "initial", {"kind", "params"});
    return {InitialDistribution::kind_from(detail::text(j.at("kind"), "initial.kind")),
            detail::numbers(j.at("params"), "initial.params")};
}

inline json to_json(const ScenarioSpec& s) {
    return {{"a0", s.a0},
            {"alpha", s.alpha},
            {"horizon", s.horizon},
            {"drift", to_json(s.drift)},
            {"volatility", to_json(s.volatility)},
            {"reactivity", to_json(s.reactivity)},
            {"kernel", to_json(s.kernel)},
            {"initial", to_json(s.initial)}};
}

inline ScenarioSpec scenario_from_json(const json& j) {
    detail::require_keys(j, "scenario",
                         {"a0", "alpha", "horizon", "drift", "volatility", "reactivity", "kernel", "initial"});
    ScenarioSpec s;
    s.a0 = detail::number(j.at("a0"), "a0");
    s.alpha = detail::number(j.at("alpha"), "alpha");
    s.horizon = detail::number(j.at("horizon"), "horizon");
    s.drift = family_from_json(j.at("drift"), "drift");
    s.volatility = family_from_json(j.at("volatility"), "volatility");
    s.reactivity = family_from_json(j.at("reactivity"), "reactivity");
    s.kernel = kernel_from_json(j.at("kernel"));
    s.initial = initial_from_json(j.at("initial"));
    return s;
}

/// Canonical text form: two-space indent, sorted keys, trailing newline.
inline std::string serialize_scenario(const ScenarioSpec& s) { return to_json(s).dump(2) + "\n"; }

inline ScenarioSpec parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("scenario: malformed JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

inline ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

} // namespace reactfront
