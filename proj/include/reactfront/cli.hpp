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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reactfront/error.hpp"
#include "reactfront/fbp.hpp"
#include "reactfront/io.hpp"
#include "reactfront/kernel.hpp"
#include "reactfront/metrics.hpp"
#include "reactfront/model.hpp"
#include "reactfront/particles.hpp"
#include "reactfront/scenario_io.hpp"
#include "reactfront/volterra.hpp"

namespace reactfront {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Table builders
// ---------------------------------------------------------------------------

inline std::string path_table(const PathBundle& p) {
    io::Table t({"t", "I", "A", "C", "Aprime"});
    for (std::size_t k = 0; k < p.size(); ++k) t.row({p.t[k], p.I[k], p.A[k], p.C[k], p.Aprime[k]});
    return t.str();
}

inline PathBundle path_from_table(const fs::path& file) {
    const auto [header, rows] = io::read_table(file);
    if (header != std::vector<std::string>{"t", "I", "A", "C", "Aprime"})
        throw ValidationError(file.string() + ": not a path table");
    if (rows.size() < 2) throw ValidationError(file.string() + ": path table needs at least two rows");
    PathBundle p;
    for (const auto& r : rows) p.push(r[0], r[1], r[2], r[3], r[4]);
    p.dt = p.t[1] - p.t[0];
    return p;
}

inline std::string snapshot_table(const std::vector<Snapshot>& snaps) {
    io::Table t({"t", "A", "n", "x"});
    for (const auto& s : snaps)
        for (double x : s.positions) t.row({s.t, s.A, static_cast<double>(s.n), x});
    return t.str();
}

/// Rebuilds snapshots from a table. Times with no alive particle are lost,
/// which is harmless: such a snapshot is the null measure.
inline std::vector<Snapshot> snapshots_from_table(const fs::path& file) {
    const auto [header, rows] = io::read_table(file);
    if (header != std::vector<std::string>{"t", "A", "n", "x"}) throw ValidationError(file.string() + ": not a snapshot table");
    std::vector<Snapshot> out;
    for (const auto& r : rows) {
        if (out.empty() || out.back().t != r[0]) {
            out.emplace_back();
            out.back().t = r[0];
            out.back().A = r[1];
            out.back().n = static_cast<std::size_t>(r[2]);
        }
        out.back().positions.push_back(r[3]);
    }
    return out;
}

inline std::string diagnostics_table(const SimulationOutput& o) {
    std::vector<std::string> h{"t", "I", "mean_local_time", "compensator"};
    for (const auto& f : o.flux) {
        h.push_back("flux_" + format_double(f.delta));
        h.push_back("flux_plain_" + format_double(f.delta));
    }
    io::Table t(h);
    for (std::size_t k = 0; k < o.path.size(); ++k) {
        std::vector<double> r{o.path.t[k], o.path.I[k], o.mean_local_time[k], o.compensator[k]};
        for (const auto& f : o.flux) {
            r.push_back(f.with_gamma[k]);
            r.push_back(f.plain[k]);
        }
        t.row(r);
    }
    return t.str();
}

inline std::string particle_table(const SimulationOutput& o) {
    io::Table t({"particle", "x", "alive", "local_time", "kill_time"});
    for (std::size_t i = 0; i < o.n; ++i)
        t.row({static_cast<double>(i), o.positions[i], static_cast<double>(o.alive[i]), o.local_time[i],
               o.alive[i] ? -1.0 : o.kill_time[i]});
    return t.str();
}

inline constexpr std::size_t kRowsPerChunk = 50;

/// Density rows as "t,A,w_0,...": one file per kRowsPerChunk rows.
inline std::vector<std::pair<std::string, std::string>> density_chunks(const std::vector<double>& times,
                                                                       const std::vector<double>& fronts,
                                                                       const std::vector<std::vector<double>>& rows,
                                                                       const std::string& prefix) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.size());
    std::vector<std::string> h{"t", "A"};
    for (std::size_t j = 0; j < width; ++j) h.push_back(prefix + std::to_string(j));
    for (std::size_t c = 0; c * kRowsPerChunk < rows.size(); ++c) {
        io::Table t(h);
        for (std::size_t r = c * kRowsPerChunk; r < std::min(rows.size(), (c + 1) * kRowsPerChunk); ++r) {
            if (rows[r].size() != width) continue;
            std::vector<double> v{times[r], fronts[r]};
            v.insert(v.end(), rows[r].begin(), rows[r].end());
            t.row(v);
        }
        char name[32];
        std::snprintf(name, sizeof name, "density_%03zu.csv", c);
        out.emplace_back(name, t.str());
    }
    return out;
}

struct LoadedRows {
    std::vector<double> t, A;
    std::vector<std::vector<double>> rows;
};

inline LoadedRows density_from_dir(const fs::path& dir) {
    LoadedRows out;
    for (std::size_t c = 0;; ++c) {
        char name[32];
        std::snprintf(name, sizeof name, "density_%03zu.csv", c);
        if (!fs::exists(dir / name)) break;
        const auto [header, rows] = io::read_table(dir / name);
        for (const auto& r : rows) {
            out.t.push_back(r[0]);
            out.A.push_back(r[1]);
            out.rows.emplace_back(r.begin() + 2, r.end());
        }
    }
    if (out.rows.empty()) throw ValidationError("no density tables in " + dir.string());
    return out;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepParams {
    double dt = 1e-3;
    ReflectionScheme scheme = ReflectionScheme::bridge;
    SolverGrid grid;
    std::uint64_t seed = 1;
};

struct SweepCell {
    std::size_t n;
    std::uint64_t seed;
    double ks;
    double w1;
    double mass_gap;
    double sup_A;
    double sup_I;
    double martingale;
    SimulationOutput output;
};

struct SweepResult {
    DensityField reference;
    std::vector<SweepCell> cells;
    std::vector<std::size_t> n;
    std::vector<double> mean_ks, mean_w1, mean_sup_A, mean_sup_I, rms_martingale;
    std::optional<LogLogFit> ks_fit, A_fit, martingale_fit;
    std::string flag;  // why a fit is missing, if it is

    nlohmann::json report() const {
        nlohmann::json j;
        j["n"] = n;
        j["mean_ks_T"] = mean_ks;
        j["mean_w1_T"] = mean_w1;
        j["mean_sup_A"] = mean_sup_A;
        j["mean_sup_I"] = mean_sup_I;
        j["rms_martingale_T"] = rms_martingale;
        j["ks_fit"] = ks_fit ? to_json(*ks_fit) : nlohmann::json(nullptr);
        j["sup_A_fit"] = A_fit ? to_json(*A_fit) : nlohmann::json(nullptr);
        j["martingale_fit"] = martingale_fit ? to_json(*martingale_fit) : nlohmann::json(nullptr);
        j["rate_note"] = "reference slope -1/2 is a CLT heuristic, not a proven rate";
        if (!flag.empty()) j["flag"] = flag;
        nlohmann::json cells_j = nlohmann::json::array();
        for (const auto& c : cells)
            cells_j.push_back({{"n", c.n}, {"seed", c.seed}, {"ks_T", c.ks}, {"w1_T", c.w1}, {"mass_gap_T", c.mass_gap},
                               {"sup_A", c.sup_A}, {"sup_I", c.sup_I}, {"martingale_T", c.martingale}});
        j["cells"] = cells_j;
        return j;
    }
};

/// Solves the FBP once, then simulates every (n, seed) cell against it.
/// `keep_outputs` retains each cell's SimulationOutput (memory heavy).
inline SweepResult run_sweep(const ScenarioSpec& spec, const std::vector<std::size_t>& ns, std::size_t seeds,
                             const SweepParams& params, bool keep_outputs = false) {
    if (ns.empty() || seeds == 0) throw ValidationError("sweep: need at least one n and one seed");
    SweepResult res;
    SolverGrid grid = params.grid;
    grid.row_times.push_back(spec.horizon);
    res.reference = solve_fbp(spec, grid);
    const DensityField& ref = res.reference;
    const Measure ref_T = measure_of(ref, ref.rows.size() - 1);

    for (std::size_t n : ns) {
        std::vector<double> ks, w1, sA, sI, M;
        for (std::size_t s = 0; s < seeds; ++s) {
            SimulationConfig cfg;
            cfg.n = n;
            cfg.dt = params.dt;
            cfg.seed = params.seed + s;
            cfg.scheme = params.scheme;
            cfg.snapshot_times = {spec.horizon};
            SimulationOutput o;
            try {
                o = simulate(spec, cfg);
            } catch (const NumericalAbort& e) {
                throw NumericalAbort("sweep cell n=" + std::to_string(n) + " seed=" + std::to_string(cfg.seed) + ": " +
                                     e.what());
            }
            const Measure mc = measure_of(o.snapshots.back());
            SweepCell c{n, cfg.seed, ks_distance(mc, ref_T), 0.0, 0.0, 0.0, 0.0, o.martingale(), {}};
            if (mc.mass() > 0.0) {
                const auto w = wasserstein1(mc, ref_T);
                c.w1 = w.distance;
                c.mass_gap = w.mass_gap;
            }
            const auto pd = path_distance(o.path, ref.path);
            c.sup_A = pd.sup_A;
            c.sup_I = pd.sup_I;
            ks.push_back(c.ks);
            w1.push_back(c.w1);
            sA.push_back(c.sup_A);
            sI.push_back(c.sup_I);
            M.push_back(c.martingale);
            if (keep_outputs) c.output = std::move(o);
            res.cells.push_back(std::move(c));
        }
        auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return s / static_cast<double>(v.size());
        };
        res.n.push_back(n);
        res.mean_ks.push_back(mean(ks));
        res.mean_w1.push_back(mean(w1));
        res.mean_sup_A.push_back(mean(sA));
        res.mean_sup_I.push_back(mean(sI));
        res.rms_martingale.push_back(rms(M));
    }

    if (ns.size() < 3) {
        res.flag = "fewer than three values of n: no slope fitted";
    } else {
        const std::vector<double> x(ns.begin(), ns.end());
        auto fit = [&](const std::vector<double>& y) -> std::optional<LogLogFit> {
            if (std::any_of(y.begin(), y.end(), [](double v) { return !(v > 0.0); })) return std::nullopt;
            return convergence_fit(x, y);
        };
        res.ks_fit = fit(res.mean_ks);
        res.A_fit = fit(res.mean_sup_A);
        res.martingale_fit = fit(res.rms_martingale);
        if (!res.ks_fit || !res.A_fit || !res.martingale_fit) res.flag = "zero distances: slope undefined";
    }
    return res;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& s) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            if constexpr (std::is_integral_v<T>)
                out.push_back(static_cast<T>(std::stoull(item)));
            else
                out.push_back(static_cast<T>(std::stod(item)));
        } catch (const std::exception&) {
            throw ValidationError("cannot parse list item '" + item + "'");
        }
    }
    return out;
}

inline ReflectionScheme parse_scheme(const std::string& s) {
    if (s == "euler") return ReflectionScheme::euler;
    if (s == "bridge") return ReflectionScheme::bridge;
    throw ValidationError("unknown scheme '" + s + "'");
}

inline std::string scheme_name(ReflectionScheme s) { return s == ReflectionScheme::euler ? "euler" : "bridge"; }

/// Loads and validates a scenario; a failing validation is a ValidationError.
inline ScenarioSpec checked_scenario(const std::string& file, std::ostream& err) {
    ScenarioSpec spec = load_scenario(file);
    const ValidationReport rep = validate_scenario(spec);
    for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
    if (!rep.ok()) throw ValidationError("scenario fails validation: " + rep.failures());
    return spec;
}

inline void describe_scenario(io::RunDirectory& dir, const ScenarioSpec& spec) {
    const std::string text = serialize_scenario(spec);
    dir.write("scenario.json", text);
    dir.extra()["scenario_hash"] = io::sha256_hex(text);
}

inline nlohmann::json grid_json(const SolverGrid& g) {
    return {{"J", g.J}, {"dt_pde", g.dt}, {"ymax", g.ymax}, {"picard", g.picard}, {"warm_start_steps", g.warm_start_steps}};
}

inline std::vector<double> default_snapshots(double T) { return {0.25 * T, 0.5 * T, 0.75 * T, T}; }

inline void write_simulation(io::RunDirectory& dir, const SimulationOutput& o, const std::string& prefix = "") {
    dir.write(prefix + "path.csv", path_table(o.path));
    dir.write(prefix + "snapshots.csv", snapshot_table(o.snapshots));
    dir.write(prefix + "diagnostics.csv", diagnostics_table(o));
    io::Table kills({"particle", "tau"});
    for (std::size_t i = 0; i < o.n; ++i)
        if (!o.alive[i]) kills.row({static_cast<double>(i), o.kill_time[i]});
    dir.write(prefix + "kill_times.csv", kills.str());
}

inline void write_field(io::RunDirectory& dir, const DensityField& f) {
    for (const auto& [name, text] : density_chunks(f.row_t, f.row_A, f.rows, "w_")) dir.write(name, text);
    io::Table tr({"t", "w0", "Iprime", "gamma", "sigma2", "mass_residual"});
    for (std::size_t k = 0; k < f.trace.size(); ++k) {
        const auto b = boundary_trace(f, k);
        tr.row({f.path.t[k], b.w0, b.Iprime, f.gamma_used[k], f.sigma2_used[k],
                std::abs(f.path.I[k] + f.mass[k] - 1.0)});
    }
    dir.write("trace.csv", tr.str());
    dir.write("path.csv", path_table(f.path));
}

} // namespace detail

inline int cmd_simulate(const std::string& scenario, std::size_t n, double dt, std::uint64_t seed,
                        const std::string& out, const std::string& snaps, const std::string& scheme,
                        const std::string& deltas, const std::string& paths, const std::vector<std::string>& argv,
                        std::ostream& err) {
    const ScenarioSpec spec = detail::checked_scenario(scenario, err);
    SimulationConfig cfg;
    cfg.n = n;
    cfg.dt = dt;
    cfg.seed = seed;
    cfg.scheme = detail::parse_scheme(scheme);
    if (snaps.empty()) {
        // quarters of the horizon, moved onto the time grid
        for (double t : detail::default_snapshots(spec.horizon)) cfg.snapshot_times.push_back(std::round(t / dt) * dt);
    } else {
        cfg.snapshot_times = detail::parse_list<double>(snaps);
    }
    cfg.flux_deltas = detail::parse_list<double>(deltas);
    if (!paths.empty()) cfg.exogenous = path_from_table(paths);
    const SimulationOutput o = simulate(spec, cfg);

    io::RunDirectory dir(out, argv);
    detail::describe_scenario(dir, spec);
    detail::write_simulation(dir, o);
    dir.write("particles.csv", particle_table(o));
    auto& m = dir.extra();
    m["kind"] = "simulate";
    m["seeds"] = {seed};
    m["horizon"] = spec.horizon;
    m["grid"] = {{"n", n}, {"dt", dt}, {"scheme", scheme}, {"snapshot_times", cfg.snapshot_times},
                 {"flux_deltas", cfg.flux_deltas}, {"exogenous_paths", paths}};
    dir.finalize();
    return 0;
}

inline int cmd_solve(const std::string& scenario, const SolverGrid& grid, const std::string& out,
                     const std::vector<std::string>& argv, std::ostream& err) {
    const ScenarioSpec spec = detail::checked_scenario(scenario, err);
    SolverGrid g = grid;
    for (double t : detail::default_snapshots(spec.horizon)) g.row_times.push_back(t);
    const DensityField f = solve_fbp(spec, g);
    if (f.tail_mass > 1e-8) err << "warning: mass " << f.tail_mass << " near ymax; consider a larger domain\n";

    io::RunDirectory dir(out, argv);
    detail::describe_scenario(dir, spec);
    detail::write_field(dir, f);
    auto& m = dir.extra();
    m["kind"] = "solve";
    m["seeds"] = nlohmann::json::array();
    m["horizon"] = spec.horizon;
    m["grid"] = detail::grid_json(g);
    m["warm_start_t0"] = f.t0;
    m["clip_events"] = f.clip_events;
    m["min_density"] = f.min_value;
    m["tail_mass"] = f.tail_mass;
    m["projection_error"] = f.projection_error;
    dir.finalize();
    return 0;
}

inline VolterraGrid parse_volterra_grid(const std::string& s) {
    VolterraGrid g;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ValidationError("grid item '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        double v = 0.0;
        try {
            v = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ValidationError("grid item '" + item + "' has no numeric value");
        }
        if (key == "M") g.M = static_cast<std::size_t>(v);
        else if (key == "zmax") g.zmax = v;
        else if (key == "dt") g.dt = v;
        else if (key == "tol") g.tol = v;
        else if (key == "sweeps") g.max_sweeps = static_cast<int>(v);
        else throw ValidationError("unknown grid key '" + key + "'");
    }
    return g;
}

inline int cmd_volterra(const std::string& scenario, const std::string& paths, const std::string& grid_text,
                        const std::string& out, const std::vector<std::string>& argv, std::ostream& err) {
    const ScenarioSpec spec = detail::checked_scenario(scenario, err);
    const PathBundle path = path_from_table(paths);
    const VolterraGrid g = parse_volterra_grid(grid_text);
    const VolterraSolution s = solve_volterra(spec, path, g);

    io::RunDirectory dir(out, argv);
    detail::describe_scenario(dir, spec);
    std::vector<double> t, A;
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        if (s.p[k].empty()) continue;
        t.push_back(s.t[k]);
        A.push_back(s.A[k]);
        rows.push_back(s.p[k]);
    }
    for (const auto& [name, text] : density_chunks(t, A, rows, "p_")) dir.write(name, text);
    io::Table tr({"t", "p0", "loss_rate", "mass", "cumulative_loss"});
    const auto loss = s.cumulative_loss();
    for (std::size_t k = 0; k < s.t.size(); ++k)
        tr.row({s.t[k], s.p[k].empty() ? 0.0 : s.p[k][0], s.loss_rate[k], s.mass[k], loss[k]});
    dir.write("trace.csv", tr.str());
    auto& m = dir.extra();
    m["kind"] = "volterra";
    m["seeds"] = nlohmann::json::array();
    m["horizon"] = spec.horizon;
    m["grid"] = {{"M", g.M}, {"zmax", g.zmax}, {"dt", g.dt}, {"sigma0", s.sigma0}};
    m["paths_hash"] = io::sha256_hex(io::read_file(paths));
    m["max_sweeps_used"] = s.max_sweeps_used;
    dir.finalize();
    return 0;
}

inline int cmd_compare(const std::string& sim, const std::string& pde, const std::string& out,
                       const std::vector<std::string>& argv) {
    const auto ms = io::load_manifest(sim), mp = io::load_manifest(pde);
    if (ms.value("kind", "") != "simulate") throw ValidationError(sim + " is not a simulate run");
    if (mp.value("kind", "") != "solve") throw ValidationError(pde + " is not a solve run");
    const double Ts = ms.at("horizon").get<double>(), Tp = mp.at("horizon").get<double>();
    if (std::abs(Ts - Tp) > 1e-12) throw ValidationError("compare: horizons differ (" + format_double(Ts) + " vs " + format_double(Tp) + ")");

    const auto snaps = snapshots_from_table(fs::path(sim) / "snapshots.csv");
    const PathBundle ps = path_from_table(fs::path(sim) / "path.csv");
    const PathBundle pp = path_from_table(fs::path(pde) / "path.csv");
    const LoadedRows rows = density_from_dir(pde);
    const double dy = mp.at("grid").at("ymax").get<double>() / mp.at("grid").at("J").get<double>();

    nlohmann::json rep;
    nlohmann::json snaps_j = nlohmann::json::array();
    io::Table tab({"t", "ks", "w1", "mass_gap"});
    for (const auto& s : snaps) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < rows.t.size(); ++r)
            if (std::abs(rows.t[r] - s.t) < std::abs(rows.t[best] - s.t)) best = r;
        if (std::abs(rows.t[best] - s.t) > 1e-9 * std::max(1.0, s.t)) continue;
        const Measure a = measure_of(s), b = Measure::cells(rows.A[best], dy, rows.rows[best]);
        const double ks = ks_distance(a, b);
        W1Result w{0.0, std::abs(a.mass() - b.mass())};
        if (a.mass() > 0.0 && b.mass() > 0.0) w = wasserstein1(a, b);
        tab.row({s.t, ks, w.distance, w.mass_gap});
        snaps_j.push_back({{"t", s.t}, {"ks", ks}, {"w1", w.distance}, {"mass_gap", w.mass_gap}});
    }
    const auto pd = path_distance(ps, pp);
    rep["snapshots"] = snaps_j;
    rep["sup_A"] = pd.sup_A;
    rep["sup_I"] = pd.sup_I;
    rep["sim"] = sim;
    rep["pde"] = pde;

    io::RunDirectory dir(out, argv);
    dir.write("report.json", rep.dump(2) + "\n");
    dir.write("comparison.csv", tab.str());
    auto& m = dir.extra();
    m["kind"] = "compare";
    m["seeds"] = ms.value("seeds", nlohmann::json::array());
    m["horizon"] = Ts;
    m["inputs"] = {{"sim", ms.value("scenario_hash", "")}, {"pde", mp.value("scenario_hash", "")}};
    dir.finalize();
    return 0;
}

inline int cmd_sweep(const std::string& scenario, const std::string& nlist, std::size_t seeds, const SweepParams& params,
                     const std::string& out, const std::vector<std::string>& argv, std::ostream& err) {
    const ScenarioSpec spec = detail::checked_scenario(scenario, err);
    const auto ns = detail::parse_list<std::size_t>(nlist);
    const SweepResult res = run_sweep(spec, ns, seeds, params, true);

    io::RunDirectory dir(out, argv);
    detail::describe_scenario(dir, spec);
    dir.write("report.json", res.report().dump(2) + "\n");
    io::Table conv({"n", "mean_ks_T", "mean_w1_T", "mean_sup_A", "mean_sup_I", "rms_martingale_T"});
    for (std::size_t i = 0; i < res.n.size(); ++i)
        conv.row({static_cast<double>(res.n[i]), res.mean_ks[i], res.mean_w1[i], res.mean_sup_A[i], res.mean_sup_I[i],
                  res.rms_martingale[i]});
    dir.write("convergence.csv", conv.str());
    dir.write("fbp/path.csv", path_table(res.reference.path));
    for (const auto& [name, text] : density_chunks({res.reference.row_t.back()}, {res.reference.row_A.back()},
                                                   {res.reference.rows.back()}, "w_"))
        dir.write("fbp/" + name, text);
    for (const auto& c : res.cells) {
        const std::string sub = "cells/n" + std::to_string(c.n) + "_s" + std::to_string(c.seed) + "/";
        dir.write(sub + "path.csv", path_table(c.output.path));
        dir.write(sub + "snapshots.csv", snapshot_table(c.output.snapshots));
    }
    auto& m = dir.extra();
    m["kind"] = "sweep";
    std::vector<std::uint64_t> sl;
    for (std::size_t s = 0; s < seeds; ++s) sl.push_back(params.seed + s);
    m["seeds"] = sl;
    m["horizon"] = spec.horizon;
    m["grid"] = detail::grid_json(params.grid);
    m["grid"]["dt"] = params.dt;
    m["grid"]["scheme"] = detail::scheme_name(params.scheme);
    m["grid"]["n"] = ns;
    dir.finalize();
    return 0;
}

inline int cmd_report(const std::vector<std::string>& runs, const std::string& out, const std::vector<std::string>& argv) {
    if (runs.empty()) throw ValidationError("report: no run directories given");
    std::string index = "# reactfront runs\n\n| run | kind | scenario | manifest sha256 | files |\n|---|---|---|---|---|\n";
    for (const auto& r : runs) {
        const auto bad = io::verify_manifest(r);
        if (!bad.empty()) throw ValidationError("report: " + r + ": hash mismatch in " + bad.front());
        const auto m = io::load_manifest(r);
        index += "| " + r + " | " + m.value("kind", "?") + " | " + m.value("scenario_hash", "-").substr(0, 12) + " | " +
                 io::sha256_hex(io::read_file(fs::path(r) / "manifest.json")).substr(0, 12) + " | " +
                 std::to_string(m.at("files").size()) + " |\n";
    }
    io::RunDirectory dir(out, argv);
    dir.write("index.md", index);
    dir.extra()["kind"] = "report";
    dir.extra()["runs"] = runs;
    dir.finalize();
    return 0;
}

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 1 validation failure, 2 numerical abort, 3 I/O error.
inline int run(const std::vector<std::string>& args, std::ostream& err = std::cerr) {
    CLI::App app{"reactfront: reflected particles with reactive killing at a moving front"};
    app.require_subcommand(1);

    std::string scenario, out, snaps, scheme = "euler", deltas, paths, grid_text = "M=200,zmax=8,dt=0.01";
    std::size_t n = 1000, seeds = 20;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    SolverGrid grid;
    std::string sim, pde, nlist = "1000,4000,16000";
    std::vector<std::string> runs;

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo particle system");
    sim_cmd->add_option("--scenario", scenario)->required();
    sim_cmd->add_option("--n", n);
    sim_cmd->add_option("--dt", dt);
    sim_cmd->add_option("--seed", seed);
    sim_cmd->add_option("--out", out)->required();
    sim_cmd->add_option("--snapshots", snaps, "comma-separated snapshot times");
    sim_cmd->add_option("--scheme", scheme, "euler or bridge");
    sim_cmd->add_option("--deltas", deltas, "mollification widths for the flux diagnostic");
    sim_cmd->add_option("--paths", paths, "exogenous path table (decoupled particles)");

    auto* solve_cmd = app.add_subcommand("solve", "Free boundary problem, finite volumes");
    solve_cmd->add_option("--scenario", scenario)->required();
    solve_cmd->add_option("--J", grid.J);
    solve_cmd->add_option("--dt-pde", grid.dt);
    solve_cmd->add_option("--ymax", grid.ymax);
    solve_cmd->add_option("--picard", grid.picard);
    solve_cmd->add_option("--row-stride", grid.row_stride);
    solve_cmd->add_option("--out", out)->required();

    auto* vol_cmd = app.add_subcommand("volterra", "Volterra relation in the Lamperti frame");
    vol_cmd->add_option("--scenario", scenario)->required();
    vol_cmd->add_option("--paths", paths)->required();
    vol_cmd->add_option("--grid", grid_text, "M=<int>,zmax=<real>,dt=<real>,tol=<real>,sweeps=<int>");
    vol_cmd->add_option("--out", out)->required();

    auto* cmp_cmd = app.add_subcommand("compare", "Distances between a simulation and a solve");
    cmp_cmd->add_option("--sim", sim)->required();
    cmp_cmd->add_option("--pde", pde)->required();
    cmp_cmd->add_option("--out", out)->required();

    SweepParams sp;
    std::string sweep_scheme = "bridge";
    auto* sweep_cmd = app.add_subcommand("sweep", "Convergence sweep over n and seeds");
    sweep_cmd->add_option("--scenario", scenario)->required();
    sweep_cmd->add_option("--n", nlist);
    sweep_cmd->add_option("--seeds", seeds);
    sweep_cmd->add_option("--seed", sp.seed);
    sweep_cmd->add_option("--dt", sp.dt);
    sweep_cmd->add_option("--scheme", sweep_scheme);
    sweep_cmd->add_option("--J", sp.grid.J);
    sweep_cmd->add_option("--dt-pde", sp.grid.dt);
    sweep_cmd->add_option("--ymax", sp.grid.ymax);
    sweep_cmd->add_option("--out", out)->required();

    auto* rep_cmd = app.add_subcommand("report", "Validate run directories and index them");
    rep_cmd->add_option("--runs", runs)->required();
    rep_cmd->add_option("--out", out)->required();

    std::vector<std::string> argv_rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*sim_cmd) return cmd_simulate(scenario, n, dt, seed, out, snaps, scheme, deltas, paths, args, err);
        if (*solve_cmd) return cmd_solve(scenario, grid, out, args, err);
        if (*vol_cmd) return cmd_volterra(scenario, paths, grid_text, out, args, err);
        if (*cmp_cmd) return cmd_compare(sim, pde, out, args);
        if (*sweep_cmd) {
            sp.scheme = detail::parse_scheme(sweep_scheme);
            return cmd_sweep(scenario, nlist, seeds, sp, out, args, err);
        }
        if (*rep_cmd) return cmd_report(runs, out, args);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalAbort& e) {
        err << "numerical abort: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace reactfront
