// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

// Command line front end. One JSON config drives every subcommand; flags and
// --set overrides layer on top, and the fully resolved config is echoed into
// a run manifest next to the outputs so any result can be reproduced from
// its own directory. All artifacts are plain CSV or JSON.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include <emtrace/baseline.hpp>
#include <emtrace/optimizer.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* tool_version = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config handling.
// ---------------------------------------------------------------------------

json default_config() {
    json c;
    c["scene"] = "";
    c["out_dir"] = "out";
    c["seed"] = 1;
    c["workers"] = 0;
    c["carrier"] = {{"f0", 3.5e9}};
    c["launch"] = {{"m_dim", 10000000.0}, {"rx_radius", 0.0},    {"rx_radius_floor", 0.1},
                   {"d_tr_max", 5},       {"max_diffractions", 2}, {"allow_mixed", false}};
    c["grid"] = {{"g0", 1.25}, {"g1", 10.0}, {"z_n", 1.5}};
    c["antenna"] = {{"z_b", 30.0},      {"m_ant", 8},  {"ula_spacing", 0.5},
                    {"ula_axis", json::array({0.0, 0.0, 1.0})}, {"m_p", 5},
                    {"g_r_db", 0.0},    {"re_z", 50.0}};
    c["agr"] = {{"delta_p_db", 5.0}};
    c["network"] = {{"sigma_n2_dbm", -95.0},
                    {"tau_e2", 0.1},
                    {"delta_rf", 0.045},
                    {"gamma_min_db", 5.0},
                    {"rho_cov", 0.99},
                    {"eirp_max_dbm", 81.18},
                    {"n_min", 18},
                    {"n_max", 45},
                    {"prf", json::array({json::array({18.0, 0.083}), json::array({45.0, 0.163})})}};
    c["mobility"] = {{"speed_kmh", 5.0},   {"t_step", 1.0},       {"t_avg", 360.0},
                     {"kappa_min", 2.0},   {"kappa_max", 20.0},   {"stop_prob", 0.02},
                     {"pause_median", 10.0}, {"pause_sigma", 0.8}, {"rho_entry", 0.1}};
    c["mc"] = {{"tol", 0.005}, {"min_runs", 30}, {"max_runs", 200000}, {"common_random", true}};
    c["nm"] = {{"n_s", 7}, {"d_max", 1.0}, {"max_iterations", 500}, {"tau_p", 1000.0}};
    c["trace"] = {{"tx", json::array({0.0, 0.0, 30.0})}, {"rx", json::array({10.0, 0.0, 1.5})}};
    c["map"] = {{"tx", json::array({0.0, 0.0, 30.0})}, {"uniform_spacing", 0.0}};
    c["mobility_run"] = {{"n_ue", 45}};
    // baseline.tx empty: fit transmitter defaults to the C1 centroid at z_b.
    c["baseline"] = {{"d0", 1.0}, {"samples", ""}, {"tx", json::array()}, {"with_optimize", true}};
    return c;
}

// Reject keys that the defaults do not know; typos fail loudly instead of
// silently running on defaults.
void check_keys(const json& defaults, const json& given, const std::string& path) {
    if (!given.is_object()) return;
    for (const auto& [key, value] : given.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!defaults.is_object() || !defaults.contains(key))
            throw ConfigError("unknown config key: " + where);
        if (value.is_object()) check_keys(defaults.at(key), value, where);
    }
}

void apply_set(json& cfg, const json& defaults, const std::string& expr) {
    const auto eq = expr.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key.path=value, got: " + expr);
    const std::string path = expr.substr(0, eq);
    const std::string raw = expr.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;  // unquoted strings are taken literally
    }
    json overlay = value;
    std::vector<std::string> parts;
    std::stringstream ss(path);
    for (std::string seg; std::getline(ss, seg, '.');) parts.push_back(seg);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) overlay = json{{*it, overlay}};
    check_keys(defaults, overlay, "");
    cfg.update(overlay, true);
}

emtrace::Vec3 vec3_of(const json& a, const std::string& what) {
    if (!a.is_array() || a.size() != 3)
        throw ConfigError(what + ": expected [x, y, z]");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

emtrace::ProblemConfig make_problem_config(const json& c, const emtrace::Scene& scene) {
    using namespace emtrace;
    ProblemConfig pc;
    pc.carrier.f0 = c.at("carrier").at("f0").get<double>();

    const json& l = c.at("launch");
    pc.launch.m_dim = static_cast<std::uint64_t>(l.at("m_dim").get<double>());
    pc.launch.rx_radius = l.at("rx_radius").get<double>();
    pc.launch.rx_radius_floor = l.at("rx_radius_floor").get<double>();
    pc.launch.d_tr_max = l.at("d_tr_max").get<int>();
    pc.launch.max_diffractions = l.at("max_diffractions").get<int>();
    pc.launch.allow_mixed = l.at("allow_mixed").get<bool>();
    pc.launch.seed = c.at("seed").get<std::uint64_t>();
    pc.launch.workers = c.at("workers").get<unsigned>();

    const json& g = c.at("grid");
    pc.grid = make_grid(scene, g.at("g0").get<double>(), g.at("g1").get<double>(),
                        g.at("z_n").get<double>());
    pc.agr.delta_p_db = c.at("agr").at("delta_p_db").get<double>();

    const json& a = c.at("antenna");
    pc.z_b = a.at("z_b").get<double>();
    pc.m_ant = a.at("m_ant").get<int>();
    pc.ula_spacing = a.at("ula_spacing").get<double>();
    pc.ula_axis = vec3_of(a.at("ula_axis"), "antenna.ula_axis");
    pc.m_p = a.at("m_p").get<std::size_t>();
    pc.antenna_re_z = a.at("re_z").get<double>();

    const json& n = c.at("network");
    pc.net.sigma_n2 = dbm_to_watt(n.at("sigma_n2_dbm").get<double>());
    pc.net.tau_e2 = n.at("tau_e2").get<double>();
    pc.net.delta_rf = n.at("delta_rf").get<double>();
    pc.net.gamma_min = db_to_lin(n.at("gamma_min_db").get<double>());
    pc.net.rho_cov = n.at("rho_cov").get<double>();
    pc.net.eirp_max = dbm_to_watt(n.at("eirp_max_dbm").get<double>());
    pc.net.g_r = db_to_lin(a.at("g_r_db").get<double>());
    pc.net.n_min = n.at("n_min").get<int>();
    pc.net.n_max = n.at("n_max").get<int>();
    std::vector<std::pair<double, double>> anchors;
    for (const auto& row : n.at("prf"))
        anchors.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    pc.net.prf = PrfCurve(anchors);

    const json& m = c.at("mobility");
    pc.mobility.speed_kmh = m.at("speed_kmh").get<double>();
    pc.mobility.t_step = m.at("t_step").get<double>();
    pc.mobility.t_avg = m.at("t_avg").get<double>();
    pc.mobility.kappa_min = m.at("kappa_min").get<double>();
    pc.mobility.kappa_max = m.at("kappa_max").get<double>();
    pc.mobility.stop_prob = m.at("stop_prob").get<double>();
    pc.mobility.pause_median = m.at("pause_median").get<double>();
    pc.mobility.pause_sigma = m.at("pause_sigma").get<double>();
    pc.mobility.rho_entry = m.at("rho_entry").get<double>();

    try {
        pc.net.validate();
        pc.mobility.validate();
        (void)pc.grid.stride1();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return pc;
}

emtrace::OptimizeConfig make_optimize_config(const json& c) {
    emtrace::OptimizeConfig oc;
    const json& nm = c.at("nm");
    oc.nm.n_s = nm.at("n_s").get<int>();
    oc.nm.d_max = nm.at("d_max").get<double>();
    oc.nm.max_iterations = nm.at("max_iterations").get<int>();
    oc.tau_p = nm.at("tau_p").get<double>();
    const json& mc = c.at("mc");
    oc.mc.tol = mc.at("tol").get<double>();
    oc.mc.min_runs = mc.at("min_runs").get<std::size_t>();
    oc.mc.max_runs = mc.at("max_runs").get<std::size_t>();
    oc.mc.common_random = mc.at("common_random").get<bool>();
    oc.seed = c.at("seed").get<std::uint64_t>();
    oc.workers = std::max(1, static_cast<int>(c.at("workers").get<unsigned>()));
    return oc;
}

emtrace::Scene load_scene_checked(const json& c) {
    const std::string path = c.at("scene").get<std::string>();
    if (path.empty()) throw ConfigError("scene: path required");
    if (!fs::exists(path)) throw ConfigError("scene: file not found: " + path);
    try {
        return emtrace::load_scene(path);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("scene: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Manifest.
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (f.read(buf, sizeof buf), f.gcount() > 0) {
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Manifest {
    fs::path out_dir;
    json doc;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    explicit Manifest(fs::path dir) : out_dir(std::move(dir)) {
        doc["version"] = tool_version;
        doc["timings_s"] = json::object();
        doc["outputs"] = json::object();
    }
    void add_output(const fs::path& file) {
        doc["outputs"][file.filename().string()] = hex64(fnv1a64_file(file));
    }
    void write(const std::string& status, const std::string& error) {
        doc["status"] = status;
        if (!error.empty()) doc["error"] = error;
        doc["timings_s"]["total"] = seconds_since(t0);
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        std::ofstream out(out_dir / "manifest.json");
        if (out) out << doc.dump(2) << "\n";
    }
    static double seconds_since(std::chrono::steady_clock::time_point t) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
    }
};

struct StageTimer {
    Manifest& man;
    std::string name;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    StageTimer(Manifest& m, std::string n) : man(m), name(std::move(n)) {}
    ~StageTimer() { man.doc["timings_s"][name] = Manifest::seconds_since(t0); }
};

// ---------------------------------------------------------------------------
// Artifact writers.
// ---------------------------------------------------------------------------

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write: " + p.string());
    out.precision(10);
    return out;
}

void write_raster_csv(const fs::path& p, const emtrace::GridSpec& g, const emtrace::Raster& r) {
    auto out = open_out(p);
    out << "ix,iy,x,y,p_db,e_db,mask,fallback\n";
    for (int iy = 0; iy < r.ny; ++iy)
        for (int ix = 0; ix < r.nx; ++ix) {
            const auto c = g.center(ix, iy);
            const auto i = r.idx(ix, iy);
            out << ix << ',' << iy << ',' << c.x << ',' << c.y << ',' << r.p_db[i] << ','
                << r.e_db[i] << ',' << int(r.mask[i]) << ',' << int(r.fallback[i]) << '\n';
        }
}

void write_samples_csv(const fs::path& p, const emtrace::SampleMap& m) {
    auto out = open_out(p);
    out << "ix,iy,level,p_db,e_db\n";
    for (const auto& [cell, s] : m)
        out << cell.first << ',' << cell.second << ',' << s.level << ',' << s.p_db << ','
            << s.e_db << '\n';
}

emtrace::SampleMap read_samples_csv(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("baseline.samples: cannot open " + p.string());
    emtrace::SampleMap m;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> f;
        while (std::getline(ss, tok, ',')) f.push_back(std::stod(tok));
        if (f.size() != 5) throw ConfigError("baseline.samples: malformed row: " + line);
        m[{static_cast<int>(f[0]), static_cast<int>(f[1])}] =
            emtrace::Sample{f[3], f[4], static_cast<int>(f[2])};
    }
    if (m.empty()) throw ConfigError("baseline.samples: no rows in " + p.string());
    return m;
}

const char* kind_str(emtrace::PathKind k) {
    switch (k) {
        case emtrace::PathKind::los: return "los";
        case emtrace::PathKind::reflection: return "reflection";
        case emtrace::PathKind::diffraction: return "diffraction";
        default: return "mixed";
    }
}

std::string hop_str(const emtrace::RayPath& p) {
    std::string s;
    for (const auto& h : p.hops) {
        if (!s.empty()) s += '-';
        s += (h.kind == emtrace::PathHop::reflect ? 'R' : 'D');
        s += std::to_string(h.id);
    }
    return s.empty() ? "direct" : s;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

int cmd_validate_scene(const json& cfg, Manifest& man) {
    StageTimer t(man, "validate");
    const auto scene = load_scene_checked(cfg);
    json s;
    s["name"] = scene.name;
    s["vertices"] = scene.mesh.vertices.size();
    s["triangles"] = scene.mesh.tris.size();
    s["materials"] = scene.materials.size();
    s["wedges"] = scene.wedges.size();
    s["streets"] = scene.streets.size();
    s["interferers"] = scene.interferers.size();
    s["c1_area_m2"] = emtrace::area(scene.bounds.c1);
    s["c3_area_m2"] = emtrace::area(scene.bounds.c3);
    s["c2"] = {{"origin", {scene.bounds.c2.origin.x, scene.bounds.c2.origin.y}},
               {"lx", scene.bounds.c2.lx},
               {"ly", scene.bounds.c2.ly}};
    const fs::path out = man.out_dir / "scene_summary.json";
    open_out(out) << s.dump(2) << "\n";
    man.add_output(out);
    std::cout << s.dump(2) << "\n";
    return 0;
}

int cmd_trace(const json& cfg, Manifest& man) {
    using namespace emtrace;
    const auto scene = load_scene_checked(cfg);
    const auto pc = make_problem_config(cfg, scene);
    const Vec3 tx = vec3_of(cfg.at("trace").at("tx"), "trace.tx");
    const Vec3 rx = vec3_of(cfg.at("trace").at("rx"), "trace.rx");

    StageTimer t(man, "trace");
    const Tracer tracer(scene, pc.carrier, pc.launch);
    const auto tx_ant = isotropic_antenna(1.0, pc.antenna_re_z);
    const auto rx_ant = isotropic_antenna(pc.net.g_r, pc.antenna_re_z);
    const auto paths = compute_multipath(tracer, tx_ant, tx, rx_ant, rx, 1.0);

    const fs::path out = man.out_dir / "paths.csv";
    auto f = open_out(out);
    f << "index,kind,hops,length_m,delay_ns,field_rms_vpm,voltage_v\n";
    CVec3 e_tot;
    cplx v_tot;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& p = paths[i];
        f << i << ',' << kind_str(p.kind) << ',' << hop_str(p) << ',' << p.s << ','
          << p.tau * 1e9 << ',' << p.field.norm() / std::sqrt(2.0) << ',' << std::abs(p.v_r)
          << '\n';
        e_tot = e_tot + p.field;
        v_tot += p.v_r;
    }
    man.add_output(out);

    const double p_r = std::norm(v_tot) / (8.0 * rx_ant.re_z);
    man.doc["trace"] = {{"paths", paths.size()},
                        {"p_r_dbw_per_eirp", paths.empty() ? p_floor_db : lin_to_db(p_r)},
                        {"e_dbuvm_per_sqrt_eirp",
                         paths.empty() ? e_floor_db : vm_to_dbuvm(e_tot.norm() / std::sqrt(2.0))}};
    std::cout << paths.size() << " paths; coherent P_R "
              << (paths.empty() ? p_floor_db : lin_to_db(p_r)) << " dBW per unit EIRP\n";
    return 0;
}

int cmd_map(const json& cfg, Manifest& man) {
    using namespace emtrace;
    const auto scene = load_scene_checked(cfg);
    const auto pc = make_problem_config(cfg, scene);
    const Vec3 tx = vec3_of(cfg.at("map").at("tx"), "map.tx");
    const double spacing = cfg.at("map").at("uniform_spacing").get<double>();

    StageTimer t(man, "map");
    const Tracer tracer(scene, pc.carrier, pc.launch);
    const auto mask = build_mask(scene, pc.grid);
    const auto offsets = ula_offsets(pc.m_ant, pc.ula_spacing * pc.carrier.lambda0(), pc.ula_axis);
    const LinkEvaluator ev{&tracer, isotropic_antenna(1.0, pc.antenna_re_z),
                           isotropic_antenna(pc.net.g_r, pc.antenna_re_z), tx, offsets, pc.m_p};
    const SampleMap samples = spacing > 0.0 ? uniform_map(pc.grid, mask, ev, spacing)
                                            : adaptive_map(pc.grid, mask, ev, pc.agr);
    const Raster raster = rasterize(samples, pc.grid, mask);

    const fs::path cells = man.out_dir / "map_cells.csv";
    write_raster_csv(cells, pc.grid, raster);
    man.add_output(cells);
    const fs::path samp = man.out_dir / "samples.csv";
    write_samples_csv(samp, samples);
    man.add_output(samp);

    json meta;
    meta["tx"] = {tx.x, tx.y, tx.z};
    meta["simulated"] = raster.simulated;
    meta["unmasked_cells"] = raster.unmasked_count();
    meta["sim_fraction"] =
        static_cast<double>(raster.simulated) / std::max(1, raster.unmasked_count());
    meta["grid"] = {{"nx", pc.grid.nx()}, {"ny", pc.grid.ny()}, {"g0", pc.grid.g0},
                    {"z_n", pc.grid.z}};
    const fs::path mp = man.out_dir / "map_meta.json";
    open_out(mp) << meta.dump(2) << "\n";
    man.add_output(mp);
    man.doc["map"] = meta;
    std::cout << "map: " << raster.simulated << " sims for " << raster.unmasked_count()
              << " cells (" << 100.0 * meta["sim_fraction"].get<double>() << "%)\n";
    return 0;
}

int cmd_mobility(const json& cfg, Manifest& man) {
    using namespace emtrace;
    const auto scene = load_scene_checked(cfg);
    const auto pc = make_problem_config(cfg, scene);
    const int n_ue = cfg.at("mobility_run").at("n_ue").get<int>();

    StageTimer t(man, "mobility");
    const auto mask = build_mask(scene, pc.grid);
    const auto zones = build_zone_map(scene, pc.grid, mask);
    const auto trajs = simulate(zones, pc.mobility, n_ue, cfg.at("seed").get<std::uint64_t>(),
                                std::max(1, static_cast<int>(cfg.at("workers").get<unsigned>())));

    const fs::path zf = man.out_dir / "zones.csv";
    {
        auto out = open_out(zf);
        out << "ix,iy,x,y,zone\n";
        for (int iy = 0; iy < zones.ny; ++iy)
            for (int ix = 0; ix < zones.nx; ++ix) {
                const auto c = zones.center(ix, iy);
                out << ix << ',' << iy << ',' << c.x << ',' << c.y << ','
                    << int(zones.at(ix, iy)) << '\n';
            }
    }
    man.add_output(zf);

    const fs::path tf = man.out_dir / "trajectories.csv";
    {
        auto out = open_out(tf);
        out << "ue,t,x,y,paused,ix,iy\n";
        for (std::size_t u = 0; u < trajs.size(); ++u)
            for (std::size_t k = 0; k < trajs[u].steps.size(); ++k) {
                const auto& s = trajs[u].steps[k];
                out << u << ',' << k << ',' << s.pos.x << ',' << s.pos.y << ',' << int(s.paused)
                    << ',' << s.ix << ',' << s.iy << '\n';
            }
    }
    man.add_output(tf);

    std::size_t paused = 0, total = 0;
    for (const auto& tr : trajs) {
        for (const auto& s : tr.steps) paused += s.paused;
        total += tr.steps.size();
    }
    man.doc["mobility"] = {{"n_ue", n_ue},
                           {"frames", pc.mobility.frames()},
                           {"paused_fraction", double(paused) / double(total)}};
    std::cout << "mobility: " << n_ue << " walkers, " << pc.mobility.frames() << " frames, "
              << 100.0 * double(paused) / double(total) << "% paused\n";
    return 0;
}

json optimize_report(const emtrace::OptimizeResult& res) {
    using namespace emtrace;
    json r;
    r["p_op"] = {res.p_op.x, res.p_op.y, res.z_b};
    r["eirp_op_dbm"] = watt_to_dbm(res.eirp_op);
    r["j_op_vpm"] = res.j_op;
    r["j_op_dbuvm"] = vm_to_dbuvm(res.j_op);
    r["coverage"] = res.coverage;
    r["converged"] = res.converged;
    r["iterations"] = res.iterations;
    r["positions_built"] = res.positions_built;
    return r;
}

void write_history_csv(const fs::path& p, const std::vector<emtrace::NmHistoryRow>& hist) {
    auto out = open_out(p);
    out << "iteration,best_jp,max_d\n";
    for (const auto& h : hist) out << h.iteration << ',' << h.best_jp << ',' << h.max_d << '\n';
}

int cmd_optimize(const json& cfg, Manifest& man) {
    using namespace emtrace;
    const auto scene = load_scene_checked(cfg);
    const auto pc = make_problem_config(cfg, scene);
    const auto oc = make_optimize_config(cfg);

    StageTimer t(man, "optimize");
    ExposureProblem prob(scene, pc);
    const OptimizeResult res = optimize(prob, oc);

    const fs::path rf = man.out_dir / "optimize_result.json";
    open_out(rf) << optimize_report(res).dump(2) << "\n";
    man.add_output(rf);
    const fs::path hf = man.out_dir / "history.csv";
    write_history_csv(hf, res.history);
    man.add_output(hf);

    const fs::path raster = man.out_dir / "optimal_raster.csv";
    write_raster_csv(raster, pc.grid, prob.position(res.p_op).raster);
    man.add_output(raster);

    man.doc["optimize"] = optimize_report(res);
    std::cout << "optimum at [" << res.p_op.x << ", " << res.p_op.y << ", " << res.z_b
              << "], EIRP " << watt_to_dbm(res.eirp_op) << " dBm, coverage " << res.coverage
              << ", J " << vm_to_dbuvm(res.j_op) << " dBuV/m after " << res.iterations
              << " iterations\n";
    return 0;
}

int cmd_baseline(const json& cfg, Manifest& man) {
    using namespace emtrace;
    const auto scene = load_scene_checked(cfg);
    const auto pc = make_problem_config(cfg, scene);
    const json& bc = cfg.at("baseline");
    const double d0 = bc.at("d0").get<double>();

    Vec3 fit_tx;
    if (bc.at("tx").empty()) {
        const Vec2 c = centroid(scene.bounds.c1);
        fit_tx = {c.x, c.y, pc.z_b};
    } else {
        fit_tx = vec3_of(bc.at("tx"), "baseline.tx");
    }

    const auto mask = build_mask(scene, pc.grid);
    SampleMap samples;
    {
        StageTimer t(man, "fit_samples");
        const std::string samples_path = bc.at("samples").get<std::string>();
        if (!samples_path.empty()) {
            samples = read_samples_csv(samples_path);
        } else {
            const Tracer tracer(scene, pc.carrier, pc.launch);
            const auto offsets =
                ula_offsets(pc.m_ant, pc.ula_spacing * pc.carrier.lambda0(), pc.ula_axis);
            const LinkEvaluator ev{&tracer, isotropic_antenna(1.0, pc.antenna_re_z),
                                   isotropic_antenna(pc.net.g_r, pc.antenna_re_z), fit_tx,
                                   offsets, pc.m_p};
            samples = build_initial(pc.grid, mask, ev);
        }
    }

    CiPair models;
    json fit;
    const double g_t = static_cast<double>(pc.m_ant);
    {
        StageTimer t(man, "fit");
        const auto pl = extract_pl_samples(scene, pc.grid, samples, fit_tx, g_t, pc.net.g_r);
        const auto los = select_condition(pl, Condition::los);
        const auto nlos = select_condition(pl, Condition::nlos);
        if (los.size() < 2 || nlos.size() < 2)
            throw ConfigError("baseline: need at least two samples per condition (LoS " +
                              std::to_string(los.size()) + ", NLoS " +
                              std::to_string(nlos.size()) + ")");
        models.los = fit_ci(los, Condition::los, d0, pc.carrier.lambda0());
        models.nlos = fit_ci(nlos, Condition::nlos, d0, pc.carrier.lambda0());
        const auto dump = [](const CiModel& m) {
            return json{{"n_ple", m.n_ple},
                        {"sigma_x_db", m.sigma_x},
                        {"pl_ref_db", m.pl_ref},
                        {"d_ref_m", m.d_ref}};
        };
        fit = {{"tx", {fit_tx.x, fit_tx.y, fit_tx.z}},
               {"los", dump(models.los)},
               {"nlos", dump(models.nlos)},
               {"los_samples", los.size()},
               {"nlos_samples", nlos.size()}};
        const fs::path ff = man.out_dir / "ci_fit.json";
        open_out(ff) << fit.dump(2) << "\n";
        man.add_output(ff);
        man.doc["ci_fit"] = fit;
        std::cout << "CI fit: LoS n=" << models.los.n_ple << " sigma=" << models.los.sigma_x
                  << " dB; NLoS n=" << models.nlos.n_ple << " sigma=" << models.nlos.sigma_x
                  << " dB\n";
    }

    if (!bc.at("with_optimize").get<bool>()) return 0;

    const auto oc = make_optimize_config(cfg);
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    json cmp;
    OptimizeResult ci_res;
    {
        StageTimer t(man, "ci_optimize");
        const RasterSource src = [&, seed](const Vec3& p) {
            return ci_unit_raster(models, pc.grid, mask, p, g_t, pc.net.g_r, pc.carrier, seed);
        };
        ExposureProblem ci_prob(scene, pc, src);
        ci_res = optimize(ci_prob, oc);
        cmp["ci"] = optimize_report(ci_res);
    }
    {
        StageTimer t(man, "cross_evaluate");
        // The honest comparison runs the CI-chosen deployment, position and
        // EIRP both, through the deterministic channel.
        const double eirp_eval =
            ci_res.eirp_op > 0.0 ? std::min(ci_res.eirp_op, pc.net.eirp_max) : pc.net.eirp_max;
        ExposureProblem det_prob(scene, pc);
        PositionEval& pe = det_prob.position(ci_res.p_op);
        const auto gamma =
            sinr_raster(pe.raster, eirp_eval, pc.net.n_min, det_prob.interference(), pc.net);
        const double cov = coverage(gamma, pe.raster.mask, pc.net.gamma_min);
        cmp["deterministic_reeval"] = {
            {"eirp_eval_dbm", watt_to_dbm(eirp_eval)},
            {"eirp_req_dbm",
             std::isfinite(pe.eirp_req) ? json(watt_to_dbm(pe.eirp_req)) : json()},
            {"feasible", pe.feasible},
            {"coverage_at_ci_eirp", cov},
            {"rho_cov", pc.net.rho_cov},
            {"baseline_optimistic", cov < pc.net.rho_cov}};
        std::cout << "re-evaluated under deterministic channel: coverage " << cov << " at "
                  << watt_to_dbm(eirp_eval) << " dBm (target " << pc.net.rho_cov << ")\n";
    }
    const fs::path cf = man.out_dir / "baseline_comparison.json";
    open_out(cf) << cmp.dump(2) << "\n";
    man.add_output(cf);
    man.doc["baseline_comparison"] = cmp;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic ray-launching EM exposure planner"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir_flag, scene_flag;
    bool dump_config = false;
    std::int64_t seed_flag = -1;
    int workers_flag = -1;
    app.add_option("-c,--config", config_path, "JSON config file");
    app.add_option("--set", sets, "override a config entry: key.path=value");
    app.add_option("--out-dir", out_dir_flag, "output directory");
    app.add_option("--scene", scene_flag, "scene JSON path");
    app.add_option("--seed", seed_flag, "master seed");
    app.add_option("--workers", workers_flag, "worker thread count (0 = hardware)");
    app.add_flag("--dump-config", dump_config, "print the resolved config and exit");

    app.fallthrough();  // global flags may follow the subcommand name

    auto* sc_validate = app.add_subcommand("validate-scene", "load a scene and report its shape");
    auto* sc_trace = app.add_subcommand("trace", "multipath between two points");
    auto* sc_map = app.add_subcommand("map", "coverage and exposure rasters for one transmitter");
    auto* sc_mobility = app.add_subcommand("mobility", "simulate walker trajectories");
    auto* sc_optimize = app.add_subcommand("optimize", "joint position and EIRP minimization");
    auto* sc_baseline = app.add_subcommand("baseline", "empirical CI fit and comparison");

    CLI11_PARSE(app, argc, argv);

    const json defaults = default_config();
    json cfg = defaults;
    std::string phase_error;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("config: cannot open " + config_path);
            json file;
            in >> file;
            check_keys(defaults, file, "");
            cfg.update(file, true);
        }
        if (const char* env = std::getenv("EMTRACE_OUT_DIR"); env && *env) cfg["out_dir"] = env;
        for (const auto& s : sets) apply_set(cfg, defaults, s);
        if (!out_dir_flag.empty()) cfg["out_dir"] = out_dir_flag;
        if (!scene_flag.empty()) cfg["scene"] = scene_flag;
        if (seed_flag >= 0) cfg["seed"] = static_cast<std::uint64_t>(seed_flag);
        if (workers_flag >= 0) cfg["workers"] = static_cast<unsigned>(workers_flag);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    if (dump_config) {
        std::cout << cfg.dump(2) << "\n";
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
    }

    Manifest man(cfg.at("out_dir").get<std::string>());
    man.doc["config"] = cfg;
    man.doc["subcommand"] = app.get_subcommands().front()->get_name();
    std::error_code ec;
    fs::create_directories(man.out_dir, ec);
    if (ec) {
        std::cerr << "cannot create output directory: " << man.out_dir << "\n";
        return 2;
    }

    int rc = 0;
    try {
        if (sc_validate->parsed()) rc = cmd_validate_scene(cfg, man);
        else if (sc_trace->parsed()) rc = cmd_trace(cfg, man);
        else if (sc_map->parsed()) rc = cmd_map(cfg, man);
        else if (sc_mobility->parsed()) rc = cmd_mobility(cfg, man);
        else if (sc_optimize->parsed()) rc = cmd_optimize(cfg, man);
        else if (sc_baseline->parsed()) rc = cmd_baseline(cfg, man);
        man.write(rc == 0 ? "ok" : "error", "");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        man.write("config-error", e.what());
        rc = 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        man.write("config-error", e.what());
        rc = 2;
    } catch (const emtrace::CoverageInfeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        man.write("infeasible", e.what());
        rc = 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        man.write("error", e.what());
        rc = 4;
    }
    return rc;
}
