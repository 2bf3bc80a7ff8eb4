// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "coverage.hpp"
#include "mobility.hpp"
#include "netmodel.hpp"
#include "polygon.hpp"
#include "raylaunch.hpp"
#include "rng.hpp"

// Coverage-constrained exposure minimization. A candidate is a 2D transmitter
// position on the rooftop deployment region; its EIRP is pinned to the
// smallest value that still meets the coverage constraint under worst-case
// load (fewest users in the serving cell, most in the interfering ones), and
// the objective is the Monte-Carlo mean over walker populations of the RMS
// time-averaged field each walker experiences. The search is a Nelder-Mead
// simplex over the convexified deployment region with a distance penalty for
// candidates outside the true rooftop contour.

namespace emtrace {

// ---------------------------------------------------------------------------
// Monte-Carlo estimation.
// ---------------------------------------------------------------------------

// Welford running estimate with a fixed-width 95% confidence stopping rule.
struct McEstimator {
    double tol = 0.005;  // half-width target, linear units
    std::size_t min_runs = 30;
    std::size_t max_runs = 200'000;

    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }
    double variance() const {
        return count >= 2 ? m2 / static_cast<double>(count - 1) : 0.0;
    }
    double half_width() const {
        if (count < 2) return std::numeric_limits<double>::infinity();
        return 1.96 * std::sqrt(variance() / static_cast<double>(count));
    }
    bool done() const {
        return (count >= min_runs && half_width() < tol) || count >= max_runs;
    }
    bool budget_hit() const { return count >= max_runs && !(half_width() < tol); }
};

// RMS of one walker's per-frame field samples.
inline double rms_exposure(const std::vector<double>& e) {
    if (e.empty()) throw std::invalid_argument("rms_exposure: no samples");
    double s = 0.0;
    for (const double v : e) s += v * v;
    return std::sqrt(s / static_cast<double>(e.size()));
}

// Per-cell linear-domain lookups shared by every Monte-Carlo run at one
// candidate; converting the dB rasters once keeps the run loop allocation
// and log free.
struct ExposureTables {
    int nx = 0, ny = 0;
    std::vector<double> p_unit;  // serving beamformed power per unit EIRP [W]
    std::vector<double> p_intf;  // interferer leakage [W]
    double zf_over_ae = 0.0;     // Z_F0 / A_e
};

inline ExposureTables make_exposure_tables(const Raster& serving,
                                           const std::vector<double>& p_rl,
                                           const CarrierSpec& carrier, double g_r) {
    if (p_rl.size() != serving.p_db.size())
        throw std::invalid_argument("make_exposure_tables: raster dimension mismatch");
    ExposureTables t;
    t.nx = serving.nx;
    t.ny = serving.ny;
    t.p_unit.resize(serving.p_db.size());
    for (std::size_t i = 0; i < t.p_unit.size(); ++i) t.p_unit[i] = db_to_lin(serving.p_db[i]);
    t.p_intf = p_rl;
    t.zf_over_ae = z_f0 / effective_aperture(carrier, g_r);
    return t;
}

// One population draw projected to raster cells, frame-major. Positions are
// dropped: the exposure average only needs cell indices and co-location.
struct RunDraw {
    int n_ue = 0;
    int t_total = 0;
    std::vector<std::int32_t> cells;  // [t * n_ue + i]
};

inline RunDraw compress_runs(const std::vector<Trajectory>& trajs, int nx) {
    RunDraw d;
    d.n_ue = static_cast<int>(trajs.size());
    d.t_total = d.n_ue > 0 ? static_cast<int>(trajs[0].steps.size()) : 0;
    d.cells.resize(static_cast<std::size_t>(d.n_ue) * d.t_total);
    for (int i = 0; i < d.n_ue; ++i) {
        const auto& steps = trajs[static_cast<std::size_t>(i)].steps;
        if (static_cast<int>(steps.size()) != d.t_total)
            throw std::invalid_argument("compress_runs: trajectory length mismatch");
        for (int t = 0; t < d.t_total; ++t)
            d.cells[static_cast<std::size_t>(t) * d.n_ue + i] =
                steps[static_cast<std::size_t>(t)].iy * nx + steps[static_cast<std::size_t>(t)].ix;
    }
    return d;
}

// Mean over walkers of the RMS time-averaged field for one population draw.
// serving_scale is prf(N) * EIRP; co-located walkers multiply the serving
// power. Quadratic in the walker count per frame, fine for a few dozen.
inline double mean_walker_exposure(const ExposureTables& tab, double serving_scale,
                                   const RunDraw& run) {
    if (run.n_ue < 1 || run.t_total < 1)
        throw std::invalid_argument("mean_walker_exposure: empty draw");
    const int n = run.n_ue;
    std::vector<double> sumsq(static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t < run.t_total; ++t) {
        const std::int32_t* c = &run.cells[static_cast<std::size_t>(t) * n];
        for (int i = 0; i < n; ++i) {
            int occ = 0;
            for (int j = 0; j < n; ++j) occ += c[j] == c[i];
            const std::size_t cell = static_cast<std::size_t>(c[i]);
            const double e2 =
                tab.zf_over_ae * (tab.p_intf[cell] + occ * serving_scale * tab.p_unit[cell]);
            sumsq[static_cast<std::size_t>(i)] += e2;
        }
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += std::sqrt(sumsq[static_cast<std::size_t>(i)] / run.t_total);
    return acc / n;
}

namespace detail {

inline constexpr std::uint64_t mc_stream = 0x6d63ULL;        // per-run draws
inline constexpr std::uint64_t crn_stream = 0x69746572ULL;   // per-iteration shared seeds
inline constexpr std::uint64_t indep_stream = 0x6576616cULL; // per-evaluation seeds
inline constexpr std::uint64_t init_stream = 0x73706c78ULL;  // initial simplex

inline std::uint64_t derived_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Rng::substream(seed, path).next();
}

}  // namespace detail

// Lazily simulated population draws, indexed by run number. Under common
// random numbers every candidate inside one search iteration replays the
// same draws, so the pool caches the first cache_cap of them; the draw for a
// given (seed, index) pair never depends on who asked first.
class RunPool {
  public:
    RunPool(const ZoneMap& zm, const MobilityParams& mp, int n_min, int n_max,
            std::uint64_t seed, std::size_t cache_cap = 1024, int workers = 1)
        : zm_(&zm), mp_(&mp), n_min_(n_min), n_max_(n_max), seed_(seed), cap_(cache_cap),
          workers_(workers) {}

    std::shared_ptr<const RunDraw> run(std::size_t idx) {
        if (idx < cap_) {
            if (runs_.size() <= idx) runs_.resize(idx + 1);
            if (!runs_[idx]) runs_[idx] = make(idx);
            return runs_[idx];
        }
        return make(idx);
    }

  private:
    std::shared_ptr<const RunDraw> make(std::size_t idx) const {
        Rng rng = Rng::substream(seed_, {detail::mc_stream, idx});
        const int n =
            n_min_ + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_max_ - n_min_) + 1));
        const auto trajs = simulate(*zm_, *mp_, n, rng.next(), workers_);
        return std::make_shared<RunDraw>(compress_runs(trajs, zm_->nx));
    }

    const ZoneMap* zm_;
    const MobilityParams* mp_;
    int n_min_, n_max_;
    std::uint64_t seed_;
    std::size_t cap_;
    int workers_;
    std::vector<std::shared_ptr<const RunDraw>> runs_;
};

struct McConfig {
    double tol = 0.005;  // [V/m]
    std::size_t min_runs = 30;
    std::size_t max_runs = 200'000;
    bool common_random = true;  // share population draws across candidates per iteration
};

struct McResult {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t runs = 0;
    bool budget_hit = false;
};

// Monte-Carlo mean experienced exposure at one operating point [V/m].
inline McResult mc_objective(const ExposureTables& tab, double eirp, const PrfCurve& prf,
                             RunPool& pool, const McConfig& cfg) {
    McEstimator est{cfg.tol, cfg.min_runs, cfg.max_runs};
    while (!est.done()) {
        const auto run = pool.run(est.count);
        est.add(mean_walker_exposure(tab, prf(run->n_ue) * eirp, *run));
    }
    return {est.mean, est.half_width(), est.count, est.budget_hit()};
}

// ---------------------------------------------------------------------------
// Nelder-Mead simplex search.
// ---------------------------------------------------------------------------

struct NmConfig {
    int n_s = 7;  // simplex has n_s + 1 vertices; centroid spans the best n_s
    double d_max = 1.0;  // convergence: largest pairwise vertex distance [m]
    double mu_r = 1.0, mu_e = 2.0, mu_oc = 0.5, mu_ic = -0.5, mu_s = 0.5;
    int max_iterations = 500;  // hard stop against non-contracting noise
};

struct NmHistoryRow {
    int iteration;
    double best_jp;
    double max_d;
};

struct NmResult {
    Vec2 best_pos;
    double best_jp = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<NmHistoryRow> history;
};

// All pairwise vertex distances.
inline std::vector<double> distance_set(const std::vector<Vec2>& pts) {
    std::vector<double> d;
    d.reserve(pts.size() * (pts.size() - 1) / 2);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            d.push_back((pts[i] - pts[j]).norm());
    return d;
}

inline double max_distance(const std::vector<Vec2>& pts) {
    double m = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            m = std::max(m, (pts[i] - pts[j]).norm());
    return m;
}

inline bool converged(const std::vector<double>& distances, double d_max) {
    for (const double d : distances)
        if (d > d_max) return false;
    return true;
}

// Simplex search over the convex region. Every iteration re-evaluates all
// vertices (the evaluator sees the iteration index, so stochastic objectives
// redraw their noise), orders them, tests convergence on the pairwise vertex
// distances, then replaces the worst vertex by reflection, expansion or
// contraction, falling back to shrinking everything toward the best vertex.
// Proposals are projected onto the region before evaluation; an exact tie
// between the reflected value and the second-worst falls through to shrink,
// matching the branch conditions as written.
template <typename Eval>
NmResult nelder_mead(const std::vector<Vec2>& initial, const Polygon& region, Eval&& eval,
                     const NmConfig& cfg) {
    const int m = cfg.n_s + 1;
    if (static_cast<int>(initial.size()) != m)
        throw std::invalid_argument("nelder_mead: need n_s + 1 initial positions");
    std::vector<Vec2> pos(initial.size());
    for (std::size_t i = 0; i < initial.size(); ++i) pos[i] = closest_point(region, initial[i]);
    std::vector<double> jp(static_cast<std::size_t>(m), 0.0);

    int q = 0;
    const auto evaluate_all = [&]() {
        for (int i = 0; i < m; ++i)
            jp[static_cast<std::size_t>(i)] = eval(pos[static_cast<std::size_t>(i)], q);
        std::vector<int> idx(static_cast<std::size_t>(m));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return jp[static_cast<std::size_t>(a)] < jp[static_cast<std::size_t>(b)];
        });
        std::vector<Vec2> p2(static_cast<std::size_t>(m));
        std::vector<double> j2(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            p2[static_cast<std::size_t>(i)] = pos[static_cast<std::size_t>(idx[i])];
            j2[static_cast<std::size_t>(i)] = jp[static_cast<std::size_t>(idx[i])];
        }
        pos.swap(p2);
        jp.swap(j2);
    };

    NmResult res;
    evaluate_all();
    for (;;) {
        const double dmax = max_distance(pos);
        res.history.push_back({q, jp[0], dmax});
        if (dmax <= cfg.d_max) {
            res.converged = true;
            break;
        }
        if (q >= cfg.max_iterations) break;

        Vec2 cen{0.0, 0.0};
        for (int i = 0; i < cfg.n_s; ++i) cen = cen + pos[static_cast<std::size_t>(i)];
        cen = cen / static_cast<double>(cfg.n_s);
        const Vec2 worst = pos[static_cast<std::size_t>(m - 1)];
        const auto propose = [&](double mu) {
            return closest_point(region, cen * (1.0 + mu) - worst * mu);
        };

        const double j_best = jp[0];
        const double j_second = jp[static_cast<std::size_t>(m - 2)];
        const double j_worst = jp[static_cast<std::size_t>(m - 1)];
        const Vec2 pr = propose(cfg.mu_r);
        const double jr = eval(pr, q);

        std::optional<Vec2> accepted;
        if (j_best <= jr && jr < j_second) {
            accepted = pr;
        } else if (jr < j_best) {
            const Vec2 pe = propose(cfg.mu_e);
            accepted = eval(pe, q) < jr ? pe : pr;
        } else if (j_second < jr && jr < j_worst) {
            const Vec2 poc = propose(cfg.mu_oc);
            if (eval(poc, q) < jr) accepted = poc;
        } else if (j_worst <= jr) {
            const Vec2 pic = propose(cfg.mu_ic);
            if (eval(pic, q) < j_worst) accepted = pic;
        }

        if (accepted) {
            pos[static_cast<std::size_t>(m - 1)] = *accepted;
        } else {
            for (int i = 1; i < m; ++i)
                pos[static_cast<std::size_t>(i)] = closest_point(
                    region, pos[0] + (pos[static_cast<std::size_t>(i)] - pos[0]) * cfg.mu_s);
        }
        ++q;
        evaluate_all();
    }
    res.iterations = q;
    res.best_pos = pos[0];
    res.best_jp = jp[0];
    return res;
}

// Uniform random positions inside a convex region, by bounding-box rejection.
inline std::vector<Vec2> random_simplex(const Polygon& region, int count, std::uint64_t seed) {
    Rng rng = Rng::substream(seed, {detail::init_stream});
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& p : region.pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        const Vec2 q{rng.uniform(x0, x1), rng.uniform(y0, y1)};
        if (contains(region, q)) out.push_back(q);
    }
    return out;
}

// ---------------------------------------------------------------------------
// The full problem: scene-level state plus a per-position cache.
// ---------------------------------------------------------------------------

struct ProblemConfig {
    CarrierSpec carrier;
    LaunchConfig launch;
    GridSpec grid;  // coverage lattice at the evaluation height z_n
    NetworkConfig net;
    MobilityParams mobility;
    AgrConfig agr;
    double z_b = 30.0;  // transmitter height [m]
    int m_ant = 8;
    double ula_spacing = 0.5;  // [wavelengths]
    Vec3 ula_axis{0.0, 0.0, 1.0};
    std::size_t m_p = 5;
    double antenna_re_z = 50.0;
};

// Alternate per-transmitter raster generator (an empirical channel, a cached
// run); the default is the ray-launched adaptive map.
using RasterSource = std::function<Raster(const Vec3&)>;

// Everything known about one candidate position.
struct PositionEval {
    Raster raster;  // beamformed unit-EIRP rasters at this position
    ExposureTables tables;
    double eirp_req = std::numeric_limits<double>::infinity();  // coverage quantile [W]
    double eirp = 0.0;  // operating EIRP when feasible [W]
    bool feasible = false;
};

class ExposureProblem {
  public:
    ExposureProblem(const Scene& scene, const ProblemConfig& pc, RasterSource source = {})
        : scene_(&scene), pc_(pc), tracer_(scene, pc.carrier, pc.launch),
          source_(std::move(source)) {
        pc_.net.validate();
        pc_.mobility.validate();
        mask_ = build_mask(scene, pc_.grid);
        zones_ = build_zone_map(scene, pc_.grid, mask_);
        offsets_ = ula_offsets(pc_.m_ant, pc_.ula_spacing * pc_.carrier.lambda0(), pc_.ula_axis);
        tx_elem_ = isotropic_antenna(1.0, pc_.antenna_re_z);
        rx_ = isotropic_antenna(pc_.net.g_r, pc_.antenna_re_z);

        // Interferers run at their maximum load throughout: that is the
        // worst case both for the coverage constraint and for exposure.
        std::vector<Interferer> infs;
        for (const auto& p_l : scene.interferers) {
            Interferer l;
            l.position = p_l;
            l.p_t = interferer_p_t;
            l.g_t = interferer_g_t;
            l.n_ue = pc_.net.n_max;
            l.unit = unit_raster(p_l);
            infs.push_back(std::move(l));
        }
        p_rl_ = interference_raster(pc_.grid.nx(), pc_.grid.ny(), infs, pc_.net.prf,
                                    pc_.net.delta_rf);
    }

    // Interferer feed per Table-style defaults; only the product (their EIRP)
    // enters the leakage, the pattern itself is the shared array model.
    static constexpr double interferer_p_t = 200.0;   // [W]
    static constexpr double interferer_g_t = 31.6228; // 15 dBi, linear

    const Scene& scene() const { return *scene_; }
    const ProblemConfig& config() const { return pc_; }
    const NetworkConfig& net() const { return pc_.net; }
    const MobilityParams& mobility() const { return pc_.mobility; }
    const ZoneMap& zones() const { return zones_; }
    const CellMask& mask() const { return mask_; }
    const Polygon& c1() const { return scene_->bounds.c1; }
    const Polygon& c3() const { return scene_->bounds.c3; }
    const std::vector<double>& interference() const { return p_rl_; }
    const Tracer& tracer() const { return tracer_; }
    std::size_t positions_built() const { return cache_.size(); }

    // Candidate lookups quantize to a 0.1 m key and ray trace at the key, so
    // every revisit of a neighbourhood reuses the propagation work.
    PositionEval& position(const Vec2& p) {
        const Key k{quantize(p.x), quantize(p.y)};
        const auto it = cache_.find(k);
        if (it != cache_.end()) return it->second;
        PositionEval pe;
        pe.raster = unit_raster({static_cast<double>(k.first) * quantum,
                                 static_cast<double>(k.second) * quantum, pc_.z_b});
        pe.tables = make_exposure_tables(pe.raster, p_rl_, pc_.carrier, pc_.net.g_r);
        pe.eirp_req = eirp_requirement_quantile(pe.raster, p_rl_, pc_.net, pc_.net.n_min);
        pe.feasible = pe.eirp_req <= pc_.net.eirp_max;
        if (pe.feasible) pe.eirp = pe.eirp_req;
        return cache_.emplace(k, std::move(pe)).first->second;
    }

    // Coverage ratio at the position's operating point under worst-case load.
    double coverage_at(const Vec2& p) {
        PositionEval& pe = position(p);
        if (!pe.feasible) return 0.0;
        const auto gamma = sinr_raster(pe.raster, pe.eirp, pc_.net.n_min, p_rl_, pc_.net);
        return coverage(gamma, pe.raster.mask, pc_.net.gamma_min);
    }

    // Unit-EIRP raster for an arbitrary transmitter: the injected source if
    // any, otherwise the adaptive-refinement ray-launched map.
    Raster unit_raster(const Vec3& p_t) const {
        if (source_) return source_(p_t);
        const LinkEvaluator ev{&tracer_, tx_elem_, rx_, p_t, offsets_, pc_.m_p};
        const auto samples = adaptive_map(pc_.grid, mask_, ev, pc_.agr);
        return rasterize(samples, pc_.grid, mask_);
    }

  private:
    static constexpr double quantum = 0.1;  // cache key resolution [m]
    using Key = std::pair<long long, long long>;
    static long long quantize(double v) { return std::llround(v / quantum); }

    const Scene* scene_;
    ProblemConfig pc_;
    Tracer tracer_;
    RasterSource source_;
    CellMask mask_;
    ZoneMap zones_;
    std::vector<Vec3> offsets_;
    AntennaSpec tx_elem_, rx_;
    std::vector<double> p_rl_;
    std::map<Key, PositionEval> cache_;
};

struct OptimizeConfig {
    NmConfig nm;
    McConfig mc;
    double tau_p = 1e3;  // penalty weight [V/m per m]
    std::uint64_t seed = 1;
    std::size_t pool_cap = 1024;  // cached population draws per pool
    int workers = 1;
};

struct OptimizeResult {
    Vec2 p_op;
    double z_b = 0.0;
    double eirp_op = 0.0;  // [W]
    double j_op = 0.0;     // penalized objective at the optimum [V/m]
    double coverage = 0.0;
    bool converged = false;
    int iterations = 0;
    std::size_t positions_built = 0;
    std::vector<NmHistoryRow> history;
};

namespace detail {

// Deterministic stand-in objective for candidates that cannot reach the
// required coverage at the EIRP limit: far above any physical exposure and
// ordered by how badly the limit is missed, so the search drains away from
// infeasible ground instead of stalling on a constant.
inline double infeasible_objective(double eirp_req, double eirp_max) {
    if (!std::isfinite(eirp_req)) return 2e6;
    return 1e6 + lin_to_db(eirp_req / eirp_max);
}

}  // namespace detail

// Full minimization: random initial simplex in the convex search region,
// per-candidate minimum EIRP, Monte-Carlo objective with the penalty for
// leaving the rooftop contour. Throws CoverageInfeasible when no initial
// vertex (or the final optimum) can satisfy coverage within the EIRP limit.
inline OptimizeResult optimize(ExposureProblem& prob, const OptimizeConfig& cfg) {
    const auto initial = random_simplex(prob.c3(), cfg.nm.n_s + 1, cfg.seed);

    std::optional<RunPool> pool;
    int pool_iter = -1;
    std::uint64_t eval_counter = 0;
    int first_pass = 0;
    bool any_feasible = false;

    const auto eval = [&](const Vec2& pos, int iter) -> double {
        PositionEval& pe = prob.position(pos);
        double j;
        if (!pe.feasible) {
            j = detail::infeasible_objective(pe.eirp_req, prob.net().eirp_max);
        } else {
            if (cfg.mc.common_random) {
                if (pool_iter != iter) {
                    pool.emplace(prob.zones(), prob.mobility(), prob.net().n_min,
                                 prob.net().n_max,
                                 detail::derived_seed(cfg.seed, {detail::crn_stream,
                                                                 static_cast<std::uint64_t>(iter)}),
                                 cfg.pool_cap, cfg.workers);
                    pool_iter = iter;
                }
            } else {
                pool.emplace(prob.zones(), prob.mobility(), prob.net().n_min, prob.net().n_max,
                             detail::derived_seed(cfg.seed, {detail::indep_stream, eval_counter}),
                             cfg.pool_cap, cfg.workers);
            }
            j = mc_objective(pe.tables, pe.eirp, prob.net().prf, *pool, cfg.mc).mean;
        }
        ++eval_counter;
        if (iter == 0 && first_pass < cfg.nm.n_s + 1) {
            any_feasible = any_feasible || pe.feasible;
            if (++first_pass == cfg.nm.n_s + 1 && !any_feasible)
                throw CoverageInfeasible("no initial candidate meets coverage at the EIRP limit");
        }
        return j + cfg.tau_p * distance(prob.c1(), pos);
    };

    const NmResult nm = nelder_mead(initial, prob.c3(), eval, cfg.nm);

    PositionEval& best = prob.position(nm.best_pos);
    if (!best.feasible)
        throw CoverageInfeasible("optimized position cannot meet coverage at the EIRP limit");
    OptimizeResult res;
    res.p_op = nm.best_pos;
    res.z_b = prob.config().z_b;
    res.eirp_op = best.eirp;
    res.j_op = nm.best_jp;
    res.coverage = prob.coverage_at(nm.best_pos);
    res.converged = nm.converged;
    res.iterations = nm.iterations;
    res.positions_built = prob.positions_built();
    res.history = nm.history;
    return res;
}

}  // namespace emtrace
