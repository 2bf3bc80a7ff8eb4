// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coverage.hpp"
#include "emfield.hpp"
#include "netmodel.hpp"
#include "rng.hpp"
#include "scene.hpp"
#include "units.hpp"

// Empirical close-in (CI) channel baseline: a distance power-law path-loss
// model fitted to simulated received powers, paired with a stochastic LoS
// classifier, producing geometry-free open-area rasters that drop into the
// same network model and optimizer as the deterministic channel. Exists to
// quantify what building-blind planning gets wrong.

namespace emtrace {

// ---------------------------------------------------------------------------
// CI path-loss model.
// ---------------------------------------------------------------------------

enum class Condition : std::uint8_t { los = 0, nlos = 1 };

struct CiModel {
    double n_ple = 2.0;    // path-loss exponent
    double sigma_x = 0.0;  // shadowing std [dB]
    double pl_ref = 0.0;   // PL(f0, d_ref) [dB]
    double d_ref = 1.0;    // reference distance [m]

    // Median path loss, before shadowing.
    double pl(double d_3d) const {
        if (!(d_3d > 0.0)) throw std::domain_error("CiModel::pl: distance must be positive");
        return pl_ref + 10.0 * n_ple * std::log10(d_3d / d_ref);
    }
};

// Free-space path loss at the reference distance.
inline double fspl_reference(double d0, double lambda) {
    return 20.0 * std::log10(4.0 * pi * d0 / lambda);
}

// Fit the exponent by least squares with the intercept held fixed. Under LoS
// the reference is the analytic free-space loss at d0; under NLoS there is no
// analytic anchor, so the model is pinned through the sample closest to the
// transmitter and that sample's distance becomes the reference.
inline CiModel fit_ci(const std::vector<std::pair<double, double>>& samples, Condition cond,
                      double d0, double lambda) {
    if (samples.size() < 2) throw std::invalid_argument("fit_ci: need at least two samples");
    for (const auto& [d, pl] : samples) {
        (void)pl;
        if (!(d > d0)) throw std::invalid_argument("fit_ci: all distances must exceed d0");
    }
    CiModel m;
    if (cond == Condition::los) {
        m.d_ref = d0;
        m.pl_ref = fspl_reference(d0, lambda);
    } else {
        const auto anchor =
            std::min_element(samples.begin(), samples.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
        m.d_ref = anchor->first;
        m.pl_ref = anchor->second;
    }
    double sww = 0.0, swy = 0.0;
    for (const auto& [d, pl] : samples) {
        const double w = 10.0 * std::log10(d / m.d_ref);
        sww += w * w;
        swy += w * (pl - m.pl_ref);
    }
    if (sww <= 0.0) throw std::invalid_argument("fit_ci: samples do not span distance");
    m.n_ple = swy / sww;
    double ss = 0.0;
    for (const auto& [d, pl] : samples) {
        const double r = pl - m.pl_ref - 10.0 * m.n_ple * std::log10(d / m.d_ref);
        ss += r * r;
    }
    m.sigma_x = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    return m;
}

struct CiPair {
    CiModel los;
    CiModel nlos;
};

// ---------------------------------------------------------------------------
// LoS probability.
// ---------------------------------------------------------------------------

inline constexpr double p_los_near = 18.0;   // certain-LoS radius [m]
inline constexpr double p_los_decay = 63.0;  // exponential decay length [m]

// Urban-macro LoS probability as a function of horizontal distance.
inline double p_los(double d_2d) {
    if (d_2d < 0.0) throw std::domain_error("p_los: negative distance");
    if (d_2d <= p_los_near) return 1.0;
    const double r = p_los_near / d_2d;
    return r + std::exp(-d_2d / p_los_decay) * (1.0 - r);
}

inline Condition classify(double d_2d, Rng& rng) {
    return rng.uniform() < p_los(d_2d) ? Condition::los : Condition::nlos;
}

// ---------------------------------------------------------------------------
// Sample extraction and the open-area raster.
// ---------------------------------------------------------------------------

struct PlSample {
    double d_3d;   // [m]
    double pl_db;  // path loss excluding receive gain [dB]
    bool los;      // geometric visibility label
};

// Path-loss samples from a simulated coverage map: PL = G_R [dB] - P_unit
// [dB], labelled LoS by direct-ray visibility. Floor-valued cells carry no
// path and are skipped.
// Strips both antenna contributions so pl_db is a pure propagation loss
// comparable with the free-space anchor. g_t is the transmit array gain
// (coherent beamforming over m identical elements contributes a factor m).
inline std::vector<PlSample> extract_pl_samples(const Scene& scene, const GridSpec& grid,
                                                const SampleMap& samples, const Vec3& p_b,
                                                double g_t, double g_r) {
    std::vector<PlSample> out;
    out.reserve(samples.size());
    for (const auto& [cell, s] : samples) {
        if (s.p_db <= p_floor_db) continue;
        const Vec3 u = grid.center3(cell.first, cell.second);
        PlSample ps;
        ps.d_3d = (u - p_b).norm();
        ps.pl_db = lin_to_db(g_t * g_r) - s.p_db;
        ps.los = !scene.accel.occluded(p_b, u);
        out.push_back(ps);
    }
    return out;
}

inline std::vector<std::pair<double, double>> select_condition(const std::vector<PlSample>& all,
                                                               Condition cond) {
    std::vector<std::pair<double, double>> out;
    for (const auto& s : all)
        if (s.los == (cond == Condition::los)) out.emplace_back(s.d_3d, s.pl_db);
    return out;
}

namespace detail {

inline constexpr std::uint64_t ci_stream = 0x6369ULL;

}  // namespace detail

// Open-area unit-EIRP raster under the CI pair: every cell draws its LoS
// state from the distance-dependent probability and a shadowing term from
// the fitted std, both frozen per (seed, cell) so the raster is reproducible
// and order-independent. The equivalent field assumes the same plane-wave
// aperture relation the network model uses.
inline Raster ci_unit_raster(const CiPair& models, const GridSpec& grid, const CellMask& mask,
                             const Vec3& p_b, double g_t, double g_r,
                             const CarrierSpec& carrier, std::uint64_t seed) {
    Raster r;
    r.nx = grid.nx();
    r.ny = grid.ny();
    const std::size_t n = static_cast<std::size_t>(r.nx) * r.ny;
    r.p_db.assign(n, p_floor_db);
    r.e_db.assign(n, e_floor_db);
    r.mask = mask.building;
    r.fallback.assign(n, 0);
    r.simulated = 0;
    const double zf_over_ae = z_f0 / effective_aperture(carrier, g_r);
    for (int iy = 0; iy < r.ny; ++iy) {
        for (int ix = 0; ix < r.nx; ++ix) {
            const std::size_t i = r.idx(ix, iy);
            const Vec3 u = grid.center3(ix, iy);
            const double d_2d = std::hypot(u.x - p_b.x, u.y - p_b.y);
            const double d_3d = std::max((u - p_b).norm(), 1e-3);
            // Draws are frozen per (seed, transmitter, cell): revisiting a
            // candidate reproduces its raster, distinct transmitters do not
            // share shadowing.
            Rng rng = Rng::substream(
                seed, {detail::ci_stream, static_cast<std::uint64_t>(i),
                       static_cast<std::uint64_t>(std::llround(p_b.x * 8.0)),
                       static_cast<std::uint64_t>(std::llround(p_b.y * 8.0))});
            const CiModel& m = classify(d_2d, rng) == Condition::los ? models.los : models.nlos;
            const double pl = m.pl(d_3d) + rng.normal(0.0, m.sigma_x);
            r.p_db[i] = lin_to_db(g_t * g_r) - pl;
            r.e_db[i] = vm_to_dbuvm(std::sqrt(zf_over_ae * db_to_lin(r.p_db[i])));
            ++r.simulated;
        }
    }
    return r;
}

}  // namespace emtrace
