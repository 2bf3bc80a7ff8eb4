// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "raylaunch.hpp"

// Narrowband multipath channel on top of the ray solver: per-path complex
// gains, the per-element channel vector of an antenna array sharing one ray
// solve from its reference point, and maximum-ratio transmission.

namespace emtrace {

// Centered element offsets of a uniform linear array along a unit axis.
inline std::vector<Vec3> ula_offsets(int elements, double spacing, const Vec3& axis) {
    if (elements < 1) throw std::invalid_argument("ula_offsets: need at least one element");
    std::vector<Vec3> off(elements);
    for (int e = 0; e < elements; ++e)
        off[e] = axis * ((e - 0.5 * (elements - 1)) * spacing);
    return off;
}

// Complex gain of one path between unit-power ports:
// sqrt(G_T G_R) (lambda / 4 pi) c_R^T T_m c_T e^{-j k0 s_m}.
inline cplx path_gain(const CarrierSpec& carrier, const AntennaSpec& tx_ant,
                      const AntennaSpec& rx_ant, const RayPath& p) {
    const auto [ct_t, cp_t] = tx_ant.pattern(p.theta_t, p.phi_t);
    const auto [ct_r, cp_r] = rx_ant.pattern(p.theta_r, p.phi_r);
    const cplx through = ct_r * (p.t_m[0][0] * ct_t + p.t_m[0][1] * cp_t) +
                         cp_r * (p.t_m[1][0] * ct_t + p.t_m[1][1] * cp_t);
    const double scale =
        std::sqrt(tx_ant.gain * rx_ant.gain) * carrier.lambda0() / (4.0 * pi);
    return scale * through * path_phase(carrier, p.s);
}

// Scalar channel over every path (single Tx and Rx port).
inline cplx channel_response(const CarrierSpec& carrier, const AntennaSpec& tx_ant,
                             const AntennaSpec& rx_ant, const std::vector<RayPath>& paths) {
    cplx h{0.0, 0.0};
    for (const auto& p : paths) h += path_gain(carrier, tx_ant, rx_ant, p);
    return h;
}

namespace detail {

// Strongest-first path order by |v_r| (stable against ties via path length).
inline std::vector<std::size_t> strongest(const std::vector<RayPath>& paths, std::size_t m_p) {
    std::vector<std::size_t> idx(paths.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(paths[a].v_r), mb = std::abs(paths[b].v_r);
        if (ma != mb) return ma > mb;
        return paths[a].s < paths[b].s;
    });
    idx.resize(std::min(m_p, idx.size()));
    return idx;
}

}  // namespace detail

// Per-element channel vector from one ray solve at the array reference
// point: each element picks up a plane-wave phase offset along the path's
// departure direction. Only the m_p strongest paths enter.
inline std::vector<cplx> build_h(const CarrierSpec& carrier, const AntennaSpec& tx_ant,
                                 const AntennaSpec& rx_ant, const std::vector<RayPath>& paths,
                                 const std::vector<Vec3>& offsets, std::size_t m_p = 5) {
    const auto idx = detail::strongest(paths, m_p);
    const double k0 = carrier.k0();
    std::vector<cplx> h(offsets.size(), cplx{0.0, 0.0});
    for (const std::size_t m : idx) {
        const cplx g = path_gain(carrier, tx_ant, rx_ant, paths[m]);
        for (std::size_t e = 0; e < offsets.size(); ++e) {
            // An element displaced toward the departure direction leads in
            // phase: e^{-j k0 (s - d.dr)} = e^{-j k0 s} e^{+j k0 d.dr}.
            const double shift = k0 * paths[m].dep_dir.dot(offsets[e]);
            h[e] += g * std::exp(cplx{0.0, shift});
        }
    }
    return h;
}

// Maximum-ratio transmission weights, unit total power.
inline std::vector<cplx> mrt(const std::vector<cplx>& h) {
    double norm2 = 0.0;
    for (const auto& v : h) norm2 += std::norm(v);
    if (norm2 <= 0.0) throw std::domain_error("mrt: zero channel");
    const double inv = 1.0 / std::sqrt(norm2);
    std::vector<cplx> w(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) w[i] = std::conj(h[i]) * inv;
    return w;
}

inline cplx effective_channel(const std::vector<cplx>& h, const std::vector<cplx>& w) {
    if (h.size() != w.size()) throw std::invalid_argument("effective_channel: size mismatch");
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * w[i];
    return s;
}

// Array response of a weight vector toward a global departure direction.
inline cplx array_factor(const CarrierSpec& carrier, const std::vector<cplx>& w,
                         const std::vector<Vec3>& offsets, const Vec3& dep_dir) {
    if (w.size() != offsets.size()) throw std::invalid_argument("array_factor: size mismatch");
    const double k0 = carrier.k0();
    cplx af{0.0, 0.0};
    for (std::size_t e = 0; e < offsets.size(); ++e)
        af += w[e] * std::exp(cplx{0.0, k0 * dep_dir.dot(offsets[e])});
    return af;
}

// Beamformed link sample per unit EIRP (EIRP = P_T G_T of one element; the
// array gain lives in the channel). `paths` must be computed with p_t = 1 W.
// The power uses the m_p-truncated MRT channel; the field coherently sums
// every path under the same weights, so weak paths still contribute to
// exposure.
struct BeamformedSample {
    double p_unit = 0.0;   // received power per unit EIRP [W]
    double e_unit = 0.0;   // RMS field per unit EIRP at the cell [V/m]
    int paths_used = 0;    // total path count at this point
};

inline BeamformedSample beamformed_unit_sample(const CarrierSpec& carrier,
                                               const AntennaSpec& tx_ant,
                                               const AntennaSpec& rx_ant,
                                               const std::vector<RayPath>& paths,
                                               const std::vector<Vec3>& offsets,
                                               std::size_t m_p = 5) {
    BeamformedSample out;
    out.paths_used = static_cast<int>(paths.size());
    if (paths.empty()) return out;
    const auto h = build_h(carrier, tx_ant, rx_ant, paths, offsets, m_p);
    double h2 = 0.0;
    for (const auto& v : h) h2 += std::norm(v);
    if (h2 <= 0.0) return out;
    const auto w = mrt(h);
    out.p_unit = h2 / tx_ant.gain;

    CVec3 e_sum;
    for (const auto& p : paths)
        e_sum += p.field * array_factor(carrier, w, offsets, p.dep_dir);
    out.e_unit = e_sum.norm() / std::sqrt(2.0 * tx_ant.gain);
    return out;
}

}  // namespace emtrace
