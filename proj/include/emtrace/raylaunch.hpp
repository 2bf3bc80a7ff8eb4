// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "emfield.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "scene.hpp"

// Deterministic multipath solver. Specular paths come from shooting and
// bouncing rays (Fibonacci direction lattice, adaptive capture sphere) and
// are replaced by their exact image-method reconstruction before any field
// is computed. Diffraction paths are found directly per wedge via Fermat's
// principle, so they need no ray budget. Given the same scene, endpoints and
// configuration, the path list is bit-identical run to run.

namespace emtrace {

struct LaunchConfig {
    std::uint64_t m_dim = 10'000'000;  // launch direction count
    double rx_radius = 0.0;            // fixed capture radius; 0 selects the adaptive rule
    double rx_radius_floor = 0.1;      // lower bound of the adaptive radius [m]
    int d_tr_max = 5;                  // reflections per ray
    int max_diffractions = 2;          // 0, 1 or 2 diffraction hops per path
    bool allow_mixed = false;          // one reflection combined with one diffraction
    std::uint64_t seed = 1;            // rotates the direction lattice
    unsigned workers = 0;              // 0: hardware concurrency
};

// ---------------------------------------------------------------------------
// Launch directions.
// ---------------------------------------------------------------------------

namespace detail {

// Area-uniform Fibonacci lattice. Even counts are built as antipodal pairs of
// a half-count lattice on the upper hemisphere, which keeps the set exactly
// symmetric (zero mean direction) at the same nearest-neighbour spacing.
struct DirectionSet {
    std::uint64_t m;
    Mat3 rot;

    DirectionSet(std::uint64_t m_dim, std::uint64_t seed) : m(m_dim) {
        if (m == 0) throw std::invalid_argument("DirectionSet: m_dim must be positive");
        Rng rng = Rng::substream(seed, {0x64697273ull});
        const double z = rng.uniform(-1.0, 1.0);
        const double az = rng.uniform(0.0, 2.0 * pi);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Vec3 axis{r * std::cos(az), r * std::sin(az), z};
        rot = Mat3::axis_angle(axis, rng.uniform(0.0, 2.0 * pi));
    }

    Vec3 operator[](std::uint64_t i) const {
        static const double golden = pi * (3.0 - std::sqrt(5.0));
        Vec3 p;
        if (m % 2 == 0) {
            const std::uint64_t half = m / 2;
            const std::uint64_t k = i / 2;
            const double z = 1.0 - (2.0 * double(k) + 1.0) / (2.0 * double(half));
            const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double az = std::fmod(double(k) * golden, 2.0 * pi);
            p = {rad * std::cos(az), rad * std::sin(az), z};
            if (i % 2 == 1) p = -p;
        } else {
            const double z = 1.0 - (2.0 * double(i) + 1.0) / double(m);
            const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double az = std::fmod(double(i) * golden, 2.0 * pi);
            p = {rad * std::cos(az), rad * std::sin(az), z};
        }
        return (rot * p).normalized();
    }
};

}  // namespace detail

inline std::vector<Vec3> generate_directions(std::uint64_t m_dim, std::uint64_t seed) {
    detail::DirectionSet set(m_dim, seed);
    std::vector<Vec3> dirs(m_dim);
    for (std::uint64_t i = 0; i < m_dim; ++i) dirs[i] = set[i];
    return dirs;
}

// Capture radius at accumulated path length s. The adaptive rule matches the
// angular spacing of the direction lattice so neighbouring rays overlap at
// the receiver, with a floor for very short paths.
inline double capture_radius(const LaunchConfig& cfg, double s) {
    if (cfg.rx_radius > 0.0) return cfg.rx_radius;
    return std::max(cfg.rx_radius_floor, s * std::sqrt(4.0 * pi / double(cfg.m_dim)));
}

// ---------------------------------------------------------------------------
// Shooting and bouncing.
// ---------------------------------------------------------------------------

// One captured ray: the ordered list of reflecting triangles and the
// accumulated length at the closest approach to the receiver.
struct HitChain {
    std::vector<std::uint32_t> tris;
    double s_t = 0.0;
};

namespace detail {

inline std::optional<HitChain> trace_one(const Scene& scene, const Vec3& p_t, const Vec3& p_r,
                                         const LaunchConfig& cfg, Vec3 d) {
    Vec3 o = p_t;
    double s_acc = 0.0;
    std::vector<std::uint32_t> tris;
    for (;;) {
        const auto hit = scene.accel.first_hit(o, d);
        const double t_seg = hit ? hit->t : std::numeric_limits<double>::infinity();
        // Closest approach to the receiver on this segment. Approaches past
        // the end of the segment belong to the wall behind it, not to us.
        const double t_star = (p_r - o).dot(d);
        if (t_star >= 0.0 && t_star <= t_seg) {
            const double dist = (o + d * t_star - p_r).norm();
            if (dist <= capture_radius(cfg, s_acc + t_star)) return HitChain{tris, s_acc + t_star};
        }
        if (!hit || static_cast<int>(tris.size()) >= cfg.d_tr_max) return std::nullopt;
        tris.push_back(hit->tri);
        s_acc += hit->t;
        const Vec3 n = scene.mesh.normals[hit->tri];
        d = (d - 2.0 * d.dot(n) * n).normalized();
        o = hit->point;
    }
}

}  // namespace detail

inline std::vector<HitChain> shoot(const Scene& scene, const Vec3& p_t, const Vec3& p_r,
                                   const LaunchConfig& cfg) {
    const detail::DirectionSet dirs(cfg.m_dim, cfg.seed);
    // Fixed block decomposition: the merge order is independent of the
    // worker count, so the result is too.
    const std::size_t blocks = std::min<std::uint64_t>(128, cfg.m_dim);
    std::vector<std::vector<HitChain>> found(blocks);
    const std::uint64_t chunk = (cfg.m_dim + blocks - 1) / blocks;
    const unsigned workers = cfg.workers ? cfg.workers : default_workers();
    parallel_for(blocks, workers, [&](std::size_t b) {
        const std::uint64_t lo = b * chunk;
        const std::uint64_t hi = std::min<std::uint64_t>(cfg.m_dim, lo + chunk);
        for (std::uint64_t i = lo; i < hi; ++i) {
            if (auto c = detail::trace_one(scene, p_t, p_r, cfg, dirs[i])) {
                found[b].push_back(std::move(*c));
            }
        }
    });
    std::vector<HitChain> all;
    for (auto& f : found)
        for (auto& c : f) all.push_back(std::move(c));
    return all;
}

// ---------------------------------------------------------------------------
// Canonical path geometry.
// ---------------------------------------------------------------------------

enum class PathKind { los, reflection, diffraction, mixed };

struct PathHop {
    enum Kind : std::uint8_t { reflect, diffract } kind;
    std::uint32_t id;  // triangle index (reflect) or wedge index (diffract)
    Vec3 point;
};

struct GeoPath {
    PathKind kind;
    std::vector<PathHop> hops;
    double length;
};

namespace detail {

struct TriPlane {
    Vec3 n;
    double d;  // plane: n . x = d
};

inline TriPlane tri_plane(const Scene& scene, std::uint32_t tri) {
    const Vec3 n = scene.mesh.normals[tri];
    return {n, n.dot(scene.mesh.vertex(tri, 0))};
}

inline Vec3 mirror(const Vec3& p, const TriPlane& pl) {
    return p - pl.n * (2.0 * (pl.n.dot(p) - pl.d));
}

inline bool inside_triangle(const Scene& scene, std::uint32_t tri, const Vec3& p) {
    const Vec3 a = scene.mesh.vertex(tri, 0);
    const Vec3 e0 = scene.mesh.vertex(tri, 1) - a;
    const Vec3 e1 = scene.mesh.vertex(tri, 2) - a;
    const Vec3 w = p - a;
    const double d00 = e0.dot(e0), d01 = e0.dot(e1), d11 = e1.dot(e1);
    const double w0 = w.dot(e0), w1 = w.dot(e1);
    const double det = d00 * d11 - d01 * d01;
    if (det <= 0.0) return false;
    const double u = (d11 * w0 - d01 * w1) / det;
    const double v = (d00 * w1 - d01 * w0) / det;
    return u >= -1e-9 && v >= -1e-9 && u + v <= 1.0 + 1e-9;
}

// Exact specular path through an ordered triangle sequence via the image
// method. Fails (nullopt) when the specular point leaves its triangle or any
// leg is blocked; those chains are capture-sphere artefacts.
inline std::optional<GeoPath> reconstruct_reflection(const Scene& scene, const Vec3& p_t,
                                                     const Vec3& p_r,
                                                     const std::vector<std::uint32_t>& tris) {
    const std::size_t k = tris.size();
    std::vector<TriPlane> planes(k);
    std::vector<Vec3> images(k);
    Vec3 img = p_t;
    for (std::size_t i = 0; i < k; ++i) {
        planes[i] = tri_plane(scene, tris[i]);
        img = mirror(img, planes[i]);
        images[i] = img;
    }
    std::vector<Vec3> pts(k);
    Vec3 cur = p_r;
    for (std::size_t i = k; i-- > 0;) {
        const Vec3 seg = images[i] - cur;
        const double denom = planes[i].n.dot(seg);
        if (std::abs(denom) < 1e-12) return std::nullopt;
        const double t = (planes[i].d - planes[i].n.dot(cur)) / denom;
        if (t <= 0.0 || t >= 1.0) return std::nullopt;
        pts[i] = cur + seg * t;
        if (!inside_triangle(scene, tris[i], pts[i])) return std::nullopt;
        cur = pts[i];
    }
    GeoPath g;
    g.kind = PathKind::reflection;
    g.hops.reserve(k);
    double len = (pts[0] - p_t).norm();
    for (std::size_t i = 0; i < k; ++i) {
        g.hops.push_back({PathHop::reflect, tris[i], pts[i]});
        len += ((i + 1 < k ? pts[i + 1] : p_r) - pts[i]).norm();
    }
    g.length = len;
    Vec3 prev = p_t;
    for (std::size_t i = 0; i <= k; ++i) {
        const Vec3 next = i < k ? pts[i] : p_r;
        if (scene.accel.occluded(prev, next)) return std::nullopt;
        prev = next;
    }
    return g;
}

inline std::vector<std::int64_t> quantize_points(const std::vector<PathHop>& hops) {
    std::vector<std::int64_t> key;
    key.reserve(hops.size() * 4);
    for (const auto& h : hops) {
        key.push_back(h.kind);
        key.push_back(std::llround(h.point.x * 1e6));
        key.push_back(std::llround(h.point.y * 1e6));
        key.push_back(std::llround(h.point.z * 1e6));
    }
    return key;
}

}  // namespace detail

// Collapse raw capture chains to exact specular paths: group by triangle
// sequence keeping the least-time representative, reconstruct each group with
// the image method, then drop duplicates whose specular points coincide
// (adjacent coplanar triangles tiling one wall).
inline std::vector<GeoPath> dedupe_least_time(const Scene& scene, const Vec3& p_t, const Vec3& p_r,
                                              const std::vector<HitChain>& chains) {
    std::map<std::vector<std::uint32_t>, double> groups;
    for (const auto& c : chains) {
        auto [it, fresh] = groups.emplace(c.tris, c.s_t);
        if (!fresh) it->second = std::min(it->second, c.s_t);
    }
    std::vector<GeoPath> out;
    std::map<std::vector<std::int64_t>, std::size_t> seen;
    for (const auto& [tris, s_t] : groups) {
        std::optional<GeoPath> g;
        if (tris.empty()) {
            if (!scene.accel.occluded(p_t, p_r))
                g = GeoPath{PathKind::los, {}, (p_r - p_t).norm()};
        } else {
            g = detail::reconstruct_reflection(scene, p_t, p_r, tris);
        }
        if (!g) continue;
        auto key = detail::quantize_points(g->hops);
        auto [it, fresh] = seen.emplace(std::move(key), out.size());
        if (fresh) {
            out.push_back(std::move(*g));
        } else if (g->length < out[it->second].length - 1e-12) {
            out[it->second] = std::move(*g);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Diffraction path geometry.
// ---------------------------------------------------------------------------

struct FermatResult {
    double t;         // parameter on the edge, 0 at a
    Vec3 point;
    bool boundary;    // minimum clamped to an endpoint (no stationary point)
    bool degenerate;  // an endpoint lies on the edge line
};

namespace detail {

// d/dt [ |p_a - e(t)| + |e(t) - p_b| ] for e(t) = a + t ab.
inline double fermat_deriv(const Vec3& a, const Vec3& ab, const Vec3& p_a, const Vec3& p_b,
                           double t) {
    const Vec3 e = a + ab * t;
    const Vec3 u = e - p_a;
    const Vec3 v = e - p_b;
    return u.dot(ab) / u.norm() + v.dot(ab) / v.norm();
}

inline double fermat_len(const Vec3& a, const Vec3& ab, const Vec3& p_a, const Vec3& p_b,
                         double t) {
    const Vec3 e = a + ab * t;
    return (e - p_a).norm() + (e - p_b).norm();
}

}  // namespace detail

// Least-time point on segment [a, b] between p_a and p_b. The length is
// strictly convex in t when neither endpoint sits on the edge line, so a
// golden-section bracket followed by a Newton polish on the derivative
// converges to |f'(t*)| < 1e-10 whenever the minimum is interior.
inline FermatResult fermat_diffraction_point(const Vec3& a, const Vec3& b, const Vec3& p_a,
                                             const Vec3& p_b) {
    const Vec3 ab = b - a;
    const double len = ab.norm();
    if (len < 1e-12) throw std::invalid_argument("fermat_diffraction_point: zero-length edge");
    if ((p_a - a).cross(ab).norm() / len < 1e-9 || (p_b - a).cross(ab).norm() / len < 1e-9)
        return {0.0, a, false, true};

    // Endpoint derivative signs decide boundary minima outright (f' is
    // increasing).
    if (detail::fermat_deriv(a, ab, p_a, p_b, 0.0) >= 0.0) return {0.0, a, true, false};
    if (detail::fermat_deriv(a, ab, p_a, p_b, 1.0) <= 0.0) return {1.0, b, true, false};

    double lo = 0.0, hi = 1.0;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = detail::fermat_len(a, ab, p_a, p_b, x1);
    double f2 = detail::fermat_len(a, ab, p_a, p_b, x2);
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
        if (f1 < f2) {
            hi = x2, x2 = x1, f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = detail::fermat_len(a, ab, p_a, p_b, x1);
        } else {
            lo = x1, x1 = x2, f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = detail::fermat_len(a, ab, p_a, p_b, x2);
        }
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        const Vec3 e = a + ab * t;
        const Vec3 u = e - p_a;
        const Vec3 v = e - p_b;
        const double un = u.norm(), vn = v.norm();
        const double g = u.dot(ab) / un + v.dot(ab) / vn;
        const double gu = ab.dot(ab) / un - (u.dot(ab) * u.dot(ab)) / (un * un * un);
        const double gv = ab.dot(ab) / vn - (v.dot(ab) * v.dot(ab)) / (vn * vn * vn);
        const double h = gu + gv;
        if (std::abs(g) < 1e-14 || h <= 0.0) break;
        t = std::clamp(t - g / h, 0.0, 1.0);
    }
    return {t, a + ab * t, false, false};
}

namespace detail {

// Incidence geometry of a diffraction hop: skew angle against the edge (kept
// in (0, pi/2] since only sin enters the coefficients) and the exterior
// azimuths of the back-to-source and on-to-observer directions.
struct WedgeAngles {
    double beta;
    double phi_p;
    double phi;
    bool valid;
};

inline WedgeAngles wedge_angles(const Wedge& w, const Vec3& q, const Vec3& from, const Vec3& to) {
    WedgeAngles r{};
    const Vec3 d_in = (q - from).normalized();
    const double cb = std::clamp(d_in.dot(w.e), -1.0, 1.0);
    const double beta = std::acos(cb);
    r.beta = std::min(beta, pi - beta);
    if (r.beta < 1e-9) return r;  // propagation along the edge
    r.phi_p = w.azimuth(from - q);
    r.phi = w.azimuth(to - q);
    const double lim = w.n * pi + 1e-9;
    if (r.phi_p > lim || r.phi > lim) return r;  // inside the wedge material
    r.phi_p = std::clamp(r.phi_p, 0.0, w.n * pi);
    r.phi = std::clamp(r.phi, 0.0, w.n * pi);
    r.valid = true;
    return r;
}

}  // namespace detail

// Wedge pairs whose midpoints see each other; the candidate set for
// second-order diffraction. Purely scene-dependent, so computed once.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> visible_edge_pairs(
    const Scene& scene) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    const auto& ws = scene.wedges;
    for (std::uint32_t i = 0; i < ws.size(); ++i) {
        for (std::uint32_t j = i + 1; j < ws.size(); ++j) {
            if (!scene.accel.occluded(ws[i].midpoint(), ws[j].midpoint()))
                pairs.emplace_back(i, j);
        }
    }
    return pairs;
}

namespace detail {

inline std::optional<GeoPath> first_order_path(const Scene& scene, std::uint32_t wi,
                                               const Vec3& p_t, const Vec3& p_r) {
    const Wedge& w = scene.wedges[wi];
    const FermatResult fr = fermat_diffraction_point(w.a, w.b, p_t, p_r);
    if (fr.degenerate || fr.boundary) return std::nullopt;
    const auto ang = wedge_angles(w, fr.point, p_t, p_r);
    if (!ang.valid) return std::nullopt;
    if (scene.accel.occluded(p_t, fr.point) || scene.accel.occluded(fr.point, p_r))
        return std::nullopt;
    GeoPath g;
    g.kind = PathKind::diffraction;
    g.hops = {{PathHop::diffract, wi, fr.point}};
    g.length = (fr.point - p_t).norm() + (p_r - fr.point).norm();
    return g;
}

// Warm-started safeguarded Newton on the (monotone) derivative. Interior
// solutions only; endpoint derivative signs reject boundary minima first.
inline std::optional<double> fermat_refine(const Vec3& a, const Vec3& ab, const Vec3& p_a,
                                           const Vec3& p_b, double t) {
    if (fermat_deriv(a, ab, p_a, p_b, 0.0) >= 0.0) return std::nullopt;
    if (fermat_deriv(a, ab, p_a, p_b, 1.0) <= 0.0) return std::nullopt;
    double lo = 0.0, hi = 1.0;
    t = std::clamp(t, 0.0, 1.0);
    for (int it = 0; it < 60; ++it) {
        const Vec3 e = a + ab * t;
        const Vec3 u = e - p_a, v = e - p_b;
        const double un = u.norm(), vn = v.norm();
        if (un < 1e-12 || vn < 1e-12) return std::nullopt;
        const double g = u.dot(ab) / un + v.dot(ab) / vn;
        if (std::abs(g) < 1e-12) return t;
        (g < 0.0 ? lo : hi) = t;
        const double gu = ab.dot(ab) / un - (u.dot(ab) * u.dot(ab)) / (un * un * un);
        const double gv = ab.dot(ab) / vn - (v.dot(ab) * v.dot(ab)) / (vn * vn * vn);
        const double h = gu + gv;
        double tn = h > 0.0 ? t - g / h : 0.5 * (lo + hi);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) < 1e-15) return tn;
        t = tn;
    }
    return t;
}

// Joint Fermat point on an ordered pair of edges by alternating 1D solves;
// the total length is convex in (t1, t2), so alternation contracts to the
// unique minimum. Returns interior solutions only.
inline std::optional<std::pair<double, double>> fermat_pair(const Wedge& w1, const Wedge& w2,
                                                            const Vec3& p_t, const Vec3& p_r) {
    const FermatResult r1 = fermat_diffraction_point(w1.a, w1.b, p_t, w2.midpoint());
    if (r1.degenerate) return std::nullopt;
    const FermatResult r2 = fermat_diffraction_point(w2.a, w2.b, w1.point(r1.t), p_r);
    if (r2.degenerate || r2.boundary) return std::nullopt;
    double t1 = r1.t, t2 = r2.t;
    const Vec3 ab1 = w1.b - w1.a, ab2 = w2.b - w2.a;
    for (int it = 0; it < 60; ++it) {
        const auto n1 = fermat_refine(w1.a, ab1, p_t, w2.point(t2), t1);
        if (!n1) return std::nullopt;
        const auto n2 = fermat_refine(w2.a, ab2, w1.point(*n1), p_r, t2);
        if (!n2) return std::nullopt;
        const double moved = std::abs(*n1 - t1) + std::abs(*n2 - t2);
        t1 = *n1;
        t2 = *n2;
        if (moved < 1e-13) break;
    }
    return std::make_pair(t1, t2);
}

inline std::optional<GeoPath> second_order_path(const Scene& scene, std::uint32_t wi,
                                                std::uint32_t wj, const Vec3& p_t,
                                                const Vec3& p_r) {
    const Wedge& w1 = scene.wedges[wi];
    const Wedge& w2 = scene.wedges[wj];
    const auto ts = fermat_pair(w1, w2, p_t, p_r);
    if (!ts) return std::nullopt;
    const Vec3 q1 = w1.point(ts->first);
    const Vec3 q2 = w2.point(ts->second);
    if ((q2 - q1).norm() < 1e-6) return std::nullopt;  // edges meeting at a corner
    if (!wedge_angles(w1, q1, p_t, q2).valid) return std::nullopt;
    if (!wedge_angles(w2, q2, q1, p_r).valid) return std::nullopt;
    if (scene.accel.occluded(p_t, q1) || scene.accel.occluded(q1, q2) ||
        scene.accel.occluded(q2, p_r))
        return std::nullopt;
    GeoPath g;
    g.kind = PathKind::diffraction;
    g.hops = {{PathHop::diffract, wi, q1}, {PathHop::diffract, wj, q2}};
    g.length = (q1 - p_t).norm() + (q2 - q1).norm() + (p_r - q2).norm();
    return g;
}

// One reflection and one diffraction in either order, solved by unfolding
// the reflection with the image method and running Fermat against the image.
inline void mixed_paths(const Scene& scene, const Vec3& p_t, const Vec3& p_r,
                        std::vector<GeoPath>& out) {
    const auto& ws = scene.wedges;
    for (std::uint32_t ti = 0; ti < scene.mesh.tris.size(); ++ti) {
        const TriPlane pl = tri_plane(scene, ti);
        const Vec3 img_t = mirror(p_t, pl);
        const Vec3 img_r = mirror(p_r, pl);
        for (std::uint32_t wi = 0; wi < ws.size(); ++wi) {
            const Wedge& w = ws[wi];
            if (w.face0 == ti || w.facen == ti) continue;
            // reflection first: Tx -> triangle -> edge -> Rx
            {
                const FermatResult fr = fermat_diffraction_point(w.a, w.b, img_t, p_r);
                if (!fr.degenerate && !fr.boundary) {
                    const Vec3 q = fr.point;
                    const Vec3 seg = q - img_t;
                    const double denom = pl.n.dot(seg);
                    if (std::abs(denom) > 1e-12) {
                        const double tt = (pl.d - pl.n.dot(img_t)) / denom;
                        if (tt > 0.0 && tt < 1.0) {
                            const Vec3 rp = img_t + seg * tt;
                            if (inside_triangle(scene, ti, rp) && (q - rp).norm() > 1e-6 &&
                                wedge_angles(w, q, rp, p_r).valid &&
                                !scene.accel.occluded(p_t, rp) && !scene.accel.occluded(rp, q) &&
                                !scene.accel.occluded(q, p_r)) {
                                GeoPath g;
                                g.kind = PathKind::mixed;
                                g.hops = {{PathHop::reflect, ti, rp}, {PathHop::diffract, wi, q}};
                                g.length = (rp - p_t).norm() + (q - rp).norm() + (p_r - q).norm();
                                out.push_back(std::move(g));
                            }
                        }
                    }
                }
            }
            // diffraction first: Tx -> edge -> triangle -> Rx
            {
                const FermatResult fr = fermat_diffraction_point(w.a, w.b, p_t, img_r);
                if (!fr.degenerate && !fr.boundary) {
                    const Vec3 q = fr.point;
                    const Vec3 seg = img_r - q;
                    const double denom = pl.n.dot(seg);
                    if (std::abs(denom) > 1e-12) {
                        const double tt = (pl.d - pl.n.dot(q)) / denom;
                        if (tt > 0.0 && tt < 1.0) {
                            const Vec3 rp = q + seg * tt;
                            if (inside_triangle(scene, ti, rp) && (rp - q).norm() > 1e-6 &&
                                wedge_angles(w, q, p_t, rp).valid &&
                                !scene.accel.occluded(p_t, q) && !scene.accel.occluded(q, rp) &&
                                !scene.accel.occluded(rp, p_r)) {
                                GeoPath g;
                                g.kind = PathKind::mixed;
                                g.hops = {{PathHop::diffract, wi, q}, {PathHop::reflect, ti, rp}};
                                g.length = (q - p_t).norm() + (rp - q).norm() + (p_r - rp).norm();
                                out.push_back(std::move(g));
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail

// All first- and (optionally) second-order diffraction paths between two
// points. Fermat points are solved per wedge ignoring the rest of the scene,
// then every leg is occlusion-tested.
inline std::vector<GeoPath> diffraction_paths(
    const Scene& scene, const Vec3& p_t, const Vec3& p_r, const LaunchConfig& cfg,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edge_pairs) {
    std::vector<GeoPath> out;
    if (cfg.max_diffractions < 1) return out;
    for (std::uint32_t wi = 0; wi < scene.wedges.size(); ++wi) {
        if (auto g = detail::first_order_path(scene, wi, p_t, p_r)) out.push_back(std::move(*g));
    }
    if (cfg.max_diffractions >= 2) {
        for (const auto& [i, j] : edge_pairs) {
            if (auto g = detail::second_order_path(scene, i, j, p_t, p_r))
                out.push_back(std::move(*g));
            if (auto g = detail::second_order_path(scene, j, i, p_t, p_r))
                out.push_back(std::move(*g));
        }
    }
    if (cfg.allow_mixed) detail::mixed_paths(scene, p_t, p_r, out);
    return out;
}

// ---------------------------------------------------------------------------
// Field propagation along canonical paths.
// ---------------------------------------------------------------------------

struct RayPath {
    PathKind kind;
    std::vector<PathHop> hops;
    double s = 0.0;            // total path length [m]
    double tau = 0.0;          // propagation delay [s]
    Vec3 dep_dir;              // global departure direction at the Tx
    Vec3 arr_dir;              // global direction from the Rx back along the path
    double theta_t = 0.0, phi_t = 0.0;  // departure angles, Tx antenna frame
    double theta_r = 0.0, phi_r = 0.0;  // arrival angles, Rx antenna frame
    // Polarimetric transfer on the (theta, phi) antenna bases with the bulk
    // phase e^{-j k0 s} removed. Rows select the Rx component, columns the
    // Tx excitation. Spreading (1/m units) is included.
    std::array<std::array<cplx, 2>, 2> t_m{};
    CVec3 field;  // E at the receiver, global Cartesian, peak phasor [V/m]
    cplx v_r;     // open-circuit voltage at the Rx antenna [V]
};

// Precomputed per-scene tracing context. Construction cost is dominated by
// the wedge pair visibility scan, so share one Tracer across all queries on
// the same scene.
struct Tracer {
    const Scene* scene;
    CarrierSpec carrier;
    LaunchConfig config;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_pairs;

    Tracer(const Scene& sc, const CarrierSpec& c, const LaunchConfig& cfg)
        : scene(&sc), carrier(c), config(cfg) {
        if (cfg.max_diffractions >= 2 && !sc.wedges.empty()) edge_pairs = visible_edge_pairs(sc);
    }
};

// Geometry of every path between two points, deterministically ordered.
inline std::vector<GeoPath> trace_geometry(const Tracer& tr, const Vec3& p_t, const Vec3& p_r) {
    const Scene& scene = *tr.scene;
    if ((p_r - p_t).norm() < 1e-9)
        throw std::invalid_argument("trace_geometry: endpoints coincide");
    std::vector<GeoPath> paths;
    if (scene.mesh.tris.empty()) {
        paths.push_back({PathKind::los, {}, (p_r - p_t).norm()});
    } else {
        paths = dedupe_least_time(scene, p_t, p_r, shoot(scene, p_t, p_r, tr.config));
        auto diff = diffraction_paths(scene, p_t, p_r, tr.config, tr.edge_pairs);
        paths.insert(paths.end(), std::make_move_iterator(diff.begin()),
                     std::make_move_iterator(diff.end()));
    }
    std::sort(paths.begin(), paths.end(), [](const GeoPath& a, const GeoPath& b) {
        if (a.length != b.length) return a.length < b.length;
        if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size();
        for (std::size_t i = 0; i < a.hops.size(); ++i) {
            if (a.hops[i].kind != b.hops[i].kind) return a.hops[i].kind < b.hops[i].kind;
            if (a.hops[i].id != b.hops[i].id) return a.hops[i].id < b.hops[i].id;
        }
        return false;
    });
    return paths;
}

namespace detail {

// Wavefront bookkeeping through an interaction chain. Spherical wavefronts
// stay spherical across planar reflections (image method, exact); an edge
// diffraction leaves an astigmatic pencil whose two caustic distances are
// carried so later reflections keep the exact spreading. A second
// diffraction takes the distance from the previous edge as its spreading
// reference.
struct Wavefront {
    bool pencil = false;
    double r = 0.0;    // spherical: distance from the (virtual) source
    double s_e = 0.0;  // pencil: distance from the edge caustic
    double s_f = 0.0;  // pencil: distance from the far caustic
};

inline PolarizedField walk_path(const Scene& scene, const CarrierSpec& carrier, const GeoPath& geo,
                                const Vec3& p_t, const Vec3& p_r, PolarizedField f) {
    Wavefront wf;
    wf.r = ((geo.hops.empty() ? p_r : geo.hops[0].point) - p_t).norm();
    for (std::size_t i = 0; i < geo.hops.size(); ++i) {
        const PathHop& hop = geo.hops[i];
        const Vec3 next = i + 1 < geo.hops.size() ? geo.hops[i + 1].point : p_r;
        const double delta = (next - hop.point).norm();
        if (hop.kind == PathHop::reflect) {
            const Vec3 n = scene.mesh.normals[hop.id];
            const Material& mat = scene.material_of(hop.id);
            if (!wf.pencil) {
                f = apply_reflection(carrier, f, n, mat, wf.r, delta);
                wf.r += delta;
            } else {
                const cplx factor = std::sqrt((wf.s_e * wf.s_f) /
                                              ((wf.s_e + delta) * (wf.s_f + delta))) *
                                    path_phase(carrier, delta);
                f = apply_reflection_factor(f, n, mat, factor);
                wf.s_e += delta;
                wf.s_f += delta;
            }
        } else {
            const Wedge& w = scene.wedges[hop.id];
            const Vec3 d_out = (next - hop.point).normalized();
            const Vec3 back = hop.point - f.dir;  // one metre back along the incoming ray
            const auto ang = wedge_angles(w, hop.point, back, next);
            if (!ang.valid)
                throw std::runtime_error("walk_path: diffraction geometry left the wedge exterior");
            const double s_ref = wf.pencil ? wf.s_e : wf.r;
            const auto coef =
                utd_coefficients(carrier, w.n, scene.material_of(w.face0),
                                 scene.material_of(w.facen), s_ref, delta, ang.beta, ang.phi,
                                 ang.phi_p);
            f = apply_diffraction(carrier, f, w.e, d_out, coef, s_ref, delta);
            wf = {true, 0.0, delta, s_ref + delta};
        }
    }
    return f;
}

}  // namespace detail

// Full multipath solve: canonical geometry, then per-path polarimetric
// transfer, receiver field and open-circuit voltage for the given antennas.
// Paths come back sorted by |v_r| descending.
inline std::vector<RayPath> compute_multipath(const Tracer& tr, const AntennaSpec& tx_ant,
                                              const Vec3& p_tx, const AntennaSpec& rx_ant,
                                              const Vec3& p_rx, double p_t) {
    const Scene& scene = *tr.scene;
    const auto geos = trace_geometry(tr, p_tx, p_rx);
    std::vector<RayPath> out;
    out.reserve(geos.size());
    const cplx j_unit(0.0, 1.0);
    for (const auto& geo : geos) {
        RayPath rp;
        rp.kind = geo.kind;
        rp.hops = geo.hops;
        rp.s = geo.length;
        rp.tau = geo.length / c0;

        const Vec3 first = geo.hops.empty() ? p_rx : geo.hops.front().point;
        const Vec3 last = geo.hops.empty() ? p_tx : geo.hops.back().point;
        rp.dep_dir = (first - p_tx).normalized();
        rp.arr_dir = (last - p_rx).normalized();
        const double s1 = (first - p_tx).norm();

        const SphericalFrame sf_t = spherical_frame(tx_ant.orientation, rp.dep_dir);
        const SphericalFrame sf_r = spherical_frame(rx_ant.orientation, rp.arr_dir);
        rp.theta_t = sf_t.theta;
        rp.phi_t = sf_t.phi;
        rp.theta_r = sf_r.theta;
        rp.phi_r = sf_r.phi;

        // Unit theta/phi excitations through the chain give the transfer
        // matrix; the actual pattern-weighted field is a linear combination.
        CVec3 col[2];
        const cplx amp0 = path_phase(tr.carrier, s1) / s1;
        for (int c = 0; c < 2; ++c) {
            PolarizedField f0;
            f0.a = c == 0 ? amp0 : cplx{0.0, 0.0};
            f0.b = c == 1 ? amp0 : cplx{0.0, 0.0};
            f0.ua = sf_t.theta_hat;
            f0.ub = sf_t.phi_hat;
            f0.dir = rp.dep_dir;
            col[c] = to_global(detail::walk_path(scene, tr.carrier, geo, p_tx, p_rx, f0));
        }
        const cplx strip = std::exp(j_unit * tr.carrier.k0() * geo.length);
        rp.t_m[0][0] = col[0].dot_real(sf_r.theta_hat) * strip;
        rp.t_m[1][0] = col[0].dot_real(sf_r.phi_hat) * strip;
        rp.t_m[0][1] = col[1].dot_real(sf_r.theta_hat) * strip;
        rp.t_m[1][1] = col[1].dot_real(sf_r.phi_hat) * strip;

        const auto [c_theta, c_phi] = tx_ant.pattern(sf_t.theta, sf_t.phi);
        const double amp_tx = std::sqrt(p_t * tx_ant.gain * z_f0 / (2.0 * pi));
        rp.field = col[0] * (amp_tx * c_theta) + col[1] * (amp_tx * c_phi);
        rp.v_r = received_voltage(tr.carrier, rx_ant, rp.field, rp.arr_dir);
        out.push_back(std::move(rp));
    }
    std::sort(out.begin(), out.end(), [](const RayPath& a, const RayPath& b) {
        const double ma = std::abs(a.v_r), mb = std::abs(b.v_r);
        if (ma != mb) return ma > mb;
        return a.s < b.s;
    });
    return out;
}

}  // namespace emtrace
