// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "vec.hpp"

namespace emtrace {

// Simple planar polygon, vertex list without repetition of the first vertex.
// Orientation is not prescribed; area() is unsigned.
struct Polygon {
    std::vector<Vec2> pts;

    std::size_t size() const { return pts.size(); }
    bool empty() const { return pts.empty(); }
};

inline double signed_area(const Polygon& p) {
    double a = 0.0;
    const std::size_t n = p.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& u = p.pts[i];
        const Vec2& v = p.pts[(i + 1) % n];
        a += u.cross(v);
    }
    return 0.5 * a;
}

inline double area(const Polygon& p) { return std::abs(signed_area(p)); }

inline Vec2 centroid(const Polygon& p) {
    // Area-weighted centroid; falls back to vertex mean for degenerate input.
    const std::size_t n = p.pts.size();
    double a = 0.0;
    Vec2 c{0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& u = p.pts[i];
        const Vec2& v = p.pts[(i + 1) % n];
        const double w = u.cross(v);
        a += w;
        c = c + (u + v) * w;
    }
    if (std::abs(a) < 1e-12) {
        Vec2 m{0, 0};
        for (const auto& q : p.pts) m = m + q;
        return m / static_cast<double>(n);
    }
    return c / (3.0 * a);
}

namespace detail {

inline double point_segment_dist2(const Vec2& q, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.norm2();
    double t = len2 > 0.0 ? (q - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 proj = a + ab * t;
    return (q - proj).norm2();
}

inline Vec2 closest_on_segment(const Vec2& q, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.norm2();
    double t = len2 > 0.0 ? (q - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return a + ab * t;
}

// Proper segment intersection test for the self-intersection check.
inline bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        const double v = (q - p).cross(r - p);
        return v > 1e-12 ? 1 : (v < -1e-12 ? -1 : 0);
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

}  // namespace detail

// Distance from q to the polygon boundary (0 only when q lies on it).
inline double boundary_distance(const Polygon& p, const Vec2& q) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = p.pts.size();
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, detail::point_segment_dist2(q, p.pts[i], p.pts[(i + 1) % n]));
    return std::sqrt(best);
}

// Closed containment: points on the boundary count as inside.
inline bool contains(const Polygon& p, const Vec2& q) {
    const std::size_t n = p.pts.size();
    if (n < 3) return false;
    if (boundary_distance(p, q) < 1e-9) return true;
    bool in = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = p.pts[i];
        const Vec2& b = p.pts[j];
        if ((a.y > q.y) != (b.y > q.y)) {
            const double xi = a.x + (q.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (q.x < xi) in = !in;
        }
    }
    return in;
}

// Distance to the set enclosed by the polygon: 0 inside, else boundary gap.
inline double distance(const Polygon& p, const Vec2& q) {
    return contains(p, q) ? 0.0 : boundary_distance(p, q);
}

// Nearest point of the enclosed set (identity inside, boundary projection
// outside). Ties resolve to the first-found edge, deterministic.
inline Vec2 closest_point(const Polygon& p, const Vec2& q) {
    if (contains(p, q)) return q;
    double best = std::numeric_limits<double>::infinity();
    Vec2 arg = q;
    const std::size_t n = p.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 c = detail::closest_on_segment(q, p.pts[i], p.pts[(i + 1) % n]);
        const double d2 = (q - c).norm2();
        if (d2 < best) {
            best = d2;
            arg = c;
        }
    }
    return arg;
}

// Throws std::invalid_argument naming the defect: fewer than 3 vertices,
// (near-)duplicate consecutive vertices, zero area, or self-intersection.
inline void validate_simple_polygon(const Polygon& p, const char* label) {
    const std::size_t n = p.pts.size();
    if (n < 3) throw std::invalid_argument(std::string(label) + ": needs at least 3 vertices");
    for (std::size_t i = 0; i < n; ++i) {
        if ((p.pts[i] - p.pts[(i + 1) % n]).norm() < 1e-9)
            throw std::invalid_argument(std::string(label) + ": duplicate consecutive vertex " +
                                        std::to_string(i));
    }
    if (area(p) < 1e-9)
        throw std::invalid_argument(std::string(label) + ": zero area");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // Skip adjacent edges (they share a vertex by construction).
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (detail::segments_cross(p.pts[i], p.pts[(i + 1) % n], p.pts[j],
                                       p.pts[(j + 1) % n]))
                throw std::invalid_argument(std::string(label) + ": edges " + std::to_string(i) +
                                            " and " + std::to_string(j) + " intersect");
        }
    }
}

// Andrew monotone chain. Returns the hull in ccw order, collinear points
// dropped. Input of fewer than 3 non-collinear points throws.
inline Polygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) throw std::invalid_argument("convex_hull: fewer than 3 distinct points");
    std::vector<Vec2> h(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && (h[k - 1] - h[k - 2]).cross(pts[i] - h[k - 2]) <= 0) --k;
        h[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && (h[k - 1] - h[k - 2]).cross(pts[i] - h[k - 2]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    if (h.size() < 3) throw std::invalid_argument("convex_hull: input is collinear");
    return Polygon{std::move(h)};
}

// Axis-aligned rectangle, the coverage region representation.
struct Rect {
    Vec2 origin{0, 0};
    double lx = 0.0;
    double ly = 0.0;

    bool contains(const Vec2& q) const {
        return q.x >= origin.x && q.x <= origin.x + lx && q.y >= origin.y && q.y <= origin.y + ly;
    }
};

}  // namespace emtrace
