// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

// Bowyer-Watson Delaunay triangulation over integer lattice points with
// exact 128-bit incircle/orientation predicates, plus piecewise-linear
// interpolation over the resulting surface. Inputs are grid indices, so
// coordinates stay far below the exact-arithmetic overflow bound and every
// result is deterministic in the insertion order.

namespace emtrace {

struct IntPoint {
    std::int64_t x = 0;
    std::int64_t y = 0;
    bool operator<(const IntPoint& o) const { return x != o.x ? x < o.x : y < o.y; }
    bool operator==(const IntPoint& o) const { return x == o.x && y == o.y; }
};

namespace detail {

using i128 = __int128;

inline i128 orient2d(const IntPoint& a, const IntPoint& b, const IntPoint& c) {
    return i128(b.x - a.x) * i128(c.y - a.y) - i128(b.y - a.y) * i128(c.x - a.x);
}

// > 0 when d lies strictly inside the circumcircle of ccw triangle (a,b,c).
inline bool in_circle(const IntPoint& a, const IntPoint& b, const IntPoint& c,
                      const IntPoint& d) {
    const i128 adx = a.x - d.x, ady = a.y - d.y;
    const i128 bdx = b.x - d.x, bdy = b.y - d.y;
    const i128 cdx = c.x - d.x, cdy = c.y - d.y;
    const i128 ad2 = adx * adx + ady * ady;
    const i128 bd2 = bdx * bdx + bdy * bdy;
    const i128 cd2 = cdx * cdx + cdy * cdy;
    const i128 det = adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) +
                     ad2 * (bdx * cdy - cdx * bdy);
    return det > 0;
}

}  // namespace detail

class Delaunay {
  public:
    explicit Delaunay(std::vector<IntPoint> pts) : pts_(std::move(pts)) {
        if (pts_.size() < 3) throw std::invalid_argument("Delaunay: need at least 3 points");
        {
            std::set<IntPoint> uniq(pts_.begin(), pts_.end());
            if (uniq.size() != pts_.size())
                throw std::invalid_argument("Delaunay: duplicate points");
        }
        build();
        index();
    }

    const std::vector<IntPoint>& points() const { return pts_; }
    const std::vector<std::array<std::uint32_t, 3>>& triangles() const { return tris_; }

    // Value of the piecewise-linear surface at an integer lattice point, or
    // nullopt outside the convex hull. Exactly reproduces sample values at
    // the sample points.
    std::optional<double> interpolate(const IntPoint& q, const std::vector<double>& v) const {
        if (v.size() != pts_.size())
            throw std::invalid_argument("Delaunay::interpolate: value count mismatch");
        const std::uint32_t t = locate(q);
        if (t == npos) return std::nullopt;
        const auto& tr = tris_[t];
        const IntPoint &a = pts_[tr[0]], &b = pts_[tr[1]], &c = pts_[tr[2]];
        const auto w0 = detail::orient2d(b, c, q);
        const auto w1 = detail::orient2d(c, a, q);
        const auto w2 = detail::orient2d(a, b, q);
        const double sum = double(w0) + double(w1) + double(w2);
        return (double(w0) * v[tr[0]] + double(w1) * v[tr[1]] + double(w2) * v[tr[2]]) / sum;
    }

  private:
    static constexpr std::uint32_t npos = 0xffffffffu;

    void build() {
        // Super-triangle far outside any realistic grid extent. The incircle
        // determinant grows as the fourth power of the coordinate span, so
        // this must stay below ~2^31 for the 128-bit predicates to be exact.
        const std::int64_t big = 1 << 24;
        const std::uint32_t n = static_cast<std::uint32_t>(pts_.size());
        std::vector<IntPoint> p = pts_;
        p.push_back({-3 * big, -3 * big});
        p.push_back({3 * big, -3 * big});
        p.push_back({0, 3 * big});

        std::vector<std::array<std::uint32_t, 3>> tris{{n, n + 1, n + 2}};
        for (std::uint32_t i = 0; i < n; ++i) {
            std::vector<std::array<std::uint32_t, 3>> keep;
            std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
            for (const auto& t : tris) {
                if (detail::in_circle(p[t[0]], p[t[1]], p[t[2]], p[i])) {
                    for (int e = 0; e < 3; ++e) {
                        std::uint32_t u = t[e], w = t[(e + 1) % 3];
                        if (u > w) std::swap(u, w);
                        edges[{u, w}]++;
                    }
                } else {
                    keep.push_back(t);
                }
            }
            for (const auto& [e, count] : edges) {
                if (count != 1) continue;  // interior cavity edge
                std::array<std::uint32_t, 3> t{e.first, e.second, i};
                const auto o = detail::orient2d(p[t[0]], p[t[1]], p[t[2]]);
                if (o == 0) continue;  // collinear sliver; the gap falls back to nearest
                if (o < 0) std::swap(t[0], t[1]);
                keep.push_back(t);
            }
            tris = std::move(keep);
        }
        for (const auto& t : tris)
            if (t[0] < n && t[1] < n && t[2] < n) tris_.push_back(t);
    }

    // Coarse bucket index over the triangle bounding boxes for point location.
    void index() {
        if (tris_.empty()) return;
        min_ = max_ = pts_[tris_[0][0]];
        for (const auto& t : tris_) {
            for (const auto vi : t) {
                min_.x = std::min(min_.x, pts_[vi].x);
                min_.y = std::min(min_.y, pts_[vi].y);
                max_.x = std::max(max_.x, pts_[vi].x);
                max_.y = std::max(max_.y, pts_[vi].y);
            }
        }
        bw_ = (max_.x - min_.x) / bucket_dim + 1;
        bh_ = (max_.y - min_.y) / bucket_dim + 1;
        buckets_.assign(static_cast<std::size_t>(bw_ * bh_), {});
        for (std::uint32_t ti = 0; ti < tris_.size(); ++ti) {
            const auto& t = tris_[ti];
            std::int64_t x0 = pts_[t[0]].x, x1 = x0, y0 = pts_[t[0]].y, y1 = y0;
            for (int k = 1; k < 3; ++k) {
                x0 = std::min(x0, pts_[t[k]].x);
                x1 = std::max(x1, pts_[t[k]].x);
                y0 = std::min(y0, pts_[t[k]].y);
                y1 = std::max(y1, pts_[t[k]].y);
            }
            for (std::int64_t by = (y0 - min_.y) / bucket_dim; by <= (y1 - min_.y) / bucket_dim;
                 ++by)
                for (std::int64_t bx = (x0 - min_.x) / bucket_dim;
                     bx <= (x1 - min_.x) / bucket_dim; ++bx)
                    buckets_[static_cast<std::size_t>(by * bw_ + bx)].push_back(ti);
        }
    }

    std::uint32_t locate(const IntPoint& q) const {
        if (tris_.empty()) return npos;
        if (q.x < min_.x || q.x > max_.x || q.y < min_.y || q.y > max_.y) return npos;
        const std::int64_t bx = (q.x - min_.x) / bucket_dim;
        const std::int64_t by = (q.y - min_.y) / bucket_dim;
        for (const std::uint32_t ti : buckets_[static_cast<std::size_t>(by * bw_ + bx)]) {
            const auto& t = tris_[ti];
            if (detail::orient2d(pts_[t[0]], pts_[t[1]], q) >= 0 &&
                detail::orient2d(pts_[t[1]], pts_[t[2]], q) >= 0 &&
                detail::orient2d(pts_[t[2]], pts_[t[0]], q) >= 0)
                return ti;
        }
        return npos;
    }

    static constexpr std::int64_t bucket_dim = 8;

    std::vector<IntPoint> pts_;
    std::vector<std::array<std::uint32_t, 3>> tris_;
    std::vector<std::vector<std::uint32_t>> buckets_;
    IntPoint min_{}, max_{};
    std::int64_t bw_ = 1, bh_ = 1;
};

}  // namespace emtrace
