// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>

namespace emtrace {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Vec3: plain double-precision 3-vector. Value type, no invariants.
// ---------------------------------------------------------------------------
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double norm2() const { return dot(*this); }
    Vec3 normalized() const {
        const double n = norm();
        return {x / n, y / n, z / n};
    }
    double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "[" << v.x << ", " << v.y << ", " << v.z << "]";
}

// ---------------------------------------------------------------------------
// Vec2: planar companion, used for boundary polygons and grid work.
// ---------------------------------------------------------------------------
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    // z component of the 3D cross product; >0 means o is ccw of *this.
    constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double norm2() const { return dot(*this); }
    Vec2 normalized() const {
        const double n = norm();
        return {x / n, y / n};
    }
};

inline constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline std::ostream& operator<<(std::ostream& os, const Vec2& v) {
    return os << "[" << v.x << ", " << v.y << "]";
}

// ---------------------------------------------------------------------------
// CVec3: complex-valued 3-vector (phasor field in global cartesian axes).
// ---------------------------------------------------------------------------
struct CVec3 {
    cplx x{0.0, 0.0};
    cplx y{0.0, 0.0};
    cplx z{0.0, 0.0};

    constexpr CVec3() = default;
    constexpr CVec3(cplx x_, cplx y_, cplx z_) : x(x_), y(y_), z(z_) {}

    CVec3 operator+(const CVec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    CVec3 operator-(const CVec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    CVec3 operator*(cplx s) const { return {x * s, y * s, z * s}; }
    CVec3& operator+=(const CVec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    // Projection onto a real axis (no conjugation: e is a real unit vector).
    cplx dot_real(const Vec3& e) const { return x * e.x + y * e.y + z * e.z; }
    // Squared Euclidean magnitude |E|^2 = sum |E_i|^2.
    double norm2() const { return std::norm(x) + std::norm(y) + std::norm(z); }
    double norm() const { return std::sqrt(norm2()); }
};

inline CVec3 operator*(cplx s, const CVec3& v) { return v * s; }
inline CVec3 operator*(const Vec3& v, cplx s) { return CVec3{s * v.x, s * v.y, s * v.z}; }

// ---------------------------------------------------------------------------
// Small helpers shared across modules.
// ---------------------------------------------------------------------------

// Any unit vector orthogonal to unit vector v (deterministic choice).
inline Vec3 any_orthogonal(const Vec3& v) {
    // Pick the axis least aligned with v to avoid cancellation.
    const Vec3 axis = std::abs(v.x) <= std::abs(v.y)
                          ? (std::abs(v.x) <= std::abs(v.z) ? Vec3{1, 0, 0} : Vec3{0, 0, 1})
                          : (std::abs(v.y) <= std::abs(v.z) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
    return v.cross(axis).normalized();
}

// 3x3 rotation matrix, rows are the basis images. Used for antenna mounting
// and for the seeded rotation of launch direction sets.
struct Mat3 {
    Vec3 r0{1, 0, 0}, r1{0, 1, 0}, r2{0, 0, 1};

    Vec3 operator*(const Vec3& v) const { return {r0.dot(v), r1.dot(v), r2.dot(v)}; }
    Mat3 transposed() const {
        return {{r0.x, r1.x, r2.x}, {r0.y, r1.y, r2.y}, {r0.z, r1.z, r2.z}};
    }
    static Mat3 identity() { return {}; }

    // Maps local coordinates to global when X, Y, Z are the local axes
    // expressed in global coordinates.
    static Mat3 from_columns(const Vec3& X, const Vec3& Y, const Vec3& Z) {
        return {{X.x, Y.x, Z.x}, {X.y, Y.y, Z.y}, {X.z, Y.z, Z.z}};
    }

    // Rotation by angle about a unit axis (Rodrigues).
    static Mat3 axis_angle(const Vec3& u, double angle) {
        const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
        return {{c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s},
                {u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s},
                {u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t}};
    }
};

inline constexpr Vec2 xy(const Vec3& v) { return {v.x, v.y}; }
inline constexpr Vec3 lift(const Vec2& v, double z) { return {v.x, v.y, z}; }

}  // namespace emtrace
