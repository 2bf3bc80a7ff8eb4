// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "scene.hpp"
#include "units.hpp"
#include "vec.hpp"

// Geometrical-optics field bookkeeping plus the wedge diffraction
// coefficients. Phasor convention: fields evolve as e^{-j k0 s} over the
// travelled distance s, amplitudes are peak values; RMS conversion happens
// only in sum_field.

namespace emtrace {

struct CarrierSpec {
    double f0 = 3.5e9;

    double lambda0() const { return c0 / f0; }
    double k0() const { return 2.0 * pi / lambda0(); }
};

// (theta, phi) -> complex pattern amplitudes (c_theta, c_phi), |C| <= 1 with
// equality at the pattern maximum; the peak gain lives in AntennaSpec::gain.
using PatternFn = std::function<std::pair<cplx, cplx>(double, double)>;

struct AntennaSpec {
    double gain = 1.0;   // linear
    double re_z = 50.0;  // Re(Z_A) [ohm]
    Mat3 orientation;    // local -> global
    PatternFn pattern;   // empty means theta-polarized isotropic
};

inline AntennaSpec isotropic_antenna(double gain = 1.0, double re_z = 50.0) {
    AntennaSpec a;
    a.gain = gain;
    a.re_z = re_z;
    a.pattern = [](double, double) { return std::pair<cplx, cplx>{cplx{1.0, 0.0}, cplx{0.0, 0.0}}; };
    return a;
}

// Uniform linear array along the local z axis, isotropic elements, broadside
// maximum. spacing is in wavelengths.
inline AntennaSpec ula_antenna(int elements, double spacing, double re_z = 50.0) {
    if (elements < 1) throw std::invalid_argument("ula_antenna: elements must be >= 1");
    AntennaSpec a;
    a.gain = static_cast<double>(elements);
    a.re_z = re_z;
    a.pattern = [elements, spacing](double theta, double) {
        const double psi = 2.0 * pi * spacing * std::cos(theta);
        const double den = static_cast<double>(elements) * std::sin(0.5 * psi);
        const double af =
            std::abs(den) < 1e-12 ? 1.0 : std::sin(0.5 * elements * psi) / den;
        return std::pair<cplx, cplx>{cplx{af, 0.0}, cplx{0.0, 0.0}};
    };
    return a;
}

// Spherical angles and the polarization basis of direction u (global, unit)
// in the antenna's local frame, with the basis vectors returned in global
// coordinates. At the poles phi defaults to 0.
struct SphericalFrame {
    double theta;
    double phi;
    Vec3 theta_hat;
    Vec3 phi_hat;
};

inline SphericalFrame spherical_frame(const Mat3& orientation, const Vec3& u) {
    const Vec3 l = orientation.transposed() * u;
    const double theta = std::acos(std::clamp(l.z, -1.0, 1.0));
    const double phi = (std::abs(l.x) < 1e-12 && std::abs(l.y) < 1e-12)
                           ? 0.0
                           : std::atan2(l.y, l.x);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    const Vec3 th_l{ct * cp, ct * sp, -st};
    const Vec3 ph_l{-sp, cp, 0.0};
    return {theta, phi, orientation * th_l, orientation * ph_l};
}

// Transverse field phasor: E = a * ua + b * ub, with (ua, ub, dir) a
// right-handed orthonormal triplet.
struct PolarizedField {
    cplx a{0.0, 0.0};
    cplx b{0.0, 0.0};
    Vec3 ua{1, 0, 0};
    Vec3 ub{0, 1, 0};
    Vec3 dir{0, 0, 1};
};

inline CVec3 to_global(const PolarizedField& f) {
    return CVec3{f.a * f.ua.x + f.b * f.ub.x, f.a * f.ua.y + f.b * f.ub.y,
                 f.a * f.ua.z + f.b * f.ub.z};
}

inline cplx path_phase(const CarrierSpec& carrier, double s) {
    return std::exp(cplx{0.0, -carrier.k0() * s});
}

// Radiated far field at distance s in direction dir (global, unit):
// sqrt(P_T G_T Z_F0 / (2 pi)) * C_T(theta, phi) * e^{-j k0 s} / s.
inline PolarizedField tx_field(const CarrierSpec& carrier, const AntennaSpec& ant, double p_t,
                               const Vec3& dir, double s) {
    if (s <= 0.0) throw std::invalid_argument("tx_field: distance must be positive");
    if (p_t < 0.0) throw std::invalid_argument("tx_field: power must be non-negative");
    const SphericalFrame sf = spherical_frame(ant.orientation, dir);
    const auto [c_theta, c_phi] = ant.pattern(sf.theta, sf.phi);
    const cplx amp = std::sqrt(p_t * ant.gain * z_f0 / (2.0 * pi)) * path_phase(carrier, s) / s;
    PolarizedField f;
    f.a = amp * c_theta;
    f.b = amp * c_phi;
    f.ua = sf.theta_hat;
    f.ub = sf.phi_hat;
    f.dir = dir;
    return f;
}

// Fresnel reflection coefficients for incidence angle theta_i from the
// normal; .first is the perpendicular (E normal to the incidence plane)
// coefficient, .second the parallel one.
inline std::pair<cplx, cplx> fresnel_coefficients(const Material& m, double cos_theta_i) {
    const double c = std::clamp(cos_theta_i, 0.0, 1.0);
    const double s2 = 1.0 - c * c;
    const cplx root = std::sqrt(m.eps_r * m.mu_r - s2);
    const cplx r_s = (m.mu_r * c - root) / (m.mu_r * c + root);
    const cplx r_p = (m.eps_r * c - root) / (m.eps_r * c + root);
    return {r_s, r_p};
}

// Specular reflection of the incident field (given at the reflection point)
// with an explicit spreading-and-phase factor. Used directly by wavefronts
// whose spreading is not the spherical s'/(s'+s) form (edge-diffracted
// pencils); everything else goes through apply_reflection below.
inline PolarizedField apply_reflection_factor(const PolarizedField& in, const Vec3& normal,
                                              const Material& mat, cplx factor) {
    const Vec3 d_in = in.dir;
    const double cos_i = std::clamp(-d_in.dot(normal), -1.0, 1.0);
    if (cos_i < 0.0) throw std::invalid_argument("apply_reflection: ray leaves the surface");
    const Vec3 d_out = (d_in - 2.0 * d_in.dot(normal) * normal).normalized();

    Vec3 e_s = d_in.cross(normal);
    const double e_s_len = e_s.norm();
    e_s = e_s_len < 1e-12 ? any_orthogonal(normal) : e_s / e_s_len;
    const Vec3 e_p_in = d_in.cross(e_s);
    const Vec3 e_p_out = d_out.cross(e_s);

    const cplx a_s = in.a * in.ua.dot(e_s) + in.b * in.ub.dot(e_s);
    const cplx a_p = in.a * in.ua.dot(e_p_in) + in.b * in.ub.dot(e_p_in);

    const auto [r_s, r_p] = fresnel_coefficients(mat, cos_i);

    PolarizedField out;
    out.a = r_s * a_s * factor;
    out.b = r_p * a_p * factor;
    out.ua = e_s;
    out.ub = e_p_out;
    out.dir = d_out;
    return out;
}

// Specular reflection evaluated s metres past the reflection point. s_prime
// is the spreading reference distance of the incoming wave at the reflection
// point; for a wave launched at the source it is the accumulated travel
// distance, which keeps the spreading factor s'/(s'+s) consistent with the
// image method across any number of planar bounces.
inline PolarizedField apply_reflection(const CarrierSpec& carrier, const PolarizedField& in,
                                       const Vec3& normal, const Material& mat, double s_prime,
                                       double s) {
    if (s <= 0.0 || s_prime <= 0.0)
        throw std::invalid_argument("apply_reflection: distances must be positive");
    const cplx spread = (s_prime / (s_prime + s)) * path_phase(carrier, s);
    return apply_reflection_factor(in, normal, mat, spread);
}

// ---------------------------------------------------------------------------
// Fresnel integrals and the Kouyoumjian-Pathak transition function.
// ---------------------------------------------------------------------------

namespace detail {

// C(x) = int_0^x cos(pi t^2 / 2) dt, S(x) likewise with sin. Maclaurin series
// up to |x| = 3.6 (cancellation stays below ~1e-7 in double), asymptotic
// auxiliary series beyond. Absolute error < 1e-6 everywhere, ~1e-9 typical.
inline void fresnel_cs(double x, double& c_out, double& s_out) {
    const double ax = std::abs(x);
    if (ax <= 3.6) {
        // C + jS = sum_k (j pi/2)^k x^(2k+1) / (k! (2k+1))
        const cplx ju(0.0, 1.0);
        const cplx w = ju * (0.5 * pi) * ax * ax;
        cplx term(ax, 0.0);
        cplx sum = term / cplx(1.0, 0.0);
        for (int k = 1; k < 64; ++k) {
            term *= w / static_cast<double>(k);
            const cplx add = term / static_cast<double>(2 * k + 1);
            sum += add;
            if (std::abs(add) < 1e-17 * (1.0 + std::abs(sum))) break;
        }
        c_out = std::copysign(sum.real(), x);
        s_out = std::copysign(sum.imag(), x);
        return;
    }
    // C(x) = 1/2 + f sin(u) - g cos(u), S(x) = 1/2 - f cos(u) - g sin(u),
    // u = pi x^2 / 2; f, g from the divergent asymptotic series truncated at
    // the smallest term.
    const double u = 0.5 * pi * ax * ax;
    const double inv = 1.0 / (pi * ax * ax);  // 1/(2u)
    double f = 0.0, g = 0.0, term_f = 1.0, term_g = inv;
    double prev_f = 1e300, prev_g = 1e300;
    for (int k = 0; k < 24; ++k) {
        if (std::abs(term_f) < prev_f) {
            f += (k % 2 == 0 ? term_f : -term_f);
            prev_f = std::abs(term_f);
        }
        if (std::abs(term_g) < prev_g) {
            g += (k % 2 == 0 ? term_g : -term_g);
            prev_g = std::abs(term_g);
        }
        term_f *= (4.0 * k + 1.0) * (4.0 * k + 3.0) * inv * inv;
        term_g *= (4.0 * k + 3.0) * (4.0 * k + 5.0) * inv * inv;
    }
    f /= pi * ax;
    g /= pi * ax;
    const double su = std::sin(u), cu = std::cos(u);
    const double c = 0.5 + f * su - g * cu;
    const double s = 0.5 - f * cu - g * su;
    c_out = std::copysign(c, x);
    s_out = std::copysign(s, x);
}

}  // namespace detail

// F(X) = 2 j sqrt(X) e^{jX} int_{sqrt(X)}^inf e^{-j tau^2} dtau for X >= 0.
// F -> 1 for large X, F -> 0 as X -> 0.
inline cplx utd_transition(double x) {
    if (x <= 0.0) return {0.0, 0.0};
    const double sx = std::sqrt(x);
    // int_sqrt(X)^inf e^{-j tau^2} dtau via Fresnel integrals with
    // tau = sqrt(pi/2) t.
    const double arg = sx * std::sqrt(2.0 / pi);
    double c, s;
    detail::fresnel_cs(arg, c, s);
    const cplx rest = std::sqrt(0.5 * pi) * cplx(0.5 - c, -(0.5 - s));
    const cplx j(0.0, 1.0);
    return 2.0 * j * sx * std::exp(j * x) * rest;
}

struct DiffractionCoefficients {
    cplx d_s;  // soft: field component along beta0_hat (edge-parallel sense)
    cplx d_h;  // hard: field component along phi_hat
};

namespace detail {

inline double cot(double v) { return std::cos(v) / std::sin(v); }

// One cotangent * transition product of the diffraction sum, with the
// grazing-boundary limit substituted inside a narrow guard band.
inline cplx diffraction_term(double beta, double sgn, double n, double k_l) {
    const double big_n = std::round((beta + sgn * pi) / (2.0 * n * pi));
    const double cos_half = std::cos(n * pi * big_n - 0.5 * beta);
    const double a = 2.0 * cos_half * cos_half;
    const double eps = pi + sgn * beta - 2.0 * n * pi * big_n;
    if (std::abs(eps) > 1e-5) {
        return cot((pi + sgn * beta) / (2.0 * n)) * utd_transition(k_l * a);
    }
    // cot((eps + 2 pi n N)/(2n)) F(kL a) -> n e^{j pi/4}
    //   [ sqrt(2 pi k L) sgn(eps) - 2 k L eps e^{j pi/4} ]
    const cplx j(0.0, 1.0);
    const cplx e4 = std::exp(j * (0.25 * pi));
    const double sgn_eps = eps >= 0.0 ? 1.0 : -1.0;
    return n * e4 * (std::sqrt(2.0 * pi * k_l) * sgn_eps - 2.0 * k_l * eps * e4);
}

}  // namespace detail

// Heuristic wedge diffraction coefficients for impedance faces. Angles are
// the exterior azimuths of the incident (phi_p) and diffracted (phi) ray
// around the edge, both in [0, n*pi]; beta0p is the acute angle between the
// incident ray and the edge. Face reflection enters through the Fresnel
// coefficients of the 0-face at grazing angle phi_p and of the n-face at
// n*pi - phi; the perpendicular coefficient feeds d_s, the parallel one d_h.
inline DiffractionCoefficients utd_coefficients(const CarrierSpec& carrier, double n,
                                                const Material& mat0, const Material& matn,
                                                double s_prime, double s, double beta0p,
                                                double phi, double phi_p) {
    if (!(n > 1.0 && n <= 2.0)) throw std::invalid_argument("utd_coefficients: n outside (1, 2]");
    if (!(beta0p > 0.0 && beta0p <= 0.5 * pi + 1e-12))
        throw std::invalid_argument("utd_coefficients: beta0p outside (0, pi/2]");
    if (s <= 0.0 || s_prime <= 0.0)
        throw std::invalid_argument("utd_coefficients: distances must be positive");
    if (phi < -1e-9 || phi > n * pi + 1e-9 || phi_p < -1e-9 || phi_p > n * pi + 1e-9)
        throw std::invalid_argument("utd_coefficients: azimuth outside wedge exterior");

    const double k0 = carrier.k0();
    const double sb = std::sin(beta0p);
    const double k_l = k0 * (s * s_prime / (s + s_prime)) * sb * sb;

    const double bm = phi - phi_p;
    const double bp = phi + phi_p;
    const cplx incident =
        detail::diffraction_term(bm, 1.0, n, k_l) + detail::diffraction_term(bm, -1.0, n, k_l);
    const cplx term_r0 = detail::diffraction_term(bp, -1.0, n, k_l);
    const cplx term_rn = detail::diffraction_term(bp, 1.0, n, k_l);

    // Grazing incidence/observation angles against the two faces.
    const double cos0 = std::clamp(std::sin(phi_p), 0.0, 1.0);
    const double cosn = std::clamp(std::sin(n * pi - phi), 0.0, 1.0);
    const auto [r0_s, r0_p] = fresnel_coefficients(mat0, cos0);
    const auto [rn_s, rn_p] = fresnel_coefficients(matn, cosn);

    const cplx j(0.0, 1.0);
    const cplx pre = -std::exp(-j * (0.25 * pi)) /
                     (2.0 * n * std::sqrt(2.0 * pi * k0) * sb);
    DiffractionCoefficients d;
    d.d_s = pre * (incident + r0_s * term_r0 + rn_s * term_rn);
    d.d_h = pre * (incident + r0_p * term_r0 + rn_p * term_rn);
    return d;
}

// Diffracted field s metres past the edge point. The incident field (given
// at the edge point, propagation direction in.dir) is decomposed onto the
// edge-fixed incident basis (phi'_hat, beta0'_hat); the output lives on the
// corresponding diffracted basis. s_prime is the spreading reference of the
// incoming wave, as in apply_reflection.
inline PolarizedField apply_diffraction(const CarrierSpec& carrier, const PolarizedField& in,
                                        const Vec3& edge_dir, const Vec3& d_out,
                                        const DiffractionCoefficients& coef, double s_prime,
                                        double s) {
    if (s <= 0.0 || s_prime <= 0.0)
        throw std::invalid_argument("apply_diffraction: distances must be positive");
    const Vec3 d_in = in.dir;

    // Edge-fixed bases: phi'_hat = -(e x s')/|..|, beta0'_hat = phi'_hat x s',
    // phi_hat = (e x s)/|..|, beta0_hat = phi_hat x s.
    Vec3 phi_p_hat = edge_dir.cross(d_in) * -1.0;
    const double np = phi_p_hat.norm();
    if (np < 1e-12) throw std::invalid_argument("apply_diffraction: ray parallel to edge");
    phi_p_hat = phi_p_hat / np;
    const Vec3 beta_p_hat = phi_p_hat.cross(d_in);

    Vec3 phi_hat = edge_dir.cross(d_out);
    const double nq = phi_hat.norm();
    if (nq < 1e-12) throw std::invalid_argument("apply_diffraction: output parallel to edge");
    phi_hat = phi_hat / nq;
    const Vec3 beta_hat = phi_hat.cross(d_out);

    const cplx e_phi_p = in.a * in.ua.dot(phi_p_hat) + in.b * in.ub.dot(phi_p_hat);
    const cplx e_beta_p = in.a * in.ua.dot(beta_p_hat) + in.b * in.ub.dot(beta_p_hat);

    const cplx spread = std::sqrt(s_prime / (s * (s_prime + s))) * path_phase(carrier, s);

    PolarizedField out;
    out.a = -coef.d_h * e_phi_p * spread;   // phi component
    out.b = -coef.d_s * e_beta_p * spread;  // beta component
    out.ua = phi_hat;
    out.ub = beta_hat;
    out.dir = d_out;
    return out;
}

// RMS magnitude of the coherent sum of path fields and its dBuV/m value.
struct FieldSummary {
    double e_rms;  // V/m
    double e_db;   // dB relative to 1 uV/m
};

inline FieldSummary sum_field(const std::vector<CVec3>& fields) {
    CVec3 total;
    for (const auto& f : fields) total += f;
    const double e_rms = total.norm() / std::sqrt(2.0);
    const double e_db = e_rms > 0.0 ? vm_to_dbuvm(e_rms) : -std::numeric_limits<double>::infinity();
    return {e_rms, e_db};
}

// Open-circuit voltage induced by an incoming field. arrival_dir points from
// the receiver toward the wave's source (the direction the antenna "sees").
inline cplx received_voltage(const CarrierSpec& carrier, const AntennaSpec& ant,
                             const CVec3& field, const Vec3& arrival_dir) {
    const SphericalFrame sf = spherical_frame(ant.orientation, arrival_dir);
    const auto [c_theta, c_phi] = ant.pattern(sf.theta, sf.phi);
    const double lam = carrier.lambda0();
    const double scale = std::sqrt(lam * lam * ant.gain * ant.re_z / (pi * z_f0));
    return scale * (c_theta * field.dot_real(sf.theta_hat) + c_phi * field.dot_real(sf.phi_hat));
}

// P_R = |sum V_m|^2 / (8 Re Z_A), peak-phasor convention.
inline double received_power(const std::vector<cplx>& voltages, double re_z) {
    cplx v{0.0, 0.0};
    for (const auto& vm : voltages) v += vm;
    return std::norm(v) / (8.0 * re_z);
}

}  // namespace emtrace
