// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "emtrace/channel.hpp"
#include "emtrace/rng.hpp"
#include "fixtures.hpp"

using namespace emtrace;
using Catch::Approx;

namespace {

LaunchConfig quick_launch() {
    LaunchConfig lc;
    lc.m_dim = 200000;
    lc.workers = 1;
    return lc;
}

double norm2(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

}  // namespace

TEST_CASE("ula offsets are centered", "[channel]") {
    const auto off = ula_offsets(8, 0.5, {0.0, 0.0, 1.0});
    REQUIRE(off.size() == 8);
    Vec3 sum;
    for (const auto& o : off) sum += o;
    CHECK(sum.norm() < 1e-12);
    CHECK(off[0].z == Approx(-1.75));
    CHECK(off[7].z == Approx(1.75));
    CHECK((off[1] - off[0]).norm() == Approx(0.5));
    CHECK_THROWS(ula_offsets(0, 0.5, {0, 0, 1}));
}

TEST_CASE("mrt maximizes the effective channel", "[channel]") {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<cplx> h(8);
        for (auto& v : h) v = cplx{rng.normal(), rng.normal()};
        const auto w = mrt(h);
        CHECK(norm2(w) == Approx(1.0));
        const cplx best = effective_channel(h, w);
        CHECK(std::abs(best * best) == Approx(std::norm(best)));
        CHECK(std::norm(best) == Approx(norm2(h)));
        // Any competing unit-power weighting does no better.
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<cplx> w2(8);
            for (auto& v : w2) v = cplx{rng.normal(), rng.normal()};
            const double scale = 1.0 / std::sqrt(norm2(w2));
            for (auto& v : w2) v *= scale;
            CHECK(std::norm(effective_channel(h, w2)) <= norm2(h) * (1.0 + 1e-12));
        }
    }
    CHECK_THROWS(mrt(std::vector<cplx>(4, cplx{0.0, 0.0})));
}

TEST_CASE("path gain squares to the voltage power", "[channel]") {
    const Scene s = fixtures::ground_scene({15.0, -0.5});
    const CarrierSpec carrier;
    const Tracer tracer(s, carrier, quick_launch());
    const AntennaSpec iso = isotropic_antenna();
    const Vec3 tx{0.0, 0.0, 10.0}, rx{80.0, 15.0, 1.5};
    const auto paths = compute_multipath(tracer, iso, tx, iso, rx, 1.0);
    REQUIRE(paths.size() == 2);
    for (const auto& p : paths) {
        const cplx g = path_gain(carrier, iso, iso, p);
        CHECK(std::norm(g) == Approx(std::norm(p.v_r) / (8.0 * iso.re_z)).epsilon(1e-9));
    }
    // Coherent sums agree too: same per-path phases on both routes.
    const cplx h = channel_response(carrier, iso, iso, paths);
    cplx v{0.0, 0.0};
    for (const auto& p : paths) v += p.v_r;
    CHECK(std::norm(h) == Approx(std::norm(v) / (8.0 * iso.re_z)).epsilon(1e-9));
}

TEST_CASE("array phases follow the departure direction", "[channel]") {
    const Scene s = fixtures::freespace_scene();
    const CarrierSpec carrier;
    const Tracer tracer(s, carrier, quick_launch());
    const AntennaSpec iso = isotropic_antenna();
    const Vec3 tx{0.0, 0.0, 10.0}, rx{25.0, 8.0, 1.5};
    const auto paths = compute_multipath(tracer, iso, tx, iso, rx, 1.0);
    REQUIRE(paths.size() == 1);

    const auto offsets = ula_offsets(8, 0.5 * carrier.lambda0(), {0.0, 0.0, 1.0});
    const auto h = build_h(carrier, iso, iso, paths, offsets, 5);
    REQUIRE(h.size() == 8);
    const cplx g = path_gain(carrier, iso, iso, paths[0]);
    for (std::size_t e = 0; e < h.size(); ++e) {
        const cplx expect =
            g * std::exp(cplx{0.0, carrier.k0() * paths[0].dep_dir.dot(offsets[e])});
        CHECK(std::abs(h[e] - expect) < 1e-12 * std::abs(g));
    }
    CHECK(norm2(h) == Approx(8.0 * std::norm(g)).epsilon(1e-12));
}

TEST_CASE("free-space beamformed sample has the closed form", "[channel]") {
    const Scene s = fixtures::freespace_scene();
    const CarrierSpec carrier;
    const Tracer tracer(s, carrier, quick_launch());
    const AntennaSpec iso = isotropic_antenna();
    const double g_r = 2.0;
    const AntennaSpec rx_ant = isotropic_antenna(g_r);
    const Vec3 tx{0.0, 0.0, 10.0}, rx{30.0, -12.0, 1.5};
    const double d = (rx - tx).norm();
    const int m = 8;
    const auto offsets = ula_offsets(m, 0.5 * carrier.lambda0(), {0.0, 0.0, 1.0});

    const auto paths = compute_multipath(tracer, iso, tx, rx_ant, rx, 1.0);
    const auto smp = beamformed_unit_sample(carrier, iso, rx_ant, paths, offsets, 5);

    // One path: MRT recovers the full array gain of M isotropic elements.
    const double friis = std::pow(carrier.lambda0() / (4.0 * pi * d), 2.0) * g_r;
    CHECK(smp.p_unit == Approx(m * friis).epsilon(1e-9));
    CHECK(smp.paths_used == 1);

    // RMS field consistent with the power through the receive aperture.
    const double a_e = carrier.lambda0() * carrier.lambda0() * g_r / (4.0 * pi);
    CHECK(smp.e_unit * smp.e_unit * a_e / z_f0 == Approx(smp.p_unit).epsilon(1e-9));
}

TEST_CASE("element gain cancels out of the unit sample", "[channel]") {
    // EIRP already carries the element gain, so the per-unit-EIRP sample must
    // not depend on it.
    const Scene s = fixtures::ground_scene({15.0, -0.5});
    const CarrierSpec carrier;
    const Tracer tracer(s, carrier, quick_launch());
    const Vec3 tx{0.0, 0.0, 10.0}, rx{60.0, 25.0, 1.5};
    const auto offsets = ula_offsets(8, 0.5 * carrier.lambda0(), {0.0, 0.0, 1.0});

    BeamformedSample ref;
    for (const double gain : {1.0, 3.7, 12.0}) {
        const AntennaSpec elem = isotropic_antenna(gain);
        const auto paths = compute_multipath(tracer, elem, tx, isotropic_antenna(), rx, 1.0);
        const auto smp = beamformed_unit_sample(carrier, elem, isotropic_antenna(), paths, offsets, 5);
        if (gain == 1.0) {
            ref = smp;
            continue;
        }
        CHECK(smp.p_unit == Approx(ref.p_unit).epsilon(1e-9));
        CHECK(smp.e_unit == Approx(ref.e_unit).epsilon(1e-9));
    }
}

TEST_CASE("path truncation only affects the weights", "[channel]") {
    const Scene s = fixtures::screen_scene();
    const CarrierSpec carrier;
    const Tracer tracer(s, carrier, quick_launch());
    const AntennaSpec iso = isotropic_antenna();
    const Vec3 tx{0.0, 30.0, 10.0}, rx{5.0, -30.0, 1.5};
    const auto paths = compute_multipath(tracer, iso, tx, iso, rx, 1.0);
    REQUIRE(paths.size() >= 2);
    const auto offsets = ula_offsets(8, 0.5 * carrier.lambda0(), {0.0, 0.0, 1.0});

    // m_p = 1 keeps only the strongest path; with equal-magnitude element
    // entries the truncated channel power is exactly M |g_1|^2.
    const auto smp1 = beamformed_unit_sample(carrier, iso, iso, paths, offsets, 1);
    const cplx g1 = path_gain(carrier, iso, iso, paths[0]);
    CHECK(smp1.p_unit == Approx(8.0 * std::norm(g1)).epsilon(1e-9));
    CHECK(smp1.paths_used == static_cast<int>(paths.size()));

    // The exposure field still sums every path regardless of m_p.
    const auto smp_all = beamformed_unit_sample(carrier, iso, iso, paths, offsets, 100);
    CHECK(smp1.e_unit > 0.0);
    CHECK(smp_all.e_unit > 0.0);
}

TEST_CASE("empty path list yields a silent sample", "[channel]") {
    const CarrierSpec carrier;
    const auto offsets = ula_offsets(4, 0.5 * carrier.lambda0(), {0.0, 0.0, 1.0});
    const auto smp =
        beamformed_unit_sample(carrier, isotropic_antenna(), isotropic_antenna(), {}, offsets, 5);
    CHECK(smp.p_unit == 0.0);
    CHECK(smp.e_unit == 0.0);
    CHECK(smp.paths_used == 0);
}
