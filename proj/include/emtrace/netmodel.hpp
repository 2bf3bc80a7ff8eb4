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
#include "units.hpp"

// Network layer on top of the unit-EIRP rasters: duty-cycled transmit power,
// intercell interference leakage, CSI-impaired SINR, the coverage ratio, and
// the total field experienced at a grid cell. Everything here is per-cell
// arithmetic; the expensive propagation work is already frozen into rasters.

namespace emtrace {

// Fraction of the theoretical maximum power a base station actually radiates
// on average, as a function of the number of connected users. Piecewise
// linear between anchors and clamped outside; anchors must be increasing in
// both coordinates with fractions in (0, 1].
struct PrfCurve {
    std::vector<std::pair<double, double>> anchors;  // (N, fraction)

    PrfCurve() : PrfCurve({{18.0, 0.083}, {45.0, 0.163}}) {}
    explicit PrfCurve(std::vector<std::pair<double, double>> a) : anchors(std::move(a)) {
        if (anchors.empty()) throw std::invalid_argument("PrfCurve: no anchors");
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            if (!(anchors[i].second > 0.0) || anchors[i].second > 1.0)
                throw std::invalid_argument("PrfCurve: fractions must be in (0, 1]");
            if (i > 0 && (anchors[i].first <= anchors[i - 1].first ||
                          anchors[i].second < anchors[i - 1].second))
                throw std::invalid_argument("PrfCurve: anchors must be nondecreasing");
        }
    }

    double operator()(double n) const {
        if (n <= anchors.front().first) return anchors.front().second;
        if (n >= anchors.back().first) return anchors.back().second;
        for (std::size_t i = 1; i < anchors.size(); ++i) {
            if (n > anchors[i].first) continue;
            const auto& [n0, f0] = anchors[i - 1];
            const auto& [n1, f1] = anchors[i];
            return f0 + (f1 - f0) * (n - n0) / (n1 - n0);
        }
        return anchors.back().second;  // unreachable
    }
};

// One neighbouring base station leaking into the target area through its
// side lobes. The unit raster is the beamformed received power per unit EIRP
// with this station as the transmitter, over the same grid as the target.
struct Interferer {
    Vec3 position;
    double p_t = 200.0;  // theoretical maximum transmit power [W]
    double g_t = 1.0;    // antenna gain, linear
    int n_ue = 45;       // connected users in that cell
    Raster unit;
};

struct NetworkConfig {
    double sigma_n2 = dbm_to_watt(-95.0);  // per-user noise power [W]
    double tau_e2 = 0.1;                   // channel-estimation error variance
    double delta_rf = 0.045;               // side-lobe / main-lobe gain ratio
    double gamma_min = db_to_lin(5.0);     // SINR threshold, linear
    double rho_cov = 0.99;                 // required covered fraction
    double eirp_max = dbm_to_watt(81.18);  // regulatory limit [W]
    double g_r = 1.0;                      // receive antenna gain, linear
    int n_min = 18;                        // connected-user range for the
    int n_max = 45;                        //   serving station
    PrfCurve prf;

    void validate() const {
        if (!(sigma_n2 > 0.0)) throw std::invalid_argument("NetworkConfig: sigma_n2 <= 0");
        if (tau_e2 < 0.0 || tau_e2 >= 1.0)
            throw std::invalid_argument("NetworkConfig: tau_e2 outside [0, 1)");
        if (!(delta_rf > 0.0) || delta_rf > 1.0)
            throw std::invalid_argument("NetworkConfig: delta_rf outside (0, 1]");
        if (!(gamma_min > 0.0)) throw std::invalid_argument("NetworkConfig: gamma_min <= 0");
        if (!(rho_cov > 0.0) || rho_cov > 1.0)
            throw std::invalid_argument("NetworkConfig: rho_cov outside (0, 1]");
        if (!(eirp_max > 0.0)) throw std::invalid_argument("NetworkConfig: eirp_max <= 0");
        if (!(g_r > 0.0)) throw std::invalid_argument("NetworkConfig: g_r <= 0");
        if (n_min < 1 || n_max < n_min)
            throw std::invalid_argument("NetworkConfig: bad user range");
    }
};

// Aggregate side-lobe leakage P_RL(u) = sum_l PRF(N_l) P_Tl G_Tl delta_RF
// P_unit_l(u), in watts per cell. Cells under buildings carry the raster
// floor and contribute nothing measurable.
inline std::vector<double> interference_raster(int nx, int ny,
                                               const std::vector<Interferer>& interferers,
                                               const PrfCurve& prf, double delta_rf) {
    std::vector<double> out(static_cast<std::size_t>(nx) * ny, 0.0);
    for (const auto& l : interferers) {
        if (l.unit.nx != nx || l.unit.ny != ny)
            throw std::invalid_argument("interference_raster: raster dimension mismatch");
        const double scale = prf(l.n_ue) * l.p_t * l.g_t * delta_rf;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += scale * db_to_lin(l.unit.p_db[i]);
    }
    return out;
}

// Duty-cycled beamformed received power P_Rbf(u) = PRF(N) EIRP P_unit(u).
inline std::vector<double> serving_power_raster(const Raster& serving, double eirp,
                                                double prf_n) {
    std::vector<double> out(serving.p_db.size());
    const double scale = prf_n * eirp;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * db_to_lin(serving.p_db[i]);
    return out;
}

// SINR with imperfect channel knowledge:
// gamma(u) = (1 - tau_e^2) P_Rbf(u) / (P_RL(u) + sigma_n^2).
inline std::vector<double> sinr_raster(const Raster& serving, double eirp, int n_ue,
                                       const std::vector<double>& p_rl,
                                       const NetworkConfig& cfg) {
    if (p_rl.size() != serving.p_db.size())
        throw std::invalid_argument("sinr_raster: raster dimension mismatch");
    const double scale = (1.0 - cfg.tau_e2) * cfg.prf(n_ue) * eirp;
    std::vector<double> out(p_rl.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = scale * db_to_lin(serving.p_db[i]) / (p_rl[i] + cfg.sigma_n2);
    return out;
}

// Fraction of unmasked cells at or above the SINR threshold.
inline double coverage(const std::vector<double>& gamma, const std::vector<std::uint8_t>& mask,
                       double gamma_min) {
    if (gamma.size() != mask.size())
        throw std::invalid_argument("coverage: raster dimension mismatch");
    int total = 0, covered = 0;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        if (mask[i]) continue;
        ++total;
        covered += gamma[i] >= gamma_min;
    }
    if (total == 0) throw std::invalid_argument("coverage: no unmasked cells");
    return static_cast<double>(covered) / total;
}

struct CoverageInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Smallest EIRP meeting the coverage constraint, in closed form. Each cell
// needs EIRP_req(u) = gamma_min (P_RL(u) + sigma_n^2) / ((1 - tau_e^2)
// PRF(N) P_unit(u)); covering a fraction rho of cells costs exactly the
// ceil(rho |U0|)-th smallest requirement. Cells without any received signal
// require infinite EIRP. Call with N at its minimum and interferer loads at
// their maximum for the worst case.
inline double eirp_requirement_quantile(const Raster& serving, const std::vector<double>& p_rl,
                                        const NetworkConfig& cfg, int n_ue) {
    if (p_rl.size() != serving.p_db.size())
        throw std::invalid_argument("eirp_requirement_quantile: raster dimension mismatch");
    const double denom_scale = (1.0 - cfg.tau_e2) * cfg.prf(n_ue);
    std::vector<double> req;
    req.reserve(p_rl.size());
    for (std::size_t i = 0; i < p_rl.size(); ++i) {
        if (serving.mask[i]) continue;
        if (serving.p_db[i] <= p_floor_db) {
            req.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        const double p_unit = db_to_lin(serving.p_db[i]);
        req.push_back(cfg.gamma_min * (p_rl[i] + cfg.sigma_n2) / (denom_scale * p_unit));
    }
    if (req.empty()) throw std::invalid_argument("eirp_requirement_quantile: no unmasked cells");
    const auto k = static_cast<std::size_t>(
        std::ceil(cfg.rho_cov * static_cast<double>(req.size()) - 1e-9));
    const std::size_t rank = std::max<std::size_t>(k, 1) - 1;
    std::nth_element(req.begin(), req.begin() + static_cast<std::ptrdiff_t>(rank), req.end());
    return req[rank];
}

inline double min_eirp_for_coverage(const Raster& serving, const std::vector<double>& p_rl,
                                    const NetworkConfig& cfg, int n_ue) {
    const double eirp = eirp_requirement_quantile(serving, p_rl, cfg, n_ue);
    if (!(eirp <= cfg.eirp_max))
        throw CoverageInfeasible("coverage unattainable within the EIRP limit");
    return eirp;
}

// Effective receive aperture A_e = lambda^2 G_R / 4 pi.
inline double effective_aperture(const CarrierSpec& carrier, double g_r) {
    const double lam = carrier.lambda0();
    return lam * lam * g_r / (4.0 * pi);
}

// Total field at a cell occupied by n_occ co-located users, treating the
// serving and interfering signals as statistically independent powers:
// E_tot = sqrt(Z_F0 / A_e (P_RL + n_occ P_Rbf)).
inline double total_exposure(double p_rl, int n_occ, double p_r_bf, double a_e) {
    return std::sqrt(z_f0 / a_e * (p_rl + n_occ * p_r_bf));
}

// Per-cell network summary at a fixed operating point, single user per cell.
struct ExposureField {
    int nx = 0, ny = 0;
    std::vector<double> p_serv;  // P_Rbf [W]
    std::vector<double> p_intf;  // P_RL [W]
    std::vector<double> gamma;   // linear SINR
    std::vector<double> e_tot;   // [V/m]
    std::vector<std::uint8_t> mask;
};

inline ExposureField evaluate_network(const Raster& serving, const std::vector<double>& p_rl,
                                      const NetworkConfig& cfg, const CarrierSpec& carrier,
                                      double eirp, int n_ue) {
    ExposureField f;
    f.nx = serving.nx;
    f.ny = serving.ny;
    f.mask = serving.mask;
    f.p_serv = serving_power_raster(serving, eirp, cfg.prf(n_ue));
    f.p_intf = p_rl;
    f.gamma = sinr_raster(serving, eirp, n_ue, p_rl, cfg);
    const double a_e = effective_aperture(carrier, cfg.g_r);
    f.e_tot.resize(f.p_serv.size());
    for (std::size_t i = 0; i < f.e_tot.size(); ++i)
        f.e_tot[i] = total_exposure(p_rl[i], 1, f.p_serv[i], a_e);
    return f;
}

}  // namespace emtrace
