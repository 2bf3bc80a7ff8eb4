// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <cmath>

namespace emtrace {

// Physical constants (SI).
inline constexpr double c0 = 299792458.0;          // speed of light [m/s]
inline constexpr double z_f0 = 376.730313668;      // free-space wave impedance [ohm]
inline constexpr double pi = 3.141592653589793238462643383279502884;

// Power ratios.
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

// Absolute power.
inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt / 1e-3); }

// Field strength relative to 1 uV/m. 1 V/m -> 120 dBuV/m.
inline double vm_to_dbuvm(double vm) { return 20.0 * std::log10(vm / 1e-6); }
inline double dbuvm_to_vm(double dbuvm) { return 1e-6 * std::pow(10.0, dbuvm / 20.0); }

inline double deg_to_rad(double deg) { return deg * (pi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / pi); }

}  // namespace emtrace
