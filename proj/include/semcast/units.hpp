#pragma once

#include <cmath>

// Boundary unit conversions. Everything inside the library is SI
// (watts, hertz, seconds, bits); configuration files speak dB/dBm/MHz/ms.
namespace semcast::units {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

inline double mw_to_watts(double mw) { return mw * 1e-3; }

inline double watts_to_mw(double w) { return w * 1e3; }

inline double mhz_to_hz(double mhz) { return mhz * 1e6; }

inline double hz_to_mhz(double hz) { return hz * 1e-6; }

inline double ms_to_s(double ms) { return ms * 1e-3; }

inline double s_to_ms(double s) { return s * 1e3; }

}  // namespace semcast::units
