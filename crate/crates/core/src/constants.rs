//! Physical and system constants used throughout the simulator.

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Spherical-Earth radius, m. The simulator uses a spherical Earth model;
/// range errors versus an ellipsoid are well below the delay granularity of
/// a GEO link.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Geostationary altitude above the equator, m.
pub const GEO_ALTITUDE_M: f64 = 35_786_000.0;

/// Geostationary orbit radius from the Earth centre, m.
pub const GEO_ORBIT_RADIUS_M: f64 = EARTH_RADIUS_M + GEO_ALTITUDE_M;

/// Boltzmann constant as a positive dB term, 10*log10(1/k) = 228.6 dB(J/K),
/// added in C/N0 budgets.
pub const BOLTZMANN_DB: f64 = 228.6;

/// NR fundamental time unit Tc = 1 / (480 kHz * 4096) s, about 0.509 ns.
pub const TC_S: f64 = 1.0 / (480_000.0 * 4096.0);

/// Slot duration at 15 kHz subcarrier spacing (numerology 0), seconds.
pub const SLOT_S: f64 = 1.0e-3;
