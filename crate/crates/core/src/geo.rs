//! Spherical-Earth geometry: ECEF conversion, geostationary ephemerides,
//! slant ranges, look angles, propagation delay, and Doppler shift.
//!
//! Latitude and longitude are degrees on a sphere of radius
//! [`EARTH_RADIUS_M`](crate::constants::EARTH_RADIUS_M); trigonometry is done
//! in radians internally. Look angles use the local east/north/up frame with
//! azimuth measured clockwise from true north. These functions feed both the
//! gNB side (SIB19 generation) and the UE side (ephemeris-based timing
//! advance), so they are kept pure and total over valid inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{EARTH_RADIUS_M, GEO_ORBIT_RADIUS_M, SPEED_OF_LIGHT_M_S};

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} deg outside [-90, 90]")]
    InvalidLatitude(f64),
    #[error("longitude {0} deg outside [-180, 180)")]
    InvalidLongitude(f64),
    #[error("altitude {0} m below -500 m")]
    InvalidAltitude(f64),
}

/// Geodetic position on the spherical Earth model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundPosition {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// Height above the reference sphere, m.
    #[serde(default)]
    pub altitude_m: f64,
}

impl GroundPosition {
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Result<Self, GeoError> {
        let pos = Self { latitude_deg, longitude_deg, altitude_m };
        pos.validate()?;
        Ok(pos)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !self.latitude_deg.is_finite() || !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(GeoError::InvalidLatitude(self.latitude_deg));
        }
        if !self.longitude_deg.is_finite()
            || self.longitude_deg < -180.0
            || self.longitude_deg >= 180.0
        {
            return Err(GeoError::InvalidLongitude(self.longitude_deg));
        }
        if !self.altitude_m.is_finite() || self.altitude_m < -500.0 {
            return Err(GeoError::InvalidAltitude(self.altitude_m));
        }
        Ok(())
    }
}

/// Cartesian vector in the Earth-centred Earth-fixed frame, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefVector {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

impl EcefVector {
    pub const ZERO: Self = Self { x_m: 0.0, y_m: 0.0, z_m: 0.0 };

    pub fn new(x_m: f64, y_m: f64, z_m: f64) -> Self {
        Self { x_m, y_m, z_m }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self::new(self.x_m * k, self.y_m * k, self.z_m * k)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x_m * other.x_m + self.y_m * other.y_m + self.z_m * other.z_m
    }

    pub fn norm_m(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl std::ops::Add for EcefVector {
    type Output = Self;
    fn add(self, other: Self) -> Self {
        Self::new(self.x_m + other.x_m, self.y_m + other.y_m, self.z_m + other.z_m)
    }
}

impl std::ops::Sub for EcefVector {
    type Output = Self;
    fn sub(self, other: Self) -> Self {
        Self::new(self.x_m - other.x_m, self.y_m - other.y_m, self.z_m - other.z_m)
    }
}

/// Satellite state: ECEF position/velocity valid from `epoch_s` onwards.
/// Position is extrapolated linearly; a station-kept GEO satellite has zero
/// velocity in the Earth-fixed frame, so its position is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ephemeris {
    pub position: EcefVector,
    pub velocity: EcefVector,
    pub epoch_s: f64,
}

impl Ephemeris {
    pub fn position_at(&self, t_s: f64) -> EcefVector {
        self.position + self.velocity.scaled(t_s - self.epoch_s)
    }
}

/// Elevation/azimuth of a target as seen from a ground observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookAngles {
    /// Degrees in [-90, 90].
    pub elevation_deg: f64,
    /// Degrees in [0, 360), clockwise from true north. Defined as 0 when the
    /// target is exactly at zenith.
    pub azimuth_deg: f64,
}

/// Converts a geodetic position to ECEF on a sphere of the given radius.
pub fn geodetic_to_ecef(pos: GroundPosition, earth_radius_m: f64) -> EcefVector {
    let lat = pos.latitude_deg.to_radians();
    let lon = pos.longitude_deg.to_radians();
    let r = earth_radius_m + pos.altitude_m;
    EcefVector::new(r * lat.cos() * lon.cos(), r * lat.cos() * lon.sin(), r * lat.sin())
}

/// Ephemeris of a station-kept geostationary satellite parked at the given
/// longitude: equatorial position at the GEO orbit radius, zero velocity in
/// the Earth-fixed frame.
pub fn geo_satellite_ephemeris(sat_longitude_deg: f64, epoch_s: f64) -> Ephemeris {
    let lon = sat_longitude_deg.to_radians();
    Ephemeris {
        position: EcefVector::new(
            GEO_ORBIT_RADIUS_M * lon.cos(),
            GEO_ORBIT_RADIUS_M * lon.sin(),
            0.0,
        ),
        velocity: EcefVector::ZERO,
        epoch_s,
    }
}

/// Euclidean distance between two ECEF points, metres.
pub fn slant_range(observer: EcefVector, satellite: EcefVector) -> f64 {
    (satellite - observer).norm_m()
}

/// Relative horizontal component below which the target counts as zenith.
const ZENITH_EPS: f64 = 1e-9;

/// Elevation and azimuth of `satellite` from `observer`, using the local
/// east/north/up decomposition on the spherical Earth.
pub fn look_angles(observer: GroundPosition, satellite: EcefVector) -> LookAngles {
    let lat = observer.latitude_deg.to_radians();
    let lon = observer.longitude_deg.to_radians();
    let obs = geodetic_to_ecef(observer, EARTH_RADIUS_M);
    let d = satellite - obs;

    let east = EcefVector::new(-lon.sin(), lon.cos(), 0.0);
    let north = EcefVector::new(-lat.sin() * lon.cos(), -lat.sin() * lon.sin(), lat.cos());
    let up = EcefVector::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin());

    let e = d.dot(east);
    let n = d.dot(north);
    let u = d.dot(up);

    let horizontal = (e * e + n * n).sqrt();
    if horizontal < ZENITH_EPS * d.norm_m() {
        return LookAngles { elevation_deg: 90.0, azimuth_deg: 0.0 };
    }

    let elevation_deg = u.atan2(horizontal).to_degrees();
    let azimuth_deg = e.atan2(n).to_degrees().rem_euclid(360.0);
    LookAngles { elevation_deg, azimuth_deg }
}

/// One-way free-space propagation delay over `range_m`, seconds.
pub fn propagation_delay(range_m: f64) -> f64 {
    debug_assert!(range_m >= 0.0);
    range_m / SPEED_OF_LIGHT_M_S
}

/// Doppler shift observed at `observer` for a carrier radiated by the
/// satellite described by `eph` at its epoch. Positive when the satellite
/// approaches the observer.
pub fn doppler_shift(eph: &Ephemeris, observer: EcefVector, carrier_hz: f64) -> f64 {
    debug_assert!(carrier_hz > 0.0);
    let toward = observer - eph.position;
    let range = toward.norm_m();
    if range == 0.0 {
        return 0.0;
    }
    let radial_speed = eph.velocity.dot(toward.scaled(1.0 / range));
    radial_speed * carrier_hz / SPEED_OF_LIGHT_M_S
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::GEO_ALTITUDE_M;
    use proptest::prelude::*;

    fn ground(lat: f64, lon: f64, alt: f64) -> GroundPosition {
        GroundPosition::new(lat, lon, alt).unwrap()
    }

    #[test]
    fn ecef_axis_alignments() {
        let p = geodetic_to_ecef(ground(0.0, 0.0, 0.0), EARTH_RADIUS_M);
        assert!((p.x_m - 6_371_000.0).abs() < 1e-6);
        assert!(p.y_m.abs() < 1e-6 && p.z_m.abs() < 1e-6);

        let pole = geodetic_to_ecef(ground(90.0, 0.0, 0.0), EARTH_RADIUS_M);
        assert!((pole.z_m - 6_371_000.0).abs() < 1e-6);
        assert!(pole.x_m.abs() < 1.0 && pole.y_m.abs() < 1.0);

        let east = geodetic_to_ecef(ground(0.0, 90.0, 0.0), EARTH_RADIUS_M);
        assert!((east.y_m - 6_371_000.0).abs() < 1e-6);
        assert!(east.x_m.abs() < 1.0 && east.z_m.abs() < 1e-6);
    }

    #[test]
    fn ecef_norm_includes_altitude() {
        let p = geodetic_to_ecef(ground(37.0, -45.5, 1234.0), EARTH_RADIUS_M);
        assert!((p.norm_m() - (EARTH_RADIUS_M + 1234.0)).abs() < 1e-6);
    }

    #[test]
    fn position_rejects_out_of_range() {
        assert_eq!(GroundPosition::new(91.0, 0.0, 0.0), Err(GeoError::InvalidLatitude(91.0)));
        assert_eq!(GroundPosition::new(0.0, 180.0, 0.0), Err(GeoError::InvalidLongitude(180.0)));
        assert_eq!(GroundPosition::new(0.0, 0.0, -501.0), Err(GeoError::InvalidAltitude(-501.0)));
    }

    #[test]
    fn geo_ephemeris_axis_and_rotation() {
        let e0 = geo_satellite_ephemeris(0.0, 0.0);
        assert!((e0.position.x_m - 42_157_000.0).abs() < 1e-6);
        assert_eq!(e0.velocity, EcefVector::ZERO);

        let e90 = geo_satellite_ephemeris(90.0, 0.0);
        assert!((e90.position.y_m - 42_157_000.0).abs() < 1e-5);
        assert!(e90.position.x_m.abs() < 1.0);

        let e122 = geo_satellite_ephemeris(122.0, 0.0);
        assert!((e122.position.norm_m() - 42_157_000.0).abs() < 1.0);
        assert_eq!(e122.position.z_m, 0.0);
    }

    #[test]
    fn slant_range_zenith_equals_altitude() {
        let obs = geodetic_to_ecef(ground(0.0, 0.0, 0.0), EARTH_RADIUS_M);
        let sat = geo_satellite_ephemeris(0.0, 0.0).position;
        assert!((slant_range(obs, sat) - GEO_ALTITUDE_M).abs() < 1e-6);
        assert_eq!(slant_range(sat, sat), 0.0);
    }

    #[test]
    fn slant_range_horizon_matches_closed_form() {
        // Observer on the horizon circle: range = sqrt(2*Re*h + h^2).
        let horizon_lon = -(EARTH_RADIUS_M / GEO_ORBIT_RADIUS_M).acos().to_degrees();
        let obs = geodetic_to_ecef(ground(0.0, horizon_lon, 0.0), EARTH_RADIUS_M);
        let sat = geo_satellite_ephemeris(0.0, 0.0).position;
        let expected =
            (2.0 * EARTH_RADIUS_M * GEO_ALTITUDE_M + GEO_ALTITUDE_M * GEO_ALTITUDE_M).sqrt();
        assert!((slant_range(obs, sat) - expected).abs() < 1.0);
        assert!((expected - 41_673_000.0).abs() < 5_000.0);
    }

    #[test]
    fn look_angles_zenith() {
        let sat = geo_satellite_ephemeris(0.0, 0.0).position;
        let la = look_angles(ground(0.0, 0.0, 0.0), sat);
        assert_eq!(la.elevation_deg, 90.0);
        assert_eq!(la.azimuth_deg, 0.0);
    }

    #[test]
    fn look_angles_horizon_elevation_near_zero() {
        let sat = geo_satellite_ephemeris(0.0, 0.0).position;
        let la = look_angles(ground(0.0, -81.3, 0.0), sat);
        assert!(la.elevation_deg.abs() < 0.2, "elevation {}", la.elevation_deg);
    }

    #[test]
    fn look_angles_due_south_from_northern_hemisphere() {
        let sat = geo_satellite_ephemeris(0.0, 0.0).position;
        let la = look_angles(ground(45.0, 0.0, 0.0), sat);
        assert!((la.azimuth_deg - 180.0).abs() < 1e-9);
        assert!(la.elevation_deg > 0.0 && la.elevation_deg < 90.0);
    }

    #[test]
    fn propagation_delay_reference_points() {
        assert_eq!(propagation_delay(0.0), 0.0);
        assert!((propagation_delay(35_786_000.0) - 0.119369).abs() < 1e-6);
        assert!((propagation_delay(41_673_000.0) - 0.139006).abs() < 1e-6);
    }

    #[test]
    fn doppler_reference_points() {
        let geo = geo_satellite_ephemeris(0.0, 0.0);
        let obs = geodetic_to_ecef(ground(10.0, 10.0, 0.0), EARTH_RADIUS_M);
        assert_eq!(doppler_shift(&geo, obs, 2.0e9), 0.0);

        // 7500 m/s purely radial toward an observer on the +x axis.
        let eph = Ephemeris {
            position: EcefVector::new(42_157_000.0, 0.0, 0.0),
            velocity: EcefVector::new(-7_500.0, 0.0, 0.0),
            epoch_s: 0.0,
        };
        let obs = EcefVector::new(6_371_000.0, 0.0, 0.0);
        let shift = doppler_shift(&eph, obs, 2.0e9);
        let expected = 7_500.0 * 2.0e9 / SPEED_OF_LIGHT_M_S;
        assert!((shift - expected).abs() < 1e-6);
        assert!((expected - 50_035.0).abs() < 1.0);

        // Velocity orthogonal to the line of sight.
        let eph = Ephemeris {
            position: EcefVector::new(42_157_000.0, 0.0, 0.0),
            velocity: EcefVector::new(0.0, 7_500.0, 0.0),
            epoch_s: 0.0,
        };
        assert_eq!(doppler_shift(&eph, obs, 2.0e9), 0.0);
    }

    #[test]
    fn ephemeris_linear_extrapolation() {
        let eph = Ephemeris {
            position: EcefVector::new(1.0, 2.0, 3.0),
            velocity: EcefVector::new(10.0, 0.0, -10.0),
            epoch_s: 5.0,
        };
        let p = eph.position_at(7.0);
        assert_eq!(p, EcefVector::new(21.0, 2.0, -17.0));
    }

    proptest! {
        #[test]
        fn slant_range_symmetry_and_triangle(
            ax in -5e7f64..5e7, ay in -5e7f64..5e7, az in -5e7f64..5e7,
            bx in -5e7f64..5e7, by in -5e7f64..5e7, bz in -5e7f64..5e7,
            cx in -5e7f64..5e7, cy in -5e7f64..5e7, cz in -5e7f64..5e7,
        ) {
            let a = EcefVector::new(ax, ay, az);
            let b = EcefVector::new(bx, by, bz);
            let c = EcefVector::new(cx, cy, cz);
            prop_assert!((slant_range(a, b) - slant_range(b, a)).abs() < 1e-6);
            prop_assert!(slant_range(a, c) <= slant_range(a, b) + slant_range(b, c) + 1e-6);
        }

        #[test]
        fn delay_scales_linearly(range in 0.0f64..1e9) {
            let d1 = propagation_delay(range);
            let d2 = propagation_delay(2.0 * range);
            prop_assert!((d2 - 2.0 * d1).abs() <= 1e-12 * d2.max(1e-300));
        }

        #[test]
        fn elevation_antitone_in_separation(lon1 in 0.0f64..40.0, lon2 in 40.0f64..80.0) {
            // Fixed satellite at lon 0; observers further along the equator
            // see it lower.
            let sat = geo_satellite_ephemeris(0.0, 0.0).position;
            let near = look_angles(ground(0.0, lon1, 0.0), sat);
            let far = look_angles(ground(0.0, lon2, 0.0), sat);
            prop_assert!(near.elevation_deg >= far.elevation_deg);
        }

        #[test]
        fn doppler_linear_in_carrier(speed in -7.5e3f64..7.5e3, carrier in 1e8f64..3e10) {
            let eph = Ephemeris {
                position: EcefVector::new(42_157_000.0, 0.0, 0.0),
                velocity: EcefVector::new(speed, 0.0, 0.0),
                epoch_s: 0.0,
            };
            let obs = EcefVector::new(6_371_000.0, 0.0, 0.0);
            let f1 = doppler_shift(&eph, obs, carrier);
            let f2 = doppler_shift(&eph, obs, 2.0 * carrier);
            prop_assert!((f2 - 2.0 * f1).abs() < 1e-6 * f1.abs().max(1.0));
        }

        #[test]
        fn look_angles_in_declared_ranges(
            lat in -89.0f64..89.0, lon in -179.0f64..179.0, sat_lon in -179.0f64..179.0,
        ) {
            let sat = geo_satellite_ephemeris(sat_lon, 0.0).position;
            let la = look_angles(ground(lat, lon, 0.0), sat);
            prop_assert!((-90.0..=90.0).contains(&la.elevation_deg));
            prop_assert!((0.0..360.0).contains(&la.azimuth_deg));
        }
    }
}
