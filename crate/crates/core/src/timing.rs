//! NR NTN timing-advance arithmetic.
//!
//! The total timing advance applied by a UE is
//! `(N_TA + N_TA_offset + N_TA_adj_common + N_TA_adj_ue) * Tc`, where the
//! common adjustment compensates the feeder link (network-controlled,
//! broadcast in SIB19) and the UE-specific adjustment compensates the service
//! link (computed by the UE from satellite ephemeris and its own position).
//! `Tc = 1/(480 kHz * 4096)` is the NR fundamental time unit.

use thiserror::Error;

use crate::constants::EARTH_RADIUS_M;
use crate::geo::{self, Ephemeris, GroundPosition};

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("epoch stale: t={t_s} s is past epoch {epoch_s} s + validity {validity_duration_s} s")]
    StaleEpoch { t_s: f64, epoch_s: f64, validity_duration_s: f64 },
    #[error("validity_duration_s {0} must be > 0")]
    InvalidValidity(f64),
}

/// The four integer terms of the timing-advance sum, in Tc units, plus the
/// Tc value itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingAdvanceComponents {
    /// Closed-loop term resolved at random access.
    pub n_ta: u64,
    /// Fixed offset term (0 for FDD-like operation).
    pub n_ta_offset: u64,
    /// Common (feeder-link) adjustment, broadcast by the network.
    pub n_ta_adj_common: u64,
    /// UE-specific (service-link) adjustment, computed from ephemeris.
    pub n_ta_adj_ue: u64,
    /// Seconds per Tc unit; must be > 0.
    pub tc_s: f64,
}

impl TimingAdvanceComponents {
    pub fn zero(tc_s: f64) -> Self {
        Self { n_ta: 0, n_ta_offset: 0, n_ta_adj_common: 0, n_ta_adj_ue: 0, tc_s }
    }
}

/// Common timing-advance parameters as carried in SIB19: value at an epoch,
/// first-order drift, and the validity window after which the UE must
/// reacquire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonTaParams {
    pub ta_common_s: f64,
    pub ta_common_drift_s_per_s: f64,
    pub epoch_s: f64,
    pub validity_duration_s: f64,
}

impl CommonTaParams {
    pub fn new(
        ta_common_s: f64,
        ta_common_drift_s_per_s: f64,
        epoch_s: f64,
        validity_duration_s: f64,
    ) -> Result<Self, TimingError> {
        if !(validity_duration_s > 0.0) {
            return Err(TimingError::InvalidValidity(validity_duration_s));
        }
        Ok(Self { ta_common_s, ta_common_drift_s_per_s, epoch_s, validity_duration_s })
    }
}

/// The NR fundamental time unit Tc = 1 / (480 000 * 4096) s.
pub fn fundamental_time_unit() -> f64 {
    crate::constants::TC_S
}

/// Total timing advance in seconds: sum of all N terms times Tc.
pub fn total_timing_advance(c: &TimingAdvanceComponents) -> f64 {
    debug_assert!(c.tc_s > 0.0);
    let n =
        c.n_ta as u128 + c.n_ta_offset as u128 + c.n_ta_adj_common as u128 + c.n_ta_adj_ue as u128;
    n as f64 * c.tc_s
}

/// Common TA extrapolated linearly from its epoch, clamped at >= 0.
/// Fails with [`TimingError::StaleEpoch`] strictly after the validity window;
/// the UE must then reacquire SIB19.
pub fn common_ta_at(params: &CommonTaParams, t_s: f64) -> Result<f64, TimingError> {
    debug_assert!(t_s >= params.epoch_s);
    if t_s > params.epoch_s + params.validity_duration_s {
        return Err(TimingError::StaleEpoch {
            t_s,
            epoch_s: params.epoch_s,
            validity_duration_s: params.validity_duration_s,
        });
    }
    let ta = params.ta_common_s + params.ta_common_drift_s_per_s * (t_s - params.epoch_s);
    Ok(ta.max(0.0))
}

/// UE-specific TA: the full service-link round trip at time `t_s`, computed
/// from the satellite ephemeris and the UE position.
pub fn ue_specific_ta(eph: &Ephemeris, ue: GroundPosition, t_s: f64) -> f64 {
    let ue_ecef = geo::geodetic_to_ecef(ue, EARTH_RADIUS_M);
    let range = geo::slant_range(ue_ecef, eph.position_at(t_s));
    2.0 * geo::propagation_delay(range)
}

/// Rounds a non-negative duration to the nearest whole count of Tc units.
pub fn to_tc_units(duration_s: f64, tc_s: f64) -> u64 {
    debug_assert!(duration_s >= 0.0 && tc_s > 0.0);
    (duration_s / tc_s).round() as u64
}
