//! Transparent bent-pipe relay path: frequency conversion between the n256
//! access band and the Ku feeder band, cascaded-converter frequency errors,
//! and the analog relay operation itself (delay, translation, gain, nothing
//! else). The satellite never touches payload bits.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// n256 uplink band, Hz.
pub const N256_UL_HZ: (f64, f64) = (1_980.0e6, 2_010.0e6);
/// n256 downlink band, Hz.
pub const N256_DL_HZ: (f64, f64) = (2_170.0e6, 2_200.0e6);
/// Accepted Ku window for feeder carriers, Hz.
pub const KU_HZ: (f64, f64) = (10.7e9, 14.8e9);

#[derive(Debug, Error, PartialEq)]
pub enum RelayError {
    #[error("carrier {carrier_hz} Hz outside {expected}")]
    CarrierOutOfBand { carrier_hz: f64, expected: &'static str },
    #[error("invalid frequency plan: {0}")]
    InvalidPlan(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// n256 toward Ku.
    Up,
    /// Ku toward n256.
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// UE <-> satellite converter chain.
    Service,
    /// Gateway <-> satellite converter chain.
    Feeder,
}

/// A conversion stage as configured: nominal LO plus the worst-case
/// magnitude of its frequency error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub lo_hz: f64,
    #[serde(default)]
    pub lo_error_bound_hz: f64,
}

/// A conversion stage as realized for one run: LO errors are drawn once at
/// scenario start and stay fixed, matching the stable shifts seen in the
/// field (one-time calibration suffices, no tracking needed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverterStage {
    pub lo_hz: f64,
    pub lo_error_hz: f64,
}

impl StageSpec {
    pub fn validate(&self) -> Result<(), RelayError> {
        if !(self.lo_hz > 0.0) {
            return Err(RelayError::InvalidPlan("stage lo_hz must be > 0"));
        }
        if !(self.lo_error_bound_hz >= 0.0) {
            return Err(RelayError::InvalidPlan("lo_error_bound_hz must be >= 0"));
        }
        Ok(())
    }

    /// Draws this stage's fixed error: a random sign times a magnitude in
    /// the upper half of the bound. Converters rarely sit at zero error, so
    /// the cascade sum concentrates near the bound rather than near zero.
    pub fn realize(&self, rng: &mut impl Rng) -> ConverterStage {
        let lo_error_hz = if self.lo_error_bound_hz == 0.0 {
            0.0
        } else {
            let magnitude = rng.random_range(0.5..1.0) * self.lo_error_bound_hz;
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        };
        ConverterStage { lo_hz: self.lo_hz, lo_error_hz }
    }
}

/// Draws all stage errors and returns the signed cascade total. The result
/// is deterministic under the supplied rng stream and always bounded by the
/// sum of the per-stage bounds.
pub fn sample_cascade_error(stages: &[StageSpec], rng: &mut impl Rng) -> f64 {
    stages.iter().map(|s| s.realize(rng).lo_error_hz).sum()
}

/// Frequency plan as written in a scenario file: carrier centers plus the
/// converter chains with error bounds still unsampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyPlanSpec {
    pub ue_ul_hz: f64,
    pub ue_dl_hz: f64,
    pub feeder_ul_hz: f64,
    pub feeder_dl_hz: f64,
    pub service_stages: Vec<StageSpec>,
    pub feeder_stages: Vec<StageSpec>,
}

impl FrequencyPlanSpec {
    pub fn validate(&self) -> Result<(), RelayError> {
        if !in_band(self.ue_ul_hz, N256_UL_HZ) {
            return Err(RelayError::InvalidPlan("ue_ul_hz outside 1980-2010 MHz"));
        }
        if !in_band(self.ue_dl_hz, N256_DL_HZ) {
            return Err(RelayError::InvalidPlan("ue_dl_hz outside 2170-2200 MHz"));
        }
        if !in_band(self.feeder_ul_hz, KU_HZ) || !in_band(self.feeder_dl_hz, KU_HZ) {
            return Err(RelayError::InvalidPlan("feeder carrier outside Ku window"));
        }
        if self.service_stages.is_empty() || self.feeder_stages.is_empty() {
            return Err(RelayError::InvalidPlan("converter stage list empty"));
        }
        for s in self.service_stages.iter().chain(&self.feeder_stages) {
            s.validate()?;
        }
        Ok(())
    }

    /// Draws every stage's fixed LO error for one run.
    pub fn realize(&self, rng: &mut impl Rng) -> FrequencyPlan {
        FrequencyPlan {
            ue_ul_hz: self.ue_ul_hz,
            ue_dl_hz: self.ue_dl_hz,
            feeder_ul_hz: self.feeder_ul_hz,
            feeder_dl_hz: self.feeder_dl_hz,
            service_stages: self.service_stages.iter().map(|s| s.realize(rng)).collect(),
            feeder_stages: self.feeder_stages.iter().map(|s| s.realize(rng)).collect(),
        }
    }
}

/// Carrier centers plus the realized converter chains of both paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub ue_ul_hz: f64,
    pub ue_dl_hz: f64,
    pub feeder_ul_hz: f64,
    pub feeder_dl_hz: f64,
    pub service_stages: Vec<ConverterStage>,
    pub feeder_stages: Vec<ConverterStage>,
}

impl FrequencyPlan {
    pub fn validate(&self) -> Result<(), RelayError> {
        if !in_band(self.ue_ul_hz, N256_UL_HZ) {
            return Err(RelayError::InvalidPlan("ue_ul_hz outside 1980-2010 MHz"));
        }
        if !in_band(self.ue_dl_hz, N256_DL_HZ) {
            return Err(RelayError::InvalidPlan("ue_dl_hz outside 2170-2200 MHz"));
        }
        if !in_band(self.feeder_ul_hz, KU_HZ) || !in_band(self.feeder_dl_hz, KU_HZ) {
            return Err(RelayError::InvalidPlan("feeder carrier outside Ku window"));
        }
        if self.service_stages.is_empty() || self.feeder_stages.is_empty() {
            return Err(RelayError::InvalidPlan("converter stage list empty"));
        }
        Ok(())
    }

    fn stages(&self, path: Path) -> &[ConverterStage] {
        match path {
            Path::Service => &self.service_stages,
            Path::Feeder => &self.feeder_stages,
        }
    }

    /// Signed sum of realized LO errors along one path.
    pub fn cascade_error_hz(&self, path: Path) -> f64 {
        self.stages(path).iter().map(|s| s.lo_error_hz).sum()
    }
}

fn in_band(carrier_hz: f64, band: (f64, f64)) -> bool {
    carrier_hz >= band.0 && carrier_hz <= band.1
}

/// Translates a carrier through one converter chain. `Up` adds every
/// LO (with its realized error), `Down` subtracts; with zero errors the two
/// are exact inverses. Out-of-band inputs are rejected, never clamped.
pub fn convert(
    plan: &FrequencyPlan,
    carrier_hz: f64,
    direction: Direction,
    path: Path,
) -> Result<f64, RelayError> {
    let stages = plan.stages(path);
    if stages.is_empty() {
        return Err(RelayError::InvalidPlan("converter stage list empty"));
    }
    let shift: f64 = stages.iter().map(|s| s.lo_hz + s.lo_error_hz).sum();
    match direction {
        Direction::Up => {
            if !in_band(carrier_hz, N256_UL_HZ) && !in_band(carrier_hz, N256_DL_HZ) {
                return Err(RelayError::CarrierOutOfBand {
                    carrier_hz,
                    expected: "n256 (1980-2010 or 2170-2200 MHz)",
                });
            }
            Ok(carrier_hz + shift)
        }
        Direction::Down => {
            if !in_band(carrier_hz, KU_HZ) {
                return Err(RelayError::CarrierOutOfBand {
                    carrier_hz,
                    expected: "Ku window (10.7-14.8 GHz)",
                });
            }
            Ok(carrier_hz - shift)
        }
    }
}

/// One hop of the analog pipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayPathState {
    pub one_way_delay_s: f64,
    pub cumulative_offset_hz: f64,
    pub gain_db: f64,
}

/// A transmission as seen by the relay: carrier, power, timestamp, and an
/// opaque payload descriptor the relay must never alter.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub carrier_hz: f64,
    pub power_dbw: f64,
    pub t_s: f64,
    pub payload: Vec<u8>,
}

/// Applies one relay hop: the payload passes through untouched, time
/// advances by the hop delay, carrier and power shift by the hop's offset
/// and gain.
pub fn relay_event(state: &RelayPathState, event: &Transmission) -> Transmission {
    debug_assert!(state.one_way_delay_s >= 0.0);
    Transmission {
        carrier_hz: event.carrier_hz + state.cumulative_offset_hz,
        power_dbw: event.power_dbw + state.gain_db,
        t_s: event.t_s + state.one_way_delay_s,
        payload: event.payload.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Service-chain LOs sum to 12 GHz regardless of how many stages carry
    /// the errors, so converted carriers stay inside the Ku window.
    fn plan(service_err: &[f64], feeder_err: &[f64]) -> FrequencyPlan {
        let split = |errors: &[f64], total_lo: f64| -> Vec<ConverterStage> {
            let n = errors.len() as f64;
            errors.iter().map(|&e| ConverterStage { lo_hz: total_lo / n, lo_error_hz: e }).collect()
        };
        FrequencyPlan {
            ue_ul_hz: 1_995.0e6,
            ue_dl_hz: 2_185.0e6,
            feeder_ul_hz: 14.0e9,
            feeder_dl_hz: 12.2e9,
            service_stages: split(service_err, 12.0e9),
            feeder_stages: split(feeder_err, 11.3e9),
        }
    }

    #[test]
    fn single_stage_upconversion() {
        let p = plan(&[0.0], &[0.0]);
        p.validate().unwrap();
        let out = convert(&p, 2.0e9, Direction::Up, Path::Service).unwrap();
        assert_eq!(out, 14.0e9);
    }

    #[test]
    fn zero_error_up_down_is_exact_inverse() {
        let p = plan(&[0.0, 0.0], &[0.0]);
        let up = convert(&p, 1_990.0e6, Direction::Up, Path::Service).unwrap();
        let back = convert(&p, up, Direction::Down, Path::Service).unwrap();
        assert_eq!(back, 1_990.0e6);
    }

    #[test]
    fn stage_errors_accumulate_additively() {
        let nominal = plan(&[0.0, 0.0], &[0.0]);
        let erred = {
            let mut p = nominal.clone();
            p.service_stages[0].lo_error_hz = 2_500.0;
            p.service_stages[1].lo_error_hz = 1_800.0;
            p
        };
        let carrier = 1_995.0e6;
        let clean = convert(&nominal, carrier, Direction::Up, Path::Service).unwrap();
        let shifted = convert(&erred, carrier, Direction::Up, Path::Service).unwrap();
        assert!((shifted - clean - 4_300.0).abs() < 1e-6);
        assert_eq!(erred.cascade_error_hz(Path::Service), 4_300.0);
    }

    #[test]
    fn out_of_band_carriers_rejected() {
        let p = plan(&[0.0], &[0.0]);
        assert!(matches!(
            convert(&p, 2.5e9, Direction::Up, Path::Service),
            Err(RelayError::CarrierOutOfBand { .. })
        ));
        assert!(matches!(
            convert(&p, 9.0e9, Direction::Down, Path::Feeder),
            Err(RelayError::CarrierOutOfBand { .. })
        ));
    }

    #[test]
    fn plan_validation_rejects_bad_centers_and_empty_chains() {
        let mut p = plan(&[0.0], &[0.0]);
        p.ue_ul_hz = 2.5e9;
        assert!(p.validate().is_err());

        let mut p = plan(&[0.0], &[0.0]);
        p.feeder_ul_hz = 9.0e9;
        assert!(p.validate().is_err());

        let mut p = plan(&[0.0], &[0.0]);
        p.service_stages.clear();
        assert_eq!(p.validate(), Err(RelayError::InvalidPlan("converter stage list empty")));
        assert!(convert(&p, 1_995.0e6, Direction::Up, Path::Service).is_err());
    }

    #[test]
    fn cascade_sampling_zero_bounds() {
        let stages = [
            StageSpec { lo_hz: 12.0e9, lo_error_bound_hz: 0.0 },
            StageSpec { lo_hz: 1.0e9, lo_error_bound_hz: 0.0 },
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        assert_eq!(sample_cascade_error(&stages, &mut rng), 0.0);
    }

    #[test]
    fn cascade_sampling_is_deterministic_under_seed() {
        let stages = [StageSpec { lo_hz: 12.0e9, lo_error_bound_hz: 3_000.0 }];
        let a = sample_cascade_error(&stages, &mut ChaCha12Rng::seed_from_u64(42));
        let b = sample_cascade_error(&stages, &mut ChaCha12Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn two_3khz_stages_concentrate_in_3_to_6_khz() {
        let stages = [
            StageSpec { lo_hz: 12.0e9, lo_error_bound_hz: 3_000.0 },
            StageSpec { lo_hz: 1.0e9, lo_error_bound_hz: 3_000.0 },
        ];
        let mut in_band = 0usize;
        let n = 400;
        for seed in 0..n {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let e = sample_cascade_error(&stages, &mut rng).abs();
            assert!(e <= 6_000.0 + 1e-9);
            if (3_000.0..=6_000.0).contains(&e) {
                in_band += 1;
            }
        }
        // Opposite-sign draws cancel; same-sign draws land in 3-6 kHz.
        let fraction = in_band as f64 / n as f64;
        assert!((0.4..=0.6).contains(&fraction), "fraction {fraction}");
    }

    #[test]
    fn plan_spec_realization_keeps_within_bounds() {
        let spec = FrequencyPlanSpec {
            ue_ul_hz: 1_995.0e6,
            ue_dl_hz: 2_185.0e6,
            feeder_ul_hz: 14.0e9,
            feeder_dl_hz: 12.2e9,
            service_stages: vec![StageSpec { lo_hz: 12.0e9, lo_error_bound_hz: 3_000.0 }],
            feeder_stages: vec![StageSpec { lo_hz: 11.3e9, lo_error_bound_hz: 2_000.0 }],
        };
        spec.validate().unwrap();
        let plan = spec.realize(&mut ChaCha12Rng::seed_from_u64(5));
        plan.validate().unwrap();
        assert!(plan.cascade_error_hz(Path::Service).abs() <= 3_000.0);
        assert!(plan.cascade_error_hz(Path::Feeder).abs() <= 2_000.0);
        assert_eq!(plan.service_stages[0].lo_hz, 12.0e9);

        let mut bad = spec.clone();
        bad.service_stages[0].lo_error_bound_hz = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn relay_preserves_payload_and_shifts_time() {
        let hop = RelayPathState { one_way_delay_s: 0.12, cumulative_offset_hz: 0.0, gain_db: 0.0 };
        let tx = Transmission {
            carrier_hz: 14.0e9,
            power_dbw: 10.0,
            t_s: 1.0,
            payload: vec![1, 2, 3, 4],
        };
        let out = relay_event(&hop, &tx);
        assert_eq!(out.payload, tx.payload);
        assert!((out.t_s - 1.12).abs() < 1e-12);
        assert_eq!(out.carrier_hz, tx.carrier_hz);
    }

    #[test]
    fn chained_hops_add_delays_offsets_and_gains() {
        let service =
            RelayPathState { one_way_delay_s: 0.124, cumulative_offset_hz: 1_500.0, gain_db: 3.0 };
        let feeder =
            RelayPathState { one_way_delay_s: 0.127, cumulative_offset_hz: -400.0, gain_db: -1.0 };
        let tx = Transmission { carrier_hz: 1_995.0e6, power_dbw: 0.0, t_s: 0.0, payload: vec![9] };
        let out = relay_event(&feeder, &relay_event(&service, &tx));
        assert_eq!(out.payload, tx.payload);
        assert!((out.t_s - 0.251).abs() < 1e-9);
        assert!((out.carrier_hz - (1_995.0e6 + 1_100.0)).abs() < 1e-9);
        assert!((out.power_dbw - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn integer_grid_conversion_roundtrips_exactly(
            carrier_khz in 1_980_000u64..=2_010_000,
            lo1_khz in 10_000_000u64..12_000_000,
            lo2_khz in 100_000u64..500_000,
        ) {
            let p = FrequencyPlan {
                ue_ul_hz: 1_995.0e6,
                ue_dl_hz: 2_185.0e6,
                feeder_ul_hz: 14.0e9,
                feeder_dl_hz: 12.2e9,
                service_stages: vec![
                    ConverterStage { lo_hz: (lo1_khz * 1000) as f64, lo_error_hz: 0.0 },
                    ConverterStage { lo_hz: (lo2_khz * 1000) as f64, lo_error_hz: 0.0 },
                ],
                feeder_stages: vec![ConverterStage { lo_hz: 11.3e9, lo_error_hz: 0.0 }],
            };
            let carrier = (carrier_khz * 1000) as f64;
            let up = convert(&p, carrier, Direction::Up, Path::Service).unwrap();
            if (KU_HZ.0..=KU_HZ.1).contains(&up) {
                prop_assert_eq!(convert(&p, up, Direction::Down, Path::Service).unwrap(), carrier);
            }
        }

        #[test]
        fn cascade_error_bounded_by_sum_of_bounds(
            b1 in 0.0f64..5_000.0, b2 in 0.0f64..5_000.0, seed in 0u64..1_000,
        ) {
            let stages = [
                StageSpec { lo_hz: 12.0e9, lo_error_bound_hz: b1 },
                StageSpec { lo_hz: 1.0e9, lo_error_bound_hz: b2 },
            ];
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let e = sample_cascade_error(&stages, &mut rng);
            prop_assert!(e.abs() <= b1 + b2 + 1e-9);
        }

        #[test]
        fn relay_transparency_over_hops(payload in proptest::collection::vec(any::<u8>(), 0..64)) {
            let hop = RelayPathState {
                one_way_delay_s: 0.1,
                cumulative_offset_hz: 5.0,
                gain_db: 1.0,
            };
            let tx = Transmission { carrier_hz: 14.0e9, power_dbw: 0.0, t_s: 0.0, payload };
            let mut out = tx.clone();
            for _ in 0..5 {
                out = relay_event(&hop, &out);
            }
            prop_assert_eq!(out.payload, tx.payload);
        }
    }
}
