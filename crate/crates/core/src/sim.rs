//! End-to-end scenario runs: wires geometry, the SIB19 broadcast, the UE
//! access state machine, timing advance, the HARQ uplink, and the downlink
//! PHY into one deterministic event-driven simulation.
//!
//! All randomness comes from named substreams of the scenario seed
//! ("cascade", "fading", "dl_errors", "retx"), so a run is a pure function
//! of the scenario file plus the seed: identical inputs give byte-identical
//! outputs.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Geometric, Normal};
use thiserror::Error;

use crate::constants::{EARTH_RADIUS_M, TC_S};
use crate::engine::EventQueue;
use crate::geo::{
    geo_satellite_ephemeris, geodetic_to_ecef, look_angles, propagation_delay, slant_range,
    Ephemeris,
};
use crate::harq::{HarqError, HarqPool, UlTransmissionRecord};
use crate::phy::{
    bler, cascade_cn0_dbhz, cn0_dbhz, fspl_db, select_mcs, snr_db, transport_block_bits,
    transport_block_bits_exact, LinkBudgetParams, McsEntry, PhyError, MCS_TABLE_QAM64,
};
use crate::relay::{FrequencyPlan, Path as RelayPath, RelayError};
use crate::report::{
    collect_summary, fmt6, AccessSummary, DlSummary, GeometrySummary, LinkSummary, PingSummary,
    RunStatus, RunSummary, SummaryStats, TimingSummary,
};
use crate::rng::substream;
use crate::scenario::{LegRf, PrachConfig, ScenarioConfig, ScenarioError};
use crate::sib19::{self, Sib19Error, Sib19Message};
use crate::timing::{
    common_ta_at, to_tc_units, total_timing_advance, ue_specific_ta, CommonTaParams,
    TimingAdvanceComponents,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("sib19 generation failed: {0}")]
    Sib19(#[from] Sib19Error),
    #[error("link budget: {0}")]
    Phy(#[from] PhyError),
    #[error("frequency plan: {0}")]
    Relay(#[from] RelayError),
    #[error("harq: {0}")]
    Harq(#[from] HarqError),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialize failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Slack for comparing event times that should coincide but may differ by
/// accumulated float rounding.
const TIE_EPS: f64 = 1e-9;

/// 36-bit cell identity broadcast in SIB19; the high bit above 32 is set so
/// real runs exercise the wide field.
const CELL_ID: u64 = 0x1_0000_0001;

/// One per-second row of metrics.csv.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub t_s: f64,
    pub dl_throughput_bps: f64,
    pub dl_bler: f64,
    pub pdsch_snr_db: f64,
    pub active_harq: u32,
}

/// One row of ping.csv. `rtt_s` is `None` when the echo request exhausted
/// its HARQ retransmission budget and was dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PingRecord {
    pub seq: u32,
    pub sent_t_s: f64,
    pub rtt_s: Option<f64>,
    pub retx_count: u32,
}

/// Everything a run produces; [`write_outputs`] lays it out on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub summary: RunSummary,
    pub metrics: Vec<MetricSample>,
    pub pings: Vec<PingRecord>,
    pub ul_records: Vec<UlTransmissionRecord>,
    pub access_log: String,
}

/// Outcome of the gNB PRACH receiver for a given residual frequency error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrachDetection {
    pub detected: bool,
    /// Grid point the search settled on; `None` without search.
    pub estimated_offset_hz: Option<f64>,
    /// Residual left after applying the estimate.
    pub post_calibration_error_hz: Option<f64>,
}

/// Frequency-domain PRACH detection. With search enabled the receiver sweeps
/// a grid of `search_step_hz` across `search_window_hz` centred on the
/// nominal position and locks to the nearest grid point; without search the
/// preamble is only found if the residual already sits within the
/// correlator's native tolerance.
pub fn prach_frequency_search(residual_hz: f64, cfg: &PrachConfig) -> PrachDetection {
    if cfg.search_enabled {
        if residual_hz.abs() <= cfg.search_window_hz / 2.0 {
            let est = (residual_hz / cfg.search_step_hz).round() * cfg.search_step_hz;
            return PrachDetection {
                detected: true,
                estimated_offset_hz: Some(est),
                post_calibration_error_hz: Some(residual_hz - est),
            };
        }
        return PrachDetection {
            detected: false,
            estimated_offset_hz: None,
            post_calibration_error_hz: None,
        };
    }
    if residual_hz.abs() <= cfg.no_search_threshold_hz {
        return PrachDetection {
            detected: true,
            estimated_offset_hz: None,
            post_calibration_error_hz: Some(residual_hz),
        };
    }
    PrachDetection { detected: false, estimated_offset_hz: None, post_calibration_error_hz: None }
}

/// Static geometry of a scenario: ranges, delays and look angles of both
/// links. Pure function of the site configuration.
pub fn geometry_summary(cfg: &ScenarioConfig) -> GeometrySummary {
    let sat = geo_satellite_ephemeris(cfg.sites.satellite_longitude_deg, 0.0);
    let ue = geodetic_to_ecef(cfg.sites.ue, EARTH_RADIUS_M);
    let gw = geodetic_to_ecef(cfg.sites.gateway, EARTH_RADIUS_M);
    let service_range_m = slant_range(ue, sat.position);
    let feeder_range_m = slant_range(gw, sat.position);
    let service_delay_s = propagation_delay(service_range_m);
    let feeder_delay_s = propagation_delay(feeder_range_m);
    let ue_la = look_angles(cfg.sites.ue, sat.position);
    let gw_la = look_angles(cfg.sites.gateway, sat.position);
    GeometrySummary {
        service_range_m,
        feeder_range_m,
        service_delay_s,
        feeder_delay_s,
        propagation_rtt_s: 2.0 * (service_delay_s + feeder_delay_s),
        ue_elevation_deg: ue_la.elevation_deg,
        ue_azimuth_deg: ue_la.azimuth_deg,
        gw_elevation_deg: gw_la.elevation_deg,
        gw_azimuth_deg: gw_la.azimuth_deg,
    }
}

/// One leg of a printed link budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegBudget {
    pub name: &'static str,
    pub carrier_hz: f64,
    pub distance_m: f64,
    pub eirp_dbw: f64,
    pub g_over_t_dbk: f64,
    pub extra_losses_db: f64,
    pub fspl_db: f64,
    pub cn0_dbhz: f64,
}

/// Cascaded budget of one traffic direction across the bent pipe.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionBudget {
    pub label: &'static str,
    pub legs: Vec<LegBudget>,
    pub cascade_cn0_dbhz: f64,
    pub snr_db: f64,
}

fn leg_budget(
    name: &'static str,
    rf: &LegRf,
    carrier_hz: f64,
    distance_m: f64,
    bandwidth_hz: f64,
) -> Result<LegBudget, PhyError> {
    let params = LinkBudgetParams {
        eirp_dbw: rf.eirp_dbw,
        g_over_t_dbk: rf.g_over_t_dbk,
        carrier_hz,
        extra_losses_db: rf.extra_losses_db,
        bandwidth_hz,
    };
    Ok(LegBudget {
        name,
        carrier_hz,
        distance_m,
        eirp_dbw: rf.eirp_dbw,
        g_over_t_dbk: rf.g_over_t_dbk,
        extra_losses_db: rf.extra_losses_db,
        fspl_db: fspl_db(carrier_hz, distance_m)?,
        cn0_dbhz: cn0_dbhz(&params, distance_m)?,
    })
}

/// Nominal link budgets of both traffic directions: `[downlink, uplink]`.
/// Each direction cascades its feeder and service legs.
pub fn link_budgets(cfg: &ScenarioConfig) -> Result<[DirectionBudget; 2], SimError> {
    let g = geometry_summary(cfg);
    let fp = &cfg.frequency_plan;
    let bw = cfg.carrier.bandwidth_hz;
    let direction = |label, legs: Vec<LegBudget>| -> Result<DirectionBudget, SimError> {
        let cn0s: Vec<f64> = legs.iter().map(|l| l.cn0_dbhz).collect();
        let cascade = cascade_cn0_dbhz(&cn0s)?;
        Ok(DirectionBudget { label, legs, cascade_cn0_dbhz: cascade, snr_db: snr_db(cascade, bw)? })
    };
    let dl = direction(
        "downlink",
        vec![
            leg_budget(
                "gateway->satellite (feeder)",
                &cfg.rf.dl.feeder,
                fp.feeder_dl_hz,
                g.feeder_range_m,
                bw,
            )?,
            leg_budget(
                "satellite->ue (service)",
                &cfg.rf.dl.service,
                fp.ue_dl_hz,
                g.service_range_m,
                bw,
            )?,
        ],
    )?;
    let ul = direction(
        "uplink",
        vec![
            leg_budget(
                "ue->satellite (service)",
                &cfg.rf.ul.service,
                fp.ue_ul_hz,
                g.service_range_m,
                bw,
            )?,
            leg_budget(
                "satellite->gateway (feeder)",
                &cfg.rf.ul.feeder,
                fp.feeder_ul_hz,
                g.feeder_range_m,
                bw,
            )?,
        ],
    )?;
    Ok([dl, ul])
}

/// SIB19 state held by the UE: the parameters of the last decoded broadcast
/// and when it was received.
#[derive(Debug, Clone, Copy)]
struct UeSibState {
    params: CommonTaParams,
    eph: Ephemeris,
    acquired_t: f64,
    reacquisitions: u32,
}

struct AccessResult {
    status: RunStatus,
    t_active: Option<f64>,
    attempts: u32,
    residual_hz: f64,
    estimate_hz: Option<f64>,
    post_cal_hz: Option<f64>,
    timing: Option<TimingSummary>,
    sib: Option<UeSibState>,
}

#[derive(Default)]
struct TrafficResult {
    metrics: Vec<MetricSample>,
    pings: Vec<PingRecord>,
    ul_records: Vec<UlTransmissionRecord>,
    ping_summary: Option<PingSummary>,
    dl_summary: Option<DlSummary>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Bucket {
    bits: u64,
    slots: u64,
    errors: u64,
    snr_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ev {
    PhyWindow(u64),
    MetricTick(u64),
    PingSend(u32),
}

/// Shadowing and link adaptation state of the downlink channel. Fading steps
/// once per second as an AR(1) process with the configured stationary
/// deviation; MCS re-selection runs on its own period. Both are advanced
/// lazily by `catch_up`, so event handlers never observe a boundary late.
struct ChannelState {
    t0: f64,
    rho: f64,
    sigma_db: f64,
    update_period_s: f64,
    slope_db: f64,
    backoff_db: f64,
    nominal_snr_db: f64,
    x_db: f64,
    fading_k: u64,
    mcs_j: u64,
    mcs: McsEntry,
    tbs_bits: u64,
}

impl ChannelState {
    fn new(
        t0: f64,
        cfg: &ScenarioConfig,
        nominal_snr_db: f64,
        tbs: &[u64; 29],
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let ch = &cfg.channel;
        // Start from the stationary distribution so short runs are not
        // biased toward the nominal SNR.
        let x0 = if ch.ar1_sigma_db > 0.0 {
            Normal::new(0.0, ch.ar1_sigma_db).expect("sigma validated").sample(rng)
        } else {
            0.0
        };
        let mut state = Self {
            t0,
            rho: ch.ar1_rho,
            sigma_db: ch.ar1_sigma_db,
            update_period_s: ch.mcs_update_period_s,
            slope_db: ch.bler_slope_db,
            backoff_db: ch.mcs_backoff_db,
            nominal_snr_db,
            x_db: x0,
            fading_k: 1,
            mcs_j: 1,
            mcs: MCS_TABLE_QAM64[0],
            tbs_bits: 0,
        };
        state.reselect(tbs);
        state
    }

    fn snr_db(&self) -> f64 {
        self.nominal_snr_db + self.x_db
    }

    fn reselect(&mut self, tbs: &[u64; 29]) {
        self.mcs = select_mcs(self.snr_db(), &MCS_TABLE_QAM64, self.backoff_db);
        self.tbs_bits = tbs[self.mcs.index as usize];
    }

    /// Advances fading steps and MCS updates up to and including time `t`,
    /// interleaved in boundary order (fading first on ties, so adaptation
    /// sees the freshest SNR).
    fn catch_up(&mut self, t: f64, rng: &mut ChaCha12Rng, tbs: &[u64; 29]) {
        loop {
            let tf = self.t0 + self.fading_k as f64;
            let tm = if self.update_period_s > 0.0 {
                self.t0 + self.mcs_j as f64 * self.update_period_s
            } else {
                f64::INFINITY
            };
            let due_f = tf <= t + TIE_EPS;
            let due_m = tm <= t + TIE_EPS;
            if due_f && (!due_m || tf <= tm) {
                if self.sigma_db > 0.0 {
                    let innov_sd = self.sigma_db * (1.0 - self.rho * self.rho).sqrt();
                    let step = if innov_sd > 0.0 {
                        Normal::new(0.0, innov_sd).expect("sd finite").sample(rng)
                    } else {
                        0.0
                    };
                    self.x_db = self.rho * self.x_db + step;
                }
                self.fading_k += 1;
            } else if due_m {
                self.reselect(tbs);
                self.mcs_j += 1;
            } else {
                break;
            }
        }
    }
}

/// HARQ rounds that fail before the first success, unbounded. The truncated
/// retransmission count is `min(failures, max_retx)`; anything beyond the
/// budget means the packet is lost.
fn sample_failure_rounds(ul_bler: f64, rng: &mut ChaCha12Rng) -> u32 {
    if ul_bler <= 0.0 {
        return 0;
    }
    Geometric::new(1.0 - ul_bler).expect("ul_bler validated < 1").sample(rng) as u32
}

fn line(log: &mut Vec<String>, t: f64, msg: &str) {
    log.push(format!("[{t:.6}] {msg}"));
}

fn zero_stats() -> SummaryStats {
    SummaryStats { mean: 0.0, std: 0.0, p5: 0.0, p50: 0.0, p95: 0.0, min: 0.0, max: 0.0 }
}

/// A validated scenario plus everything derived from it up front: geometry,
/// the realized frequency plan, nominal budgets, and the TBS table.
pub struct Simulation {
    cfg: ScenarioConfig,
    seed: u64,
    sat: Ephemeris,
    geometry: GeometrySummary,
    plan: FrequencyPlan,
    nominal_dl_snr_db: f64,
    nominal_ul_snr_db: f64,
    tbs_by_index: [u64; 29],
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig, seed_override: Option<u64>) -> Result<Self, SimError> {
        cfg.validate()?;
        let seed = seed_override.unwrap_or(cfg.seed);
        let geometry = geometry_summary(cfg);
        let sat = geo_satellite_ephemeris(cfg.sites.satellite_longitude_deg, 0.0);
        // The converter LO errors are fixed hardware realizations: drawn once
        // per run, before any traffic randomness.
        let mut cascade_rng = substream(seed, "cascade");
        let plan = cfg.frequency_plan.realize(&mut cascade_rng);
        plan.validate()?;
        let [dl, ul] = link_budgets(cfg)?;
        let mut tbs_by_index = [0u64; 29];
        for (slot, mcs) in tbs_by_index.iter_mut().zip(MCS_TABLE_QAM64.iter()) {
            *slot = if cfg.fidelity.exact_tbs {
                transport_block_bits_exact(&cfg.carrier, mcs)?
            } else {
                transport_block_bits(&cfg.carrier, mcs)?
            };
        }
        Ok(Self {
            cfg: cfg.clone(),
            seed,
            sat,
            geometry,
            plan,
            nominal_dl_snr_db: dl.snr_db,
            nominal_ul_snr_db: ul.snr_db,
            tbs_by_index,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn prop_rtt(&self) -> f64 {
        self.geometry.propagation_rtt_s
    }

    /// First SIB19 broadcast instant at or after `t` (the gNB transmits on a
    /// fixed grid of the configured period).
    fn next_broadcast(&self, t: f64) -> f64 {
        let period = self.cfg.access.sib19_period_s;
        (((t - TIE_EPS) / period).ceil()).max(0.0) * period
    }

    /// Generates the broadcast for instant `t_b` and runs it through the real
    /// codec; the UE only ever sees the decoded wire image, so every
    /// quantization the air interface imposes is applied.
    fn broadcast_sib19(&self, t_b: f64) -> Sib19Message {
        let a = &self.cfg.access;
        let ta_common_us =
            if a.gnb_absorbs_feeder { 0.0 } else { 2.0 * self.geometry.feeder_delay_s * 1e6 };
        let msg = Sib19Message::from_physical(
            ta_common_us,
            0.0,
            &self.sat,
            t_b as u32,
            a.validity_duration_s,
            a.k_offset_slots,
            CELL_ID,
        )
        .expect("validated scenario yields encodable broadcast");
        let wire = sib19::encode(&msg).expect("fresh message encodes");
        sib19::decode(wire.as_bytes()).expect("own encoding decodes")
    }

    /// Checks the UE's common-TA state before an uplink transmission at `t`
    /// and reacquires SIB19 when the validity window has lapsed. Returns the
    /// instant the transmission may actually proceed.
    fn ensure_fresh_sib(&self, sib: &mut UeSibState, t: f64, log: &mut Vec<String>) -> f64 {
        if t < sib.acquired_t {
            // A reacquisition triggered by an earlier packet is still in
            // flight; this packet waits for the same broadcast.
            return sib.acquired_t;
        }
        match common_ta_at(&sib.params, t) {
            Ok(_) => t,
            Err(_) => {
                let t_b = self.next_broadcast(t);
                let msg = self.broadcast_sib19(t_b);
                line(
                    log,
                    t_b,
                    &format!(
                        "event: sib19_reacquired (epoch {:.0} s stale at {:.6} s)",
                        sib.params.epoch_s, t
                    ),
                );
                sib.params = msg.common_ta_params();
                sib.eph = msg.ephemeris();
                sib.acquired_t = t_b;
                sib.reacquisitions += 1;
                t_b
            }
        }
    }

    fn run_access(&self, log: &mut Vec<String>) -> AccessResult {
        let a = &self.cfg.access;
        let mut t = 0.0;
        line(log, t, "state: powered_on");
        line(log, t, "state: cell_search");
        t += a.cell_search_s;
        line(log, t, "event: ssb_detected");
        t += a.mib_s;
        line(log, t, "event: mib_decoded");
        t += a.sib1_s;
        line(log, t, "event: sib1_decoded");
        line(log, t, "state: sib_acquisition");

        // The UE locks its uplink carrier to the downlink it received, so the
        // forward-chain LO error transfers into the return path and adds to
        // the return-chain error at the PRACH receiver.
        let residual_hz = a.injected_offset_hz.unwrap_or_else(|| {
            self.plan.cascade_error_hz(RelayPath::Service)
                + self.plan.cascade_error_hz(RelayPath::Feeder)
        });

        let mut attempts = 0u32;
        let mut timing: Option<TimingSummary> = None;
        let mut sib: Option<UeSibState> = None;
        loop {
            let t_b = self.next_broadcast(t);
            t = t_b;
            let msg = self.broadcast_sib19(t_b);
            line(
                log,
                t,
                &format!("event: sib19_decoded (64 octets, crc ok, cell {:#011x})", msg.cell_id),
            );
            line(log, t, &format!("sib19.ta_common_us: {:.4}", msg.ta_common_us()));
            line(log, t, &format!("sib19.validity_duration_s: {}", msg.validity_duration_s));
            line(log, t, &format!("sib19.k_offset_slots: {}", msg.k_offset_slots));

            let params = msg.common_ta_params();
            let eph = msg.ephemeris();
            let ta_common = common_ta_at(&params, t).expect("fresh at its own broadcast");
            let ta_ue = ue_specific_ta(&eph, self.cfg.sites.ue, t);
            let comps = TimingAdvanceComponents {
                n_ta: 0,
                n_ta_offset: 0,
                n_ta_adj_common: to_tc_units(ta_common, TC_S),
                n_ta_adj_ue: to_tc_units(ta_ue, TC_S),
                tc_s: TC_S,
            };
            let total_ta = total_timing_advance(&comps);
            let true_rtt = if a.gnb_absorbs_feeder {
                2.0 * self.geometry.service_delay_s
            } else {
                self.prop_rtt()
            };
            let align_s = total_ta - true_rtt;
            line(log, t, &format!("ta.n_adj_common: {}", comps.n_ta_adj_common));
            line(log, t, &format!("ta.n_adj_ue: {}", comps.n_ta_adj_ue));
            line(log, t, &format!("ta.total_s: {:.9}", total_ta));
            line(log, t, &format!("ta.alignment_error_tc: {:.3}", align_s / TC_S));
            line(
                log,
                t,
                &format!(
                    "geometry.ue_look: elevation {:.2} deg, azimuth {:.2} deg",
                    self.geometry.ue_elevation_deg, self.geometry.ue_azimuth_deg
                ),
            );
            line(log, t, "state: ta_computed");
            if timing.is_none() {
                timing = Some(TimingSummary {
                    ta_common_s: ta_common,
                    ta_ue_s: ta_ue,
                    total_ta_s: total_ta,
                    ul_alignment_error_s: align_s,
                    ul_alignment_error_tc: align_s / TC_S,
                });
            }
            let reacquisitions = sib.as_ref().map_or(0, |s| s.reacquisitions);
            sib = Some(UeSibState { params, eph, acquired_t: t_b, reacquisitions });

            attempts += 1;
            line(log, t, &format!("state: rach_in_progress (attempt {attempts})"));
            line(log, t, &format!("prach.residual_hz: {residual_hz:.3}"));
            let det = prach_frequency_search(residual_hz, &a.prach);
            if let Some(est) = det.estimated_offset_hz {
                line(log, t, &format!("prach.search_estimate_hz: {est:.3}"));
            }
            line(log, t, &format!("prach.detected: {}", det.detected));
            if det.detected {
                let rtt = self.prop_rtt();
                line(log, t + rtt, "event: rar_received");
                line(log, t + 2.0 * rtt, "state: rrc_connected");
                line(log, t + 3.0 * rtt, "state: pdu_session_active");
                return AccessResult {
                    status: RunStatus::Ok,
                    t_active: Some(t + 3.0 * rtt),
                    attempts,
                    residual_hz,
                    estimate_hz: det.estimated_offset_hz,
                    post_cal_hz: det.post_calibration_error_hz,
                    timing,
                    sib,
                };
            }
            line(log, t, "event: rach_failed");
            if attempts >= a.max_rach_attempts {
                line(log, t, "state: access_failure");
                return AccessResult {
                    status: RunStatus::AccessFailure,
                    t_active: None,
                    attempts,
                    residual_hz,
                    estimate_hz: None,
                    post_cal_hz: None,
                    timing,
                    sib,
                };
            }
            line(log, t, &format!("event: rach_backoff {:.3} s", a.rach_backoff_s));
            t += a.rach_backoff_s;
        }
    }

    fn run_traffic(&self, t0: f64, sib: &mut UeSibState, log: &mut Vec<String>) -> TrafficResult {
        let tr = &self.cfg.traffic;
        let ch_cfg = &self.cfg.channel;
        let hq = &self.cfg.harq;
        let fd = &self.cfg.fidelity;

        let mut rng_fading = substream(self.seed, "fading");
        let mut rng_dl = substream(self.seed, "dl_errors");
        let mut rng_retx = substream(self.seed, "retx");

        let fb_dur = tr.fullbuffer_duration_s;
        let ping_span = if tr.ping_count > 0 {
            (tr.ping_count - 1) as f64 * tr.ping_interval_s + 1.0
        } else {
            0.0
        };
        let seconds = fb_dur.max(ping_span).ceil() as usize;

        let mut chan = ChannelState::new(
            t0,
            &self.cfg,
            self.nominal_dl_snr_db,
            &self.tbs_by_index,
            &mut rng_fading,
        );
        let mut pool = HarqPool::new(hq.process_count).expect("process count validated");
        let mut buckets = vec![Bucket::default(); seconds.max(1)];
        let w = fd.phy_aggregate_ms / 1000.0;
        let slots_per_s = self.cfg.carrier.slots_per_second();
        let gp = hq.grant_period_ms / 1000.0;
        // Without Mode B a process stays reserved for a full feedback round
        // trip per transmission round, plus the grant wait for the next round.
        let hold = self.prop_rtt() + gp;

        let mut queue: EventQueue<Ev> = EventQueue::new();
        if fb_dur > 0.0 {
            queue.schedule(t0, Ev::PhyWindow(0));
        }
        for k in 0..seconds {
            queue.schedule(t0 + (k as f64 + 1.0), Ev::MetricTick(k as u64));
        }
        for i in 0..tr.ping_count {
            queue.schedule(t0 + i as f64 * tr.ping_interval_s, Ev::PingSend(i));
        }

        let mut out = TrafficResult::default();
        let mut total = Bucket::default();
        let mut max_in_flight = 0usize;

        while let Some(ev) = queue.pop() {
            match ev.kind {
                Ev::PhyWindow(k) => {
                    let t = t0 + k as f64 * w;
                    chan.catch_up(t, &mut rng_fading, &self.tbs_by_index);
                    let w_eff = w.min(fb_dur - k as f64 * w);
                    let slots = (w_eff * slots_per_s).round() as u64;
                    let p = bler(chan.snr_db(), &chan.mcs, chan.slope_db);
                    let errors = if !ch_cfg.dl_errors || slots == 0 {
                        0
                    } else if fd.high_fidelity {
                        let mut e = 0u64;
                        for _ in 0..slots {
                            if rng_dl.random::<f64>() < p {
                                e += 1;
                            }
                        }
                        e
                    } else {
                        Binomial::new(slots, p).expect("bler in [0,1]").sample(&mut rng_dl)
                    };
                    // Bucket by window index, not by t - t0: subtracting t0 can
                    // round a boundary window into the previous (already
                    // reported) second.
                    let idx = ((k as f64 * w + TIE_EPS).floor() as usize).min(buckets.len() - 1);
                    let b = &mut buckets[idx];
                    b.bits += (slots - errors) * chan.tbs_bits;
                    b.slots += slots;
                    b.errors += errors;
                    if b.snr_db.is_none() {
                        b.snr_db = Some(chan.snr_db());
                    }
                    total.bits += (slots - errors) * chan.tbs_bits;
                    total.slots += slots;
                    total.errors += errors;
                    if (k + 1) as f64 * w < fb_dur - TIE_EPS {
                        queue.schedule(t0 + (k + 1) as f64 * w, Ev::PhyWindow(k + 1));
                    }
                }
                Ev::MetricTick(k) => {
                    let t = t0 + (k as f64 + 1.0);
                    chan.catch_up(t0 + k as f64, &mut rng_fading, &self.tbs_by_index);
                    let b = buckets[k as usize];
                    out.metrics.push(MetricSample {
                        t_s: t,
                        dl_throughput_bps: b.bits as f64,
                        dl_bler: if b.slots > 0 { b.errors as f64 / b.slots as f64 } else { 0.0 },
                        pdsch_snr_db: b.snr_db.unwrap_or_else(|| chan.snr_db()),
                        active_harq: pool.in_flight(t) as u32,
                    });
                }
                Ev::PingSend(i) => {
                    let sent = t0 + i as f64 * tr.ping_interval_s;
                    let ready = self.ensure_fresh_sib(sib, sent, log);
                    let acq = pool.acquire(ready);
                    let earliest = ready.max(acq.available_at);
                    let grant = if gp > 0.0 {
                        ((((earliest - TIE_EPS) / gp).ceil()).max(0.0) * gp).max(earliest)
                    } else {
                        earliest
                    };
                    let failures = sample_failure_rounds(hq.ul_bler, &mut rng_retx);
                    let retx = failures.min(hq.max_retx);
                    let lost = failures > hq.max_retx;
                    pool.commit_transmission(acq.process_id, grant, hold, retx)
                        .expect("grant never precedes process availability");
                    max_in_flight = max_in_flight.max(pool.in_flight(grant + TIE_EPS));
                    // Each retransmission round costs one feedback round trip;
                    // the surviving copy then rides the same propagation path.
                    let complete = grant + (retx as f64 + 1.0) * self.prop_rtt();
                    out.ul_records.push(UlTransmissionRecord {
                        seq: (i + 1) as u64,
                        enqueue_t_s: sent,
                        grant_t_s: grant,
                        tx_t_s: grant,
                        complete_t_s: complete,
                        retx_count: retx,
                        process_id: acq.process_id,
                    });
                    out.pings.push(PingRecord {
                        seq: i + 1,
                        sent_t_s: sent,
                        rtt_s: if lost { None } else { Some(complete - sent) },
                        retx_count: retx,
                    });
                }
            }
        }

        if tr.ping_count > 0 {
            let delivered: Vec<f64> = out.pings.iter().filter_map(|p| p.rtt_s).collect();
            let rtt_s = if delivered.is_empty() {
                zero_stats()
            } else {
                collect_summary(&delivered).expect("non-empty")
            };
            out.ping_summary = Some(PingSummary {
                count: tr.ping_count,
                delivered: delivered.len() as u32,
                lost: tr.ping_count - delivered.len() as u32,
                max_in_flight: max_in_flight as u32,
                rtt_s,
            });
        }
        if fb_dur > 0.0 {
            let fb_secs = (fb_dur + TIE_EPS).floor() as usize;
            let mean_throughput_bps = total.bits as f64 / fb_dur;
            let mut rows: Vec<f64> =
                out.metrics.iter().take(fb_secs).map(|m| m.dl_throughput_bps).collect();
            let mut snrs: Vec<f64> =
                out.metrics.iter().take(fb_secs).map(|m| m.pdsch_snr_db).collect();
            if rows.is_empty() {
                // Sub-second run: one aggregate row stands in for the series.
                rows.push(mean_throughput_bps);
                snrs.push(self.nominal_dl_snr_db);
            }
            let throughput_bps = collect_summary(&rows).expect("non-empty");
            let pdsch_snr_db = collect_summary(&snrs).expect("non-empty");
            out.dl_summary = Some(DlSummary {
                duration_s: fb_dur,
                delivered_bits: total.bits,
                mean_throughput_bps,
                spectral_efficiency_bps_hz: mean_throughput_bps / self.cfg.carrier.bandwidth_hz,
                mean_bler: if total.slots > 0 {
                    total.errors as f64 / total.slots as f64
                } else {
                    0.0
                },
                throughput_bps,
                pdsch_snr_db,
            });
        }
        out
    }

    pub fn run(&self) -> SimOutput {
        let mut log = Vec::new();
        let mut access = self.run_access(&mut log);
        let mut traffic = TrafficResult::default();
        if access.status == RunStatus::Ok {
            let t0 = access.t_active.expect("successful access has a start time");
            let sib = access.sib.as_mut().expect("successful access decoded sib19");
            traffic = self.run_traffic(t0, sib, &mut log);
        }
        let initial_mcs =
            select_mcs(self.nominal_dl_snr_db, &MCS_TABLE_QAM64, self.cfg.channel.mcs_backoff_db);
        let summary = RunSummary {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            status: access.status,
            seed_used: self.seed,
            scenario: self.cfg.clone(),
            geometry: self.geometry,
            access: AccessSummary {
                success: access.status == RunStatus::Ok,
                rach_attempts: access.attempts,
                t_connected_s: access.t_active,
                residual_freq_hz: access.residual_hz,
                estimated_freq_hz: access.estimate_hz,
                post_calibration_error_hz: access.post_cal_hz,
                sib19_reacquisitions: access.sib.as_ref().map_or(0, |s| s.reacquisitions),
            },
            timing: access.timing,
            link: LinkSummary {
                nominal_pdsch_snr_db: self.nominal_dl_snr_db,
                nominal_pusch_snr_db: self.nominal_ul_snr_db,
                initial_mcs_index: initial_mcs.index,
                theoretical_throughput_bps: self.tbs_by_index[initial_mcs.index as usize] as f64
                    * self.cfg.carrier.slots_per_second(),
                service_cascade_error_hz: self.plan.cascade_error_hz(RelayPath::Service),
                feeder_cascade_error_hz: self.plan.cascade_error_hz(RelayPath::Feeder),
            },
            ping: traffic.ping_summary,
            dl: traffic.dl_summary,
        };
        let mut access_log = log.join("\n");
        access_log.push('\n');
        SimOutput {
            summary,
            metrics: traffic.metrics,
            pings: traffic.pings,
            ul_records: traffic.ul_records,
            access_log,
        }
    }
}

/// Validates and runs a scenario. `seed_override` replaces the scenario seed
/// without touching any other input.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    seed_override: Option<u64>,
) -> Result<SimOutput, SimError> {
    Ok(Simulation::new(cfg, seed_override)?.run())
}

/// Writes the five run artifacts into `dir`. All float columns use fixed
/// 6-decimal formatting, so identical runs produce byte-identical files.
pub fn write_outputs(dir: &Path, out: &SimOutput) -> Result<(), SimError> {
    std::fs::create_dir_all(dir)?;

    let mut metrics = String::from("t_s,dl_throughput_bps,dl_bler,pdsch_snr_db,active_harq\n");
    for m in &out.metrics {
        metrics.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt6(m.t_s),
            fmt6(m.dl_throughput_bps),
            fmt6(m.dl_bler),
            fmt6(m.pdsch_snr_db),
            m.active_harq
        ));
    }
    std::fs::write(dir.join("metrics.csv"), metrics)?;

    let mut ping = String::from("seq,sent_t_s,rtt_ms,retx_count\n");
    for p in &out.pings {
        let rtt = match p.rtt_s {
            Some(rtt_s) => fmt6(rtt_s * 1e3),
            None => "lost".to_string(),
        };
        ping.push_str(&format!("{},{},{},{}\n", p.seq, fmt6(p.sent_t_s), rtt, p.retx_count));
    }
    std::fs::write(dir.join("ping.csv"), ping)?;

    let mut ul =
        String::from("seq,enqueue_t_s,grant_t_s,tx_t_s,complete_t_s,retx_count,process_id\n");
    for r in &out.ul_records {
        ul.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.seq,
            fmt6(r.enqueue_t_s),
            fmt6(r.grant_t_s),
            fmt6(r.tx_t_s),
            fmt6(r.complete_t_s),
            r.retx_count,
            r.process_id
        ));
    }
    std::fs::write(dir.join("ul_harq.csv"), ul)?;

    std::fs::write(dir.join("access.log"), &out.access_log)?;

    let mut summary = serde_json::to_string_pretty(&out.summary)?;
    summary.push('\n');
    std::fs::write(dir.join("summary.json"), summary)?;
    Ok(())
}
