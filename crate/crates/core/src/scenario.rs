//! Scenario files: the single artifact that fully determines a run.
//!
//! The format is TOML against the schema below (see docs/scenario-schema.md
//! in the repo for the field-by-field contract). Parsing is strict: unknown
//! keys are rejected, missing required fields are named, and every value is
//! range-checked against the preconditions of the module that consumes it,
//! so a scenario that loads will also run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GroundPosition;
use crate::phy::CarrierConfig;
use crate::relay::FrequencyPlanSpec;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("field `{field}` out of range: {reason}")]
    OutOfRange { field: String, reason: String },
    #[error("cannot read scenario: {0}")]
    Io(String),
    #[error("scenario syntax: {0}")]
    Syntax(String),
}

/// Ground segment and satellite placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sites {
    pub gateway: GroundPosition,
    pub ue: GroundPosition,
    pub satellite_longitude_deg: f64,
}

/// One leg of a link budget (the carrier and bandwidth come from the
/// frequency plan and carrier config).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegRf {
    pub eirp_dbw: f64,
    pub g_over_t_dbk: f64,
    #[serde(default)]
    pub extra_losses_db: f64,
}

/// Per-direction RF parameters: each direction crosses the feeder and the
/// service leg of the bent pipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionRf {
    pub feeder: LegRf,
    pub service: LegRf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfConfig {
    pub dl: DirectionRf,
    pub ul: DirectionRf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarqConfig {
    pub process_count: usize,
    pub max_retx: u32,
    /// Uplink block-error probability per transmission round; a calibration
    /// parameter, not derived from the UL budget.
    pub ul_bler: f64,
    /// Configured-grant period. 0 means a grant is always available.
    pub grant_period_ms: f64,
    /// Downlink HARQ feedback; disabled by default, so PDSCH errors are
    /// lost throughput rather than retransmissions.
    pub dl_harq: bool,
}

impl Default for HarqConfig {
    fn default() -> Self {
        Self { process_count: 16, max_retx: 4, ul_bler: 0.2, grant_period_ms: 20.0, dl_harq: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrachConfig {
    /// Whether the receiver sweeps a frequency grid around the nominal
    /// PRACH position before declaring detection.
    pub search_enabled: bool,
    pub search_window_hz: f64,
    pub search_step_hz: f64,
    /// Detection window without search: half the PRACH subcarrier spacing.
    pub no_search_threshold_hz: f64,
}

impl Default for PrachConfig {
    fn default() -> Self {
        Self {
            search_enabled: true,
            search_window_hz: 12_000.0,
            search_step_hz: 100.0,
            no_search_threshold_hz: 625.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccessConfig {
    pub cell_search_s: f64,
    pub mib_s: f64,
    pub sib1_s: f64,
    /// SIB19 broadcast period.
    pub sib19_period_s: f64,
    /// Validity window broadcast in SIB19; multiples of 5 s in [5, 900].
    pub validity_duration_s: u16,
    pub k_offset_slots: u16,
    pub max_rach_attempts: u32,
    pub rach_backoff_s: f64,
    pub prach: PrachConfig,
    /// Test hook: overrides the sampled converter-cascade error seen by the
    /// PRACH receiver with a fixed value.
    pub injected_offset_hz: Option<f64>,
    /// When true the gNB pre-compensates the feeder link itself and
    /// broadcasts ta_common = 0.
    pub gnb_absorbs_feeder: bool,
}

impl Default for AccessConfig {
    fn default() -> Self {
        Self {
            cell_search_s: 0.2,
            mib_s: 0.2,
            sib1_s: 0.2,
            sib19_period_s: 0.16,
            validity_duration_s: 120,
            k_offset_slots: 512,
            max_rach_attempts: 8,
            rach_backoff_s: 1.0,
            prach: PrachConfig::default(),
            injected_offset_hz: None,
            gnb_absorbs_feeder: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// AR(1) per-second correlation of the SNR shadowing process.
    pub ar1_rho: f64,
    /// Stationary standard deviation of the shadowing, dB.
    pub ar1_sigma_db: f64,
    /// How often link adaptation re-selects the MCS from the current SNR.
    /// 0 selects once at traffic start and holds.
    pub mcs_update_period_s: f64,
    pub mcs_backoff_db: f64,
    pub bler_slope_db: f64,
    /// When false the downlink is error-free regardless of SNR (ideal-floor
    /// scenarios); the BLER curve still reports its value in metrics.
    pub dl_errors: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            ar1_rho: 0.99,
            ar1_sigma_db: 1.5,
            mcs_update_period_s: 1.0,
            mcs_backoff_db: crate::phy::DEFAULT_MCS_BACKOFF_DB,
            bler_slope_db: crate::phy::DEFAULT_BLER_SLOPE_DB,
            dl_errors: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    /// Full-buffer downlink duration; 0 disables the flow.
    pub fullbuffer_duration_s: f64,
    /// Number of pings; 0 disables the flow.
    pub ping_count: u32,
    pub ping_interval_s: f64,
    #[serde(default = "default_ping_payload")]
    pub ping_payload_bytes: u32,
}

fn default_ping_payload() -> u32 {
    32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityConfig {
    /// Per-slot PHY evaluation instead of aggregated windows.
    pub high_fidelity: bool,
    /// Aggregation window for the fast path, ms.
    pub phy_aggregate_ms: f64,
    /// Use exact 3GPP transport-block sizing instead of the floor formula.
    pub exact_tbs: bool,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self { high_fidelity: false, phy_aggregate_ms: 100.0, exact_tbs: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub sites: Sites,
    pub frequency_plan: FrequencyPlanSpec,
    pub rf: RfConfig,
    #[serde(default)]
    pub carrier: CarrierConfig,
    #[serde(default)]
    pub harq: HarqConfig,
    #[serde(default)]
    pub access: AccessConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub fidelity: FidelityConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let range = |field: &str, reason: String| ScenarioError::OutOfRange {
            field: field.to_string(),
            reason,
        };

        if self.name.is_empty() {
            return Err(range("name", "must be non-empty".into()));
        }
        self.sites.gateway.validate().map_err(|e| range("sites.gateway", e.to_string()))?;
        self.sites.ue.validate().map_err(|e| range("sites.ue", e.to_string()))?;
        let lon = self.sites.satellite_longitude_deg;
        if !lon.is_finite() || !(-180.0..180.0).contains(&lon) {
            return Err(range(
                "sites.satellite_longitude_deg",
                format!("{lon} not in [-180, 180)"),
            ));
        }

        self.frequency_plan.validate().map_err(|e| range("frequency_plan", e.to_string()))?;
        self.carrier.validate().map_err(|e| range("carrier", e.to_string()))?;

        for (name, leg) in [
            ("rf.dl.feeder", &self.rf.dl.feeder),
            ("rf.dl.service", &self.rf.dl.service),
            ("rf.ul.feeder", &self.rf.ul.feeder),
            ("rf.ul.service", &self.rf.ul.service),
        ] {
            if !(leg.extra_losses_db >= 0.0) {
                return Err(range(name, "extra_losses_db must be >= 0".into()));
            }
            if !leg.eirp_dbw.is_finite() || !leg.g_over_t_dbk.is_finite() {
                return Err(range(name, "EIRP and G/T must be finite".into()));
            }
        }

        let h = &self.harq;
        if h.process_count == 0 || h.process_count > crate::harq::MAX_PROCESS_COUNT {
            return Err(range(
                "harq.process_count",
                format!("{} not in 1..={}", h.process_count, crate::harq::MAX_PROCESS_COUNT),
            ));
        }
        if h.max_retx > 16 {
            return Err(range("harq.max_retx", format!("{} above 16", h.max_retx)));
        }
        if !(0.0..1.0).contains(&h.ul_bler) {
            return Err(range("harq.ul_bler", format!("{} not in [0, 1)", h.ul_bler)));
        }
        if !(h.grant_period_ms >= 0.0) {
            return Err(range("harq.grant_period_ms", "must be >= 0".into()));
        }

        let a = &self.access;
        for (name, v) in [
            ("access.cell_search_s", a.cell_search_s),
            ("access.mib_s", a.mib_s),
            ("access.sib1_s", a.sib1_s),
            ("access.rach_backoff_s", a.rach_backoff_s),
        ] {
            if !(v >= 0.0) {
                return Err(range(name, "must be >= 0".into()));
            }
        }
        if !(a.sib19_period_s > 0.0) {
            return Err(range("access.sib19_period_s", "must be > 0".into()));
        }
        let v = a.validity_duration_s;
        if !(5..=900).contains(&v) || !v.is_multiple_of(5) {
            return Err(range(
                "access.validity_duration_s",
                format!("{v} not a multiple of 5 in [5, 900]"),
            ));
        }
        if a.k_offset_slots > 1023 {
            return Err(range("access.k_offset_slots", format!("{} above 1023", a.k_offset_slots)));
        }
        if a.max_rach_attempts == 0 {
            return Err(range("access.max_rach_attempts", "must be >= 1".into()));
        }
        if a.prach.search_enabled && !(a.prach.search_step_hz > 0.0) {
            return Err(range("access.prach.search_step_hz", "must be > 0".into()));
        }
        if a.prach.search_enabled && !(a.prach.search_window_hz > 0.0) {
            return Err(range("access.prach.search_window_hz", "must be > 0".into()));
        }
        if !(a.prach.no_search_threshold_hz > 0.0) {
            return Err(range("access.prach.no_search_threshold_hz", "must be > 0".into()));
        }

        let c = &self.channel;
        if !(0.0..1.0).contains(&c.ar1_rho) {
            return Err(range("channel.ar1_rho", format!("{} not in [0, 1)", c.ar1_rho)));
        }
        if !(c.ar1_sigma_db >= 0.0) {
            return Err(range("channel.ar1_sigma_db", "must be >= 0".into()));
        }
        if !(c.mcs_update_period_s >= 0.0) {
            return Err(range("channel.mcs_update_period_s", "must be >= 0".into()));
        }
        if !(c.bler_slope_db > 0.0) {
            return Err(range("channel.bler_slope_db", "must be > 0".into()));
        }

        let t = &self.traffic;
        if !(t.fullbuffer_duration_s >= 0.0) {
            return Err(range("traffic.fullbuffer_duration_s", "must be >= 0".into()));
        }
        if !(t.ping_interval_s >= 0.0) {
            return Err(range("traffic.ping_interval_s", "must be >= 0".into()));
        }
        if t.fullbuffer_duration_s == 0.0 && t.ping_count == 0 {
            return Err(range("traffic", "at least one traffic flow must be enabled".into()));
        }

        let f = &self.fidelity;
        if !f.high_fidelity && !(f.phy_aggregate_ms >= 1.0 && f.phy_aggregate_ms <= 1000.0) {
            return Err(range("fidelity.phy_aggregate_ms", "must be in [1, 1000]".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and fully validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&text)
}

/// Parses and fully validates scenario text.
pub fn parse_scenario_str(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(classify_toml_error)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Maps serde/toml messages onto the stable error kinds. The deserializer
/// reports missing and unknown fields with the field name in backticks.
fn classify_toml_error(e: toml::de::Error) -> ScenarioError {
    let msg = e.message().to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(name) = rest.split('`').next() {
            return ScenarioError::MissingField(name.to_string());
        }
    }
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        if let Some(name) = rest.split('`').next() {
            return ScenarioError::UnknownKey(name.to_string());
        }
    }
    ScenarioError::Syntax(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_toml() -> String {
        r#"
name = "unit_test"
seed = 7

[sites]
satellite_longitude_deg = 142.0

[sites.gateway]
latitude_deg = 39.9
longitude_deg = 116.4
altitude_m = 50.0

[sites.ue]
latitude_deg = 31.2
longitude_deg = 121.2
altitude_m = 20.0

[frequency_plan]
ue_ul_hz = 1.9975e9
ue_dl_hz = 2.1855e9
feeder_ul_hz = 14.0e9
feeder_dl_hz = 12.2e9

[[frequency_plan.service_stages]]
lo_hz = 11.0025e9
lo_error_bound_hz = 3000.0

[[frequency_plan.service_stages]]
lo_hz = 1.0e9
lo_error_bound_hz = 3000.0

[[frequency_plan.feeder_stages]]
lo_hz = 10.0145e9
lo_error_bound_hz = 0.0

[rf.dl.feeder]
eirp_dbw = 54.0
g_over_t_dbk = -3.0

[rf.dl.service]
eirp_dbw = 40.0
g_over_t_dbk = -11.0
extra_losses_db = 2.0

[rf.ul.service]
eirp_dbw = 3.0
g_over_t_dbk = -1.0

[rf.ul.feeder]
eirp_dbw = 30.0
g_over_t_dbk = 16.5

[traffic]
fullbuffer_duration_s = 10.0
ping_count = 10
ping_interval_s = 1.0
"#
        .to_string()
    }

    #[test]
    fn sample_parses_with_defaults_applied() {
        let cfg = parse_scenario_str(&sample_toml()).unwrap();
        assert_eq!(cfg.name, "unit_test");
        assert_eq!(cfg.harq.process_count, 16);
        assert_eq!(cfg.carrier.prb_count, 25);
        assert_eq!(cfg.access.validity_duration_s, 120);
        assert!(cfg.channel.dl_errors);
        assert_eq!(cfg.traffic.ping_payload_bytes, 32);
    }

    #[test]
    fn missing_required_field_is_named() {
        let text = sample_toml().replace("seed = 7", "");
        assert_eq!(parse_scenario_str(&text), Err(ScenarioError::MissingField("seed".into())));
    }

    #[test]
    fn unknown_key_is_named() {
        let text = sample_toml() + "\n[harq]\nprocess_cout = 16\n";
        assert_eq!(
            parse_scenario_str(&text),
            Err(ScenarioError::UnknownKey("process_cout".into()))
        );
    }

    #[test]
    fn out_of_band_ul_center_rejected() {
        let text = sample_toml().replace("ue_ul_hz = 1.9975e9", "ue_ul_hz = 2.5e9");
        match parse_scenario_str(&text) {
            Err(ScenarioError::OutOfRange { field, reason }) => {
                assert_eq!(field, "frequency_plan");
                assert!(reason.contains("1980-2010"), "{reason}");
            }
            other => panic!("expected OutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn module_preconditions_checked_at_load() {
        let bad = |needle: &str, replacement: &str| {
            let text = sample_toml().replace(needle, replacement);
            parse_scenario_str(&text).unwrap_err()
        };

        assert!(matches!(
            bad("[traffic]", "[harq]\nul_bler = 1.5\n\n[traffic]"),
            ScenarioError::OutOfRange { field, .. } if field == "harq.ul_bler"
        ));
        assert!(matches!(
            bad("[traffic]", "[access]\nvalidity_duration_s = 7\n\n[traffic]"),
            ScenarioError::OutOfRange { field, .. } if field == "access.validity_duration_s"
        ));
        assert!(matches!(
            bad("[traffic]", "[carrier]\nprb_count = 300\n\n[traffic]"),
            ScenarioError::OutOfRange { field, .. } if field == "carrier"
        ));
        assert!(matches!(
            bad("latitude_deg = 31.2", "latitude_deg = 95.0"),
            ScenarioError::OutOfRange { field, .. } if field == "sites.ue"
        ));
        assert!(matches!(
            bad("fullbuffer_duration_s = 10.0\nping_count = 10", "fullbuffer_duration_s = 0.0\nping_count = 0"),
            ScenarioError::OutOfRange { field, .. } if field == "traffic"
        ));
    }

    #[test]
    fn parse_serialize_parse_is_identity() {
        let cfg = parse_scenario_str(&sample_toml()).unwrap();
        let text = cfg.to_toml();
        let again = parse_scenario_str(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn syntax_errors_are_reported_as_syntax() {
        assert!(matches!(parse_scenario_str("name = ["), Err(ScenarioError::Syntax(_))));
    }
}
