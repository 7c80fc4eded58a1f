//! Run summaries: sample statistics, the summary.json schema, and the
//! human-readable report generated from a completed run directory.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::ScenarioConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("empty series")]
    EmptySeries,
    #[error("incomplete run directory, missing: {}", .0.join(", "))]
    IncompleteRun(Vec<String>),
    #[error("cannot read run artifact: {0}")]
    Io(String),
    #[error("malformed run artifact: {0}")]
    Parse(String),
}

/// Files every completed run directory must contain.
pub const RUN_FILES: [&str; 5] =
    ["metrics.csv", "ping.csv", "ul_harq.csv", "access.log", "summary.json"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
}

/// Standard sample statistics; std uses the n-1 denominator (0 for a single
/// sample), percentiles interpolate linearly between order statistics.
pub fn collect_summary(series: &[f64]) -> Result<SummaryStats, ReportError> {
    if series.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let std = if series.len() < 2 {
        0.0
    } else {
        (series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let percentile = |q: f64| -> f64 {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        if lo + 1 < sorted.len() {
            sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
        } else {
            sorted[lo]
        }
    };
    Ok(SummaryStats {
        mean,
        std,
        p5: percentile(0.05),
        p50: percentile(0.50),
        p95: percentile(0.95),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    AccessFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub service_range_m: f64,
    pub feeder_range_m: f64,
    pub service_delay_s: f64,
    pub feeder_delay_s: f64,
    pub propagation_rtt_s: f64,
    pub ue_elevation_deg: f64,
    pub ue_azimuth_deg: f64,
    pub gw_elevation_deg: f64,
    pub gw_azimuth_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessSummary {
    pub success: bool,
    pub rach_attempts: u32,
    pub t_connected_s: Option<f64>,
    /// Post-conversion frequency error the PRACH receiver had to absorb.
    pub residual_freq_hz: f64,
    pub estimated_freq_hz: Option<f64>,
    pub post_calibration_error_hz: Option<f64>,
    pub sib19_reacquisitions: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub ta_common_s: f64,
    pub ta_ue_s: f64,
    pub total_ta_s: f64,
    /// Applied TA minus the true geometric round trip.
    pub ul_alignment_error_s: f64,
    pub ul_alignment_error_tc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub nominal_pdsch_snr_db: f64,
    pub nominal_pusch_snr_db: f64,
    pub initial_mcs_index: u8,
    pub theoretical_throughput_bps: f64,
    /// Realized LO error totals of the two converter chains.
    pub service_cascade_error_hz: f64,
    pub feeder_cascade_error_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PingSummary {
    pub count: u32,
    pub delivered: u32,
    pub lost: u32,
    /// Peak number of simultaneously occupied uplink HARQ processes.
    pub max_in_flight: u32,
    /// Over delivered pings only; all-zero when every ping was lost.
    pub rtt_s: SummaryStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlSummary {
    pub duration_s: f64,
    pub delivered_bits: u64,
    pub mean_throughput_bps: f64,
    pub spectral_efficiency_bps_hz: f64,
    pub mean_bler: f64,
    pub throughput_bps: SummaryStats,
    pub pdsch_snr_db: SummaryStats,
}

/// Contents of summary.json: everything a report needs without re-reading
/// the CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tool_version: String,
    pub status: RunStatus,
    pub seed_used: u64,
    pub scenario: ScenarioConfig,
    pub geometry: GeometrySummary,
    pub access: AccessSummary,
    pub timing: Option<TimingSummary>,
    pub link: LinkSummary,
    pub ping: Option<PingSummary>,
    pub dl: Option<DlSummary>,
}

/// Fixed 6-decimal float formatting shared by all CSV writers, so replays
/// can be compared byte for byte.
pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

/// Renders the report for a completed run directory.
pub fn render_report(run_dir: &Path) -> Result<String, ReportError> {
    let missing: Vec<String> =
        RUN_FILES.iter().filter(|f| !run_dir.join(f).is_file()).map(|f| f.to_string()).collect();
    if !missing.is_empty() {
        return Err(ReportError::IncompleteRun(missing));
    }
    let raw = std::fs::read_to_string(run_dir.join("summary.json"))
        .map_err(|e| ReportError::Io(e.to_string()))?;
    let summary: RunSummary =
        serde_json::from_str(&raw).map_err(|e| ReportError::Parse(e.to_string()))?;
    Ok(render_summary(&summary))
}

fn stats_row(name: &str, s: &SummaryStats, scale: f64) -> String {
    format!(
        "  {name:<22} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}\n",
        s.mean * scale,
        s.std * scale,
        s.p5 * scale,
        s.p50 * scale,
        s.p95 * scale,
        s.min * scale,
        s.max * scale,
    )
}

fn check_line(out: &mut String, label: &str, value: Option<f64>, ok: Option<bool>) {
    let verdict = match (value, ok) {
        (None, _) => "n/a".to_string(),
        (Some(v), Some(true)) => format!("pass ({v:.4})"),
        (Some(v), Some(false)) => format!("FAIL ({v:.4})"),
        (Some(v), None) => format!("({v:.4})"),
    };
    out.push_str(&format!("  {label:<44} {verdict}\n"));
}

/// Renders report text from a parsed summary. Pure and deterministic:
/// regenerating from the same summary yields identical text.
pub fn render_summary(s: &RunSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "run report: {} (seed {})\nstatus: {}\ntool: ntnsim-core {}\n\n",
        s.scenario.name,
        s.seed_used,
        match s.status {
            RunStatus::Ok => "ok",
            RunStatus::AccessFailure => "access_failure",
        },
        s.tool_version,
    ));

    let g = &s.geometry;
    out.push_str("geometry\n");
    out.push_str(&format!(
        "  service link: {:.1} km, elevation {:.2} deg, azimuth {:.2} deg\n",
        g.service_range_m / 1000.0,
        g.ue_elevation_deg,
        g.ue_azimuth_deg
    ));
    out.push_str(&format!(
        "  feeder link:  {:.1} km, elevation {:.2} deg, azimuth {:.2} deg\n",
        g.feeder_range_m / 1000.0,
        g.gw_elevation_deg,
        g.gw_azimuth_deg
    ));
    out.push_str(&format!(
        "  one-way delays: service {:.6} s, feeder {:.6} s, rtt {:.6} s\n\n",
        g.service_delay_s, g.feeder_delay_s, g.propagation_rtt_s
    ));

    let a = &s.access;
    out.push_str("access\n");
    out.push_str(&format!(
        "  success: {}, rach attempts: {}, residual {:.1} Hz, estimate {}\n",
        a.success,
        a.rach_attempts,
        a.residual_freq_hz,
        a.estimated_freq_hz.map_or("none".to_string(), |e| format!("{e:.1} Hz")),
    ));
    if let Some(t) = a.t_connected_s {
        out.push_str(&format!("  pdu session active at t = {t:.6} s\n"));
    }
    if let Some(tm) = &s.timing {
        out.push_str(&format!(
            "  ta  common {:.9} s + ue {:.9} s = {:.9} s (alignment error {:.3} Tc)\n",
            tm.ta_common_s, tm.ta_ue_s, tm.total_ta_s, tm.ul_alignment_error_tc
        ));
    }
    out.push('\n');

    out.push_str(&format!(
        "link\n  nominal pdsch snr {:.2} dB, initial mcs {}, theoretical {:.3} Mbps\n\n",
        s.link.nominal_pdsch_snr_db,
        s.link.initial_mcs_index,
        s.link.theoretical_throughput_bps / 1e6
    ));

    out.push_str(&format!(
        "  {:<22} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
        "series", "mean", "std", "p5", "p50", "p95", "min", "max"
    ));
    if let Some(p) = &s.ping {
        out.push_str(&stats_row("rtt_s", &p.rtt_s, 1.0));
    }
    if let Some(d) = &s.dl {
        out.push_str(&stats_row("dl_throughput_mbps", &d.throughput_bps, 1e-6));
        out.push_str(&stats_row("pdsch_snr_db", &d.pdsch_snr_db, 1.0));
    }
    out.push('\n');

    out.push_str("calibration checks (default-scenario targets)\n");
    let p = s.ping.as_ref();
    check_line(
        &mut out,
        "ping mean rtt in [0.85, 1.20] s",
        p.map(|p| p.rtt_s.mean),
        p.map(|p| (0.85..=1.20).contains(&p.rtt_s.mean)),
    );
    check_line(
        &mut out,
        "ping rtt std in [0.19, 0.45] s",
        p.map(|p| p.rtt_s.std),
        p.map(|p| (0.19..=0.45).contains(&p.rtt_s.std)),
    );
    check_line(
        &mut out,
        "ping rtt min >= 0.5 s",
        p.map(|p| p.rtt_s.min),
        p.map(|p| p.rtt_s.min >= 0.5),
    );
    check_line(
        &mut out,
        "ping rtt max <= 2.2 s",
        p.map(|p| p.rtt_s.max),
        p.map(|p| p.rtt_s.max <= 2.2),
    );
    let d = s.dl.as_ref();
    check_line(
        &mut out,
        "dl mean throughput in [4.2, 6.4] Mbps",
        d.map(|d| d.mean_throughput_bps / 1e6),
        d.map(|d| (4.2e6..=6.4e6).contains(&d.mean_throughput_bps)),
    );
    check_line(
        &mut out,
        "spectral efficiency in [0.84, 1.28] bps/Hz",
        d.map(|d| d.spectral_efficiency_bps_hz),
        d.map(|d| (0.84..=1.28).contains(&d.spectral_efficiency_bps_hz)),
    );
    check_line(
        &mut out,
        "dl mean bler < 1%",
        d.map(|d| d.mean_bler),
        d.map(|d| d.mean_bler < 0.01),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_constant_series() {
        let s = collect_summary(&[2.5, 2.5, 2.5]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.p50, 2.5);
        assert_eq!((s.min, s.max), (2.5, 2.5));
    }

    #[test]
    fn summary_of_one_two_three() {
        let s = collect_summary(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 1.0).abs() < 1e-12);
        assert_eq!(s.p50, 2.0);
        assert_eq!((s.min, s.max), (1.0, 3.0));
        assert!((s.p5 - 1.1).abs() < 1e-12);
        assert!((s.p95 - 2.9).abs() < 1e-12);
    }

    #[test]
    fn summary_rejects_empty_and_handles_singleton() {
        assert_eq!(collect_summary(&[]), Err(ReportError::EmptySeries));
        let s = collect_summary(&[7.0]).unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!(s.mean, 7.0);
        assert_eq!(s.p95, 7.0);
    }

    #[test]
    fn percentiles_are_order_statistics() {
        let series: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let s = collect_summary(&series).unwrap();
        assert_eq!(s.p5, 5.0);
        assert_eq!(s.p50, 50.0);
        assert_eq!(s.p95, 95.0);
    }

    #[test]
    fn fixed_formatting_is_six_decimals() {
        assert_eq!(fmt6(0.5), "0.500000");
        assert_eq!(fmt6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt6(-2.0), "-2.000000");
    }

    #[test]
    fn missing_files_reported_by_name() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("metrics.csv"), "x").unwrap();
        match render_report(dir.path()) {
            Err(ReportError::IncompleteRun(missing)) => {
                assert!(missing.contains(&"ping.csv".to_string()));
                assert!(!missing.contains(&"metrics.csv".to_string()));
            }
            other => panic!("expected IncompleteRun, got {other:?}"),
        }
    }
}
