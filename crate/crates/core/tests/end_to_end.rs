//! Public-API integration: scenario text in, artifacts and report out,
//! with independent cross-checks of the geometry and SIB19 surfaces.

use ntnsim_core::constants::EARTH_RADIUS_M;
use ntnsim_core::geo::{
    geo_satellite_ephemeris, geodetic_to_ecef, look_angles, propagation_delay, slant_range,
};
use ntnsim_core::report::{render_report, render_summary, RunStatus, RUN_FILES};
use ntnsim_core::scenario::parse_scenario_str;
use ntnsim_core::sib19;
use ntnsim_core::sim::{run_scenario, write_outputs};

const SCENARIO: &str = r#"
name = "e2e"
seed = 5

[sites]
satellite_longitude_deg = 142.0

[sites.gateway]
latitude_deg = 39.9
longitude_deg = 116.4
altitude_m = 35.0

[sites.ue]
latitude_deg = 31.2
longitude_deg = 121.2
altitude_m = 20.0

[frequency_plan]
ue_ul_hz = 1.9975e9
ue_dl_hz = 2.185e9
feeder_ul_hz = 12.2e9
feeder_dl_hz = 14.25e9

[[frequency_plan.service_stages]]
lo_hz = 9.2025e9

[[frequency_plan.service_stages]]
lo_hz = 1.0e9

[[frequency_plan.feeder_stages]]
lo_hz = 12.065e9

[rf.dl.feeder]
eirp_dbw = 68.0
g_over_t_dbk = -1.5
extra_losses_db = 0.5

[rf.dl.service]
eirp_dbw = 54.0
g_over_t_dbk = -11.0
extra_losses_db = 1.0

[rf.ul.service]
eirp_dbw = 15.0
g_over_t_dbk = 18.0
extra_losses_db = 0.5

[rf.ul.feeder]
eirp_dbw = 30.0
g_over_t_dbk = 30.0
extra_losses_db = 0.5

[traffic]
fullbuffer_duration_s = 5.0
ping_count = 10
ping_interval_s = 0.2
"#;

#[test]
fn scenario_text_to_artifacts_to_report() {
    let cfg = parse_scenario_str(SCENARIO).unwrap();
    let out = run_scenario(&cfg, None).unwrap();
    assert_eq!(out.summary.status, RunStatus::Ok);

    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &out).unwrap();
    for f in RUN_FILES {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    // The report renders from summary.json alone and must agree with the
    // in-memory summary, floats included.
    assert_eq!(render_report(dir.path()).unwrap(), render_summary(&out.summary));
}

#[test]
fn summary_geometry_agrees_with_direct_queries() {
    let cfg = parse_scenario_str(SCENARIO).unwrap();
    let out = run_scenario(&cfg, None).unwrap();
    let g = &out.summary.geometry;

    let sat = geo_satellite_ephemeris(cfg.sites.satellite_longitude_deg, 0.0).position_at(0.0);
    let ue = geodetic_to_ecef(cfg.sites.ue, EARTH_RADIUS_M);
    let gw = geodetic_to_ecef(cfg.sites.gateway, EARTH_RADIUS_M);

    assert!((g.service_range_m - slant_range(ue, sat)).abs() < 1e-3);
    assert!((g.feeder_range_m - slant_range(gw, sat)).abs() < 1e-3);
    assert!((g.service_delay_s - propagation_delay(g.service_range_m)).abs() < 1e-15);
    let rtt = 2.0 * (g.service_delay_s + g.feeder_delay_s);
    assert!((g.propagation_rtt_s - rtt).abs() < 1e-12);

    let ue_look = look_angles(cfg.sites.ue, sat);
    assert!((g.ue_elevation_deg - ue_look.elevation_deg).abs() < 1e-9);
    assert!((g.ue_azimuth_deg - ue_look.azimuth_deg).abs() < 1e-9);
}

#[test]
fn broadcast_codec_carries_run_timing() {
    let cfg = parse_scenario_str(SCENARIO).unwrap();
    let out = run_scenario(&cfg, None).unwrap();
    let timing = out.summary.timing.unwrap();

    let eph = geo_satellite_ephemeris(cfg.sites.satellite_longitude_deg, 0.0);
    let msg = sib19::Sib19Message::from_physical(
        timing.ta_common_s * 1e6,
        0.0,
        &eph,
        0,
        cfg.access.validity_duration_s,
        cfg.access.k_offset_slots,
        0x42,
    )
    .unwrap();

    let decoded = sib19::decode(sib19::encode(&msg).unwrap().as_bytes()).unwrap();
    assert_eq!(decoded, msg);
    // Wire quanta: TA loses at most half of 2^-10 us, position half a cm.
    assert!((decoded.ta_common_s() - timing.ta_common_s).abs() <= 5e-13);
    let p = decoded.ephemeris().position_at(0.0);
    assert!((p - eph.position).norm_m() <= 0.01);
}
