//! Link-budget arithmetic and an abstracted NR PHY.
//!
//! Covers free-space path loss, C/N0 and SNR, MCS selection against
//! Shannon-gap thresholds, transport-block sizing for a 15 kHz SCS carrier,
//! a logistic BLER curve, and theoretical throughput. Everything here is a
//! pure function over immutable tables.

use thiserror::Error;

use crate::constants::{BOLTZMANN_DB, SPEED_OF_LIGHT_M_S};

/// Implementation gap for the SNR thresholds used in link adaptation:
/// snr_th(mcs) = gap + 10*log10(2^(order*rate) - 1).
pub const DEFAULT_SNR_GAP_DB: f64 = 5.0;

/// Default link-adaptation backoff subtracted from the measured SNR before
/// threshold comparison.
pub const DEFAULT_MCS_BACKOFF_DB: f64 = 5.5;

/// Default logistic BLER slope in dB.
pub const DEFAULT_BLER_SLOPE_DB: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("{0} must be positive")]
    NonPositiveInput(&'static str),
    #[error("overhead {overhead} RE/PRB >= capacity {capacity} RE/PRB")]
    OverheadExceedsCapacity { overhead: u32, capacity: u32 },
    #[error("invalid carrier config: {0}")]
    InvalidConfig(&'static str),
}

/// One side of a link budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinkBudgetParams {
    pub eirp_dbw: f64,
    pub g_over_t_dbk: f64,
    pub carrier_hz: f64,
    pub extra_losses_db: f64,
    pub bandwidth_hz: f64,
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<(), PhyError> {
        if !(self.carrier_hz > 0.0) {
            return Err(PhyError::NonPositiveInput("carrier_hz"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(PhyError::NonPositiveInput("bandwidth_hz"));
        }
        if !(self.extra_losses_db >= 0.0) {
            return Err(PhyError::InvalidConfig("extra_losses_db must be >= 0"));
        }
        Ok(())
    }
}

/// One row of the modulation-and-coding table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McsEntry {
    pub index: u8,
    /// Bits per symbol: 2 (QPSK), 4 (16QAM) or 6 (64QAM).
    pub modulation_order: u8,
    /// Code rate, strictly in (0, 1).
    pub code_rate: f64,
}

impl McsEntry {
    /// Spectral efficiency in information bits per resource element.
    pub fn bits_per_re(&self) -> f64 {
        self.modulation_order as f64 * self.code_rate
    }
}

const fn row(index: u8, modulation_order: u8, rate_x1024: u16) -> McsEntry {
    McsEntry { index, modulation_order, code_rate: rate_x1024 as f64 / 1024.0 }
}

/// PDSCH MCS index table for up-to-64QAM operation (TS 38.214 table 5.1.3.1-1,
/// indices 0 to 28; the reserved tail rows are omitted).
pub static MCS_TABLE_QAM64: [McsEntry; 29] = [
    row(0, 2, 120),
    row(1, 2, 157),
    row(2, 2, 193),
    row(3, 2, 251),
    row(4, 2, 308),
    row(5, 2, 379),
    row(6, 2, 449),
    row(7, 2, 526),
    row(8, 2, 602),
    row(9, 2, 679),
    row(10, 4, 340),
    row(11, 4, 378),
    row(12, 4, 434),
    row(13, 4, 490),
    row(14, 4, 553),
    row(15, 4, 616),
    row(16, 4, 658),
    row(17, 6, 438),
    row(18, 6, 466),
    row(19, 6, 517),
    row(20, 6, 567),
    row(21, 6, 616),
    row(22, 6, 666),
    row(23, 6, 719),
    row(24, 6, 772),
    row(25, 6, 822),
    row(26, 6, 873),
    row(27, 6, 910),
    row(28, 6, 948),
];

/// Carrier numerology. Defaults model a 5 MHz FDD carrier at 15 kHz SCS.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierConfig {
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub prb_count: u32,
    pub symbols_per_slot: u32,
    /// Resource elements per PRB reserved for reference signals and control.
    pub overhead_re_per_prb: u32,
}

impl Default for CarrierConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 5.0e6,
            subcarrier_spacing_hz: 15.0e3,
            prb_count: 25,
            symbols_per_slot: 14,
            overhead_re_per_prb: 12,
        }
    }
}

impl CarrierConfig {
    pub fn validate(&self) -> Result<(), PhyError> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(PhyError::NonPositiveInput("bandwidth_hz"));
        }
        if !(self.subcarrier_spacing_hz > 0.0) {
            return Err(PhyError::NonPositiveInput("subcarrier_spacing_hz"));
        }
        if self.prb_count == 0 || self.symbols_per_slot == 0 {
            return Err(PhyError::NonPositiveInput("prb_count"));
        }
        if self.prb_count as f64 * 12.0 * self.subcarrier_spacing_hz > self.bandwidth_hz {
            return Err(PhyError::InvalidConfig("PRBs exceed channel bandwidth"));
        }
        if self.overhead_re_per_prb > 60 {
            return Err(PhyError::InvalidConfig("overhead_re_per_prb above 60"));
        }
        Ok(())
    }

    pub fn slots_per_second(&self) -> f64 {
        // 15 kHz SCS gives 1 ms slots; each SCS doubling halves the slot.
        1000.0 * self.subcarrier_spacing_hz / 15.0e3
    }
}

/// Free-space path loss 20*log10(4*pi*d*f/c) in dB.
pub fn fspl_db(carrier_hz: f64, distance_m: f64) -> Result<f64, PhyError> {
    if !(carrier_hz > 0.0) {
        return Err(PhyError::NonPositiveInput("carrier_hz"));
    }
    if !(distance_m > 0.0) {
        return Err(PhyError::NonPositiveInput("distance_m"));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance_m * carrier_hz / SPEED_OF_LIGHT_M_S).log10())
}

/// Carrier-to-noise density: EIRP + G/T - FSPL - extra losses + 228.6 dB.
pub fn cn0_dbhz(p: &LinkBudgetParams, distance_m: f64) -> Result<f64, PhyError> {
    p.validate()?;
    let fspl = fspl_db(p.carrier_hz, distance_m)?;
    Ok(p.eirp_dbw + p.g_over_t_dbk - fspl - p.extra_losses_db + BOLTZMANN_DB)
}

/// Combined C/N0 of a transparent cascade: noise accumulates leg by leg,
/// so the total is the harmonic combination 1/total = sum(1/leg) in linear
/// terms. The result is always below the weakest leg.
pub fn cascade_cn0_dbhz(legs: &[f64]) -> Result<f64, PhyError> {
    if legs.is_empty() {
        return Err(PhyError::NonPositiveInput("legs"));
    }
    let inv_sum: f64 = legs.iter().map(|c| 10f64.powf(-c / 10.0)).sum();
    Ok(-10.0 * inv_sum.log10())
}

/// SNR over a noise bandwidth: C/N0 - 10*log10(BW).
pub fn snr_db(cn0_dbhz: f64, bandwidth_hz: f64) -> Result<f64, PhyError> {
    if !(bandwidth_hz > 0.0) {
        return Err(PhyError::NonPositiveInput("bandwidth_hz"));
    }
    Ok(cn0_dbhz - 10.0 * bandwidth_hz.log10())
}

/// SNR required to operate an MCS: Shannon threshold for its spectral
/// efficiency plus an implementation gap.
pub fn snr_threshold_db(mcs: &McsEntry, gap_db: f64) -> f64 {
    gap_db + 10.0 * (2f64.powf(mcs.bits_per_re()) - 1.0).log10()
}

/// Picks the highest-index entry whose threshold fits under `snr_db`
/// less `backoff_db`; falls back to the first entry when none fits.
pub fn select_mcs(snr_db: f64, table: &[McsEntry], backoff_db: f64) -> McsEntry {
    assert!(!table.is_empty(), "MCS table must be non-empty");
    let target = snr_db - backoff_db;
    let mut chosen = table[0];
    for entry in table {
        if snr_threshold_db(entry, DEFAULT_SNR_GAP_DB) <= target {
            chosen = *entry;
        }
    }
    chosen
}

/// Logistic block-error probability centered on the MCS threshold:
/// 1 / (1 + exp((snr - snr_th)/slope)).
pub fn bler(snr_db: f64, mcs: &McsEntry, slope_db: f64) -> f64 {
    debug_assert!(slope_db > 0.0);
    let th = snr_threshold_db(mcs, DEFAULT_SNR_GAP_DB);
    1.0 / (1.0 + ((snr_db - th) / slope_db).exp())
}

/// Transport block size from usable resource elements:
/// floor(prb * (REs/PRB - overhead) * order * rate), single layer.
pub fn transport_block_bits(cfg: &CarrierConfig, mcs: &McsEntry) -> Result<u64, PhyError> {
    let capacity = 12 * cfg.symbols_per_slot;
    if cfg.overhead_re_per_prb >= capacity {
        return Err(PhyError::OverheadExceedsCapacity {
            overhead: cfg.overhead_re_per_prb,
            capacity,
        });
    }
    let usable_re = cfg.prb_count as f64 * (capacity - cfg.overhead_re_per_prb) as f64;
    Ok((usable_re * mcs.bits_per_re()).floor() as u64)
}

/// TBS values up to 3824 bits (TS 38.214 table 5.1.3.2-1).
static TBS_TABLE: [u64; 93] = [
    24, 32, 40, 48, 56, 64, 72, 80, 88, 96, 104, 112, 120, 128, 136, 144, 152, 160, 168, 176, 184,
    192, 208, 224, 240, 256, 272, 288, 304, 320, 336, 352, 368, 384, 408, 432, 456, 480, 504, 528,
    552, 576, 608, 640, 672, 704, 736, 768, 808, 848, 888, 928, 984, 1032, 1064, 1128, 1160, 1192,
    1224, 1256, 1288, 1320, 1352, 1416, 1480, 1544, 1608, 1672, 1736, 1800, 1864, 1928, 2024, 2088,
    2152, 2216, 2280, 2408, 2472, 2536, 2600, 2664, 2728, 2792, 2856, 2976, 3104, 3240, 3368, 3496,
    3624, 3752, 3824,
];

/// Exact 3GPP transport-block sizing (TS 38.214 clause 5.1.3.2), as an
/// optional high-fidelity alternative to [`transport_block_bits`]. Resource
/// elements per PRB are capped at 156 before scaling, information bits are
/// quantized, and code-block segmentation is accounted for above 3824 bits.
pub fn transport_block_bits_exact(cfg: &CarrierConfig, mcs: &McsEntry) -> Result<u64, PhyError> {
    let capacity = 12 * cfg.symbols_per_slot;
    if cfg.overhead_re_per_prb >= capacity {
        return Err(PhyError::OverheadExceedsCapacity {
            overhead: cfg.overhead_re_per_prb,
            capacity,
        });
    }
    let re_per_prb = (capacity - cfg.overhead_re_per_prb).min(156);
    let n_re = (re_per_prb * cfg.prb_count) as f64;
    let n_info = n_re * mcs.bits_per_re();
    if n_info <= 3824.0 {
        let n = ((n_info.log2().floor() as i64) - 6).max(3) as u32;
        let step = 2f64.powi(n as i32);
        let quantized = (step * (n_info / step).floor()).max(24.0) as u64;
        let tbs = TBS_TABLE
            .iter()
            .copied()
            .find(|&t| t >= quantized)
            .expect("quantized Ninfo <= 3824 is always covered by the table");
        Ok(tbs)
    } else {
        let n = ((n_info - 24.0).log2().floor() as i64 - 5).max(0) as u32;
        let step = 2f64.powi(n as i32);
        let quantized = (step * ((n_info - 24.0) / step).round()).max(3840.0);
        let tbs = if mcs.code_rate <= 0.25 {
            let c = ((quantized + 24.0) / 3816.0).ceil();
            8.0 * c * ((quantized + 24.0) / (8.0 * c)).ceil() - 24.0
        } else if quantized > 8424.0 {
            let c = ((quantized + 24.0) / 8424.0).ceil();
            8.0 * c * ((quantized + 24.0) / (8.0 * c)).ceil() - 24.0
        } else {
            8.0 * ((quantized + 24.0) / 8.0).ceil() - 24.0
        };
        Ok(tbs as u64)
    }
}

/// Error-free MAC throughput: one transport block per slot.
pub fn theoretical_throughput_bps(cfg: &CarrierConfig, mcs: &McsEntry) -> Result<f64, PhyError> {
    Ok(transport_block_bits(cfg, mcs)? as f64 * cfg.slots_per_second())
}
