//! SIB19 NTN assistance message and its binary codec.
//!
//! SIB19 carries everything a UE needs before its first uplink transmission:
//! the common timing advance and its drift, the satellite ephemeris, the
//! epoch and validity window of that data, and the scheduling offset
//! `K_offset`. The over-the-air encoding here is a fixed-layout big-endian
//! format with explicit magic, version, and CRC-32 framing so golden vectors
//! stay valid across releases; field resolutions follow the usual broadcast
//! granularity (TA in 2^-10 us steps, position in cm, velocity in mm/s).
//!
//! Wire layout, 64 octets total:
//!
//! ```text
//! offset  size  field
//!      0     2  magic 0x53 0x49
//!      2     1  version (1)
//!      3     4  ta_common, u32, 2^-10 us units
//!      7     4  ta_common_drift, i32, ppb
//!     11    24  ECEF position, 3 x i64, cm
//!     35    12  ECEF velocity, 3 x i32, mm/s
//!     47     4  epoch, u32, s
//!     51     2  validity duration, u16, s
//!     53     2  k_offset, u16, slots
//!     55     5  cell identity, 36-bit value in 40 bits
//!     60     4  CRC-32 over octets 0..60
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::geo::{EcefVector, Ephemeris};
use crate::timing::CommonTaParams;

pub const WIRE_LEN: usize = 64;

const MAGIC: [u8; 2] = [0x53, 0x49];
const VERSION: u8 = 1;
const CRC_OFFSET: usize = WIRE_LEN - 4;

/// ta_common quantization: steps of 2^-10 us.
const TA_STEPS_PER_US: f64 = 1024.0;

#[derive(Debug, Error, PartialEq)]
pub enum Sib19Error {
    #[error("field out of range: {field}")]
    FieldOutOfRange { field: &'static str },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    BadCrc { stored: u32, computed: u32 },
    #[error("truncated payload: expected {WIRE_LEN} octets, got {0}")]
    TruncatedPayload(usize),
    #[error("unreadable text form: {0}")]
    BadText(String),
}

/// Decoded SIB19 contents. Stored in wire quanta so that encode/decode and
/// render/parse roundtrips are exact; physical-unit accessors convert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sib19Message {
    /// Common TA in 2^-10 us units.
    pub ta_common_q: u32,
    /// Common TA drift in parts per billion (ns of TA per second).
    pub ta_common_drift_ppb: i32,
    /// Satellite ECEF position in cm.
    pub position_cm: [i64; 3],
    /// Satellite ECEF velocity in mm/s.
    pub velocity_mm_s: [i32; 3],
    /// Epoch the TA and ephemeris refer to, whole seconds.
    pub epoch_s: u32,
    /// Validity window after the epoch; multiples of 5 s in [5, 900].
    pub validity_duration_s: u16,
    /// Scheduling offset in slots, <= 1023.
    pub k_offset_slots: u16,
    /// 36-bit cell identity.
    pub cell_id: u64,
}

impl Sib19Message {
    /// Builds a message from physical units, quantizing to wire resolution.
    pub fn from_physical(
        ta_common_us: f64,
        ta_common_drift_ppb: f64,
        ephemeris: &Ephemeris,
        epoch_s: u32,
        validity_duration_s: u16,
        k_offset_slots: u16,
        cell_id: u64,
    ) -> Result<Self, Sib19Error> {
        let ta_q = (ta_common_us * TA_STEPS_PER_US).round();
        if !ta_q.is_finite() || !(0.0..=u32::MAX as f64).contains(&ta_q) {
            return Err(Sib19Error::FieldOutOfRange { field: "ta_common_us" });
        }
        let drift = ta_common_drift_ppb.round();
        if !drift.is_finite() || !(i32::MIN as f64..=i32::MAX as f64).contains(&drift) {
            return Err(Sib19Error::FieldOutOfRange { field: "ta_common_drift_ppb" });
        }
        let p = ephemeris.position;
        let v = ephemeris.velocity;
        let mut position_cm = [0i64; 3];
        for (out, m) in position_cm.iter_mut().zip([p.x_m, p.y_m, p.z_m]) {
            let cm = (m * 100.0).round();
            if !cm.is_finite() || cm.abs() > 1e14 {
                return Err(Sib19Error::FieldOutOfRange { field: "position" });
            }
            *out = cm as i64;
        }
        let mut velocity_mm_s = [0i32; 3];
        for (out, m_s) in velocity_mm_s.iter_mut().zip([v.x_m, v.y_m, v.z_m]) {
            let mm = (m_s * 1000.0).round();
            if !mm.is_finite() || !(i32::MIN as f64..=i32::MAX as f64).contains(&mm) {
                return Err(Sib19Error::FieldOutOfRange { field: "velocity" });
            }
            *out = mm as i32;
        }
        let msg = Self {
            ta_common_q: ta_q as u32,
            ta_common_drift_ppb: drift as i32,
            position_cm,
            velocity_mm_s,
            epoch_s,
            validity_duration_s,
            k_offset_slots,
            cell_id,
        };
        msg.validate()?;
        Ok(msg)
    }

    pub fn validate(&self) -> Result<(), Sib19Error> {
        let v = self.validity_duration_s;
        if !(5..=900).contains(&v) || !v.is_multiple_of(5) {
            return Err(Sib19Error::FieldOutOfRange { field: "validity_duration_s" });
        }
        if self.k_offset_slots > 1023 {
            return Err(Sib19Error::FieldOutOfRange { field: "k_offset_slots" });
        }
        if self.cell_id >= 1 << 36 {
            return Err(Sib19Error::FieldOutOfRange { field: "cell_id" });
        }
        Ok(())
    }

    pub fn ta_common_us(&self) -> f64 {
        self.ta_common_q as f64 / TA_STEPS_PER_US
    }

    pub fn ta_common_s(&self) -> f64 {
        self.ta_common_us() * 1e-6
    }

    pub fn drift_s_per_s(&self) -> f64 {
        self.ta_common_drift_ppb as f64 * 1e-9
    }

    pub fn ephemeris(&self) -> Ephemeris {
        Ephemeris {
            position: EcefVector::new(
                self.position_cm[0] as f64 / 100.0,
                self.position_cm[1] as f64 / 100.0,
                self.position_cm[2] as f64 / 100.0,
            ),
            velocity: EcefVector::new(
                self.velocity_mm_s[0] as f64 / 1000.0,
                self.velocity_mm_s[1] as f64 / 1000.0,
                self.velocity_mm_s[2] as f64 / 1000.0,
            ),
            epoch_s: self.epoch_s as f64,
        }
    }

    /// The common-TA description this message broadcasts.
    pub fn common_ta_params(&self) -> CommonTaParams {
        CommonTaParams {
            ta_common_s: self.ta_common_s(),
            ta_common_drift_s_per_s: self.drift_s_per_s(),
            epoch_s: self.epoch_s as f64,
            validity_duration_s: self.validity_duration_s as f64,
        }
    }
}

/// An encoded SIB19: always exactly [`WIRE_LEN`] octets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sib19Wire(pub [u8; WIRE_LEN]);

impl Sib19Wire {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

pub fn encode(msg: &Sib19Message) -> Result<Sib19Wire, Sib19Error> {
    msg.validate()?;
    let mut b = [0u8; WIRE_LEN];
    b[0..2].copy_from_slice(&MAGIC);
    b[2] = VERSION;
    b[3..7].copy_from_slice(&msg.ta_common_q.to_be_bytes());
    b[7..11].copy_from_slice(&msg.ta_common_drift_ppb.to_be_bytes());
    for (i, cm) in msg.position_cm.iter().enumerate() {
        b[11 + 8 * i..19 + 8 * i].copy_from_slice(&cm.to_be_bytes());
    }
    for (i, mm) in msg.velocity_mm_s.iter().enumerate() {
        b[35 + 4 * i..39 + 4 * i].copy_from_slice(&mm.to_be_bytes());
    }
    b[47..51].copy_from_slice(&msg.epoch_s.to_be_bytes());
    b[51..53].copy_from_slice(&msg.validity_duration_s.to_be_bytes());
    b[53..55].copy_from_slice(&msg.k_offset_slots.to_be_bytes());
    b[55..60].copy_from_slice(&msg.cell_id.to_be_bytes()[3..8]);
    let crc = crc32(&b[..CRC_OFFSET]);
    b[CRC_OFFSET..].copy_from_slice(&crc.to_be_bytes());
    Ok(Sib19Wire(b))
}

pub fn decode(bytes: &[u8]) -> Result<Sib19Message, Sib19Error> {
    if bytes.len() != WIRE_LEN {
        return Err(Sib19Error::TruncatedPayload(bytes.len()));
    }
    if bytes[0..2] != MAGIC {
        return Err(Sib19Error::BadMagic);
    }
    if bytes[2] != VERSION {
        return Err(Sib19Error::BadVersion(bytes[2]));
    }
    let stored = u32::from_be_bytes(bytes[CRC_OFFSET..].try_into().unwrap());
    let computed = crc32(&bytes[..CRC_OFFSET]);
    if stored != computed {
        return Err(Sib19Error::BadCrc { stored, computed });
    }
    let mut position_cm = [0i64; 3];
    for (i, cm) in position_cm.iter_mut().enumerate() {
        *cm = i64::from_be_bytes(bytes[11 + 8 * i..19 + 8 * i].try_into().unwrap());
    }
    let mut velocity_mm_s = [0i32; 3];
    for (i, mm) in velocity_mm_s.iter_mut().enumerate() {
        *mm = i32::from_be_bytes(bytes[35 + 4 * i..39 + 4 * i].try_into().unwrap());
    }
    let mut cell = [0u8; 8];
    cell[3..8].copy_from_slice(&bytes[55..60]);
    let msg = Sib19Message {
        ta_common_q: u32::from_be_bytes(bytes[3..7].try_into().unwrap()),
        ta_common_drift_ppb: i32::from_be_bytes(bytes[7..11].try_into().unwrap()),
        position_cm,
        velocity_mm_s,
        epoch_s: u32::from_be_bytes(bytes[47..51].try_into().unwrap()),
        validity_duration_s: u16::from_be_bytes(bytes[51..53].try_into().unwrap()),
        k_offset_slots: u16::from_be_bytes(bytes[53..55].try_into().unwrap()),
        cell_id: u64::from_be_bytes(cell),
    };
    // A wire can be crafted with a valid CRC over out-of-range fields.
    msg.validate()?;
    Ok(msg)
}

/// Renders the message as stable `name: value` lines, one field per line.
/// Decimal precision matches the wire quanta exactly, so
/// [`parse_readable`] recovers the message bit-for-bit.
pub fn render_readable(msg: &Sib19Message) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "ta_common_us: {:.10}", msg.ta_common_us());
    let _ = writeln!(s, "ta_common_drift_ppb: {}", msg.ta_common_drift_ppb);
    let _ = writeln!(
        s,
        "position_m: {:.2} {:.2} {:.2}",
        msg.position_cm[0] as f64 / 100.0,
        msg.position_cm[1] as f64 / 100.0,
        msg.position_cm[2] as f64 / 100.0
    );
    let _ = writeln!(
        s,
        "velocity_m_s: {:.3} {:.3} {:.3}",
        msg.velocity_mm_s[0] as f64 / 1000.0,
        msg.velocity_mm_s[1] as f64 / 1000.0,
        msg.velocity_mm_s[2] as f64 / 1000.0
    );
    let _ = writeln!(s, "epoch_s: {}", msg.epoch_s);
    let _ = writeln!(s, "validity_duration_s: {}", msg.validity_duration_s);
    let _ = writeln!(s, "k_offset_slots: {}", msg.k_offset_slots);
    let _ = writeln!(s, "cell_id: {:#011x}", msg.cell_id);
    s
}

/// Parses the [`render_readable`] text form back into a message.
pub fn parse_readable(text: &str) -> Result<Sib19Message, Sib19Error> {
    let mut msg = Sib19Message {
        ta_common_q: 0,
        ta_common_drift_ppb: 0,
        position_cm: [0; 3],
        velocity_mm_s: [0; 3],
        epoch_s: 0,
        validity_duration_s: 0,
        k_offset_slots: 0,
        cell_id: 0,
    };
    let mut seen = 0u32;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Sib19Error::BadText(format!("line {}: missing ':'", lineno + 1)))?;
        let value = value.trim();
        let bad = |what: &str| Sib19Error::BadText(format!("line {}: {what}", lineno + 1));
        match key.trim() {
            "ta_common_us" => {
                let us: f64 = value.parse().map_err(|_| bad("bad ta_common_us"))?;
                let q = (us * TA_STEPS_PER_US).round();
                if !(0.0..=u32::MAX as f64).contains(&q) {
                    return Err(Sib19Error::FieldOutOfRange { field: "ta_common_us" });
                }
                msg.ta_common_q = q as u32;
            }
            "ta_common_drift_ppb" => {
                msg.ta_common_drift_ppb = value.parse().map_err(|_| bad("bad drift"))?;
            }
            "position_m" => {
                for (slot, tok) in msg.position_cm.iter_mut().zip(value.split_whitespace()) {
                    let m: f64 = tok.parse().map_err(|_| bad("bad position"))?;
                    *slot = (m * 100.0).round() as i64;
                }
            }
            "velocity_m_s" => {
                for (slot, tok) in msg.velocity_mm_s.iter_mut().zip(value.split_whitespace()) {
                    let m_s: f64 = tok.parse().map_err(|_| bad("bad velocity"))?;
                    *slot = (m_s * 1000.0).round() as i32;
                }
            }
            "epoch_s" => msg.epoch_s = value.parse().map_err(|_| bad("bad epoch"))?,
            "validity_duration_s" => {
                msg.validity_duration_s = value.parse().map_err(|_| bad("bad validity"))?;
            }
            "k_offset_slots" => {
                msg.k_offset_slots = value.parse().map_err(|_| bad("bad k_offset"))?;
            }
            "cell_id" => {
                let hexpart = value.strip_prefix("0x").unwrap_or(value);
                msg.cell_id = u64::from_str_radix(hexpart, 16).map_err(|_| bad("bad cell_id"))?;
            }
            other => return Err(Sib19Error::BadText(format!("unknown field '{other}'"))),
        }
        seen += 1;
    }
    if seen != 8 {
        return Err(Sib19Error::BadText(format!("expected 8 fields, got {seen}")));
    }
    msg.validate()?;
    Ok(msg)
}

const fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            k += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

static CRC_TABLE: [u32; 256] = crc32_table();

/// Standard CRC-32 (reflected 0x04C11DB7, init and final xor 0xFFFFFFFF).
pub fn crc32(bytes: &[u8]) -> u32 {
    let mut c = 0xFFFF_FFFFu32;
    for &b in bytes {
        c = CRC_TABLE[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}
