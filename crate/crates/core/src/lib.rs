//! Core library of `ntnsim`: a deterministic discrete-event simulation of a
//! single 5G NR FDD carrier relayed through a transparent (bent-pipe)
//! geostationary satellite.
//!
//! The crate is organized around the physical chain:
//!
//! * [`geo`] - spherical-Earth geometry: ECEF positions, slant ranges, look
//!   angles, propagation delay, Doppler.
//! * [`timing`] - NR timing-advance arithmetic: the fundamental time unit
//!   `Tc`, common (feeder-link) and UE-specific (service-link) components,
//!   drift and epoch validity.
//! * [`sib19`] - the NTN assistance message: bit-exact binary codec plus a
//!   human-readable rendering.
//! * [`phy`] - link budgets (EIRP, G/T, FSPL, C/N0), MCS selection,
//!   transport-block sizing, BLER, theoretical throughput.
//! * [`relay`] - the bent-pipe path: gateway frequency conversion, cascaded
//!   local-oscillator errors, transparent relay of transmissions.
//! * [`harq`] - uplink HARQ process pool with long-delay occupancy and
//!   truncated-geometric retransmissions.
//! * [`engine`] - the deterministic event queue.
//! * [`rng`] - named, independently seeded random substreams.
//! * [`scenario`] - scenario configuration files (TOML) and validation.
//! * [`sim`] - the end-to-end simulation: UE access sequence, full-buffer
//!   downlink, ping, metric collection.
//! * [`report`] - run artifacts (CSV/JSON/log), summary statistics, and
//!   report rendering.
//!
//! Determinism is a contract: identical scenario + seed produce byte-identical
//! output artifacts.

// Validation uses `!(x > 0.0)` throughout so that NaN fails the check;
// rewriting via partial_cmp would lose that property's visibility.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod engine;
pub mod geo;
pub mod harq;
pub mod phy;
pub mod relay;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod sib19;
pub mod sim;
pub mod timing;
