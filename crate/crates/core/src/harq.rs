//! Uplink HARQ process pool.
//!
//! A GEO round trip is two orders of magnitude longer than a slot, so the
//! pool of 16 PUSCH processes (Mode B disabled keeps each one occupied for a
//! full propagation round trip) is the bottleneck that shapes the uplink RTT
//! distribution. Acquisition is a pure query; occupancy changes only at
//! commit time.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

pub const MAX_PROCESS_COUNT: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum HarqError {
    #[error("process {process_id} busy until {busy_until_s} s, tx at {tx_t_s} s")]
    ProcessBusy { process_id: usize, busy_until_s: f64, tx_t_s: f64 },
    #[error("process count {0} outside 1..={MAX_PROCESS_COUNT}")]
    InvalidProcessCount(usize),
    #[error("unknown process id {0}")]
    UnknownProcess(usize),
}

/// Result of querying the pool: which process frees up first and when the
/// caller could actually transmit on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acquisition {
    pub process_id: usize,
    pub available_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarqPool {
    busy_until: Vec<f64>,
    pub mode_b_enabled: bool,
}

impl HarqPool {
    pub fn new(process_count: usize) -> Result<Self, HarqError> {
        if process_count == 0 || process_count > MAX_PROCESS_COUNT {
            return Err(HarqError::InvalidProcessCount(process_count));
        }
        Ok(Self { busy_until: vec![0.0; process_count], mode_b_enabled: false })
    }

    pub fn process_count(&self) -> usize {
        self.busy_until.len()
    }

    /// Earliest-free process, ties broken by lowest id. Does not mutate the
    /// pool; reservation happens at [`HarqPool::commit_transmission`].
    pub fn acquire(&self, t: f64) -> Acquisition {
        debug_assert!(t >= 0.0);
        let (process_id, &busy_until) = self
            .busy_until
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("pool is never empty");
        Acquisition { process_id, available_at: t.max(busy_until) }
    }

    /// Occupies a process for the initial transmission plus `retx`
    /// retransmission rounds: busy until `tx_t + (retx+1) * hold_s`.
    /// Without Mode B the hold spans at least a propagation round trip.
    pub fn commit_transmission(
        &mut self,
        process_id: usize,
        tx_t_s: f64,
        hold_s: f64,
        retx: u32,
    ) -> Result<(), HarqError> {
        debug_assert!(hold_s >= 0.0);
        let busy = *self.busy_until.get(process_id).ok_or(HarqError::UnknownProcess(process_id))?;
        if busy > tx_t_s {
            return Err(HarqError::ProcessBusy { process_id, busy_until_s: busy, tx_t_s });
        }
        self.busy_until[process_id] = tx_t_s + (retx as f64 + 1.0) * hold_s;
        Ok(())
    }

    /// Processes still occupied at time `t`.
    pub fn in_flight(&self, t: f64) -> usize {
        self.busy_until.iter().filter(|&&b| b > t).count()
    }
}

/// Number of retransmissions before success, truncated at `max_retx`:
/// each round fails independently with probability `ul_bler`.
pub fn sample_retx_count(ul_bler: f64, max_retx: u32, rng: &mut impl Rng) -> u32 {
    debug_assert!((0.0..1.0).contains(&ul_bler));
    let mut retx = 0;
    while retx < max_retx && rng.random::<f64>() < ul_bler {
        retx += 1;
    }
    retx
}

/// Closed-form mean of [`sample_retx_count`]: sum of p^k for k in 1..=max.
pub fn expected_retx_count(ul_bler: f64, max_retx: u32) -> f64 {
    (1..=max_retx).map(|k| ul_bler.powi(k as i32)).sum()
}

/// One completed uplink transmission, as exported to `ul_harq.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UlTransmissionRecord {
    pub seq: u64,
    pub enqueue_t_s: f64,
    pub grant_t_s: f64,
    pub tx_t_s: f64,
    pub complete_t_s: f64,
    pub retx_count: u32,
    pub process_id: usize,
}

impl UlTransmissionRecord {
    /// enqueue <= grant <= tx <= complete must hold for every record.
    pub fn is_causal(&self) -> bool {
        self.enqueue_t_s <= self.grant_t_s
            && self.grant_t_s <= self.tx_t_s
            && self.tx_t_s <= self.complete_t_s
    }
}
