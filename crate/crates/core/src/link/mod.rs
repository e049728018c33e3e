//! Wire format and the simulated radio between the two cubes.

mod frame;
pub mod udp;

pub use frame::{
    checksum, Frame, FrameError, SeqTracker, FLAG_CUSTOM_MAPPING, FRAME_LEN, HINT_ABSENT, MAGIC,
    VERSION,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Silence longer than this puts the actuator cube into its neutral state.
pub const STALE_TIMEOUT_MS: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("drop probability {0} outside 0..=1")]
    BadProbability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConditions {
    pub drop_probability: f64,
    pub base_latency_ms: u64,
    /// Uniform jitter of ± this many milliseconds.
    pub jitter_ms: u64,
    pub seed: u64,
}

impl Default for LinkConditions {
    fn default() -> Self {
        Self {
            drop_probability: 0.0,
            base_latency_ms: 0,
            jitter_ms: 0,
            seed: 0,
        }
    }
}

impl LinkConditions {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(LinkError::BadProbability(self.drop_probability));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
}

/// Seeded lossy channel. Decisions depend only on the seed and the sequence
/// of `send` calls.
#[derive(Debug, Clone)]
pub struct LossyLink {
    conditions: LinkConditions,
    rng: ChaCha8Rng,
    stats: LinkStats,
}

impl LossyLink {
    pub fn new(conditions: LinkConditions) -> Result<Self, LinkError> {
        conditions.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(conditions.seed),
            conditions,
            stats: LinkStats::default(),
        })
    }

    pub fn conditions(&self) -> &LinkConditions {
        &self.conditions
    }

    /// Changes loss and latency; the random stream continues unchanged.
    pub fn set_conditions(
        &mut self,
        loss: f64,
        latency_ms: u64,
        jitter_ms: u64,
    ) -> Result<(), LinkError> {
        let next = LinkConditions {
            drop_probability: loss,
            base_latency_ms: latency_ms,
            jitter_ms,
            seed: self.conditions.seed,
        };
        next.validate()?;
        self.conditions = next;
        Ok(())
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    /// Returns the delivery time, or `None` if the frame is lost. Delivery is
    /// never earlier than `now_ms`.
    pub fn send(&mut self, now_ms: u64) -> Option<u64> {
        self.stats.sent += 1;
        let roll: f64 = self.rng.gen();
        if roll < self.conditions.drop_probability {
            self.stats.dropped += 1;
            return None;
        }
        self.stats.delivered += 1;
        let j = self.conditions.jitter_ms as i64;
        let offset = if j > 0 { self.rng.gen_range(-j..=j) } else { 0 };
        let t = now_ms as i64 + self.conditions.base_latency_ms as i64 + offset;
        Some(t.max(now_ms as i64) as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Freshness {
    Fresh,
    Stale,
}

pub fn stale_guard(last_rx_ms: u64, now_ms: u64) -> Freshness {
    if now_ms.saturating_sub(last_rx_ms) > STALE_TIMEOUT_MS {
        Freshness::Stale
    } else {
        Freshness::Fresh
    }
}
