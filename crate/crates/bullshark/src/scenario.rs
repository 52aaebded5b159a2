//! Reproducible simulation configurations.

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::committee::{Committee, Round, SimTime};
use crate::error::ConfigError;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Bullshark with steady-state and fallback leaders.
    Fallback,
    /// Eventually synchronous Bullshark (steady-state leaders only).
    Psync,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkMode {
    /// The scheduler may reorder and delay arbitrarily, bounded only by
    /// the policy's maximum delay (needed for run termination).
    Asynchronous,
    /// After `gst`, every delivery lands within `delta` of
    /// `max(issue time, gst)`.
    EventuallySynchronous,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FaultKind {
    /// Stops participating at the given time; in-flight broadcasts still
    /// deliver (the broadcast layer has custody).
    Crash { at: SimTime },
    /// Honest but slow: outgoing deliveries gain a fixed extra delay
    /// (still clamped after GST).
    Delayed { extra: u64 },
    /// Attempts to register divergent content per round; the transport
    /// keeps one content and flags the conflict.
    Equivocate,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FaultSpec {
    pub party: u32,
    #[serde(flatten)]
    pub kind: FaultKind,
}

/// Delivery-delay policies. Raw delays are at least one tick and at most
/// `max_delay`; the eventually-synchronous clamp applies afterwards.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum SchedulerPolicy {
    /// Every delivery drawn uniformly from `[1, max_delay]`.
    UniformRandom { max_delay: u64 },
    /// Steady-state leader vertices (in the rounds they lead) are held
    /// for `starve_delay`; everything else is uniform in `[1, max_delay]`.
    LeaderStarve { starve_delay: u64, max_delay: u64 },
    /// One recipient receives everything `extra` ticks late.
    RoundSkew { victim: u32, extra: u64, max_delay: u64 },
    /// Constant delay; handy for strictly synchronous tests.
    Fixed { delay: u64 },
    /// Self-test adversary that tries to read the coin before the reveal
    /// gate opens; the harness must reject the run.
    CoinPeeking { max_delay: u64 },
}

impl SchedulerPolicy {
    pub fn max_delay(&self) -> u64 {
        match *self {
            SchedulerPolicy::UniformRandom { max_delay } => max_delay,
            SchedulerPolicy::LeaderStarve { starve_delay, max_delay } => starve_delay.max(max_delay),
            SchedulerPolicy::RoundSkew { extra, max_delay, .. } => max_delay + extra,
            SchedulerPolicy::Fixed { delay } => delay,
            SchedulerPolicy::CoinPeeking { max_delay } => max_delay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub protocol: Protocol,
    pub n: u32,
    pub f: u32,
    pub mode: NetworkMode,
    #[serde(default)]
    pub gst: SimTime,
    pub delta: u64,
    /// Round timer duration; defaults to `5 * delta`, comfortably above
    /// the `4Δ` the post-GST analysis needs.
    pub timeout_ticks: u64,
    pub seed: u64,
    pub max_rounds: Round,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    pub policy: SchedulerPolicy,
    #[serde(default)]
    pub gc_enabled: bool,
    pub tx_rate: u32,
}

impl Scenario {
    /// Baseline scenario: synchronous-ish uniform delays, no faults.
    pub fn base(protocol: Protocol, n: u32, seed: u64) -> Self {
        let delta = 10;
        Self {
            protocol,
            n,
            f: (n.saturating_sub(1)) / 3,
            mode: NetworkMode::EventuallySynchronous,
            gst: 0,
            delta,
            timeout_ticks: 5 * delta,
            seed,
            max_rounds: 40,
            faults: Vec::new(),
            policy: SchedulerPolicy::UniformRandom { max_delay: delta },
            gc_enabled: false,
            tx_rate: 1,
        }
    }

    pub fn validate(&self) -> Result<Committee, ConfigError> {
        let committee = Committee::new(self.n)?;
        if self.f != committee.max_faults() {
            return Err(ConfigError::InvalidScenario(format!(
                "f must equal (n - 1) / 3 = {}, got {}",
                committee.max_faults(),
                self.f
            )));
        }
        if self.delta == 0 {
            return Err(ConfigError::InvalidScenario("delta must be positive".into()));
        }
        if self.max_rounds == 0 {
            return Err(ConfigError::InvalidScenario("max_rounds must be positive".into()));
        }
        if self.faults.len() > committee.max_faults() as usize {
            return Err(ConfigError::InvalidScenario(format!(
                "at most f = {} faults allowed, got {}",
                committee.max_faults(),
                self.faults.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for fault in &self.faults {
            if fault.party >= self.n {
                return Err(ConfigError::InvalidScenario(format!("fault references party {}", fault.party)));
            }
            if !seen.insert(fault.party) {
                return Err(ConfigError::InvalidScenario(format!(
                    "party {} has multiple faults",
                    fault.party
                )));
            }
        }
        Ok(committee)
    }

    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(&Sha256::digest(bytes)[..16])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_scenario_validates() {
        for n in [4, 7, 10] {
            Scenario::base(Protocol::Psync, n, 0).validate().unwrap();
        }
    }

    #[test]
    fn bad_fault_counts_rejected() {
        let mut s = Scenario::base(Protocol::Psync, 4, 0);
        s.faults = vec![
            FaultSpec { party: 0, kind: FaultKind::Crash { at: 5 } },
            FaultSpec { party: 1, kind: FaultKind::Crash { at: 5 } },
        ];
        assert!(s.validate().is_err());
        s.faults.truncate(1);
        s.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let mut s = Scenario::base(Protocol::Fallback, 4, 7);
        s.policy = SchedulerPolicy::LeaderStarve { starve_delay: 200, max_delay: 5 };
        s.faults = vec![FaultSpec { party: 2, kind: FaultKind::Delayed { extra: 30 } }];
        let text = toml::to_string(&s).unwrap();
        let back: Scenario = toml::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
