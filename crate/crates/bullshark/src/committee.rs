//! Committee membership, quorum arithmetic, and the predefined
//! steady-state leader schedule.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Stable identifier of a party, an index in `[0, n)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartyId(pub u32);

impl PartyId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Debug for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// DAG round number. Round 0 is the genesis layer.
pub type Round = u64;

/// Wave number, starting at 1. A wave spans four consecutive rounds.
pub type Wave = u64;

/// Discrete simulation clock, in ticks.
pub type SimTime = u64;

/// Wave that contains round `r` (`r >= 1`).
pub fn wave_of_round(r: Round) -> Wave {
    debug_assert!(r >= 1);
    (r + 3) / 4
}

/// First round of wave `w`: the round of the first steady-state leader
/// and of the fallback leader.
pub fn first_round_of_wave(w: Wave) -> Round {
    4 * w - 3
}

/// Third round of wave `w`: the round of the second steady-state leader.
pub fn third_round_of_wave(w: Wave) -> Round {
    4 * w - 1
}

/// Fourth (last) round of wave `w`.
pub fn last_round_of_wave(w: Wave) -> Round {
    4 * w
}

/// A fixed committee of `n = 3f + 1` parties.
///
/// The tight `n = 3f + 1` case pins the quorum arithmetic: any two sets
/// of `2f + 1` parties intersect in at least `f + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Committee {
    n: u32,
    f: u32,
}

impl Committee {
    pub fn new(n: u32) -> Result<Self, ConfigError> {
        if n < 4 || (n - 1) % 3 != 0 {
            return Err(ConfigError::BadCommitteeSize { n });
        }
        Ok(Self { n, f: (n - 1) / 3 })
    }

    pub fn size(&self) -> u32 {
        self.n
    }

    pub fn max_faults(&self) -> u32 {
        self.f
    }

    /// `2f + 1`: vertices needed to advance a round, votes needed for a
    /// direct commit.
    pub fn quorum_threshold(&self) -> usize {
        (2 * self.f + 1) as usize
    }

    /// `f + 1`: votes needed to indirectly commit a leader during the
    /// backward walk (and the psync direct-commit threshold).
    pub fn validity_threshold(&self) -> usize {
        (self.f + 1) as usize
    }

    pub fn parties(&self) -> impl Iterator<Item = PartyId> {
        (0..self.n).map(PartyId)
    }

    pub fn contains(&self, p: PartyId) -> bool {
        p.0 < self.n
    }

    /// Parties contributing the hardcoded genesis layer: the `2f + 1`
    /// lowest indices.
    pub fn genesis_parties(&self) -> impl Iterator<Item = PartyId> {
        (0..2 * self.f + 1).map(PartyId)
    }

    /// First predefined steady-state leader of wave `w` (round `4w - 3`).
    ///
    /// Leaders rotate in consecutive pairs so that every pair of parties
    /// eventually leads a wave together, whatever the fault set.
    pub fn first_steady_leader(&self, w: Wave) -> PartyId {
        PartyId(((2 * (w - 1)) % self.n as u64) as u32)
    }

    /// Second predefined steady-state leader of wave `w` (round `4w - 1`).
    pub fn second_steady_leader(&self, w: Wave) -> PartyId {
        PartyId(((2 * (w - 1) + 1) % self.n as u64) as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn committee_sizes() {
        assert!(Committee::new(3).is_err());
        assert!(Committee::new(5).is_err());
        for (n, f) in [(4, 1), (7, 2), (10, 3)] {
            let c = Committee::new(n).unwrap();
            assert_eq!(c.max_faults(), f);
            assert_eq!(c.quorum_threshold(), (2 * f + 1) as usize);
            assert_eq!(c.validity_threshold(), (f + 1) as usize);
        }
    }

    #[test]
    fn wave_round_mapping() {
        assert_eq!(wave_of_round(1), 1);
        assert_eq!(wave_of_round(4), 1);
        assert_eq!(wave_of_round(5), 2);
        assert_eq!(wave_of_round(8), 2);
        for w in 1..100 {
            assert_eq!(wave_of_round(first_round_of_wave(w)), w);
            assert_eq!(wave_of_round(third_round_of_wave(w)), w);
            assert_eq!(wave_of_round(last_round_of_wave(w)), w);
            assert_eq!(third_round_of_wave(w), first_round_of_wave(w) + 2);
        }
    }

    #[test]
    fn leader_schedule_rotates_in_pairs() {
        let c = Committee::new(4).unwrap();
        assert_eq!(c.first_steady_leader(1), PartyId(0));
        assert_eq!(c.second_steady_leader(1), PartyId(1));
        assert_eq!(c.first_steady_leader(2), PartyId(2));
        assert_eq!(c.second_steady_leader(2), PartyId(3));
        assert_eq!(c.first_steady_leader(3), PartyId(0));
        // Total and identical everywhere: pure function of the wave.
        for w in 1..1000 {
            assert!(c.contains(c.first_steady_leader(w)));
            assert!(c.contains(c.second_steady_leader(w)));
        }
    }
}
