//! Error types shared across the crate.

use thiserror::Error;

use crate::committee::{PartyId, Round, Wave};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("committee size must satisfy n = 3f + 1, got n = {n}")]
    BadCommitteeSize { n: u32 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Fatal simulation errors. These indicate either a protocol bug or an
/// adversary policy breaking the rules of the model; the run halts.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("honest party {party} broadcast twice in round {round}")]
    DuplicateBroadcast { party: PartyId, round: Round },
    #[error("scheduler queried the coin for wave {wave} before the reveal gate opened")]
    CoinQueryBeforeGate { wave: Wave },
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
}
