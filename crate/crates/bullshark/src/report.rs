//! Machine-readable run reports: per-party output digests, the agreed
//! leader sequence, commit-latency statistics, wave outcomes, and
//! checker verdicts. A report is a pure function of the trace and final
//! party states, hence of the scenario.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::committee::{Committee, Round, Wave};
use crate::consensus::LeaderKind;
use crate::party::Party;
use crate::scenario::{FaultKind, Scenario};
use crate::trace::Trace;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn pass(name: &str, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass: true, detail: detail.into() }
    }

    pub fn fail(name: &str, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass: false, detail: detail.into() }
    }

    pub fn from_violations(name: &str, violations: Vec<String>, ok_detail: impl Into<String>) -> Self {
        if violations.is_empty() {
            Self::pass(name, ok_detail)
        } else {
            Self::fail(name, violations.join("; "))
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeaderSummary {
    pub round: Round,
    pub source: u32,
    pub wave: Wave,
    pub kind: LeaderKind,
    pub digest: String,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct WaveOutcome {
    pub steady_first: bool,
    pub steady_second: bool,
    pub fallback: bool,
}

/// Rounds elapsed between consecutive direct commits, merged over
/// honest live parties.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LatencyStats {
    pub histogram: BTreeMap<u64, u64>,
    pub samples: u64,
    pub mean: f64,
    pub max: u64,
}

/// Fallback-path liveness statistics, conditioned on waves where every
/// classified party holds the fallback vote type (the only waves in
/// which the fallback leader is committable at all).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FallbackStats {
    pub eligible_waves: u64,
    pub committed_eligible: u64,
    /// `4 * eligible / committed`: expected DAG rounds spent per
    /// fallback commit while the protocol is on the fallback path.
    pub mean_rounds_per_commit: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_digest: String,
    pub ordered_log_digests: BTreeMap<u32, String>,
    pub ordered_log_lengths: BTreeMap<u32, u64>,
    pub committed_leaders: Vec<LeaderSummary>,
    pub latency: LatencyStats,
    pub wave_outcomes: BTreeMap<Wave, WaveOutcome>,
    pub fallback_stats: FallbackStats,
    pub max_retained_rounds: u64,
    pub trace_records: u64,
    pub checks: Vec<CheckResult>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Stable digest of the whole report, for determinism comparisons.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("report serializes");
        hex::encode(&Sha256::digest(bytes)[..16])
    }
}

/// Lowest-indexed party that is neither crashed nor Byzantine; its local
/// interpretation stands for the agreed sequence in the report.
pub fn reference_party<'a>(scenario: &Scenario, parties: &'a [Party]) -> Option<&'a Party> {
    parties.iter().find(|p| {
        !p.crashed
            && !scenario
                .faults
                .iter()
                .any(|f| f.party == p.id.0 && matches!(f.kind, FaultKind::Equivocate))
    })
}

pub fn build(
    scenario: &Scenario,
    committee: &Committee,
    parties: &[Party],
    trace: &Trace,
    max_retained_rounds: u64,
) -> RunReport {
    let mut ordered_log_digests = BTreeMap::new();
    let mut ordered_log_lengths = BTreeMap::new();
    for p in parties {
        let mut hasher = Sha256::new();
        for e in p.core().ordered_log() {
            hasher.update(e.round.to_le_bytes());
            hasher.update((e.source.0 as u64).to_le_bytes());
            hasher.update(e.digest.0);
        }
        ordered_log_digests.insert(p.id.0, hex::encode(&hasher.finalize()[..16]));
        ordered_log_lengths.insert(p.id.0, p.core().ordered_log().len() as u64);
    }

    let reference = reference_party(scenario, parties);
    let committed_leaders: Vec<LeaderSummary> = reference
        .map(|p| {
            p.core()
                .ordered_leaders()
                .iter()
                .map(|l| LeaderSummary {
                    round: l.vertex.round,
                    source: l.vertex.source.0,
                    wave: l.wave,
                    kind: l.kind,
                    digest: l.vertex.digest.to_hex(),
                })
                .collect()
        })
        .unwrap_or_default();

    let mut wave_outcomes: BTreeMap<Wave, WaveOutcome> = BTreeMap::new();
    for l in &committed_leaders {
        let o = wave_outcomes.entry(l.wave).or_default();
        match l.kind {
            LeaderKind::SteadyFirst => o.steady_first = true,
            LeaderKind::SteadySecond => o.steady_second = true,
            LeaderKind::Fallback => o.fallback = true,
        }
    }

    let latency = latency_stats(scenario, parties);
    let fallback_stats = fallback_stats(scenario, committee, reference);

    let mut report = RunReport {
        scenario_digest: scenario.digest(),
        ordered_log_digests,
        ordered_log_lengths,
        committed_leaders,
        latency,
        wave_outcomes,
        fallback_stats,
        max_retained_rounds,
        trace_records: trace.len() as u64,
        checks: Vec::new(),
    };
    report.checks = crate::checkers::run_all(scenario, committee, parties, trace);
    report
}

/// Gaps between the leader rounds of consecutive direct commits, per
/// party, merged.
fn latency_stats(scenario: &Scenario, parties: &[Party]) -> LatencyStats {
    let mut stats = LatencyStats::default();
    let mut total = 0u64;
    for p in parties {
        if p.crashed
            || scenario
                .faults
                .iter()
                .any(|f| f.party == p.id.0 && matches!(f.kind, FaultKind::Equivocate))
        {
            continue;
        }
        let commits = p.core().direct_commits();
        for pair in commits.windows(2) {
            let gap = pair[1].round.saturating_sub(pair[0].round);
            *stats.histogram.entry(gap).or_insert(0) += 1;
            total += gap;
            stats.samples += 1;
            stats.max = stats.max.max(gap);
        }
    }
    stats.mean = if stats.samples > 0 { total as f64 / stats.samples as f64 } else { 0.0 };
    stats
}

fn fallback_stats(scenario: &Scenario, committee: &Committee, reference: Option<&Party>) -> FallbackStats {
    let mut out = FallbackStats::default();
    let reference = match reference {
        Some(p) => p,
        None => return out,
    };
    let ledger = match reference.vote_ledger() {
        Some(l) => l,
        None => return out,
    };
    let quorum = committee.quorum_threshold();
    // A wave only counts when its commit trigger round fits inside the
    // horizon, otherwise the coin never had a chance.
    let last_decidable_wave = scenario.max_rounds.saturating_sub(1) / 4;
    for w in ledger.classified_waves() {
        if w > last_decidable_wave || !ledger.all_fallback(w, quorum) {
            continue;
        }
        out.eligible_waves += 1;
        let committed = reference
            .core()
            .ordered_leaders()
            .iter()
            .any(|l| l.wave == w && l.kind == LeaderKind::Fallback);
        if committed {
            out.committed_eligible += 1;
        }
    }
    if out.committed_eligible > 0 {
        out.mean_rounds_per_commit = Some(4.0 * out.eligible_waves as f64 / out.committed_eligible as f64);
    }
    out
}
