//! Timestamp-driven garbage collection layered on the ordering step.
//!
//! Each ordered leader gets a timestamp — the median of its parents'
//! broadcast timestamps. While walking the leader's history round by
//! round, any round whose own median timestamp lags the leader's by more
//! than `3Δ` is cleared after its reachable vertices are delivered.
//! Vertices are never admitted at or below the collected frontier.

use crate::committee::{PartyId, Round, SimTime};
use crate::consensus::{deliver_batch, record_ordered_leader, CommitCore};
use crate::dag::LocalDag;
use crate::trace::{Kind, Record, Trace};
use crate::vertex::VertexRef;

pub struct GcState {
    pub gc_round: Round,
    pub delta: u64,
    /// `(ordered leader round, gc_round after processing it)` history,
    /// used to compare collection decisions across parties.
    pub transitions: Vec<(VertexRef, Round)>,
}

impl GcState {
    pub fn new(delta: u64) -> Self {
        Self { gc_round: 0, delta, transitions: Vec::new() }
    }

    /// Admission gate: vertices in collected rounds are rejected.
    pub fn admits(&self, round: Round) -> bool {
        round > self.gc_round
    }
}

/// Lower median: element at 1-indexed position `ceil(k / 2)` of the
/// ascending sort. For `k >= 2f + 1` with at most `f` faulty sources,
/// any order statistic in positions `f + 1 ..= k - f` is bracketed by
/// honest values; the lower median is the deterministic pick.
pub fn median(values: &[SimTime]) -> SimTime {
    assert!(!values.is_empty(), "median of empty timestamp set");
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted[(sorted.len() - 1) / 2]
}

pub(crate) fn order_vertices_gc(
    dag: &mut LocalDag,
    core: &mut CommitCore,
    gc: &mut GcState,
    party: PartyId,
    now: SimTime,
    trace: &mut Trace,
) {
    while let Some((leader, kind)) = core.pop_leader() {
        record_ordered_leader(core, leader, kind, party, now, trace);
        if dag.entry(leader.round, leader.source).is_none() {
            // A re-pushed leader whose round was collected after it was
            // first ordered; everything it covers was handled then.
            continue;
        }

        let mut to_deliver: Vec<VertexRef> = Vec::new();
        if leader.round > 1 && leader.round > gc.gc_round + 1 {
            let parents = dag.reachable_in_round(&leader, leader.round - 1, false);
            debug_assert!(!parents.is_empty());
            let leader_ts = median(
                &parents
                    .iter()
                    .map(|p| dag.entry(p.round, p.source).expect("parent present").vertex.ts)
                    .collect::<Vec<_>>(),
            );
            to_deliver.extend(parents.iter().copied());
            to_deliver.push(leader);

            let mut r = gc.gc_round + 1;
            while r < leader.round - 1 {
                let candidates = dag.reachable_in_round(&leader, r, false);
                if !candidates.is_empty() {
                    let candidates_ts = median(
                        &candidates
                            .iter()
                            .map(|c| dag.entry(c.round, c.source).expect("candidate present").vertex.ts)
                            .collect::<Vec<_>>(),
                    );
                    to_deliver.extend(candidates.iter().filter(|c| !core.is_delivered(c)));
                    if leader_ts.saturating_sub(candidates_ts) > 3 * gc.delta {
                        gc.gc_round = r;
                        let cleared = dag.clear_round(r);
                        trace.push(
                            Record::new(now, Kind::GcAdvance)
                                .party(party)
                                .round(r)
                                .count(cleared as u64),
                        );
                    }
                }
                r += 1;
            }
        } else {
            to_deliver.push(leader);
        }

        to_deliver.sort();
        to_deliver.dedup();
        deliver_batch(core, dag, &to_deliver, party, now, trace);
        gc.transitions.push((leader, gc.gc_round));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_singleton() {
        assert_eq!(median(&[3]), 3);
    }

    #[test]
    fn median_odd_count() {
        assert_eq!(median(&[9, 1, 5]), 5);
    }

    #[test]
    fn median_even_count_is_lower() {
        assert_eq!(median(&[8, 1, 9, 2]), 2);
    }

    #[test]
    fn admission_gate() {
        let mut gc = GcState::new(10);
        assert!(gc.admits(1));
        gc.gc_round = 4;
        assert!(!gc.admits(3));
        assert!(!gc.admits(4));
        assert!(gc.admits(5));
    }

    /// With `2f + 1` or more values and at most `f` of them faulty, the
    /// lower median always falls between two honest values.
    #[test]
    fn median_bracketed_by_honest_values() {
        // f = 1, five values, the faulty one at either extreme.
        for faulty in [0u64, 1000] {
            let mut values = vec![10, 20, 30, 40, faulty];
            let m = median(&values);
            values.sort_unstable();
            let honest: Vec<_> = values.iter().copied().filter(|v| *v != faulty).collect();
            assert!(m >= *honest.first().unwrap() && m <= *honest.last().unwrap());
        }
    }
}
