//! Commit state and the total ordering of leader causal histories,
//! shared by both protocol variants.

pub mod fallback;
pub mod psync;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::committee::{wave_of_round, PartyId, Round, SimTime, Wave};
use crate::dag::LocalDag;
use crate::gc::GcState;
use crate::trace::{Kind, Record, Trace};
use crate::vertex::{Digest, VertexRef};

/// How a leader entered the stack; steady leaders split by slot so wave
/// outcomes can be reported precisely.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeaderKind {
    SteadyFirst,
    SteadySecond,
    Fallback,
}

impl LeaderKind {
    pub fn is_steady(self) -> bool {
        !matches!(self, LeaderKind::Fallback)
    }

    pub fn label(self) -> &'static str {
        match self {
            LeaderKind::SteadyFirst => "steady1",
            LeaderKind::SteadySecond => "steady2",
            LeaderKind::Fallback => "fallback",
        }
    }
}

/// One entry of the ordered output log.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrderedEntry {
    pub round: Round,
    pub source: PartyId,
    pub digest: Digest,
    pub block_origin: PartyId,
    pub block_seq: u64,
}

/// One leader in the agreed leader sequence.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LeaderRecord {
    pub wave: Wave,
    pub kind: LeaderKind,
    pub vertex: VertexRef,
}

/// Per-party commit state: the leader stack pending ordering, the set of
/// already-delivered vertices, and the append-only output log.
pub struct CommitCore {
    pub committed_round: Round,
    leader_stack: Vec<(VertexRef, LeaderKind)>,
    delivered: BTreeSet<VertexRef>,
    ordered_log: Vec<OrderedEntry>,
    ordered_leaders: Vec<LeaderRecord>,
    seen_leaders: BTreeSet<VertexRef>,
    direct_commits: Vec<(Round, VertexRef)>,
}

impl CommitCore {
    pub fn new() -> Self {
        Self {
            committed_round: 0,
            leader_stack: Vec::new(),
            delivered: BTreeSet::new(),
            ordered_log: Vec::new(),
            ordered_leaders: Vec::new(),
            seen_leaders: BTreeSet::new(),
            direct_commits: Vec::new(),
        }
    }

    pub fn push_leader(&mut self, v: VertexRef, kind: LeaderKind) {
        self.leader_stack.push((v, kind));
    }

    pub(crate) fn pop_leader(&mut self) -> Option<(VertexRef, LeaderKind)> {
        self.leader_stack.pop()
    }

    pub fn note_direct_commit(&mut self, v: VertexRef) {
        if self.direct_commits.last().map(|(_, r)| *r) != Some(v) {
            self.direct_commits.push((v.round, v));
        }
    }

    pub fn ordered_log(&self) -> &[OrderedEntry] {
        &self.ordered_log
    }

    pub fn ordered_leaders(&self) -> &[LeaderRecord] {
        &self.ordered_leaders
    }

    /// Direct commits in trigger order, deduplicated per leader.
    pub fn direct_commits(&self) -> Vec<VertexRef> {
        let mut seen = BTreeSet::new();
        self.direct_commits.iter().filter(|(_, v)| seen.insert(*v)).map(|(_, v)| *v).collect()
    }

    pub fn is_delivered(&self, v: &VertexRef) -> bool {
        self.delivered.contains(v)
    }
}

impl Default for CommitCore {
    fn default() -> Self {
        Self::new()
    }
}

/// Pop the leader stack and `a_deliver` each leader's not-yet-delivered
/// causal history in canonical order (ascending round, then source, then
/// digest). With garbage collection enabled, the timestamped variant
/// also clears old rounds as it walks.
pub fn order_vertices(
    dag: &mut LocalDag,
    core: &mut CommitCore,
    gc: Option<&mut GcState>,
    party: PartyId,
    now: SimTime,
    trace: &mut Trace,
) {
    match gc {
        Some(gc) => crate::gc::order_vertices_gc(dag, core, gc, party, now, trace),
        None => order_vertices_unbounded(dag, core, party, now, trace),
    }
}

fn order_vertices_unbounded(
    dag: &LocalDag,
    core: &mut CommitCore,
    party: PartyId,
    now: SimTime,
    trace: &mut Trace,
) {
    while let Some((leader, kind)) = core.pop_leader() {
        record_ordered_leader(core, leader, kind, party, now, trace);
        let history = dag.causal_history(&leader);
        deliver_batch(core, dag, &history, party, now, trace);
    }
}

pub(crate) fn record_ordered_leader(
    core: &mut CommitCore,
    leader: VertexRef,
    kind: LeaderKind,
    party: PartyId,
    now: SimTime,
    trace: &mut Trace,
) {
    if core.seen_leaders.insert(leader) {
        core.ordered_leaders.push(LeaderRecord { wave: wave_of_round(leader.round), kind, vertex: leader });
        trace.push(
            Record::new(now, Kind::OrderedLeader)
                .party(party)
                .sender(leader.source)
                .round(leader.round)
                .wave(wave_of_round(leader.round))
                .digest(leader.digest)
                .note(kind.label()),
        );
    }
}

/// Deliver `batch` (already in canonical ascending order), skipping
/// vertices previously delivered. Genesis vertices never appear here.
pub(crate) fn deliver_batch(
    core: &mut CommitCore,
    dag: &LocalDag,
    batch: &[VertexRef],
    party: PartyId,
    now: SimTime,
    trace: &mut Trace,
) {
    debug_assert!(batch.windows(2).all(|w| w[0] <= w[1]));
    for u in batch {
        if u.round == 0 || core.delivered.contains(u) {
            continue;
        }
        let entry = match dag.entry(u.round, u.source) {
            Some(e) => e,
            None => continue,
        };
        core.delivered.insert(*u);
        core.ordered_log.push(OrderedEntry {
            round: u.round,
            source: u.source,
            digest: u.digest,
            block_origin: entry.vertex.block.origin,
            block_seq: entry.vertex.block.seq,
        });
        trace.push(
            Record::new(now, Kind::ADeliver)
                .party(party)
                .sender(u.source)
                .round(u.round)
                .digest(u.digest),
        );
    }
}
