//! Eventually synchronous Bullshark: steady-state leaders only, an
//! `f + 1` direct-commit rule, and a backward walk that orders a skipped
//! leader iff the anchor has a strong path to it. No vote types, no view
//! change.

use std::sync::Arc;

use crate::committee::{wave_of_round, PartyId, Round, SimTime};
use crate::dag::{first_steady_vertex_leader, second_steady_vertex_leader, LocalDag};
use crate::gc::GcState;
use crate::trace::{Kind, Record, Trace};
use crate::vertex::{Vertex, VertexRef};

use super::{order_vertices, CommitCore, LeaderKind};

pub struct PsyncCtx<'a> {
    pub dag: &'a mut LocalDag,
    pub core: &'a mut CommitCore,
    pub gc: Option<&'a mut GcState>,
    pub party: PartyId,
    pub now: SimTime,
    pub trace: &'a mut Trace,
}

/// Entry point, invoked for every vertex freshly added to the DAG.
/// First-round vertices vote for the previous wave's second leader,
/// third-round vertices for the current wave's first leader.
pub fn try_ordering(cx: &mut PsyncCtx<'_>, v: &Arc<Vertex>) {
    let w = wave_of_round(v.round);
    let votes = v.strong_edges.clone();
    if v.round % 4 == 1 {
        if w >= 2 {
            let leader = second_steady_vertex_leader(cx.dag, w - 1);
            try_commit(cx, &votes, leader, LeaderKind::SteadySecond);
        }
    } else if v.round % 4 == 3 {
        let leader = first_steady_vertex_leader(cx.dag, w);
        try_commit(cx, &votes, leader, LeaderKind::SteadyFirst);
    }
}

fn try_commit(cx: &mut PsyncCtx<'_>, votes: &[VertexRef], leader: Option<VertexRef>, kind: LeaderKind) {
    let leader = match leader {
        Some(l) => l,
        None => return,
    };
    let count = votes.iter().filter(|v| cx.dag.strong_path(v, &leader)).count();
    if count < cx.dag.committee().validity_threshold() {
        return;
    }
    let vote_round = votes.first().map(|v| v.round).unwrap_or(0);
    cx.core.note_direct_commit(leader);
    cx.trace.push(
        Record::new(cx.now, Kind::DirectCommit)
            .party(cx.party)
            .sender(leader.source)
            .round(vote_round)
            .wave(wave_of_round(leader.round))
            .digest(leader.digest)
            .count(count as u64)
            .note(kind.label()),
    );
    commit_leader(cx, leader, kind);
}

fn commit_leader(cx: &mut PsyncCtx<'_>, leader: VertexRef, kind: LeaderKind) {
    cx.core.push_leader(leader, kind);
    let mut anchor = leader;
    let mut r = leader.round as i64 - 2;
    while r > cx.core.committed_round as i64 && r >= 1 {
        let round = r as Round;
        let w = wave_of_round(round);
        let (candidate, ckind) = if round % 4 == 1 {
            (first_steady_vertex_leader(cx.dag, w), LeaderKind::SteadyFirst)
        } else {
            (second_steady_vertex_leader(cx.dag, w), LeaderKind::SteadySecond)
        };
        match candidate {
            Some(vs) if cx.dag.strong_path(&anchor, &vs) => {
                cx.trace.push(
                    Record::new(cx.now, Kind::IndirectCommit)
                        .party(cx.party)
                        .sender(vs.source)
                        .round(round)
                        .wave(w)
                        .digest(vs.digest)
                        .note(ckind.label()),
                );
                cx.core.push_leader(vs, ckind);
                anchor = vs;
            }
            _ => {
                cx.trace.push(Record::new(cx.now, Kind::WalkSkip).party(cx.party).round(round).wave(w));
            }
        }
        r -= 2;
    }
    cx.core.committed_round = anchor.round;
    order_vertices(cx.dag, cx.core, cx.gc.as_deref_mut(), cx.party, cx.now, cx.trace);
}
