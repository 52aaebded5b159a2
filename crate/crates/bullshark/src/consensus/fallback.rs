//! Bullshark with fallback: per-wave vote types, direct commits of
//! steady-state and fallback leaders, and the backward walk that
//! indirectly commits leaders other parties may have committed.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coin::Coin;
use crate::committee::{wave_of_round, PartyId, Round, SimTime, Wave};
use crate::dag::{fallback_vertex_leader, first_steady_vertex_leader, second_steady_vertex_leader, LocalDag};
use crate::gc::GcState;
use crate::trace::{Kind, Record, Trace};
use crate::vertex::{Vertex, VertexRef};

use super::{order_vertices, CommitCore, LeaderKind};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteType {
    Steady,
    Fallback,
}

/// Per-wave partition of parties into steady-state and fallback voters.
///
/// Wave 1 is preset: every party votes steady-state. A party appears in
/// a later wave's partition only once its vertex in the wave's first
/// round has been processed, and the classification is a pure function
/// of that vertex's causal history, so all parties derive the same
/// partition.
pub struct VoteLedger {
    steady: BTreeMap<Wave, BTreeSet<PartyId>>,
    fallback: BTreeMap<Wave, BTreeSet<PartyId>>,
    all_parties: BTreeSet<PartyId>,
}

impl VoteLedger {
    pub fn new(committee: &crate::committee::Committee) -> Self {
        let all: BTreeSet<PartyId> = committee.parties().collect();
        let mut steady = BTreeMap::new();
        steady.insert(1, all.clone());
        Self { steady, fallback: BTreeMap::new(), all_parties: all }
    }

    pub fn is_steady(&self, p: PartyId, w: Wave) -> bool {
        self.steady.get(&w).map_or(false, |s| s.contains(&p))
    }

    pub fn is_fallback(&self, p: PartyId, w: Wave) -> bool {
        self.fallback.get(&w).map_or(false, |s| s.contains(&p))
    }

    pub fn vote_type(&self, p: PartyId, w: Wave) -> Option<VoteType> {
        if self.is_steady(p, w) {
            Some(VoteType::Steady)
        } else if self.is_fallback(p, w) {
            Some(VoteType::Fallback)
        } else {
            None
        }
    }

    pub fn steady_voters(&self, w: Wave) -> usize {
        self.steady.get(&w).map_or(0, |s| s.len())
    }

    pub fn fallback_voters(&self, w: Wave) -> usize {
        self.fallback.get(&w).map_or(0, |s| s.len())
    }

    /// Waves with at least one explicit classification (wave 1 preset
    /// included).
    pub fn classified_waves(&self) -> BTreeSet<Wave> {
        self.steady.keys().chain(self.fallback.keys()).copied().collect()
    }

    fn classify(&mut self, p: PartyId, w: Wave, t: VoteType) {
        debug_assert!(self.vote_type(p, w).is_none() || w == 1);
        match t {
            VoteType::Steady => self.steady.entry(w).or_default().insert(p),
            VoteType::Fallback => self.fallback.entry(w).or_default().insert(p),
        };
    }

    /// True when every classified party of wave `w` is a fallback voter
    /// and they form at least a quorum.
    pub fn all_fallback(&self, w: Wave, quorum: usize) -> bool {
        self.steady_voters(w) == 0 && self.fallback_voters(w) >= quorum
    }

    pub fn all_parties(&self) -> &BTreeSet<PartyId> {
        &self.all_parties
    }
}

/// Everything the ordering logic of one party needs to borrow.
pub struct FallbackCtx<'a> {
    pub dag: &'a mut LocalDag,
    pub ledger: &'a mut VoteLedger,
    pub core: &'a mut CommitCore,
    pub gc: Option<&'a mut GcState>,
    pub coin: &'a Coin,
    pub party: PartyId,
    pub now: SimTime,
    pub trace: &'a mut Trace,
}

/// Entry point, invoked for every vertex freshly added to the DAG.
pub fn try_ordering(cx: &mut FallbackCtx<'_>, v: &Arc<Vertex>) {
    let w = wave_of_round(v.round);
    let votes = v.strong_edges.clone();
    if v.round % 4 == 1 {
        // First round of a wave: the vertex's history fixes its source's
        // vote type. Wave 1 types are preset.
        if w > 1 {
            determine_party_vote_type(cx, v.source, &votes, w);
        }
    } else if v.round % 4 == 3 {
        let leader = first_steady_vertex_leader(cx.dag, w);
        try_steady_commit(cx, &votes, leader, w, LeaderKind::SteadyFirst);
    }
}

/// Classify `p`'s vote type for wave `w` from the votes carried by its
/// first-round vertex: steady-state iff that history commits the second
/// steady leader or the fallback leader of wave `w - 1`.
fn determine_party_vote_type(cx: &mut FallbackCtx<'_>, p: PartyId, votes: &[VertexRef], w: Wave) {
    let second = second_steady_vertex_leader(cx.dag, w - 1);
    let fallback = fallback_vertex_leader(cx.dag, cx.coin, w - 1);
    let steady = try_steady_commit(cx, votes, second, w - 1, LeaderKind::SteadySecond)
        || try_fallback_commit(cx, votes, fallback, w - 1);
    let t = if steady { VoteType::Steady } else { VoteType::Fallback };
    cx.ledger.classify(p, w, t);
    cx.trace.push(
        Record::new(cx.now, Kind::VoteType)
            .party(cx.party)
            .sender(p)
            .wave(w)
            .note(match t {
                VoteType::Steady => "steady",
                VoteType::Fallback => "fallback",
            }),
    );
}

/// Commit `leader` iff at least `2f + 1` of `votes` come from
/// steady-state voters of wave `w` and have strong paths to it.
fn try_steady_commit(
    cx: &mut FallbackCtx<'_>,
    votes: &[VertexRef],
    leader: Option<VertexRef>,
    w: Wave,
    kind: LeaderKind,
) -> bool {
    let leader = match leader {
        Some(l) => l,
        None => return false,
    };
    let count = votes
        .iter()
        .filter(|v| cx.ledger.is_steady(v.source, w) && cx.dag.strong_path(v, &leader))
        .count();
    if count < cx.dag.committee().quorum_threshold() {
        return false;
    }
    trace_direct(cx, leader, w, kind, count, votes);
    commit_leader(cx, leader, kind);
    true
}

/// Symmetric rule for the fallback leader of wave `w`.
fn try_fallback_commit(
    cx: &mut FallbackCtx<'_>,
    votes: &[VertexRef],
    leader: Option<VertexRef>,
    w: Wave,
) -> bool {
    let leader = match leader {
        Some(l) => l,
        None => return false,
    };
    let count = votes
        .iter()
        .filter(|v| cx.ledger.is_fallback(v.source, w) && cx.dag.strong_path(v, &leader))
        .count();
    if count < cx.dag.committee().quorum_threshold() {
        return false;
    }
    trace_direct(cx, leader, w, LeaderKind::Fallback, count, votes);
    commit_leader(cx, leader, LeaderKind::Fallback);
    true
}

fn trace_direct(
    cx: &mut FallbackCtx<'_>,
    leader: VertexRef,
    w: Wave,
    kind: LeaderKind,
    count: usize,
    votes: &[VertexRef],
) {
    let vote_round = votes.first().map(|v| v.round).unwrap_or(0);
    cx.core.note_direct_commit(leader);
    cx.trace.push(
        Record::new(cx.now, Kind::DirectCommit)
            .party(cx.party)
            .sender(leader.source)
            .round(vote_round)
            .wave(w)
            .digest(leader.digest)
            .count(count as u64)
            .note(kind.label()),
    );
}

/// Push the directly committed leader, then walk backwards two rounds at
/// a time re-anchoring on every leader that could have been committed
/// elsewhere (at least `f + 1` votes of its type visible from the
/// current anchor, fewer than `f + 1` for the opposing leader).
fn commit_leader(cx: &mut FallbackCtx<'_>, leader: VertexRef, kind: LeaderKind) {
    cx.core.push_leader(leader, kind);
    let mut anchor = leader;
    let mut r = leader.round as i64 - 2;
    let validity = cx.dag.committee().validity_threshold();
    while r > cx.core.committed_round as i64 && r >= 1 {
        let round = r as Round;
        let w = wave_of_round(round);
        let ss_potential = cx.dag.reachable_in_round(&anchor, round + 1, true);
        let (steady_leader, steady_kind, fallback_leader, fb_votes) = if round % 4 == 1 {
            let v_s = first_steady_vertex_leader(cx.dag, w);
            let v_f = fallback_vertex_leader(cx.dag, cx.coin, w);
            // When the anchor sits two rounds up it is this wave's second
            // steady leader; a committed steady leader implies too few
            // fallback voters for the fallback leader to have been
            // committed by anyone.
            let fb = if anchor.round == round + 2 {
                0
            } else {
                match v_f {
                    Some(vf) => cx
                        .dag
                        .reachable_in_round(&anchor, round + 3, true)
                        .iter()
                        .filter(|v| cx.ledger.is_fallback(v.source, w) && cx.dag.strong_path(v, &vf))
                        .count(),
                    None => 0,
                }
            };
            (v_s, LeaderKind::SteadyFirst, v_f, fb)
        } else {
            (second_steady_vertex_leader(cx.dag, w), LeaderKind::SteadySecond, None, 0)
        };
        let ss_votes = match steady_leader {
            Some(vs) => ss_potential
                .iter()
                .filter(|v| cx.ledger.is_steady(v.source, w) && cx.dag.strong_path(v, &vs))
                .count(),
            None => 0,
        };

        if ss_votes >= validity && fb_votes < validity {
            let vs = steady_leader.expect("votes imply the leader vertex exists");
            cx.trace.push(
                Record::new(cx.now, Kind::IndirectCommit)
                    .party(cx.party)
                    .sender(vs.source)
                    .round(round)
                    .wave(w)
                    .digest(vs.digest)
                    .count(ss_votes as u64)
                    .count2(fb_votes as u64)
                    .note(steady_kind.label()),
            );
            cx.core.push_leader(vs, steady_kind);
            anchor = vs;
        } else if ss_votes < validity && fb_votes >= validity {
            let vf = fallback_leader.expect("votes imply the leader vertex exists");
            cx.trace.push(
                Record::new(cx.now, Kind::IndirectCommit)
                    .party(cx.party)
                    .sender(vf.source)
                    .round(round)
                    .wave(w)
                    .digest(vf.digest)
                    .count(ss_votes as u64)
                    .count2(fb_votes as u64)
                    .note(LeaderKind::Fallback.label()),
            );
            cx.core.push_leader(vf, LeaderKind::Fallback);
            anchor = vf;
        } else {
            cx.trace.push(
                Record::new(cx.now, Kind::WalkSkip)
                    .party(cx.party)
                    .round(round)
                    .wave(w)
                    .count(ss_votes as u64)
                    .count2(fb_votes as u64),
            );
        }
        r -= 2;
    }
    cx.core.committed_round = anchor.round;
    order_vertices(cx.dag, cx.core, cx.gc.as_deref_mut(), cx.party, cx.now, cx.trace);
}
