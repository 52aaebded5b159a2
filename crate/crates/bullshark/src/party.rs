//! Per-party DAG construction state machine: vertex admission with
//! buffering, round advancement with embedded timeouts, round jumps for
//! slow parties, and vertex creation/broadcast. Strictly sequential; the
//! event loop invokes one handler at a time.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::coin::Coin;
use crate::committee::{wave_of_round, Committee, PartyId, Round, SimTime, Wave};
use crate::consensus::{fallback, psync, CommitCore};
use crate::dag::{first_steady_vertex_leader, second_steady_vertex_leader, InsertError, LocalDag};
use crate::gc::GcState;
use crate::scenario::Protocol;
use crate::trace::{Kind, Record, Trace};
use crate::vertex::{Block, Vertex, VertexRef};

/// Side effects a handler hands back to the event loop.
pub enum Effect {
    Broadcast(Arc<Vertex>),
    ArmTimer { generation: u64, fire_in: SimTime },
}

/// Per-call context: the clock, the run horizon, trace sink and effect
/// outbox.
pub struct Ctx<'a> {
    pub now: SimTime,
    pub horizon: Round,
    pub tx_rate: u32,
    pub timeout_ticks: u64,
    pub coin: &'a Coin,
    pub trace: &'a mut Trace,
    pub effects: &'a mut Vec<Effect>,
}

enum Engine {
    Fallback(fallback::VoteLedger),
    Psync,
}

pub struct Party {
    pub id: PartyId,
    committee: Committee,
    dag: LocalDag,
    buffer: BTreeMap<(Round, PartyId), Arc<Vertex>>,
    round: Round,
    wait: bool,
    timer_generation: u64,
    blocks_to_propose: VecDeque<Block>,
    next_seq: u64,
    engine: Engine,
    core: CommitCore,
    gc: Option<GcState>,
    pub crashed: bool,
    broadcast_rounds: BTreeSet<Round>,
}

impl Party {
    pub fn new(id: PartyId, committee: Committee, protocol: Protocol, gc_delta: Option<u64>) -> Self {
        let engine = match protocol {
            Protocol::Fallback => Engine::Fallback(fallback::VoteLedger::new(&committee)),
            Protocol::Psync => Engine::Psync,
        };
        Self {
            id,
            dag: LocalDag::new(committee.clone()),
            committee,
            buffer: BTreeMap::new(),
            round: 0,
            wait: true,
            timer_generation: 0,
            blocks_to_propose: VecDeque::new(),
            next_seq: 0,
            engine,
            core: CommitCore::new(),
            gc: gc_delta.map(GcState::new),
            crashed: false,
            broadcast_rounds: BTreeSet::new(),
        }
    }

    // --- accessors used by the harness and checkers ---

    pub fn dag(&self) -> &LocalDag {
        &self.dag
    }

    pub fn core(&self) -> &CommitCore {
        &self.core
    }

    pub fn round(&self) -> Round {
        self.round
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn gc_state(&self) -> Option<&GcState> {
        self.gc.as_ref()
    }

    pub fn vote_ledger(&self) -> Option<&fallback::VoteLedger> {
        match &self.engine {
            Engine::Fallback(l) => Some(l),
            Engine::Psync => None,
        }
    }

    /// Queue a payload for inclusion in a future vertex.
    pub fn a_bcast(&mut self, payload: Vec<u8>) {
        self.next_seq += 1;
        self.blocks_to_propose.push_back(Block { origin: self.id, seq: self.next_seq, payload });
    }

    /// Enter round 1 and broadcast the first vertex.
    pub fn start(&mut self, ctx: &mut Ctx<'_>) {
        self.enter_round(1, "init", ctx);
    }

    /// Reliable-broadcast delivery handler.
    pub fn on_r_deliver(&mut self, v: Arc<Vertex>, r: Round, p: PartyId, ctx: &mut Ctx<'_>) {
        // Validity check: source and round must match the broadcast
        // instance, and a quorum of strong edges is mandatory.
        if v.source != p || v.round != r || v.round == 0
            || v.strong_edges.len() < self.committee.quorum_threshold()
        {
            ctx.trace.push(
                Record::new(ctx.now, Kind::MalformedDropped)
                    .party(self.id)
                    .sender(p)
                    .round(r)
                    .digest(v.digest())
                    .note("byzantine evidence"),
            );
            return;
        }
        if let Some(existing) = self.dag.get_vertex(p, r) {
            // Echo of a vertex we already hold (e.g. the transport's
            // delivery of our own broadcast).
            debug_assert_eq!(existing.digest, v.digest());
            ctx.trace.push(
                Record::new(ctx.now, Kind::DeliverDropped)
                    .party(self.id)
                    .sender(p)
                    .round(r)
                    .note("already in dag"),
            );
            return;
        }

        match self.try_add_to_dag(v.clone(), ctx) {
            AddOutcome::Added => self.retry_buffer(ctx),
            AddOutcome::MissingParents => {
                self.buffer.insert((v.round, v.source), v.clone());
                ctx.trace.push(
                    Record::new(ctx.now, Kind::Buffered)
                        .party(self.id)
                        .sender(p)
                        .round(r)
                        .digest(v.digest())
                        .count(self.buffer.len() as u64),
                );
            }
            AddOutcome::Rejected => {}
        }

        if r == self.round {
            self.evaluate_advancement(ctx);
        }
    }

    /// Round timer expiry. Stale generations (the party moved on) are
    /// ignored.
    pub fn on_timeout(&mut self, generation: u64, ctx: &mut Ctx<'_>) {
        if generation != self.timer_generation {
            return;
        }
        ctx.trace.push(Record::new(ctx.now, Kind::TimerExpired).party(self.id).round(self.round));
        self.wait = false;
        self.try_advance_round(ctx);
    }

    /// The four wave-position advancement conditions. Odd rounds wait
    /// for the scheduled leader's vertex; even rounds wait for a quorum
    /// of steady-typed votes with strong paths to the leader. A timeout
    /// unblocks either.
    fn evaluate_advancement(&mut self, ctx: &mut Ctx<'_>) {
        let r = self.round;
        if r == 0 {
            return;
        }
        let w = wave_of_round(r);
        let ready = match r % 4 {
            1 => {
                !self.wait
                    || self.dag.get_vertex(self.committee.first_steady_leader(w), r).is_some()
            }
            3 => {
                !self.wait
                    || self.dag.get_vertex(self.committee.second_steady_leader(w), r).is_some()
            }
            2 => !self.wait || self.quorum_votes_for_leader(r, first_steady_vertex_leader(&self.dag, w), w),
            _ => !self.wait || self.quorum_votes_for_leader(r, second_steady_vertex_leader(&self.dag, w), w),
        };
        if ready {
            self.try_advance_round(ctx);
        }
    }

    fn quorum_votes_for_leader(&self, r: Round, leader: Option<VertexRef>, w: Wave) -> bool {
        let leader = match leader {
            Some(l) => l,
            None => return false,
        };
        let count = self
            .dag
            .round_entries(r)
            .filter(|e| {
                self.is_steady_voter(e.vertex.source, w) && self.dag.strong_path(&e.reference(), &leader)
            })
            .count();
        count >= self.committee.quorum_threshold()
    }

    /// In psync runs every party is a steady voter for every wave.
    fn is_steady_voter(&self, p: PartyId, w: Wave) -> bool {
        match &self.engine {
            Engine::Fallback(ledger) => ledger.is_steady(p, w),
            Engine::Psync => true,
        }
    }

    fn try_advance_round(&mut self, ctx: &mut Ctx<'_>) {
        if self.dag.round_len(self.round) >= self.committee.quorum_threshold() {
            self.enter_round(self.round + 1, "advance", ctx);
        }
    }

    fn enter_round(&mut self, r: Round, how: &str, ctx: &mut Ctx<'_>) {
        self.round = r;
        self.wait = true;
        self.timer_generation += 1;
        ctx.trace.push(Record::new(ctx.now, Kind::RoundEntered).party(self.id).round(r).note(how));
        if r > ctx.horizon {
            return;
        }
        for _ in 0..ctx.tx_rate {
            let seq = self.next_seq + 1;
            let mut payload = Vec::with_capacity(16);
            payload.extend_from_slice(&(self.id.0 as u64).to_le_bytes());
            payload.extend_from_slice(&seq.to_le_bytes());
            self.a_bcast(payload);
        }
        ctx.effects.push(Effect::ArmTimer { generation: self.timer_generation, fire_in: ctx.timeout_ticks });
        ctx.trace.push(Record::new(ctx.now, Kind::TimerStarted).party(self.id).round(r));
        self.broadcast_vertex(r, ctx);
    }

    fn broadcast_vertex(&mut self, r: Round, ctx: &mut Ctx<'_>) {
        let v = self.create_new_vertex(r, ctx.now);
        let first_for_round = self.broadcast_rounds.insert(r);
        assert!(first_for_round, "party must broadcast at most one vertex per round");
        let outcome = self.try_add_to_dag(v.clone(), ctx);
        debug_assert!(matches!(outcome, AddOutcome::Added), "own vertex is always admissible");
        ctx.effects.push(Effect::Broadcast(v));
    }

    /// Build this round's vertex: strong edges to the full previous
    /// round, weak edges to any older vertex not yet reachable, next
    /// queued block (an empty block when the queue is dry, so round
    /// progress never stalls on payload supply).
    fn create_new_vertex(&mut self, r: Round, now: SimTime) -> Arc<Vertex> {
        let block = self.blocks_to_propose.pop_front().unwrap_or_else(|| {
            self.next_seq += 1;
            Block::empty(self.id, self.next_seq)
        });
        let strong: Vec<VertexRef> = self.dag.round_entries(r - 1).map(|e| e.reference()).collect();
        debug_assert!(strong.len() >= self.committee.quorum_threshold() || r == 1);
        let weak = self.dag.weak_targets(&strong, r);
        Vertex::new(r, self.id, block, strong, weak, now)
    }

    fn try_add_to_dag(&mut self, v: Arc<Vertex>, ctx: &mut Ctx<'_>) -> AddOutcome {
        let floor = self.gc.as_ref().map_or(0, |g| g.gc_round);
        if let Some(gc) = &self.gc {
            if !gc.admits(v.round) {
                ctx.trace.push(
                    Record::new(ctx.now, Kind::GcRejected)
                        .party(self.id)
                        .sender(v.source)
                        .round(v.round)
                        .digest(v.digest()),
                );
                return AddOutcome::Rejected;
            }
        }
        match self.dag.insert(v.clone(), floor) {
            Err(InsertError::MissingParents) => return AddOutcome::MissingParents,
            Err(InsertError::DuplicateSource) => return AddOutcome::Rejected,
            Ok(()) => {}
        }
        ctx.trace.push(
            Record::new(ctx.now, Kind::Admitted)
                .party(self.id)
                .sender(v.source)
                .round(v.round)
                .digest(v.digest()),
        );
        // Wave synchronization: a full round ahead of us means we are
        // behind; jump straight there.
        if self.dag.round_len(v.round) >= self.committee.quorum_threshold() && v.round > self.round {
            self.enter_round(v.round, "jump", ctx);
        }
        self.buffer.remove(&(v.round, v.source));
        self.run_ordering(&v, ctx);
        AddOutcome::Added
    }

    /// Re-attempt buffered vertices until a pass admits nothing new, in
    /// ascending `(round, source)` order so cascades resolve
    /// deterministically.
    fn retry_buffer(&mut self, ctx: &mut Ctx<'_>) {
        loop {
            let mut progressed = false;
            let keys: Vec<_> = self.buffer.keys().copied().collect();
            for key in keys {
                let v = match self.buffer.get(&key) {
                    Some(v) => v.clone(),
                    None => continue,
                };
                match self.try_add_to_dag(v, ctx) {
                    AddOutcome::Added => progressed = true,
                    AddOutcome::Rejected => {
                        self.buffer.remove(&key);
                    }
                    AddOutcome::MissingParents => {}
                }
            }
            if !progressed {
                break;
            }
        }
    }

    fn run_ordering(&mut self, v: &Arc<Vertex>, ctx: &mut Ctx<'_>) {
        match &mut self.engine {
            Engine::Fallback(ledger) => {
                let mut cx = fallback::FallbackCtx {
                    dag: &mut self.dag,
                    ledger,
                    core: &mut self.core,
                    gc: self.gc.as_mut(),
                    coin: ctx.coin,
                    party: self.id,
                    now: ctx.now,
                    trace: ctx.trace,
                };
                fallback::try_ordering(&mut cx, v);
            }
            Engine::Psync => {
                let mut cx = psync::PsyncCtx {
                    dag: &mut self.dag,
                    core: &mut self.core,
                    gc: self.gc.as_mut(),
                    party: self.id,
                    now: ctx.now,
                    trace: ctx.trace,
                };
                psync::try_ordering(&mut cx, v);
            }
        }
    }
}

enum AddOutcome {
    Added,
    MissingParents,
    Rejected,
}
