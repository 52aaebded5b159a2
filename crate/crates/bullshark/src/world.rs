//! Discrete-event simulation loop: one scenario, one sequential world.
//!
//! Events are totally ordered by `(time, enqueue sequence)`, so the fired
//! order — and therefore the trace — is a pure function of the scenario.
//! The run ends when the queue drains: parties stop broadcasting past
//! the round horizon, every pending delivery flushes, and the checkers
//! evaluate "eventually" properties on the quiesced state.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::coin::Coin;
use crate::committee::{Committee, PartyId, Round, SimTime, Wave};
use crate::error::SimError;
use crate::party::{Ctx, Effect, Party};
use crate::report::{self, RunReport};
use crate::scenario::{FaultKind, Scenario, SchedulerPolicy};
use crate::trace::{Kind, Record, Trace};
use crate::transport::{RegisterOutcome, Transport};
use crate::vertex::{Block, Vertex};

enum Event {
    Delivery { recipient: PartyId, sender: PartyId, round: Round, vertex: Arc<Vertex> },
    Timer { party: PartyId, generation: u64 },
    Crash { party: PartyId },
}

/// Everything a finished run exposes to checkers and reports.
pub struct SimOutcome {
    pub scenario: Scenario,
    pub committee: Committee,
    pub parties: Vec<Party>,
    pub trace: Trace,
    pub report: RunReport,
    pub max_retained_rounds: u64,
}

impl SimOutcome {
    pub fn crashed_parties(&self) -> BTreeSet<PartyId> {
        self.parties.iter().filter(|p| p.crashed).map(|p| p.id).collect()
    }

    /// Honest parties still live at quiescence (faulted only by delays).
    pub fn live_honest(&self) -> Vec<PartyId> {
        self.scenario
            .validate()
            .map(|c| {
                c.parties()
                    .filter(|p| {
                        !self.parties[p.index()].crashed
                            && !matches!(
                                self.fault_of(*p),
                                Some(FaultKind::Equivocate)
                            )
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn fault_of(&self, p: PartyId) -> Option<FaultKind> {
        self.scenario.faults.iter().find(|f| f.party == p.0).map(|f| f.kind)
    }
}

struct World {
    scenario: Scenario,
    committee: Committee,
    clock: SimTime,
    seq: u64,
    queue: BTreeMap<(SimTime, u64), Event>,
    parties: Vec<Party>,
    transport: Transport,
    coin: Coin,
    /// Honest parties that produced a vertex in each wave's last round;
    /// the adversary may read the wave's coin only once `f + 1` exist.
    coin_gate: BTreeMap<Wave, BTreeSet<PartyId>>,
    trace: Trace,
    max_retained_rounds: u64,
}

/// Run one scenario to quiescence and evaluate every applicable checker.
pub fn run_scenario(scenario: &Scenario) -> Result<SimOutcome, SimError> {
    let committee = scenario.validate()?;
    let coin = Coin::seeded(scenario.seed, scenario.n);
    let gc_delta = scenario.gc_enabled.then_some(scenario.delta);
    let parties = committee
        .parties()
        .map(|p| Party::new(p, committee.clone(), scenario.protocol, gc_delta))
        .collect();

    let mut world = World {
        scenario: scenario.clone(),
        committee,
        clock: 0,
        seq: 0,
        queue: BTreeMap::new(),
        parties,
        transport: Transport::new(scenario),
        coin,
        coin_gate: BTreeMap::new(),
        trace: Trace::new(),
        max_retained_rounds: 0,
    };
    world.trace.push(
        Record::new(0, Kind::Meta).note(serde_json::to_string(scenario).expect("scenario serializes")),
    );

    for fault in &scenario.faults {
        if let FaultKind::Crash { at } = fault.kind {
            world.push_event(at, Event::Crash { party: PartyId(fault.party) });
        }
    }

    // Every party enters round 1 at time zero.
    for i in 0..world.parties.len() {
        let effects = world.dispatch(i, |party, ctx| party.start(ctx));
        world.process_effects(PartyId(i as u32), effects)?;
    }

    while let Some(((time, _), event)) = world.queue.pop_first() {
        debug_assert!(time >= world.clock);
        world.clock = time;
        world.handle_event(event)?;
        world.update_retained_metric();
    }

    let report = report::build(&world.scenario, &world.committee, &world.parties, &world.trace, world.max_retained_rounds);
    Ok(SimOutcome {
        scenario: world.scenario,
        committee: world.committee,
        parties: world.parties,
        trace: world.trace,
        report,
        max_retained_rounds: world.max_retained_rounds,
    })
}

impl World {
    fn push_event(&mut self, time: SimTime, event: Event) {
        self.seq += 1;
        self.queue.insert((time, self.seq), event);
    }

    /// Borrow one party plus a fresh context, run a handler, hand back
    /// its effects.
    fn dispatch<F>(&mut self, index: usize, f: F) -> Vec<Effect>
    where
        F: FnOnce(&mut Party, &mut Ctx<'_>),
    {
        let mut effects = Vec::new();
        let mut ctx = Ctx {
            now: self.clock,
            horizon: self.scenario.max_rounds,
            tx_rate: self.scenario.tx_rate,
            timeout_ticks: self.scenario.timeout_ticks,
            coin: &self.coin,
            trace: &mut self.trace,
            effects: &mut effects,
        };
        f(&mut self.parties[index], &mut ctx);
        effects
    }

    fn handle_event(&mut self, event: Event) -> Result<(), SimError> {
        match event {
            Event::Crash { party } => {
                self.parties[party.index()].crashed = true;
                self.trace.push(Record::new(self.clock, Kind::Crashed).party(party));
            }
            Event::Timer { party, generation } => {
                if self.parties[party.index()].crashed {
                    return Ok(());
                }
                let effects = self.dispatch(party.index(), |p, ctx| p.on_timeout(generation, ctx));
                self.process_effects(party, effects)?;
            }
            Event::Delivery { recipient, sender, round, vertex } => {
                if self.parties[recipient.index()].crashed {
                    self.trace.push(
                        Record::new(self.clock, Kind::DeliverDropped)
                            .sender(sender)
                            .recipient(recipient)
                            .round(round)
                            .note("recipient crashed"),
                    );
                    return Ok(());
                }
                if !self.transport.mark_delivered(recipient, sender, round) {
                    self.trace.push(
                        Record::new(self.clock, Kind::DeliverDropped)
                            .sender(sender)
                            .recipient(recipient)
                            .round(round)
                            .note("duplicate"),
                    );
                    return Ok(());
                }
                self.trace.push(
                    Record::new(self.clock, Kind::Deliver)
                        .sender(sender)
                        .recipient(recipient)
                        .round(round)
                        .digest(vertex.digest()),
                );
                let effects =
                    self.dispatch(recipient.index(), |p, ctx| p.on_r_deliver(vertex, round, sender, ctx));
                self.process_effects(recipient, effects)?;
            }
        }
        Ok(())
    }

    fn process_effects(&mut self, party: PartyId, effects: Vec<Effect>) -> Result<(), SimError> {
        for effect in effects {
            match effect {
                Effect::ArmTimer { generation, fire_in } => {
                    self.push_event(self.clock + fire_in, Event::Timer { party, generation });
                }
                Effect::Broadcast(vertex) => self.handle_broadcast(party, vertex)?,
            }
        }
        Ok(())
    }

    fn handle_broadcast(&mut self, sender: PartyId, vertex: Arc<Vertex>) -> Result<(), SimError> {
        let fault = self.fault_of(sender);
        let honest = !matches!(fault, Some(FaultKind::Equivocate));
        match self.transport.register(sender, &vertex, self.clock, false, honest)? {
            RegisterOutcome::NewInstance => {}
            RegisterOutcome::EquivocationConflict => unreachable!("first registration never conflicts"),
        }
        self.trace.push(
            Record::new(self.clock, Kind::Broadcast)
                .sender(sender)
                .round(vertex.round)
                .digest(vertex.digest()),
        );

        // An equivocator also submits divergent content for the same
        // round; integrity keeps the first and flags the attempt.
        if matches!(fault, Some(FaultKind::Equivocate)) {
            let twin = Vertex::new(
                vertex.round,
                sender,
                Block { origin: sender, seq: u64::MAX - vertex.round, payload: vec![0xEE] },
                vertex.strong_edges.clone(),
                vertex.weak_edges.clone(),
                vertex.ts,
            );
            match self.transport.register(sender, &twin, self.clock, true, honest)? {
                RegisterOutcome::EquivocationConflict => {
                    self.trace.push(
                        Record::new(self.clock, Kind::EquivocationFlagged)
                            .sender(sender)
                            .round(vertex.round)
                            .digest(twin.digest())
                            .note("conflicting content dropped"),
                    );
                }
                RegisterOutcome::NewInstance => unreachable!("twin always conflicts"),
            }
        }

        // The reveal gate for wave w opens once f + 1 honest parties have
        // produced a vertex in the wave's fourth round.
        if vertex.round >= 4 && vertex.round % 4 == 0 && honest {
            self.coin_gate.entry(vertex.round / 4).or_default().insert(sender);
        }

        // A coin-peeking adversary must be rejected before it can bias
        // delays with the unrevealed leader.
        if matches!(self.scenario.policy, SchedulerPolicy::CoinPeeking { .. }) && vertex.round % 4 == 1 {
            let wave = crate::committee::wave_of_round(vertex.round);
            self.scheduler_coin_peek(wave)?;
        }

        let extra = match fault {
            Some(FaultKind::Delayed { extra }) => extra,
            _ => 0,
        };
        let issued_at = self.clock;
        for recipient in self.committee.parties() {
            let at = self.transport.delivery_time(
                &self.committee,
                sender,
                recipient,
                vertex.round,
                issued_at,
                extra,
            );
            self.push_event(
                at,
                Event::Delivery { recipient, sender, round: vertex.round, vertex: vertex.clone() },
            );
        }
        Ok(())
    }

    /// Adversary-side coin access, gated on unpredictability.
    fn scheduler_coin_peek(&mut self, wave: Wave) -> Result<PartyId, SimError> {
        let gate_open =
            self.coin_gate.get(&wave).map_or(0, |s| s.len()) >= self.committee.validity_threshold();
        self.trace.push(
            Record::new(self.clock, Kind::CoinQuery)
                .wave(wave)
                .note(if gate_open { "gate open" } else { "gate closed" }),
        );
        if !gate_open {
            return Err(SimError::CoinQueryBeforeGate { wave });
        }
        Ok(self.coin.choose_leader(wave))
    }

    fn fault_of(&self, p: PartyId) -> Option<FaultKind> {
        self.scenario.faults.iter().find(|f| f.party == p.0).map(|f| f.kind)
    }

    fn update_retained_metric(&mut self) {
        if !self.scenario.gc_enabled {
            return;
        }
        for party in &self.parties {
            let gc_round = party.gc_state().map_or(0, |g| g.gc_round);
            let retained = party.dag().highest_round().saturating_sub(gc_round);
            self.max_retained_rounds = self.max_retained_rounds.max(retained);
        }
    }
}
