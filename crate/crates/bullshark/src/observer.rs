//! A consume-only protocol stack: DAG admission plus the ordering logic,
//! without the round machinery. Used to interpret scripted DAGs (figure
//! replays, consensus unit tests) exactly as a party would interpret its
//! local view.

use std::sync::Arc;

use crate::coin::Coin;
use crate::committee::{Committee, PartyId, SimTime};
use crate::consensus::{fallback, psync, CommitCore, LeaderRecord, OrderedEntry};
use crate::dag::LocalDag;
use crate::gc::GcState;
use crate::scenario::Protocol;
use crate::trace::Trace;
use crate::vertex::Vertex;

pub struct Observer {
    pub party: PartyId,
    pub dag: LocalDag,
    pub core: CommitCore,
    pub ledger: fallback::VoteLedger,
    pub gc: Option<GcState>,
    pub coin: Coin,
    pub protocol: Protocol,
    pub trace: Trace,
    clock: SimTime,
}

impl Observer {
    pub fn new(committee: Committee, protocol: Protocol, coin: Coin, gc_delta: Option<u64>) -> Self {
        let ledger = fallback::VoteLedger::new(&committee);
        Self {
            party: PartyId(0),
            dag: LocalDag::new(committee),
            core: CommitCore::new(),
            ledger,
            gc: gc_delta.map(GcState::new),
            coin,
            protocol,
            trace: Trace::new(),
            clock: 0,
        }
    }

    /// Admit a vertex (whose causal history must already be admitted)
    /// and run the ordering step on it.
    pub fn deliver(&mut self, v: Arc<Vertex>) {
        self.clock = self.clock.max(v.ts) + 1;
        let floor = self.gc.as_ref().map_or(0, |g| g.gc_round);
        if let Some(gc) = &self.gc {
            if !gc.admits(v.round) {
                return;
            }
        }
        self.dag.insert(v.clone(), floor).expect("observer input must be causally ordered");
        match self.protocol {
            Protocol::Fallback => {
                let mut cx = fallback::FallbackCtx {
                    dag: &mut self.dag,
                    ledger: &mut self.ledger,
                    core: &mut self.core,
                    gc: self.gc.as_mut(),
                    coin: &self.coin,
                    party: self.party,
                    now: self.clock,
                    trace: &mut self.trace,
                };
                fallback::try_ordering(&mut cx, &v);
            }
            Protocol::Psync => {
                let mut cx = psync::PsyncCtx {
                    dag: &mut self.dag,
                    core: &mut self.core,
                    gc: self.gc.as_mut(),
                    party: self.party,
                    now: self.clock,
                    trace: &mut self.trace,
                };
                psync::try_ordering(&mut cx, &v);
            }
        }
    }

    pub fn deliver_all(&mut self, vertices: impl IntoIterator<Item = Arc<Vertex>>) {
        for v in vertices {
            self.deliver(v);
        }
    }

    pub fn ordered_leaders(&self) -> &[LeaderRecord] {
        self.core.ordered_leaders()
    }

    pub fn ordered_log(&self) -> &[OrderedEntry] {
        self.core.ordered_log()
    }
}
