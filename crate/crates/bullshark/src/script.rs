//! Hand-built DAGs for replays and tests.
//!
//! A `ScriptBuilder` assembles vertices in causal order by naming edge
//! targets as `(round, party)` pairs; references resolve against the
//! vertices already scripted (round 0 resolves to the genesis layer).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::committee::{Committee, PartyId, Round, SimTime};
use crate::dag::LocalDag;
use crate::vertex::{Block, Vertex, VertexRef};

pub struct ScriptBuilder {
    committee: Committee,
    refs: BTreeMap<(Round, PartyId), VertexRef>,
    order: Vec<Arc<Vertex>>,
    seqs: BTreeMap<PartyId, u64>,
}

impl ScriptBuilder {
    pub fn new(committee: Committee) -> Self {
        let dag = LocalDag::new(committee.clone());
        let refs = dag.round_entries(0).map(|e| ((0, e.reference().source), e.reference())).collect();
        Self { committee, refs, order: Vec::new(), seqs: BTreeMap::new() }
    }

    pub fn committee(&self) -> &Committee {
        &self.committee
    }

    fn resolve(&self, key: (Round, u32)) -> VertexRef {
        *self
            .refs
            .get(&(key.0, PartyId(key.1)))
            .unwrap_or_else(|| panic!("script references unknown vertex (round {}, party {})", key.0, key.1))
    }

    /// Script a vertex. `ts` defaults to the round number.
    pub fn add(&mut self, round: Round, party: u32, strong: &[(Round, u32)], weak: &[(Round, u32)]) -> VertexRef {
        self.add_at(round, party, strong, weak, round as SimTime)
    }

    pub fn add_at(
        &mut self,
        round: Round,
        party: u32,
        strong: &[(Round, u32)],
        weak: &[(Round, u32)],
        ts: SimTime,
    ) -> VertexRef {
        let source = PartyId(party);
        let seq = self.seqs.entry(source).or_insert(0);
        *seq += 1;
        let block = Block { origin: source, seq: *seq, payload: Vec::new() };
        let strong_refs: Vec<_> = strong.iter().map(|k| self.resolve(*k)).collect();
        let weak_refs: Vec<_> = weak.iter().map(|k| self.resolve(*k)).collect();
        let v = Vertex::new(round, source, block, strong_refs, weak_refs, ts);
        let r = v.reference();
        assert!(self.refs.insert((round, source), r).is_none(), "duplicate scripted vertex");
        self.order.push(v);
        r
    }

    pub fn get(&self, round: Round, party: u32) -> VertexRef {
        self.resolve((round, party))
    }

    /// Scripted vertices in insertion (causal) order.
    pub fn all_vertices(&self) -> Vec<Arc<Vertex>> {
        self.order.clone()
    }

    /// Materialize a `LocalDag` holding every scripted vertex.
    pub fn into_dag(self) -> LocalDag {
        let mut dag = LocalDag::new(self.committee.clone());
        for v in &self.order {
            dag.insert(v.clone(), 0).expect("scripted vertices are causally ordered");
        }
        dag
    }
}
