//! A party's local, round-indexed view of the delivered DAG.
//!
//! Reachability (`path` / `strong_path`) is answered from per-vertex
//! bitsets computed once at insertion time. Because a vertex is only
//! inserted after its entire causal history, the bitsets are exact and
//! never need invalidation: the delivered prefix of the DAG is
//! immutable (garbage collection drops whole rounds but never rewires
//! edges).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::coin::Coin;
use crate::committee::{first_round_of_wave, third_round_of_wave, Committee, PartyId, Round, Wave};
use crate::vertex::{Vertex, VertexRef};

/// Dense reachability set over `(round, source)` slots.
#[derive(Clone, Default)]
pub struct ReachSet {
    words: Vec<u64>,
}

impl ReachSet {
    fn bit(n: usize, round: Round, source: PartyId) -> usize {
        round as usize * n + source.index()
    }

    fn set(&mut self, idx: usize) {
        let word = idx / 64;
        if word >= self.words.len() {
            self.words.resize(word + 1, 0);
        }
        self.words[word] |= 1 << (idx % 64);
    }

    fn get(&self, idx: usize) -> bool {
        let word = idx / 64;
        word < self.words.len() && self.words[word] & (1 << (idx % 64)) != 0
    }

    fn union(&mut self, other: &ReachSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (w, o) in self.words.iter_mut().zip(other.words.iter()) {
            *w |= o;
        }
    }

    /// Set bits in ascending index order.
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, w)| {
            (0..64).filter_map(move |b| if w & (1 << b) != 0 { Some(wi * 64 + b) } else { None })
        })
    }
}

/// A delivered vertex plus its precomputed reachability.
pub struct VertexEntry {
    pub vertex: Arc<Vertex>,
    reach_all: ReachSet,
    reach_strong: ReachSet,
}

impl VertexEntry {
    pub fn reference(&self) -> VertexRef {
        self.vertex.reference()
    }
}

#[derive(Default)]
struct RoundSlot {
    vertices: BTreeMap<PartyId, VertexEntry>,
    cleared: bool,
}

#[derive(Debug, PartialEq, Eq)]
pub enum InsertError {
    /// Some edge target (in a non-cleared round) has not been delivered.
    MissingParents,
    /// A vertex from this source already occupies this round.
    DuplicateSource,
}

pub struct LocalDag {
    committee: Committee,
    rounds: Vec<RoundSlot>,
    highest_round: Round,
}

impl LocalDag {
    /// A fresh DAG holding the hardcoded genesis layer: `2f + 1`
    /// vertices from the lowest-indexed parties, with ts 0.
    pub fn new(committee: Committee) -> Self {
        let mut dag = Self { committee, rounds: Vec::new(), highest_round: 0 };
        for p in dag.committee.genesis_parties().collect::<Vec<_>>() {
            let g = Vertex::genesis(p);
            dag.slot_mut(0).vertices.insert(
                p,
                VertexEntry { vertex: g, reach_all: ReachSet::default(), reach_strong: ReachSet::default() },
            );
        }
        dag
    }

    pub fn committee(&self) -> &Committee {
        &self.committee
    }

    fn n(&self) -> usize {
        self.committee.size() as usize
    }

    fn slot(&self, r: Round) -> Option<&RoundSlot> {
        self.rounds.get(r as usize)
    }

    fn slot_mut(&mut self, r: Round) -> &mut RoundSlot {
        let idx = r as usize;
        if idx >= self.rounds.len() {
            self.rounds.resize_with(idx + 1, RoundSlot::default);
        }
        &mut self.rounds[idx]
    }

    pub fn highest_round(&self) -> Round {
        self.highest_round
    }

    pub fn is_cleared(&self, r: Round) -> bool {
        self.slot(r).map_or(false, |s| s.cleared)
    }

    /// Number of delivered vertices in round `r`.
    pub fn round_len(&self, r: Round) -> usize {
        self.slot(r).map_or(0, |s| s.vertices.len())
    }

    /// Vertices of round `r` in ascending source order.
    pub fn round_entries(&self, r: Round) -> impl Iterator<Item = &VertexEntry> {
        self.slot(r).into_iter().flat_map(|s| s.vertices.values())
    }

    pub fn contains(&self, r: Round, p: PartyId) -> bool {
        self.slot(r).map_or(false, |s| s.vertices.contains_key(&p))
    }

    pub fn entry(&self, r: Round, p: PartyId) -> Option<&VertexEntry> {
        self.slot(r).and_then(|s| s.vertices.get(&p))
    }

    /// The unique vertex from `p` in round `r`, if delivered.
    pub fn get_vertex(&self, p: PartyId, r: Round) -> Option<VertexRef> {
        self.entry(r, p).map(|e| e.reference())
    }

    /// True when every edge target of `v` living in a round above
    /// `cleared_floor` is already delivered. Targets at or below the
    /// floor were garbage collected and count as satisfied.
    pub fn closure_satisfied(&self, v: &Vertex, cleared_floor: Round) -> bool {
        v.all_edges().all(|e| e.round <= cleared_floor || self.contains(e.round, e.source))
    }

    /// Insert a delivered vertex whose causal history is satisfied.
    pub fn insert(&mut self, v: Arc<Vertex>, cleared_floor: Round) -> Result<(), InsertError> {
        if self.contains(v.round, v.source) {
            return Err(InsertError::DuplicateSource);
        }
        if !self.closure_satisfied(&v, cleared_floor) {
            return Err(InsertError::MissingParents);
        }
        let n = self.n();
        let mut reach_all = ReachSet::default();
        let mut reach_strong = ReachSet::default();
        for e in &v.strong_edges {
            if let Some(t) = self.entry(e.round, e.source) {
                debug_assert_eq!(t.vertex.digest(), e.digest);
                reach_all.union(&t.reach_all);
                reach_all.set(ReachSet::bit(n, e.round, e.source));
                reach_strong.union(&t.reach_strong);
                reach_strong.set(ReachSet::bit(n, e.round, e.source));
            }
        }
        for e in &v.weak_edges {
            if let Some(t) = self.entry(e.round, e.source) {
                debug_assert_eq!(t.vertex.digest(), e.digest);
                reach_all.union(&t.reach_all);
                reach_all.set(ReachSet::bit(n, e.round, e.source));
            }
        }
        self.highest_round = self.highest_round.max(v.round);
        let source = v.source;
        let round = v.round;
        self.slot_mut(round).vertices.insert(source, VertexEntry { vertex: v, reach_all, reach_strong });
        Ok(())
    }

    /// Drop the vertex bodies of round `r`, leaving a tombstone. Edges
    /// into a cleared round are treated as terminated.
    pub fn clear_round(&mut self, r: Round) -> usize {
        let slot = self.slot_mut(r);
        let count = slot.vertices.len();
        slot.vertices.clear();
        slot.cleared = true;
        count
    }

    /// Path over strong and weak edges. `path(v, v)` holds.
    pub fn path(&self, from: &VertexRef, to: &VertexRef) -> bool {
        if from == to {
            return true;
        }
        match self.entry(from.round, from.source) {
            Some(e) => e.reach_all.get(ReachSet::bit(self.n(), to.round, to.source)),
            None => false,
        }
    }

    /// Path restricted to strong edges.
    pub fn strong_path(&self, from: &VertexRef, to: &VertexRef) -> bool {
        if from == to {
            return true;
        }
        match self.entry(from.round, from.source) {
            Some(e) => e.reach_strong.get(ReachSet::bit(self.n(), to.round, to.source)),
            None => false,
        }
    }

    /// Vertices of round `r` reachable from `from` (inclusive of `from`
    /// when it lives in round `r`).
    pub fn reachable_in_round(&self, from: &VertexRef, r: Round, strong_only: bool) -> Vec<VertexRef> {
        self.round_entries(r)
            .map(|e| e.reference())
            .filter(|u| if strong_only { self.strong_path(from, u) } else { self.path(from, u) })
            .collect()
    }

    /// Full causal history of `from` in rounds >= 1, ascending
    /// `(round, source)`, including `from` itself. Cleared vertices are
    /// silently absent.
    pub fn causal_history(&self, from: &VertexRef) -> Vec<VertexRef> {
        let mut out = Vec::new();
        if let Some(e) = self.entry(from.round, from.source) {
            let n = self.n();
            for idx in e.reach_all.iter() {
                let round = (idx / n) as Round;
                if round == 0 {
                    continue;
                }
                let source = PartyId((idx % n) as u32);
                if let Some(t) = self.entry(round, source) {
                    out.push(t.reference());
                }
            }
            out.push(*from);
        }
        out.sort();
        out
    }

    /// Weak-edge targets for a new vertex at `round` whose strong edges
    /// are `strong_parents`: every delivered vertex in rounds
    /// `round - 2 .. 1` not already covered by a path. Once covered
    /// (transitively through previously chosen weak targets), a vertex
    /// stays covered, so the scan descends rounds.
    pub fn weak_targets(&self, strong_parents: &[VertexRef], round: Round) -> Vec<VertexRef> {
        let n = self.n();
        let mut cover = ReachSet::default();
        for p in strong_parents {
            if let Some(t) = self.entry(p.round, p.source) {
                cover.union(&t.reach_all);
                cover.set(ReachSet::bit(n, p.round, p.source));
            }
        }
        let mut weak = Vec::new();
        if round < 3 {
            return weak;
        }
        for r in (1..=round - 2).rev() {
            for e in self.round_entries(r) {
                let u = e.reference();
                if !cover.get(ReachSet::bit(n, u.round, u.source)) {
                    cover.set(ReachSet::bit(n, u.round, u.source));
                    cover.union(&e.reach_all);
                    weak.push(u);
                }
            }
        }
        weak
    }
}

/// Vertex of the first predefined steady-state leader of wave `w`.
pub fn first_steady_vertex_leader(dag: &LocalDag, w: Wave) -> Option<VertexRef> {
    if w == 0 {
        return None;
    }
    dag.get_vertex(dag.committee().first_steady_leader(w), first_round_of_wave(w))
}

/// Vertex of the second predefined steady-state leader of wave `w`.
pub fn second_steady_vertex_leader(dag: &LocalDag, w: Wave) -> Option<VertexRef> {
    if w == 0 {
        return None;
    }
    dag.get_vertex(dag.committee().second_steady_leader(w), third_round_of_wave(w))
}

/// Vertex of the coin-elected fallback leader of wave `w`.
pub fn fallback_vertex_leader(dag: &LocalDag, coin: &Coin, w: Wave) -> Option<VertexRef> {
    if w == 0 {
        return None;
    }
    dag.get_vertex(coin.choose_leader(w), first_round_of_wave(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::ScriptBuilder;
    use crate::vertex::Block;
    use proptest::prelude::*;

    fn committee4() -> Committee {
        Committee::new(4).unwrap()
    }

    #[test]
    fn genesis_layer_shape() {
        let dag = LocalDag::new(committee4());
        assert_eq!(dag.round_len(0), 3);
        for p in [0, 1, 2] {
            let v = dag.entry(0, PartyId(p)).unwrap();
            assert_eq!(v.vertex.ts, 0);
            assert!(v.vertex.block.payload.is_empty());
        }
        assert!(dag.get_vertex(PartyId(3), 0).is_none());
    }

    #[test]
    fn get_vertex_empty_round_is_none() {
        let dag = LocalDag::new(committee4());
        assert!(dag.get_vertex(PartyId(0), 7).is_none());
    }

    #[test]
    fn duplicate_source_rejected() {
        let mut dag = LocalDag::new(committee4());
        let genesis: Vec<_> = dag.round_entries(0).map(|e| e.reference()).collect();
        let v1 = Vertex::new(1, PartyId(0), Block::empty(PartyId(0), 1), genesis.clone(), vec![], 1);
        let v2 = Vertex::new(1, PartyId(0), Block::empty(PartyId(0), 2), genesis, vec![], 1);
        dag.insert(v1, 0).unwrap();
        assert_eq!(dag.insert(v2, 0), Err(InsertError::DuplicateSource));
        assert_eq!(dag.round_len(1), 1);
    }

    #[test]
    fn missing_parents_rejected() {
        let mut dag = LocalDag::new(committee4());
        let ghost = Vertex::genesis(PartyId(3)).reference();
        let v = Vertex::new(1, PartyId(0), Block::empty(PartyId(0), 1), vec![ghost], vec![], 1);
        assert_eq!(dag.insert(v, 0), Err(InsertError::MissingParents));
    }

    #[test]
    fn path_is_reflexive_and_strong_implies_path() {
        let mut script = ScriptBuilder::new(committee4());
        script.add(1, 0, &[(0, 0), (0, 1), (0, 2)], &[]);
        script.add(1, 1, &[(0, 0), (0, 1), (0, 2)], &[]);
        script.add(1, 2, &[(0, 0), (0, 1), (0, 2)], &[]);
        script.add(2, 0, &[(1, 0), (1, 1), (1, 2)], &[]);
        let dag = script.into_dag();
        let v20 = dag.get_vertex(PartyId(0), 2).unwrap();
        let v10 = dag.get_vertex(PartyId(0), 1).unwrap();
        assert!(dag.path(&v20, &v20));
        assert!(dag.strong_path(&v20, &v10));
        assert!(dag.path(&v20, &v10));
    }

    #[test]
    fn weak_edge_reachable_but_not_strong() {
        let mut script = ScriptBuilder::new(committee4());
        for p in 0..4 {
            script.add(1, p, &[(0, 0), (0, 1), (0, 2)], &[]);
        }
        // Round-2 vertices skip party 3's round-1 vertex entirely.
        for p in 0..3 {
            script.add(2, p, &[(1, 0), (1, 1), (1, 2)], &[]);
        }
        // The round-3 vertex picks it up with a weak edge.
        script.add(3, 0, &[(2, 0), (2, 1), (2, 2)], &[(1, 3)]);
        let dag = script.into_dag();
        let v30 = dag.get_vertex(PartyId(0), 3).unwrap();
        let v13 = dag.get_vertex(PartyId(3), 1).unwrap();
        assert!(dag.path(&v30, &v13));
        assert!(!dag.strong_path(&v30, &v13));
    }

    #[test]
    fn weak_targets_cover_everything_below() {
        let mut script = ScriptBuilder::new(committee4());
        for p in 0..4 {
            script.add(1, p, &[(0, 0), (0, 1), (0, 2)], &[]);
        }
        for p in 0..3 {
            script.add(2, p, &[(1, 0), (1, 1), (1, 2)], &[]);
        }
        for p in 0..3 {
            script.add(3, p, &[(2, 0), (2, 1), (2, 2)], &[]);
        }
        let dag = script.into_dag();
        let strong: Vec<_> = dag.round_entries(3).map(|e| e.reference()).collect();
        let weak = dag.weak_targets(&strong, 4);
        // Only party 3's round-1 vertex is uncovered.
        assert_eq!(weak.len(), 1);
        assert_eq!(weak[0].source, PartyId(3));
        assert_eq!(weak[0].round, 1);

        // Fully connected layers leave nothing uncovered.
        let strong2: Vec<_> = dag.round_entries(2).map(|e| e.reference()).collect();
        assert!(dag.weak_targets(&strong2, 3).is_empty());
    }

    #[test]
    fn cleared_round_terminates_edges() {
        let mut script = ScriptBuilder::new(committee4());
        for p in 0..3 {
            script.add(1, p, &[(0, 0), (0, 1), (0, 2)], &[]);
        }
        for p in 0..3 {
            script.add(2, p, &[(1, 0), (1, 1), (1, 2)], &[]);
        }
        let mut dag = script.into_dag();
        assert_eq!(dag.clear_round(1), 3);
        assert!(dag.is_cleared(1));
        assert_eq!(dag.round_len(1), 0);
        // A new vertex referencing the cleared round is insertable.
        let parents: Vec<_> = dag.round_entries(2).map(|e| e.reference()).collect();
        let ghost = VertexRef { round: 1, source: PartyId(0), digest: crate::vertex::Digest([9; 32]) };
        let v = Vertex::new(3, PartyId(0), Block::empty(PartyId(0), 9), parents, vec![ghost], 3);
        assert!(dag.insert(v, 1).is_ok());
    }

    /// Random small DAGs: `path`/`strong_path` must agree with
    /// brute-force transitive closure over the edge lists.
    #[derive(Clone, Debug)]
    struct RandomDagPlan {
        // For each (round 1..=6, party 0..4): subset choice of parents.
        strong_choices: Vec<Vec<u8>>,
        weak_skip: Vec<bool>,
    }

    fn random_dag_strategy() -> impl Strategy<Value = RandomDagPlan> {
        (
            proptest::collection::vec(proptest::collection::vec(0u8..=255, 4), 6),
            proptest::collection::vec(any::<bool>(), 24),
        )
            .prop_map(|(strong_choices, weak_skip)| RandomDagPlan { strong_choices, weak_skip })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn path_matches_bruteforce_reachability(plan in random_dag_strategy()) {
            let committee = committee4();
            let mut script = ScriptBuilder::new(committee);
            // Round 1 references genesis.
            for p in 0..4u32 {
                script.add(1, p, &[(0, 0), (0, 1), (0, 2)], &[]);
            }
            // Rounds 2..=6: pick 3 of 4 previous-round vertices, plus a
            // possible weak edge two rounds down.
            for r in 2..=6u64 {
                for p in 0..4u32 {
                    let choice = plan.strong_choices[r as usize - 1][p as usize] % 4;
                    let strong: Vec<(Round, u32)> =
                        (0..4).filter(|q| *q != choice as u32).map(|q| (r - 1, q)).collect();
                    let idx = ((r - 2) * 4 + p as u64) as usize;
                    let weak: Vec<(Round, u32)> = if r >= 3 && !plan.weak_skip[idx] {
                        vec![(r - 2, choice as u32)]
                    } else {
                        vec![]
                    };
                    script.add(r, p, &strong, &weak);
                }
            }

            // Brute-force closure via adjacency matrices.
            let vertices = script.all_vertices();
            let index: std::collections::HashMap<VertexRef, usize> =
                vertices.iter().enumerate().map(|(i, v)| (v.reference(), i)).collect();
            let m = vertices.len();
            let mut adj_all = vec![vec![false; m]; m];
            let mut adj_strong = vec![vec![false; m]; m];
            for (i, v) in vertices.iter().enumerate() {
                for e in &v.strong_edges {
                    let j = index[e];
                    adj_all[i][j] = true;
                    adj_strong[i][j] = true;
                }
                for e in &v.weak_edges {
                    adj_all[i][index[e]] = true;
                }
            }
            let closure = |mut adj: Vec<Vec<bool>>| {
                for k in 0..m {
                    for i in 0..m {
                        if adj[i][k] {
                            for j in 0..m {
                                if adj[k][j] {
                                    adj[i][j] = true;
                                }
                            }
                        }
                    }
                }
                adj
            };
            let all = closure(adj_all);
            let strong = closure(adj_strong);

            let dag = script.into_dag();
            for (i, v) in vertices.iter().enumerate() {
                for (j, u) in vertices.iter().enumerate() {
                    let expect_all = i == j || all[i][j];
                    let expect_strong = i == j || strong[i][j];
                    prop_assert_eq!(dag.path(&v.reference(), &u.reference()), expect_all);
                    prop_assert_eq!(dag.strong_path(&v.reference(), &u.reference()), expect_strong);
                }
            }

            // Causal closure: every vertex's history is fully present.
            for v in &vertices {
                for u in dag.causal_history(&v.reference()) {
                    prop_assert!(dag.contains(u.round, u.source));
                }
            }
        }
    }
}
