//! Executable property checkers. Each returns a named pass/fail verdict
//! carrying enough detail to locate the first violation.

use std::collections::{BTreeMap, BTreeSet};

use crate::committee::{Committee, PartyId, Round, SimTime, Wave};
use crate::consensus::LeaderKind;
use crate::party::Party;
use crate::report::CheckResult;
use crate::scenario::{FaultKind, NetworkMode, Protocol, Scenario};
use crate::trace::{Kind, Record, Trace};

/// Parties that finished the run neither crashed nor Byzantine.
pub fn live_honest(scenario: &Scenario, parties: &[Party]) -> Vec<PartyId> {
    parties
        .iter()
        .filter(|p| {
            !p.crashed
                && !scenario
                    .faults
                    .iter()
                    .any(|f| f.party == p.id.0 && matches!(f.kind, FaultKind::Equivocate))
        })
        .map(|p| p.id)
        .collect()
}

pub fn run_all(
    scenario: &Scenario,
    committee: &Committee,
    parties: &[Party],
    trace: &Trace,
) -> Vec<CheckResult> {
    let live = live_honest(scenario, parties);
    let mut out = vec![
        check_total_order(parties, &live),
        check_leader_agreement(parties, &live),
        check_rb_agreement(parties, &live),
        check_rb_integrity(trace),
        check_rb_validity(scenario, trace, &live),
        check_broadcast_once(trace),
        check_buffers_drained(parties, &live),
        check_bab_validity(parties, &live),
        check_round_monotonicity(trace, parties),
    ];
    match scenario.protocol {
        Protocol::Fallback => {
            out.push(check_wave_exclusivity(trace));
            out.push(check_vote_type_agreement(parties, &live));
            out.push(check_common_core(scenario, committee, parties, &live));
        }
        Protocol::Psync => {
            out.push(check_psync_quorum_safety(parties, &live));
        }
    }
    if matches!(scenario.mode, NetworkMode::EventuallySynchronous) {
        out.push(check_post_gst_bound(scenario, trace));
    }
    if scenario.gc_enabled {
        out.push(check_gc_agreement(parties, &live));
        if matches!(scenario.mode, NetworkMode::EventuallySynchronous) {
            out.push(check_validity_after_gst(scenario, trace, &live));
        }
    }
    out
}

/// Pairwise prefix consistency of the ordered output logs; equality for
/// parties that stayed live. Append-only logs plus final equality give
/// prefix consistency at every intermediate time.
pub fn check_total_order(parties: &[Party], live: &[PartyId]) -> CheckResult {
    let name = "total_order";
    for pair in live.windows(2) {
        let a = parties[pair[0].index()].core().ordered_log();
        let b = parties[pair[1].index()].core().ordered_log();
        if let Some(idx) = first_divergence(
            a.iter().map(|e| (e.round, e.source, e.digest)),
            b.iter().map(|e| (e.round, e.source, e.digest)),
        ) {
            return CheckResult::fail(
                name,
                format!("logs of {} and {} diverge at index {idx}", pair[0], pair[1]),
            );
        }
        if a.len() != b.len() {
            return CheckResult::fail(
                name,
                format!("live logs of {} and {} have different lengths {} vs {}", pair[0], pair[1], a.len(), b.len()),
            );
        }
    }
    // Crashed parties must hold a prefix of the live log.
    if let Some(reference) = live.first() {
        let full = parties[reference.index()].core().ordered_log();
        for p in parties {
            if live.contains(&p.id) {
                continue;
            }
            let log = p.core().ordered_log();
            if log.len() > full.len() {
                return CheckResult::fail(name, format!("{} output more than live parties", p.id));
            }
            if let Some(idx) = first_divergence(
                log.iter().map(|e| (e.round, e.source, e.digest)),
                full.iter().map(|e| (e.round, e.source, e.digest)),
            ) {
                return CheckResult::fail(name, format!("{} diverges from live prefix at {idx}", p.id));
            }
        }
    }
    // No party ever outputs the same vertex twice.
    for p in parties {
        let mut seen = BTreeSet::new();
        for e in p.core().ordered_log() {
            if !seen.insert((e.round, e.source)) {
                return CheckResult::fail(name, format!("{} delivered (r{}, {}) twice", p.id, e.round, e.source));
            }
        }
    }
    CheckResult::pass(name, format!("{} live logs equal", live.len()))
}

fn first_divergence<T: PartialEq>(
    a: impl Iterator<Item = T>,
    b: impl Iterator<Item = T>,
) -> Option<usize> {
    for (idx, (x, y)) in a.zip(b).enumerate() {
        if x != y {
            return Some(idx);
        }
    }
    None
}

/// All live honest parties commit the same leaders in the same order;
/// crashed parties hold a prefix.
pub fn check_leader_agreement(parties: &[Party], live: &[PartyId]) -> CheckResult {
    let name = "leader_sequence_agreement";
    let seq = |p: PartyId| {
        parties[p.index()].core().ordered_leaders().iter().map(|l| l.vertex).collect::<Vec<_>>()
    };
    if let Some(reference) = live.first() {
        let full = seq(*reference);
        for p in live.iter().skip(1) {
            if seq(*p) != full {
                return CheckResult::fail(name, format!("{} disagrees with {}", p, reference));
            }
        }
        for p in parties {
            if live.contains(&p.id) {
                continue;
            }
            let s = seq(p.id);
            if s.len() > full.len() || s[..] != full[..s.len()] {
                return CheckResult::fail(name, format!("crashed {} is not a prefix", p.id));
            }
        }
        return CheckResult::pass(name, format!("{} leaders agreed", full.len()));
    }
    CheckResult::pass(name, "no live parties")
}

/// No wave may see both a steady-state leader and a distinct fallback
/// leader committed (directly or indirectly) by anyone. The same vertex
/// may legitimately carry both hats when the coin elects the first
/// steady leader.
pub fn check_wave_exclusivity(trace: &Trace) -> CheckResult {
    let name = "wave_exclusivity";
    let mut per_wave: BTreeMap<Wave, (BTreeSet<String>, BTreeSet<String>)> = BTreeMap::new();
    for r in trace.records() {
        if !matches!(r.kind, Kind::DirectCommit | Kind::IndirectCommit) {
            continue;
        }
        let (wave, digest) = match (r.wave, r.digest.clone()) {
            (Some(w), Some(d)) => (w, d),
            _ => continue,
        };
        let entry = per_wave.entry(wave).or_default();
        match r.note.as_deref() {
            Some("fallback") => {
                entry.1.insert(digest);
            }
            _ => {
                entry.0.insert(digest);
            }
        }
    }
    for (wave, (steady, fallback)) in &per_wave {
        for f in fallback {
            if !steady.is_empty() && !steady.contains(f) {
                return CheckResult::fail(
                    name,
                    format!("wave {wave} committed steady {:?} and fallback {}", steady.iter().next(), f),
                );
            }
        }
    }
    CheckResult::pass(name, format!("{} waves with commits", per_wave.len()))
}

/// At quiescence every live honest party holds the same DAG: same
/// `(round, source)` population with the same digests.
pub fn check_rb_agreement(parties: &[Party], live: &[PartyId]) -> CheckResult {
    let name = "rb_agreement";
    let snapshot = |p: PartyId| {
        let dag = parties[p.index()].dag();
        let mut map = BTreeMap::new();
        for r in 0..=dag.highest_round() {
            for e in dag.round_entries(r) {
                map.insert((r, e.vertex.source), e.vertex.digest());
            }
        }
        map
    };
    if let Some(first) = live.first() {
        let reference = snapshot(*first);
        for p in live.iter().skip(1) {
            let other = snapshot(*p);
            if other != reference {
                let diff = reference
                    .keys()
                    .chain(other.keys())
                    .find(|k| reference.get(*k) != other.get(*k))
                    .cloned();
                return CheckResult::fail(name, format!("{} and {} disagree at {:?}", first, p, diff));
            }
        }
        return CheckResult::pass(name, format!("{} vertices agreed", reference.len()));
    }
    CheckResult::pass(name, "no live parties")
}

/// Each `(recipient, sender, round)` fired at most once.
pub fn check_rb_integrity(trace: &Trace) -> CheckResult {
    let name = "rb_integrity";
    let mut seen = BTreeSet::new();
    for r in trace.records() {
        if r.kind != Kind::Deliver {
            continue;
        }
        let key = (r.recipient, r.sender, r.round);
        if !seen.insert(key) {
            return CheckResult::fail(name, format!("duplicate delivery {key:?}"));
        }
    }
    CheckResult::pass(name, format!("{} deliveries", seen.len()))
}

/// Every broadcast from a non-equivocating sender reaches every live
/// honest recipient before quiescence.
pub fn check_rb_validity(scenario: &Scenario, trace: &Trace, live: &[PartyId]) -> CheckResult {
    let name = "rb_validity";
    let equivocators: BTreeSet<u32> = scenario
        .faults
        .iter()
        .filter(|f| matches!(f.kind, FaultKind::Equivocate))
        .map(|f| f.party)
        .collect();
    let mut delivered = BTreeSet::new();
    for r in trace.records() {
        if r.kind == Kind::Deliver {
            delivered.insert((r.sender, r.recipient, r.round));
        }
    }
    for r in trace.records() {
        if r.kind != Kind::Broadcast {
            continue;
        }
        let sender = r.sender.expect("broadcast has sender");
        if equivocators.contains(&sender) {
            continue;
        }
        for recipient in live {
            if !delivered.contains(&(r.sender, Some(recipient.0), r.round)) {
                return CheckResult::fail(
                    name,
                    format!("broadcast (p{sender}, r{:?}) never delivered to {recipient}", r.round),
                );
            }
        }
    }
    CheckResult::pass(name, "all honest broadcasts delivered")
}

/// In eventually synchronous mode no delivery fires later than
/// `max(issue time, gst) + delta`.
pub fn check_post_gst_bound(scenario: &Scenario, trace: &Trace) -> CheckResult {
    let name = "post_gst_bound";
    let mut issued: BTreeMap<(Option<u32>, Option<Round>), SimTime> = BTreeMap::new();
    for r in trace.records() {
        if r.kind == Kind::Broadcast {
            issued.insert((r.sender, r.round), r.time);
        }
    }
    for r in trace.records() {
        if r.kind != Kind::Deliver {
            continue;
        }
        let t0 = match issued.get(&(r.sender, r.round)) {
            Some(t) => *t,
            None => continue,
        };
        let bound = t0.max(scenario.gst) + scenario.delta;
        if r.time > bound {
            return CheckResult::fail(
                name,
                format!("delivery of (p{:?}, r{:?}) at {} exceeds bound {}", r.sender, r.round, r.time, bound),
            );
        }
    }
    CheckResult::pass(name, "all deliveries within the synchrony bound")
}

/// At most one broadcast per `(sender, round)` across any schedule.
pub fn check_broadcast_once(trace: &Trace) -> CheckResult {
    let name = "broadcast_once_per_round";
    let mut seen = BTreeSet::new();
    for r in trace.records() {
        if r.kind != Kind::Broadcast {
            continue;
        }
        if !seen.insert((r.sender, r.round)) {
            return CheckResult::fail(name, format!("({:?}, {:?}) broadcast twice", r.sender, r.round));
        }
    }
    CheckResult::pass(name, format!("{} broadcasts", seen.len()))
}

/// After the final flush no honest live party still buffers vertices:
/// every delivered causal history completed.
pub fn check_buffers_drained(parties: &[Party], live: &[PartyId]) -> CheckResult {
    let name = "buffers_drained";
    for p in live {
        let len = parties[p.index()].buffer_len();
        if len != 0 {
            return CheckResult::fail(name, format!("{} still buffers {} vertices", p, len));
        }
    }
    CheckResult::pass(name, "all buffers empty")
}

/// Everything reachable from an ordered leader is in the ordered log:
/// the finite-run reading of validity.
pub fn check_bab_validity(parties: &[Party], live: &[PartyId]) -> CheckResult {
    let name = "bab_validity";
    for p in live {
        let party = &parties[p.index()];
        for leader in party.core().ordered_leaders() {
            for u in party.dag().causal_history(&leader.vertex) {
                if !party.core().is_delivered(&u) {
                    return CheckResult::fail(
                        name,
                        format!("{} ordered leader r{} but missed {:?}", p, leader.vertex.round, u),
                    );
                }
            }
        }
    }
    CheckResult::pass(name, "ordered histories fully delivered")
}

/// Rounds are entered in strictly increasing order at each party.
pub fn check_round_monotonicity(trace: &Trace, parties: &[Party]) -> CheckResult {
    let name = "round_monotonicity";
    let mut last: BTreeMap<u32, Round> = BTreeMap::new();
    for r in trace.records() {
        if r.kind != Kind::RoundEntered {
            continue;
        }
        let (party, round) = match (r.party, r.round) {
            (Some(p), Some(round)) => (p, round),
            _ => continue,
        };
        if let Some(prev) = last.get(&party) {
            if round <= *prev {
                return CheckResult::fail(name, format!("p{party} entered r{round} after r{prev}"));
            }
        }
        last.insert(party, round);
    }
    let _ = parties;
    CheckResult::pass(name, "round entries strictly increase")
}

/// Any two honest parties that classified the same `(party, wave)`
/// assign the same vote type.
pub fn check_vote_type_agreement(parties: &[Party], live: &[PartyId]) -> CheckResult {
    let name = "vote_type_agreement";
    let mut assignments: BTreeMap<(Wave, PartyId), BTreeSet<&'static str>> = BTreeMap::new();
    for p in live {
        let ledger = match parties[p.index()].vote_ledger() {
            Some(l) => l,
            None => continue,
        };
        for w in ledger.classified_waves() {
            for subject in ledger.all_parties().iter() {
                if let Some(t) = ledger.vote_type(*subject, w) {
                    let label = match t {
                        crate::consensus::fallback::VoteType::Steady => "steady",
                        crate::consensus::fallback::VoteType::Fallback => "fallback",
                    };
                    assignments.entry((w, *subject)).or_default().insert(label);
                }
            }
        }
    }
    for ((w, subject), types) in &assignments {
        if types.len() > 1 {
            return CheckResult::fail(name, format!("wave {w}: {subject} classified as {types:?}"));
        }
    }
    CheckResult::pass(name, format!("{} classifications agreed", assignments.len()))
}

/// In every wave whose four rounds all reached a quorum of vertices, at
/// least `2f + 1` first-round vertices each gather `2f + 1` fourth-round
/// vertices with strong paths to them.
pub fn check_common_core(
    scenario: &Scenario,
    committee: &Committee,
    parties: &[Party],
    live: &[PartyId],
) -> CheckResult {
    let name = "common_core";
    let reference = match live.first() {
        Some(p) => &parties[p.index()],
        None => return CheckResult::pass(name, "no live parties"),
    };
    let dag = reference.dag();
    let quorum = committee.quorum_threshold();
    let mut waves_checked = 0u64;
    let last_wave = scenario.max_rounds / 4;
    for w in 1..=last_wave {
        let first = 4 * w - 3;
        if (0..4).any(|k| dag.round_len(first + k) < quorum) {
            continue;
        }
        waves_checked += 1;
        let mut well_supported = 0usize;
        for u in dag.round_entries(first).map(|e| e.reference()).collect::<Vec<_>>() {
            let votes = dag
                .round_entries(first + 3)
                .filter(|v| dag.strong_path(&v.reference(), &u))
                .count();
            if votes >= quorum {
                well_supported += 1;
            }
        }
        if well_supported < quorum {
            return CheckResult::fail(
                name,
                format!("wave {w}: only {well_supported} first-round vertices have a quorum of supporters"),
            );
        }
    }
    CheckResult::pass(name, format!("{waves_checked} full waves satisfied the core property"))
}

/// Whenever any honest party directly commits a leader, every
/// higher-round leader any honest party orders has a strong path to it.
pub fn check_psync_quorum_safety(parties: &[Party], live: &[PartyId]) -> CheckResult {
    let name = "psync_quorum_safety";
    let mut direct = BTreeSet::new();
    for p in live {
        for d in parties[p.index()].core().direct_commits() {
            direct.insert(d);
        }
    }
    for p in live {
        let party = &parties[p.index()];
        for leader in party.core().ordered_leaders() {
            for d in &direct {
                if leader.vertex.round > d.round
                    && party.dag().entry(d.round, d.source).is_some()
                    && party.dag().entry(leader.vertex.round, leader.vertex.source).is_some()
                    && !party.dag().strong_path(&leader.vertex, d)
                {
                    return CheckResult::fail(
                        name,
                        format!("{}: leader r{} lacks a strong path to committed r{}", p, leader.vertex.round, d.round),
                    );
                }
            }
        }
    }
    CheckResult::pass(name, format!("{} direct commits covered", direct.len()))
}

/// The `(ordered leader, collected round)` transition sequence is
/// identical at all live honest parties.
pub fn check_gc_agreement(parties: &[Party], live: &[PartyId]) -> CheckResult {
    let name = "gc_agreement";
    let seq = |p: PartyId| {
        parties[p.index()]
            .gc_state()
            .map(|g| g.transitions.clone())
            .unwrap_or_default()
    };
    if let Some(first) = live.first() {
        let reference = seq(*first);
        for p in live.iter().skip(1) {
            if seq(*p) != reference {
                return CheckResult::fail(name, format!("{} and {} collected differently", first, p));
            }
        }
        return CheckResult::pass(name, format!("{} transitions agreed", reference.len()));
    }
    CheckResult::pass(name, "no live parties")
}

/// Timely fairness with garbage collection: an honest vertex broadcast
/// after GST (in a round that started after GST) is ordered by every
/// live honest party before that party clears the vertex's round; and
/// once every party has ordered a leader created after the vertex had
/// fully propagated, the vertex must appear in every log.
pub fn check_validity_after_gst(scenario: &Scenario, trace: &Trace, live: &[PartyId]) -> CheckResult {
    let name = "validity_after_gst";
    let gst = scenario.gst;
    let records = trace.records();

    let mut broadcast_time: BTreeMap<(u32, Round), SimTime> = BTreeMap::new();
    let mut round_first_broadcast: BTreeMap<Round, SimTime> = BTreeMap::new();
    let mut adeliver_pos: BTreeMap<(u32, u32, Round), usize> = BTreeMap::new();
    let mut gc_clear_pos: BTreeMap<(u32, Round), usize> = BTreeMap::new();
    let mut ordered_leader_times: BTreeMap<u32, Vec<SimTime>> = BTreeMap::new();

    for (pos, r) in records.iter().enumerate() {
        match r.kind {
            Kind::Broadcast => {
                let (s, round) = (r.sender.unwrap(), r.round.unwrap());
                broadcast_time.insert((s, round), r.time);
                round_first_broadcast.entry(round).or_insert(r.time);
            }
            Kind::ADeliver => {
                let key = (r.party.unwrap(), r.sender.unwrap(), r.round.unwrap());
                adeliver_pos.entry(key).or_insert(pos);
            }
            Kind::GcAdvance => {
                gc_clear_pos.entry((r.party.unwrap(), r.round.unwrap())).or_insert(pos);
            }
            Kind::OrderedLeader => {
                // The leader vertex's broadcast time stands for its
                // creator's clock at creation.
                let key = (r.sender.unwrap(), r.round.unwrap());
                if let Some(t) = broadcast_time.get(&key) {
                    ordered_leader_times.entry(r.party.unwrap()).or_default().push(*t);
                }
            }
            _ => {}
        }
    }

    let live_set: BTreeSet<u32> = live.iter().map(|p| p.0).collect();
    let mut fairness_checked = 0u64;
    for ((sender, round), t_v) in &broadcast_time {
        if !live_set.contains(sender) || *t_v < gst {
            continue;
        }
        if round_first_broadcast.get(round).copied().unwrap_or(0) < gst {
            // The round straddles GST; the synchrony argument does not
            // anchor its median timestamp.
            continue;
        }
        fairness_checked += 1;
        for p in &live_set {
            if let Some(clear_pos) = gc_clear_pos.get(&(*p, *round)) {
                match adeliver_pos.get(&(*p, *sender, *round)) {
                    Some(dpos) if dpos < clear_pos => {}
                    _ => {
                        return CheckResult::fail(
                            name,
                            format!("p{p} cleared r{round} without ordering p{sender}'s vertex"),
                        );
                    }
                }
            }
        }
        // Once every live party ordered a leader broadcast after the
        // vertex finished propagating, everyone must have ordered it.
        let covered = live_set.iter().all(|p| {
            ordered_leader_times
                .get(p)
                .map_or(false, |times| times.iter().any(|t| *t > t_v + scenario.delta))
        });
        if covered {
            for p in &live_set {
                if !adeliver_pos.contains_key(&(*p, *sender, *round)) {
                    return CheckResult::fail(
                        name,
                        format!("p{p} never ordered post-GST vertex (p{sender}, r{round})"),
                    );
                }
            }
        }
    }
    CheckResult::pass(name, format!("{fairness_checked} post-GST vertices covered"))
}

/// Standalone subset of the checkers that can run on a serialized trace
/// (used by the `check` CLI subcommand). The trace must begin with the
/// meta record embedding its scenario.
pub fn check_trace_file(trace: &Trace) -> Result<Vec<CheckResult>, String> {
    let meta = trace
        .records()
        .first()
        .filter(|r| r.kind == Kind::Meta)
        .and_then(|r| r.note.as_ref())
        .ok_or_else(|| "trace does not start with a meta record".to_string())?;
    let scenario: Scenario =
        serde_json::from_str(meta).map_err(|e| format!("bad scenario in meta record: {e}"))?;
    let mut results = vec![
        check_rb_integrity(trace),
        check_broadcast_once(trace),
        check_trace_total_order(trace),
    ];
    if scenario.protocol == Protocol::Fallback {
        results.push(check_wave_exclusivity(trace));
    }
    if matches!(scenario.mode, NetworkMode::EventuallySynchronous) {
        results.push(check_post_gst_bound(&scenario, trace));
    }
    Ok(results)
}

/// Total order reconstructed purely from `a_deliver` trace records.
pub fn check_trace_total_order(trace: &Trace) -> CheckResult {
    let name = "total_order";
    let mut logs: BTreeMap<u32, Vec<(Option<u32>, Option<Round>, Option<String>)>> = BTreeMap::new();
    for r in trace.records() {
        if r.kind == Kind::ADeliver {
            logs.entry(r.party.unwrap()).or_default().push((r.sender, r.round, r.digest.clone()));
        }
    }
    let mut reference: Option<(&u32, &Vec<_>)> = None;
    for (p, log) in &logs {
        if let Some((rp, rlog)) = reference {
            let shorter = log.len().min(rlog.len());
            if log[..shorter] != rlog[..shorter] {
                return CheckResult::fail(name, format!("p{p} and p{rp} diverge"));
            }
            if log.len() > rlog.len() {
                reference = Some((p, log));
            }
        } else {
            reference = Some((p, log));
        }
    }
    CheckResult::pass(name, format!("{} logs prefix-consistent", logs.len()))
}

/// Self-test helper: corrupt a log artificially and the checker must
/// point at the mutation.
#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Record;

    fn adeliver(party: u32, sender: u32, round: Round, digest: &str) -> Record {
        let mut r = Record::new(0, Kind::ADeliver);
        r.party = Some(party);
        r.sender = Some(sender);
        r.round = Some(round);
        r.digest = Some(digest.into());
        r
    }

    #[test]
    fn trace_total_order_detects_mutation() {
        let mut t = Trace::new();
        t.push(adeliver(0, 1, 1, "aa"));
        t.push(adeliver(0, 2, 1, "bb"));
        t.push(adeliver(1, 1, 1, "aa"));
        t.push(adeliver(1, 2, 1, "bb"));
        assert!(check_trace_total_order(&t).pass);

        let mut bad = Trace::new();
        bad.push(adeliver(0, 1, 1, "aa"));
        bad.push(adeliver(0, 2, 1, "bb"));
        bad.push(adeliver(1, 2, 1, "bb"));
        bad.push(adeliver(1, 1, 1, "aa"));
        assert!(!check_trace_total_order(&bad).pass);
    }

    #[test]
    fn wave_exclusivity_detects_crafted_violation() {
        let mut t = Trace::new();
        let mut steady = Record::new(0, Kind::DirectCommit);
        steady.wave = Some(2);
        steady.digest = Some("aa".into());
        steady.note = Some("steady1".into());
        let mut fb = Record::new(1, Kind::DirectCommit);
        fb.wave = Some(2);
        fb.digest = Some("bb".into());
        fb.note = Some("fallback".into());
        t.push(steady.clone());
        assert!(check_wave_exclusivity(&t).pass);
        t.push(fb);
        assert!(!check_wave_exclusivity(&t).pass);

        // Same vertex wearing both hats is not a violation.
        let mut t2 = Trace::new();
        let mut fb2 = Record::new(1, Kind::DirectCommit);
        fb2.wave = Some(2);
        fb2.digest = Some("aa".into());
        fb2.note = Some("fallback".into());
        t2.push(steady);
        t2.push(fb2);
        assert!(check_wave_exclusivity(&t2).pass);
    }

    #[test]
    fn integrity_detects_duplicate_delivery() {
        let mut t = Trace::new();
        let mut d = Record::new(0, Kind::Deliver);
        d.sender = Some(0);
        d.recipient = Some(1);
        d.round = Some(3);
        t.push(d.clone());
        assert!(check_rb_integrity(&t).pass);
        t.push(d);
        assert!(!check_rb_integrity(&t).pass);
    }
}
