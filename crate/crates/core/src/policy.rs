//! Tolerance policy for the reconstruction phase: the inconsistency rates,
//! the ring test that says whether local repair is still worth it, and the
//! memory of regions that went wrong before.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PolicyError {
    #[error("rate {0} outside [0, 1)")]
    Domain(f64),
}

/// 1 / ((1 - a) * sqrt(2 pi)).
pub fn negativity_term(a: f64) -> Result<f64, PolicyError> {
    if !(0.0..1.0).contains(&a) {
        return Err(PolicyError::Domain(a));
    }
    Ok(1.0 / ((1.0 - a) * (2.0 * PI).sqrt()))
}

/// True while the tolerance still exceeds the accumulated inconsistency.
pub fn ring(gamma: f64, t: f64) -> bool {
    t - gamma > 0.0
}

/// 1 / (1 + e^(-delta^2)); 0.5 at zero, approaching 1.
pub fn control_sigmoid(delta: f64) -> f64 {
    1.0 / (1.0 + (-delta * delta).exp())
}

/// Cost of re-attaching a region: its inconsistency increments plus a
/// penalty per repeated appearance.
pub fn attach_cost(gamma_deltas: &[f64], appearances: usize, freq_coef: f64) -> f64 {
    gamma_deltas.iter().sum::<f64>() + freq_coef * appearances as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Strategy ids that may fire.
    pub enabled: Vec<u8>,
    /// Order in which the standalone strategies are tried.
    pub order: Vec<u8>,
    pub freq_coef: f64,
    pub consistent_term: f64,
    pub failure_factor: f64,
    pub term_min: f64,
    pub term_max: f64,
    /// Tolerance credited at the start of every run.
    pub initial_credit: f64,
    pub delta_step: f64,
    pub delta_decay: f64,
    pub rate_cap: f64,
    pub cnode_cap: usize,
    /// Junctions into unmapped vertices allowed per run, as a multiple of n.
    pub connect_budget_factor: f64,
    pub abort_after_false: usize,
    /// Failures per run, as a multiple of n, before the ring is forced shut.
    pub failure_budget_factor: f64,
    /// Repeats of a region before it counts as an overlap.
    pub overlap_threshold: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            enabled: (1..=22).filter(|s| *s != 19 && *s != 20).collect(),
            order: vec![8, 18, 15, 16, 17, 19, 20, 4, 2, 1],
            freq_coef: 0.1,
            consistent_term: 0.05,
            failure_factor: 0.5,
            term_min: -1.0,
            term_max: 0.25,
            initial_credit: 0.25,
            delta_step: 0.25,
            delta_decay: 0.5,
            rate_cap: 0.99,
            cnode_cap: 4,
            connect_budget_factor: 1.0,
            abort_after_false: 3,
            failure_budget_factor: 4.0,
            overlap_threshold: 3,
        }
    }
}

impl PolicyConfig {
    pub fn on(&self, s: u8) -> bool {
        self.enabled.contains(&s)
    }
}

pub type RegionKey = u64;

/// Order-independent key for a vertex set.
pub fn region_key(vertices: &[usize]) -> RegionKey {
    let mut v = vertices.to_vec();
    v.sort_unstable();
    v.dedup();
    let mut h = DefaultHasher::new();
    v.hash(&mut h);
    h.finish()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Attachment {
    pub gamma_deltas: Vec<f64>,
    pub appearances: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inconsistency {
    pub key: RegionKey,
    pub articulations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JEntry {
    pub members: Vec<usize>,
    pub frozen: bool,
}

/// Region memory: attachments (A), pending inconsistencies (C), ordered cut
/// vertex sets that forced a restart (J) and known-good sequences (N).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Rspn {
    pub node_a: BTreeMap<RegionKey, Attachment>,
    pub node_c: Vec<Inconsistency>,
    pub node_j: Vec<JEntry>,
    pub node_n: BTreeMap<RegionKey, Vec<(usize, usize)>>,
}

impl Rspn {
    pub fn cost(&self, key: RegionKey, freq_coef: f64) -> f64 {
        self.node_a.get(&key).map_or(0.0, |a| attach_cost(&a.gamma_deltas, a.appearances, freq_coef))
    }

    /// Adds a J entry. Members already held by a frozen entry are dropped,
    /// members of older open entries move here; one-member entries freeze.
    /// Returns the index of the new entry, or `None` when nothing is left.
    pub fn push_j(&mut self, members: &[usize]) -> Option<usize> {
        let mut fresh: Vec<usize> = Vec::new();
        for &m in members {
            if fresh.contains(&m) || self.node_j.iter().any(|e| e.frozen && e.members.contains(&m)) {
                continue;
            }
            fresh.push(m);
        }
        if fresh.is_empty() {
            return None;
        }
        for e in self.node_j.iter_mut().filter(|e| !e.frozen) {
            e.members.retain(|m| !fresh.contains(m));
            if e.members.len() == 1 {
                e.frozen = true;
            }
        }
        self.node_j.retain(|e| !e.members.is_empty());
        let frozen = fresh.len() == 1;
        self.node_j.push(JEntry { members: fresh, frozen });
        Some(self.node_j.len() - 1)
    }

    /// Frozen single members, newest first: these must be reached in order.
    pub fn ordering(&self) -> Vec<usize> {
        self.node_j.iter().rev().filter(|e| e.frozen).map(|e| e.members[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapKind {
    /// Expand the other tip for one state, then alternate again.
    Once,
    /// Keep expanding the other tip until the next overlap.
    Stay,
    /// Keep expanding the other tip until a new region shows up next to the
    /// first one.
    UntilNew,
    /// Restart the run with the tips' roles exchanged.
    Restart,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "action")]
pub enum Action {
    Undo {
        k: usize,
    },
    /// Steer the next choice at the restored state towards these vertices.
    Attach {
        targets: Vec<usize>,
        key: RegionKey,
    },
    PathSwap {
        kind: SwapKind,
    },
    NewExpansion {
        candidates: Vec<usize>,
    },
    IncreaseRate {
        by: f64,
    },
    Abort,
}

/// What went wrong, as seen by the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    /// Cut vertices involved; empty when none could be named.
    pub articulations: Vec<usize>,
    /// The cut vertices plus their neighbours.
    pub region: Vec<usize>,
    /// Number of states that can be undone.
    pub depth: usize,
    /// Cut vertices that appear only when some single vertex is removed.
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyState {
    pub cfg: PolicyConfig,
    pub rate_terms: Vec<f64>,
    pub tolerance_terms: Vec<f64>,
    pub gamma: f64,
    pub t: f64,
    pub delta: f64,
    pub rspn: Rspn,
    pub fires: BTreeMap<u8, usize>,
    pub runs: usize,
    n: usize,
    consecutive: usize,
    last_fail_depth: Option<usize>,
    false_streak: usize,
    exponential: bool,
    failures_in_run: usize,
    swapped_in_run: bool,
    attached_ok: usize,
    connect_budget: usize,
    region_swaps: BTreeMap<RegionKey, usize>,
}

impl PolicyState {
    pub fn new(cfg: PolicyConfig, n: usize) -> Self {
        let mut p = PolicyState {
            cfg,
            rate_terms: Vec::new(),
            tolerance_terms: Vec::new(),
            gamma: 0.0,
            t: 0.0,
            delta: 0.0,
            rspn: Rspn::default(),
            fires: BTreeMap::new(),
            runs: 0,
            n,
            consecutive: 0,
            last_fail_depth: None,
            false_streak: 0,
            exponential: false,
            failures_in_run: 0,
            swapped_in_run: false,
            attached_ok: 0,
            connect_budget: 0,
            region_swaps: BTreeMap::new(),
        };
        p.begin_run();
        p
    }

    fn fire(&mut self, s: u8) {
        *self.fires.entry(s).or_default() += 1;
    }

    /// Fresh tolerance ring for a new run; region memory is kept.
    pub fn begin_run(&mut self) {
        self.runs += 1;
        self.rate_terms.clear();
        self.tolerance_terms.clear();
        self.gamma = 0.0;
        self.t = 0.0;
        self.consecutive = 0;
        self.last_fail_depth = None;
        self.false_streak = 0;
        self.failures_in_run = 0;
        self.swapped_in_run = false;
        self.connect_budget = (self.cfg.connect_budget_factor * self.n as f64).ceil() as usize;
        let credit = self.cfg.initial_credit.max(0.0);
        self.push_terms(0.0, credit);
    }

    fn push_terms(&mut self, a: f64, ti: f64) {
        let f = negativity_term(a).expect("rate kept inside [0, 1)");
        self.rate_terms.push(a);
        self.tolerance_terms.push(ti);
        self.gamma += f;
        self.t += f + ti;
    }

    /// Fresh ring after the tips were swapped; the swap stays spent until
    /// the next expansion call.
    pub fn swap_restart(&mut self) {
        self.begin_run();
        self.swapped_in_run = true;
    }

    /// The rate a new state would get.
    pub fn next_rate(&self) -> f64 {
        if self.exponential {
            self.cfg.rate_cap
        } else {
            (control_sigmoid(self.delta) - 0.5).clamp(0.0, self.cfg.rate_cap)
        }
    }

    /// Records one state. Returns false when the policy gives up.
    pub fn push_state(&mut self, consistent: bool) -> bool {
        let a = self.next_rate();
        let f = negativity_term(a).unwrap();
        let ti = if consistent { self.cfg.consistent_term } else { -self.cfg.failure_factor * f };
        self.push_terms(a, ti.clamp(self.cfg.term_min, self.cfg.term_max));
        if self.exponential && !self.ring() {
            self.false_streak += 1;
        }
        !(self.exponential && self.false_streak >= self.cfg.abort_after_false)
    }

    pub fn ring(&self) -> bool {
        ring(self.gamma, self.t)
    }

    /// Ring test with the per-run failure budget applied.
    pub fn ring_open(&self) -> bool {
        let budget = (self.cfg.failure_budget_factor * self.n.max(1) as f64).ceil() as usize;
        self.ring() && self.failures_in_run <= budget
    }

    /// Rates recomputed from the term lists, for checking the accumulators.
    pub fn recompute(&self) -> (f64, f64) {
        let mut gamma = 0.0;
        let mut t = 0.0;
        for (a, ti) in self.rate_terms.iter().zip(&self.tolerance_terms) {
            let f = negativity_term(*a).unwrap();
            gamma += f;
            t += f + ti;
        }
        (gamma, t)
    }

    pub fn exponential(&self) -> bool {
        self.exponential
    }

    fn last_increment(&self) -> f64 {
        self.rate_terms.last().map_or(0.0, |&a| negativity_term(a).unwrap())
    }

    fn undo_depth(&mut self, depth: usize) -> usize {
        match self.last_fail_depth {
            Some(d) if depth <= d + 1 => self.consecutive += 1,
            _ => self.consecutive = 0,
        }
        self.last_fail_depth = Some(depth);
        let mut k = 1usize << self.consecutive.min(20);
        if self.cfg.on(9) {
            let scale = (self.last_increment() / 0.5).ceil().max(1.0) as usize;
            if scale > 1 {
                self.fire(9);
            }
            k *= scale;
        }
        k.min(depth.max(1))
    }

    pub fn increase_rate(&mut self, by: f64) {
        self.delta += by;
    }

    fn note_region(&mut self, f: &Failure) -> RegionKey {
        let key = region_key(&f.region);
        let inc = self.last_increment();
        let entry = self.rspn.node_a.entry(key).or_default();
        entry.appearances += 1;
        entry.gamma_deltas.push(inc);
        if self.cfg.on(10) {
            let cost = self.rspn.cost(key, self.cfg.freq_coef);
            if cost > 1.0 {
                self.fire(10);
                self.delta += 0.1 * (cost - 1.0).min(4.0);
            }
        }
        key
    }

    fn remember_inconsistency(&mut self, key: RegionKey, f: &Failure) {
        if f.articulations.is_empty() || self.rspn.node_c.iter().any(|c| c.key == key) {
            return;
        }
        if self.cfg.on(11) && !self.rspn.node_c.is_empty() && self.attached_ok == 0 {
            self.fire(11);
            return;
        }
        let mut cap = self.cfg.cnode_cap.max(1);
        if self.cfg.on(13) {
            let shrink = (self.delta / 0.5).floor() as usize;
            if shrink > 0 {
                self.fire(13);
            }
            cap = cap.saturating_sub(shrink).max(1);
        }
        let entry = Inconsistency { key, articulations: f.articulations.clone() };
        let regrowing = self.rspn.node_a.get(&key).is_some_and(|a| a.successes > 0);
        if self.cfg.on(12) && regrowing {
            // a region that keeps coming back after being attached
            self.fire(12);
            self.delta += 4.0 * self.cfg.delta_step;
            self.rspn.node_c.insert(0, entry);
        } else {
            self.rspn.node_c.push(entry);
        }
        self.rspn.node_c.truncate(cap);
    }

    /// Outcome of steering a choice into a remembered region.
    pub fn attach_result(&mut self, key: RegionKey, ok: bool) {
        if ok {
            self.attached_ok += 1;
            self.delta *= self.cfg.delta_decay;
            self.rspn.node_a.entry(key).or_default().successes += 1;
            if self.cfg.on(14) {
                self.fire(14);
                self.rspn.node_c.retain(|c| c.key != key);
            }
        } else {
            self.delta += self.cfg.delta_step;
        }
    }

    /// Steering target was not among the candidates at the restored state.
    pub fn attach_unavailable(&mut self) {
        self.delta += self.cfg.delta_step;
    }

    /// A junction into a vertex the overlay never reached. Returns true when
    /// the run should be abandoned for a new expansion.
    pub fn unmapped_junction(&mut self) -> bool {
        if self.cfg.on(6) {
            self.fire(6);
            let by = if self.rspn.node_c.is_empty() { 4.0 } else { 1.0 };
            self.delta += by * self.cfg.delta_step * 0.25;
        }
        if self.cfg.on(7) {
            self.connect_budget = self.connect_budget.saturating_sub(1);
            if self.connect_budget == 0 {
                self.fire(7);
                self.delta += self.cfg.delta_step;
                return true;
            }
        }
        false
    }

    fn endpoints(arts: &[usize], adjacent: &dyn Fn(usize, usize) -> bool) -> Vec<usize> {
        arts.iter().copied().filter(|&a| arts.iter().filter(|&&b| b != a && adjacent(a, b)).count() <= 1).collect()
    }

    /// Chooses the response to a failed state. `adjacent` answers adjacency
    /// in the input graph.
    pub fn on_failure(&mut self, f: &Failure, adjacent: &dyn Fn(usize, usize) -> bool) -> Vec<Action> {
        self.failures_in_run += 1;
        let key = self.note_region(f);
        if self.ring_open() && self.can_repair() && f.depth > 0 {
            self.remember_inconsistency(key, f);
            let k = self.undo_depth(f.depth);
            let order = self.cfg.order.clone();
            for s in order {
                if !self.cfg.on(s) {
                    continue;
                }
                match s {
                    19 if !f.hidden.is_empty() => {
                        self.fire(19);
                        let entry = Inconsistency { key: region_key(&f.hidden), articulations: f.hidden.clone() };
                        if !self.rspn.node_c.iter().any(|c| c.key == entry.key) {
                            self.rspn.node_c.push(entry);
                        }
                        self.delta += self.cfg.delta_step;
                    }
                    15..=17 if self.overlapping(key) => {
                        let seen = self.region_swaps.entry(key).or_default();
                        let kind = match (s, *seen) {
                            (15, 0) => SwapKind::Once,
                            (16, 0 | 1) => SwapKind::Stay,
                            (17, _) => SwapKind::UntilNew,
                            _ => continue,
                        };
                        *seen += 1;
                        self.fire(s);
                        return vec![Action::Undo { k }, Action::PathSwap { kind }];
                    }
                    8 | 18 => {
                        if let Some(targets) = self.attach_targets(f, s == 18, adjacent) {
                            self.fire(s);
                            return vec![Action::Undo { k }, Action::Attach { targets, key }];
                        }
                    }
                    20 => {
                        self.fire(20);
                        self.rspn.node_n.entry(key).or_default();
                    }
                    _ => {}
                }
            }
            // nothing to steer towards: plain step back
            self.fire(8);
            self.delta += self.cfg.delta_step;
            return vec![Action::Undo { k }, Action::IncreaseRate { by: 0.0 }];
        }

        if self.cfg.on(4) && !self.swapped_in_run {
            self.swapped_in_run = true;
            self.fire(4);
            return vec![Action::PathSwap { kind: SwapKind::Restart }];
        }
        let fresh = if f.articulations.is_empty() { None } else { self.rspn.push_j(&f.articulations) };
        match fresh {
            Some(i) if self.cfg.on(2) || self.cfg.on(1) => {
                self.fire(if self.cfg.on(2) { 2 } else { 1 });
                let candidates = self.rspn.node_j[i].members.clone();
                vec![Action::NewExpansion { candidates }]
            }
            _ => self.give_up(),
        }
    }

    /// Any strategy that repairs in place (rather than restarting) is on.
    fn can_repair(&self) -> bool {
        [8, 15, 16, 17, 18, 19, 20].iter().any(|&s| self.cfg.on(s))
    }

    fn overlapping(&self, key: RegionKey) -> bool {
        self.rspn.node_a.get(&key).is_some_and(|a| a.appearances >= self.cfg.overlap_threshold)
    }

    fn attach_targets(
        &mut self,
        f: &Failure,
        endpoints_only: bool,
        adjacent: &dyn Fn(usize, usize) -> bool,
    ) -> Option<Vec<usize>> {
        let mut arts: Vec<usize> = self.rspn.node_c.iter().flat_map(|c| c.articulations.iter().copied()).collect();
        arts.extend(&f.articulations);
        arts.sort_unstable();
        arts.dedup();
        if arts.is_empty() {
            return None;
        }
        if endpoints_only || (self.cfg.on(18) && arts.len() >= 2) {
            let ends = Self::endpoints(&arts, adjacent);
            if !ends.is_empty() && ends.len() < arts.len() {
                if !endpoints_only {
                    self.fire(18);
                }
                arts = ends;
            } else if endpoints_only {
                return None;
            }
        }
        let mut region: Vec<usize> = f.region.clone();
        region.extend(&arts);
        region.sort_unstable();
        region.dedup();
        Some(region)
    }

    /// The expansion could not be started anywhere useful: let the rate run
    /// away so that the run aborts within a few states.
    pub fn give_up(&mut self) -> Vec<Action> {
        if self.cfg.on(1) {
            self.fire(1);
        }
        if !self.exponential {
            self.exponential = true;
            self.false_streak = 0;
        }
        if self.false_streak >= self.cfg.abort_after_false || !self.can_repair() {
            vec![Action::Abort]
        } else {
            vec![Action::Undo { k: 1 }]
        }
    }

    /// New expansion call started: strategy 3 bookkeeping lives with the
    /// caller, the ring restarts here.
    pub fn expansion_started(&mut self) {
        self.begin_run();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_formulas() {
        let base = negativity_term(0.0).unwrap();
        assert!((base - 0.3989422804014327).abs() < 1e-12);
        assert!((negativity_term(0.5).unwrap() - 2.0 * base).abs() < 1e-12);
        assert_eq!(negativity_term(1.0), Err(PolicyError::Domain(1.0)));
        assert_eq!(negativity_term(-0.1), Err(PolicyError::Domain(-0.1)));
        assert_eq!(control_sigmoid(0.0), 0.5);
        assert!(!ring(1.5, 1.5));
        assert!(ring(1.0, 1.5));
        assert!((attach_cost(&[0.2, 0.3], 2, 0.1) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn accumulators_track_terms() {
        let mut p = PolicyState::new(PolicyConfig::default(), 10);
        for i in 0..50 {
            p.push_state(i % 3 != 0);
            if i % 7 == 0 {
                p.increase_rate(0.25);
            }
        }
        let (g, t) = p.recompute();
        assert!((g - p.gamma).abs() < 1e-12 && (t - p.t).abs() < 1e-12);
        assert!(p.tolerance_terms.iter().all(|&x| (-1.0..=0.25).contains(&x)));
    }

    #[test]
    fn ring_closes_after_failures() {
        let mut p = PolicyState::new(PolicyConfig::default(), 10);
        assert!(p.ring());
        p.push_state(false);
        p.push_state(false);
        assert!(!p.ring());
    }

    #[test]
    fn j_entries_dedupe_and_freeze() {
        let mut r = Rspn::default();
        assert_eq!(r.push_j(&[1, 2, 3]), Some(0));
        assert_eq!(r.push_j(&[2, 3]), Some(1));
        assert_eq!(r.node_j[0], JEntry { members: vec![1], frozen: true });
        assert_eq!(r.push_j(&[1]), None);
        assert_eq!(r.push_j(&[3]), Some(2));
        assert_eq!(r.node_j.len(), 3);
        assert_eq!(r.ordering(), vec![3, 2, 1]);
    }

    #[test]
    fn region_key_ignores_order() {
        assert_eq!(region_key(&[3, 1, 2]), region_key(&[1, 2, 3, 3]));
        assert_ne!(region_key(&[1, 2]), region_key(&[1, 3]));
    }

    #[test]
    fn exponential_mode_aborts() {
        let mut p = PolicyState::new(PolicyConfig::default(), 5);
        p.push_state(false);
        p.push_state(false);
        let f = Failure { articulations: vec![], region: vec![], depth: 0, hidden: vec![] };
        // ring is shut; first answer is the tip swap, then the run gives up
        assert_eq!(p.on_failure(&f, &|_, _| false), vec![Action::PathSwap { kind: SwapKind::Restart }]);
        let mut acts = p.on_failure(&f, &|_, _| false);
        let mut steps = 0;
        while acts != vec![Action::Abort] {
            assert!(p.exponential());
            p.push_state(false);
            acts = p.on_failure(&f, &|_, _| false);
            steps += 1;
            assert!(steps < 10);
        }
        assert_eq!(p.next_rate(), 0.99);
    }

    #[test]
    fn config_round_trip() {
        let c = PolicyConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<PolicyConfig>(&s).unwrap(), c);
        let partial: PolicyConfig = serde_json::from_str(r#"{"cnode_cap": 2}"#).unwrap();
        assert_eq!(partial.cnode_cap, 2);
        assert!(!c.on(19) && !c.on(20) && c.on(21));
    }

    #[test]
    fn lone_expansion_strategy_never_undoes() {
        let cfg = PolicyConfig { enabled: vec![1], ..PolicyConfig::default() };
        let mut p = PolicyState::new(cfg, 8);
        let f = |arts: Vec<usize>| Failure { region: arts.clone(), articulations: arts, depth: 3, hidden: vec![] };
        assert!(matches!(p.on_failure(&f(vec![2]), &|_, _| false)[..], [Action::NewExpansion { .. }]));
        assert_eq!(p.on_failure(&f(vec![2]), &|_, _| false), vec![Action::Abort]);
    }
}
