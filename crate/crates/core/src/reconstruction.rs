//! Second phase: grow two paths out of a seed record, following the mapped
//! overlay where it exists and adding junctions where it does not, with the
//! tolerance policy deciding how to recover from inconsistent states.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::graph::{self, Graph, VertexMask};
use crate::mapping::EdgeRecord;
use crate::oracle::Mode;
use crate::policy::{Action, Failure, PolicyConfig, PolicyState, RegionKey, SwapKind};
use crate::scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Mapped,
    Junction,
    Attachment,
    Marker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rec {
    pub a: usize,
    pub b: usize,
    pub sync: bool,
    pub alive: bool,
    pub origin: Origin,
}

impl Rec {
    fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }

    fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    fn is_marker(&self) -> bool {
        self.a == self.b
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Alive(usize, bool),
    Sync(usize, bool),
    Pushed,
    Masked(usize),
    Extended(usize),
    Active(usize),
    Dead(usize, bool),
    Logged,
    Unlogged(usize, (usize, usize)),
    Pending(Option<(usize, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    mark: usize,
    pub digest: u64,
    pub tip: usize,
    pub chosen: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailKind {
    /// A pendant block neither end can reach, or the far end is cut off.
    Constraint,
    /// Leaving the tip splits what is left.
    Split,
    /// A vertex has too few live neighbours to be passed through.
    Degree,
    /// The tip has nowhere to go.
    NoCandidates,
    /// Every vertex is covered but the ends do not close the circuit.
    Closure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fail {
    pub kind: FailKind,
    pub tip: usize,
    pub articulations: Vec<usize>,
}

/// Candidate groups by live record count, plus how many were unmapped.
type Partition = (Vec<(usize, usize)>, Vec<(usize, usize)>, usize);

/// Steering between states, kept outside the undo journal.
#[derive(Debug, Default)]
pub struct Control {
    bans: HashMap<u64, Vec<usize>>,
    prefer: HashMap<u64, (Vec<usize>, RegionKey)>,
    pin: Option<(usize, SwapKind)>,
    pub lazy: bool,
}

impl Control {
    pub fn clear(&mut self) {
        self.bans.clear();
        self.prefer.clear();
        self.pin = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepInfo {
    pub tip: usize,
    pub edge: Option<(usize, usize)>,
    pub walked: usize,
    pub attached: Option<RegionKey>,
    pub unmapped_only: bool,
    pub dead_end: bool,
}

/// Live overlay records around each vertex.
pub struct HStar<'a> {
    recs: &'a [Rec],
    live: &'a VertexMask,
}

impl HStar<'_> {
    pub fn dstar(&self, w: usize) -> usize {
        self.recs.iter().filter(|r| r.alive && r.touches(w) && self.live.contains(r.other(w))).count()
    }
}

#[derive(Debug, Clone)]
pub struct ReconState<'g> {
    g: &'g Graph,
    pub mode: Mode,
    pub recs: Vec<Rec>,
    initial: Vec<Rec>,
    pub live: VertexMask,
    pub paths: [Vec<usize>; 2],
    pub active: usize,
    pub dead: [bool; 2],
    pending: Option<(usize, usize)>,
    /// (state, record) for every record removed.
    pub removals: Vec<(usize, usize)>,
    pub s_initial: usize,
    journal: Vec<Op>,
    pub frames: Vec<Frame>,
    /// Vertices that must be reached in this order.
    pub order: Vec<usize>,
    relaxed_ends: bool,
    strict_cuts: bool,
}

impl<'g> ReconState<'g> {
    pub fn new(g: &'g Graph, le: &[EdgeRecord], mode: Mode, cfg: &PolicyConfig) -> Self {
        let initial: Vec<Rec> =
            le.iter().map(|r| Rec { a: r.a, b: r.b, sync: false, alive: true, origin: Origin::Mapped }).collect();
        ReconState {
            g,
            mode,
            s_initial: initial.len(),
            recs: initial.clone(),
            initial,
            live: g.all(),
            paths: [Vec::new(), Vec::new()],
            active: 0,
            dead: [false; 2],
            pending: None,
            removals: Vec::new(),
            journal: Vec::new(),
            frames: Vec::new(),
            order: Vec::new(),
            relaxed_ends: cfg.on(21),
            strict_cuts: cfg.on(22),
        }
    }

    /// Resets to the mapped overlay and seeds the two paths with `x1` and
    /// `x2`, joined by the seed record.
    pub fn start(&mut self, x1: usize, x2: usize) {
        self.recs = self.initial.clone();
        self.live = self.g.all();
        self.paths = [vec![x1], vec![x2]];
        self.active = 0;
        self.dead = [false; 2];
        self.pending = None;
        self.removals.clear();
        self.journal.clear();
        self.frames.clear();
        if x1 == x2 {
            return;
        }
        match self.recs.iter().position(|r| r.alive && ((r.a, r.b) == (x1, x2) || (r.a, r.b) == (x2, x1))) {
            Some(i) => self.recs[i].sync = true,
            None => self.recs.push(Rec { a: x2, b: x1, sync: true, alive: true, origin: Origin::Junction }),
        }
    }

    pub fn hstar(&self) -> HStar<'_> {
        HStar { recs: &self.recs, live: &self.live }
    }

    pub fn tip(&self, which: usize) -> usize {
        *self.paths[which].last().unwrap()
    }

    pub fn covered(&self) -> usize {
        let shared = usize::from(self.paths[0][0] == self.paths[1][0]);
        self.paths[0].len() + self.paths[1].len() - shared
    }

    pub fn complete(&self) -> bool {
        self.covered() == self.g.n()
    }

    pub fn closure_ok(&self) -> bool {
        match self.mode {
            Mode::Path => true,
            Mode::Circuit => self.g.n() == 1 || (self.g.n() >= 3 && self.g.has_edge(self.tip(0), self.tip(1))),
        }
    }

    /// reverse(p2) followed by p1.
    pub fn sequence(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.paths[1].iter().rev().copied().collect();
        let skip = usize::from(self.paths[0][0] == self.paths[1][0]);
        s.extend(self.paths[0].iter().skip(skip));
        s
    }

    pub fn dead_ends(&self) -> usize {
        self.dead.iter().filter(|&&d| d).count()
    }

    pub fn mu_x(&self) -> f64 {
        if self.s_initial == 0 {
            return 1.0;
        }
        let mapped = self.removals.iter().filter(|&&(_, r)| r < self.s_initial).count();
        1.0 - mapped as f64 / self.s_initial as f64
    }

    pub fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.recs.hash(&mut h);
        self.live.hash(&mut h);
        self.paths.hash(&mut h);
        self.active.hash(&mut h);
        self.dead.hash(&mut h);
        self.pending.hash(&mut h);
        self.removals.hash(&mut h);
        h.finish()
    }

    // journaled primitives

    fn set_alive(&mut self, i: usize, alive: bool) {
        self.journal.push(Op::Alive(i, self.recs[i].alive));
        self.recs[i].alive = alive;
    }

    fn set_sync(&mut self, i: usize) {
        self.journal.push(Op::Sync(i, self.recs[i].sync));
        self.recs[i].sync = true;
    }

    fn push_rec(&mut self, r: Rec) -> usize {
        self.journal.push(Op::Pushed);
        self.recs.push(r);
        self.recs.len() - 1
    }

    fn mask(&mut self, v: usize) {
        if self.live.remove(v) {
            self.journal.push(Op::Masked(v));
        }
    }

    fn extend(&mut self, which: usize, v: usize) {
        self.journal.push(Op::Extended(which));
        self.paths[which].push(v);
    }

    fn set_active(&mut self, which: usize) {
        self.journal.push(Op::Active(self.active));
        self.active = which;
    }

    fn set_dead(&mut self, which: usize) {
        self.journal.push(Op::Dead(which, self.dead[which]));
        self.dead[which] = true;
        // a finished end takes no further part in the scene
        self.mask(self.tip(which));
    }

    fn set_pending(&mut self, p: Option<(usize, usize)>) {
        self.journal.push(Op::Pending(self.pending));
        self.pending = p;
    }

    fn remove_rec(&mut self, i: usize) {
        if !self.recs[i].alive {
            return;
        }
        self.set_alive(i, false);
        self.journal.push(Op::Logged);
        self.removals.push((self.frames.len(), i));
    }

    fn reinstate(&mut self, i: usize) {
        self.set_alive(i, true);
        if let Some(pos) = self.removals.iter().rposition(|&(_, r)| r == i) {
            let entry = self.removals.remove(pos);
            self.journal.push(Op::Unlogged(pos, entry));
        }
    }

    fn rollback(&mut self, mark: usize) {
        while self.journal.len() > mark {
            match self.journal.pop().unwrap() {
                Op::Alive(i, prev) => self.recs[i].alive = prev,
                Op::Sync(i, prev) => self.recs[i].sync = prev,
                Op::Pushed => {
                    self.recs.pop();
                }
                Op::Masked(v) => {
                    self.live.insert(v);
                }
                Op::Extended(w) => {
                    self.paths[w].pop();
                }
                Op::Active(prev) => self.active = prev,
                Op::Dead(w, prev) => self.dead[w] = prev,
                Op::Logged => {
                    self.removals.pop();
                }
                Op::Unlogged(pos, entry) => self.removals.insert(pos, entry),
                Op::Pending(prev) => self.pending = prev,
            }
        }
    }

    pub fn begin_state(&mut self) {
        let tip = self.tip(self.active);
        self.frames.push(Frame { mark: self.journal.len(), digest: self.digest(), tip, chosen: None });
    }

    /// Drops the open state, restoring what it changed.
    pub fn abandon_state(&mut self) {
        if let Some(f) = self.frames.pop() {
            self.rollback(f.mark);
        }
    }

    /// Undoes `k` completed states; returns the earliest one undone.
    pub fn undo_states(&mut self, k: usize) -> Option<Frame> {
        let mut earliest = None;
        for _ in 0..k {
            let Some(f) = self.frames.pop() else { break };
            self.rollback(f.mark);
            earliest = Some(f);
        }
        earliest
    }

    fn other_tip(&self, which: usize) -> usize {
        self.tip(1 - which)
    }

    fn live_degree(&self, w: usize) -> usize {
        self.g.neighbors(w).iter().filter(|&&x| self.live.contains(x)).count()
    }

    fn fail(&self, kind: FailKind, tip: usize, arts: Vec<usize>) -> Fail {
        let arts = if arts.is_empty() {
            let live_arts = graph::articulations(self.g, &self.live).to_vec();
            if live_arts.is_empty() {
                vec![tip]
            } else {
                live_arts
            }
        } else {
            arts
        };
        Fail { kind, tip, articulations: arts }
    }

    /// Is it still possible to finish once `v`, the tip of `which`, is left?
    pub fn consistency(&self, v: usize, which: usize) -> Result<(), Fail> {
        let g = self.g;
        let o = self.other_tip(which);
        if self.live.count() <= 2 {
            return Ok(());
        }
        let ends_left = 2usize.saturating_sub(self.dead_ends());
        let path_mode = self.mode == Mode::Path;
        let (arts, comps) = scene::creatable_components(g, &self.live, &VertexMask::from_vertices(g.n(), [v]));
        if !arts.is_empty() {
            let ends: &[usize] = if self.dead[1 - which] { &[v] } else { &[v, o] };
            let mut reach = VertexMask::from_vertices(g.n(), ends.iter().copied());
            for &x in ends {
                for &w in g.neighbors(x) {
                    if self.live.contains(w) {
                        reach.insert(w);
                    }
                }
            }
            let unreachable =
                comps.iter().filter(|c| c.creatable && c.hn == 1 && !c.vertices.intersects(&reach)).count();
            // two path ends never have to meet, so only a circuit can strand one
            let stranded = !path_mode && comps.iter().any(|c| !c.creatable && c.hn == 0 && c.vertices.contains(o));
            let allowed = if path_mode && self.relaxed_ends { ends_left } else { 0 };
            if stranded || unreachable > allowed {
                return Err(self.fail(FailKind::Constraint, v, arts.to_vec()));
            }
        }
        let rest = self.live.without(v);
        let o_dead = self.dead[1 - which];
        let scope = if path_mode && o_dead { rest.without(o) } else { rest.clone() };
        let pieces = graph::components(g, &scope);
        let touches_v = |c: &VertexMask| g.neighbors(v).iter().any(|&w| c.contains(w));
        let split = match self.mode {
            Mode::Circuit => pieces.len() > 1,
            Mode::Path if o_dead => pieces.len() > 1 || pieces.first().is_some_and(|c| !touches_v(c)),
            Mode::Path => pieces.len() > 2 || pieces.iter().any(|c| !c.contains(o) && !touches_v(c)),
        };
        if split {
            return Err(self.fail(FailKind::Split, v, graph::articulations(g, &self.live).to_vec()));
        }
        let mut loose = 0;
        for w in rest.iter().filter(|&w| w != o) {
            let d = self.live_degree(w);
            if d == 0 || (d == 1 && !path_mode) {
                let nb: Vec<usize> = g.neighbors(w).iter().copied().filter(|&x| self.live.contains(x)).collect();
                return Err(self.fail(FailKind::Degree, v, nb));
            }
            if d == 1 {
                loose += 1;
            }
        }
        if loose > ends_left {
            return Err(self.fail(FailKind::Degree, v, Vec::new()));
        }
        Ok(())
    }

    fn blocked_by_order(&self, y: usize) -> bool {
        let Some(pos) = self.order.iter().position(|&x| x == y) else { return false };
        self.order[..pos].iter().any(|&x| self.live.contains(x) && x != self.tip(0) && x != self.tip(1))
    }

    fn is_tip(&self, v: usize) -> bool {
        v == self.tip(0) || v == self.tip(1)
    }

    /// Follows mapped records from the active tip, converting them.
    fn walk(&mut self, which: usize) -> Result<usize, Fail> {
        let mut steps = 0;
        loop {
            let v = self.tip(which);
            let next = self.recs.iter().enumerate().find_map(|(i, r)| {
                let y = r.other(v);
                (r.alive && !r.sync && r.touches(v) && !r.is_marker() && self.live.contains(y) && !self.is_tip(y))
                    .then_some((i, y))
            });
            let Some((i, y)) = next else { return Ok(steps) };
            if self.blocked_by_order(y) {
                self.remove_rec(i);
                continue;
            }
            if steps > 0 {
                self.consistency(v, which)?;
            }
            self.set_sync(i);
            self.extend(which, y);
            self.mask(v);
            steps += 1;
            if self.pending.is_some_and(|(_, z)| z == i) {
                self.set_pending(None);
            }
        }
    }

    /// Records around the non-visited neighbours of `v`, split by how many
    /// live records those neighbours carry. Unmapped neighbours get a pair of
    /// self-markers and join the second group.
    fn partition(&mut self, v: usize, banned: &[usize]) -> Partition {
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        let mut s0 = Vec::new();
        let cands: Vec<usize> = self
            .g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| self.live.contains(w) && !self.is_tip(w) && !banned.contains(&w) && !self.blocked_by_order(w))
            .collect();
        for w in cands {
            let touching: Vec<usize> = self
                .recs
                .iter()
                .enumerate()
                .filter(|(_, r)| r.alive && !r.sync && r.touches(w) && !r.is_marker() && self.live.contains(r.other(w)))
                .map(|(i, _)| i)
                .collect();
            match touching.len() {
                0 => {
                    let m = Rec { a: w, b: w, sync: false, alive: true, origin: Origin::Marker };
                    let i = self.push_rec(m);
                    self.push_rec(m);
                    s0.push((i, w));
                }
                1 => s1.push((touching[0], w)),
                _ => touching.iter().for_each(|&i| s2.push((i, w))),
            }
        }
        s1.sort_unstable();
        s2.sort_unstable();
        let unmapped = s0.len();
        s2.extend(s0);
        (s1, s2, unmapped)
    }

    fn clear_markers(&mut self) {
        let live: Vec<usize> =
            (0..self.recs.len()).filter(|&i| self.recs[i].alive && self.recs[i].is_marker()).collect();
        for i in live {
            self.set_alive(i, false);
        }
    }

    fn removal_cases(&mut self, which: usize) {
        let g = self.g;
        let u = self.tip(which);
        let o = self.other_tip(which);
        let arts = graph::articulations(g, &self.live);
        let relax = self.mode == Mode::Path && self.relaxed_ends && !self.strict_cuts && self.dead_ends() < 2;
        let own: Vec<usize> = (0..self.recs.len())
            .filter(|&i| {
                let r = &self.recs[i];
                r.alive && !r.sync && !r.is_marker() && r.touches(u) && self.live.contains(r.other(u))
            })
            .collect();
        for i in own {
            let y = self.recs[i].other(u);
            let premature = y == o && !self.complete();
            let to_cut = !relax && arts.contains(y);
            let lookahead =
                !relax && !arts.is_empty() && scene::constraint_violation(g, &self.live.without(u), y, o).is_some();
            if premature || to_cut || lookahead {
                self.remove_rec(i);
            }
        }
        let incident: Vec<usize> = (0..self.recs.len())
            .filter(|&i| self.recs[i].alive && !self.recs[i].is_marker() && self.recs[i].touches(u))
            .collect();
        if incident.len() > 2 {
            let extra: Vec<usize> =
                incident.iter().copied().filter(|&i| !self.recs[i].sync).take(incident.len() - 2).collect();
            for i in extra {
                self.remove_rec(i);
            }
        }
        if let Some((y, z)) = self.pending {
            if !self.recs[z].alive {
                self.reinstate(y);
                self.set_pending(None);
            }
        }
    }

    /// One state: walk the overlay from the active tip, then add a junction
    /// to a new vertex.
    pub fn advance(&mut self, ctl: &mut Control) -> Result<StepInfo, Fail> {
        let which = if self.dead[self.active] { 1 - self.active } else { self.active };
        let start = self.tip(which);
        let mut info = StepInfo { tip: start, ..StepInfo::default() };
        self.consistency(start, which)?;
        info.walked = self.walk(which)?;
        if self.complete() {
            return Ok(info);
        }
        let v = self.tip(which);
        if info.walked > 0 {
            self.consistency(v, which)?;
        }
        let digest = self.frames.last().map_or(0, |f| f.digest);
        let banned = ctl.bans.get(&digest).cloned().unwrap_or_default();
        let (s1, s2, unmapped) = self.partition(v, &banned);
        if s1.is_empty() && s2.is_empty() {
            let other_open = !self.dead[1 - which];
            // only a tip with nothing live around it is finished; bans mean back up
            let stuck = !self.g.neighbors(v).iter().any(|&w| self.live.contains(w) && !self.is_tip(w));
            if self.mode == Mode::Path && self.relaxed_ends && self.dead_ends() < 2 && other_open && stuck {
                self.set_dead(which);
                self.set_active(1 - which);
                info.dead_end = true;
                return Ok(info);
            }
            return Err(self.fail(FailKind::NoCandidates, v, Vec::new()));
        }
        info.unmapped_only = s1.is_empty() && unmapped * 2 == s2.len();

        let mut pool: Vec<(usize, usize)> = s1.iter().chain(&s2).copied().collect();
        let mut attached = None;
        if let Some((targets, key)) = ctl.prefer.get(&digest) {
            let hit: Vec<(usize, usize)> = pool.iter().copied().filter(|(_, w)| targets.contains(w)).collect();
            let hit: Vec<(usize, usize)> = if ctl.lazy {
                hit
            } else {
                hit.into_iter()
                    .filter(|&(_, w)| {
                        scene::constraint_violation(self.g, &self.live.without(v), w, self.other_tip(which)).is_none()
                    })
                    .collect()
            };
            if !hit.is_empty() {
                pool = hit;
                attached = Some(*key);
            }
        }
        let first_s1 = pool.iter().copied().find(|p| s1.contains(p));
        let (rec, u) = first_s1.unwrap_or(pool[0]);
        if first_s1.is_none() && !self.recs[rec].is_marker() {
            // keep one record through u, drop the other
            let z = self.recs.iter().enumerate().position(|(i, r)| {
                i != rec && r.alive && !r.sync && !r.is_marker() && r.touches(u) && self.live.contains(r.other(u))
            });
            self.remove_rec(rec);
            self.set_pending(z.map(|z| (rec, z)));
        }
        let existing =
            self.recs.iter().position(|r| r.alive && !r.sync && !r.is_marker() && r.touches(v) && r.touches(u));
        match existing {
            Some(i) => self.set_sync(i),
            None => {
                let origin = if attached.is_some() { Origin::Attachment } else { Origin::Junction };
                self.push_rec(Rec { a: v, b: u, sync: true, alive: true, origin });
            }
        }
        self.extend(which, u);
        self.mask(v);
        self.clear_markers();
        self.removal_cases(which);
        if let Some(f) = self.frames.last_mut() {
            f.chosen = Some(u);
        }
        info.edge = Some((v, u));
        info.attached = attached;

        let next = match ctl.pin {
            Some((w, _)) if !self.dead[w] => w,
            _ if !self.dead[1 - which] => 1 - which,
            _ => which,
        };
        if let Some((_, SwapKind::Once)) = ctl.pin {
            ctl.pin = None;
        }
        if next != self.active {
            self.set_active(next);
        }
        Ok(info)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconStatus {
    Found,
    Aborted,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceLine {
    pub state: usize,
    pub tip: usize,
    pub action: String,
    pub edge: Option<(usize, usize)>,
    pub gamma: f64,
    pub t: f64,
    pub mu_x: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconOutcome {
    pub status: ReconStatus,
    pub sequence: Option<Vec<usize>>,
    pub mu_x: f64,
    /// Distinct x1 values used, in order.
    pub x1s: Vec<usize>,
    pub gamma_final: f64,
    pub t_final: f64,
    pub states: usize,
    pub failures: usize,
    pub fires: BTreeMap<u8, usize>,
    /// Rate and tolerance terms of the last run.
    pub rate_terms: Vec<f64>,
    pub tolerance_terms: Vec<f64>,
    /// Largest gap seen between the running sums and a recomputation.
    pub drift: f64,
    pub records: Vec<Rec>,
    #[serde(skip)]
    pub trace: Vec<TraceLine>,
}

/// Picks the seed record: the lowest record touching `v0`, then any record,
/// then an edge out of `v0`.
fn seed(g: &Graph, le: &[EdgeRecord], v0: usize) -> (usize, usize) {
    if let Some(r) = le.iter().find(|r| r.touches(v0)) {
        return (r.other(v0), v0);
    }
    if let Some(r) = le.first() {
        return (r.b, r.a);
    }
    match g.neighbors(v0).first() {
        Some(&w) => (w, v0),
        None => (v0, v0),
    }
}

struct Driver<'g> {
    st: ReconState<'g>,
    pol: PolicyState,
    ctl: Control,
    le: Vec<EdgeRecord>,
    x1s: Vec<usize>,
    seeds: (usize, usize),
    states: usize,
    failures: usize,
    awaiting: Option<RegionKey>,
    trace: Option<Vec<TraceLine>>,
    drift: f64,
}

impl<'g> Driver<'g> {
    fn note(&mut self, tip: usize, action: &str, edge: Option<(usize, usize)>) {
        let (gamma, t) = self.pol.recompute();
        self.drift = self.drift.max((gamma - self.pol.gamma).abs()).max((t - self.pol.t).abs());
        let mu_x = self.st.mu_x();
        if let Some(t) = &mut self.trace {
            t.push(TraceLine {
                state: self.states,
                tip,
                action: action.to_string(),
                edge,
                gamma: self.pol.gamma,
                t: self.pol.t,
                mu_x,
            });
        }
    }

    fn restart(&mut self, x1: usize, x2: usize) {
        self.st.start(x1, x2);
        self.st.order = self.pol.rspn.ordering();
        self.seeds = (x1, x2);
        self.ctl.clear();
        self.awaiting = None;
    }

    /// Seed options around `c` whose x1 has not been used yet, best first.
    fn expansion_options(&mut self, candidates: &[usize]) -> Vec<(usize, usize)> {
        let g = self.st.g;
        let mut opts = Vec::new();
        for &c in candidates {
            let partners: Vec<usize> = self
                .le
                .iter()
                .filter(|r| r.touches(c))
                .map(|r| r.other(c))
                .chain(g.neighbors(c).iter().copied())
                .collect();
            for w in partners {
                for (x1, x2) in [(w, c), (c, w)] {
                    if !self.x1s.contains(&x1) && !opts.contains(&(x1, x2)) {
                        opts.push((x1, x2));
                    }
                }
            }
        }
        if !self.pol.cfg.on(2) {
            return opts;
        }
        // one-step lookahead: prefer seeds whose first state holds up
        let saved = self.st.clone();
        let mut good = Vec::new();
        let mut rest = Vec::new();
        for &(x1, x2) in opts.iter().take(8) {
            self.st.start(x1, x2);
            self.st.begin_state();
            let ok = self.st.advance(&mut Control { lazy: true, ..Control::default() }).is_ok();
            if ok {
                good.push((x1, x2));
            } else {
                rest.push((x1, x2));
            }
        }
        self.st = saved;
        good.extend(rest);
        good.extend(opts.iter().skip(8));
        good
    }

    fn failure(&self, f: &Fail) -> Failure {
        let g = self.st.g;
        let mut region = f.articulations.clone();
        for &a in &f.articulations {
            region.extend(g.neighbors(a).iter().copied().filter(|&w| self.st.live.contains(w)));
        }
        region.sort_unstable();
        region.dedup();
        let hidden = if self.pol.cfg.on(19) {
            let base = graph::articulations(g, &self.st.live).count();
            self.st
                .live
                .iter()
                .filter(|&w| !self.st.is_tip(w) && graph::articulations(g, &self.st.live.without(w)).count() > base + 1)
                .collect()
        } else {
            Vec::new()
        };
        Failure { articulations: f.articulations.clone(), region, depth: self.st.frames.len(), hidden }
    }

    /// Applies the policy's answer. Returns false when the run is over.
    fn respond(&mut self, f: &Fail) -> bool {
        self.failures += 1;
        if let Some(key) = self.awaiting.take() {
            self.pol.attach_result(key, false);
        }
        if !self.pol.push_state(false) {
            return false;
        }
        let failure = self.failure(f);
        let g = self.st.g;
        let mut actions = self.pol.on_failure(&failure, &|a, b| g.has_edge(a, b));
        let mut guard = 0;
        while let Some(action) = (!actions.is_empty()).then(|| actions.remove(0)) {
            guard += 1;
            if guard > 64 {
                return false;
            }
            match action {
                Action::Undo { k } => match self.st.undo_states(k) {
                    Some(frame) => {
                        if let Some(u) = frame.chosen {
                            self.ctl.bans.entry(frame.digest).or_default().push(u);
                        }
                        self.note(frame.tip, "undo", None);
                    }
                    None => {
                        // back at the seed with nothing left to undo
                        let mut fresh = failure.clone();
                        fresh.depth = 0;
                        if !self.pol.push_state(false) {
                            return false;
                        }
                        actions = self.pol.on_failure(&fresh, &|a, b| g.has_edge(a, b));
                    }
                },
                Action::Attach { targets, key } => {
                    // keyed by the state the next frame will open from
                    self.ctl.prefer.insert(self.st.digest(), (targets, key));
                }
                Action::PathSwap { kind: SwapKind::Restart } => {
                    let (x1, x2) = self.seeds;
                    self.pol.swap_restart();
                    self.restart(x2, x1);
                    self.note(x2, "path_swap", None);
                }
                Action::PathSwap { kind } => {
                    let other = 1 - self.st.active;
                    self.ctl.pin = Some((other, kind));
                    self.note(self.st.tip(other), "pin_tip", None);
                }
                Action::NewExpansion { candidates } => {
                    let n = self.st.g.n();
                    let opts =
                        if self.x1s.len() + 1 >= n.max(2) { Vec::new() } else { self.expansion_options(&candidates) };
                    match opts.first() {
                        Some(&(x1, x2)) => {
                            self.x1s.push(x1);
                            self.pol.expansion_started();
                            self.restart(x1, x2);
                            self.note(x1, "new_expansion", Some((x2, x1)));
                        }
                        None => actions = self.pol.give_up(),
                    }
                }
                Action::IncreaseRate { by } => self.pol.increase_rate(by),
                Action::Abort => return false,
            }
        }
        true
    }

    /// Registers a state that went through; moves the attach window.
    fn settle(&mut self, info: &StepInfo) {
        if let Some(key) = self.awaiting.take() {
            self.pol.attach_result(key, true);
        }
        self.awaiting = info.attached;
        self.pol.push_state(true);
        if info.unmapped_only && self.pol.unmapped_junction() && self.x1s.len() + 1 < self.st.g.n() {
            if let Some(&(x1, x2)) = self.expansion_options(&[info.tip]).first() {
                self.x1s.push(x1);
                self.pol.expansion_started();
                self.restart(x1, x2);
                self.note(x1, "new_expansion", Some((x2, x1)));
            }
        }
    }
}

/// Runs the reconstruction phase over a mapped overlay.
pub fn reconstruct(
    g: &Graph,
    le: &[EdgeRecord],
    mode: Mode,
    v0: usize,
    cfg: &PolicyConfig,
    trace: bool,
) -> ReconOutcome {
    let n = g.n();
    let st = ReconState::new(g, le, mode, cfg);
    let pol = PolicyState::new(cfg.clone(), n);
    let (x1, x2) = seed(g, le, v0);
    let mut d = Driver {
        st,
        pol,
        ctl: Control { lazy: cfg.on(5), ..Control::default() },
        le: le.to_vec(),
        x1s: vec![x1],
        seeds: (x1, x2),
        states: 0,
        failures: 0,
        awaiting: None,
        trace: trace.then(Vec::new),
        drift: 0.0,
    };
    d.restart(x1, x2);
    let finish = |d: Driver, found: bool| {
        let sequence = found.then(|| d.st.sequence());
        ReconOutcome {
            status: if found { ReconStatus::Found } else { ReconStatus::Aborted },
            sequence,
            mu_x: d.st.mu_x(),
            x1s: d.x1s,
            gamma_final: d.pol.gamma,
            t_final: d.pol.t,
            states: d.states,
            failures: d.failures,
            fires: d.pol.fires,
            rate_terms: d.pol.rate_terms,
            tolerance_terms: d.pol.tolerance_terms,
            drift: d.drift,
            records: d.st.recs.iter().copied().filter(|r| r.alive && !r.is_marker()).collect(),
            trace: d.trace.unwrap_or_default(),
        }
    };
    if n == 1 {
        return finish(d, true);
    }
    if (mode == Mode::Circuit && n == 2) || !g.is_connected() {
        return finish(d, false);
    }
    let max_states = 40 * n * n + 1000;
    loop {
        if d.st.complete() {
            if d.st.closure_ok() {
                d.note(d.st.tip(0), "done", None);
                return finish(d, true);
            }
            let fail = Fail {
                kind: FailKind::Closure,
                tip: d.st.tip(d.st.active),
                articulations: vec![d.st.tip(0), d.st.tip(1)],
            };
            if !d.respond(&fail) {
                d.note(fail.tip, "abort", None);
                return finish(d, false);
            }
            continue;
        }
        d.states += 1;
        if d.states > max_states {
            d.note(d.st.tip(d.st.active), "abort", None);
            return finish(d, false);
        }
        d.st.begin_state();
        match d.st.advance(&mut d.ctl) {
            Ok(info) => {
                let action = if info.dead_end {
                    "dead_end"
                } else if info.attached.is_some() {
                    "attach"
                } else if info.edge.is_some() {
                    "junction"
                } else {
                    "walk"
                };
                d.note(info.tip, action, info.edge);
                d.settle(&info);
            }
            Err(fail) => {
                d.st.abandon_state();
                if !d.respond(&fail) {
                    d.note(fail.tip, "abort", None);
                    return finish(d, false);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{run_mapping, MapConfig};
    use crate::oracle::{named, validate};

    fn g(n: usize, e: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, e).unwrap()
    }

    fn recs(e: &[(usize, usize)]) -> Vec<EdgeRecord> {
        e.iter().map(|&(a, b)| EdgeRecord { a, b, sync: false }).collect()
    }

    #[test]
    fn dstar_counts_markers_per_copy() {
        let p = g(4, &[(0, 1), (1, 2), (2, 3)]);
        let mut st = ReconState::new(&p, &recs(&[(0, 1), (1, 2)]), Mode::Path, &PolicyConfig::default());
        st.recs.push(Rec { a: 3, b: 3, sync: false, alive: true, origin: Origin::Marker });
        st.recs.push(Rec { a: 3, b: 3, sync: false, alive: true, origin: Origin::Marker });
        let h = st.hstar();
        assert_eq!((h.dstar(0), h.dstar(1), h.dstar(2), h.dstar(3)), (1, 2, 1, 2));
    }

    #[test]
    fn cycle_overlay_is_walked_through() {
        let c6 = g(6, &(0..6).map(|i| (i, (i + 1) % 6)).collect::<Vec<_>>());
        let le = recs(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let out = reconstruct(&c6, &le, Mode::Circuit, 0, &PolicyConfig::default(), true);
        assert_eq!(out.status, ReconStatus::Found);
        let seq = out.sequence.unwrap();
        assert!(validate(&c6, &seq, Mode::Circuit));
        assert_eq!(out.mu_x, 1.0);
        assert_eq!(out.x1s, vec![1]);
    }

    #[test]
    fn empty_overlay_still_reconstructs() {
        let k4 = named("k4").unwrap();
        let out = reconstruct(&k4, &[], Mode::Circuit, 0, &PolicyConfig::default(), false);
        assert_eq!(out.status, ReconStatus::Found);
        assert!(validate(&k4, out.sequence.as_ref().unwrap(), Mode::Circuit));
    }

    #[test]
    fn impossible_instances_abort() {
        let star = named("star4").unwrap();
        let le = run_mapping(&star, 0, &MapConfig::default(), 0).le;
        let out = reconstruct(&star, &le, Mode::Path, 0, &PolicyConfig::default(), false);
        assert_eq!(out.status, ReconStatus::Aborted);
        assert!(out.x1s.len() <= 3);
        let pet = named("petersen").unwrap();
        let le = run_mapping(&pet, 0, &MapConfig::default(), 0).le;
        let out = reconstruct(&pet, &le, Mode::Circuit, 0, &PolicyConfig::default(), false);
        assert_eq!(out.status, ReconStatus::Aborted);
        assert!(out.x1s.len() <= 9);
    }

    #[test]
    fn bowtie_path_found() {
        let bow = named("bowtie").unwrap();
        let le = run_mapping(&bow, 0, &MapConfig::default(), 0).le;
        let out = reconstruct(&bow, &le, Mode::Path, 0, &PolicyConfig::default(), false);
        assert_eq!(out.status, ReconStatus::Found);
        assert!(validate(&bow, out.sequence.as_ref().unwrap(), Mode::Path));
    }

    #[test]
    fn undo_restores_digest() {
        let grid = crate::oracle::generate(&crate::oracle::Family::Grid { rows: 3, cols: 4 }, 0).unwrap();
        let le = run_mapping(&grid, 0, &MapConfig::default(), 0).le;
        let mut st = ReconState::new(&grid, &le, Mode::Path, &PolicyConfig::default());
        let (x1, x2) = seed(&grid, &le, 0);
        st.start(x1, x2);
        let mut digests = vec![st.digest()];
        let mut ctl = Control::default();
        while !st.complete() {
            st.begin_state();
            if st.advance(&mut ctl).is_err() {
                st.abandon_state();
                break;
            }
            digests.push(st.digest());
        }
        while let Some(f) = st.undo_states(1) {
            digests.pop();
            assert_eq!(st.digest(), *digests.last().unwrap());
            assert_eq!(f.digest, st.digest());
        }
    }

    #[test]
    fn mu_x_drops_with_removals() {
        let p = g(3, &[(0, 1), (1, 2), (0, 2)]);
        let mut st = ReconState::new(&p, &recs(&[(0, 1), (1, 2)]), Mode::Circuit, &PolicyConfig::default());
        st.start(1, 0);
        st.begin_state();
        st.remove_rec(1);
        assert!((st.mu_x() - 0.5).abs() < 1e-12);
        st.abandon_state();
        assert_eq!(st.mu_x(), 1.0);
    }
}
