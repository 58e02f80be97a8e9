//! First phase: a bounded recursive walk from the root that records which
//! graph edges it used. The result is an overlay of at most two records per
//! vertex that the reconstruction phase turns into a Hamiltonian sequence.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::{self, Graph, VertexMask};
use crate::scene::{self, relabel, Label, Labeling, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct EdgeRecord {
    pub a: usize,
    pub b: usize,
    pub sync: bool,
}

impl EdgeRecord {
    pub fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }

    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    pub fn same_pair(&self, a: usize, b: usize) -> bool {
        (self.a == a && self.b == b) || (self.a == b && self.b == a)
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct MapConfig {
    /// Error budget per scene before it is discarded; defaults to n.
    pub eta: Option<usize>,
    /// Error budget for the whole attempt; defaults to (n^2 - n) / 2.
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapStatus {
    /// The walk came back to the root with every vertex consumed.
    Complete,
    /// The walk stopped at a vertex with no live neighbours.
    Incomplete,
    /// The attempt-wide error budget overflowed.
    Aborted,
    /// The outermost scene used up its error budget.
    Discarded,
    /// Every candidate at the outermost level failed.
    Failed,
    /// The initial scene is disconnected.
    Disconnected,
}

impl MapStatus {
    pub fn usable(self) -> bool {
        matches!(self, MapStatus::Complete | MapStatus::Incomplete)
    }
}

/// Which rule admitted a successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    /// Degenerate vertex next to a cut vertex with no cut-vertex neighbours.
    LoneArticulation,
    /// Following the forced chain frees a cut vertex.
    ChainFrees,
    /// Leaf whose forced chain frees a cut vertex.
    LeafFrees,
    /// Degenerate vertex outside the tier that its cut vertex splits.
    OutsideTier,
    /// Degenerate vertex paired with a leaf it can take next.
    LeafPair,
    /// Forced chain ends next to a leaf that can be taken.
    ChainToLeaf,
    /// Its cut vertex is not held by two degenerate neighbours.
    WeakArticulation,
    /// No cut vertices remain.
    NoArticulations,
    /// Leaf taken right after its degenerate partner.
    AfterPartner,
    /// Fallback for unconstrained labels.
    Fallback,
    /// The final step back to the root.
    CloseToRoot,
    /// Base case.
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub v: usize,
    pub u: usize,
    pub label: Option<Label>,
    pub rule: Rule,
}

#[derive(Debug, Clone, Serialize)]
pub struct MappingOutcome {
    pub status: MapStatus,
    pub root: usize,
    pub le: Vec<EdgeRecord>,
    pub kappa: usize,
    pub m: usize,
    pub eta: usize,
    pub max_epsilon: usize,
    pub selects: usize,
    pub visited: Vec<usize>,
    pub decisions: Vec<Decision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Signal {
    Error,
    /// Unwind to the scene below this depth.
    Discard(usize),
    Abort,
}

struct Checkpoint<'g> {
    scene: Scene<'g>,
    le: Vec<EdgeRecord>,
    visited: VertexMask,
    selects: usize,
    decisions: usize,
    base: bool,
}

pub struct MappingState<'g> {
    g: &'g Graph,
    pub eta: usize,
    pub m: usize,
    pub kappa: usize,
    eps: Vec<usize>,
    pub max_epsilon: usize,
    pub visited: VertexMask,
    pub le: Vec<EdgeRecord>,
    pub selects: usize,
    pub decisions: Vec<Decision>,
    rng: ChaCha8Rng,
    base: bool,
}

impl<'g> MappingState<'g> {
    pub fn new(g: &'g Graph, cfg: &MapConfig, seed: u64) -> Self {
        let n = g.n();
        MappingState {
            g,
            eta: cfg.eta.unwrap_or(n),
            m: cfg.m.unwrap_or((n * n - n) / 2),
            kappa: 0,
            eps: Vec::new(),
            max_epsilon: 0,
            visited: VertexMask::empty(n),
            le: Vec::new(),
            selects: 0,
            decisions: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            base: false,
        }
    }

    fn sync_error(&mut self, throw: bool) -> Result<(), Signal> {
        let depth = self.eps.len() - 1;
        self.eps[depth] += 1;
        self.kappa += 1;
        self.max_epsilon = self.max_epsilon.max(self.eps[depth]);
        if self.kappa > self.m {
            Err(Signal::Abort)
        } else if self.eps[depth] > self.eta {
            Err(Signal::Discard(depth))
        } else if throw {
            Err(Signal::Error)
        } else {
            Ok(())
        }
    }

    fn checkpoint(&self, h: &Scene<'g>) -> Checkpoint<'g> {
        Checkpoint {
            scene: h.clone(),
            le: self.le.clone(),
            visited: self.visited.clone(),
            selects: self.selects,
            decisions: self.decisions.len(),
            base: self.base,
        }
    }

    fn restore(&mut self, h: &mut Scene<'g>, cp: Checkpoint<'g>) {
        *h = cp.scene;
        self.le = cp.le;
        self.visited = cp.visited;
        self.selects = cp.selects;
        self.decisions.truncate(cp.decisions);
        self.base = cp.base;
    }

    fn incidence(&self, v: usize) -> usize {
        self.le.iter().filter(|r| r.touches(v)).count()
    }

    fn push_record(&mut self, a: usize, b: usize) {
        debug_assert!(self.g.has_edge(a, b));
        if self.le.iter().any(|r| r.same_pair(a, b)) {
            return;
        }
        self.le.push(EdgeRecord { a, b, sync: false });
        for x in [a, b] {
            while self.incidence(x) > 2 {
                let oldest = self.le.iter().position(|r| r.touches(x)).unwrap();
                self.le.remove(oldest);
            }
        }
    }

    fn select(&mut self, h: &mut Scene<'g>, v: usize, u: usize, label: Option<Label>, rule: Rule) {
        h.live.remove(v);
        self.visited.insert(v);
        self.selects += 1;
        if v == h.root {
            h.live.insert(v);
        }
        if let Some(l) = h.last[v] {
            if self.g.has_edge(l, v) {
                self.push_record(l, v);
            }
        }
        h.last[u] = Some(v);
        self.decisions.push(Decision { v, u, label, rule });
    }

    fn map(&mut self, h: &mut Scene<'g>, v: usize) -> Result<(), Signal> {
        if h.live.count() == 1 {
            self.select(h, v, v, None, Rule::Base);
            if self.eps.len() == 1 {
                self.base = true;
            }
            return Ok(());
        }
        if h.split[v] {
            let arts = graph::articulations(self.g, &h.live.without(v));
            if !arts.is_empty() {
                return self.split_off(h, v);
            }
        }
        if h.view().degree(v) == 0 {
            h.live.remove(v);
            return Ok(());
        }
        h.split[v] = false;
        for (u, label, rule) in self.rank_successors(h, v) {
            let cp = self.checkpoint(h);
            self.select(h, v, u, label, rule);
            match self.map(h, u) {
                Ok(()) => return Ok(()),
                Err(Signal::Error) => {
                    self.restore(h, cp);
                    self.sync_error(false)?;
                }
                Err(other) => return Err(other),
            }
        }
        self.sync_error(true)
    }

    /// Removing `v` leaves cut vertices: map the pendant piece on the root's
    /// side as its own scene, then carry on from `v` with the piece's cut
    /// vertex as the new root.
    fn split_off(&mut self, h: &mut Scene<'g>, v: usize) -> Result<(), Signal> {
        let g = self.g;
        let depth = self.eps.len() - 1;
        let v0 = h.root;
        if scene::constraint_violation(g, &h.live, v, v0).is_some() {
            return self.sync_error(true);
        }
        let (_, comps) = h.creatable_components(&VertexMask::from_vertices(g.n(), [v]));
        let mut reach = VertexMask::from_vertices(g.n(), [v0]);
        h.view().neighbors(v0).for_each(|w| {
            reach.insert(w);
        });
        let piece = comps
            .iter()
            .filter(|c| c.creatable && c.hn == 1 && c.vertices.intersects(&reach))
            .min_by_key(|c| (!c.vertices.contains(v0), c.boundary.first() == Some(v0)));
        let Some(piece) = piece else {
            return self.sync_error(true);
        };
        let beta = piece.boundary.first().unwrap();
        let mut star_live = piece.vertices.clone();
        star_live.insert(v0);
        star_live.insert(beta);
        h.live.remove(v);

        let result = (|| {
            let mut star = Scene::new(g, star_live.clone(), beta).map_err(|_| Signal::Error)?;
            star.context_change(beta, v0).map_err(|_| Signal::Error)?;
            let first = self.decisions.len();
            self.eps.push(0);
            let r = self.map(&mut star, v0);
            self.eps.pop();
            r?;
            // everything consumed inside the piece, its root included
            for i in first..self.decisions.len() {
                h.live.remove(self.decisions[i].v);
            }
            if h.live.contains(beta) {
                h.split[v] = false;
            }
            h.live.insert(v);
            h.live.insert(beta);
            h.context_change(beta, v).map_err(|_| Signal::Error)?;
            self.map(h, v)?;
            if h.live.contains(v) && h.view().degree(v) == 0 {
                h.live.remove(v);
            }
            Ok(())
        })();
        match result {
            Err(Signal::Error) => self.sync_error(true),
            Err(Signal::Discard(d)) if d > depth => self.sync_error(true),
            other => other,
        }
    }

    /// Admissible successors of `v`, best first; ties are shuffled.
    fn rank_successors(&mut self, h: &Scene<'g>, v: usize) -> Vec<(usize, Option<Label>, Rule)> {
        let g = self.g;
        let root = h.root;
        let view = h.view();
        if v != root && view.adjacent(v, root) && h.live.count() == 2 && view.degree(v) == 1 && view.degree(root) == 1 {
            return vec![(root, h.labels()[root].class(), Rule::CloseToRoot)];
        }
        let reduced = if v == root { h.live.clone() } else { h.live.without(v) };
        let lab = relabel(g, &reduced, root, None);
        let look = Lookahead { g, live: &reduced, root, lab: &lab };
        let v_degen = h.labels()[v].has(Label::Degen);
        let mut buckets: [Vec<(usize, Option<Label>, Rule)>; 5] = Default::default();
        for u in view.neighbors(v) {
            if u == root {
                continue;
            }
            let class = lab.labels[u].class();
            if let Some(rule) = look.admits(u, v_degen) {
                let p = class.and_then(Label::priority).unwrap_or(0) as usize;
                buckets[p].push((u, class, rule));
            }
        }
        let mut out = Vec::new();
        for b in buckets.iter_mut().rev() {
            b.shuffle(&mut self.rng);
            out.append(b);
        }
        out
    }
}

/// Successor rules evaluated on the scene as it would be after leaving `v`.
pub struct Lookahead<'a> {
    pub g: &'a Graph,
    pub live: &'a VertexMask,
    pub root: usize,
    pub lab: &'a Labeling,
}

impl Lookahead<'_> {
    fn live_neighbors<'b>(&'b self, v: usize, live: &'b VertexMask) -> impl Iterator<Item = usize> + 'b {
        self.g.neighbors(v).iter().copied().filter(move |&w| live.contains(w))
    }

    fn has(&self, v: usize, l: Label) -> bool {
        self.lab.labels[v].has(l)
    }

    /// Maximal run of degree-2 vertices leading away from `start`.
    pub fn chain(&self, start: usize, live: &VertexMask) -> Vec<usize> {
        let mut path = vec![start];
        let mut on = VertexMask::from_vertices(self.g.n(), [start]);
        loop {
            let cur = *path.last().unwrap();
            let next: Vec<usize> = self
                .live_neighbors(cur, live)
                .filter(|&w| !on.contains(w) && self.live_neighbors(w, live).count() == 2)
                .collect();
            if next.len() != 1 {
                return path;
            }
            on.insert(next[0]);
            path.push(next[0]);
        }
    }

    /// Does taking the chain from `start` turn some cut vertex next to the
    /// chain's end back into an ordinary vertex?
    fn chain_frees(&self, start: usize, live: &VertexMask, lab: &Labeling) -> bool {
        let path = self.chain(start, live);
        let end = *path.last().unwrap();
        let on = VertexMask::from_vertices(self.g.n(), path.iter().copied());
        let targets: Vec<usize> =
            self.live_neighbors(end, live).filter(|&a| !on.contains(a) && lab.labels[a].has(Label::MinArt)).collect();
        if targets.is_empty() {
            return false;
        }
        let rest = live.minus(&on);
        let after = relabel(self.g, &rest, self.root, None);
        targets.iter().any(|&a| !after.labels[a].is_breakpoint())
    }

    fn leaf_ok(&self, l: usize) -> bool {
        self.chain_frees(l, self.live, self.lab)
    }

    pub fn admits(&self, u: usize, after_degen: bool) -> Option<Rule> {
        match self.lab.labels[u].class()? {
            Label::MinArt => None,
            Label::MinLeaf => {
                if self.leaf_ok(u) {
                    Some(Rule::LeafFrees)
                } else if after_degen {
                    Some(Rule::AfterPartner)
                } else {
                    None
                }
            }
            Label::Degen => self.degen_rule(u),
            Label::ArtN | Label::Inter | Label::Neutral => Some(Rule::Fallback),
        }
    }

    fn degen_rule(&self, u: usize) -> Option<Rule> {
        if self.lab.count(Label::MinArt) == 0 {
            return Some(Rule::NoArticulations);
        }
        let arts: Vec<usize> = self.live_neighbors(u, self.live).filter(|&a| self.has(a, Label::MinArt)).collect();
        if arts.iter().any(|&a| !self.live_neighbors(a, self.live).any(|x| self.has(x, Label::MinArt))) {
            return Some(Rule::LoneArticulation);
        }
        let degen_count = |a: usize, live: &VertexMask, lab: &Labeling| {
            self.live_neighbors(a, live).filter(|&x| lab.labels[x].has(Label::Degen)).count()
        };
        if arts.iter().any(|&a| degen_count(a, self.live, self.lab) < 2) {
            return Some(Rule::WeakArticulation);
        }
        if arts.len() == 1 {
            let a = arts[0];
            let tier = self
                .lab
                .tiers
                .iter()
                .rev()
                .find(|t| t.vertices.contains(a) && graph::articulations(self.g, &t.vertices).contains(a));
            if tier.is_some_and(|t| !t.vertices.contains(u)) {
                return Some(Rule::OutsideTier);
            }
        }
        let without_u = self.live.without(u);
        let lab_u = relabel(self.g, &without_u, self.root, None);
        if arts.iter().any(|&a| degen_count(a, &without_u, &lab_u) < 2) {
            return Some(Rule::WeakArticulation);
        }
        let after_u = Lookahead { g: self.g, live: &without_u, root: self.root, lab: &lab_u };
        if self
            .live_neighbors(u, self.live)
            .any(|l| self.has(l, Label::MinLeaf) && lab_u.labels[l].has(Label::MinLeaf) && after_u.leaf_ok(l))
        {
            return Some(Rule::LeafPair);
        }
        if self.chain_frees(u, self.live, self.lab) {
            return Some(Rule::ChainFrees);
        }
        let path = self.chain(u, self.live);
        let end = *path.last().unwrap();
        let on = VertexMask::from_vertices(self.g.n(), path.iter().copied());
        let rest = self.live.minus(&on);
        let leaves: Vec<usize> =
            self.live_neighbors(end, self.live).filter(|&l| !on.contains(l) && self.has(l, Label::MinLeaf)).collect();
        if !leaves.is_empty() {
            let lab_rest = relabel(self.g, &rest, self.root, None);
            let after = Lookahead { g: self.g, live: &rest, root: self.root, lab: &lab_rest };
            if leaves.iter().any(|&l| lab_rest.labels[l].has(Label::MinLeaf) && after.leaf_ok(l)) {
                return Some(Rule::ChainToLeaf);
            }
        }
        None
    }
}

/// Runs one mapping attempt from `root`.
pub fn run_mapping(g: &Graph, root: usize, cfg: &MapConfig, seed: u64) -> MappingOutcome {
    let mut st = MappingState::new(g, cfg, seed);
    let mut h = Scene::whole(g, root).expect("root in range");
    let status = match h.context_change(root, root) {
        Err(_) => MapStatus::Disconnected,
        Ok(()) => {
            st.eps.push(0);
            match st.map(&mut h, root) {
                Ok(()) if st.base => MapStatus::Complete,
                Ok(()) => MapStatus::Incomplete,
                Err(Signal::Abort) => MapStatus::Aborted,
                Err(Signal::Discard(_)) => MapStatus::Discarded,
                Err(Signal::Error) => MapStatus::Failed,
            }
        }
    };
    MappingOutcome {
        status,
        root,
        le: st.le,
        kappa: st.kappa,
        m: st.m,
        eta: st.eta,
        max_epsilon: st.max_epsilon,
        selects: st.selects,
        visited: st.visited.to_vec(),
        decisions: st.decisions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, e: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, e).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        g(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    fn incidence_ok(g: &Graph, le: &[EdgeRecord]) -> bool {
        (0..g.n()).all(|v| le.iter().filter(|r| r.touches(v)).count() <= 2) && le.iter().all(|r| g.has_edge(r.a, r.b))
    }

    #[test]
    fn triangle_closes_on_root() {
        let k3 = cycle(3);
        for seed in 0..8 {
            let out = run_mapping(&k3, 0, &MapConfig::default(), seed);
            assert_eq!(out.status, MapStatus::Complete);
            assert_eq!(out.le.len(), 3, "the base case records the closing edge");
            assert!(incidence_ok(&k3, &out.le));
            assert_eq!(out.kappa, 0);
        }
    }

    #[test]
    fn hexagon_maps_every_vertex() {
        let c6 = cycle(6);
        let out = run_mapping(&c6, 0, &MapConfig::default(), 1);
        assert_eq!(out.status, MapStatus::Complete);
        assert_eq!(out.le.len(), 6);
        assert!(incidence_ok(&c6, &out.le));
        assert_eq!(out.visited.len(), 6);
    }

    #[test]
    fn disjoint_edges_fail_at_start() {
        let two = g(4, &[(0, 1), (2, 3)]);
        let out = run_mapping(&two, 0, &MapConfig::default(), 0);
        assert_eq!(out.status, MapStatus::Disconnected);
        assert!(out.le.is_empty());
    }

    #[test]
    fn single_vertex_is_base_case() {
        let k1 = g(1, &[]);
        let out = run_mapping(&k1, 0, &MapConfig::default(), 0);
        assert_eq!(out.status, MapStatus::Complete);
        assert!(out.le.is_empty());
    }

    #[test]
    fn error_budget_aborts_one_past_m() {
        // a star has no closed walk; with a tiny budget the attempt must
        // overflow exactly one past it
        let star = g(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 2)]);
        let out = run_mapping(&star, 1, &MapConfig { eta: Some(100), m: Some(2) }, 0);
        assert!(out.kappa <= 3);
        if out.status == MapStatus::Aborted {
            assert_eq!(out.kappa, 3);
        }
    }

    #[test]
    fn min_art_never_chosen() {
        let sp = crate::oracle::named("spider7").unwrap();
        for root in 0..7 {
            let out = run_mapping(&sp, root, &MapConfig::default(), 3);
            assert!(out.decisions.iter().all(|d| d.label != Some(Label::MinArt)));
            assert!(incidence_ok(&sp, &out.le));
        }
    }

    #[test]
    fn chain_follows_degree_two_run() {
        let p = g(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 5)]);
        let live = p.all();
        let lab = relabel(&p, &live, 0, None);
        let look = Lookahead { g: &p, live: &live, root: 0, lab: &lab };
        assert_eq!(look.chain(0, &live), vec![0, 1]);
        assert_eq!(look.chain(3, &live), vec![3, 4, 5]);
    }
}
