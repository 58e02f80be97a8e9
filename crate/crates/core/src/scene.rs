//! A scene is the live part of the input graph as seen from a root vertex:
//! tiers from maximum induction, the vertex labels derived from them, and
//! per-vertex bookkeeping used while mapping.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{self, Graph, VertexMask, View};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("scene is disconnected: {unreached} live vertices unreachable from root {root}")]
    Disconnected { root: usize, unreached: usize },
    #[error("root {0} is not live")]
    DeadRoot(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    MinArt,
    MinLeaf,
    ArtN,
    Degen,
    Inter,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 6] =
        [Label::MinArt, Label::MinLeaf, Label::ArtN, Label::Degen, Label::Inter, Label::Neutral];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    /// Successor priority; higher is tried first. `MinArt` is never a successor.
    pub fn priority(self) -> Option<u8> {
        match self {
            Label::MinLeaf => Some(4),
            Label::Degen => Some(3),
            Label::ArtN => Some(2),
            Label::Neutral => Some(1),
            Label::Inter => Some(0),
            Label::MinArt => None,
        }
    }
}

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(u8);

impl LabelSet {
    pub fn of(l: Label) -> Self {
        LabelSet(l.bit())
    }

    pub fn has(self, l: Label) -> bool {
        self.0 & l.bit() != 0
    }

    pub fn add(&mut self, l: Label) {
        self.0 |= l.bit();
    }

    pub fn remove(&mut self, l: Label) {
        self.0 &= !l.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_breakpoint(self) -> bool {
        self.has(Label::MinArt) || self.has(Label::MinLeaf)
    }

    pub fn iter(self) -> impl Iterator<Item = Label> {
        Label::ALL.into_iter().filter(move |&l| self.has(l))
    }

    /// The label that decides how the vertex is ranked as a successor.
    pub fn class(self) -> Option<Label> {
        self.iter().next()
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tier {
    pub index: usize,
    pub vertices: VertexMask,
    pub edges: Vec<(usize, usize)>,
}

/// Tiers plus labels for one root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub tiers: Vec<Tier>,
    pub labels: Vec<LabelSet>,
}

impl Labeling {
    pub fn count(&self, l: Label) -> usize {
        self.labels.iter().filter(|s| s.has(l)).count()
    }

    pub fn with(&self, l: Label) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(move |(_, s)| s.has(l)).map(|(v, _)| v)
    }
}

fn snapshot_tier(g: &Graph, index: usize, vertices: VertexMask) -> Tier {
    let edges = vertices
        .iter()
        .flat_map(|u| g.neighbors(u).iter().filter(move |&&w| u < w).map(move |&w| (u, w)))
        .filter(|&(_, w)| vertices.contains(w))
        .collect();
    Tier { index, vertices, edges }
}

/// Tiers of `view` from `root`: after each BFS layer is absorbed, the induced
/// graph on what is left becomes the next tier.
pub fn maximum_induction(view: View<'_>, root: usize) -> Result<Vec<Tier>, SceneError> {
    let (tiers, reached) = induce(view, root)?;
    let unreached = view.live.count() - reached.count();
    if unreached > 0 {
        return Err(SceneError::Disconnected { root, unreached });
    }
    Ok(tiers)
}

fn induce(view: View<'_>, root: usize) -> Result<(Vec<Tier>, VertexMask), SceneError> {
    if !view.live.contains(root) {
        return Err(SceneError::DeadRoot(root));
    }
    let g = view.graph;
    let mut x = VertexMask::from_vertices(g.n(), [root]);
    let mut frontier = vec![root];
    let mut tiers = Vec::new();
    loop {
        let mut next = Vec::new();
        for &a in &frontier {
            for b in view.neighbors(a) {
                if x.insert(b) {
                    next.push(b);
                }
            }
        }
        if next.is_empty() {
            return Ok((tiers, x));
        }
        let rest = view.live.minus(&x);
        if !rest.is_empty() {
            let index = tiers.len();
            tiers.push(snapshot_tier(g, index, rest));
        }
        frontier = next;
    }
}

/// Labels every live vertex of `view` from its tiers.
pub fn lv_label(view: View<'_>, tiers: &[Tier]) -> Vec<LabelSet> {
    let g = view.graph;
    let mut labels = vec![LabelSet::default(); g.n()];
    for tier in tiers {
        let arts = graph::articulations(g, &tier.vertices);
        for w in tier.vertices.iter() {
            let in_tier = g.neighbors(w).iter().filter(|&&x| tier.vertices.contains(x)).count();
            if view.degree(w) != 2 {
                if arts.contains(w) {
                    labels[w].add(Label::MinArt);
                }
                if in_tier == 1 {
                    labels[w].add(Label::MinLeaf);
                }
            } else if arts.contains(w) {
                labels[w].add(Label::ArtN);
            }
        }
    }
    for l in &mut labels {
        if l.has(Label::MinArt) {
            l.remove(Label::MinLeaf);
        }
    }
    let breakpoints: Vec<usize> = view.live.iter().filter(|&v| labels[v].is_breakpoint()).collect();
    for &b in &breakpoints {
        for w in view.neighbors(b) {
            if !labels[w].is_breakpoint() {
                labels[w] = LabelSet::of(Label::Degen);
            }
        }
    }
    let unlabeled: Vec<usize> = view.live.iter().filter(|&v| labels[v].is_empty()).collect();
    for &w in &unlabeled {
        let degen = view.neighbors(w).filter(|&x| labels[x].has(Label::Degen)).count();
        labels[w].add(if degen >= 2 { Label::Inter } else { Label::Neutral });
    }
    labels
}

/// Tiers and labels for `live` from `root`. Vertices the root cannot reach get
/// no tier and are labelled as if they sat outside every tier; lookahead
/// scenes are routinely disconnected, so this never fails.
pub fn relabel(g: &Graph, live: &VertexMask, root: usize, extra: Option<(usize, usize)>) -> Labeling {
    let view = View { graph: g, live, extra };
    let tiers = if live.contains(root) { induce(view, root).map(|(t, _)| t).unwrap_or_default() } else { Vec::new() };
    let labels = lv_label(view, &tiers);
    Labeling { tiers, labels }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentInfo {
    pub vertices: VertexMask,
    /// Articulations adjacent to the component.
    pub boundary: VertexMask,
    pub hn: usize,
    /// False when the component already existed before anything was removed.
    pub creatable: bool,
}

/// Components left once the articulations of `live - removed` are deleted,
/// compared against the components of `live` itself.
pub fn creatable_components(g: &Graph, live: &VertexMask, removed: &VertexMask) -> (VertexMask, Vec<ComponentInfo>) {
    let reduced = live.minus(removed);
    let arts = graph::articulations(g, &reduced);
    let existing = graph::components(g, live);
    let comps = graph::components(g, &reduced.minus(&arts))
        .into_iter()
        .map(|c| {
            let mut boundary = VertexMask::empty(g.n());
            for w in c.iter() {
                for &x in g.neighbors(w) {
                    if arts.contains(x) {
                        boundary.insert(x);
                    }
                }
            }
            let creatable = !existing.contains(&c);
            ComponentInfo { hn: boundary.count(), vertices: c, boundary, creatable }
        })
        .collect();
    (arts, comps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintKind {
    /// A new pendant block out of reach of both ends.
    Unreachable,
    /// The root's own component is already cut off.
    RootStranded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub component: ComponentInfo,
    pub articulations: VertexMask,
}

/// Checks the two reachability constraints for removing `v` from `live`, with
/// `anchor` as the fixed far end.
pub fn constraint_violation(g: &Graph, live: &VertexMask, v: usize, anchor: usize) -> Option<Violation> {
    let removed = VertexMask::from_vertices(g.n(), [v]);
    let (arts, comps) = creatable_components(g, live, &removed);
    if arts.is_empty() {
        return None;
    }
    let mut reach = VertexMask::from_vertices(g.n(), [v, anchor]);
    for x in [v, anchor] {
        for &w in g.neighbors(x) {
            if live.contains(w) {
                reach.insert(w);
            }
        }
    }
    for c in &comps {
        if c.creatable && c.hn == 1 && !c.vertices.intersects(&reach) {
            return Some(Violation { kind: ConstraintKind::Unreachable, component: c.clone(), articulations: arts });
        }
        if !c.creatable && c.hn == 0 && c.vertices.contains(anchor) {
            return Some(Violation { kind: ConstraintKind::RootStranded, component: c.clone(), articulations: arts });
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct Scene<'g> {
    pub graph: &'g Graph,
    pub live: VertexMask,
    pub root: usize,
    pub current: usize,
    pub labeling: Labeling,
    pub last: Vec<Option<usize>>,
    pub split: Vec<bool>,
    changed: bool,
}

impl<'g> Scene<'g> {
    pub fn new(graph: &'g Graph, live: VertexMask, root: usize) -> Result<Self, SceneError> {
        if !live.contains(root) {
            return Err(SceneError::DeadRoot(root));
        }
        let n = graph.n();
        Ok(Scene {
            graph,
            live,
            root,
            current: root,
            labeling: Labeling { tiers: Vec::new(), labels: vec![LabelSet::default(); n] },
            last: vec![None; n],
            split: vec![true; n],
            changed: false,
        })
    }

    pub fn whole(graph: &'g Graph, root: usize) -> Result<Self, SceneError> {
        Self::new(graph, graph.all(), root)
    }

    pub fn view(&self) -> View<'_> {
        View::new(self.graph, &self.live)
    }

    pub fn labels(&self) -> &[LabelSet] {
        &self.labeling.labels
    }

    pub fn tiers(&self) -> &[Tier] {
        &self.labeling.tiers
    }

    pub fn maximum_induction(&self) -> Result<Vec<Tier>, SceneError> {
        maximum_induction(self.view(), self.root)
    }

    /// Recomputes tiers and labels from the current root.
    pub fn lv_label(&mut self) -> Result<(), SceneError> {
        let tiers = self.maximum_induction()?;
        let labels = lv_label(self.view(), &tiers);
        self.labeling = Labeling { tiers, labels };
        Ok(())
    }

    /// Re-roots at `w` with `v` as the current vertex. While labelling, `v`
    /// and `w` are treated as adjacent.
    pub fn context_change(&mut self, w: usize, v: usize) -> Result<(), SceneError> {
        if !self.changed {
            self.last.iter_mut().for_each(|l| *l = None);
            self.split.iter_mut().for_each(|s| *s = true);
            self.changed = true;
        }
        self.root = w;
        self.current = v;
        let extra = (w != v && !self.graph.has_edge(v, w)).then_some((v, w));
        let view = View { graph: self.graph, live: &self.live, extra };
        let tiers = maximum_induction(view, w)?;
        let labels = lv_label(view, &tiers);
        self.labeling = Labeling { tiers, labels };
        Ok(())
    }

    pub fn virtual_articulation(&self, w: usize) -> bool {
        self.view().neighbors(w).filter(|&x| self.labeling.labels[x].has(Label::Degen)).count() >= 2
    }

    pub fn creatable_components(&self, removed: &VertexMask) -> (VertexMask, Vec<ComponentInfo>) {
        creatable_components(self.graph, &self.live, removed)
    }

    pub fn check_constraints_1_2(&self, v: usize) -> bool {
        constraint_violation(self.graph, &self.live, v, self.root).is_none()
    }
}
