//! Dense undirected graphs, vertex bitsets and the connectivity queries the
//! solver leans on (articulation points, components, BFS layers).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("self loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    OutOfRange { vertex: usize, n: usize },
}

/// Fixed-universe bitset over `0..len`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexMask {
    words: Vec<u64>,
    len: usize,
}

impl VertexMask {
    pub fn empty(len: usize) -> Self {
        VertexMask { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn full(len: usize) -> Self {
        let mut m = Self::empty(len);
        for v in 0..len {
            m.insert(v);
        }
        m
    }

    pub fn from_vertices<I: IntoIterator<Item = usize>>(len: usize, vs: I) -> Self {
        let mut m = Self::empty(len);
        for v in vs {
            m.insert(v);
        }
        m
    }

    /// Size of the universe, not the number of members.
    pub fn universe(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        v < self.len && self.words[v >> 6] >> (v & 63) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, v: usize) -> bool {
        assert!(v < self.len, "vertex {v} outside mask of size {}", self.len);
        let had = self.contains(v);
        self.words[v >> 6] |= 1 << (v & 63);
        !had
    }

    #[inline]
    pub fn remove(&mut self, v: usize) -> bool {
        if v >= self.len {
            return false;
        }
        let had = self.contains(v);
        self.words[v >> 6] &= !(1 << (v & 63));
        had
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn union_with(&mut self, other: &VertexMask) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &VertexMask) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn intersect_with(&mut self, other: &VertexMask) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn intersects(&self, other: &VertexMask) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &VertexMask) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn without(&self, v: usize) -> VertexMask {
        let mut m = self.clone();
        m.remove(v);
        m
    }

    pub fn minus(&self, other: &VertexMask) -> VertexMask {
        let mut m = self.clone();
        m.difference_with(other);
        m
    }
}

impl fmt::Debug for VertexMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    rows: Vec<VertexMask>,
    m: usize,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut rows = vec![VertexMask::empty(n); n];
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::OutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if rows[u].contains(v) {
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
            rows[u].insert(v);
            rows[v].insert(u);
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Graph { adj, rows, m: edges.len() })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn neighbor_mask(&self, v: usize) -> &VertexMask {
        &self.rows[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.rows[u].contains(v)
    }

    /// Edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn all(&self) -> VertexMask {
        VertexMask::full(self.n())
    }

    pub fn is_connected(&self) -> bool {
        components(self, &self.all()).len() == 1
    }
}

/// The subgraph induced by `live`, optionally with one extra edge that is not
/// in the underlying graph.
#[derive(Clone, Copy)]
pub struct View<'a> {
    pub graph: &'a Graph,
    pub live: &'a VertexMask,
    pub extra: Option<(usize, usize)>,
}

impl<'a> View<'a> {
    pub fn new(graph: &'a Graph, live: &'a VertexMask) -> Self {
        View { graph, live, extra: None }
    }

    fn extra_partner(&self, v: usize) -> Option<usize> {
        let (a, b) = self.extra?;
        let w = if a == v {
            b
        } else if b == v {
            a
        } else {
            return None;
        };
        (self.live.contains(w) && !self.graph.has_edge(v, w)).then_some(w)
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + 'a {
        let live = self.live;
        let extra = self.extra_partner(v);
        self.graph.neighbors(v).iter().copied().filter(move |&w| live.contains(w)).chain(extra)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.live.contains(u)
            && self.live.contains(v)
            && (self.graph.has_edge(u, v) || self.extra_partner(u) == Some(v))
    }
}

/// Articulation points of the subgraph induced by `live`, via lowpoints.
pub fn articulations(g: &Graph, live: &VertexMask) -> VertexMask {
    view_articulations(View::new(g, live))
}

pub fn view_articulations(view: View<'_>) -> VertexMask {
    let n = view.graph.n();
    let mut out = VertexMask::empty(n);
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut clock = 0;
    let nbrs: Vec<Vec<usize>> =
        (0..n).map(|v| if view.live.contains(v) { view.neighbors(v).collect() } else { Vec::new() }).collect();

    for root in view.live.iter() {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = clock;
        low[root] = clock;
        clock += 1;
        let mut root_children = 0;
        // (vertex, parent, next neighbor index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (v, parent, i) = *top;
            if i < nbrs[v].len() {
                top.2 += 1;
                let w = nbrs[v][i];
                if disc[w] == usize::MAX {
                    disc[w] = clock;
                    low[w] = clock;
                    clock += 1;
                    if v == root {
                        root_children += 1;
                    }
                    stack.push((w, v, 0));
                } else if w != parent {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if parent != usize::MAX {
                    low[parent] = low[parent].min(low[v]);
                    if parent != root && low[v] >= disc[parent] {
                        out.insert(parent);
                    }
                }
            }
        }
        if root_children >= 2 {
            out.insert(root);
        }
    }
    out
}

/// Connected components of the subgraph induced by `live`, ordered by their
/// smallest vertex.
pub fn components(g: &Graph, live: &VertexMask) -> Vec<VertexMask> {
    view_components(View::new(g, live))
}

pub fn view_components(view: View<'_>) -> Vec<VertexMask> {
    let n = view.graph.n();
    let mut seen = VertexMask::empty(n);
    let mut out = Vec::new();
    for s in view.live.iter() {
        if seen.contains(s) {
            continue;
        }
        let mut comp = VertexMask::empty(n);
        let mut stack = vec![s];
        seen.insert(s);
        while let Some(v) = stack.pop() {
            comp.insert(v);
            for w in view.neighbors(v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        out.push(comp);
    }
    out
}

pub fn component_count(g: &Graph, live: &VertexMask) -> usize {
    components(g, live).len()
}

/// Biconnected blocks of the whole graph, each sorted; isolated vertices are
/// blocks of their own.
pub fn blocks(g: &Graph) -> Vec<Vec<usize>> {
    const NONE: usize = usize::MAX;
    let n = g.n();
    let mut disc = vec![NONE; n];
    let mut low = vec![0; n];
    let mut time = 0;
    let mut out = Vec::new();
    for s in 0..n {
        if disc[s] != NONE {
            continue;
        }
        disc[s] = time;
        low[s] = time;
        time += 1;
        if g.degree(s) == 0 {
            out.push(vec![s]);
            continue;
        }
        let mut stack = vec![(s, NONE, 0usize)];
        let mut edges: Vec<(usize, usize)> = Vec::new();
        while let Some(top) = stack.last_mut() {
            let (v, parent, i) = *top;
            if i < g.degree(v) {
                top.2 += 1;
                let w = g.neighbors(v)[i];
                if disc[w] == NONE {
                    edges.push((v, w));
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, v, 0));
                } else if w != parent && disc[w] < disc[v] {
                    edges.push((v, w));
                    low[v] = low[v].min(disc[w]);
                }
                continue;
            }
            stack.pop();
            let Some(&(u, _, _)) = stack.last() else { continue };
            low[u] = low[u].min(low[v]);
            if low[v] >= disc[u] {
                let mut block = Vec::new();
                while let Some(e) = edges.pop() {
                    block.extend([e.0, e.1]);
                    if e == (u, v) {
                        break;
                    }
                }
                block.sort_unstable();
                block.dedup();
                out.push(block);
            }
        }
    }
    out
}

/// BFS layers from `root` inside `live`; each layer sorted ascending.
pub fn bfs_layers(g: &Graph, live: &VertexMask, root: usize) -> Vec<Vec<usize>> {
    view_bfs_layers(View::new(g, live), root)
}

pub fn view_bfs_layers(view: View<'_>, root: usize) -> Vec<Vec<usize>> {
    assert!(view.live.contains(root), "root {root} is not live");
    let mut seen = VertexMask::empty(view.graph.n());
    seen.insert(root);
    let mut layers = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in layers.last().unwrap() {
            for w in view.neighbors(v) {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return layers;
        }
        next.sort_unstable();
        layers.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, e: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, e).unwrap()
    }

    fn brute_articulations(g: &Graph, live: &VertexMask) -> VertexMask {
        let base = component_count(g, live);
        VertexMask::from_vertices(g.n(), live.iter().filter(|&v| component_count(g, &live.without(v)) > base))
    }

    #[test]
    fn bowtie_has_one_cut_vertex() {
        let b = g(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]);
        assert_eq!(articulations(&b, &b.all()).to_vec(), vec![2]);
    }

    #[test]
    fn cycle_has_none_path_has_inner() {
        let c6 = g(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        assert!(articulations(&c6, &c6.all()).is_empty());
        let p4 = g(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(articulations(&p4, &p4.all()).to_vec(), vec![1, 2]);
    }

    #[test]
    fn layers_on_cycle_and_star() {
        let c6 = g(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        assert_eq!(bfs_layers(&c6, &c6.all(), 0), vec![vec![0], vec![1, 5], vec![2, 4], vec![3]]);
        let star = g(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(bfs_layers(&star, &star.all(), 1), vec![vec![1], vec![0], vec![2, 3]]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::from_edges(0, &[]), Err(GraphError::Empty));
        assert_eq!(Graph::from_edges(2, &[(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert_eq!(Graph::from_edges(2, &[(0, 1), (1, 0)]), Err(GraphError::DuplicateEdge(0, 1)));
        assert_eq!(Graph::from_edges(2, &[(0, 2)]), Err(GraphError::OutOfRange { vertex: 2, n: 2 }));
    }

    #[test]
    fn extra_edge_joins_view() {
        let p = g(3, &[(0, 1)]);
        let all = p.all();
        let v = View { graph: &p, live: &all, extra: Some((1, 2)) };
        assert_eq!(view_components(v).len(), 1);
        assert!(v.adjacent(2, 1));
        assert_eq!(view_articulations(v).to_vec(), vec![1]);
    }

    #[test]
    fn masked_articulations_match_brute_force() {
        let p = g(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]);
        for drop in 0..6 {
            let live = p.all().without(drop);
            assert_eq!(articulations(&p, &live), brute_articulations(&p, &live), "drop {drop}");
        }
    }

    #[test]
    fn mask_ops() {
        let mut a = VertexMask::from_vertices(130, [1, 64, 129]);
        assert_eq!(a.count(), 3);
        assert_eq!(a.to_vec(), vec![1, 64, 129]);
        let b = VertexMask::from_vertices(130, [64]);
        assert!(a.intersects(&b) && b.is_subset(&a));
        a.difference_with(&b);
        assert_eq!(a.to_vec(), vec![1, 129]);
        assert!(!a.remove(200));
    }

    #[test]
    fn blocks_of_bowtie_and_path() {
        let bow = Graph::from_edges(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]).unwrap();
        let mut b = blocks(&bow);
        b.sort();
        assert_eq!(b, vec![vec![0, 1, 2], vec![2, 3, 4]]);
        let p = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(blocks(&p).len(), 3);
        let c = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(blocks(&c), vec![vec![0, 1, 2, 3]]);
    }
}
