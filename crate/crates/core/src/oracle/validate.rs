use crate::graph::{self, Graph, VertexMask};

use super::Mode;

/// Deletes the sequence's vertices one by one, refusing to delete a vertex
/// that would split the remaining graph or that does not follow its
/// predecessor. Accepts iff every vertex gets deleted.
///
/// A circuit also needs `last ~ first`; with one vertex the single-vertex
/// sequence counts, with two vertices there is no simple cycle.
pub fn validate(g: &Graph, seq: &[usize], mode: Mode) -> bool {
    let n = g.n();
    let mut live = g.all();
    let mut omega = graph::component_count(g, &live);
    let mut prev: Option<usize> = None;
    for &v in seq {
        if !live.contains(v) {
            break;
        }
        if prev.is_some_and(|p| !g.has_edge(p, v)) {
            break;
        }
        let after = live.without(v);
        let omega_after = graph::component_count(g, &after);
        if omega_after > omega {
            break;
        }
        live = after;
        omega = omega_after;
        prev = Some(v);
    }
    if !live.is_empty() || seq.len() != n {
        return false;
    }
    match mode {
        Mode::Path => true,
        Mode::Circuit => n == 1 || (n >= 3 && g.has_edge(seq[n - 1], seq[0])),
    }
}

/// Plain adjacency walk, used to cross-check [`validate`].
pub fn walk_is_hamiltonian(g: &Graph, seq: &[usize], mode: Mode) -> bool {
    let n = g.n();
    if seq.len() != n {
        return false;
    }
    let mut seen = VertexMask::empty(n);
    if !seq.iter().all(|&v| v < n && seen.insert(v)) {
        return false;
    }
    if !seq.windows(2).all(|w| g.has_edge(w[0], w[1])) {
        return false;
    }
    match mode {
        Mode::Path => true,
        Mode::Circuit => n == 1 || (n >= 3 && g.has_edge(seq[n - 1], seq[0])),
    }
}
