use thiserror::Error;

use crate::graph::{Graph, VertexMask};

use super::Mode;

pub const DEFAULT_CAP: usize = 20;
const DP_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("graph has {n} vertices, above the exact-solver cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
}

/// Exhaustive solver: bitmask DP up to 20 vertices, pruned backtracking above
/// that when the cap allows it. Witnesses are lexicographically smallest.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolver {
    pub cap: usize,
}

impl Default for ExactSolver {
    fn default() -> Self {
        ExactSolver { cap: DEFAULT_CAP }
    }
}

impl ExactSolver {
    pub fn solve(&self, g: &Graph, mode: Mode) -> Result<Option<Vec<usize>>, ExactError> {
        let n = g.n();
        if n > self.cap {
            return Err(ExactError::CapExceeded { n, cap: self.cap });
        }
        Ok(if n <= DP_LIMIT { dp_solve(g, mode) } else { backtrack_solve(g, mode) })
    }
}

fn trivial(g: &Graph, mode: Mode) -> Option<Option<Vec<usize>>> {
    match (g.n(), mode) {
        (1, _) => Some(Some(vec![0])),
        (2, Mode::Circuit) => Some(None),
        _ => None,
    }
}

/// `ends[mask]` holds the vertices at which a path covering exactly `mask`
/// can end. For circuits every path starts at vertex 0.
fn dp_table(g: &Graph, mode: Mode) -> Vec<u32> {
    let n = g.n();
    assert!(n <= DP_LIMIT, "bitmask DP limited to {DP_LIMIT} vertices");
    let nb: Vec<u32> = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |a, &w| a | 1 << w)).collect();
    let mut ends = vec![0u32; 1 << n];
    match mode {
        Mode::Path => (0..n).for_each(|v| ends[1 << v] = 1 << v),
        Mode::Circuit => ends[1] = 1,
    }
    for mask in 1usize..1 << n {
        let mut e = ends[mask];
        while e != 0 {
            let v = e.trailing_zeros() as usize;
            e &= e - 1;
            let mut out = nb[v] & !(mask as u32);
            while out != 0 {
                let u = out.trailing_zeros() as usize;
                out &= out - 1;
                ends[mask | 1 << u] |= 1 << u;
            }
        }
    }
    ends
}

pub fn dp_solve(g: &Graph, mode: Mode) -> Option<Vec<usize>> {
    if let Some(t) = trivial(g, mode) {
        return t;
    }
    let n = g.n();
    let ends = dp_table(g, mode);
    let full = (1usize << n) - 1;
    // A path over `rest` that ends at `u` read backwards is a path that starts
    // at `u`, so the table also answers "can the sequence continue with u".
    let mut seq = Vec::with_capacity(n);
    let mut rest = full;
    match mode {
        Mode::Path => {
            let first = (0..n).find(|&s| ends[full] >> s & 1 == 1)?;
            seq.push(first);
        }
        Mode::Circuit => {
            if !g.neighbors(0).iter().any(|&u| ends[full] >> u & 1 == 1) {
                return None;
            }
            seq.push(0);
            rest &= !1;
            let a1 = g.neighbors(0).iter().copied().find(|&u| ends[full] >> u & 1 == 1)?;
            seq.push(a1);
        }
    }
    while seq.len() < n {
        let cur = *seq.last().unwrap();
        rest &= !(1 << cur);
        let check = if mode == Mode::Circuit { rest | 1 } else { rest };
        let next = g.neighbors(cur).iter().copied().find(|&u| rest >> u & 1 == 1 && ends[check] >> u & 1 == 1)?;
        seq.push(next);
    }
    Some(seq)
}

struct Search<'a> {
    g: &'a Graph,
    mode: Mode,
    seq: Vec<usize>,
    rest: VertexMask,
}

impl Search<'_> {
    fn feasible(&self, cur: usize) -> bool {
        let g = self.g;
        if self.rest.is_empty() {
            return true;
        }
        let mut scope = self.rest.clone();
        scope.insert(cur);
        if self.mode == Mode::Circuit {
            scope.insert(self.seq[0]);
        }
        let mut loose = 0;
        for w in self.rest.iter() {
            let d = g.neighbors(w).iter().filter(|&&x| scope.contains(x)).count();
            match (self.mode, d) {
                (_, 0) => return false,
                (Mode::Circuit, 1) => return false,
                (Mode::Path, 1) => loose += 1,
                _ => {}
            }
        }
        if loose > 1 {
            return false;
        }
        let mut seen = VertexMask::from_vertices(g.n(), [cur]);
        let mut stack = vec![cur];
        while let Some(v) = stack.pop() {
            for &w in g.neighbors(v) {
                if scope.contains(w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        self.rest.is_subset(&seen)
    }

    fn extend(&mut self) -> bool {
        let cur = *self.seq.last().unwrap();
        if self.rest.is_empty() {
            return self.mode == Mode::Path || self.g.has_edge(cur, self.seq[0]);
        }
        if !self.feasible(cur) {
            return false;
        }
        for &u in self.g.neighbors(cur) {
            if !self.rest.contains(u) {
                continue;
            }
            self.rest.remove(u);
            self.seq.push(u);
            if self.extend() {
                return true;
            }
            self.seq.pop();
            self.rest.insert(u);
        }
        false
    }
}

/// Depth-first search in lexicographic order with connectivity and degree
/// pruning; returns the first witness found.
pub fn backtrack_solve(g: &Graph, mode: Mode) -> Option<Vec<usize>> {
    if let Some(t) = trivial(g, mode) {
        return t;
    }
    let n = g.n();
    let starts: Vec<usize> = match mode {
        Mode::Path => (0..n).collect(),
        Mode::Circuit => vec![0],
    };
    for s in starts {
        let mut search = Search { g, mode, seq: vec![s], rest: g.all().without(s) };
        if search.extend() {
            return Some(search.seq);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{named, validate};

    #[test]
    fn named_instances() {
        let both = |name: &str, mode| {
            let g = named(name).unwrap();
            let a = dp_solve(&g, mode);
            assert_eq!(a, backtrack_solve(&g, mode), "{name} {mode}");
            if let Some(p) = &a {
                assert!(validate(&g, p, mode));
            }
            a.is_some()
        };
        assert!(!both("petersen", Mode::Circuit));
        assert!(both("petersen", Mode::Path));
        assert!(both("k4", Mode::Circuit));
        assert!(!both("star4", Mode::Path));
        assert!(both("bowtie", Mode::Path));
        assert!(!both("bowtie", Mode::Circuit));
    }

    #[test]
    fn lexicographic_witness() {
        let k4 = named("k4").unwrap();
        assert_eq!(dp_solve(&k4, Mode::Circuit), Some(vec![0, 1, 2, 3]));
        let p = Graph::from_edges(4, &[(0, 2), (2, 1), (1, 3)]).unwrap();
        assert_eq!(dp_solve(&p, Mode::Path), Some(vec![0, 2, 1, 3]));
    }

    #[test]
    fn cap_is_enforced() {
        let g = crate::oracle::generate(&crate::oracle::Family::Grid { rows: 3, cols: 7 }, 0).unwrap();
        let err = ExactSolver::default().solve(&g, Mode::Path).unwrap_err();
        assert_eq!(err, ExactError::CapExceeded { n: 21, cap: 20 });
        assert!(ExactSolver { cap: 30 }.solve(&g, Mode::Path).unwrap().is_some());
    }
}
