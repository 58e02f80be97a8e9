use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub const NAMED: [&str; 5] = ["petersen", "bowtie", "k4", "star4", "spider7"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    PlantedCycle { n: usize, p: f64 },
    PlantedPath { n: usize, p: f64 },
    GnpConnected { n: usize, p: f64 },
    Grid { rows: usize, cols: usize },
    Named { name: String },
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::PlantedCycle { n, p } => format!("planted_cycle(n={n},p={p})"),
            Family::PlantedPath { n, p } => format!("planted_path(n={n},p={p})"),
            Family::GnpConnected { n, p } => format!("gnp_connected(n={n},p={p})"),
            Family::Grid { rows, cols } => format!("grid({rows}x{cols})"),
            Family::Named { name } => name.clone(),
        }
    }
}

fn check_p(p: f64) -> Result<(), GenError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GenError::InvalidParams(format!("p = {p} outside [0, 1]")))
    }
}

fn sorted(mut e: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    for x in &mut e {
        if x.0 > x.1 {
            *x = (x.1, x.0);
        }
    }
    e.sort_unstable();
    e.dedup();
    e
}

/// A hidden random Hamiltonian cycle or path plus G(n, p) noise.
fn planted(n: usize, p: f64, close: bool, rng: &mut ChaCha8Rng) -> Result<Graph, GenError> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    if close {
        edges.push((order[n - 1], order[0]));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph::from_edges(n, &sorted(edges))?)
}

pub fn generate(family: &Family, seed: u64) -> Result<Graph, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *family {
        Family::PlantedCycle { n, p } => {
            check_p(p)?;
            if n < 3 {
                return Err(GenError::InvalidParams(format!("planted cycle needs n >= 3, got {n}")));
            }
            planted(n, p, true, &mut rng)
        }
        Family::PlantedPath { n, p } => {
            check_p(p)?;
            if n < 1 {
                return Err(GenError::InvalidParams("planted path needs n >= 1".into()));
            }
            planted(n, p, false, &mut rng)
        }
        Family::GnpConnected { n, p } => {
            check_p(p)?;
            if n < 1 {
                return Err(GenError::InvalidParams("gnp needs n >= 1".into()));
            }
            for _ in 0..10_000 {
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.gen_bool(p) {
                            edges.push((u, v));
                        }
                    }
                }
                let g = Graph::from_edges(n, &edges)?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            Err(GenError::InvalidParams(format!("no connected G({n}, {p}) sample in 10000 draws")))
        }
        Family::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(GenError::InvalidParams(format!("grid {rows}x{cols} is empty")));
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Ok(Graph::from_edges(rows * cols, &sorted(edges))?)
        }
        Family::Named { ref name } => named(name),
    }
}

pub fn named(name: &str) -> Result<Graph, GenError> {
    let (n, edges): (usize, Vec<(usize, usize)>) = match name {
        "petersen" => {
            let mut e = Vec::new();
            for i in 0..5 {
                e.push((i, (i + 1) % 5));
                e.push((i, i + 5));
                e.push((5 + i, 5 + (i + 2) % 5));
            }
            (10, e)
        }
        "bowtie" => (5, vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]),
        "k4" => (4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        "star4" => (4, vec![(0, 1), (0, 2), (0, 3)]),
        "spider7" => (7, vec![(0, 1), (0, 2), (0, 3), (1, 4), (2, 5), (3, 6)]),
        other => return Err(GenError::InvalidParams(format!("unknown named graph {other:?}"))),
    };
    Ok(Graph::from_edges(n, &sorted(edges))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_petersen_shapes() {
        let g = generate(&Family::Grid { rows: 3, cols: 3 }, 0).unwrap();
        assert_eq!((g.n(), g.m()), (9, 12));
        let p = named("petersen").unwrap();
        assert_eq!((p.n(), p.m()), (10, 15));
        assert!((0..10).all(|v| p.degree(v) == 3));
    }

    #[test]
    fn seeded_generation_repeats() {
        let f = Family::PlantedCycle { n: 20, p: 0.2 };
        assert_eq!(generate(&f, 7).unwrap(), generate(&f, 7).unwrap());
        assert_ne!(generate(&f, 7).unwrap(), generate(&f, 8).unwrap());
    }

    #[test]
    fn bad_params() {
        assert!(matches!(generate(&Family::PlantedCycle { n: 5, p: 1.5 }, 0), Err(GenError::InvalidParams(_))));
        assert!(matches!(generate(&Family::PlantedCycle { n: 2, p: 0.5 }, 0), Err(GenError::InvalidParams(_))));
        assert!(matches!(named("k9"), Err(GenError::InvalidParams(_))));
        assert!(matches!(generate(&Family::Grid { rows: 0, cols: 3 }, 0), Err(GenError::InvalidParams(_))));
    }

    #[test]
    fn family_json_round_trip() {
        let f: Family = serde_json::from_str(r#"{"family":"grid","rows":4,"cols":4}"#).unwrap();
        assert_eq!(f, Family::Grid { rows: 4, cols: 4 });
        let f: Family = serde_json::from_str(r#"{"family":"planted_cycle","n":12,"p":0.15}"#).unwrap();
        assert_eq!(f, Family::PlantedCycle { n: 12, p: 0.15 });
    }
}
