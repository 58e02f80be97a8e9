//! The first phase on its own: the edge records it leaves behind, the
//! error counters, and which rule admitted every step.

use sfcm::graph::Graph;
use sfcm::mapping::{run_mapping, MapConfig};
use sfcm::oracle::{generate, Family};

fn main() -> anyhow::Result<()> {
    let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)])?;
    let out = run_mapping(&k3, 0, &MapConfig::default(), 42);
    println!("K3: {:?}, records {:?}", out.status, out.le.iter().map(|r| (r.a, r.b)).collect::<Vec<_>>());

    let g = generate(&Family::PlantedCycle { n: 16, p: 0.2 }, 5)?;
    let out = run_mapping(&g, 0, &MapConfig::default(), 5);
    println!(
        "planted 16: {:?}, {} records, kappa {} of {}, eta {}, worst scene error {}",
        out.status,
        out.le.len(),
        out.kappa,
        out.m,
        out.eta,
        out.max_epsilon
    );
    for d in out.decisions.iter().take(12) {
        println!("  {} -> {} {:?} via {:?}", d.v, d.u, d.label, d.rule);
    }

    // a tight budget: the attempt gives up once the counter overflows
    let tight = MapConfig { eta: Some(1), m: Some(1) };
    let grid = generate(&Family::Grid { rows: 3, cols: 3 }, 0)?;
    let out = run_mapping(&grid, 4, &tight, 0);
    println!("grid 3x3 from the centre, m=1: {:?} (kappa {})", out.status, out.kappa);
    Ok(())
}
