//! Path mode, on graphs with cut vertices and leaves, with and without
//! solving block by block.

use sfcm::graph::{articulations, blocks, Graph};
use sfcm::harness::{solve, SolveConfig};
use sfcm::oracle::{generate, validate, Family, Mode};

fn show(name: &str, g: &Graph, split_blocks: bool) {
    let cfg = SolveConfig { mode: Mode::Path, split_blocks, ..SolveConfig::default() };
    let r = solve(g, &cfg).report;
    let ok = r.sequence.as_ref().is_some_and(|s| validate(g, s, Mode::Path));
    println!("{name:<24} split={split_blocks:<5} {:?} {:?} valid={ok}", r.status, r.sequence);
}

fn main() -> anyhow::Result<()> {
    // three triangles glued in a row at vertices 2 and 4
    let chain = Graph::from_edges(7, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4), (4, 5), (5, 6), (4, 6)])?;
    println!("blocks {:?}, cut vertices {:?}", blocks(&chain), articulations(&chain, &chain.all()).to_vec());
    show("triangle chain", &chain, false);
    show("triangle chain", &chain, true);

    // a cut vertex shared by three blocks: no Hamiltonian path
    let spider = sfcm::oracle::named("spider7")?;
    show("spider", &spider, false);
    show("spider", &spider, true);

    for seed in 0..4 {
        let g = generate(&Family::PlantedPath { n: 20, p: 0.08 }, seed)?;
        let leaves = (0..g.n()).filter(|&v| g.degree(v) == 1).count();
        show(&format!("planted path #{seed} ({leaves} leaves)"), &g, false);
    }
    Ok(())
}
