//! Plant a Hamiltonian circuit in a random graph and let the solver find one.
//!
//!     cargo run --example solve_circuit -- 24 0.15 7

use sfcm::harness::{solve, SolveConfig, SolveStatus};
use sfcm::oracle::{generate, validate, Family, Mode};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(24), |s| s.parse())?;
    let p: f64 = args.next().map_or(Ok(0.15), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;

    let g = generate(&Family::PlantedCycle { n, p }, seed)?;
    println!("graph: {} vertices, {} edges", g.n(), g.m());

    let run = solve(&g, &SolveConfig { mode: Mode::Circuit, seed, ..SolveConfig::default() });
    println!("{}", serde_json::to_string_pretty(&run.report)?);

    for a in &run.attempts {
        println!(
            "root {:>2}: mapping {:?} with {} records (kappa {}/{}), reconstruction {:?} after {} states",
            a.root, a.map_status, a.records, a.kappa, a.kappa_cap, a.recon, a.states
        );
    }
    if run.report.status == SolveStatus::Found {
        let seq = run.report.sequence.as_ref().unwrap();
        assert!(validate(&g, seq, Mode::Circuit));
        println!("circuit checked: {seq:?} closes back on {}", seq[0]);
    }
    Ok(())
}
