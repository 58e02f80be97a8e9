//! The exhaustive solvers: bitmask DP and pruned backtracking agree, and both
//! return the lexicographically smallest witness.

use sfcm::oracle::{backtrack_solve, dp_solve, generate, named, ExactSolver, Family, Mode, NAMED};

fn main() -> anyhow::Result<()> {
    for name in NAMED {
        let g = named(name)?;
        for mode in [Mode::Path, Mode::Circuit] {
            let dp = dp_solve(&g, mode);
            assert_eq!(dp, backtrack_solve(&g, mode));
            println!("{name:<9} {mode:<7} {:?}", dp);
        }
    }

    let grid = generate(&Family::Grid { rows: 4, cols: 4 }, 0)?;
    println!("grid 4x4 circuit: {:?}", ExactSolver::default().solve(&grid, Mode::Circuit)?);

    // above the default cap the solver refuses instead of running for ages
    let big = generate(&Family::Grid { rows: 5, cols: 5 }, 0)?;
    match ExactSolver::default().solve(&big, Mode::Path) {
        Ok(_) => unreachable!(),
        Err(e) => println!("grid 5x5: {e}"),
    }
    println!("grid 5x5 with a raised cap: {:?}", ExactSolver { cap: 25 }.solve(&big, Mode::Path)?.is_some());
    Ok(())
}
