//! Checking candidate sequences, including the ways they go wrong.

use sfcm::harness::parse_edge_list;
use sfcm::oracle::{validate, Mode};

fn main() -> anyhow::Result<()> {
    let c4 = parse_edge_list("# the 4-cycle\n4 4\n0 1\n1 2\n2 3\n3 0\n")?;
    let cases: [(&[usize], Mode); 7] = [
        (&[0, 1, 2, 3], Mode::Path),
        (&[0, 1, 2, 3], Mode::Circuit),
        (&[0, 2, 1, 3], Mode::Path),
        (&[1, 2, 3], Mode::Path),
        (&[0, 1, 2, 3, 0], Mode::Circuit),
        (&[0, 1, 1, 2], Mode::Path),
        (&[0, 1, 2, 7], Mode::Path),
    ];
    for (seq, mode) in cases {
        println!("{seq:?} as {mode}: {}", validate(&c4, seq, mode));
    }
    Ok(())
}
