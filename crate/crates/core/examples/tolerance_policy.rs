//! Rate formulas and how the tolerance ring reacts to a run of failures.

use sfcm::policy::{control_sigmoid, negativity_term, ring, Failure, PolicyConfig, PolicyState};

fn main() -> anyhow::Result<()> {
    println!("f(0) = {}", negativity_term(0.0)?);
    println!("f(0.5) = {}", negativity_term(0.5)?);
    println!("sigmoid(0) = {}", control_sigmoid(0.0));
    println!("ring(1.0, 1.5) = {}, ring(1.5, 1.5) = {}", ring(1.0, 1.5), ring(1.5, 1.5));

    let mut p = PolicyState::new(PolicyConfig::default(), 10);
    for _ in 0..4 {
        p.push_state(true);
    }
    println!("after 4 good states: gamma {:.3} t {:.3} ring {}", p.gamma, p.t, p.ring());

    let f = Failure { articulations: vec![3], region: vec![2, 3, 4], depth: 4, hidden: vec![] };
    for i in 1..=6 {
        let alive = p.push_state(false);
        let actions = p.on_failure(&f, &|a, b| a.abs_diff(b) == 1);
        println!("failure {i}: ring {} rate {:.3} -> {:?}", p.ring(), p.next_rate(), actions);
        if !alive {
            break;
        }
    }
    let (g, t) = p.recompute();
    println!("recomputed from terms: gamma {g:.12} t {t:.12}");
    println!("strategy fires {:?}", p.fires);
    Ok(())
}
