//! Tiers and vertex labels of a rooted scene, and the two reachability
//! constraints on removing a vertex.

use sfcm::graph::Graph;
use sfcm::oracle::named;
use sfcm::scene::{constraint_violation, Label, Scene};

fn describe(name: &str, g: &Graph, root: usize) -> anyhow::Result<()> {
    let scene = Scene::whole(g, root)?;
    println!("{name}, root {root}");
    for t in scene.maximum_induction()? {
        println!("  tier {}: {:?} edges {:?}", t.index, t.vertices, t.edges);
    }
    let mut h = scene.clone();
    h.lv_label()?;
    for (v, set) in h.labels().iter().enumerate() {
        if !set.is_empty() {
            println!("  {v}: {:?}", set.iter().collect::<Vec<Label>>());
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let path = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)])?;
    describe("path 0-4", &path, 0)?;
    describe("spider", &named("spider7")?, 0)?;
    let c6 = Graph::from_edges(6, &(0..6).map(|i| (i, (i + 1) % 6)).collect::<Vec<_>>())?;
    describe("6-cycle", &c6, 0)?;

    // removing 0 from the path leaves {4} as a pendant piece nothing reaches
    let all = path.all();
    println!("path: remove 0 anchored at 0 -> {:?}", constraint_violation(&path, &all, 0, 0));
    println!("6-cycle: remove 0 anchored at 3 -> {:?}", constraint_violation(&c6, &c6.all(), 0, 3));
    Ok(())
}
