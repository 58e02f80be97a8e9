//! The second phase with tracing on: the per-state JSONL lines, the final
//! overlay as Graphviz, and the share of mapped records that survived.

use sfcm::harness::{to_dot, trace_jsonl};
use sfcm::mapping::{run_mapping, MapConfig};
use sfcm::oracle::{generate, validate, Family, Mode};
use sfcm::policy::PolicyConfig;
use sfcm::reconstruction::{reconstruct, ReconStatus};

fn main() -> anyhow::Result<()> {
    let g = generate(&Family::Grid { rows: 4, cols: 4 }, 0)?;
    let map = run_mapping(&g, 0, &MapConfig::default(), 1);
    println!("mapping {:?}: {} records", map.status, map.le.len());

    let out = reconstruct(&g, &map.le, Mode::Circuit, 0, &PolicyConfig::default(), true);
    print!("{}", trace_jsonl(&out.trace));
    println!("status {:?}, mu_x {:.3}, expansions {:?}", out.status, out.mu_x, out.x1s);
    if out.status == ReconStatus::Found {
        let seq = out.sequence.as_ref().unwrap();
        assert!(validate(&g, seq, Mode::Circuit));
        println!("{}", to_dot(&g, &out.records, Some(seq)));
    }
    Ok(())
}
