//! A small benchmark suite: generator specs crossed with seeds, summarised.

use sfcm::harness::{run_suite, Suite};

fn main() -> anyhow::Result<()> {
    let manifest = r#"{
        "mode": "circuit",
        "seeds": [0, 1, 2, 3],
        "families": [
            {"family": "planted_cycle", "n": 16, "p": 0.15},
            {"family": "gnp_connected", "n": 12, "p": 0.3},
            {"family": "grid", "rows": 4, "cols": 4}
        ]
    }"#;
    let suite: Suite = serde_json::from_str(manifest)?;
    let s = run_suite(&suite, false)?;
    for e in &s.reports {
        println!("{:<28} seed {} {:?} mu_x {:.3}", e.family, e.seed, e.report.status, e.report.mu_x);
    }
    println!(
        "{} instances: {} found, {} aborted, {} mapping failed, mean mu_x {:.3}",
        s.instances, s.found, s.aborted, s.mapping_failed, s.mean_mu_x
    );
    Ok(())
}
