//! File formats, run orchestration and reporting around the two phases.

pub mod bench;
pub mod dot;
pub mod io;
pub mod solve;

use crate::reconstruction::TraceLine;

pub use bench::{run_suite, BenchSummary, Suite};
pub use dot::to_dot;
pub use io::{parse_edge_list, parse_sequence, read_graph, write_edge_list, ParseError};
pub use solve::{solve, Attempt, SolveConfig, SolveReport, SolveRun, SolveStatus};

/// One JSON object per line.
pub fn trace_jsonl(lines: &[TraceLine]) -> String {
    let mut s = String::new();
    for l in lines {
        s.push_str(&serde_json::to_string(l).expect("trace lines serialize"));
        s.push('\n');
    }
    s
}
