use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use sfcm::harness::{self, SolveConfig};
use sfcm::mapping::MapConfig;
use sfcm::oracle::{self, ExactSolver, Family, Mode};
use sfcm::policy::PolicyConfig;

#[derive(Parser)]
#[command(name = "sfcm", version, about = "Hamiltonian path and circuit heuristic with an exact oracle")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the two-phase solver on an edge-list file.
    Solve(SolveArgs),
    /// Exhaustive answer for small graphs.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = Mode::Circuit)]
        mode: Mode,
        /// Largest vertex count the exact solver accepts.
        #[arg(long, default_value_t = oracle::DEFAULT_CAP)]
        cap: usize,
    },
    /// Check a vertex sequence against a graph.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = Mode::Circuit)]
        mode: Mode,
        /// Comma-separated vertices, e.g. "0,1,2,3".
        #[arg(long)]
        path: String,
    },
    /// Write a generated graph as an edge list.
    Gen {
        /// planted_cycle, planted_path, gnp_connected, grid or a named graph
        /// (petersen, bowtie, k4, star4, spider7).
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.15)]
        p: f64,
        /// Grid columns; rows come from --n.
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a suite manifest and write one JSON summary.
    Bench {
        /// Suite manifest; the built-in suite when omitted.
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include wall-clock time in each report.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, required_unless_present = "dump_config")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = Mode::Circuit)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First mapping root; later restarts go round-robin from it.
    #[arg(long)]
    root: Option<usize>,
    /// Mapping attempts over different roots (default n).
    #[arg(long)]
    max_restarts: Option<usize>,
    /// Policy configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Per-state JSONL trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Path mode: solve each block of a cut-vertex chain separately.
    #[arg(long)]
    split_blocks: bool,
    /// Non-canonical: per-scene error budget (default n).
    #[arg(long)]
    eta: Option<usize>,
    /// Non-canonical: attempt-wide error budget (default (n^2 - n) / 2).
    #[arg(long)]
    m: Option<usize>,
    /// Include elapsed_ms in the report (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    /// Print the default policy configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(a: SolveArgs) -> anyhow::Result<u8> {
    if a.dump_config {
        println!("{}", serde_json::to_string_pretty(&PolicyConfig::default())?);
        return Ok(0);
    }
    let input = a.input.expect("clap enforces --input");
    let g = harness::read_graph(&input)?;
    let policy = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing policy config {}", p.display()))?
        }
        None => PolicyConfig::default(),
    };
    if let Some(r) = a.root {
        if r >= g.n() {
            bail!("--root {r} is not a vertex of a {}-vertex graph", g.n());
        }
    }
    let cfg = SolveConfig {
        mode: a.mode,
        seed: a.seed,
        root: a.root,
        max_restarts: a.max_restarts,
        policy,
        map: MapConfig { eta: a.eta, m: a.m },
        split_blocks: a.split_blocks,
        trace: a.trace.is_some(),
        timing: a.timing,
    };
    let run = harness::solve(&g, &cfg);
    let json = serde_json::to_string_pretty(&run.report)? + "\n";
    print!("{json}");
    if let Some(p) = &a.json {
        write_or_print(Some(p), &json)?;
    }
    if let Some(p) = &a.dot {
        write_or_print(Some(p), &harness::to_dot(&g, &run.records, run.report.sequence.as_deref()))?;
    }
    if let Some(p) = &a.trace {
        write_or_print(Some(p), &harness::trace_jsonl(&run.trace))?;
    }
    Ok(run.report.status.exit_code() as u8)
}

fn family(name: &str, n: Option<usize>, p: f64, cols: Option<usize>) -> anyhow::Result<Family> {
    let need_n = || n.with_context(|| format!("--n is required for {name}"));
    Ok(match name {
        "planted_cycle" => Family::PlantedCycle { n: need_n()?, p },
        "planted_path" => Family::PlantedPath { n: need_n()?, p },
        "gnp_connected" | "gnp" => Family::GnpConnected { n: need_n()?, p },
        "grid" => {
            let rows = need_n()?;
            Family::Grid { rows, cols: cols.unwrap_or(rows) }
        }
        other if oracle::NAMED.contains(&other) => Family::Named { name: other.to_string() },
        other => bail!("unknown family {other:?}"),
    })
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.cmd {
        Cmd::Solve(a) => solve(a),
        Cmd::Oracle { input, mode, cap } => {
            let g = harness::read_graph(&input)?;
            match (ExactSolver { cap }).solve(&g, mode)? {
                Some(seq) => {
                    println!("found");
                    println!("{}", seq.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
                }
                None => println!("none"),
            }
            Ok(0)
        }
        Cmd::Validate { input, mode, path } => {
            let g = harness::read_graph(&input)?;
            let seq = harness::parse_sequence(&path)?;
            let ok = oracle::validate(&g, &seq, mode);
            println!("{ok}");
            Ok(if ok { 0 } else { 4 })
        }
        Cmd::Gen { family: name, n, p, cols, seed, out } => {
            let g = oracle::generate(&family(&name, n, p, cols)?, seed)?;
            write_or_print(out.as_deref(), &harness::write_edge_list(&g))?;
            Ok(0)
        }
        Cmd::Bench { suite, out, timing } => {
            let suite = match suite {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing suite {}", p.display()))?
                }
                None => harness::Suite::default(),
            };
            let summary = harness::run_suite(&suite, timing)?;
            write_or_print(out.as_deref(), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
