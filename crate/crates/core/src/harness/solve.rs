use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::graph::{self, Graph};
use crate::mapping::{run_mapping, MapConfig, MapStatus, MappingOutcome};
use crate::oracle::{validate, Mode};
use crate::policy::PolicyConfig;
use crate::reconstruction::{reconstruct, Rec, ReconOutcome, ReconStatus, TraceLine};

const STACK: usize = 512 << 20;

#[derive(Debug, Clone, Default)]
pub struct SolveConfig {
    pub mode: Mode,
    pub seed: u64,
    /// First root tried; later attempts go round-robin from here.
    pub root: Option<usize>,
    /// Mapping attempts; defaults to n.
    pub max_restarts: Option<usize>,
    pub policy: PolicyConfig,
    pub map: MapConfig,
    pub split_blocks: bool,
    pub trace: bool,
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Found,
    Aborted,
    MappingFailed,
}

impl SolveStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::Found => 0,
            SolveStatus::Aborted => 2,
            SolveStatus::MappingFailed => 3,
        }
    }
}

/// Field order is the serialized order.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<usize>>,
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    pub mu_x: f64,
    pub kappa_total: usize,
    pub max_epsilon: usize,
    pub expansions: usize,
    pub gamma_final: f64,
    pub t_final: f64,
    pub restarts: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
    pub strategy_fires: BTreeMap<u8, usize>,
}

/// What one mapping attempt and its reconstruction did.
#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub root: usize,
    pub seed: u64,
    pub map_status: MapStatus,
    pub kappa: usize,
    pub kappa_cap: usize,
    pub records: usize,
    pub recon: Option<ReconStatus>,
    pub expansions: usize,
    pub states: usize,
    pub drift: f64,
}

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub report: SolveReport,
    pub attempts: Vec<Attempt>,
    pub trace: Vec<TraceLine>,
    /// Final overlay of the reported reconstruction.
    pub records: Vec<Rec>,
}

fn empty_report(g: &Graph, cfg: &SolveConfig, status: SolveStatus) -> SolveReport {
    SolveReport {
        status,
        sequence: None,
        mode: cfg.mode,
        n: g.n(),
        m: g.m(),
        mu_x: 0.0,
        kappa_total: 0,
        max_epsilon: 0,
        expansions: 0,
        gamma_final: 0.0,
        t_final: 0.0,
        restarts: 0,
        seed: cfg.seed,
        elapsed_ms: None,
        strategy_fires: BTreeMap::new(),
    }
}

/// Mapping with restarts over roots, then reconstruction of each usable
/// mapping until one is found.
fn solve_whole(g: &Graph, cfg: &SolveConfig) -> SolveRun {
    let n = g.n();
    let mut report = empty_report(g, cfg, SolveStatus::MappingFailed);
    let mut run = SolveRun { report: report.clone(), attempts: Vec::new(), trace: Vec::new(), records: Vec::new() };
    if n == 1 {
        report.status = SolveStatus::Found;
        report.sequence = Some(vec![0]);
        report.mu_x = 1.0;
        run.report = report;
        return run;
    }
    let attempts = cfg.max_restarts.unwrap_or(n).max(1);
    let first = cfg.root.unwrap_or(0) % n;
    let mut failed: Vec<(usize, MappingOutcome)> = Vec::new();
    let mut last: Option<ReconOutcome> = None;
    let absorb = |report: &mut SolveReport, rec: &ReconOutcome| {
        report.expansions += rec.x1s.len();
        for (s, c) in &rec.fires {
            *report.strategy_fires.entry(*s).or_default() += c;
        }
    };
    for i in 0..attempts {
        let root = (first + i) % n;
        let seed = cfg.seed.wrapping_add(i as u64);
        let map = run_mapping(g, root, &cfg.map, seed);
        report.restarts = i;
        report.kappa_total += map.kappa;
        report.max_epsilon = report.max_epsilon.max(map.max_epsilon);
        let mut attempt = Attempt {
            root,
            seed,
            map_status: map.status,
            kappa: map.kappa,
            kappa_cap: map.m + 1,
            records: map.le.len(),
            recon: None,
            expansions: 0,
            states: 0,
            drift: 0.0,
        };
        if map.status == MapStatus::Disconnected {
            run.attempts.push(attempt);
            break;
        }
        if !map.status.usable() {
            failed.push((run.attempts.len(), map));
            run.attempts.push(attempt);
            continue;
        }
        let rec = reconstruct(g, &map.le, cfg.mode, root, &cfg.policy, cfg.trace);
        attempt.recon = Some(rec.status);
        attempt.expansions = rec.x1s.len();
        attempt.states = rec.states;
        attempt.drift = rec.drift;
        run.attempts.push(attempt);
        absorb(&mut report, &rec);
        let found = rec.status == ReconStatus::Found;
        last = Some(rec);
        if found {
            break;
        }
    }
    // nothing found yet: rebuild from the partial overlays, longest first
    if last.as_ref().is_none_or(|r| r.status != ReconStatus::Found) {
        failed.sort_by_key(|(i, map)| (std::cmp::Reverse(map.le.len()), *i));
        for (i, map) in failed {
            let rec = reconstruct(g, &map.le, cfg.mode, map.root, &cfg.policy, cfg.trace);
            let a = &mut run.attempts[i];
            a.recon = Some(rec.status);
            a.expansions = rec.x1s.len();
            a.states = rec.states;
            a.drift = rec.drift;
            absorb(&mut report, &rec);
            let found = rec.status == ReconStatus::Found;
            last = Some(rec);
            if found {
                break;
            }
        }
    }
    if let Some(rec) = last {
        report.mu_x = rec.mu_x;
        report.gamma_final = rec.gamma_final;
        report.t_final = rec.t_final;
        report.status = match rec.sequence {
            Some(seq) if validate(g, &seq, cfg.mode) => {
                report.sequence = Some(seq);
                SolveStatus::Found
            }
            _ => SolveStatus::Aborted,
        };
        run.trace = rec.trace;
        run.records = rec.records;
    }
    run.report = report;
    run
}

/// Blocks ordered along the block-cut tree when that tree is a path, each
/// with the cut vertices it shares with its neighbours.
fn block_chain(g: &Graph) -> Option<Vec<(Vec<usize>, Vec<usize>)>> {
    let cuts = graph::articulations(g, &g.all());
    let blocks = graph::blocks(g);
    let cut_of = |b: &Vec<usize>| b.iter().copied().filter(|&v| cuts.contains(v)).collect::<Vec<_>>();
    let mut pending: Vec<(Vec<usize>, Vec<usize>)> = blocks.iter().map(|b| (b.clone(), cut_of(b))).collect();
    if pending.iter().any(|(_, c)| c.len() > 2) {
        return None;
    }
    for c in cuts.iter() {
        if pending.iter().filter(|(b, _)| b.contains(&c)).count() != 2 {
            return None;
        }
    }
    let start = pending.iter().position(|(_, c)| c.len() <= 1)?;
    let mut chain = vec![pending.remove(start)];
    let mut entry: Option<usize> = None;
    while !pending.is_empty() {
        let (_, c) = chain.last().unwrap();
        let exit = c.iter().copied().find(|&x| Some(x) != entry)?;
        let next = pending.iter().position(|(b, _)| b.contains(&exit))?;
        chain.push(pending.remove(next));
        entry = Some(exit);
    }
    Some(chain)
}

/// Path mode over the block-cut chain: each block is solved with a pendant
/// vertex hung on every shared cut vertex, which forces the pieces to line up.
fn solve_split(g: &Graph, cfg: &SolveConfig) -> SolveRun {
    let Some(chain) = block_chain(g) else {
        // some cut vertex sits in three blocks, or a block holds three cuts
        let mut report = empty_report(g, cfg, SolveStatus::Aborted);
        report.mu_x = 0.0;
        return SolveRun { report, attempts: Vec::new(), trace: Vec::new(), records: Vec::new() };
    };
    let mut report = empty_report(g, cfg, SolveStatus::Found);
    let mut attempts = Vec::new();
    let mut trace = Vec::new();
    let mut records = Vec::new();
    let mut seq: Vec<usize> = Vec::new();
    let mut mu = 0.0;
    let mut entry: Option<usize> = None;
    for (i, (block, cuts)) in chain.iter().enumerate() {
        let exit = cuts.iter().copied().find(|&c| Some(c) != entry);
        let local = |v: usize| block.iter().position(|&b| b == v).unwrap();
        let mut edges: Vec<(usize, usize)> = g
            .edges()
            .filter(|&(u, v)| block.contains(&u) && block.contains(&v))
            .map(|(u, v)| (local(u), local(v)))
            .collect();
        let mut k = block.len();
        let mut ends = Vec::new();
        for c in [entry, exit].into_iter().flatten() {
            edges.push((local(c), k));
            ends.push(c);
            k += 1;
        }
        let sub = Graph::from_edges(k, &edges).expect("block subgraph is simple");
        let sub_cfg =
            SolveConfig { split_blocks: false, seed: cfg.seed.wrapping_add(i as u64), root: None, ..cfg.clone() };
        let part = solve_whole(&sub, &sub_cfg);
        report.kappa_total += part.report.kappa_total;
        report.max_epsilon = report.max_epsilon.max(part.report.max_epsilon);
        report.expansions += part.report.expansions;
        report.restarts += part.report.restarts;
        report.gamma_final = part.report.gamma_final;
        report.t_final = part.report.t_final;
        for (s, c) in &part.report.strategy_fires {
            *report.strategy_fires.entry(*s).or_default() += c;
        }
        mu += part.report.mu_x;
        attempts.extend(part.attempts);
        trace.extend(part.trace);
        let back = |v: usize| if v < block.len() { Some(block[v]) } else { None };
        records.extend(part.records.iter().filter_map(|r| Some(Rec { a: back(r.a)?, b: back(r.b)?, ..*r })));
        if part.report.status != SolveStatus::Found {
            report.status = part.report.status;
            continue;
        }
        let mut piece: Vec<usize> = part.report.sequence.unwrap().into_iter().filter_map(back).collect();
        let starts_right = match entry {
            Some(c) => piece[0] == c,
            None => exit.is_none_or(|c| *piece.last().unwrap() == c),
        };
        if !starts_right {
            piece.reverse();
        }
        if entry.is_some() {
            piece.remove(0);
        }
        seq.extend(piece);
        entry = exit;
    }
    report.mu_x = mu / chain.len() as f64;
    if report.status == SolveStatus::Found {
        if validate(g, &seq, Mode::Path) {
            report.sequence = Some(seq);
        } else {
            report.status = SolveStatus::Aborted;
        }
    }
    SolveRun { report, attempts, trace, records }
}

fn solve_inner(g: &Graph, cfg: &SolveConfig) -> SolveRun {
    let clock = Instant::now();
    let mut run = if cfg.split_blocks
        && cfg.mode == Mode::Path
        && g.n() > 2
        && g.is_connected()
        && !graph::articulations(g, &g.all()).is_empty()
    {
        solve_split(g, cfg)
    } else {
        solve_whole(g, cfg)
    };
    if cfg.timing {
        run.report.elapsed_ms = Some(clock.elapsed().as_millis() as u64);
    }
    run
}

/// Runs the full solver on a thread with a large stack; the mapping phase
/// recurses once per vertex.
pub fn solve(g: &Graph, cfg: &SolveConfig) -> SolveRun {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .name("solve".into())
            .stack_size(STACK)
            .spawn_scoped(s, || solve_inner(g, cfg))
            .expect("spawn solver thread")
            .join()
            .expect("solver thread panicked")
    })
}
