use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use canonical_snl::instance::Preset;
use canonical_snl::solver::{solve, SolverConfig};
use canonical_snl::SnlError;
use clap::Args;
use rayon::prelude::*;
use serde::Deserialize;

use crate::{read_file, write_output, CliError, CliResult};

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated presets.
    #[arg(long, value_delimiter = ',', required = true)]
    preset: Vec<Preset>,
    /// Inclusive range `a..b` or a comma-separated list.
    #[arg(long, default_value = "1..10")]
    seeds: String,
    /// Externally produced results to merge as extra columns.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Overrides the preset's linear perturbation magnitude.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    outer_max: Option<usize>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance_id: String,
    pub n: usize,
    pub m: usize,
    pub range: Option<f64>,
    pub sigma: f64,
    pub rmsd: Option<f64>,
    pub gap: Option<f64>,
    pub status: String,
    pub stage: String,
    pub time_s: f64,
}

#[derive(Debug, Deserialize)]
struct BaselineFile {
    rows: Vec<BaselineRow>,
}

#[derive(Debug, Deserialize)]
struct BaselineRow {
    instance_id: String,
    rmsd: f64,
    wall_time_s: f64,
}

pub fn parse_seeds(s: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Usage(format!("bad --seeds `{s}`; use a..b or a,b,c"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

/// `(preset, seed)` cells; the fixed two-sensor network appears once.
fn cells(presets: &[Preset], seeds: &[u64]) -> Vec<(Preset, Option<u64>)> {
    let mut out = Vec::new();
    for &p in presets {
        if p == Preset::TwoSensor {
            out.push((p, None));
        } else {
            out.extend(seeds.iter().map(|&s| (p, Some(s))));
        }
    }
    out
}

fn bench_cell(preset: Preset, seed: Option<u64>, args: &BenchArgs) -> CliResult<BenchRow> {
    let (inst, truth) = preset.instance(seed.unwrap_or(0))?;
    let gen = seed.and_then(|s| preset.generator_config(s));
    let mut cfg = SolverConfig::for_preset(preset);
    if let Some(d) = args.delta {
        cfg.delta_magnitude = d;
    }
    if let Some(o) = args.outer_max {
        cfg.outer_max = o;
    }
    let mut row = BenchRow {
        instance_id: seed.map_or_else(|| preset.to_string(), |s| format!("{preset}-{s}")),
        n: inst.n_sensors(),
        m: inst.n_anchors(),
        range: gen.as_ref().map(|g| g.radio_range),
        sigma: preset.noise_sigma(),
        rmsd: None,
        gap: None,
        status: String::new(),
        stage: String::new(),
        time_s: 0.0,
    };
    match solve(&inst, &cfg) {
        Ok(report) => {
            let report = report.with_truth(&truth)?;
            row.rmsd = report.rmsd;
            row.gap = Some(report.gap);
            row.status = report.status.as_str().to_string();
            row.stage = report.stage.as_str().to_string();
            row.time_s = report.wall_time_s;
        }
        Err(SnlError::NoInteriorStart { .. }) => row.status = "no-interior-start".into(),
        Err(e) => return Err(e.into()),
    }
    Ok(row)
}

fn load_baseline(path: &std::path::Path) -> CliResult<HashMap<String, (f64, f64)>> {
    let file: BaselineFile = serde_json::from_slice(&read_file(path)?)
        .map_err(|e| CliError::Input(format!("{}: baseline schema: {e}", path.display())))?;
    Ok(file
        .rows
        .into_iter()
        .map(|r| (r.instance_id, (r.rmsd, r.wall_time_s)))
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

pub fn to_csv(rows: &[BenchRow], baseline: Option<&HashMap<String, (f64, f64)>>) -> String {
    let mut s = String::from("instance_id,n,m,range,sigma,rmsd,gap,status,stage,time_s");
    if baseline.is_some() {
        s.push_str(",baseline_rmsd,baseline_time_s");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{:.6}",
            r.instance_id,
            r.n,
            r.m,
            r.range.map_or_else(String::new, |x| x.to_string()),
            r.sigma,
            opt(r.rmsd),
            opt(r.gap),
            r.status,
            r.stage,
            r.time_s
        );
        if let Some(b) = baseline {
            let hit = b.get(&r.instance_id);
            let _ = write!(s, ",{},{}", opt(hit.map(|h| h.0)), opt(hit.map(|h| h.1)));
        }
        s.push('\n');
    }
    s
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let seeds = parse_seeds(&args.seeds)?;
    let baseline = args.baseline.as_deref().map(load_baseline).transpose()?;
    let work = cells(&args.preset, &seeds);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let rows: Vec<BenchRow> = pool.install(|| {
        work.par_iter()
            .map(|&(p, s)| bench_cell(p, s, args))
            .collect::<CliResult<_>>()
    })?;
    write_output(
        args.output.as_deref(),
        to_csv(&rows, baseline.as_ref()).as_bytes(),
    )
}
