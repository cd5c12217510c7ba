use std::path::PathBuf;

use canonical_snl::instance::io::save_instance;
use canonical_snl::instance::{generate_instance, GeneratorConfig, Preset, Region};
use clap::Args;

use crate::{write_output, CliError, CliResult};

#[derive(Args)]
pub struct GenArgs {
    /// two-sensor, s18, s20, s50 or s200.
    #[arg(long, conflicts_with_all = ["n", "range", "region", "anchors", "sigma", "weight"])]
    preset: Option<Preset>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of sensors for a custom instance.
    #[arg(short = 'n', long)]
    n: Option<usize>,
    /// Radio range; `inf` measures every pair.
    #[arg(long)]
    range: Option<f64>,
    /// Box as lo_1,..,lo_d,hi_1,..,hi_d.
    #[arg(long, default_value = "0,0,1,1")]
    region: String,
    /// `corners`, or points separated by `;` with comma-separated coordinates.
    #[arg(long, default_value = "corners")]
    anchors: String,
    /// Standard deviation of the multiplicative distance noise.
    #[arg(long, default_value_t = 0.001)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn numbers(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number `{t}` in {what}")))
        })
        .collect()
}

pub fn parse_region(s: &str) -> CliResult<Region> {
    let v = numbers(s, "--region")?;
    if v.is_empty() || v.len() % 2 != 0 {
        return Err(CliError::Usage(format!(
            "--region needs 2d numbers (lo then hi), got {}",
            v.len()
        )));
    }
    let d = v.len() / 2;
    Ok(Region::new(v[..d].to_vec(), v[d..].to_vec()))
}

pub fn parse_anchors(s: &str, region: &Region) -> CliResult<Vec<Vec<f64>>> {
    if s == "corners" {
        return Ok(region.corners());
    }
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| numbers(p, "--anchors"))
        .collect()
}

fn config(args: &GenArgs) -> CliResult<GeneratorConfig> {
    let n = args
        .n
        .ok_or_else(|| CliError::Usage("either --preset or -n is required".into()))?;
    let range = args
        .range
        .ok_or_else(|| CliError::Usage("--range is required with -n".into()))?;
    let region = parse_region(&args.region)?;
    let anchors = parse_anchors(&args.anchors, &region)?;
    Ok(GeneratorConfig {
        n_sensors: n,
        region,
        anchors,
        radio_range: range,
        noise_sigma: args.sigma,
        seed: args.seed,
        default_weight: args.weight,
    })
}

pub fn run(args: &GenArgs) -> CliResult<()> {
    let (inst, truth) = match args.preset {
        Some(p) => p.instance(args.seed)?,
        None => generate_instance(&config(args)?)?,
    };
    write_output(args.output.as_deref(), &save_instance(&inst, Some(&truth)))
}
