use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use alert_swarm::sim::{run_experiment, RunSummary, TickMetrics};
use rayon::prelude::*;

use crate::config::validate_config;
use crate::error::{CliError, Result};
use crate::metrics_io;
use crate::summary::Summary;

pub const SUMMARY_FILE: &str = "summary.json";

/// Which seeds to run: `N` runs seeds `base..base+N` where `base` is the
/// config seed; a comma-separated list (`3,7` or `7,`) runs exactly those.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn resolve(&self, base: u64) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n).map(|k| base.wrapping_add(k)).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

impl FromStr for SeedSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = if s.contains(',') {
            let seeds = s
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.parse::<u64>()
                        .map_err(|_| CliError::Seeds(format!("{p:?} is not a seed")))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut sorted = seeds.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != seeds.len() {
                return Err(CliError::Seeds("duplicate seed in list".into()));
            }
            SeedSpec::List(seeds)
        } else {
            SeedSpec::Count(
                s.parse()
                    .map_err(|_| CliError::Seeds(format!("{s:?} is not a count")))?,
            )
        };
        match &spec {
            SeedSpec::Count(0) => Err(CliError::Seeds("at least one seed is required".into())),
            SeedSpec::List(v) if v.is_empty() => {
                Err(CliError::Seeds("at least one seed is required".into()))
            }
            _ => Ok(spec),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: PathBuf,
    pub seeds: SeedSpec,
    pub out: PathBuf,
    pub format: OutputFormat,
}

pub fn metrics_file_name(seed: u64, format: OutputFormat) -> String {
    format!("metrics_{seed}.{}", format.extension())
}

/// Runs every seed of the manifest in parallel, writes one metrics file per
/// seed and then `summary.json`.
pub fn run_command(manifest: &RunManifest) -> Result<Summary> {
    let config = validate_config(&manifest.config)?;
    let seeds = manifest.seeds.resolve(config.seed);
    fs::create_dir_all(&manifest.out).map_err(|e| CliError::io(&manifest.out, e))?;
    log::info!("running {} seed(s) of {} ticks", seeds.len(), config.ticks);

    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = config.clone();
            cfg.seed = seed;
            let record = run_experiment(&cfg).map_err(|source| CliError::Validation {
                path: manifest.config.clone(),
                source,
            })?;
            let path = manifest.out.join(metrics_file_name(seed, manifest.format));
            match manifest.format {
                OutputFormat::Csv => metrics_io::write_csv(&path, &record.series)?,
                OutputFormat::Json => metrics_io::write_json(&path, &record.series)?,
            }
            log::debug!("wrote {}", path.display());
            Ok(record.summary)
        })
        .collect::<Result<Vec<RunSummary>>>()?;

    let summary = Summary::aggregate(runs);
    write_summary(&manifest.out, &summary)?;
    Ok(summary)
}

/// Rebuilds `summary.json` from the metrics files already in `dir`.
pub fn report_command(dir: &Path) -> Result<Summary> {
    let series = read_metrics_dir(dir)?;
    if series.is_empty() {
        return Err(CliError::NoMetrics(dir.to_path_buf()));
    }
    let runs = series
        .iter()
        .map(|(&seed, rows)| RunSummary::from_series(seed, rows))
        .collect();
    let summary = Summary::aggregate(runs);
    write_summary(dir, &summary)?;
    Ok(summary)
}

/// Loads every `metrics_<seed>.{csv,json}` in `dir`, keyed by seed.
pub fn read_metrics_dir(dir: &Path) -> Result<BTreeMap<u64, Vec<TickMetrics>>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(rest) = name.strip_prefix("metrics_") else {
            continue;
        };
        let (seed, rows) = if let Some(seed) = rest.strip_suffix(".csv") {
            (
                seed,
                metrics_io::read_csv as fn(&Path) -> Result<Vec<TickMetrics>>,
            )
        } else if let Some(seed) = rest.strip_suffix(".json") {
            (
                seed,
                metrics_io::read_json as fn(&Path) -> Result<Vec<TickMetrics>>,
            )
        } else {
            continue;
        };
        let Ok(seed) = seed.parse::<u64>() else {
            continue;
        };
        if out.insert(seed, rows(&path)?).is_some() {
            return Err(CliError::metrics(
                &path,
                format!("seed {seed} appears more than once"),
            ));
        }
    }
    Ok(out)
}

fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, summary.to_json()).map_err(|e| CliError::io(&path, e))
}
