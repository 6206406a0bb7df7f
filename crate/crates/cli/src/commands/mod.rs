//! Command drivers. Each `cmd_*` loads inputs, calls an in-memory driver
//! returning a report, then writes tables, plots and the manifest.

mod analogs;
mod generate;
mod reduce;
mod theory;

use std::path::{Path, PathBuf};

use analog_dist::catalog::{load_catalog, Catalog, ExclusionPolicy};
use analog_dist::neighbors::SearchOptions;
use serde::Serialize;

use crate::args::{Cli, Command, ExclusionOpts, RerunCmd};
use crate::error::{CliError, CliResult};
use crate::manifest::{load_manifest, ExperimentManifest, Recorder};
use crate::output::{csv_table, svg_from_csv, PlotSpec};

pub use analogs::*;
pub use generate::*;
pub use reduce::*;
pub use theory::*;

/// Run a parsed command line. `argv` excludes the program name and is
/// recorded verbatim in the manifest.
pub fn run(cli: Cli, argv: &[String]) -> CliResult<ExperimentManifest> {
    match cli.command {
        Command::GenL63(c) => cmd_gen_l63(&c, argv),
        Command::GenSurrogate(c) => cmd_gen_surrogate(&c, argv),
        Command::TheoryCurves(c) => cmd_theory_curves(&c, argv),
        Command::FitTarget(c) => cmd_fit_target(&c, argv),
        Command::McDistances(c) => cmd_mc_distances(&c, argv),
        Command::RescaledDensity(c) => cmd_rescaled_density(&c, argv),
        Command::DmaxScan(c) => cmd_dmax_scan(&c, argv),
        Command::Cluster(c) => cmd_cluster(&c, argv),
        Command::DimStats(c) => cmd_dim_stats(&c, argv),
        Command::Rerun(c) => cmd_rerun(&c),
    }
}

pub fn parse_argv(argv: &[String]) -> CliResult<Cli> {
    use clap::Parser;
    Cli::try_parse_from(std::iter::once("analog-dist".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| CliError::Validation(e.to_string()))
}

/// Replay a manifest, optionally redirecting `--out`.
pub fn cmd_rerun(c: &RerunCmd) -> CliResult<ExperimentManifest> {
    let recorded = load_manifest(&c.manifest)?;
    let mut argv = recorded.argv.clone();
    if let Some(out) = &c.out {
        let out = out.display().to_string();
        let mut replaced = false;
        for i in 0..argv.len() {
            if argv[i] == "--out" && i + 1 < argv.len() {
                argv[i + 1] = out.clone();
                replaced = true;
            } else if argv[i].starts_with("--out=") {
                argv[i] = format!("--out={out}");
                replaced = true;
            }
        }
        if !replaced {
            return Err(CliError::Validation("recorded command has no --out to redirect".into()));
        }
    }
    let cli = parse_argv(&argv)?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(CliError::Validation("manifest records a rerun; refusing to recurse".into()));
    }
    let fresh = run(cli, &argv)?;
    if c.verify {
        let key = |m: &ExperimentManifest| m.outputs.iter().map(|o| (o.path.clone(), o.fnv1a.clone())).collect::<Vec<_>>();
        if key(&fresh) != key(&recorded) {
            return Err(CliError::Validation(format!("rerun of {} does not reproduce the recorded outputs", c.manifest.display())));
        }
        log::info!("all {} outputs reproduced", fresh.outputs.len());
    }
    Ok(fresh)
}

pub(crate) fn load(path: &Path) -> CliResult<Catalog> {
    Ok(load_catalog(path)?)
}

pub(crate) fn exclusion_policy(o: &ExclusionOpts, seed: u64) -> CliResult<ExclusionPolicy> {
    if o.exclusion_gap < 0 {
        return Err(CliError::Validation("exclusion gap must be non-negative".into()));
    }
    Ok(ExclusionPolicy { min_target_gap: o.exclusion_gap, dedup_neighbor_runs: !o.no_dedup, rng_seed: seed })
}

/// Options for analogs of catalog row `t`, always dropping the row itself.
pub(crate) fn search_for_row(c: &Catalog, t: usize, policy: ExclusionPolicy) -> SearchOptions {
    let mut policy = policy;
    policy.rng_seed = stream_seed(policy.rng_seed, 1, t as u64);
    SearchOptions::with_exclusion(policy, Some(c.time_of(t))).skipping_exact_matches()
}

/// Independent, reproducible sub-seed for stream `(a, b)`.
pub fn stream_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `n` evenly spaced row indices out of `len`; all rows when `n` is 0 or too large.
pub fn even_targets(len: usize, n: usize) -> Vec<usize> {
    if n == 0 || n >= len {
        return (0..len).collect();
    }
    (0..n).map(|i| ((2 * i + 1) * len) / (2 * n)).collect()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let (i, f) = (h.floor() as usize, h.fract());
    if i + 1 < s.len() { s[i] + f * (s[i + 1] - s[i]) } else { s[i] }
}

/// Output directory of an analysis command.
pub(crate) struct OutDir {
    dir: PathBuf,
    rec: Recorder,
}

impl OutDir {
    pub fn new<P: Serialize>(dir: &Path, command: &str, argv: &[String], params: &P, seeds: Vec<u64>) -> Self {
        let params = serde_json::to_value(params).expect("parameters serialize");
        OutDir {
            dir: dir.to_path_buf(),
            rec: Recorder::new(dir.to_path_buf(), dir.join("manifest.json"), command, argv, params, seeds),
        }
    }

    pub fn table<T: Serialize>(&mut self, file: &str, name: &str, rows: &[T]) -> CliResult<String> {
        let text = csv_table(name, rows)?;
        self.rec.write(&self.dir.join(file), text.as_bytes())?;
        Ok(text)
    }

    pub fn plot(&mut self, file: &str, csv: &str, spec: &PlotSpec) -> CliResult<()> {
        let svg = svg_from_csv(csv, spec)?;
        self.rec.write(&self.dir.join(file), svg.as_bytes())
    }

    pub fn text(&mut self, file: &str, content: &str) -> CliResult<()> {
        self.rec.write(&self.dir.join(file), content.as_bytes())
    }

    pub fn finish(self) -> CliResult<ExperimentManifest> {
        self.rec.finish()
    }
}
