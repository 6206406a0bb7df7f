use std::path::PathBuf;

use analog_dist::catalog::{write_catalog, Catalog};
use analog_dist::lorenz::{generate_trajectory, TrajectoryConfig};
use analog_dist::surrogate::{generate_surrogate, SurrogateConfig};
use serde::Serialize;

use crate::args::{GenL63Cmd, GenL63Opts, GenSurrogateCmd, GenSurrogateOpts};
use crate::error::{CliError, CliResult};
use crate::manifest::{ExperimentManifest, Recorder};

pub fn l63_catalog(o: &GenL63Opts) -> CliResult<Catalog> {
    let cfg = TrajectoryConfig {
        dt: o.dt,
        n_states: o.n as usize,
        burn_in: o.burn_in,
        stride: o.stride,
        jitter: o.jitter,
        seed: o.seed,
        ..Default::default()
    };
    Ok(generate_trajectory(&cfg)?.into_catalog("lorenz63"))
}

pub fn surrogate_config(o: &GenSurrogateOpts) -> SurrogateConfig {
    SurrogateConfig {
        n_modes: o.modes,
        grid_points: o.grid,
        n_fields: o.fields,
        n_states: o.n as usize,
        stride_hours: o.stride_hours,
        noise: o.noise,
        amplitude_decay: o.amplitude_decay,
        phase_diffusion: o.phase_diffusion,
        seed: o.seed,
    }
}

pub fn surrogate_catalog(o: &GenSurrogateOpts) -> CliResult<Catalog> {
    Ok(generate_surrogate(&surrogate_config(o))?)
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogSummary {
    pub len: usize,
    pub dim: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn summarize(c: &Catalog) -> CatalogSummary {
    let (l, d) = (c.len(), c.dim());
    let mut s = CatalogSummary {
        len: l,
        dim: d,
        mean: vec![0.0; d],
        std: vec![0.0; d],
        min: vec![f64::INFINITY; d],
        max: vec![f64::NEG_INFINITY; d],
    };
    for row in c.rows() {
        for j in 0..d {
            s.mean[j] += row[j];
            s.min[j] = s.min[j].min(row[j]);
            s.max[j] = s.max[j].max(row[j]);
        }
    }
    s.mean.iter_mut().for_each(|m| *m /= l as f64);
    for row in c.rows() {
        for j in 0..d {
            s.std[j] += (row[j] - s.mean[j]).powi(2);
        }
    }
    s.std.iter_mut().for_each(|v| *v = (*v / (l.max(2) - 1) as f64).sqrt());
    s
}

fn print_summary(s: &CatalogSummary) {
    println!("L = {}, D = {}", s.len, s.dim);
    let shown = s.dim.min(8);
    for j in 0..shown {
        println!("  x{}: mean {:.4}  std {:.4}  min {:.4}  max {:.4}", j + 1, s.mean[j], s.std[j], s.min[j], s.max[j]);
    }
    if s.dim > shown {
        println!("  ... {} more coordinates", s.dim - shown);
    }
}

fn write_generated<P: Serialize>(
    out: &PathBuf,
    command: &str,
    argv: &[String],
    params: &P,
    seed: u64,
    c: &Catalog,
) -> CliResult<ExperimentManifest> {
    let mut bytes = Vec::new();
    write_catalog(c, &mut bytes).map_err(|e| CliError::io(out, e))?;
    let root = out.parent().map(PathBuf::from).unwrap_or_default();
    let mut manifest_path = out.clone().into_os_string();
    manifest_path.push(".manifest.json");
    let params = serde_json::to_value(params).expect("parameters serialize");
    let mut rec = Recorder::new(root, manifest_path.into(), command, argv, params, vec![seed]);
    rec.write(out, &bytes)?;
    print_summary(&summarize(c));
    rec.finish()
}

pub fn cmd_gen_l63(c: &GenL63Cmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    let cat = l63_catalog(&c.opts)?;
    write_generated(&c.out, "gen-l63", argv, &c.opts, c.opts.seed, &cat)
}

pub fn cmd_gen_surrogate(c: &GenSurrogateCmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    let cat = surrogate_catalog(&c.opts)?;
    write_generated(&c.out, "gen-surrogate", argv, &c.opts, c.opts.seed, &cat)
}
