use analog_dist::disttheory::{mean_rk, mean_rk_approx, mode_rk, pdf_rk, std_rk, support_bounds, DistParams};
use serde::Serialize;

use crate::args::{TheoryCurvesCmd, TheoryCurvesOpts};
use crate::error::{CliError, CliResult};
use crate::manifest::ExperimentManifest;
use crate::output::PlotSpec;

use super::OutDir;

#[derive(Debug, Clone, Serialize)]
pub struct CurveRow {
    pub series: String,
    pub k: u64,
    pub d: f64,
    /// `r L^{1/d}` with `ρ = 1`.
    pub x: f64,
    pub p_norm: f64,
}

/// Positions in the same `x` units as [`CurveRow`].
#[derive(Debug, Clone, Serialize)]
pub struct MarkerRow {
    pub series: String,
    pub k: u64,
    pub d: f64,
    pub l: u64,
    pub mean: f64,
    pub mean_approx: f64,
    pub mode: f64,
    pub std: f64,
}

#[derive(Debug, Clone)]
pub struct TheoryCurves {
    pub curves: Vec<CurveRow>,
    pub markers: Vec<MarkerRow>,
}

pub fn theory_curves(o: &TheoryCurvesOpts) -> CliResult<TheoryCurves> {
    if o.points < 2 {
        return Err(CliError::Validation("need at least 2 grid points".into()));
    }
    let mut out = TheoryCurves { curves: Vec::new(), markers: Vec::new() };
    for &d in &o.d_list {
        for &k in &o.k_list {
            let p = DistParams::with_rho(k, d, o.l, 1.0)?;
            let scale = (o.l as f64).powf(1.0 / d);
            let series = format!("k={k} d={d}");
            let (lo, hi) = support_bounds(&p, 1e-9);
            let start = if k as f64 * d > 1.0 { 0.0 } else { lo };
            let grid: Vec<f64> = (0..o.points).map(|i| start + (hi - start) * i as f64 / (o.points - 1) as f64).collect();
            let values: Vec<f64> = grid.iter().map(|&r| pdf_rk(r, &p)).collect();
            let mode = mode_rk(&p);
            let peak = values.iter().copied().filter(|v| v.is_finite()).fold(pdf_rk(mode, &p), f64::max);
            if !(peak > 0.0 && peak.is_finite()) {
                return Err(CliError::Numeric(format!("density for {series} has no finite maximum")));
            }
            out.curves.extend(grid.iter().zip(&values).map(|(&r, &v)| CurveRow {
                series: series.clone(),
                k,
                d,
                x: r * scale,
                p_norm: v / peak,
            }));
            out.markers.push(MarkerRow {
                series,
                k,
                d,
                l: o.l,
                mean: mean_rk(&p) * scale,
                mean_approx: mean_rk_approx(&p) * scale,
                mode: mode * scale,
                std: std_rk(&p) * scale,
            });
        }
    }
    Ok(out)
}

pub fn cmd_theory_curves(c: &TheoryCurvesCmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    let t = theory_curves(&c.opts)?;
    let mut out = OutDir::new(&c.out, "theory-curves", argv, &c.opts, vec![]);
    let csv = out.table("curves.csv", "theory_curves", &t.curves)?;
    out.table("markers.csv", "theory_markers", &t.markers)?;
    out.plot(
        "curves.svg",
        &csv,
        &PlotSpec { title: "max-normalized p_k", x: "x", y: &["p_norm"], group: Some("series") },
    )?;
    for m in &t.markers {
        println!("{}: mean {:.4} (approx {:.4}), mode {:.4}, std {:.4}", m.series, m.mean, m.mean_approx, m.mode, m.std);
    }
    out.finish()
}
