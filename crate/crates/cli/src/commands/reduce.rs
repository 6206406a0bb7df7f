use analog_dist::catalog::Catalog;
use analog_dist::clustering::{
    assign_spatial_clusters, select_n_clusters, standardize, BicPoint, ClusterSelection, CovarianceType, GmmOptions,
};
use analog_dist::dimred::{
    column_block, criterion_scan_ranks, default_l_eff, eof_fit, empirical_boundary, gridpoint_features,
    ReductionCriterion, ScanOptions, ScanRow,
};
use serde::Serialize;

use crate::args::{parse_index_list, ClusterCmd, ClusterOpts, DmaxScanCmd, DmaxScanOpts};
use crate::error::{CliError, CliResult};
use crate::manifest::ExperimentManifest;
use crate::output::PlotSpec;

use super::{exclusion_policy, load, OutDir};

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRow {
    pub k: usize,
    /// Mean dimension where `r̄_k / RMSD` first reaches `ε`; NaN if never.
    pub d_boundary: f64,
    pub dmax_theory: f64,
}

#[derive(Debug, Clone)]
pub struct DmaxScanReport {
    pub l_eff: u64,
    pub rows: Vec<ScanRow>,
    pub boundary: Vec<BoundaryRow>,
    /// Least-squares line `d_boundary = intercept + slope ln k` over finite boundaries.
    pub slope: f64,
    pub intercept: f64,
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn dmax_scan(c: &Catalog, o: &DmaxScanOpts) -> CliResult<DmaxScanReport> {
    let counts = parse_index_list(&o.eof_counts)?;
    if counts.contains(&0) || counts.iter().any(|&n| n > c.dim()) {
        return Err(CliError::Validation(format!("EOF counts must lie in 1..={}", c.dim())));
    }
    if o.k_list.is_empty() {
        return Err(CliError::Validation("need at least one rank".into()));
    }
    let l_eff = o.l_eff.unwrap_or_else(|| default_l_eff(c.len()));
    let criterion = ReductionCriterion::with_rho_bar(o.epsilon, o.k_list[0], l_eff, o.rho_bar)?;
    let opts = ScanOptions {
        k_max: o.k_dim.max(*o.k_list.iter().max().expect("non-empty")).max(3),
        n_targets: o.n_targets,
        n_pairs: o.n_pairs,
        exclusion: if o.no_exclusion { None } else { Some(exclusion_policy(&o.exclusion, o.seed)?) },
        seed: o.seed,
    };
    let rows = criterion_scan_ranks(c, &criterion, &o.k_list, &counts, &opts)?;
    let boundary: Vec<BoundaryRow> = o
        .k_list
        .iter()
        .map(|&k| {
            let rk: Vec<ScanRow> = rows.iter().filter(|r| r.k == k).cloned().collect();
            BoundaryRow {
                k,
                d_boundary: empirical_boundary(&rk, o.epsilon).unwrap_or(f64::NAN),
                dmax_theory: ReductionCriterion { k, ..criterion }.dmax(),
            }
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) =
        boundary.iter().filter(|b| b.d_boundary.is_finite()).map(|b| ((b.k as f64).ln(), b.d_boundary)).unzip();
    let (slope, intercept) = line_fit(&x, &y);
    Ok(DmaxScanReport { l_eff, rows, boundary, slope, intercept })
}

pub fn cmd_dmax_scan(c: &DmaxScanCmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    parse_index_list(&c.opts.eof_counts)?;
    let cat = load(&c.catalog)?;
    let r = dmax_scan(&cat, &c.opts)?;
    let mut out = OutDir::new(&c.out, "dmax-scan", argv, &c.opts, vec![c.opts.seed]);
    let csv = out.table("dmax_scan.csv", "dmax_scan", &r.rows)?;
    let bcsv = out.table("boundary.csv", "dmax_boundary", &r.boundary)?;
    out.plot("dmax_scan.svg", &csv, &PlotSpec { title: "r_k / RMSD after truncation", x: "mean_d", y: &["ratio"], group: Some("k") })?;
    out.plot("boundary.svg", &bcsv, &PlotSpec { title: "pass/fail boundary", x: "k", y: &["d_boundary", "dmax_theory"], group: None })?;
    println!("L_eff = {}", r.l_eff);
    for b in &r.boundary {
        println!("k={}: empirical boundary d = {:.3}, theory d_max = {:.3}", b.k, b.d_boundary, b.dmax_theory);
    }
    println!("boundary ~ {:.3} + {:.3} ln k", r.intercept, r.slope);
    out.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelRow {
    pub grid_point: usize,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub selection: ClusterSelection,
    pub labels: Vec<usize>,
    pub n_features: usize,
}

pub fn cluster_features(features: &[Vec<f64>], o: &ClusterOpts) -> CliResult<ClusterReport> {
    let candidates = parse_index_list(&o.candidates)?;
    if candidates.contains(&0) || candidates.iter().any(|&n| n > features.len()) {
        return Err(CliError::Validation(format!("candidate counts must lie in 1..={}", features.len())));
    }
    let data = if o.standardize { standardize(features).0 } else { features.to_vec() };
    let opts = GmmOptions {
        max_iter: o.max_iter,
        covariance: if o.diagonal { CovarianceType::Diagonal } else { CovarianceType::Full },
        ..Default::default()
    };
    let selection = select_n_clusters(&data, &candidates, o.seeds, o.seed, &opts)?;
    let labels = assign_spatial_clusters(&selection.model, &data)?;
    Ok(ClusterReport { selection, labels, n_features: data.first().map(Vec::len).unwrap_or(0) })
}

/// Cluster grid points by their loadings on the leading EOFs of each block.
pub fn cluster(c: &Catalog, o: &ClusterOpts) -> CliResult<ClusterReport> {
    if o.blocks == 0 || c.dim() % o.blocks != 0 {
        return Err(CliError::Validation(format!("state dimension {} is not a multiple of {} blocks", c.dim(), o.blocks)));
    }
    let g = c.dim() / o.blocks;
    if o.n_eof == 0 || o.n_eof > g.min(c.len().saturating_sub(1)) {
        return Err(CliError::Validation(format!("n-eof must lie in 1..={}", g.min(c.len().saturating_sub(1)))));
    }
    let bases = (0..o.blocks).map(|b| eof_fit(&column_block(c, b * g, g)?, o.n_eof)).collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<_> = bases.iter().collect();
    let features = gridpoint_features(&refs, o.n_eof)?;
    cluster_features(&features, o)
}

pub fn cmd_cluster(c: &ClusterCmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    parse_index_list(&c.opts.candidates)?;
    let cat = load(&c.catalog)?;
    let r = cluster(&cat, &c.opts)?;
    let seeds = (0..c.opts.seeds.max(1) as u64).map(|s| c.opts.seed + s).collect();
    let mut out = OutDir::new(&c.out, "cluster", argv, &c.opts, seeds);
    let curve: &[BicPoint] = &r.selection.curve;
    let csv = out.table("bic_curve.csv", "bic_curve", curve)?;
    let labels: Vec<LabelRow> = r.labels.iter().enumerate().map(|(i, &l)| LabelRow { grid_point: i, label: l }).collect();
    let lcsv = out.table("labels.csv", "labels", &labels)?;
    out.text("model.json", &r.selection.model.to_json())?;
    out.plot("bic_curve.svg", &csv, &PlotSpec { title: "BIC", x: "n_components", y: &["bic"], group: None })?;
    out.plot("labels.svg", &lcsv, &PlotSpec { title: "cluster per grid point", x: "grid_point", y: &["label"], group: None })?;
    println!("{} grid points, {} features: best {} components", r.labels.len(), r.n_features, r.selection.best);
    out.finish()
}
