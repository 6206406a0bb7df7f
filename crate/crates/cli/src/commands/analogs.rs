use analog_dist::catalog::Catalog;
use analog_dist::density::{gaussian_kde, ks_distance, ks_pvalue, linspace, sup_norm, wasserstein1};
use analog_dist::dimension::{estimate_local_dimension, fit_prefactor, rescale_distances};
use analog_dist::disttheory::{cdf_rk, pdf_rk, rescaled_pdf, DistParams};
use analog_dist::neighbors::{AnalogIndex, AnalogSet, Backend, SearchOptions};
use analog_dist::catalog::ExclusionPolicy;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    DimStatsCmd, DimStatsOpts, FitTargetCmd, FitTargetOpts, McDistancesCmd, McDistancesOpts, RescaledDensityCmd,
    RescaledDensityOpts,
};
use crate::error::{CliError, CliResult};
use crate::manifest::ExperimentManifest;
use crate::output::PlotSpec;

use super::{even_targets, exclusion_policy, load, mean, quantile, search_for_row, std_dev, stream_seed, OutDir};

fn check_target(c: &Catalog, t: usize) -> CliResult<()> {
    if t >= c.len() {
        return Err(CliError::Validation(format!("target index {t} outside catalog of {} rows", c.len())));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub k: usize,
    pub r_k: f64,
    pub fit: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitTargetReport {
    pub target_index: usize,
    pub d: f64,
    pub c: f64,
    pub rho: f64,
    pub residual: f64,
    pub rows: Vec<FitRow>,
}

/// Analog distances of one target with the fitted `C k^{1/d}` law and the
/// `±1/(d√k)` relative spread around it.
pub fn fit_target(c: &Catalog, o: &FitTargetOpts) -> CliResult<FitTargetReport> {
    check_target(c, o.target_index)?;
    let policy = exclusion_policy(&o.exclusion, o.seed)?;
    let index = AnalogIndex::new(c, Backend::Exhaustive);
    let a = index.knn(c.row(o.target_index), o.k, &search_for_row(c, o.target_index, policy))?;
    let d = estimate_local_dimension(&a)?.d;
    let fit = fit_prefactor(&a, d, c.len())?;
    let rows = a
        .distances
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let k = i + 1;
            let f = fit.c * (k as f64).powf(1.0 / d);
            let band = 1.0 / (d * (k as f64).sqrt());
            FitRow { k, r_k: r, fit: f, band_lo: f * (1.0 - band), band_hi: f * (1.0 + band), log_ratio: (r / f).ln() }
        })
        .collect();
    Ok(FitTargetReport { target_index: o.target_index, d, c: fit.c, rho: fit.rho, residual: fit.residual, rows })
}

pub fn cmd_fit_target(c: &FitTargetCmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    let cat = load(&c.catalog)?;
    let r = fit_target(&cat, &c.opts)?;
    let mut out = OutDir::new(&c.out, "fit-target", argv, &c.opts, vec![c.opts.seed]);
    let csv = out.table("fit.csv", "fit_target", &r.rows)?;
    out.text("fit.json", &serde_json::to_string_pretty(&serde_json::json!({
        "target_index": r.target_index, "d": r.d, "c": r.c, "rho": r.rho, "residual": r.residual,
    })).expect("serializes"))?;
    out.plot("fit.svg", &csv, &PlotSpec { title: "analog distances vs C k^{1/d}", x: "k", y: &["r_k", "fit", "band_lo", "band_hi"], group: None })?;
    println!("target {}: d = {:.4}, C = {:.5}, rho = {:.4}, residual {:.4}", r.target_index, r.d, r.c, r.rho, r.residual);
    out.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct McSample {
    pub l: u64,
    pub catalog: usize,
    pub d: f64,
    pub c: f64,
    pub rho: f64,
    /// `r_k` for each requested rank.
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McKsRow {
    pub l: u64,
    pub k: usize,
    pub d_bar: f64,
    pub rho_bar: f64,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoOverlap {
    pub l_a: u64,
    pub l_b: u64,
    pub w1: f64,
    pub pooled_std: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McDensityRow {
    pub l: u64,
    pub quantity: String,
    pub x: f64,
    pub density: f64,
    pub theory: f64,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub k_list: Vec<usize>,
    pub samples: Vec<McSample>,
    pub ks: Vec<McKsRow>,
    pub overlaps: Vec<RhoOverlap>,
    pub densities: Vec<McDensityRow>,
}

impl McReport {
    pub fn level(&self, l: u64) -> impl Iterator<Item = &McSample> {
        self.samples.iter().filter(move |s| s.l == l)
    }
}

/// Monte Carlo over catalogs drawn without replacement from `source`.
///
/// Per catalog, `d` comes from the `K`-analog estimate and `ρ` from the
/// prefactor fit at the mean dimension `d̄`, taken over every catalog of
/// every size unless `per_size_dimension` is set.
/// For every catalog size the `r_k` samples are tested against `p_k` with the
/// pooled mean dimension and prefactor, which is the same as comparing the
/// rescaled distances `L^{1/d̄} r_k / ρ̄` with the `ρ`-free theory.
pub fn mc_distances(source: &Catalog, o: &McDistancesOpts) -> CliResult<McReport> {
    check_target(source, o.target)?;
    if o.n_catalogs < 2 || o.l_list.is_empty() || o.k_list.is_empty() {
        return Err(CliError::Validation("need >= 2 catalogs, at least one L and one rank".into()));
    }
    let k_top = *o.k_list.iter().max().expect("non-empty");
    if o.k_list.contains(&0) || o.k_dim < k_top.max(3) {
        return Err(CliError::Validation("ranks start at 1 and K-dim must cover them (and be >= 3)".into()));
    }
    let z = source.row(o.target);
    let policy = ExclusionPolicy { min_target_gap: o.exclusion_gap.max(0), dedup_neighbor_runs: false, rng_seed: 0 };
    let search = SearchOptions::with_exclusion(policy, Some(source.time_of(o.target))).skipping_exact_matches();
    let mut all_fits: Vec<Vec<(AnalogSet, f64)>> = Vec::with_capacity(o.l_list.len());
    for (li, &l) in o.l_list.iter().enumerate() {
        let fits: Vec<(AnalogSet, f64)> = (0..o.n_catalogs)
            .into_par_iter()
            .map(|i| {
                let cat = source.subsample_without_replacement(l as usize, stream_seed(o.seed, li as u64, i as u64))?;
                let a = AnalogIndex::new(&cat, Backend::Exhaustive).knn(z, o.k_dim, &search)?;
                let d = estimate_local_dimension(&a)?.d;
                Ok((a, d))
            })
            .collect::<CliResult<_>>()?;
        all_fits.push(fits);
    }
    let pooled_d = mean(&all_fits.iter().flatten().map(|f| f.1).collect::<Vec<_>>());
    let mut samples = Vec::new();
    let mut ks = Vec::new();
    let mut densities = Vec::new();
    for (&l, fits) in o.l_list.iter().zip(&all_fits) {
        let ds: Vec<f64> = fits.iter().map(|f| f.1).collect();
        let d_bar = if o.per_size_dimension { mean(&ds) } else { pooled_d };
        // The prefactor is refitted with the dimension pinned at its mean.
        let level: Vec<McSample> = fits
            .iter()
            .enumerate()
            .map(|(i, (a, d))| {
                let fit = fit_prefactor(a, d_bar, l as usize)?;
                Ok(McSample { l, catalog: i, d: *d, c: fit.c, rho: fit.rho, r: o.k_list.iter().map(|&k| a.distances[k - 1]).collect() })
            })
            .collect::<CliResult<_>>()?;
        let rhos: Vec<f64> = level.iter().map(|s| s.rho).collect();
        let rho_bar = mean(&rhos);
        let mut push_kde = |q: String, xs: &[f64], bw: f64, theory: &dyn Fn(f64) -> f64| -> CliResult<()> {
            let kde = gaussian_kde(xs, bw, None)?;
            densities.extend(kde.grid.iter().zip(&kde.values).map(|(&x, &v)| McDensityRow {
                l,
                quantity: q.clone(),
                x,
                density: v,
                theory: theory(x),
            }));
            Ok(())
        };
        push_kde("d".into(), &ds, o.bw_d, &|_| f64::NAN)?;
        push_kde("rho".into(), &rhos, o.bw_rho, &|_| f64::NAN)?;
        let scale = (l as f64).powf(1.0 / d_bar) / rho_bar;
        for (j, &k) in o.k_list.iter().enumerate() {
            let p = DistParams::with_rho(k as u64, d_bar, l, rho_bar)?;
            let r: Vec<f64> = level.iter().map(|s| s.r[j]).collect();
            let stat = ks_distance(&r, |x| cdf_rk(x, &p));
            ks.push(McKsRow { l, k, d_bar, rho_bar, n: r.len(), statistic: stat, p_value: ks_pvalue(stat, r.len() as f64) });
            let s: Vec<f64> = r.iter().map(|x| x * scale).collect();
            push_kde(format!("s{k}"), &s, o.bw_rescaled, &|x| pdf_rk(x / scale, &p) / scale)?;
        }
        samples.extend(level);
    }
    let mut overlaps = Vec::new();
    for (i, &la) in o.l_list.iter().enumerate() {
        for &lb in &o.l_list[i + 1..] {
            let a: Vec<f64> = samples.iter().filter(|s| s.l == la).map(|s| s.rho).collect();
            let b: Vec<f64> = samples.iter().filter(|s| s.l == lb).map(|s| s.rho).collect();
            let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
            let (w1, sd) = (wasserstein1(&a, &b), std_dev(&pooled));
            overlaps.push(RhoOverlap { l_a: la, l_b: lb, w1, pooled_std: sd, ratio: w1 / sd });
        }
    }
    Ok(McReport { k_list: o.k_list.clone(), samples, ks, overlaps, densities })
}

#[derive(Serialize)]
struct McSampleRow {
    l: u64,
    catalog: usize,
    d: f64,
    c: f64,
    rho: f64,
    k: usize,
    r_k: f64,
}

pub fn cmd_mc_distances(c: &McDistancesCmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    let source = load(&c.catalog_source)?;
    let r = mc_distances(&source, &c.opts)?;
    let mut out = OutDir::new(&c.out, "mc-distances", argv, &c.opts, vec![c.opts.seed]);
    let flat: Vec<McSampleRow> = r
        .samples
        .iter()
        .flat_map(|s| {
            r.k_list.iter().zip(&s.r).map(move |(&k, &r_k)| McSampleRow { l: s.l, catalog: s.catalog, d: s.d, c: s.c, rho: s.rho, k, r_k })
        })
        .collect();
    out.table("samples.csv", "mc_samples", &flat)?;
    out.table("ks.csv", "mc_ks", &r.ks)?;
    out.table("rho_overlap.csv", "mc_rho_overlap", &r.overlaps)?;
    out.table("densities.csv", "mc_densities", &r.densities)?;
    for q in ["d".to_string(), "rho".to_string()].into_iter().chain(r.k_list.iter().map(|k| format!("s{k}"))) {
        let rows: Vec<&McDensityRow> = r.densities.iter().filter(|d| d.quantity == q).collect();
        let csv = crate::output::csv_table("mc_densities", &rows)?;
        let y: &[&str] = if q.starts_with('s') { &["density", "theory"] } else { &["density"] };
        out.plot(&format!("density_{q}.svg"), &csv, &PlotSpec { title: &format!("density of {q}"), x: "x", y, group: Some("l") })?;
    }
    for k in &r.ks {
        println!("L={} k={}: d_bar {:.3}, rho_bar {:.3}, KS {:.4} (p = {:.3})", k.l, k.k, k.d_bar, k.rho_bar, k.statistic, k.p_value);
    }
    for w in &r.overlaps {
        println!("rho W1(L={}, L={}) = {:.4} = {:.3} pooled std", w.l_a, w.l_b, w.w1, w.ratio);
    }
    out.finish()
}

/// Analogs of each target row, searched in parallel with a shared index.
fn analogs_for_targets(c: &Catalog, targets: &[usize], k: usize, policy: ExclusionPolicy) -> CliResult<Vec<AnalogSet>> {
    let index = AnalogIndex::new(c, Backend::Auto);
    targets
        .par_iter()
        .map(|&t| Ok(index.knn(c.row(t), k, &search_for_row(c, t, policy))?))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaledRow {
    pub k: usize,
    pub u: f64,
    pub empirical: f64,
    pub theory: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaledSummary {
    pub k: usize,
    pub n: usize,
    pub mean_u: f64,
    pub std_u: f64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone)]
pub struct RescaledReport {
    pub d_theory: f64,
    pub mean_d: f64,
    pub rows: Vec<RescaledRow>,
    pub summary: Vec<RescaledSummary>,
}

/// Densities of `u_k = d√k (r_k / (C k^{1/d}) - 1)` pooled over targets.
pub fn rescaled_density(c: &Catalog, o: &RescaledDensityOpts) -> CliResult<RescaledReport> {
    if o.k_max == 0 || o.k < o.k_max.max(3) {
        return Err(CliError::Validation("need 1 <= k-max <= K and K >= 3".into()));
    }
    let policy = exclusion_policy(&o.exclusion, o.seed)?;
    let targets = even_targets(c.len(), o.n_targets);
    let sets = analogs_for_targets(c, &targets, o.k, policy)?;
    let per: Vec<(f64, Vec<f64>)> = sets
        .par_iter()
        .map(|a| {
            let d = estimate_local_dimension(a)?.d;
            let fit = fit_prefactor(a, d, c.len())?;
            Ok((d, rescale_distances(&a.truncated(o.k_max), d, fit.c)?))
        })
        .collect::<CliResult<_>>()?;
    let mean_d = mean(&per.iter().map(|p| p.0).collect::<Vec<_>>());
    let d_theory = o.d.unwrap_or(mean_d);
    if !(d_theory > 0.0) {
        return Err(CliError::Validation("theory dimension must be positive".into()));
    }
    let grid = linspace(-5.0, 6.0, 221);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for k in 1..=o.k_max {
        let u: Vec<f64> = per.iter().map(|p| p.1[k - 1]).collect();
        let kde = gaussian_kde(&u, o.bandwidth, Some(&grid))?;
        let theory = |x: f64| rescaled_pdf(x, k as u64, d_theory);
        summary.push(RescaledSummary { k, n: u.len(), mean_u: mean(&u), std_u: std_dev(&u), sup_norm: sup_norm(&grid, &kde.values, theory) });
        rows.extend(grid.iter().zip(&kde.values).map(|(&x, &v)| RescaledRow { k, u: x, empirical: v, theory: theory(x) }));
    }
    Ok(RescaledReport { d_theory, mean_d, rows, summary })
}

pub fn cmd_rescaled_density(c: &RescaledDensityCmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    let cat = load(&c.catalog)?;
    let r = rescaled_density(&cat, &c.opts)?;
    let mut out = OutDir::new(&c.out, "rescaled-density", argv, &c.opts, vec![c.opts.seed]);
    let csv = out.table("rescaled_density.csv", "rescaled_density", &r.rows)?;
    out.table("summary.csv", "rescaled_summary", &r.summary)?;
    out.plot("rescaled_density.svg", &csv, &PlotSpec { title: "rescaled analog distances", x: "u", y: &["empirical", "theory"], group: Some("k") })?;
    println!("mean d {:.3}; theory at d = {:.3}", r.mean_d, r.d_theory);
    for s in &r.summary {
        println!("k={}: mean {:.3}, std {:.3}, sup|kde - h_k| = {:.4}", s.k, s.mean_u, s.std_u, s.sup_norm);
    }
    out.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct DimRow {
    pub index: usize,
    pub time: i64,
    pub d: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistRow {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub density: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodRow {
    pub period: i64,
    pub n: usize,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothRow {
    pub day: i64,
    pub smoothed: f64,
}

#[derive(Debug, Clone)]
pub struct DimStatsReport {
    pub mean_d: f64,
    pub std_d: f64,
    pub dims: Vec<DimRow>,
    pub histogram: Vec<HistRow>,
    pub daily: Vec<PeriodRow>,
    pub weekly: Vec<PeriodRow>,
    pub smoothed: Vec<SmoothRow>,
}

fn by_period(dims: &[DimRow], hours: i64) -> Vec<PeriodRow> {
    let mut out: Vec<PeriodRow> = Vec::new();
    let mut i = 0;
    while i < dims.len() {
        let p = dims[i].time.div_euclid(hours);
        let mut j = i;
        while j < dims.len() && dims[j].time.div_euclid(hours) == p {
            j += 1;
        }
        let v: Vec<f64> = dims[i..j].iter().map(|r| r.d).collect();
        out.push(PeriodRow { period: p, n: v.len(), mean: mean(&v), q10: quantile(&v, 0.1), q90: quantile(&v, 0.9) });
        i = j;
    }
    out
}

/// Gaussian smoothing of daily means; `σ` is a quarter of the window and the
/// kernel is cut at half the window on each side.
fn smooth(daily: &[PeriodRow], window_days: f64) -> Vec<SmoothRow> {
    let sigma = (window_days / 4.0).max(f64::MIN_POSITIVE);
    daily
        .iter()
        .map(|a| {
            let (mut num, mut den) = (0.0, 0.0);
            for b in daily {
                let dt = (b.period - a.period) as f64;
                if dt.abs() <= window_days / 2.0 {
                    let w = (-0.5 * (dt / sigma).powi(2)).exp();
                    num += w * b.mean;
                    den += w;
                }
            }
            SmoothRow { day: a.period, smoothed: num / den }
        })
        .collect()
}

/// Local dimension over time. Catalog times are read as hours.
pub fn dim_stats(c: &Catalog, o: &DimStatsOpts) -> CliResult<DimStatsReport> {
    if o.bins == 0 {
        return Err(CliError::Validation("need at least one histogram bin".into()));
    }
    let policy = exclusion_policy(&o.exclusion, o.seed)?;
    let targets = even_targets(c.len(), o.n_targets);
    let sets = analogs_for_targets(c, &targets, o.k, policy)?;
    let ds: Vec<f64> = sets.par_iter().map(|a| Ok(estimate_local_dimension(a)?.d)).collect::<CliResult<_>>()?;
    let mut dims: Vec<DimRow> = targets.iter().zip(&ds).map(|(&t, &d)| DimRow { index: t, time: c.time_of(t), d }).collect();
    dims.sort_by_key(|r| (r.time, r.index));
    let (lo, hi) = ds.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &d| (a.min(d), b.max(d)));
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let w = (hi - lo) / o.bins as f64;
    let mut counts = vec![0usize; o.bins];
    for &d in &ds {
        counts[(((d - lo) / w) as usize).min(o.bins - 1)] += 1;
    }
    let histogram = counts
        .iter()
        .enumerate()
        .map(|(i, &n)| HistRow { lo: lo + i as f64 * w, hi: lo + (i + 1) as f64 * w, count: n, density: n as f64 / (ds.len() as f64 * w) })
        .collect();
    let daily = by_period(&dims, 24);
    let weekly = by_period(&dims, 24 * 7);
    let smoothed = smooth(&daily, o.smooth_days);
    Ok(DimStatsReport { mean_d: mean(&ds), std_d: std_dev(&ds), dims, histogram, daily, weekly, smoothed })
}

pub fn cmd_dim_stats(c: &DimStatsCmd, argv: &[String]) -> CliResult<ExperimentManifest> {
    let cat = load(&c.catalog)?;
    let r = dim_stats(&cat, &c.opts)?;
    let mut out = OutDir::new(&c.out, "dim-stats", argv, &c.opts, vec![c.opts.seed]);
    out.table("dims.csv", "dims", &r.dims)?;
    let hist = out.table("histogram.csv", "dim_histogram", &r.histogram)?;
    out.table("daily.csv", "dim_daily", &r.daily)?;
    let weekly = out.table("weekly.csv", "dim_weekly", &r.weekly)?;
    let smooth = out.table("smoothed.csv", "dim_smoothed", &r.smoothed)?;
    out.plot("histogram.svg", &hist, &PlotSpec { title: "local dimension", x: "lo", y: &["density"], group: None })?;
    out.plot("weekly.svg", &weekly, &PlotSpec { title: "weekly dimension quantiles", x: "period", y: &["q10", "mean", "q90"], group: None })?;
    out.plot("smoothed.svg", &smooth, &PlotSpec { title: "smoothed daily dimension", x: "day", y: &["smoothed"], group: None })?;
    println!("{} targets: mean d {:.3}, std {:.3}", r.dims.len(), r.mean_d, r.std_d);
    out.finish()
}
