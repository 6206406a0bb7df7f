//! EOF decomposition and the objective-based maximum-dimension criterion.
//!
//! An analog forecast is useful only when the `k`-th analog is much closer to
//! the target than two random states are, `r̄_k / RMSD < ε`. Combined with
//! `r_k ≈ ρ̄ (k/L)^{1/d}` this bounds the dimension that a catalog of size `L`
//! can serve:
//!
//! ```text
//! d_max,k = log(L/k) / (-log(ε/ρ̄)) = d_max,1 (1 - log k / log L)
//! ```

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, ExclusionPolicy};
use crate::dimension::estimate_local_dimension;
use crate::neighbors::{AnalogIndex, Backend, SearchOptions};
use crate::{Error, Result};

/// Eigenvalues below this fraction of the leading one are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_RHO_BAR: f64 = 0.55;

/// Principal directions of a catalog, ordered by decreasing variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EofBasis {
    pub mean_state: Vec<f64>,
    /// `N x D`, orthonormal rows.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
    pub rank_deficient: bool,
}

/// Fit `n_components` EOFs from the sample covariance (divisor `L - 1`).
///
/// Each component's sign makes its largest-magnitude entry positive.
pub fn eof_fit(c: &Catalog, n_components: usize) -> Result<EofBasis> {
    let (l, dim) = (c.len(), c.dim());
    if l < 2 {
        return Err(Error::invalid("EOF fit needs at least two states"));
    }
    if n_components == 0 || n_components > l.min(dim) {
        return Err(Error::invalid(format!(
            "n_components must lie in 1..={}, got {n_components}",
            l.min(dim)
        )));
    }
    let mut mean = vec![0.0; dim];
    for row in c.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= l as f64);

    let centered = DMatrix::from_fn(l, dim, |i, j| c.row(i)[j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (l - 1) as f64;
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let leading = eig.eigenvalues[order[0]].max(0.0);

    let mut components = Vec::with_capacity(n_components);
    let mut explained = Vec::with_capacity(n_components);
    let mut rank_deficient = false;
    for &j in order.iter().take(n_components) {
        let lambda = eig.eigenvalues[j].max(0.0);
        if lambda < RANK_TOLERANCE * leading || leading == 0.0 {
            rank_deficient = true;
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained.push(lambda);
    }
    if rank_deficient {
        log::warn!("EOF fit is rank deficient: trailing eigenvalues below {RANK_TOLERANCE:e} of the leading one");
    }
    Ok(EofBasis {
        mean_state: mean,
        components,
        explained_variance: explained,
        total_variance,
        rank_deficient,
    })
}

impl EofBasis {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean_state.len()
    }

    /// Fraction of the total variance carried by the first `n` components.
    pub fn explained_fraction(&self, n: usize) -> f64 {
        self.explained_variance[..n.min(self.n_components())].iter().sum::<f64>() / self.total_variance
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_components() {
            return Err(Error::invalid(format!(
                "requested {n} components from a basis of {}",
                self.n_components()
            )));
        }
        Ok(())
    }

    pub fn project_row(&self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        self.check_n(n)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.components[..n]
            .iter()
            .map(|e| e.iter().zip(x).zip(&self.mean_state).map(|((e, x), m)| e * (x - m)).sum())
            .collect())
    }

    pub fn reconstruct_row(&self, coords: &[f64]) -> Result<Vec<f64>> {
        self.check_n(coords.len())?;
        let mut out = self.mean_state.clone();
        for (a, e) in coords.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(e) {
                *o += a * v;
            }
        }
        Ok(out)
    }

    /// Coordinates of every state on the first `n` EOFs; times and metadata are kept.
    pub fn project(&self, c: &Catalog, n: usize) -> Result<Catalog> {
        self.check_n(n)?;
        if c.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: c.dim() });
        }
        let data: Vec<f64> = c
            .rows()
            .collect::<Vec<_>>()
            .par_iter()
            .flat_map_iter(|row| self.project_row(row, n).expect("checked above"))
            .collect();
        Catalog::new(data, n, c.times().map(<[i64]>::to_vec), c.metadata.clone())
    }

    pub fn reconstruct(&self, reduced: &Catalog) -> Result<Catalog> {
        self.check_n(reduced.dim())?;
        let mut data = Vec::with_capacity(reduced.len() * self.dim());
        for row in reduced.rows() {
            data.extend(self.reconstruct_row(row)?);
        }
        Catalog::new(data, self.dim(), reduced.times().map(<[i64]>::to_vec), reduced.metadata.clone())
    }

    /// Per-grid-point features: column `j` of the first `n` components.
    pub fn loadings(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        self.check_n(n)?;
        Ok((0..self.dim()).map(|j| self.components[..n].iter().map(|e| e[j]).collect()).collect())
    }
}

/// Columns `start..start + len` of a catalog, e.g. one wind component.
pub fn column_block(c: &Catalog, start: usize, len: usize) -> Result<Catalog> {
    if len == 0 || start + len > c.dim() {
        return Err(Error::invalid(format!(
            "column block {start}..{} outside dimension {}",
            start + len,
            c.dim()
        )));
    }
    let data = c.rows().flat_map(|r| r[start..start + len].iter().copied()).collect();
    Catalog::new(data, len, c.times().map(<[i64]>::to_vec), c.metadata.clone())
}

/// Concatenate per-grid-point loadings of independently fitted bases.
///
/// All bases must describe the same grid; the result has one row per grid point.
pub fn gridpoint_features(bases: &[&EofBasis], n: usize) -> Result<Vec<Vec<f64>>> {
    let first = bases.first().ok_or_else(|| Error::invalid("no bases given"))?;
    let mut out = first.loadings(n)?;
    for b in &bases[1..] {
        if b.dim() != first.dim() {
            return Err(Error::DimensionMismatch { expected: first.dim(), got: b.dim() });
        }
        for (row, extra) in out.iter_mut().zip(b.loadings(n)?) {
            row.extend(extra);
        }
    }
    Ok(out)
}

/// Root-mean-square distance between `n_pairs` random pairs of distinct states.
pub fn rmsd(c: &Catalog, n_pairs: usize, seed: u64) -> Result<f64> {
    let l = c.len();
    if l < 2 {
        return Err(Error::invalid("RMSD needs at least two states"));
    }
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..n_pairs {
        let pair = sample(&mut rng, l, 2);
        let (a, b) = (c.row(pair.index(0)), c.row(pair.index(1)));
        sum += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    }
    Ok((sum / n_pairs as f64).sqrt())
}

fn check_rank(l: u64, k: u64) -> Result<()> {
    if k == 0 || k > l {
        return Err(Error::invalid(format!("need 1 <= k <= L, got k={k}, L={l}")));
    }
    Ok(())
}

/// `d_max,k = d_max,1 (1 - log k / log L)`.
pub fn dmax_k(dmax_1: f64, l: u64, k: u64) -> Result<f64> {
    check_rank(l, k)?;
    if l == 1 {
        return Ok(dmax_1);
    }
    Ok(dmax_1 * (1.0 - (k as f64).ln() / (l as f64).ln()))
}

/// `d_max,k = log(L/k) / (-log(ε/ρ̄))`, requiring `ε < ρ̄`.
pub fn dmax_k_threshold(epsilon: f64, rho_bar: f64, l: u64, k: u64) -> Result<f64> {
    check_rank(l, k)?;
    if !(epsilon > 0.0 && rho_bar > 0.0 && epsilon < rho_bar) {
        return Err(Error::invalid(format!("need 0 < epsilon < rho_bar, got {epsilon}, {rho_bar}")));
    }
    Ok((l as f64 / k as f64).ln() / -(epsilon / rho_bar).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionCriterion {
    pub epsilon: f64,
    pub k: usize,
    pub l_eff: u64,
    pub rho_bar: f64,
}

impl ReductionCriterion {
    pub fn new(epsilon: f64, k: usize, l_eff: u64) -> Result<Self> {
        Self::with_rho_bar(epsilon, k, l_eff, DEFAULT_RHO_BAR)
    }

    pub fn with_rho_bar(epsilon: f64, k: usize, l_eff: u64, rho_bar: f64) -> Result<Self> {
        if !(epsilon > 0.0) || k == 0 || l_eff == 0 || !(rho_bar > 0.0) {
            return Err(Error::invalid("criterion needs epsilon > 0, k >= 1, L_eff >= 1, rho_bar > 0"));
        }
        Ok(ReductionCriterion { epsilon, k, l_eff, rho_bar })
    }

    /// Theoretical bound at rank `k`; infinite when `ε >= ρ̄`.
    pub fn dmax(&self) -> f64 {
        if self.epsilon >= self.rho_bar {
            return f64::INFINITY;
        }
        dmax_k_threshold(self.epsilon, self.rho_bar, self.l_eff, (self.k as u64).min(self.l_eff)).unwrap_or(0.0)
    }

    /// Bound at rank 1.
    pub fn dmax_1(&self) -> f64 {
        if self.epsilon >= self.rho_bar {
            return f64::INFINITY;
        }
        (self.l_eff as f64).ln() / -(self.epsilon / self.rho_bar).ln()
    }

    pub fn passes(&self, ratio: f64) -> bool {
        ratio < self.epsilon
    }
}

/// Hourly records: `L_eff = L / 24`.
pub fn default_l_eff(l: usize) -> u64 {
    ((l / 24) as u64).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Analogs per target for the dimension estimate (`>= criterion.k`).
    pub k_max: usize,
    pub n_targets: usize,
    pub n_pairs: usize,
    pub exclusion: Option<ExclusionPolicy>,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            k_max: 40,
            n_targets: 200,
            n_pairs: 100_000,
            exclusion: Some(ExclusionPolicy::default()),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n_eof: usize,
    pub k: usize,
    pub mean_d: f64,
    pub r_bar_k: f64,
    pub rmsd: f64,
    pub ratio: f64,
    pub pass: bool,
    pub dmax_theory: f64,
    pub explained_fraction: f64,
}

/// Evaluate the criterion after truncation to each EOF count.
///
/// Distances, dimensions and RMSD are all measured in the reduced space.
/// `r̄_k` is the mean of the `k`-th analog distance over sampled targets.
pub fn criterion_scan(
    c: &Catalog,
    criterion: &ReductionCriterion,
    eof_counts: &[usize],
    opts: &ScanOptions,
) -> Result<Vec<ScanRow>> {
    criterion_scan_ranks(c, criterion, &[criterion.k], eof_counts, opts)
}

/// [`criterion_scan`] for several ranks at once, sharing the analog searches.
///
/// Rows are ordered by EOF count, then by rank; `criterion.k` is ignored.
pub fn criterion_scan_ranks(
    c: &Catalog,
    criterion: &ReductionCriterion,
    ranks: &[usize],
    eof_counts: &[usize],
    opts: &ScanOptions,
) -> Result<Vec<ScanRow>> {
    if eof_counts.is_empty() || ranks.is_empty() {
        return Err(Error::invalid("need at least one EOF count and one rank"));
    }
    let k_top = *ranks.iter().max().expect("non-empty");
    if ranks.contains(&0) {
        return Err(Error::invalid("ranks start at 1"));
    }
    if opts.k_max < k_top.max(3) {
        return Err(Error::invalid("k_max must be at least max(k, 3)"));
    }
    let n_max = *eof_counts.iter().max().expect("non-empty");
    let basis = eof_fit(c, n_max)?;
    let n_targets = opts.n_targets.min(c.len());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let targets = sample(&mut rng, c.len(), n_targets).into_vec();
    let pair_seed: u64 = rng.random();

    let per_count: Vec<Vec<ScanRow>> = eof_counts
        .par_iter()
        .map(|&n| {
            let reduced = basis.project(c, n)?;
            let index = AnalogIndex::new(&reduced, Backend::Auto);
            let per_target: Vec<(f64, Vec<f64>)> = targets
                .par_iter()
                .map(|&t| {
                    let opts_t = match opts.exclusion {
                        Some(p) => SearchOptions::with_exclusion(p, Some(reduced.time_of(t))),
                        None => SearchOptions::default().skipping_exact_matches(),
                    };
                    let analogs = index.knn(reduced.row(t), opts.k_max, &opts_t)?;
                    let d = estimate_local_dimension(&analogs)?.d;
                    Ok((d, ranks.iter().map(|&k| analogs.distances[k - 1]).collect()))
                })
                .collect::<Result<_>>()?;
            let m = per_target.len() as f64;
            let mean_d = per_target.iter().map(|p| p.0).sum::<f64>() / m;
            let spread = rmsd(&reduced, opts.n_pairs, pair_seed)?;
            Ok(ranks
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let r_bar_k = per_target.iter().map(|p| p.1[i]).sum::<f64>() / m;
                    let ratio = r_bar_k / spread;
                    let crit = ReductionCriterion { k, ..*criterion };
                    ScanRow {
                        n_eof: n,
                        k,
                        mean_d,
                        r_bar_k,
                        rmsd: spread,
                        ratio,
                        pass: crit.passes(ratio),
                        dmax_theory: crit.dmax(),
                        explained_fraction: basis.explained_fraction(n),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_count.into_iter().flatten().collect())
}

/// Mean dimension where the ratio first crosses `ε`, by linear interpolation.
///
/// `rows` must hold a single rank, ordered by EOF count.
pub fn empirical_boundary(rows: &[ScanRow], epsilon: f64) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.ratio < epsilon && b.ratio >= epsilon {
            let t = (epsilon - a.ratio) / (b.ratio - a.ratio);
            Some(a.mean_d + t * (b.mean_d - a.mean_d))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::CatalogMetadata;
    use rand_distr::{Distribution, StandardNormal};

    fn catalog(rows: &[Vec<f64>]) -> Catalog {
        Catalog::from_rows(rows, None, CatalogMetadata::default()).unwrap()
    }

    fn gaussian_catalog(l: usize, scales: &[f64], seed: u64) -> Catalog {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..l)
            .map(|_| scales.iter().map(|s| { let z: f64 = StandardNormal.sample(&mut rng); s * z }).collect::<Vec<f64>>())
            .collect();
        catalog(&rows)
    }

    fn orthonormal(b: &EofBasis) -> bool {
        b.components.iter().enumerate().all(|(i, u)| {
            b.components.iter().enumerate().all(|(j, v)| {
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                (dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10
            })
        })
    }

    #[test]
    fn line_data_has_one_component() {
        let dir = [1.0, 2.0, -2.0];
        let rows: Vec<Vec<f64>> = (0..50).map(|i| dir.iter().map(|d| d * (i as f64 - 20.0) * 0.1).collect()).collect();
        let b = eof_fit(&catalog(&rows), 3).unwrap();
        let e = &b.components[0];
        let cos: f64 = e.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / 3.0;
        assert!((cos.abs() - 1.0).abs() < 1e-10);
        assert!(b.explained_variance[1] < 1e-12 * b.explained_variance[0]);
        assert!(b.rank_deficient);
        // sign: largest-magnitude entry positive
        let pivot = e.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        assert!(pivot > 0.0);
    }

    #[test]
    fn full_round_trip() {
        let c = gaussian_catalog(200, &[3.0, 1.0, 0.5, 0.2], 1);
        let b = eof_fit(&c, 4).unwrap();
        assert!(orthonormal(&b));
        assert!(b.explained_variance.windows(2).all(|w| w[1] <= w[0]));
        let back = b.reconstruct(&b.project(&c, 4).unwrap()).unwrap();
        for (x, y) in c.as_slice().iter().zip(back.as_slice()) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
        let zero = b.project_row(&b.mean_state, 4).unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn isotropic_cloud_has_flat_spectrum() {
        for seed in 0..10 {
            let c = gaussian_catalog(4000, &[1.0; 4], seed);
            let b = eof_fit(&c, 4).unwrap();
            let ev = &b.explained_variance;
            assert!(ev[0] / ev[3] < 1.2, "seed {seed}: {ev:?}");
        }
    }

    #[test]
    fn truncated_variance_matches_reconstruction() {
        let c = gaussian_catalog(500, &[2.0, 1.5, 1.0, 0.3, 0.1], 2);
        let b = eof_fit(&c, 5).unwrap();
        for n in 1..=5 {
            let reduced = b.project(&c, n).unwrap();
            let recon = b.reconstruct(&reduced).unwrap();
            let var: f64 = recon
                .rows()
                .map(|r| r.iter().zip(&b.mean_state).map(|(x, m)| (x - m).powi(2)).sum::<f64>())
                .sum::<f64>()
                / (c.len() - 1) as f64;
            let want: f64 = b.explained_variance[..n].iter().sum();
            assert!((var - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn projection_is_non_expansive() {
        let c = gaussian_catalog(100, &[1.0, 0.8, 0.6], 3);
        let b = eof_fit(&c, 3).unwrap();
        let p = b.project(&c, 2).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                let full = crate::neighbors::euclidean(c.row(i), c.row(j));
                let red = crate::neighbors::euclidean(p.row(i), p.row(j));
                assert!(red <= full + 1e-12);
            }
        }
    }

    #[test]
    fn projection_dimension_checks() {
        let c = gaussian_catalog(10, &[1.0, 1.0], 4);
        let b = eof_fit(&c, 2).unwrap();
        assert!(matches!(b.project_row(&[1.0], 1), Err(Error::DimensionMismatch { .. })));
        assert!(b.project(&c, 3).is_err());
        assert!(eof_fit(&c, 3).is_err());
    }

    #[test]
    fn rmsd_examples() {
        let two = catalog(&[vec![0.0, 0.0], vec![3.0, 4.0]]);
        assert_eq!(rmsd(&two, 10, 0).unwrap(), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..20_000).map(|_| vec![rng.random::<f64>()]).collect();
        let u = catalog(&rows);
        let v = rmsd(&u, 1_000_000, 1).unwrap();
        assert!((v / (1.0f64 / 6.0).sqrt() - 1.0).abs() < 0.01);
        let scaled = catalog(&rows.iter().map(|r| vec![r[0] * 7.0]).collect::<Vec<_>>());
        assert!((rmsd(&scaled, 1000, 1).unwrap() - 7.0 * rmsd(&u, 1000, 1).unwrap()).abs() < 1e-12);
        assert_eq!(rmsd(&u, 500, 3).unwrap(), rmsd(&u, 500, 3).unwrap());
    }

    #[test]
    fn dmax_examples() {
        assert_eq!(dmax_k(10.0, 10_000, 1).unwrap(), 10.0);
        assert!((dmax_k(10.0, 10_000, 25).unwrap() - 6.505).abs() < 1e-3);
        assert!(dmax_k(10.0, 10_000, 10_000).unwrap().abs() < 1e-12);
        assert!(dmax_k(10.0, 100, 0).is_err());
        // slope in log k is -dmax_1 / log L
        let l = 5000;
        let pts: Vec<(f64, f64)> = [1u64, 3, 10, 40, 200].iter().map(|&k| ((k as f64).ln(), dmax_k(7.0, l, k).unwrap())).collect();
        for w in pts.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            assert!((slope + 7.0 / (l as f64).ln()).abs() < 1e-12);
        }
        // the two forms agree
        let crit = ReductionCriterion::new(0.2, 25, 10_000).unwrap();
        let d1 = crit.dmax_1();
        assert!((dmax_k(d1, 10_000, 25).unwrap() - crit.dmax()).abs() < 1e-12);
    }

    #[test]
    fn scan_trivial_threshold_passes() {
        let c = gaussian_catalog(1500, &[1.0, 0.7, 0.5, 0.3, 0.2], 5);
        let crit = ReductionCriterion::new(1.0, 5, 1500).unwrap();
        let opts = ScanOptions { exclusion: None, n_targets: 50, n_pairs: 5000, ..ScanOptions::default() };
        let rows = criterion_scan(&c, &crit, &[1, 2, 3, 4, 5], &opts).unwrap();
        assert!(rows.iter().all(|r| r.pass && r.ratio < 1.0));
        assert!(rows.windows(2).all(|w| w[1].ratio >= w[0].ratio));
        assert!(rows.windows(2).all(|w| w[1].mean_d > w[0].mean_d));
        assert_eq!(rows, criterion_scan(&c, &crit, &[1, 2, 3, 4, 5], &opts).unwrap());
    }
}
