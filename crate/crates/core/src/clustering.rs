//! Gaussian mixtures fitted by EM, with BIC-based selection of the number of
//! components.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::special::log_sum_exp;
use crate::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_SEEDS: usize = 5;
/// Diagonal loading, as a fraction of the mean feature variance, used on retry.
pub const COLLAPSE_REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceType {
    Full,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub covariance: CovarianceType,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions { max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL, covariance: CovarianceType::Full }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub n_components: usize,
    pub dim: usize,
    pub covariance_type: CovarianceType,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Row-major `D x D` matrices.
    pub covariances: Vec<Vec<f64>>,
    /// Total log-likelihood of the training data at the returned parameters.
    pub log_likelihood: f64,
    /// Log-likelihood before every M-step; last entry equals `log_likelihood`.
    pub ll_trace: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
    /// Diagonal loading that was added to every covariance.
    pub regularization: f64,
}

/// Lower Cholesky factors and log-determinants of every component.
struct Factors {
    chol: Vec<Vec<f64>>,
    half_log_det: Vec<f64>,
}

fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

impl GmmModel {
    fn factors(&self) -> Result<Factors> {
        let d = self.dim;
        let mut chol = Vec::with_capacity(self.n_components);
        let mut half_log_det = Vec::with_capacity(self.n_components);
        for (j, cov) in self.covariances.iter().enumerate() {
            let l = cholesky(cov, d).ok_or(Error::CovarianceCollapse { component: j })?;
            half_log_det.push((0..d).map(|i| l[i * d + i].ln()).sum());
            chol.push(l);
        }
        Ok(Factors { chol, half_log_det })
    }

    /// `ln w_j + ln N(x; μ_j, Σ_j)` for each component.
    fn log_joint(&self, f: &Factors, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let d = self.dim;
        let norm = 0.5 * d as f64 * (2.0 * PI).ln();
        for j in 0..self.n_components {
            let (l, mu) = (&f.chol[j], &self.means[j]);
            let mut q = 0.0;
            for i in 0..d {
                let mut s = x[i] - mu[i];
                for k in 0..i {
                    s -= l[i * d + k] * scratch[k];
                }
                let y = s / l[i * d + i];
                scratch[i] = y;
                q += y * y;
            }
            out[j] = self.weights[j].ln() - norm - f.half_log_det[j] - 0.5 * q;
        }
    }

    fn check_dim(&self, data: &[Vec<f64>]) -> Result<()> {
        if let Some(r) = data.iter().find(|r| r.len() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, got: r.len() });
        }
        Ok(())
    }

    /// Posterior component probabilities, one row per data point.
    pub fn responsibilities(&self, data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_dim(data)?;
        let f = self.factors()?;
        Ok(e_step(self, &f, data).1)
    }

    pub fn score(&self, data: &[Vec<f64>]) -> Result<f64> {
        self.check_dim(data)?;
        let f = self.factors()?;
        Ok(e_step(self, &f, data).0)
    }

    /// Number of free parameters.
    pub fn n_parameters(&self) -> usize {
        n_parameters(self.n_components, self.dim, self.covariance_type)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("bad model JSON: {e}")))
    }
}

fn e_step(model: &GmmModel, f: &Factors, data: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    let n = model.n_components;
    let rows: Vec<(f64, Vec<f64>)> = data
        .par_iter()
        .map_init(
            || vec![0.0; model.dim],
            |scratch, x| {
                let mut lj = vec![0.0; n];
                model.log_joint(f, x, scratch, &mut lj);
                let lse = log_sum_exp(&lj);
                lj.iter_mut().for_each(|v| *v = (*v - lse).exp());
                (lse, lj)
            },
        )
        .collect();
    let ll = rows.iter().map(|r| r.0).sum();
    (ll, rows.into_iter().map(|r| r.1).collect())
}

/// `(n - 1) + n D + n D (D + 1) / 2` for full covariances, `(n - 1) + 2 n D` for diagonal.
pub fn n_parameters(n: usize, d: usize, cov: CovarianceType) -> usize {
    let per = match cov {
        CovarianceType::Full => d * (d + 1) / 2,
        CovarianceType::Diagonal => d,
    };
    (n - 1) + n * d + n * per
}

/// `p ln M - 2 ln L`; lower is better.
pub fn bic(model: &GmmModel, data: &[Vec<f64>]) -> Result<f64> {
    let ll = model.score(data)?;
    Ok(model.n_parameters() as f64 * (data.len() as f64).ln() - 2.0 * ll)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy k-means++ seeding: each step draws `2 + ⌊ln n⌋` candidates with
/// probability proportional to the squared distance to the nearest existing
/// center and keeps the one with the lowest total potential.
fn kmeans_pp(data: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let trials = 2 + (n as f64).ln().floor() as usize;
    let mut centers = vec![rng.random_range(0..data.len())];
    let mut best: Vec<f64> = data.iter().map(|x| sq_dist(x, &data[centers[0]])).collect();
    while centers.len() < n {
        let total: f64 = best.iter().sum();
        let mut pick: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = if total > 0.0 {
                let mut u = rng.random::<f64>() * total;
                best.iter()
                    .position(|&w| {
                        u -= w;
                        u < 0.0
                    })
                    .unwrap_or(data.len() - 1)
            } else {
                rng.random_range(0..data.len())
            };
            let updated: Vec<f64> = best.iter().zip(data).map(|(b, x)| b.min(sq_dist(x, &data[cand]))).collect();
            let potential: f64 = updated.iter().sum();
            if pick.as_ref().is_none_or(|p| potential < p.0) {
                pick = Some((potential, cand, updated));
            }
        }
        let (_, next, updated) = pick.expect("trials >= 2");
        centers.push(next);
        best = updated;
    }
    centers
}

fn feature_variance(data: &[Vec<f64>]) -> f64 {
    let (m, d) = (data.len() as f64, data[0].len());
    (0..d)
        .map(|j| {
            let mean = data.iter().map(|x| x[j]).sum::<f64>() / m;
            data.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / m
        })
        .sum::<f64>()
        / d as f64
}

fn m_step(
    data: &[Vec<f64>],
    resp: &[Vec<f64>],
    n: usize,
    cov_type: CovarianceType,
    reg: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let d = data[0].len();
    let m = data.len() as f64;
    let mut nk = vec![0.0; n];
    let mut means = vec![vec![0.0; d]; n];
    for (x, r) in data.iter().zip(resp) {
        for j in 0..n {
            nk[j] += r[j];
            for i in 0..d {
                means[j][i] += r[j] * x[i];
            }
        }
    }
    for j in 0..n {
        if !(nk[j] > 1e-10 * m) {
            return Err(Error::CovarianceCollapse { component: j });
        }
        means[j].iter_mut().for_each(|v| *v /= nk[j]);
    }
    let covs: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mu = &means[j];
            let mut c = vec![0.0; d * d];
            let mut diff = vec![0.0; d];
            for (x, r) in data.iter().zip(resp) {
                let w = r[j];
                if w == 0.0 {
                    continue;
                }
                for i in 0..d {
                    diff[i] = x[i] - mu[i];
                }
                match cov_type {
                    CovarianceType::Full => {
                        for a in 0..d {
                            let wa = w * diff[a];
                            for b in 0..=a {
                                c[a * d + b] += wa * diff[b];
                            }
                        }
                    }
                    CovarianceType::Diagonal => {
                        for a in 0..d {
                            c[a * d + a] += w * diff[a] * diff[a];
                        }
                    }
                }
            }
            for a in 0..d {
                for b in 0..=a {
                    let v = c[a * d + b] / nk[j];
                    c[a * d + b] = v;
                    c[b * d + a] = v;
                }
                c[a * d + a] += reg;
            }
            c
        })
        .collect();
    let weights = nk.iter().map(|v| v / m).collect();
    Ok((weights, means, covs))
}

fn fit_once(data: &[Vec<f64>], n: usize, seed: u64, opts: &GmmOptions, reg: f64) -> Result<GmmModel> {
    let d = data[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = kmeans_pp(data, n, &mut rng);
    // hard assignment to the nearest seed gives the starting parameters
    let resp: Vec<Vec<f64>> = data
        .iter()
        .map(|x| {
            let j = (0..n)
                .min_by(|&a, &b| sq_dist(x, &data[centers[a]]).total_cmp(&sq_dist(x, &data[centers[b]])))
                .expect("n >= 1");
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            r
        })
        .collect();
    let (weights, means, covariances) = m_step(data, &resp, n, opts.covariance, reg)?;
    let mut model = GmmModel {
        n_components: n,
        dim: d,
        covariance_type: opts.covariance,
        weights,
        means,
        covariances,
        log_likelihood: f64::NEG_INFINITY,
        ll_trace: Vec::new(),
        n_iter: 0,
        converged: false,
        regularization: reg,
    };
    for it in 0..opts.max_iter.max(1) {
        let f = model.factors()?;
        let (ll, resp) = e_step(&model, &f, data);
        model.ll_trace.push(ll);
        model.log_likelihood = ll;
        model.n_iter = it;
        if let Some(&prev) = model.ll_trace.iter().rev().nth(1) {
            if (ll - prev).abs() <= opts.tol * ll.abs() {
                model.converged = true;
                break;
            }
        }
        if it + 1 == opts.max_iter.max(1) {
            break;
        }
        let (w, mu, cov) = m_step(data, &resp, n, opts.covariance, reg)?;
        model.weights = w;
        model.means = mu;
        model.covariances = cov;
    }
    Ok(model)
}

fn validate_data(data: &[Vec<f64>], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("need at least one component"));
    }
    let d = data.first().map(Vec::len).unwrap_or(0);
    if d == 0 {
        return Err(Error::invalid("data must have at least one feature"));
    }
    if data.len() <= n {
        return Err(Error::invalid(format!("{} points cannot support {n} components", data.len())));
    }
    if let Some(r) = data.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: r.len() });
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("data must be finite"));
    }
    Ok(())
}

/// Fit an `n`-component mixture by EM from a k-means++ start.
///
/// A collapsed covariance triggers one retry with diagonal loading of
/// [`COLLAPSE_REGULARIZATION`] times the mean feature variance.
pub fn gmm_fit(data: &[Vec<f64>], n: usize, seed: u64, opts: &GmmOptions) -> Result<GmmModel> {
    validate_data(data, n)?;
    match fit_once(data, n, seed, opts, 0.0) {
        Err(Error::CovarianceCollapse { component }) => {
            let reg = COLLAPSE_REGULARIZATION * feature_variance(data).max(f64::MIN_POSITIVE);
            log::warn!("component {component} collapsed; retrying with diagonal loading {reg:e}");
            fit_once(data, n, seed, opts, reg)
        }
        other => other,
    }
}

/// Best of `seeds` restarts by training log-likelihood.
pub fn gmm_fit_best(data: &[Vec<f64>], n: usize, seeds: &[u64], opts: &GmmOptions) -> Result<GmmModel> {
    let fits: Vec<Result<GmmModel>> = seeds.par_iter().map(|&s| gmm_fit(data, n, s, opts)).collect();
    let mut last_err = None;
    let mut best: Option<GmmModel> = None;
    for f in fits {
        match f {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.log_likelihood > b.log_likelihood) {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::invalid("no seeds given")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicPoint {
    pub n_components: usize,
    pub bic: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub best: usize,
    pub curve: Vec<BicPoint>,
    pub model: GmmModel,
}

/// Seeds `base_seed, base_seed + 1, ...` for each candidate.
pub fn select_n_clusters(
    data: &[Vec<f64>],
    candidates: &[usize],
    seeds_per_candidate: usize,
    base_seed: u64,
    opts: &GmmOptions,
) -> Result<ClusterSelection> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate component counts"));
    }
    let seeds: Vec<u64> = (0..seeds_per_candidate.max(1) as u64).map(|s| base_seed + s).collect();
    let fits: Vec<(usize, Result<GmmModel>)> =
        candidates.par_iter().map(|&n| (n, gmm_fit_best(data, n, &seeds, opts))).collect();
    let mut curve = Vec::new();
    let mut best: Option<(f64, GmmModel)> = None;
    for (n, fit) in fits {
        match fit {
            Ok(model) => {
                let score = model.n_parameters() as f64 * (data.len() as f64).ln() - 2.0 * model.log_likelihood;
                curve.push(BicPoint { n_components: n, bic: score, log_likelihood: model.log_likelihood });
                if best.as_ref().is_none_or(|(b, _)| score < *b) {
                    best = Some((score, model));
                }
            }
            Err(e) => log::warn!("skipping {n} components: {e}"),
        }
    }
    let (_, model) = best.ok_or_else(|| Error::invalid("every candidate fit failed"))?;
    Ok(ClusterSelection { best: model.n_components, curve, model })
}

/// Maximum-responsibility label for every row.
pub fn assign_spatial_clusters(model: &GmmModel, features: &[Vec<f64>]) -> Result<Vec<usize>> {
    Ok(model
        .responsibilities(features)?
        .iter()
        .map(|r| (0..r.len()).max_by(|&a, &b| r[a].total_cmp(&r[b])).expect("n >= 1"))
        .collect())
}

/// Zero-mean, unit-variance columns; returns the transformed rows, means and stds.
pub fn standardize(data: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let (m, d) = (data.len() as f64, data.first().map(Vec::len).unwrap_or(0));
    let means: Vec<f64> = (0..d).map(|j| data.iter().map(|x| x[j]).sum::<f64>() / m).collect();
    let stds: Vec<f64> = (0..d)
        .map(|j| {
            let s = (data.iter().map(|x| (x[j] - means[j]).powi(2)).sum::<f64>() / m).sqrt();
            if s > 0.0 { s } else { 1.0 }
        })
        .collect();
    let out = data.iter().map(|x| (0..d).map(|j| (x[j] - means[j]) / stds[j]).collect()).collect();
    (out, means, stds)
}

/// Labelled draws from a random Gaussian mixture.
///
/// Means are `N(0, separation^2)` per coordinate; each covariance is
/// `A Aᵀ / D + I / 2` with standard Normal `A`, so clusters are anisotropic.
pub fn synthetic_mixture(
    n_components: usize,
    dim: usize,
    per_component: usize,
    separation: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng) };
    let mut data = Vec::with_capacity(n_components * per_component);
    let mut labels = Vec::with_capacity(n_components * per_component);
    for c in 0..n_components {
        let mean: Vec<f64> = (0..dim).map(|_| separation * normal()).collect();
        let a: Vec<f64> = (0..dim * dim).map(|_| normal()).collect();
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                cov[i * dim + j] = (0..dim).map(|k| a[i * dim + k] * a[j * dim + k]).sum::<f64>() / dim as f64;
            }
            cov[i * dim + i] += 0.5;
        }
        let l = cholesky(&cov, dim).expect("positive definite by construction");
        for _ in 0..per_component {
            let z: Vec<f64> = (0..dim).map(|_| normal()).collect();
            data.push((0..dim).map(|i| mean[i] + (0..=i).map(|k| l[i * dim + k] * z[k]).sum::<f64>()).collect());
            labels.push(c);
        }
    }
    (data, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(centers: &[Vec<f64>], per: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        centers
            .iter()
            .flat_map(|c| {
                (0..per)
                    .map(|_| c.iter().map(|v| { let z: f64 = StandardNormal.sample(&mut rng); v + z }).collect::<Vec<f64>>())
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    fn monotone(trace: &[f64]) -> bool {
        trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs())
    }

    #[test]
    fn single_component_is_sample_statistics() {
        let data = blobs(&[vec![1.0, -2.0, 0.5]], 300, 1);
        let m = gmm_fit(&data, 1, 0, &GmmOptions::default()).unwrap();
        let n = data.len() as f64;
        for i in 0..3 {
            let mean = data.iter().map(|x| x[i]).sum::<f64>() / n;
            assert!((m.means[0][i] - mean).abs() < 1e-12);
            for j in 0..3 {
                let mj = data.iter().map(|x| x[j]).sum::<f64>() / n;
                let c = data.iter().map(|x| (x[i] - mean) * (x[j] - mj)).sum::<f64>() / n;
                assert!((m.covariances[0][i * 3 + j] - c).abs() < 1e-12);
            }
        }
        assert!((m.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_blobs_recovered() {
        let data = blobs(&[vec![-10.0], vec![10.0]], 400, 2);
        let m = gmm_fit(&data, 2, 3, &GmmOptions::default()).unwrap();
        let mut mu: Vec<f64> = m.means.iter().map(|v| v[0]).collect();
        mu.sort_by(f64::total_cmp);
        assert!((mu[0] + 10.0).abs() < 0.1 && (mu[1] - 10.0).abs() < 0.1);
        assert!(monotone(&m.ll_trace));
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn likelihood_is_monotone_on_overlapping_fixture() {
        let data = blobs(&[vec![0.0, 0.0], vec![1.5, 0.5], vec![-1.0, 2.0]], 200, 4);
        for seed in 0..5 {
            for cov in [CovarianceType::Full, CovarianceType::Diagonal] {
                let opts = GmmOptions { covariance: cov, ..Default::default() };
                let m = gmm_fit(&data, 3, seed, &opts).unwrap();
                assert!(monotone(&m.ll_trace), "seed {seed}: {:?}", m.ll_trace);
                assert!(m.ll_trace.len() > 2);
            }
        }
    }

    #[test]
    fn responsibilities_sum_to_one() {
        let data = blobs(&[vec![0.0, 0.0], vec![3.0, 3.0]], 100, 5);
        let m = gmm_fit(&data, 2, 0, &GmmOptions::default()).unwrap();
        for r in m.responsibilities(&data).unwrap() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn parameter_count() {
        for n in 1..6 {
            for d in 1..8 {
                assert_eq!(n_parameters(n, d, CovarianceType::Full), (n - 1) + n * d + n * d * (d + 1) / 2);
            }
        }
        assert_eq!(n_parameters(10, 100, CovarianceType::Full), 9 + 1000 + 10 * 5050);
        let data = blobs(&[vec![0.0, 0.0]], 50, 6);
        let penalties: Vec<f64> = (1..5)
            .map(|n| n_parameters(n, 2, CovarianceType::Full) as f64 * (data.len() as f64).ln())
            .collect();
        assert!(penalties.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn collapse_is_regularized() {
        // a duplicated point forms its own zero-variance cluster
        let mut data = blobs(&[vec![0.0, 0.0]], 60, 7);
        data.extend(std::iter::repeat_n(vec![50.0, 50.0], 5));
        let m = gmm_fit(&data, 2, 0, &GmmOptions::default()).unwrap();
        assert!(m.regularization > 0.0);
        assert!(m.log_likelihood.is_finite());
    }

    #[test]
    fn labels_follow_component_order() {
        let data = blobs(&[vec![-8.0, 0.0], vec![8.0, 0.0], vec![0.0, 8.0]], 100, 8);
        let m = gmm_fit(&data, 3, 1, &GmmOptions::default()).unwrap();
        let labels = assign_spatial_clusters(&m, &data).unwrap();
        assert_eq!(labels.len(), data.len());
        for (j, mu) in m.means.iter().enumerate() {
            assert_eq!(assign_spatial_clusters(&m, std::slice::from_ref(mu)).unwrap()[0], j);
        }
        let perm = [2usize, 0, 1];
        let mut p = m.clone();
        p.weights = perm.iter().map(|&i| m.weights[i]).collect();
        p.means = perm.iter().map(|&i| m.means[i].clone()).collect();
        p.covariances = perm.iter().map(|&i| m.covariances[i].clone()).collect();
        let relabeled = assign_spatial_clusters(&p, &data).unwrap();
        for (a, b) in labels.iter().zip(&relabeled) {
            assert_eq!(perm[*b], *a);
        }
        assert!(matches!(assign_spatial_clusters(&m, &[vec![1.0]]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn selection_trivial_and_deterministic() {
        let data = blobs(&[vec![0.0, 0.0], vec![9.0, 9.0], vec![-9.0, 9.0]], 80, 9);
        assert_eq!(select_n_clusters(&data, &[1], 2, 0, &GmmOptions::default()).unwrap().best, 1);
        let a = select_n_clusters(&data, &[1, 2, 3, 4, 5], 3, 0, &GmmOptions::default()).unwrap();
        assert_eq!(a.best, 3);
        assert_eq!(a, select_n_clusters(&data, &[1, 2, 3, 4, 5], 3, 0, &GmmOptions::default()).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let data = blobs(&[vec![0.0, 1.0]], 40, 10);
        let m = gmm_fit(&data, 1, 0, &GmmOptions::default()).unwrap();
        assert_eq!(GmmModel::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn standardize_columns() {
        let data = vec![vec![1.0, 10.0], vec![3.0, 10.0], vec![5.0, 10.0]];
        let (z, mu, sd) = standardize(&data);
        assert_eq!(mu, vec![3.0, 10.0]);
        assert!((sd[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15 && sd[1] == 1.0);
        assert!((z[2][0] - 2.0 / (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
