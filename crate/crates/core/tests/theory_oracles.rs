//! Quadrature and Monte Carlo oracles for the closed-form distance law.

use analog_dist::catalog::{Catalog, CatalogMetadata, ExclusionPolicy};
use analog_dist::density::{gaussian_kde, ks_distance, ks_pvalue, linspace, sup_norm};
use analog_dist::dimension::rescale_distances;
use analog_dist::disttheory::*;
use analog_dist::neighbors::{knn, AnalogSet, SearchOptions};
use analog_dist::quadrature::Quadrature;
use analog_dist::special::{std_normal_pdf, ln_gamma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KS: [u64; 3] = [1, 5, 30];
const DS: [f64; 4] = [1.3, 2.0, 5.0, 15.0];
const LS: [u64; 2] = [1000, 1_000_000];

fn grid() -> Vec<DistParams> {
    let mut out = Vec::new();
    for &k in &KS {
        for &d in &DS {
            for &l in &LS {
                out.push(DistParams::new(k, d, l).unwrap());
            }
        }
    }
    out
}

fn quad() -> Quadrature {
    Quadrature::with_tolerances(1e-10, 1e-12)
}

fn upper(p: &DistParams) -> f64 {
    support_bounds(p, 1e-14).1
}

#[test]
fn pdf_normalizes_on_grid() {
    for p in grid() {
        let total = quad().integrate(|r| pdf_rk(r, &p), 0.0, upper(&p)).value;
        assert!((total - 1.0).abs() < 1e-8, "{p:?}: {total}");
    }
}

#[test]
fn survival_is_one_minus_integrated_pdf() {
    for p in grid() {
        let m = mean_rk(&p);
        for &r in &[0.5 * m, m, 1.5 * m] {
            let head = quad().integrate(|s| pdf_rk(s, &p), 0.0, r).value;
            assert!((survival_rk(r, &p) - (1.0 - head)).abs() < 1e-8, "{p:?} r={r}");
        }
    }
}

#[test]
fn moments_match_quadrature() {
    // integrate in s = r / ⟨r_k⟩ so the absolute tolerance is relative to the scale
    for p in grid() {
        let scale = mean_rk(&p);
        let (lo, hi) = support_bounds(&p, 1e-14);
        let (lo, hi) = (lo / scale, hi / scale);
        let pdf = |s: f64| scale * pdf_rk(s * scale, &p);
        let m1 = scale * quad().integrate(|s| s * pdf(s), lo, hi).value;
        let m2 = scale * scale * quad().integrate(|s| s * s * pdf(s), lo, hi).value;
        let central = scale * scale * quad().integrate(|s| (s - 1.0).powi(2) * pdf(s), lo, hi).value;
        assert!((m1 / mean_rk(&p) - 1.0).abs() < 1e-8, "{p:?}");
        assert!((m2 / second_moment_rk(&p) - 1.0).abs() < 1e-8, "{p:?}");
        assert!((central / var_rk(&p) - 1.0).abs() < 1e-8, "{p:?}: {central} vs {}", var_rk(&p));
    }
}

#[test]
fn density_is_poisson_count_times_shell() {
    // p_k(r) δr = P(N(r) = k - 1) · L d r^{d-1} δr to first order
    for p in grid() {
        let r = mean_rk(&p);
        let dr = 1e-6 * r;
        let shell = p.l as f64 * p.d * r.powf(p.d - 1.0) * dr;
        let lhs = pdf_rk(r, &p) * dr;
        let rhs = poisson_count_pmf(p.k - 1, p.l, r.powf(p.d)) * shell;
        assert!((lhs / rhs - 1.0).abs() < 1e-10, "{p:?}");
        // the exact probability of the shell agrees to first order in δr
        let exact = survival_rk(r, &p) - survival_rk(r + dr, &p);
        assert!((exact / lhs - 1.0).abs() < 1e-4, "{p:?}");
    }
}

#[test]
fn rescaled_density_normalizes() {
    for &k in &[1u64, 8, 30] {
        for &d in &[2.0, 13.0] {
            let lo = rescaled_support_min(k, d);
            let total = quad().integrate(|u| rescaled_pdf(u, k, d), lo, 60.0).value;
            assert!((total - 1.0).abs() < 1e-8, "k={k} d={d}: {total}");
        }
    }
}

#[test]
fn rescaled_density_tends_to_normal() {
    let grid = linspace(-4.0, 4.0, 801);
    let dist = |k: u64| sup_norm(&grid, &grid.iter().map(|&u| rescaled_pdf(u, k, 2.0)).collect::<Vec<_>>(), std_normal_pdf);
    let seq: Vec<f64> = [1u64, 10, 100, 500].iter().map(|&k| dist(k)).collect();
    assert!(seq.windows(2).all(|w| w[1] < w[0]), "{seq:?}");
    assert!(seq[3] < 0.02);
}

#[test]
fn joint_density_marginalizes_to_second_analog() {
    for &d in &[1.3, 2.0, 5.0] {
        let l = 1000;
        let p2 = DistParams::new(2, d, l).unwrap();
        for &r2 in &[0.5 * mean_rk(&p2), mean_rk(&p2), 1.4 * mean_rk(&p2)] {
            let marginal = quad().integrate(|r1| joint_pdf(&[r1, r2], d, l), 0.0, r2).value;
            assert!((marginal / pdf_rk(r2, &p2) - 1.0).abs() < 1e-8, "d={d} r2={r2}");
        }
    }
}

#[test]
fn joint_density_normalizes_for_two_analogs() {
    let (d, l) = (2.0, 1000);
    let hi = upper(&DistParams::new(2, d, l).unwrap());
    let q = quad();
    let total = q
        .integrate(|r2| q.integrate(|r1| joint_pdf(&[r1, r2], d, l), 0.0, r2).value, 0.0, hi)
        .value;
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn sampler_mean_within_four_standard_errors() {
    for &(k, d) in &[(1u64, 1.3), (5, 2.0), (30, 15.0)] {
        let p = DistParams::new(k, d, 1_000_000).unwrap();
        let n = 1_000_000;
        let draws = sample_rk(&p, n, 11);
        let mean = draws.iter().sum::<f64>() / n as f64;
        let se = std_rk(&p) / (n as f64).sqrt();
        assert!((mean - mean_rk(&p)).abs() < 4.0 * se, "k={k} d={d}");
    }
}

#[test]
fn sampler_passes_ks_on_grid() {
    for (i, p) in grid().into_iter().enumerate() {
        let draws = sample_rk(&p, 5000, 100 + i as u64);
        let stat = ks_distance(&draws, |r| 1.0 - survival_rk(r, &p));
        assert!(ks_pvalue(stat, 5000.0) > 0.01, "{p:?}: D={stat}");
    }
}

#[test]
fn joint_sampler_marginals_follow_the_law() {
    let paths = sample_joint(30, 2.0, 10_000, 1.0, 4000, 5);
    for &k in &[1usize, 15, 30] {
        let p = DistParams::new(k as u64, 2.0, 10_000).unwrap();
        let rk: Vec<f64> = paths.iter().map(|path| path[k - 1]).collect();
        let stat = ks_distance(&rk, |r| cdf_rk(r, &p));
        assert!(ks_pvalue(stat, rk.len() as f64) > 0.01, "k={k}");
    }
}

#[test]
fn rescaled_large_k_samples_look_normal() {
    let (k, d, l) = (500usize, 2.0, 1_000_000u64);
    let paths = sample_joint(k, d, l, 1.0, 20_000, 21);
    let c = (l as f64).powf(-1.0 / d);
    let u: Vec<f64> = paths
        .iter()
        .map(|path| *rescale_distances(&AnalogSet::from_distances(path.clone()), d, c).unwrap().last().unwrap())
        .collect();
    let grid = linspace(-4.0, 4.0, 161);
    let kde = gaussian_kde(&u, 0.2, Some(&grid)).unwrap();
    assert!(sup_norm(&kde.grid, &kde.values, std_normal_pdf) < 0.05);
}

#[test]
fn uniform_square_distances_follow_the_law() {
    // interior target: μ(B_r) = π r², i.e. d = 2 and ρ = π^{-1/2}
    let (l, n_catalogs) = (2000usize, 600);
    let z = [0.5, 0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let ks_ranks = [1usize, 5, 20];
    let mut samples = vec![Vec::new(); ks_ranks.len()];
    for _ in 0..n_catalogs {
        let data: Vec<f64> = (0..2 * l).map(|_| rng.random::<f64>()).collect();
        let c = Catalog::new(data, 2, None, CatalogMetadata::default()).unwrap();
        let a = knn(&c, &z, 20, &SearchOptions::with_exclusion(ExclusionPolicy::none(), None)).unwrap();
        for (s, &k) in samples.iter_mut().zip(&ks_ranks) {
            s.push(a.distances[k - 1]);
        }
    }
    let rho = 1.0 / std::f64::consts::PI.sqrt();
    for (s, &k) in samples.iter().zip(&ks_ranks) {
        let p = DistParams::with_rho(k as u64, 2.0, l as u64, rho).unwrap();
        let stat = ks_distance(s, |r| cdf_rk(r, &p));
        assert!(ks_pvalue(stat, s.len() as f64) > 0.01, "k={k}: D={stat}");
    }
}

#[test]
fn laplace_mean_closed_form_matches_inputs() {
    // sanity on the Gamma ratio used by the exact mean
    let p = DistParams::new(7, 3.0, 1000).unwrap();
    let direct = (ln_gamma(7.0 + 1.0 / 3.0) - ln_gamma(7.0)).exp() * 1000f64.powf(-1.0 / 3.0);
    assert!((mean_rk(&p) / direct - 1.0).abs() < 1e-13);
}
