//! BIC selection on synthetic mixtures with a known number of components.

use std::time::Instant;

use analog_dist::clustering::{gmm_fit, select_n_clusters, synthetic_mixture, GmmOptions};

fn success_rate(true_n: usize, dim: usize, per: usize, candidates: &[usize], tolerance: usize) -> usize {
    (0..10u64)
        .filter(|&run| {
            let (data, _) = synthetic_mixture(true_n, dim, per, 8.0, 1000 + run);
            let sel = select_n_clusters(&data, candidates, 3, run * 10, &GmmOptions::default()).unwrap();
            sel.best.abs_diff(true_n) <= tolerance
        })
        .count()
}

#[test]
fn single_gaussian_selects_one() {
    assert!(success_rate(1, 5, 400, &[1, 2, 3, 4, 5], 0) >= 9);
}

#[test]
fn three_clusters_select_three() {
    assert!(success_rate(3, 5, 200, &[1, 2, 3, 4, 5], 0) >= 9);
}

#[test]
fn ten_clusters_in_twenty_dimensions() {
    let start = Instant::now();
    let (data, _) = synthetic_mixture(10, 20, 150, 8.0, 77);
    let candidates: Vec<usize> = (2..=20).collect();
    let sel = select_n_clusters(&data, &candidates, 3, 0, &GmmOptions::default()).unwrap();
    assert!(sel.best.abs_diff(10) <= 1, "selected {}", sel.best);
    assert_eq!(sel.curve.len(), candidates.len());
    eprintln!("10-component selection took {:?}", start.elapsed());
}

#[test]
fn recovered_means_match_generator() {
    let (data, labels) = synthetic_mixture(3, 4, 300, 8.0, 5);
    let m = gmm_fit(&data, 3, 2, &GmmOptions::default()).unwrap();
    for c in 0..3 {
        let pts: Vec<&Vec<f64>> = data.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(x, _)| x).collect();
        let mean: Vec<f64> = (0..4).map(|i| pts.iter().map(|x| x[i]).sum::<f64>() / pts.len() as f64).collect();
        let closest = m
            .means
            .iter()
            .map(|mu| mu.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(closest < 0.1, "cluster {c}: {closest}");
    }
    assert!(m.ll_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
}
