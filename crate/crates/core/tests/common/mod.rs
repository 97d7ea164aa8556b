#![allow(dead_code)]

use coherent_sets::{ClusterState, FcmConfig, FuzzyCMeans, Geometry, TrajectoryEnsemble};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian-ish blobs drifting in time, optionally with random gaps.
pub fn random_ensemble(rng: &mut ChaCha8Rng, n: usize, d: usize, num_times: usize, gap: f64) -> TrajectoryEnsemble {
    let mut positions = Vec::with_capacity(n * num_times * d);
    for i in 0..n {
        let offset = (i % 3) as f64 * 2.0;
        for t in 0..num_times {
            for _ in 0..d {
                positions.push(offset + 0.3 * t as f64 + rng.random_range(-1.0..1.0));
            }
        }
    }
    let mut mask = vec![true; n * num_times];
    if gap > 0.0 {
        for i in 0..n {
            let row = &mut mask[i * num_times..(i + 1) * num_times];
            loop {
                for m in row.iter_mut() {
                    *m = !rng.random_bool(gap);
                }
                if row.iter().any(|&m| m) {
                    break;
                }
            }
        }
    }
    TrajectoryEnsemble::new(d, num_times, positions, mask).unwrap()
}

/// Row-major `n × k` memberships drawn uniformly and normalised.
pub fn random_memberships(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(n * k);
    for _ in 0..n {
        let row: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = row.iter().sum();
        u.extend(row.iter().map(|x| x / s));
    }
    u
}

/// Plain full-data fuzzy c-means on flattened vectors: returns the
/// sequence of (centers, memberships) after each iteration.
pub fn dense_reference(data: &[Vec<f64>], k: usize, m: f64, u0: &[f64], iterations: usize) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
    let len = data[0].len();
    let mut u = u0.to_vec();
    let mut out = Vec::new();
    for _ in 0..iterations {
        let mut centers = vec![vec![0.0; len]; k];
        for (c, center) in centers.iter_mut().enumerate() {
            let mut total = 0.0;
            for (i, x) in data.iter().enumerate() {
                let w = u[i * k + c].powf(m);
                total += w;
                for (a, v) in center.iter_mut().zip(x) {
                    *a += w * v;
                }
            }
            center.iter_mut().for_each(|a| *a /= total);
        }
        for (i, x) in data.iter().enumerate() {
            let dist: Vec<f64> = centers
                .iter()
                .map(|c| c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect();
            for c in 0..k {
                let s: f64 = dist.iter().map(|dj| (dist[c] / dj).powf(1.0 / (m - 1.0))).sum();
                u[i * k + c] = 1.0 / s;
            }
        }
        out.push((centers, u.clone()));
    }
    out
}

/// Random orthogonal matrix (d ≤ 3) via Gram–Schmidt, row-major.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            basis.push(v.iter().map(|a| a / norm).collect());
        }
    }
    if rng.random_bool(0.5) {
        basis[0].iter_mut().for_each(|a| *a = -*a);
    }
    basis
}

pub fn apply(q: &[Vec<f64>], shift: &[f64], x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = q[r].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + shift[r];
    }
}

pub fn model(e: &TrajectoryEnsemble, k: usize, m: f64) -> FuzzyCMeans {
    FuzzyCMeans::new(e, &Geometry::euclidean(), FcmConfig::new(k, m)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// True if the history never rises by more than `slack` (relative to its
/// first entry).
pub fn is_monotone(history: &[f64], slack: f64) -> bool {
    let scale = history.first().copied().unwrap_or(1.0).abs().max(1.0);
    history.windows(2).all(|w| w[1] <= w[0] + slack * scale)
}

pub fn iterate(model: &FuzzyCMeans, state: &mut ClusterState, steps: usize) -> Vec<ClusterState> {
    (0..steps)
        .map(|_| {
            model.step(state);
            state.clone()
        })
        .collect()
}
