//! Post-clustering analysis: classification entropy, hard and
//! maximum-likelihood assignments, near-coincident centers, and sweeps over
//! the fuzziness exponent and the number of clusters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterState, FcmConfig, FuzzyCMeans};
use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Metric, PreparedEnsemble};

pub const DEFAULT_COLLAPSE_RATIO: f64 = 0.05;
pub const DEFAULT_CONFIDENCE: [f64; 2] = [0.9, 0.95];
/// Trajectories sampled when estimating the data diameter.
pub const DIAMETER_SAMPLE: usize = 1000;

/// Normalised membership entropy `h_i ∈ [0, 1]` of every trajectory.
pub fn entropy_field(state: &ClusterState) -> Result<Vec<f64>> {
    let k = state.k();
    if k < 2 {
        return Err(Error::InvalidConfig("entropy needs K ≥ 2".into()));
    }
    let log_k = (k as f64).ln();
    Ok((0..state.n())
        .map(|i| {
            let h: f64 = state
                .membership_row(i)
                .iter()
                .filter(|&&u| u > 0.0)
                .map(|&u| -u * u.ln())
                .sum();
            (h / log_k).clamp(0.0, 1.0)
        })
        .collect())
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, v) in values.enumerate() {
        if v > best.1 {
            best = (j, v);
        }
    }
    best.0
}

/// `argmax_k u_{k,i}` per trajectory, lowest `k` on ties.
pub fn hard_partition(state: &ClusterState) -> Vec<usize> {
    (0..state.n()).map(|i| argmax(state.membership_row(i).iter().copied())).collect()
}

/// `argmax_i u_{k,i}` per cluster, lowest `i` on ties.
pub fn max_likelihood_trajectories(state: &ClusterState) -> Vec<usize> {
    (0..state.k())
        .map(|k| argmax((0..state.n()).map(|i| state.membership(i, k))))
        .collect()
}

/// Number of trajectories whose largest membership exceeds each threshold.
pub fn confidence_threshold_counts(state: &ClusterState, thresholds: &[f64]) -> Vec<ConfidenceCount> {
    let peaks: Vec<f64> = (0..state.n())
        .map(|i| state.membership_row(i).iter().copied().fold(0.0, f64::max))
        .collect();
    thresholds
        .iter()
        .map(|&threshold| ConfidenceCount {
            threshold,
            count: peaks.iter().filter(|&&p| p > threshold).count(),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceCount {
    pub threshold: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapsePair {
    pub k: usize,
    pub other: usize,
    /// Root of the summed per-slice center dissimilarity.
    pub distance: f64,
    /// `distance` divided by the sampled data diameter.
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub ratio: f64,
    /// Root of the largest dynamic distance among the sampled trajectories.
    pub diameter: f64,
    pub sample_size: usize,
    pub pairs: Vec<CollapsePair>,
}

impl CollapseReport {
    pub fn is_collapsed(&self) -> bool {
        !self.pairs.is_empty()
    }
}

fn check_state(prepared: &PreparedEnsemble, state: &ClusterState) -> Result<()> {
    let e = prepared.data();
    if state.n() != e.n() || state.num_times() != e.num_times() || state.dim() != prepared.dim() {
        return Err(Error::InvalidConfig("cluster state does not match the ensemble".into()));
    }
    Ok(())
}

/// Summed dissimilarity of two working-space centers over the slices where
/// both are defined; `None` if there is no such slice.
fn center_distance(metric: Metric, a: &ClusterState, ka: usize, b: &ClusterState, kb: usize) -> Option<f64> {
    let mut sum = 0.0;
    let mut any = false;
    for t in 0..a.num_times().min(b.num_times()) {
        if a.is_center_defined(ka, t) && b.is_center_defined(kb, t) {
            sum += metric.dissimilarity(a.center_slice(ka, t), b.center_slice(kb, t));
            any = true;
        }
    }
    any.then_some(sum)
}

/// Largest pairwise dynamic distance among at most `sample_size` trajectories
/// drawn with `seed`.
pub fn sampled_diameter_squared(prepared: &PreparedEnsemble, sample_size: usize, seed: u64) -> f64 {
    let n = prepared.data().n();
    let sample: Vec<usize> = if n <= sample_size {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = rand::seq::index::sample(&mut rng, n, sample_size).into_vec();
        s.sort_unstable();
        s
    };
    sample
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            sample[a + 1..]
                .iter()
                .filter_map(|&j| prepared.dynamic_distance(i, j).ok())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Flags center pairs closer than `ratio` times the sampled data diameter.
pub fn detect_center_collapse(
    e: &TrajectoryEnsemble,
    g: &Geometry,
    state: &ClusterState,
    ratio: f64,
) -> Result<CollapseReport> {
    detect_center_collapse_with(e, g, state, ratio, DIAMETER_SAMPLE, 0)
}

pub fn detect_center_collapse_with(
    e: &TrajectoryEnsemble,
    g: &Geometry,
    state: &ClusterState,
    ratio: f64,
    sample_size: usize,
    seed: u64,
) -> Result<CollapseReport> {
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return Err(Error::InvalidConfig(format!("collapse ratio must be nonnegative, got {ratio}")));
    }
    let prepared = g.prepare(e)?;
    check_state(&prepared, state)?;
    let diameter = sampled_diameter_squared(&prepared, sample_size.max(2), seed).sqrt();
    let metric = prepared.metric();
    let mut pairs = Vec::new();
    for k in 0..state.k() {
        for other in k + 1..state.k() {
            if let Some(s) = center_distance(metric, state, k, state, other) {
                let distance = s.sqrt();
                if distance <= ratio * diameter {
                    let relative = if diameter > 0.0 { distance / diameter } else { 0.0 };
                    pairs.push(CollapsePair { k, other, distance, relative });
                }
            }
        }
    }
    Ok(CollapseReport { ratio, diameter, sample_size: sample_size.min(e.n()), pairs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOptions {
    pub collapse_ratio: f64,
    pub confidence: Vec<f64>,
    pub sample_size: usize,
    pub sample_seed: u64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            collapse_ratio: DEFAULT_COLLAPSE_RATIO,
            confidence: DEFAULT_CONFIDENCE.to_vec(),
            sample_size: DIAMETER_SAMPLE,
            sample_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    pub entropy: Vec<f64>,
    pub hard_labels: Vec<usize>,
    pub ml_trajectory: Vec<usize>,
    pub collapse: CollapseReport,
    pub confidence_counts: Vec<ConfidenceCount>,
}

impl ClusterDiagnostics {
    pub fn mean_entropy(&self) -> f64 {
        self.entropy.iter().sum::<f64>() / self.entropy.len() as f64
    }
}

pub fn diagnose(
    e: &TrajectoryEnsemble,
    g: &Geometry,
    state: &ClusterState,
    options: &DiagnosticsOptions,
) -> Result<ClusterDiagnostics> {
    Ok(ClusterDiagnostics {
        entropy: entropy_field(state)?,
        hard_labels: hard_partition(state),
        ml_trajectory: max_likelihood_trajectories(state),
        collapse: detect_center_collapse_with(
            e,
            g,
            state,
            options.collapse_ratio,
            options.sample_size,
            options.sample_seed,
        )?,
        confidence_counts: confidence_threshold_counts(state, &options.confidence),
    })
}

/// Minimum-cost assignment for a square cost matrix: `result[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    // potentials over 1-based rows/columns, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if !used[col] {
                    let reduced = cost[r0 - 1][col - 1] - u[r0] - v[col];
                    if reduced < minv[col] {
                        minv[col] = reduced;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for col in 1..=n {
        result[owner[col] - 1] = col - 1;
    }
    result
}

/// Relabels `b` to agree with `a` as often as possible. Returns the map from
/// `b`'s labels to `a`'s and the fraction of agreeing entries.
pub fn match_partitions(a: &[usize], b: &[usize]) -> (Vec<usize>, f64) {
    assert_eq!(a.len(), b.len(), "partitions must have equal length");
    let size = a.iter().chain(b).copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0.0; size]; size];
    for (&la, &lb) in a.iter().zip(b) {
        counts[lb][la] += 1.0;
    }
    let cost: Vec<Vec<f64>> = counts.iter().map(|r| r.iter().map(|c| -c).collect()).collect();
    let map = min_cost_assignment(&cost);
    let agree = a.iter().zip(b).filter(|(&la, &lb)| map[lb] == la).count();
    let fraction = if a.is_empty() { 1.0 } else { agree as f64 / a.len() as f64 };
    (map, fraction)
}

/// Agreement fraction after the best relabelling.
pub fn partition_agreement(a: &[usize], b: &[usize]) -> f64 {
    match_partitions(a, b).1
}

/// Matches the clusters of `b` to those of `a` by minimal summed center
/// dissimilarity: `result[k_b] = k_a`. Pairs without a common defined slice
/// cost the largest finite pair cost.
pub fn match_centers(metric: Metric, a: &ClusterState, b: &ClusterState) -> Vec<usize> {
    let size = a.k().max(b.k());
    let raw: Vec<Vec<Option<f64>>> = (0..size)
        .map(|kb| {
            (0..size)
                .map(|ka| (kb < b.k() && ka < a.k()).then(|| center_distance(metric, a, ka, b, kb)).flatten())
                .collect()
        })
        .collect();
    let worst = raw.iter().flatten().flatten().copied().fold(0.0, f64::max);
    let cost: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| r.iter().map(|c| c.unwrap_or(worst)).collect())
        .collect();
    min_cost_assignment(&cost)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MSweepRow {
    pub m: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub ml_trajectory: Vec<usize>,
    /// Earliest observed slice of each maximum-likelihood trajectory.
    pub t0: Vec<usize>,
    /// Data-space position of each maximum-likelihood trajectory at its `t0`.
    pub positions: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MSweepDrift {
    pub from_m: f64,
    pub to_m: f64,
    /// `assignment[k_to] = k_from`.
    pub assignment: Vec<usize>,
    /// Euclidean displacement, in data coordinates, of each matched
    /// maximum-likelihood position.
    pub displacement: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MSweepReport {
    pub rows: Vec<MSweepRow>,
    pub drifts: Vec<MSweepDrift>,
    #[serde(skip)]
    pub states: Vec<ClusterState>,
}

/// Clusters once per `m` (same seed) and tracks how far the
/// maximum-likelihood trajectories move between consecutive values.
pub fn m_stability_sweep(
    e: &TrajectoryEnsemble,
    g: &Geometry,
    base: &FcmConfig,
    m_values: &[f64],
) -> Result<MSweepReport> {
    let models = m_values
        .iter()
        .map(|&m| FuzzyCMeans::new(e, g, FcmConfig { m, ..base.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let states = models.par_iter().map(FuzzyCMeans::run).collect::<Result<Vec<_>>>()?;
    let rows: Vec<MSweepRow> = m_values
        .iter()
        .zip(&states)
        .map(|(&m, state)| {
            let ml = max_likelihood_trajectories(state);
            let t0: Vec<usize> = ml.iter().map(|&i| e.support(i).next().expect("nonempty support")).collect();
            let positions = ml.iter().zip(&t0).map(|(&i, &t)| e.position(i, t).to_vec()).collect();
            MSweepRow {
                m,
                objective: state.objective().unwrap_or(f64::NAN),
                iterations: state.iterations(),
                converged: state.converged(),
                ml_trajectory: ml,
                t0,
                positions,
            }
        })
        .collect();
    let metric = models.first().map_or(Metric::SquaredEuclidean, |m| m.prepared().metric());
    let drifts = (1..rows.len())
        .map(|j| {
            let assignment = match_centers(metric, &states[j - 1], &states[j]);
            let displacement = (0..rows[j].positions.len())
                .map(|k| {
                    let from = &rows[j - 1].positions[assignment[k]];
                    let to = &rows[j].positions[k];
                    from.iter().zip(to).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                })
                .collect();
            MSweepDrift { from_m: rows[j - 1].m, to_m: rows[j].m, assignment, displacement }
        })
        .collect();
    Ok(MSweepReport { rows, drifts, states })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub k: usize,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mean_entropy: f64,
    pub max_entropy: f64,
    pub collapse: CollapseReport,
    pub confidence_counts: Vec<ConfidenceCount>,
}

/// Clusters once per `K` and summarises each result.
pub fn k_stability_sweep(
    e: &TrajectoryEnsemble,
    g: &Geometry,
    base: &FcmConfig,
    k_values: &[usize],
    options: &DiagnosticsOptions,
) -> Result<Vec<KSweepRow>> {
    k_values
        .par_iter()
        .map(|&k| {
            let state = FuzzyCMeans::new(e, g, FcmConfig { k, ..base.clone() })?.run()?;
            let d = diagnose(e, g, &state, options)?;
            Ok(KSweepRow {
                k,
                objective: state.objective().unwrap_or(f64::NAN),
                iterations: state.iterations(),
                converged: state.converged(),
                mean_entropy: d.mean_entropy(),
                max_entropy: d.entropy.iter().copied().fold(0.0, f64::max),
                collapse: d.collapse,
                confidence_counts: d.confidence_counts,
            })
        })
        .collect()
}
