//! Fuzzy c-means on trajectories embedded in space-time, with missing data.
//!
//! Each trajectory contributes only the slices where it is observed: centers
//! at slice `t` are weighted means over the trajectories observed at `t`, and
//! membership distances are summed over each trajectory's own support. With a
//! complete mask this is plain fuzzy c-means on the flattened
//! `d · num_times` vectors.
//!
//! All loops over trajectories that feed a sum are reduced in index order, so
//! results do not depend on the size of the thread pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{AvailabilityIndex, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, PreparedEnsemble};

/// Projected distances below this are treated as exact hits.
pub const ZERO_DISTANCE: f64 = 1e-14;
/// Smallest accepted `m − 1`.
pub const MIN_FUZZINESS_GAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    /// Membership rows drawn uniformly from the probability simplex.
    RandomMemberships,
    /// k-means++ seeding on pairwise dynamic distances, then one membership
    /// update.
    #[default]
    KmeansppCenters,
}

impl std::str::FromStr for Initialization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-memberships" | "random" => Ok(Self::RandomMemberships),
            "kmeanspp-centers" | "kmeanspp" | "kmeans++" => Ok(Self::KmeansppCenters),
            other => Err(Error::InvalidConfig(format!("unknown initialization {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcmConfig {
    /// Number of clusters.
    pub k: usize,
    /// Fuzziness exponent, `m > 1`.
    pub m: f64,
    pub init: Initialization,
    pub seed: u64,
    /// Stop when the relative objective improvement falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight each trajectory by `1 / |T_i|`.
    pub normalize_by_support: bool,
    /// Weight each trajectory by its mass. `None` enables mass weighting
    /// exactly when the ensemble carries masses that are not all 1.
    pub use_masses: Option<bool>,
    /// Independent initializations; the run with the lowest final objective
    /// is kept.
    pub restarts: usize,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self {
            k: 2,
            m: 2.0,
            init: Initialization::default(),
            seed: 0,
            tol: 1e-6,
            max_iter: 300,
            normalize_by_support: false,
            use_masses: None,
            restarts: 1,
        }
    }
}

impl FcmConfig {
    pub fn new(k: usize, m: f64) -> Self {
        Self { k, m, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: Initialization) -> Self {
        self.init = init;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_normalize_by_support(mut self, on: bool) -> Self {
        self.normalize_by_support = on;
        self
    }

    pub fn with_use_masses(mut self, on: bool) -> Self {
        self.use_masses = Some(on);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("K must be at least 2, got {}", self.k)));
        }
        if !(self.m > 1.0 + MIN_FUZZINESS_GAP) || !self.m.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "fuzziness m must exceed 1 + {MIN_FUZZINESS_GAP:e}, got {}",
                self.m
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Centers, memberships and convergence record of one clustering.
///
/// Centers are stored in the geometry's working coordinates (see
/// [`crate::geometry`]); use [`FuzzyCMeans::centers_in_data_space`] for
/// data-space values.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterState {
    n: usize,
    k: usize,
    num_times: usize,
    dim: usize,
    centers: Vec<f64>,
    center_defined: Vec<bool>,
    memberships: Vec<f64>,
    objective_history: Vec<f64>,
    iterations: usize,
    converged: bool,
    degenerate_slices: Vec<(usize, usize)>,
}

impl ClusterState {
    fn empty(n: usize, k: usize, num_times: usize, dim: usize) -> Self {
        Self {
            n,
            k,
            num_times,
            dim,
            centers: vec![0.0; k * num_times * dim],
            center_defined: vec![false; k * num_times],
            memberships: vec![0.0; n * k],
            objective_history: Vec::new(),
            iterations: 0,
            converged: false,
            degenerate_slices: Vec::new(),
        }
    }

    /// A bare membership matrix (row-major `n × k`) with no centers, for
    /// post-hoc analysis of stored results.
    pub fn from_memberships(n: usize, k: usize, memberships: Vec<f64>) -> Result<Self> {
        if memberships.len() != n * k || n == 0 || k == 0 {
            return Err(Error::InvalidConfig(format!(
                "expected {} membership values, found {}",
                n * k,
                memberships.len()
            )));
        }
        let mut state = Self::empty(n, k, 0, 0);
        state.memberships = memberships;
        Ok(state)
    }

    /// Rebuilds a state from stored memberships (row-major `n × k`) and
    /// working-space centers (`k × num_times × dim`).
    pub fn from_parts(
        k: usize,
        num_times: usize,
        dim: usize,
        memberships: Vec<f64>,
        centers: Vec<f64>,
        center_defined: Vec<bool>,
    ) -> Result<Self> {
        if k == 0 || !memberships.len().is_multiple_of(k) {
            return Err(Error::InvalidConfig("membership matrix does not have K columns".into()));
        }
        if centers.len() != k * num_times * dim || center_defined.len() != k * num_times {
            return Err(Error::InvalidConfig("center array has the wrong shape".into()));
        }
        let mut state = Self::empty(memberships.len() / k, k, num_times, dim);
        state.memberships = memberships;
        state.centers = centers;
        state.center_defined = center_defined;
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    /// Working dimension of one center slice.
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn membership(&self, i: usize, k: usize) -> f64 {
        self.memberships[i * self.k + k]
    }

    /// `[u_{1,i}, …, u_{K,i}]`
    pub fn membership_row(&self, i: usize) -> &[f64] {
        &self.memberships[i * self.k..(i + 1) * self.k]
    }

    /// Row-major `n × K` membership matrix.
    pub fn memberships(&self) -> &[f64] {
        &self.memberships
    }

    /// Flat time-major center `C_k` in working coordinates.
    pub fn center(&self, k: usize) -> &[f64] {
        let len = self.num_times * self.dim;
        &self.centers[k * len..(k + 1) * len]
    }

    pub fn center_slice(&self, k: usize, t: usize) -> &[f64] {
        let start = (k * self.num_times + t) * self.dim;
        &self.centers[start..start + self.dim]
    }

    pub fn is_center_defined(&self, k: usize, t: usize) -> bool {
        self.center_defined[k * self.num_times + t]
    }

    pub fn center_defined(&self, k: usize) -> &[bool] {
        &self.center_defined[k * self.num_times..(k + 1) * self.num_times]
    }

    pub fn objective_history(&self) -> &[f64] {
        &self.objective_history
    }

    pub fn objective(&self) -> Option<f64> {
        self.objective_history.last().copied()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// `(k, t)` slices whose last center update had zero total weight or a
    /// degenerate spherical mean; those slices kept their previous value.
    pub fn degenerate_slices(&self) -> &[(usize, usize)] {
        &self.degenerate_slices
    }
}

/// A clustering problem: working-space data, availability index and config.
#[derive(Clone, Debug)]
pub struct FuzzyCMeans {
    prepared: PreparedEnsemble,
    index: AvailabilityIndex,
    config: FcmConfig,
    /// Per-trajectory factor multiplying `u^m`: mass and/or `1/|T_i|`.
    weights: Vec<f64>,
}

impl FuzzyCMeans {
    pub fn new(e: &TrajectoryEnsemble, g: &Geometry, config: FcmConfig) -> Result<Self> {
        config.validate()?;
        if e.n() < config.k {
            return Err(Error::InvalidConfig(format!(
                "need at least K = {} trajectories, have {}",
                config.k,
                e.n()
            )));
        }
        let prepared = g.prepare(e)?;
        let index = AvailabilityIndex::build(prepared.data());
        let use_masses = config
            .use_masses
            .unwrap_or_else(|| e.masses().is_some_and(|q| q.iter().any(|&x| x != 1.0)));
        let weights = (0..e.n())
            .map(|i| {
                let mut w = if use_masses { e.mass(i) } else { 1.0 };
                if config.normalize_by_support {
                    w /= e.support_len(i) as f64;
                }
                w
            })
            .collect();
        Ok(Self { prepared, index, config, weights })
    }

    pub fn config(&self) -> &FcmConfig {
        &self.config
    }

    pub fn prepared(&self) -> &PreparedEnsemble {
        &self.prepared
    }

    pub fn index(&self) -> &AvailabilityIndex {
        &self.index
    }

    fn data(&self) -> &TrajectoryEnsemble {
        self.prepared.data()
    }

    fn blank_state(&self) -> ClusterState {
        let e = self.data();
        ClusterState::empty(e.n(), self.config.k, e.num_times(), e.d())
    }

    /// State holding the given row-major `n × K` memberships and no centers.
    pub fn state_from_memberships(&self, memberships: Vec<f64>) -> Result<ClusterState> {
        let mut state = self.blank_state();
        if memberships.len() != state.memberships.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} membership values, found {}",
                state.memberships.len(),
                memberships.len()
            )));
        }
        for row in memberships.chunks(self.config.k) {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&u| !(0.0..=1.0).contains(&u)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig("memberships must be row-stochastic".into()));
            }
        }
        state.memberships = memberships;
        Ok(state)
    }

    pub fn initialize(&self) -> Result<ClusterState> {
        self.initialize_with_seed(self.config.seed)
    }

    fn initialize_with_seed(&self, seed: u64) -> Result<ClusterState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self.config.init {
            Initialization::RandomMemberships => {
                let mut state = self.blank_state();
                for row in state.memberships.chunks_mut(self.config.k) {
                    for u in row.iter_mut() {
                        let draw: f64 = Exp1.sample(&mut rng);
                        *u = draw;
                    }
                    let sum: f64 = row.iter().sum();
                    row.iter_mut().for_each(|u| *u /= sum);
                }
                Ok(state)
            }
            Initialization::KmeansppCenters => {
                let seeds = kmeanspp_seeds(&self.prepared, self.config.k, &mut rng)?;
                let mut state = self.blank_state();
                let e = self.data();
                let dim = e.d();
                for (k, &i) in seeds.iter().enumerate() {
                    for t in e.support(i) {
                        let start = (k * e.num_times() + t) * dim;
                        state.centers[start..start + dim].copy_from_slice(e.position(i, t));
                        state.center_defined[k * e.num_times() + t] = true;
                    }
                }
                self.update_memberships(&mut state);
                Ok(state)
            }
        }
    }

    /// Center update: at each slice, the `w_i u_{k,i}^m`-weighted mean of the
    /// trajectories observed there, under the geometry's mean rule.
    pub fn update_centers(&self, state: &mut ClusterState) {
        let e = self.data();
        let (k_count, num_times, dim) = (self.config.k, e.num_times(), e.d());
        let m = self.config.m;
        let powered: Vec<f64> = state
            .memberships
            .par_chunks(k_count)
            .zip(self.weights.par_iter())
            .flat_map_iter(|(row, &w)| row.iter().map(move |&u| w * u.powf(m)))
            .collect();
        let metric = self.prepared.metric();

        // slice t → (per-cluster mean or None)
        let slices: Vec<Vec<Option<Vec<f64>>>> = (0..num_times)
            .into_par_iter()
            .map(|t| {
                let members = self.index.at(t);
                if members.is_empty() {
                    return vec![None; k_count];
                }
                let mut acc = vec![0.0; k_count * dim];
                let mut totals = vec![0.0; k_count];
                for &i in members {
                    let x = e.position(i, t);
                    for k in 0..k_count {
                        let w = powered[i * k_count + k];
                        totals[k] += w;
                        for (a, xv) in acc[k * dim..(k + 1) * dim].iter_mut().zip(x) {
                            *a += w * xv;
                        }
                    }
                }
                (0..k_count)
                    .map(|k| {
                        let mut mean = acc[k * dim..(k + 1) * dim].to_vec();
                        metric.finish_mean(&mut mean, totals[k]).ok().map(|_| mean)
                    })
                    .collect()
            })
            .collect();

        state.degenerate_slices.clear();
        for (t, per_cluster) in slices.into_iter().enumerate() {
            let observed = !self.index.at(t).is_empty();
            for (k, mean) in per_cluster.into_iter().enumerate() {
                match mean {
                    Some(c) => {
                        let start = (k * num_times + t) * dim;
                        state.centers[start..start + dim].copy_from_slice(&c);
                        state.center_defined[k * num_times + t] = true;
                    }
                    None if observed => state.degenerate_slices.push((k, t)),
                    None => state.center_defined[k * num_times + t] = false,
                }
            }
        }
    }

    /// Projected distances `D_{k,i}` as a row-major `n × K` matrix. Pairs with
    /// no defined center slice on `T_i` (possible only right after k-means++
    /// seeding) receive the largest finite distance in the matrix.
    pub fn distances(&self, state: &ClusterState) -> Vec<f64> {
        let k_count = self.config.k;
        let raw: Vec<Option<f64>> = (0..self.data().n())
            .into_par_iter()
            .flat_map_iter(|i| {
                (0..k_count).map(move |k| {
                    self.prepared
                        .partial_center_distance(i, state.center(k), state.center_defined(k))
                })
            })
            .collect();
        let fallback = raw.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let fallback = if fallback.is_finite() && fallback > 0.0 { fallback } else { 1.0 };
        raw.into_iter().map(|d| d.unwrap_or(fallback)).collect()
    }

    fn memberships_from_distances(&self, distances: &[f64], memberships: &mut [f64]) {
        let exponent = 1.0 / (self.config.m - 1.0);
        memberships
            .par_chunks_mut(self.config.k)
            .zip(distances.par_chunks(self.config.k))
            .for_each(|(row, dist)| membership_row(dist, exponent, row));
    }

    /// Membership update `u_{k,i} ∝ D_{k,i}^{-1/(m-1)}`.
    pub fn update_memberships(&self, state: &mut ClusterState) {
        let distances = self.distances(state);
        self.memberships_from_distances(&distances, &mut state.memberships);
    }

    fn objective_from_distances(&self, state: &ClusterState, distances: &[f64]) -> f64 {
        let k_count = self.config.k;
        let m = self.config.m;
        let per_row: Vec<f64> = state
            .memberships
            .par_chunks(k_count)
            .zip(distances.par_chunks(k_count))
            .zip(self.weights.par_iter())
            .map(|((u, d), &w)| w * u.iter().zip(d).map(|(u, d)| u.powf(m) * d).sum::<f64>())
            .collect();
        per_row.iter().sum()
    }

    /// `Σ_k Σ_i w_i u_{k,i}^m ‖π_i X_i − π_i C_k‖²`
    pub fn objective(&self, state: &ClusterState) -> f64 {
        self.objective_from_distances(state, &self.distances(state))
    }

    /// One iteration: centers, memberships, objective. Returns the objective.
    pub fn step(&self, state: &mut ClusterState) -> f64 {
        self.update_centers(state);
        let distances = self.distances(state);
        self.memberships_from_distances(&distances, &mut state.memberships);
        let j = self.objective_from_distances(state, &distances);
        state.objective_history.push(j);
        state.iterations += 1;
        j
    }

    /// Iterates from `state` until the relative objective improvement drops
    /// below `tol` or `max_iter` iterations have run.
    pub fn run_from(&self, mut state: ClusterState) -> ClusterState {
        state.converged = false;
        for _ in 0..self.config.max_iter {
            let previous = state.objective();
            let current = self.step(&mut state);
            if let Some(prev) = previous {
                if (prev - current) / prev.max(f64::MIN_POSITIVE) < self.config.tol {
                    state.converged = true;
                    break;
                }
            }
        }
        state
    }

    /// Runs every restart and keeps the lowest final objective (earliest on
    /// ties).
    pub fn run(&self) -> Result<ClusterState> {
        let runs: Vec<Result<ClusterState>> = (0..self.config.restarts)
            .into_par_iter()
            .map(|r| {
                let seed = restart_seed(self.config.seed, r);
                Ok(self.run_from(self.initialize_with_seed(seed)?))
            })
            .collect();
        let mut best: Option<ClusterState> = None;
        for run in runs {
            let run = run?;
            let better = match &best {
                None => true,
                Some(b) => run.objective().unwrap_or(f64::INFINITY) < b.objective().unwrap_or(f64::INFINITY),
            };
            if better {
                best = Some(run);
            }
        }
        best.ok_or_else(|| Error::InvalidConfig("no restarts".into()))
    }

    /// Centers mapped back to data coordinates as a flat
    /// `K × num_times × d` array, NaN where undefined.
    pub fn centers_in_data_space(&self, state: &ClusterState) -> Vec<f64> {
        let geometry = self.prepared.geometry();
        let convention = self.prepared.convention();
        let mut out = Vec::new();
        for k in 0..state.k {
            for t in 0..state.num_times {
                let mapped = geometry.from_working(state.center_slice(k, t), convention);
                if state.is_center_defined(k, t) {
                    out.extend(mapped);
                } else {
                    out.extend(std::iter::repeat_n(f64::NAN, mapped.len()));
                }
            }
        }
        out
    }
}

/// Seed of restart `r`; restart 0 uses the configured seed itself.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn membership_row(dist: &[f64], exponent: f64, row: &mut [f64]) {
    let zeros = dist.iter().filter(|&&d| d < ZERO_DISTANCE).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        for (u, &d) in row.iter_mut().zip(dist) {
            *u = if d < ZERO_DISTANCE { share } else { 0.0 };
        }
        return;
    }
    // (D_min / D_k)^p is in (0, 1], so the normalisation cannot overflow
    let min = dist.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (u, &d) in row.iter_mut().zip(dist) {
        *u = (min / d).powf(exponent);
        sum += *u;
    }
    row.iter_mut().for_each(|u| *u /= sum);
}

/// k-means++ on dynamic distances restricted to common support. Pairs with
/// no common support count as the largest finite distance seen so far.
fn kmeanspp_seeds(prepared: &PreparedEnsemble, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let n = prepared.data().n();
    let mut seeds = vec![rng.random_range(0..n)];
    let mut nearest: Vec<Option<f64>> = vec![None; n];
    let mut max_finite: f64 = 0.0;
    while seeds.len() < k {
        let last = *seeds.last().expect("nonempty");
        let to_last: Vec<Option<f64>> = (0..n)
            .into_par_iter()
            .map(|i| prepared.dynamic_distance(i, last).ok())
            .collect();
        for (slot, d) in nearest.iter_mut().zip(to_last) {
            if let Some(d) = d {
                max_finite = max_finite.max(d);
                *slot = Some(slot.map_or(d, |cur| cur.min(d)));
            }
        }
        let weights: Vec<f64> = nearest
            .iter()
            .enumerate()
            .map(|(i, d)| if seeds.contains(&i) { 0.0 } else { d.unwrap_or(max_finite) })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target == total; take the last candidate
            pick.unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            let remaining: Vec<usize> = (0..n).filter(|i| !seeds.contains(i)).collect();
            remaining[rng.random_range(0..remaining.len())]
        };
        seeds.push(next);
    }
    Ok(seeds)
}

/// Runs fuzzy c-means on `e` under geometry `g`.
pub fn run(e: &TrajectoryEnsemble, g: &Geometry, config: FcmConfig) -> Result<ClusterState> {
    FuzzyCMeans::new(e, g, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64], num_times: usize) -> TrajectoryEnsemble {
        TrajectoryEnsemble::from_complete(1, num_times, values.to_vec()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(FcmConfig::new(1, 2.0).validate().is_err());
        assert!(FcmConfig::new(2, 1.0).validate().is_err());
        assert!(FcmConfig::new(2, 1.0 + 1e-7).validate().is_err());
        assert!(FcmConfig::new(2, 1.1).validate().is_ok());
        assert!(FcmConfig::new(2, 2.0).with_tol(0.0).validate().is_err());
        assert!(FcmConfig::new(2, 2.0).with_max_iter(0).validate().is_err());
    }

    #[test]
    fn rejects_more_clusters_than_trajectories() {
        let e = line(&[0.0, 1.0], 1);
        assert!(FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(3, 2.0)).is_err());
    }

    #[test]
    fn membership_hand_values() {
        let mut row = [0.0; 2];
        membership_row(&[2.0, 2.0], 1.0, &mut row);
        assert_eq!(row, [0.5, 0.5]);
        membership_row(&[1.0, 3.0], 1.0, &mut row);
        assert!((row[0] - 0.75).abs() < 1e-15 && (row[1] - 0.25).abs() < 1e-15);
        membership_row(&[0.0, 3.0], 1.0, &mut row);
        assert_eq!(row, [1.0, 0.0]);
        let mut row3 = [0.0; 3];
        membership_row(&[0.0, 5.0, 1e-15], 10.0, &mut row3);
        assert_eq!(row3, [0.5, 0.0, 0.5]);
    }

    #[test]
    fn membership_tiny_exponent_base_does_not_overflow() {
        let mut row = [0.0; 2];
        membership_row(&[1e-10, 1e3], 100.0, &mut row);
        assert_eq!(row, [1.0, 0.0]);
        assert!(row.iter().all(|u| u.is_finite()));
    }

    #[test]
    fn center_update_hand_value() {
        // n=2, d=1, u=(1/2,1/2) for both clusters, m=2, x=(0,2)
        let e = line(&[0.0, 2.0], 1);
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0)).unwrap();
        let mut state = model.state_from_memberships(vec![0.5; 4]).unwrap();
        model.update_centers(&mut state);
        assert_eq!(state.center_slice(0, 0), &[1.0]);
        assert_eq!(state.center_slice(1, 0), &[1.0]);
    }

    #[test]
    fn center_update_single_observer() {
        let e = TrajectoryEnsemble::new(1, 2, vec![3.0, 5.0, 9.0, 7.0], vec![true, true, false, true]).unwrap();
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0)).unwrap();
        let mut state = model.state_from_memberships(vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        model.update_centers(&mut state);
        assert_eq!(state.center_slice(0, 0), &[3.0]);
        assert_eq!(state.center_slice(1, 0), &[3.0]);
    }

    #[test]
    fn empty_slice_leaves_center_undefined() {
        let e = TrajectoryEnsemble::new(1, 2, vec![1.0, 0.0, 2.0, 0.0], vec![true, false, true, false]).unwrap();
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0)).unwrap();
        let mut state = model.state_from_memberships(vec![0.7, 0.3, 0.4, 0.6]).unwrap();
        model.step(&mut state);
        assert!(state.is_center_defined(0, 0));
        assert!(!state.is_center_defined(0, 1));
        assert!(state.degenerate_slices().is_empty());
        assert!(model.centers_in_data_space(&state)[1].is_nan());
    }

    #[test]
    fn zero_weight_slice_keeps_previous_center() {
        let e = line(&[0.0, 10.0], 1);
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0)).unwrap();
        let mut state = model.state_from_memberships(vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        model.update_centers(&mut state);
        state.memberships = vec![1.0, 0.0, 1.0, 0.0];
        model.update_centers(&mut state);
        assert_eq!(state.degenerate_slices(), &[(1, 0)]);
        assert_eq!(state.center_slice(1, 0), &[5.0]);
    }

    #[test]
    fn objective_hand_values() {
        // n=1 trajectory (0,0) vs center (1,2): distance 5
        let e = TrajectoryEnsemble::from_complete(1, 2, vec![0.0, 0.0, 10.0, 10.0]).unwrap();
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0)).unwrap();
        let mut state = model.state_from_memberships(vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        state.centers = vec![1.0, 2.0, 10.0, 10.0];
        state.center_defined = vec![true; 4];
        assert_eq!(model.objective(&state), 5.0);

        let halved = FuzzyCMeans::new(
            &e,
            &Geometry::euclidean(),
            FcmConfig::new(2, 2.0).with_normalize_by_support(true),
        )
        .unwrap();
        assert_eq!(halved.objective(&state), 2.5);
    }

    #[test]
    fn masses_scale_objective() {
        let e = TrajectoryEnsemble::from_complete(1, 1, vec![0.0, 4.0]).unwrap().with_masses(vec![3.0, 1.0]).unwrap();
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0)).unwrap();
        let mut state = model.state_from_memberships(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        model.update_centers(&mut state);
        // mass-weighted mean (3·0 + 1·4)/4
        assert_eq!(state.center_slice(0, 0), &[1.0]);
        let off = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0).with_use_masses(false)).unwrap();
        let mut state = off.state_from_memberships(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        off.update_centers(&mut state);
        assert_eq!(state.center_slice(0, 0), &[2.0]);
    }

    #[test]
    fn kmeanspp_with_n_equal_k_gives_one_hot() {
        let e = line(&[0.0, 0.0, 5.0, 5.0, 9.0, 1.0], 2);
        let cfg = FcmConfig::new(3, 2.0).with_seed(4);
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), cfg).unwrap();
        let state = model.initialize().unwrap();
        for i in 0..3 {
            let row = state.membership_row(i);
            assert_eq!(row.iter().filter(|&&u| u == 1.0).count(), 1, "{row:?}");
        }
    }

    #[test]
    fn kmeanspp_stall_falls_back_to_distinct_indices() {
        // every trajectory identical → all candidate distances zero
        let e = line(&[1.0; 8], 2);
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(3, 2.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seeds = kmeanspp_seeds(model.prepared(), 3, &mut rng).unwrap();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 3);
    }

    #[test]
    fn kmeanspp_handles_disjoint_supports() {
        let mask = vec![true, false, false, true, true, true];
        let e = TrajectoryEnsemble::new(1, 2, vec![0.0, 0.0, 0.0, 4.0, 1.0, 3.0], mask).unwrap();
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0).with_seed(3)).unwrap();
        let state = model.initialize().unwrap();
        for i in 0..3 {
            let s: f64 = state.membership_row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let out = model.run_from(state);
        assert!(out.objective().unwrap().is_finite());
    }

    #[test]
    fn random_init_is_row_stochastic_and_deterministic() {
        let e = line(&(0..40).map(f64::from).collect::<Vec<_>>(), 4);
        let cfg = FcmConfig::new(3, 2.0).with_init(Initialization::RandomMemberships).with_seed(9);
        let model = FuzzyCMeans::new(&e, &Geometry::euclidean(), cfg).unwrap();
        let a = model.initialize().unwrap();
        let b = model.initialize().unwrap();
        assert_eq!(a, b);
        for i in 0..10 {
            let s: f64 = a.membership_row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn separated_bundles_become_one_hot() {
        let mut values = Vec::new();
        for i in 0..10 {
            let base = if i < 5 { 0.0 } else { 100.0 };
            for t in 0..3 {
                values.push(base + 0.01 * (i as f64) + 0.1 * t as f64);
            }
        }
        let e = line(&values, 3);
        let state = run(&e, &Geometry::euclidean(), FcmConfig::new(2, 2.0).with_seed(1)).unwrap();
        assert!(state.converged());
        let first = if state.membership(0, 0) > 0.5 { 0 } else { 1 };
        for i in 0..10 {
            let own = if i < 5 { first } else { 1 - first };
            assert!(state.membership(i, own) > 1.0 - 1e-6, "{i}: {:?}", state.membership_row(i));
        }
    }

    #[test]
    fn sphere_centers_stay_unit() {
        let pts: Vec<f64> = (0..12)
            .flat_map(|i| {
                let lon = if i < 6 { -150.0 + i as f64 } else { 20.0 + i as f64 };
                [lon, 10.0 - i as f64, lon + 3.0, 12.0 - i as f64]
            })
            .collect();
        let e = TrajectoryEnsemble::from_complete(2, 2, pts)
            .unwrap()
            .with_coordinates(crate::ensemble::CoordinateConvention::LonlatDegrees)
            .unwrap();
        let model = FuzzyCMeans::new(&e, &Geometry::sphere(), FcmConfig::new(2, 1.5)).unwrap();
        let state = model.run().unwrap();
        for k in 0..2 {
            for t in 0..2 {
                let norm = state.center_slice(k, t).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-9);
            }
        }
        let centers = model.centers_in_data_space(&state);
        assert_eq!(centers.len(), 2 * 2 * 2);
    }

    #[test]
    fn restarts_never_worse_than_single_run() {
        let values: Vec<f64> = (0..60).map(|i| ((i * 37) % 23) as f64).collect();
        let e = line(&values, 3);
        let single = run(&e, &Geometry::euclidean(), FcmConfig::new(3, 2.0).with_seed(5)).unwrap();
        let multi = run(&e, &Geometry::euclidean(), FcmConfig::new(3, 2.0).with_seed(5).with_restarts(4)).unwrap();
        assert!(multi.objective().unwrap() <= single.objective().unwrap());
    }
}
