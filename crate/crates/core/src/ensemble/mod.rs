//! Trajectory data model.
//!
//! A [`TrajectoryEnsemble`] stores `n` trajectories sampled on a common grid
//! of `num_times` slices in `d` dimensions. Observations that are missing are
//! marked in an explicit availability mask; the coordinate storage behind a
//! masked-out cell is kept at zero and never read by the algorithms.

mod io;

pub use io::{
    load_ensemble, load_ensemble_with_manifest, manifest_path, save_ensemble, CsvLayout,
    EnsembleManifest,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the coordinates of an ensemble are to be interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordinateConvention {
    #[default]
    Cartesian,
    /// `d = 2` columns holding longitude then latitude, in degrees.
    LonlatDegrees,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    n: usize,
    d: usize,
    num_times: usize,
    positions: Vec<f64>,
    mask: Vec<bool>,
    masses: Option<Vec<f64>>,
    ids: Vec<String>,
    time_labels: Option<Vec<String>>,
    coordinates: CoordinateConvention,
}

impl TrajectoryEnsemble {
    /// Builds an ensemble from a dense `n × num_times × d` position array
    /// (trajectory-major, then time, then coordinate) and an `n × num_times`
    /// availability mask.
    pub fn new(d: usize, num_times: usize, mut positions: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if d == 0 || num_times == 0 {
            return Err(Error::InvalidEnsemble(
                "dimension and number of time slices must be positive".into(),
            ));
        }
        if !mask.len().is_multiple_of(num_times) {
            return Err(Error::InvalidEnsemble(format!(
                "mask length {} is not a multiple of num_times {num_times}",
                mask.len()
            )));
        }
        let n = mask.len() / num_times;
        if n == 0 {
            return Err(Error::InvalidEnsemble("ensemble has no trajectories".into()));
        }
        if positions.len() != n * num_times * d {
            return Err(Error::InvalidEnsemble(format!(
                "expected {} coordinates, found {}",
                n * num_times * d,
                positions.len()
            )));
        }
        for i in 0..n {
            let row = &mask[i * num_times..(i + 1) * num_times];
            if !row.iter().any(|&m| m) {
                return Err(Error::EmptyTrajectory(i.to_string()));
            }
        }
        for (cell, &available) in mask.iter().enumerate() {
            let coords = &mut positions[cell * d..(cell + 1) * d];
            if available {
                if coords.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidEnsemble(format!(
                        "non-finite coordinate in trajectory {} at time {}",
                        cell / num_times,
                        cell % num_times
                    )));
                }
            } else {
                coords.fill(0.0);
            }
        }
        Ok(Self {
            n,
            d,
            num_times,
            positions,
            mask,
            masses: None,
            ids: (0..n).map(|i| i.to_string()).collect(),
            time_labels: None,
            coordinates: CoordinateConvention::Cartesian,
        })
    }

    /// Builds a fully observed ensemble.
    pub fn from_complete(d: usize, num_times: usize, positions: Vec<f64>) -> Result<Self> {
        if d == 0 || num_times == 0 {
            return Err(Error::InvalidEnsemble(
                "dimension and number of time slices must be positive".into(),
            ));
        }
        let cells = positions.len() / d;
        Self::new(d, num_times, positions, vec![true; cells])
    }

    pub fn with_masses(mut self, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != self.n {
            return Err(Error::InvalidEnsemble(format!(
                "expected {} masses, found {}",
                self.n,
                masses.len()
            )));
        }
        if masses.iter().any(|q| !q.is_finite() || *q < 0.0) {
            return Err(Error::InvalidEnsemble("masses must be finite and nonnegative".into()));
        }
        if masses.iter().all(|&q| q == 0.0) {
            return Err(Error::InvalidEnsemble("masses are all zero".into()));
        }
        self.masses = Some(masses);
        Ok(self)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n {
            return Err(Error::InvalidEnsemble(format!(
                "expected {} trajectory ids, found {}",
                self.n,
                ids.len()
            )));
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn with_time_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_times {
            return Err(Error::InvalidEnsemble(format!(
                "expected {} time labels, found {}",
                self.num_times,
                labels.len()
            )));
        }
        self.time_labels = Some(labels);
        Ok(self)
    }

    pub fn with_coordinates(mut self, coordinates: CoordinateConvention) -> Result<Self> {
        if coordinates == CoordinateConvention::LonlatDegrees && self.d != 2 {
            return Err(Error::InvalidEnsemble(format!(
                "lon/lat coordinates need d = 2, ensemble has d = {}",
                self.d
            )));
        }
        self.coordinates = coordinates;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    /// Length `d · num_times` of a trajectory viewed as one point in space-time.
    pub fn embedded_dim(&self) -> usize {
        self.d * self.num_times
    }

    /// Coordinates of trajectory `i` at slice `t`. Meaningless (zero) when the
    /// observation is unavailable.
    #[inline]
    pub fn position(&self, i: usize, t: usize) -> &[f64] {
        let start = (i * self.num_times + t) * self.d;
        &self.positions[start..start + self.d]
    }

    /// The time-major embedded vector of trajectory `i`, masked cells zeroed.
    #[inline]
    pub fn embedded(&self, i: usize) -> &[f64] {
        let len = self.num_times * self.d;
        &self.positions[i * len..(i + 1) * len]
    }

    #[inline]
    pub fn is_available(&self, i: usize, t: usize) -> bool {
        self.mask[i * self.num_times + t]
    }

    pub fn mask_row(&self, i: usize) -> &[bool] {
        &self.mask[i * self.num_times..(i + 1) * self.num_times]
    }

    /// Time slices at which trajectory `i` is observed.
    pub fn support(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.mask_row(i)
            .iter()
            .enumerate()
            .filter_map(|(t, &m)| m.then_some(t))
    }

    pub fn support_len(&self, i: usize) -> usize {
        self.mask_row(i).iter().filter(|&&m| m).count()
    }

    pub fn observation_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn masses(&self) -> Option<&[f64]> {
        self.masses.as_deref()
    }

    /// Mass of trajectory `i`, 1 when no masses were given.
    pub fn mass(&self, i: usize) -> f64 {
        self.masses.as_ref().map_or(1.0, |q| q[i])
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn time_labels(&self) -> Option<&[String]> {
        self.time_labels.as_deref()
    }

    /// Display label of slice `t`: the stored label or the slice index.
    pub fn time_label(&self, t: usize) -> String {
        self.time_labels
            .as_ref()
            .map_or_else(|| t.to_string(), |labels| labels[t].clone())
    }

    pub fn coordinates(&self) -> CoordinateConvention {
        self.coordinates
    }

    #[cfg(test)]
    pub(crate) fn positions_raw(&self) -> &[f64] {
        &self.positions
    }

    /// Applies `f(t, point)` to every available observation, producing a new
    /// ensemble with the same mask and metadata. The mapped points may have a
    /// different dimension.
    pub fn map_points<F>(&self, out_dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64], &mut [f64]),
    {
        let mut positions = vec![0.0; self.n * self.num_times * out_dim];
        for i in 0..self.n {
            for t in 0..self.num_times {
                if self.is_available(i, t) {
                    let cell = i * self.num_times + t;
                    f(t, self.position(i, t), &mut positions[cell * out_dim..(cell + 1) * out_dim]);
                }
            }
        }
        let mut out = Self::new(out_dim, self.num_times, positions, self.mask.clone())?;
        out.masses = self.masses.clone();
        out.ids = self.ids.clone();
        out.time_labels = self.time_labels.clone();
        if out_dim == self.d {
            out.coordinates = self.coordinates;
        }
        Ok(out)
    }

    /// Same data with a different availability mask.
    pub(crate) fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        let mut out = Self::new(self.d, self.num_times, self.positions.clone(), mask)?;
        out.masses = self.masses.clone();
        out.ids = self.ids.clone();
        out.time_labels = self.time_labels.clone();
        out.coordinates = self.coordinates;
        Ok(out)
    }
}

/// Per-slice index sets `I_t = { i : t ∈ T_i }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvailabilityIndex {
    by_time: Vec<Vec<usize>>,
}

impl AvailabilityIndex {
    pub fn build(e: &TrajectoryEnsemble) -> Self {
        let mut by_time = vec![Vec::new(); e.num_times()];
        for i in 0..e.n() {
            for t in e.support(i) {
                by_time[t].push(i);
            }
        }
        Self { by_time }
    }

    /// Trajectories observed at slice `t`, in increasing index order.
    pub fn at(&self, t: usize) -> &[usize] {
        &self.by_time[t]
    }

    pub fn num_times(&self) -> usize {
        self.by_time.len()
    }

    /// `Σ_t |I_t|`.
    pub fn total(&self) -> usize {
        self.by_time.iter().map(Vec::len).sum()
    }
}

/// Removes each available observation independently with probability
/// `fraction`. A trajectory whose draws would remove all of its observations
/// is redrawn until at least one survives.
pub fn thin_ensemble(e: &TrajectoryEnsemble, fraction: f64, seed: u64) -> Result<TrajectoryEnsemble> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "thinning fraction must lie in [0, 1), got {fraction}"
        )));
    }
    if fraction == 0.0 {
        return Ok(e.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_times = e.num_times();
    let mut mask = Vec::with_capacity(e.n() * num_times);
    let mut row = vec![false; num_times];
    for i in 0..e.n() {
        let original = e.mask_row(i);
        loop {
            let mut kept = 0;
            for (slot, &available) in row.iter_mut().zip(original) {
                *slot = available && !rng.random_bool(fraction);
                kept += usize::from(*slot);
            }
            if kept > 0 {
                break;
            }
        }
        mask.extend_from_slice(&row);
    }
    e.with_mask(mask)
}
