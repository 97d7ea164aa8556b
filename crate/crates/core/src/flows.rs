//! Synthetic systems with known coherent structure.
//!
//! * `interval-map-3`: a circle map on `[0, 1)` that cyclically permutes the
//!   thirds `[0,1/3) → [1/3,2/3) → [2/3,1) → [0,1/3)`.
//! * `double-gyre`: the periodically driven double gyre on `[0,2]×[0,1]`.
//! * `transitory-double-gyre`: a stream function on `[0,1]²` that turns a
//!   horizontal gyre pair into a vertical one over `t ∈ [0,1]`.
//!
//! Continuous flows are integrated with fixed-step RK4.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};

/// Relative slack allowed when checking that strides divide durations.
const DIVISIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    #[serde(rename = "interval-map-3")]
    IntervalMap3,
    DoubleGyre,
    TransitoryDoubleGyre,
}

impl FlowKind {
    pub fn dim(self) -> usize {
        match self {
            Self::IntervalMap3 => 1,
            Self::DoubleGyre | Self::TransitoryDoubleGyre => 2,
        }
    }

    /// `(lower, upper)` corners of the invariant domain.
    pub fn domain(self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::IntervalMap3 => (vec![0.0], vec![1.0]),
            Self::DoubleGyre => (vec![0.0, 0.0], vec![2.0, 1.0]),
            Self::TransitoryDoubleGyre => (vec![0.0, 0.0], vec![1.0, 1.0]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::IntervalMap3 => "interval-map-3",
            Self::DoubleGyre => "double-gyre",
            Self::TransitoryDoubleGyre => "transitory-double-gyre",
        }
    }
}

impl std::str::FromStr for FlowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval-map-3" => Ok(Self::IntervalMap3),
            "double-gyre" => Ok(Self::DoubleGyre),
            "transitory-double-gyre" => Ok(Self::TransitoryDoubleGyre),
            other => Err(Error::InvalidFlow(format!("unknown flow {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleGyreParams {
    pub a: f64,
    pub delta: f64,
    pub omega: f64,
}

impl Default for DoubleGyreParams {
    fn default() -> Self {
        Self { a: 0.25, delta: 0.25, omega: 2.0 * PI }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Seeding {
    UniformRandom { n: usize, seed: u64 },
    /// Cell-centred grid; in 2-D the row/column split follows the domain
    /// aspect ratio as closely as `n` allows.
    UniformGrid { n: usize },
}

impl Seeding {
    pub fn n(&self) -> usize {
        match *self {
            Self::UniformRandom { n, .. } | Self::UniformGrid { n } => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub params: DoubleGyreParams,
    pub seeding: Seeding,
    /// Flow duration, or number of iterates for the map.
    pub t_end: f64,
    pub output_stride: f64,
    pub integrator_step: f64,
}

impl FlowSpec {
    pub fn interval_map(seeding: Seeding, iterates: usize) -> Self {
        Self {
            kind: FlowKind::IntervalMap3,
            params: DoubleGyreParams::default(),
            seeding,
            t_end: iterates as f64,
            output_stride: 1.0,
            integrator_step: 1.0,
        }
    }

    pub fn double_gyre(seeding: Seeding, tau: f64) -> Self {
        Self {
            kind: FlowKind::DoubleGyre,
            params: DoubleGyreParams::default(),
            seeding,
            t_end: tau,
            output_stride: 0.1,
            integrator_step: 1e-2,
        }
    }

    pub fn transitory_double_gyre(seeding: Seeding, tau: f64) -> Self {
        Self { kind: FlowKind::TransitoryDoubleGyre, ..Self::double_gyre(seeding, tau) }
    }

    pub fn with_stride(mut self, stride: f64) -> Self {
        self.output_stride = stride;
        self
    }

    pub fn with_integrator_step(mut self, step: f64) -> Self {
        self.integrator_step = step;
        self
    }

    pub fn with_params(mut self, params: DoubleGyreParams) -> Self {
        self.params = params;
        self
    }

    /// Number of output slices, `t_end / output_stride + 1`.
    pub fn num_times(&self) -> usize {
        (self.t_end / self.output_stride).round() as usize + 1
    }

    fn substeps(&self) -> usize {
        (self.output_stride / self.integrator_step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t_end, self.output_stride, self.integrator_step, self.params.a, self.params.delta, self.params.omega];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFlow("flow parameters must be finite".into()));
        }
        if self.seeding.n() == 0 {
            return Err(Error::InvalidFlow("need at least one trajectory".into()));
        }
        if self.t_end < 0.0 || self.output_stride <= 0.0 || self.integrator_step <= 0.0 {
            return Err(Error::InvalidFlow("durations and steps must be positive".into()));
        }
        if !divides(self.output_stride, self.t_end) {
            return Err(Error::InvalidFlow(format!(
                "output stride {} does not divide duration {}",
                self.output_stride, self.t_end
            )));
        }
        match self.kind {
            FlowKind::IntervalMap3 => {
                if self.output_stride != 1.0 || self.t_end.fract() != 0.0 {
                    return Err(Error::InvalidFlow("the map samples every integer iterate".into()));
                }
            }
            _ => {
                if self.integrator_step > self.output_stride || !divides(self.integrator_step, self.output_stride) {
                    return Err(Error::InvalidFlow(format!(
                        "integrator step {} does not divide output stride {}",
                        self.integrator_step, self.output_stride
                    )));
                }
            }
        }
        Ok(())
    }
}

fn divides(step: f64, total: f64) -> bool {
    let ratio = total / step;
    (ratio - ratio.round()).abs() <= DIVISIBILITY_TOL * ratio.max(1.0)
}

/// Index of the third of `[0, 1)` containing `x`.
pub fn interval_index(x: f64) -> usize {
    ((3.0 * x).floor().max(0.0) as usize).min(2)
}

fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 { 0.0 } else { w }
}

/// One iterate of the three-interval map: `3x mod 1/3` shifted into the next
/// third.
pub fn interval_map_step(x: f64) -> f64 {
    let x = wrap_unit(x);
    let branch = interval_index(x);
    let target = (branch + 1) % 3;
    let offset = [1.0 / 3.0, 2.0 / 3.0, 0.0][branch];
    let mut y = offset + (9.0 * x).fract() / 3.0;
    // rounding near the thirds can push y across a boundary
    while interval_index(y) > target || y >= 1.0 {
        y = y.next_down();
    }
    while interval_index(y) < target {
        y = y.next_up();
    }
    y
}

/// Double-gyre velocity at `(x, y, t)`.
pub fn double_gyre_velocity(x: f64, y: f64, t: f64, p: &DoubleGyreParams) -> [f64; 2] {
    let eps = p.delta * (p.omega * t).sin();
    let f = eps * x * x + (1.0 - 2.0 * eps) * x;
    let dfdx = 2.0 * eps * x + 1.0 - 2.0 * eps;
    [
        -PI * p.a * (PI * f).sin() * (PI * y).cos(),
        PI * p.a * (PI * f).cos() * (PI * y).sin() * dfdx,
    ]
}

/// Smooth transition `s(t) = t²(3 − 2t)`, held at 0 before and 1 after `[0, 1]`.
pub fn transition(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Velocity of the transitory double gyre, `(−∂Ψ/∂y, ∂Ψ/∂x)`.
pub fn transitory_double_gyre_velocity(x: f64, y: f64, t: f64) -> [f64; 2] {
    let s = transition(t);
    let (sx1, cx1) = (PI * x).sin_cos();
    let (sx2, cx2) = (2.0 * PI * x).sin_cos();
    let (sy1, cy1) = (PI * y).sin_cos();
    let (sy2, cy2) = (2.0 * PI * y).sin_cos();
    [
        -((1.0 - s) * PI * sx2 * cy1 + s * 2.0 * PI * sx1 * cy2),
        (1.0 - s) * 2.0 * PI * cx2 * sy1 + s * PI * cx1 * sy2,
    ]
}

/// One classical RK4 step of size `h`.
pub fn rk4_step<F>(f: &F, t: f64, p: [f64; 2], h: f64) -> [f64; 2]
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let shift = |p: [f64; 2], k: [f64; 2], c: f64| [p[0] + c * k[0], p[1] + c * k[1]];
    let k1 = f(t, p);
    let k2 = f(t + 0.5 * h, shift(p, k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, shift(p, k2, 0.5 * h));
    let k4 = f(t + h, shift(p, k3, h));
    [
        p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrates from `t0` to `t1` with equal RK4 steps no longer than `step`.
pub fn integrate_rk4<F>(f: &F, p: [f64; 2], t0: f64, t1: f64, step: f64) -> [f64; 2]
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let steps = ((t1 - t0) / step).round().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    (0..steps).fold(p, |p, s| rk4_step(f, t0 + s as f64 * h, p, h))
}

/// Rows for a cell-centred grid of `n` points on a `width × height` box: the
/// divisor of `n` whose column/row ratio is closest to the aspect ratio in
/// log scale, preferring more rows on ties.
pub fn grid_shape(n: usize, width: f64, height: f64) -> (usize, usize) {
    let target = (width / height).ln();
    let mut best = (1, n);
    let mut best_err = f64::INFINITY;
    for rows in 1..=n {
        if !n.is_multiple_of(rows) {
            continue;
        }
        let cols = n / rows;
        let err = ((cols as f64 / rows as f64).ln() - target).abs();
        if err <= best_err + 1e-12 {
            best = (rows, cols);
            best_err = err.min(best_err);
        }
    }
    best
}

/// Initial points, flattened `n × dim`.
pub fn seed_points(kind: FlowKind, seeding: Seeding) -> Vec<f64> {
    let (lo, hi) = kind.domain();
    match seeding {
        Seeding::UniformRandom { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(n * lo.len());
            for _ in 0..n {
                for (l, h) in lo.iter().zip(&hi) {
                    out.push(rng.random_range(*l..*h));
                }
            }
            out
        }
        Seeding::UniformGrid { n } => {
            if lo.len() == 1 {
                return (0..n).map(|j| lo[0] + (hi[0] - lo[0]) * (j as f64 + 0.5) / n as f64).collect();
            }
            let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
            let (rows, cols) = grid_shape(n, w, h);
            let mut out = Vec::with_capacity(2 * n);
            for r in 0..rows {
                for c in 0..cols {
                    out.push(lo[0] + w * (c as f64 + 0.5) / cols as f64);
                    out.push(lo[1] + h * (r as f64 + 0.5) / rows as f64);
                }
            }
            out
        }
    }
}

fn time_label(t: f64) -> String {
    let rounded = (t * 1e9).round() / 1e9;
    format!("{rounded}")
}

/// Samples every trajectory of `spec` on its output grid.
pub fn integrate_ensemble(spec: &FlowSpec) -> Result<TrajectoryEnsemble> {
    spec.validate()?;
    let d = spec.kind.dim();
    let num_times = spec.num_times();
    let seeds = seed_points(spec.kind, spec.seeding);
    let n = seeds.len() / d;

    let rows: Vec<Vec<f64>> = match spec.kind {
        FlowKind::IntervalMap3 => seeds
            .par_iter()
            .map(|&x0| {
                let mut row = Vec::with_capacity(num_times);
                let mut x = wrap_unit(x0);
                row.push(x);
                for _ in 1..num_times {
                    x = interval_map_step(x);
                    row.push(x);
                }
                row
            })
            .collect(),
        FlowKind::DoubleGyre => {
            let params = spec.params;
            let field = move |t: f64, p: [f64; 2]| double_gyre_velocity(p[0], p[1], t, &params);
            sample_rows(&seeds, num_times, spec, &field)
        }
        FlowKind::TransitoryDoubleGyre => {
            let field = |t: f64, p: [f64; 2]| transitory_double_gyre_velocity(p[0], p[1], t);
            sample_rows(&seeds, num_times, spec, &field)
        }
    };

    let positions: Vec<f64> = rows.into_iter().flatten().collect();
    let labels = (0..num_times).map(|j| time_label(j as f64 * spec.output_stride)).collect();
    debug_assert_eq!(positions.len(), n * num_times * d);
    TrajectoryEnsemble::from_complete(d, num_times, positions)?.with_time_labels(labels)
}

fn sample_rows<F>(seeds: &[f64], num_times: usize, spec: &FlowSpec, field: &F) -> Vec<Vec<f64>>
where
    F: Fn(f64, [f64; 2]) -> [f64; 2] + Sync,
{
    let substeps = spec.substeps();
    let h = spec.output_stride / substeps as f64;
    seeds
        .par_chunks(2)
        .map(|p0| {
            let mut p = [p0[0], p0[1]];
            let mut row = Vec::with_capacity(2 * num_times);
            row.extend_from_slice(&p);
            for j in 1..num_times {
                let t0 = (j - 1) as f64 * spec.output_stride;
                for s in 0..substeps {
                    p = rk4_step(field, t0 + s as f64 * h, p, h);
                }
                row.extend_from_slice(&p);
            }
            row
        })
        .collect()
}
