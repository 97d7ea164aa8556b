//! Per-slice dissimilarities, the induced dynamic distance between
//! trajectories, and the matching center-mean rule for each geometry.
//!
//! Clustering runs in a *working space*: ellipsoid data is pre-scaled so the
//! Euclidean core applies, lon/lat data is lifted to unit 3-vectors, and
//! circle data (`d = 1`, period 1) is lifted to unit 2-vectors. Only two
//! working metrics remain after that: squared Euclidean distance and the
//! cosine dissimilarity `1 − ⟨a, b⟩` on unit vectors.

use serde::{Deserialize, Serialize};

use crate::ensemble::{CoordinateConvention, TrajectoryEnsemble};
use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-10;
const UNIT_NORM_TOL: f64 = 1e-9;
/// Below this norm the direction of a spherical mean is meaningless.
pub const DEGENERATE_MEAN_NORM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Euclidean,
    Ellipsoid,
    Sphere,
    Circle,
}

impl std::str::FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "ellipsoid" => Ok(Self::Ellipsoid),
            "sphere" => Ok(Self::Sphere),
            "circle" => Ok(Self::Circle),
            other => Err(Error::InvalidGeometry(format!("unknown geometry {other:?}"))),
        }
    }
}

/// Orthonormal semi-axes `v_j` with lengths `ℓ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidAxes {
    axes: Vec<Vec<f64>>,
    lengths: Vec<f64>,
}

impl EllipsoidAxes {
    pub fn new(axes: Vec<Vec<f64>>, lengths: Vec<f64>) -> Result<Self> {
        let d = lengths.len();
        if d == 0 || axes.len() != d || axes.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidGeometry(format!(
                "ellipsoid needs {d} axes of length {d}"
            )));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidGeometry("ellipsoid lengths must be positive".into()));
        }
        for a in 0..d {
            for b in 0..d {
                let dot: f64 = axes[a].iter().zip(&axes[b]).map(|(x, y)| x * y).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                if (dot - expected).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidGeometry(format!(
                        "ellipsoid axes {a} and {b} are not orthonormal (dot {dot})"
                    )));
                }
            }
        }
        Ok(Self { axes, lengths })
    }

    /// Axis-aligned ellipsoid with the given semi-axis lengths.
    pub fn axis_aligned(lengths: Vec<f64>) -> Result<Self> {
        let d = lengths.len();
        let axes = (0..d)
            .map(|a| (0..d).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(axes, lengths)
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// `x ↦ (⟨v_j, x⟩ / ℓ_j)_j`
    pub fn scale(&self, x: &[f64], out: &mut [f64]) {
        for ((o, v), l) in out.iter_mut().zip(&self.axes).zip(&self.lengths) {
            *o = v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / l;
        }
    }

    /// Inverse of [`scale`](Self::scale): `y ↦ Σ_j ℓ_j y_j v_j`.
    pub fn unscale(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for ((v, l), yj) in self.axes.iter().zip(&self.lengths).zip(y) {
            for (o, vc) in out.iter_mut().zip(v) {
                *o += l * yj * vc;
            }
        }
    }
}

/// Dissimilarity used inside the clustering loop, on working coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    SquaredEuclidean,
    /// `1 − ⟨a, b⟩` on unit vectors; centers are renormalized means.
    Cosine,
}

impl Metric {
    #[inline]
    pub fn dissimilarity(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::SquaredEuclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (1.0 - dot).max(0.0)
            }
        }
    }

    /// Turns a weighted sum `Σ w_i p_i` (in `acc`) with total weight `Σ w_i`
    /// into the center for this metric.
    pub fn finish_mean(self, acc: &mut [f64], total_weight: f64) -> Result<()> {
        if !(total_weight > 0.0) {
            return Err(Error::ZeroWeights);
        }
        acc.iter_mut().for_each(|x| *x /= total_weight);
        if self == Metric::Cosine {
            let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < DEGENERATE_MEAN_NORM {
                return Err(Error::DegenerateSphericalMean(norm));
            }
            acc.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    kind: GeometryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ellipsoid: Option<EllipsoidAxes>,
    /// Lift `d = 2` lon/lat degrees to unit 3-vectors even when the ensemble
    /// does not declare the lon/lat convention.
    #[serde(default)]
    sphere_lift: bool,
}

impl Default for Geometry {
    fn default() -> Self {
        Self::euclidean()
    }
}

impl Geometry {
    pub fn euclidean() -> Self {
        Self { kind: GeometryKind::Euclidean, ellipsoid: None, sphere_lift: false }
    }

    pub fn ellipsoid(axes: EllipsoidAxes) -> Self {
        Self { kind: GeometryKind::Ellipsoid, ellipsoid: Some(axes), sphere_lift: false }
    }

    /// Cosine geometry on unit vectors. Ensembles declared as lon/lat degrees
    /// are lifted automatically.
    pub fn sphere() -> Self {
        Self { kind: GeometryKind::Sphere, ellipsoid: None, sphere_lift: false }
    }

    /// Cosine geometry on `d = 2` lon/lat degree inputs.
    pub fn sphere_lonlat() -> Self {
        Self { kind: GeometryKind::Sphere, ellipsoid: None, sphere_lift: true }
    }

    /// Periodic unit interval, lifted to the unit circle.
    pub fn circle() -> Self {
        Self { kind: GeometryKind::Circle, ellipsoid: None, sphere_lift: false }
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn ellipsoid_axes(&self) -> Option<&EllipsoidAxes> {
        self.ellipsoid.as_ref()
    }

    pub fn metric(&self) -> Metric {
        match self.kind {
            GeometryKind::Euclidean | GeometryKind::Ellipsoid => Metric::SquaredEuclidean,
            GeometryKind::Sphere | GeometryKind::Circle => Metric::Cosine,
        }
    }

    fn lifts_lonlat(&self, convention: CoordinateConvention) -> bool {
        self.kind == GeometryKind::Sphere
            && (self.sphere_lift || convention == CoordinateConvention::LonlatDegrees)
    }

    /// Checks that data of dimension `d` fits this geometry and returns the
    /// working dimension.
    pub fn working_dim(&self, d: usize, convention: CoordinateConvention) -> Result<usize> {
        match self.kind {
            GeometryKind::Euclidean => Ok(d),
            GeometryKind::Ellipsoid => {
                let axes = self
                    .ellipsoid
                    .as_ref()
                    .ok_or_else(|| Error::InvalidGeometry("ellipsoid geometry without axes".into()))?;
                if axes.dim() != d {
                    return Err(Error::InvalidGeometry(format!(
                        "ellipsoid has {} axes but data has d = {d}",
                        axes.dim()
                    )));
                }
                Ok(d)
            }
            GeometryKind::Sphere if self.lifts_lonlat(convention) => {
                if d != 2 {
                    return Err(Error::InvalidGeometry(format!(
                        "lon/lat lift needs d = 2, data has d = {d}"
                    )));
                }
                Ok(3)
            }
            GeometryKind::Sphere => {
                if d < 2 {
                    return Err(Error::InvalidGeometry("sphere geometry needs d ≥ 2".into()));
                }
                Ok(d)
            }
            GeometryKind::Circle => {
                if d != 1 {
                    return Err(Error::InvalidGeometry(format!(
                        "circle geometry needs d = 1, data has d = {d}"
                    )));
                }
                Ok(2)
            }
        }
    }

    /// Maps a data-space point to working coordinates.
    pub fn to_working(&self, x: &[f64], convention: CoordinateConvention, out: &mut [f64]) -> Result<()> {
        match self.kind {
            GeometryKind::Euclidean => out.copy_from_slice(x),
            GeometryKind::Ellipsoid => self
                .ellipsoid
                .as_ref()
                .ok_or_else(|| Error::InvalidGeometry("ellipsoid geometry without axes".into()))?
                .scale(x, out),
            GeometryKind::Sphere if self.lifts_lonlat(convention) => {
                out.copy_from_slice(&lift_lonlat(x[0], x[1])?);
            }
            GeometryKind::Sphere => {
                check_unit(x)?;
                out.copy_from_slice(x);
            }
            GeometryKind::Circle => {
                let angle = std::f64::consts::TAU * x[0];
                out[0] = angle.cos();
                out[1] = angle.sin();
            }
        }
        Ok(())
    }

    /// Maps working coordinates (e.g. a center) back to data space.
    pub fn from_working(&self, y: &[f64], convention: CoordinateConvention) -> Vec<f64> {
        match self.kind {
            GeometryKind::Euclidean => y.to_vec(),
            GeometryKind::Ellipsoid => {
                let mut out = vec![0.0; y.len()];
                if let Some(axes) = &self.ellipsoid {
                    axes.unscale(y, &mut out);
                }
                out
            }
            GeometryKind::Sphere if self.lifts_lonlat(convention) => {
                let lat = y[2].clamp(-1.0, 1.0).asin().to_degrees();
                let lon = y[1].atan2(y[0]).to_degrees();
                vec![lon, lat]
            }
            GeometryKind::Sphere => y.to_vec(),
            GeometryKind::Circle => {
                vec![(y[1].atan2(y[0]) / std::f64::consts::TAU).rem_euclid(1.0)]
            }
        }
    }

    /// `ρ(a, b)²` for two data-space points (Cartesian convention; sphere
    /// inputs must already be unit vectors unless this geometry lifts lon/lat).
    pub fn slice_dissimilarity(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        let wd = self.working_dim(a.len(), CoordinateConvention::Cartesian)?;
        let mut wa = vec![0.0; wd];
        let mut wb = vec![0.0; wd];
        self.to_working(a, CoordinateConvention::Cartesian, &mut wa)?;
        self.to_working(b, CoordinateConvention::Cartesian, &mut wb)?;
        Ok(self.metric().dissimilarity(&wa, &wb))
    }

    /// Weighted center of working-space points: the arithmetic mean, or for
    /// the cosine geometries that mean projected back to the unit sphere.
    pub fn center_slice_mean(&self, points: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>> {
        let dim = points.first().map_or(0, |p| p.len());
        if points.len() != weights.len() || points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidConfig("points and weights disagree in shape".into()));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidConfig("weights must be nonnegative".into()));
        }
        let mut acc = vec![0.0; dim];
        let mut total = 0.0;
        for (p, &w) in points.iter().zip(weights) {
            total += w;
            for (a, x) in acc.iter_mut().zip(p.iter()) {
                *a += w * x;
            }
        }
        self.metric().finish_mean(&mut acc, total)?;
        Ok(acc)
    }

    /// Transforms the ensemble into working coordinates.
    pub fn prepare(&self, e: &TrajectoryEnsemble) -> Result<PreparedEnsemble> {
        let wd = self.working_dim(e.d(), e.coordinates())?;
        let convention = e.coordinates();
        let mut failure = None;
        let data = e.map_points(wd, |_, x, out| {
            if let Err(err) = self.to_working(x, convention, out) {
                failure.get_or_insert(err);
            }
        })?;
        if let Some(err) = failure {
            return Err(err);
        }
        Ok(PreparedEnsemble {
            data,
            metric: self.metric(),
            geometry: self.clone(),
            convention,
        })
    }
}

fn check_unit(x: &[f64]) -> Result<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnitNorm(norm));
    }
    Ok(())
}

/// Longitude/latitude in degrees to a unit 3-vector.
pub fn lift_lonlat(lon_deg: f64, lat_deg: f64) -> Result<[f64; 3]> {
    if !(-90.0..=90.0).contains(&lat_deg) || !lon_deg.is_finite() {
        return Err(Error::LatitudeOutOfRange(lat_deg));
    }
    let (lon, lat) = (lon_deg.to_radians(), lat_deg.to_radians());
    Ok([lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()])
}

/// An ensemble in working coordinates, bound to its metric.
#[derive(Clone, Debug)]
pub struct PreparedEnsemble {
    data: TrajectoryEnsemble,
    metric: Metric,
    geometry: Geometry,
    convention: CoordinateConvention,
}

impl PreparedEnsemble {
    pub fn data(&self) -> &TrajectoryEnsemble {
        &self.data
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn convention(&self) -> CoordinateConvention {
        self.convention
    }

    /// Working dimension of one time slice.
    pub fn dim(&self) -> usize {
        self.data.d()
    }

    /// Dynamic distance restricted to the common support `T_i ∩ T_j`.
    pub fn dynamic_distance(&self, i: usize, j: usize) -> Result<f64> {
        let e = &self.data;
        let mut total = 0.0;
        let mut common = false;
        for t in 0..e.num_times() {
            if e.is_available(i, t) && e.is_available(j, t) {
                common = true;
                total += self.metric.dissimilarity(e.position(i, t), e.position(j, t));
            }
        }
        if common {
            Ok(total)
        } else {
            Err(Error::EmptyCommonSupport(i, j))
        }
    }

    /// `Σ_{t ∈ T_i} ρ(x_{i,t}, c_t)²` for a flat, time-major center.
    pub fn point_to_center_distance(&self, i: usize, center: &[f64], defined: &[bool]) -> Result<f64> {
        let e = &self.data;
        let dim = e.d();
        let mut total = 0.0;
        for t in e.support(i) {
            if !defined[t] {
                return Err(Error::UndefinedCenter(t));
            }
            total += self
                .metric
                .dissimilarity(e.position(i, t), &center[t * dim..(t + 1) * dim]);
        }
        Ok(total)
    }

    /// Like [`point_to_center_distance`](Self::point_to_center_distance) but
    /// skipping slices where the center is undefined. Returns `None` when no
    /// slice of `T_i` has a defined center.
    pub(crate) fn partial_center_distance(&self, i: usize, center: &[f64], defined: &[bool]) -> Option<f64> {
        let e = &self.data;
        let dim = e.d();
        let mut total = 0.0;
        let mut any = false;
        for t in e.support(i) {
            if defined[t] {
                any = true;
                total += self
                    .metric
                    .dissimilarity(e.position(i, t), &center[t * dim..(t + 1) * dim]);
            }
        }
        any.then_some(total)
    }
}

/// Dynamic distance between trajectories `i` and `j` of a data-space
/// ensemble: the sum of per-slice dissimilarities over their common support.
pub fn dynamic_distance(e: &TrajectoryEnsemble, g: &Geometry, i: usize, j: usize) -> Result<f64> {
    let wd = g.working_dim(e.d(), e.coordinates())?;
    let mut a = vec![0.0; wd];
    let mut b = vec![0.0; wd];
    let mut total = 0.0;
    let mut common = false;
    for t in 0..e.num_times() {
        if e.is_available(i, t) && e.is_available(j, t) {
            common = true;
            g.to_working(e.position(i, t), e.coordinates(), &mut a)?;
            g.to_working(e.position(j, t), e.coordinates(), &mut b)?;
            total += g.metric().dissimilarity(&a, &b);
        }
    }
    if common {
        Ok(total)
    } else {
        Err(Error::EmptyCommonSupport(i, j))
    }
}

/// Distance from trajectory `i` to a data-space center, restricted to `T_i`.
pub fn projected_point_to_center_distance(
    e: &TrajectoryEnsemble,
    g: &Geometry,
    i: usize,
    center: &[f64],
) -> Result<f64> {
    let d = e.d();
    if center.len() != d * e.num_times() {
        return Err(Error::DimensionMismatch { expected: d * e.num_times(), found: center.len() });
    }
    let wd = g.working_dim(d, e.coordinates())?;
    let mut a = vec![0.0; wd];
    let mut b = vec![0.0; wd];
    let mut total = 0.0;
    for t in e.support(i) {
        let c = &center[t * d..(t + 1) * d];
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::UndefinedCenter(t));
        }
        g.to_working(e.position(i, t), e.coordinates(), &mut a)?;
        g.to_working(c, e.coordinates(), &mut b)?;
        total += g.metric().dissimilarity(&a, &b);
    }
    Ok(total)
}
