//! Finite-time coherent sets from trajectory data.
//!
//! Trajectories sampled on a common time grid are treated as single points in
//! space-time and grouped with fuzzy c-means. Observations may be missing: the
//! per-trajectory availability mask restricts every distance and every center
//! update to the slices that were actually observed.
//!
//! * [`ensemble`]: data model, CSV ingestion, thinning.
//! * [`geometry`]: per-slice dissimilarities (Euclidean, ellipsoid, sphere, circle).
//! * [`clustering`]: the fuzzy c-means iteration.
//! * [`diagnostics`]: entropy, hard labels, center collapse, parameter sweeps.
//! * [`flows`]: synthetic test systems.
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod clustering;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod util;

pub use clustering::{run, ClusterState, FcmConfig, FuzzyCMeans, Initialization};
pub use ensemble::{thin_ensemble, AvailabilityIndex, CoordinateConvention, TrajectoryEnsemble};
pub use error::{Error, Result};
pub use geometry::{EllipsoidAxes, Geometry, GeometryKind, Metric};
