//! First-passage percolation laboratory.
//!
//! A seeded random-lattice shortest-path engine with the measurement and
//! certificate machinery built around it:
//!
//! - [`weight_field`]: stateless i.i.d. edge weights keyed by
//!   `(seed, replica, edge)`, bounded by `1/(4 d^2)`.
//! - [`geom`]: tangent frames, tilted cylinders, regions, floor maps, and
//!   discretization grids.
//! - [`passage`]: region-restricted passage times `T_A(C, D)`, tie-broken
//!   geodesics, and an exhaustive oracle for tiny instances.
//! - [`estimators`]: Monte Carlo estimation of the time constant,
//!   fluctuation/wandering exponents, restricted mean excess, tail
//!   probabilities, and empirical rate curves, plus an exact
//!   small-instance distribution.
//! - [`certificates`]: deterministic slab decompositions, bad/dark vertex
//!   scans, geodesic block traces, face-deficit profiles, and block-event
//!   chains, each emitting machine-checkable witnesses.
//! - [`runner`]: batch experiment orchestration with reproducible
//!   artifacts (JSON, CSV, manifest).
//!
//! Every run is a pure function of its configuration: weights come from a
//! keyed hash, worker counts never change results, and artifacts are
//! byte-identical across reruns. See the crate examples for one runnable
//! program per capability.

pub mod certificates;
pub mod estimators;
pub mod geom;
pub mod hashing;
pub mod passage;
pub mod runner;
pub mod weight_field;

pub use geom::{
    enumerate_face, floor_point, grid_points, make_frame, region_contains, AxialInterval,
    Cylinder, FaceSpacing, Frame, GeomError, GridSpec, Rational, RealPoint, Region, ShapeModel,
};
pub use passage::{
    brute_force_passage, face_to_face_time, geodesic, graph_distance, max_transversal_deviation,
    passage_time, passage_times_to_all, point_passage_value, PassageError, PassageResult, Path,
    QuerySpec, TargetSet,
};
pub use weight_field::{
    sample_weight, validate_distribution, w_max, DistributionSpec, Edge, EdgeWeights,
    LatticePoint, OverlayField, WeightError, WeightField,
};
