//! Outer space for a free group: marked metric graphs up to homothety.
//!
//! A point is a unit-volume marked graph with all vertices of valence at
//! least three. The asymmetric Lipschitz distance between two points is
//! the log of the minimal Lipschitz constant of a difference-of-marking
//! map, and it is realized on a finite candidate set of loops: embedded
//! circles, figure eights, and barbells. Train track maps give geodesic
//! fold paths whose increments sum to the log of the expansion factor.

mod candidates;
mod distance;
mod factors;
mod foldpath;
mod point;

pub use candidates::{candidates, CandidateLoop, CandidateShape};
pub use distance::{lipschitz_distance, loop_stretch, sym_distance, DistanceResult};
pub use factors::{free_factor_projection, FreeFactor};
pub use foldpath::fold_path_points;
pub use point::{normalize_volume, OuterSpaceError, OuterSpacePoint, VOLUME_TOL};
