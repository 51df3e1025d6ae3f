//! Train track machinery: structural moves on graph self-maps, fold
//! decompositions of automorphisms, and the search for train track
//! representatives.
//!
//! The driver alternates tightening, cleanup of degenerate structure, and
//! elementary folds guided by illegal turns. It terminates with a train
//! track map, a reduction witness showing the outer class is reducible, or
//! an explicit step bound.

mod decompose;
mod driver;
mod moves;
mod sequence;

pub use decompose::{fold_decomposition, DecomposeError};
pub use driver::{
    find_train_track, find_train_track_with, is_train_track, DriverOptions, ReductionData,
    TrackCheck, TrainTrackOutcome, TrainTrackResult,
};
pub use moves::{
    collapse_edges, elementary_fold, move_basepoint, remove_valence_one_step,
    remove_valence_two_step, subdivide, FoldError, FoldReport,
};
pub use sequence::{FoldSequence, FoldStage, FoldStep};
