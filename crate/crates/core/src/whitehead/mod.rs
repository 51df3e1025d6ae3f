//! Direction maps, taken turns, Whitehead graphs, the rotationless
//! index, periodic Nielsen path search, and classification verdicts.
//!
//! Everything here reads a tightened graph self-map. Direction iteration
//! composes first-letter maps, which agrees with the directions of
//! iterated images exactly when no cancellation occurs in iterates; the
//! train track property certifies that, and the legality check itself
//! only ever uses the closure as a conservative overapproximation.

mod classify;
mod graphs;
mod pnp;
mod turns;

pub use classify::{
    analyze_automorphism, Ageometric, AnalysisReport, AnalyzeOptions, Classification,
    FullIrreducibility,
};
pub use graphs::{
    ideal_whitehead_graph, rotationless_index, whitehead_graphs, IdealWhiteheadGraph, IwComponent,
    LocalGraph, WhiteheadError, WhiteheadGraphs,
};
pub use pnp::{
    illegal_turns, is_train_track, pnp_search, Leg, NielsenPath, PartialTail, PnpError,
    PnpOptions, PnpStatus,
};
pub use turns::{
    direction_map, rotationless_data, taken_turns, DegenerateEvidence, RotationlessData, Turn,
    TurnClosure,
};
