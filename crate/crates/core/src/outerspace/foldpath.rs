//! Points along the periodic fold path of a train track map.
//!
//! With edge lengths set to the eigenmetric, the Stallings decomposition
//! of the map becomes a fold line: subdivisions leave the metric point
//! fixed, every elementary fold strictly shrinks the volume, and after
//! normalization the endpoint is the start point moved by the outer
//! class. The directed distance increments along the line sum to the log
//! of the expansion factor, one fundamental domain of the axis.

use crate::graphmap::GraphMap;
use crate::trainfold::{fold_decomposition, FoldStep};
use crate::whitehead::is_train_track;

use super::point::{normalize_volume, smooth_valence_two, OuterSpaceError, OuterSpacePoint};

/// Samples the start point and the point after each of the first
/// `stages` folds; pass `usize::MAX` for one whole fundamental domain.
/// The map must be an expanding irreducible train track map.
pub fn fold_path_points(
    g: &GraphMap,
    stages: usize,
) -> Result<Vec<OuterSpacePoint>, OuterSpaceError> {
    let pf = g
        .transition_matrix()
        .pf()
        .map_err(|_| OuterSpaceError::NotExpanding)?;
    if pf.lambda <= 1.0 + 1e-9 {
        return Err(OuterSpaceError::NotExpanding);
    }
    if !is_train_track(g) {
        return Err(OuterSpaceError::NotTrainTrack);
    }
    let mut eigen = g.clone();
    eigen.graph.set_lengths(&pf.eigenvector)?;
    let seq = fold_decomposition(&eigen)?;
    let mut points = vec![normalize_volume(&smooth_valence_two(eigen.graph()))?];
    let mut taken = 0usize;
    for stage in &seq.stages {
        if !matches!(stage.step, FoldStep::Fold { .. }) {
            continue;
        }
        if taken == stages {
            break;
        }
        taken += 1;
        points.push(normalize_volume(&smooth_valence_two(&stage.graph_after))?);
    }
    Ok(points)
}
