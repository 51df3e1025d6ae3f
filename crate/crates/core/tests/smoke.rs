// End-to-end drive through the public API only: build an automorphism,
// find a train track representative, classify it, and walk its fold path.

use outfr::freegroup::FreeAutomorphism;
use outfr::outerspace::{fold_path_points, lipschitz_distance};
use outfr::whitehead::{analyze_automorphism, AnalyzeOptions};

#[test]
fn public_api_classifies_and_walks_a_fold_path() {
    let phi = FreeAutomorphism::from_strings(3, &["b", "c", "ab"], false).unwrap();
    let report = analyze_automorphism(&phi, &AnalyzeOptions::default());
    assert!(report.is_triangular_fully_irreducible() || report.lambda.is_some());

    let psi = FreeAutomorphism::from_strings(2, &["ab", "a"], false).unwrap();
    let map = outfr::graphmap::GraphMap::rose_map(&psi);
    let points = fold_path_points(&map, usize::MAX).unwrap();
    let mut total = 0.0;
    for pair in points.windows(2) {
        total += lipschitz_distance(&pair[0], &pair[1]).unwrap().d_cv;
    }
    let lambda = map.transition_matrix().pf().unwrap().lambda;
    assert!((total - lambda.ln()).abs() < 1e-6);
}
