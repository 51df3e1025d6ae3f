//! Classification verdicts and the end-to-end analysis pipeline.
//!
//! The full irreducibility criterion used here (primitive transition
//! matrix, every local Whitehead graph connected, no periodic Nielsen
//! path below the search bound) is sufficient but not necessary, so the
//! verdict is three-valued and experiments must count certificates, not
//! guesses. Ageometricity is read off the rotationless index window,
//! and triangularity off the ideal graph census.

use num_rational::Rational64;
use serde_json::json;

use crate::freegroup::FreeAutomorphism;
use crate::graphmap::Primitivity;
use crate::trainfold::{
    find_train_track_with, DriverOptions, FoldSequence, ReductionData, TrainTrackOutcome,
};

use super::graphs::{ideal_whitehead_graph, rotationless_index, whitehead_graphs};
use super::pnp::{pnp_search, PnpOptions, PnpStatus};
use super::turns::rotationless_data;

/// Three-valued full irreducibility verdict. Yes needs the sufficient
/// criterion to fire; No carries a reduction witness.
#[derive(Debug, Clone)]
pub enum FullIrreducibility {
    CertifiedYes,
    CertifiedNo(Box<ReductionData>),
    Unknown,
}

/// Ageometricity verdict; not applicable to reducible classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ageometric {
    CertifiedYes,
    Unknown,
    NotApplicable,
}

/// Shape verdicts for one outer class.
#[derive(Debug, Clone)]
pub struct Classification {
    pub fully_irreducible: FullIrreducibility,
    pub ageometric: Ageometric,
    /// Every ideal graph component is a triangle and there are at most
    /// `2r - 3` of them.
    pub triangular: bool,
    /// Triangular with exactly `2r - 3` components.
    pub principal: bool,
}

/// Knobs for the analysis pipeline.
#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    /// Fold stage cap for the train track search.
    pub max_steps: usize,
    /// Slack factor on the Nielsen path search bound.
    pub pnp_slack: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { max_steps: 500, pnp_slack: 2.0 }
    }
}

/// Everything the pipeline learned about one outer class.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub rank: usize,
    pub outcome: TrainTrackOutcome,
    /// Fold stages the driver performed.
    pub folds: usize,
    /// Elementary moves, for optional trace output.
    pub trace: FoldSequence,
    pub lambda: Option<f64>,
    pub rotationless_power: Option<u64>,
    /// Ideal graph component census, descending.
    pub census: Option<Vec<usize>>,
    pub index: Option<Rational64>,
    /// True when the census was computed despite an inconclusive
    /// Nielsen path search.
    pub iw_provisional: bool,
    pub pnp_status: Option<PnpStatus>,
    pub classification: Classification,
}

/// Runs train track search, Nielsen path search, Whitehead graphs, and
/// classification on one outer class.
pub fn analyze_automorphism(phi: &FreeAutomorphism, options: &AnalyzeOptions) -> AnalysisReport {
    let rank = phi.rank();
    let result = find_train_track_with(
        phi,
        DriverOptions { max_steps: options.max_steps, ..DriverOptions::default() },
    );
    match result.outcome {
        TrainTrackOutcome::TrainTrack { ref map, lambda } => {
            let power = rotationless_data(map).power;
            let pnp = pnp_search(
                map,
                &PnpOptions { slack: options.pnp_slack, ..PnpOptions::default() },
            )
            .ok();
            let primitive =
                matches!(map.transition_matrix().primitivity(), Primitivity::Primitive);
            let lw_connected = whitehead_graphs(map).all_local_connected();
            let iw = pnp.as_ref().and_then(|p| ideal_whitehead_graph(map, p).ok());
            let census = iw.as_ref().map(|iw| iw.census());
            let index = iw.as_ref().map(rotationless_index);
            let iw_provisional = iw.as_ref().is_some_and(|iw| iw.provisional);
            let fully_irreducible = if primitive
                && lw_connected
                && matches!(pnp, Some(PnpStatus::NoneFoundUpToBound))
            {
                FullIrreducibility::CertifiedYes
            } else {
                FullIrreducibility::Unknown
            };
            let (triangular, principal) = match (&census, iw_provisional) {
                (Some(k), false) if !k.is_empty() => {
                    let tri = k.iter().all(|&ki| ki == 3) && k.len() <= 2 * rank - 3;
                    (tri, tri && k.len() == 2 * rank - 3)
                }
                _ => (false, false),
            };
            let ageometric = match (&fully_irreducible, index) {
                (FullIrreducibility::CertifiedYes, Some(i))
                    if i < Rational64::new(0, 1) && i > Rational64::new(1 - rank as i64, 1) =>
                {
                    Ageometric::CertifiedYes
                }
                _ => Ageometric::Unknown,
            };
            AnalysisReport {
                rank,
                lambda: Some(lambda),
                rotationless_power: Some(power),
                census,
                index,
                iw_provisional,
                pnp_status: pnp,
                classification: Classification {
                    fully_irreducible,
                    ageometric,
                    triangular,
                    principal,
                },
                folds: result.folds,
                trace: result.trace,
                outcome: result.outcome,
            }
        }
        TrainTrackOutcome::ReductionWitness(ref data) => AnalysisReport {
            rank,
            lambda: None,
            rotationless_power: None,
            census: None,
            index: None,
            iw_provisional: false,
            pnp_status: None,
            classification: Classification {
                fully_irreducible: FullIrreducibility::CertifiedNo(data.clone()),
                ageometric: Ageometric::NotApplicable,
                triangular: false,
                principal: false,
            },
            folds: result.folds,
            trace: result.trace,
            outcome: result.outcome,
        },
        TrainTrackOutcome::Inconclusive { .. } => AnalysisReport {
            rank,
            lambda: None,
            rotationless_power: None,
            census: None,
            index: None,
            iw_provisional: false,
            pnp_status: None,
            classification: Classification {
                fully_irreducible: FullIrreducibility::Unknown,
                ageometric: Ageometric::Unknown,
                triangular: false,
                principal: false,
            },
            folds: result.folds,
            trace: result.trace,
            outcome: result.outcome,
        },
    }
}

impl AnalysisReport {
    /// True exactly for the classes the random walk experiment counts:
    /// certified fully irreducible with a triangle-only ideal graph.
    pub fn is_triangular_fully_irreducible(&self) -> bool {
        matches!(self.classification.fully_irreducible, FullIrreducibility::CertifiedYes)
            && self.classification.triangular
    }

    /// Report as JSON, without the move trace.
    pub fn to_json_value(&self) -> serde_json::Value {
        let outcome = match &self.outcome {
            TrainTrackOutcome::TrainTrack { .. } => "train_track",
            TrainTrackOutcome::ReductionWitness(_) => "reducible",
            TrainTrackOutcome::Inconclusive { .. } => "inconclusive",
        };
        let pnp = self.pnp_status.as_ref().map(|p| match p {
            PnpStatus::Found(_) => "found",
            PnpStatus::NoneFoundUpToBound => "none_found_up_to_bound",
            PnpStatus::Inconclusive => "inconclusive",
        });
        let fi = match &self.classification.fully_irreducible {
            FullIrreducibility::CertifiedYes => "certified_yes",
            FullIrreducibility::CertifiedNo(_) => "certified_no",
            FullIrreducibility::Unknown => "unknown",
        };
        let ageometric = match self.classification.ageometric {
            Ageometric::CertifiedYes => "certified_yes",
            Ageometric::Unknown => "unknown",
            Ageometric::NotApplicable => "not_applicable",
        };
        let reduction = match &self.classification.fully_irreducible {
            FullIrreducibility::CertifiedNo(data) => json!({
                "invariant_edges": data.invariant_edges.iter().copied().collect::<Vec<_>>(),
                "factor_rank": data.factor_rank,
                "free_factor": data.free_factor.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            }),
            _ => serde_json::Value::Null,
        };
        json!({
            "rank": self.rank,
            "outcome": outcome,
            "folds": self.folds,
            "lambda": self.lambda,
            "rotationless_power": self.rotationless_power,
            "k_list": self.census,
            "index": self.index.map(|i| i.to_string()),
            "pnp_status": pnp,
            "flags": {
                "fully_irreducible": fi,
                "ageometric": ageometric,
                "triangular": self.classification.triangular,
                "principal": self.classification.principal,
                "iw_provisional": self.iw_provisional,
            },
            "reduction": reduction,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn auto(images: &[&str]) -> FreeAutomorphism {
        FreeAutomorphism::from_strings(images.len(), images, false).unwrap()
    }

    #[test]
    fn cubic_example_is_certified_ageometric_fully_irreducible() {
        let report = analyze_automorphism(&auto(&["b", "c", "ab"]), &AnalyzeOptions::default());
        let lambda = report.lambda.unwrap();
        assert!((lambda.powi(3) - lambda - 1.0).abs() < 1e-9, "lambda^3 = lambda + 1");
        assert_eq!(report.rotationless_power, Some(6));
        assert_eq!(report.census, Some(vec![5]));
        assert_eq!(report.index, Some(Rational64::new(-3, 2)));
        assert_eq!(report.pnp_status, Some(PnpStatus::NoneFoundUpToBound));
        assert!(matches!(
            report.classification.fully_irreducible,
            FullIrreducibility::CertifiedYes
        ));
        assert_eq!(report.classification.ageometric, Ageometric::CertifiedYes);
        assert!(!report.classification.triangular);
        assert!(!report.classification.principal);
        assert!(!report.is_triangular_fully_irreducible());
    }

    #[test]
    fn identity_is_certified_reducible() {
        let report = analyze_automorphism(&auto(&["a", "b", "c"]), &AnalyzeOptions::default());
        assert!(matches!(
            report.classification.fully_irreducible,
            FullIrreducibility::CertifiedNo(_)
        ));
        assert_eq!(report.classification.ageometric, Ageometric::NotApplicable);
        assert_eq!(report.lambda, None);
    }

    #[test]
    fn visibly_invariant_factor_gives_a_rank_two_witness() {
        let report = analyze_automorphism(&auto(&["a", "b", "ca"]), &AnalyzeOptions::default());
        match report.classification.fully_irreducible {
            FullIrreducibility::CertifiedNo(ref data) => {
                assert_eq!(data.factor_rank, 2);
                assert_eq!(data.free_factor.len(), 2);
            }
            ref other => panic!("expected a reduction witness, got {other:?}"),
        }
    }

    #[test]
    fn nielsen_path_blocks_the_certificate_honestly() {
        let report = analyze_automorphism(&auto(&["ab", "a"]), &AnalyzeOptions::default());
        assert!(matches!(report.pnp_status, Some(PnpStatus::Found(_))));
        assert!(matches!(report.classification.fully_irreducible, FullIrreducibility::Unknown));
        assert_eq!(report.census, None, "ideal graph formula must refuse Nielsen paths");
    }

    #[test]
    fn report_json_has_the_contract_fields() {
        let report = analyze_automorphism(&auto(&["b", "c", "ab"]), &AnalyzeOptions::default());
        let v = report.to_json_value();
        assert_eq!(v["outcome"], "train_track");
        assert_eq!(v["k_list"], json!([5]));
        assert_eq!(v["index"], "-3/2");
        assert_eq!(v["pnp_status"], "none_found_up_to_bound");
        assert_eq!(v["flags"]["fully_irreducible"], "certified_yes");
        assert_eq!(v["flags"]["triangular"], false);
        assert_eq!(v["rotationless_power"], 6);
    }
}
