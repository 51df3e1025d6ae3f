//! Checkpointed classification statistics over independent random walks.
//!
//! Each trial walks its own rng stream, keyed by the master seed and the
//! trial index, so the experiment is deterministic under any scheduling.
//! Aggregation is a pure fold of the records in trial order, which keeps
//! repeated runs byte-identical down to the CSV floats.

use std::collections::HashMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::freegroup::FreeAutomorphism;
use crate::trainfold::TrainTrackOutcome;
use crate::whitehead::{analyze_automorphism, Ageometric, AnalysisReport, AnalyzeOptions, FullIrreducibility};

use super::distribution::StepDistribution;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("the walk needs at least one step")]
    EmptyWalk,
    #[error("the experiment needs at least one trial")]
    NoTrials,
    #[error("checkpoints must be strictly increasing and within [1, n_max]")]
    BadCheckpoints,
    #[error("the letter budget must be positive")]
    BadBudget,
}

/// Experiment shape: walk length, observation times, and analysis limits.
#[derive(Debug, Clone)]
pub struct WalkConfig {
    pub n_max: usize,
    /// Strictly increasing observation times in `[1, n_max]`.
    pub checkpoints: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub options: AnalyzeOptions,
    /// A trial is cut off once a walk word exceeds this many letters.
    pub letter_budget: usize,
    /// Also analyze the inverse location at every checkpoint.
    pub also_inverse: bool,
}

impl WalkConfig {
    pub fn new(n_max: usize, checkpoints: Vec<usize>, trials: usize, master_seed: u64) -> Self {
        WalkConfig {
            n_max,
            checkpoints,
            trials,
            master_seed,
            options: AnalyzeOptions::default(),
            letter_budget: 1_000_000,
            also_inverse: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_max == 0 {
            return Err(ExperimentError::EmptyWalk);
        }
        if self.trials == 0 {
            return Err(ExperimentError::NoTrials);
        }
        if self.letter_budget == 0 {
            return Err(ExperimentError::BadBudget);
        }
        let ok = !self.checkpoints.is_empty()
            && self.checkpoints.windows(2).all(|w| w[0] < w[1])
            && self.checkpoints[0] >= 1
            && *self.checkpoints.last().unwrap() <= self.n_max;
        if !ok {
            return Err(ExperimentError::BadCheckpoints);
        }
        Ok(())
    }
}

/// What happened to one walk location.
#[derive(Debug, Clone)]
pub enum RecordOutcome {
    Analyzed(Box<AnalysisReport>),
    /// The walk word outgrew the letter budget before this checkpoint.
    Truncated { letters: usize },
}

/// One analyzed (or truncated) checkpoint of one trial.
#[derive(Debug, Clone)]
pub struct CheckpointRecord {
    pub trial: usize,
    pub n: usize,
    pub outcome: RecordOutcome,
    pub wall_seconds: f64,
}

impl CheckpointRecord {
    pub fn report(&self) -> Option<&AnalysisReport> {
        match &self.outcome {
            RecordOutcome::Analyzed(r) => Some(r),
            RecordOutcome::Truncated { .. } => None,
        }
    }

    pub fn tt_found(&self) -> bool {
        self.report()
            .is_some_and(|r| matches!(r.outcome, TrainTrackOutcome::TrainTrack { .. }))
    }

    pub fn fi_certified(&self) -> bool {
        self.report().is_some_and(|r| {
            matches!(r.classification.fully_irreducible, FullIrreducibility::CertifiedYes)
        })
    }

    /// Certified in either direction; truncated records never are.
    pub fn fi_resolved(&self) -> bool {
        self.report().is_some_and(|r| {
            !matches!(r.classification.fully_irreducible, FullIrreducibility::Unknown)
        })
    }

    pub fn ageometric(&self) -> bool {
        self.report()
            .is_some_and(|r| matches!(r.classification.ageometric, Ageometric::CertifiedYes))
    }

    pub fn triangular(&self) -> bool {
        self.report().is_some_and(|r| r.classification.triangular)
    }

    pub fn principal(&self) -> bool {
        self.report().is_some_and(|r| r.classification.principal)
    }

    pub fn triangular_fi(&self) -> bool {
        self.report().is_some_and(AnalysisReport::is_triangular_fully_irreducible)
    }
}

/// Runs the full classification pipeline on one walk location. The
/// caller stamps `trial` and `n`; unresolved verdicts pass through
/// unchanged. The fold trace is dropped from the stored report: a
/// trace holds every stage graph, which does not scale to thousands
/// of records.
pub fn analyze_checkpoint(w: &FreeAutomorphism, options: &AnalyzeOptions) -> CheckpointRecord {
    let start = Instant::now();
    let mut report = analyze_automorphism(w, options);
    report.trace = crate::trainfold::FoldSequence::new();
    CheckpointRecord {
        trial: 0,
        n: 0,
        outcome: RecordOutcome::Analyzed(Box::new(report)),
        wall_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Aggregates for one observation time, fractions over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointAggregate {
    pub n: usize,
    pub trials: usize,
    pub frac_tt_found: f64,
    pub frac_fi_certified: f64,
    pub frac_ageometric: f64,
    pub frac_triangular: f64,
    pub frac_principal: f64,
    /// Truncated or still carrying an Unknown irreducibility verdict.
    pub frac_unresolved: f64,
    /// Mean over records that computed an index.
    pub mean_index: Option<f64>,
    /// Mean of `ln lambda` over records with a train track.
    pub mean_log_lambda: Option<f64>,
    /// Triangular fraction among the fully-irreducible-certified.
    pub frac_triangular_fi: Option<f64>,
    /// Triangular-fully-irreducible fraction of the inverse locations.
    pub frac_triangular_inverse: Option<f64>,
    /// Fraction of trials where both directions are triangular and
    /// fully irreducible at this time.
    pub frac_joint_triangular: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub records: Vec<CheckpointRecord>,
    pub inverse_records: Option<Vec<CheckpointRecord>>,
    pub checkpoints: Vec<CheckpointAggregate>,
}

const CSV_HEADER: &str = "checkpoint_n,trials,frac_tt_found,frac_fi_certified,frac_ageometric,\
frac_triangular,frac_principal,frac_unresolved,mean_index,mean_log_lambda,frac_triangular_fi";

impl ExperimentReport {
    /// One row per checkpoint; inverse columns appear only when the
    /// experiment analyzed inverse locations.
    pub fn to_csv(&self) -> String {
        let inverse = self.inverse_records.is_some();
        let mut out = String::from(CSV_HEADER);
        if inverse {
            out.push_str(",frac_triangular_inverse,frac_joint_triangular");
        }
        out.push('\n');
        for row in &self.checkpoints {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                row.n,
                row.trials,
                fmt_sig(row.frac_tt_found),
                fmt_sig(row.frac_fi_certified),
                fmt_sig(row.frac_ageometric),
                fmt_sig(row.frac_triangular),
                fmt_sig(row.frac_principal),
                fmt_sig(row.frac_unresolved),
                fmt_opt(row.mean_index),
                fmt_opt(row.mean_log_lambda),
                fmt_opt(row.frac_triangular_fi),
            ));
            if inverse {
                out.push_str(&format!(
                    ",{},{}",
                    fmt_opt(row.frac_triangular_inverse),
                    fmt_opt(row.frac_joint_triangular),
                ));
            }
            out.push('\n');
        }
        out
    }
}

/// Rounds to 12 significant digits, then renders the shortest decimal
/// that reparses to the rounded value.
fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("float text reparses");
    rounded.to_string()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

/// Pure fold of the records; `run_experiment` emits exactly this.
pub fn aggregate_records(
    records: &[CheckpointRecord],
    inverse_records: Option<&[CheckpointRecord]>,
    checkpoints: &[usize],
    trials: usize,
) -> Vec<CheckpointAggregate> {
    let denom = trials as f64;
    let inverse_tfi: Option<HashMap<(usize, usize), bool>> = inverse_records.map(|rs| {
        rs.iter().map(|r| ((r.trial, r.n), r.triangular_fi())).collect()
    });
    checkpoints
        .iter()
        .map(|&n| {
            let rows: Vec<&CheckpointRecord> = records.iter().filter(|r| r.n == n).collect();
            debug_assert_eq!(rows.len(), trials, "one record per trial at each time");
            let count = |p: &dyn Fn(&CheckpointRecord) -> bool| {
                rows.iter().filter(|r| p(r)).count()
            };
            let fi_certified = count(&CheckpointRecord::fi_certified);
            let tfi = count(&CheckpointRecord::triangular_fi);
            let mut index_sum = 0.0;
            let mut index_n = 0usize;
            let mut log_lambda_sum = 0.0;
            let mut lambda_n = 0usize;
            for r in &rows {
                if let Some(report) = r.report() {
                    if let Some(ix) = report.index {
                        index_sum += *ix.numer() as f64 / *ix.denom() as f64;
                        index_n += 1;
                    }
                    if let Some(lambda) = report.lambda {
                        log_lambda_sum += lambda.ln();
                        lambda_n += 1;
                    }
                }
            }
            let (inv_frac, joint_frac) = match &inverse_tfi {
                None => (None, None),
                Some(map) => {
                    let inv = map.iter().filter(|((_, m), tfi)| *m == n && **tfi).count();
                    let joint = rows
                        .iter()
                        .filter(|r| {
                            r.triangular_fi() && map.get(&(r.trial, n)).copied().unwrap_or(false)
                        })
                        .count();
                    (Some(inv as f64 / denom), Some(joint as f64 / denom))
                }
            };
            CheckpointAggregate {
                n,
                trials,
                frac_tt_found: count(&CheckpointRecord::tt_found) as f64 / denom,
                frac_fi_certified: fi_certified as f64 / denom,
                frac_ageometric: count(&CheckpointRecord::ageometric) as f64 / denom,
                frac_triangular: count(&CheckpointRecord::triangular) as f64 / denom,
                frac_principal: count(&CheckpointRecord::principal) as f64 / denom,
                frac_unresolved: count(&|r: &CheckpointRecord| !r.fi_resolved()) as f64 / denom,
                mean_index: (index_n > 0).then(|| index_sum / index_n as f64),
                mean_log_lambda: (lambda_n > 0).then(|| log_lambda_sum / lambda_n as f64),
                frac_triangular_fi: (fi_certified > 0).then(|| tfi as f64 / fi_certified as f64),
                frac_triangular_inverse: inv_frac,
                frac_joint_triangular: joint_frac,
            }
        })
        .collect()
}

fn run_trial(
    mu: &StepDistribution,
    step_inverses: Option<&[FreeAutomorphism]>,
    config: &WalkConfig,
    trial: usize,
) -> (Vec<CheckpointRecord>, Option<Vec<CheckpointRecord>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    rng.set_stream(trial as u64);
    let mut w = FreeAutomorphism::identity(mu.rank());
    let mut v = step_inverses.map(|_| FreeAutomorphism::identity(mu.rank()));
    let mut forward = Vec::with_capacity(config.checkpoints.len());
    let mut inverse = step_inverses.map(|_| Vec::with_capacity(config.checkpoints.len()));
    let mut truncated: Option<usize> = None;
    let mut next = 0usize;
    for n in 1..=config.n_max {
        if next == config.checkpoints.len() {
            break;
        }
        if truncated.is_none() {
            let i = mu.sample_index(&mut rng);
            w = w.compose(&mu.support()[i].0).expect("equal ranks");
            let mut letters = w.size();
            if let (Some(v), Some(invs)) = (v.as_mut(), step_inverses) {
                *v = invs[i].compose(v).expect("equal ranks");
                letters = letters.max(v.size());
            }
            if letters > config.letter_budget {
                truncated = Some(letters);
            }
        }
        if config.checkpoints[next] == n {
            next += 1;
            if let Some(letters) = truncated {
                let cut = CheckpointRecord {
                    trial,
                    n,
                    outcome: RecordOutcome::Truncated { letters },
                    wall_seconds: 0.0,
                };
                forward.push(cut.clone());
                if let Some(acc) = inverse.as_mut() {
                    acc.push(cut);
                }
            } else {
                let mut rec = analyze_checkpoint(&w, &config.options);
                rec.trial = trial;
                rec.n = n;
                forward.push(rec);
                if let (Some(acc), Some(v)) = (inverse.as_mut(), v.as_ref()) {
                    let mut rec = analyze_checkpoint(v, &config.options);
                    rec.trial = trial;
                    rec.n = n;
                    acc.push(rec);
                }
            }
        }
    }
    (forward, inverse)
}

/// Runs all trials in parallel and folds the records in trial order.
pub fn run_experiment(
    mu: &StepDistribution,
    config: &WalkConfig,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let step_inverses: Option<Vec<FreeAutomorphism>> = config.also_inverse.then(|| {
        mu.support()
            .iter()
            .map(|(g, _)| g.invert().expect("support entries are bases"))
            .collect()
    });
    let per_trial: Vec<_> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(mu, step_inverses.as_deref(), config, trial))
        .collect();
    let mut records = Vec::with_capacity(config.trials * config.checkpoints.len());
    let mut inverse_records = config.also_inverse.then(Vec::new);
    for (fwd, inv) in per_trial {
        records.extend(fwd);
        if let (Some(acc), Some(inv)) = (inverse_records.as_mut(), inv) {
            acc.extend(inv);
        }
    }
    let checkpoints = aggregate_records(
        &records,
        inverse_records.as_deref(),
        &config.checkpoints,
        config.trials,
    );
    Ok(ExperimentReport {
        records,
        inverse_records,
        checkpoints,
    })
}
