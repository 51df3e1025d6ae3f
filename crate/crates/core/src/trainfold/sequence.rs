//! Record of elementary moves performed by a decomposition or driver run.

use serde::Serialize;

use crate::graphmap::{HalfEdge, MarkedGraph};

/// One elementary move, in the vocabulary shared by fold decompositions and
/// the train track driver.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum FoldStep {
    /// Edge split at the interior point a `ratio` fraction along its length.
    Subdivide { edge: usize, ratio: f64 },
    /// Identification of the maximal common initial image segments of two
    /// directions at one vertex.
    Fold { d1: HalfEdge, d2: HalfEdge },
    /// Free reduction of every stored path.
    Tighten,
    /// Collapse of a subforest to points.
    Collapse { edges: Vec<usize> },
    RemoveValenceOne { vertex: usize },
    RemoveValenceTwo { vertex: usize },
}

/// A step together with the graph it produced.
#[derive(Debug, Clone)]
pub struct FoldStage {
    pub step: FoldStep,
    pub graph_after: MarkedGraph,
}

/// Ordered list of stages; composing the step maps and tightening stays in
/// the outer class of the map being decomposed or improved.
#[derive(Debug, Clone, Default)]
pub struct FoldSequence {
    pub stages: Vec<FoldStage>,
}

impl FoldSequence {
    pub fn new() -> Self {
        FoldSequence { stages: Vec::new() }
    }

    pub fn push(&mut self, step: FoldStep, graph_after: MarkedGraph) {
        self.stages.push(FoldStage { step, graph_after });
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Number of fold stages, the measure used by step caps.
    pub fn fold_count(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| matches!(s.step, FoldStep::Fold { .. }))
            .count()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let stages: Vec<serde_json::Value> = self
            .stages
            .iter()
            .map(|s| {
                let graph: serde_json::Value = serde_json::from_str(&s.graph_after.to_json())
                    .expect("graph serialization is valid json");
                serde_json::json!({
                    "step": serde_json::to_value(&s.step).expect("step serializes"),
                    "graph_after": graph,
                })
            })
            .collect();
        serde_json::json!({ "stages": stages })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("trace serializes")
    }
}
