//! Quality measures of a hypothesis and the OCEL/CELOE heuristics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::Concept;
use crate::kb::IndividualSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("learning problem has no positive examples")]
    NoPositives,
    #[error("learning problem has no negative examples")]
    NoNegatives,
    #[error("{0} individual(s) are both positive and negative")]
    Overlap(usize),
    #[error("example sets are defined over different universes")]
    UniverseMismatch,
}

/// Positive and negative examples, optionally with the concept they were
/// generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningProblem {
    positives: IndividualSet,
    negatives: IndividualSet,
    target: Option<Concept>,
}

impl LearningProblem {
    pub fn new(positives: IndividualSet, negatives: IndividualSet) -> Result<Self, ProblemError> {
        if positives.universe() != negatives.universe() {
            return Err(ProblemError::UniverseMismatch);
        }
        if positives.is_empty() {
            return Err(ProblemError::NoPositives);
        }
        if negatives.is_empty() {
            return Err(ProblemError::NoNegatives);
        }
        let overlap = positives.intersection_count(&negatives);
        if overlap > 0 {
            return Err(ProblemError::Overlap(overlap));
        }
        Ok(LearningProblem { positives, negatives, target: None })
    }

    pub fn with_target(mut self, target: Concept) -> Self {
        self.target = Some(target);
        self
    }

    pub fn positives(&self) -> &IndividualSet {
        &self.positives
    }

    pub fn negatives(&self) -> &IndividualSet {
        &self.negatives
    }

    pub fn target(&self) -> Option<&Concept> {
        self.target.as_ref()
    }

    pub fn labeled(&self) -> IndividualSet {
        self.positives.union(&self.negatives)
    }
}

/// Weights of the gain (`lambda`) and penalty (`beta`) terms, and CELOE's
/// accuracy weight `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicParams {
    pub lambda: f64,
    pub beta: f64,
    pub t: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams { lambda: 0.5, beta: 0.02, t: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid heuristic parameters: {0}")]
pub struct InvalidParams(pub String);

impl HeuristicParams {
    /// OCEL requires `beta > lambda >= 0`.
    pub fn validate_ocel(&self) -> Result<(), InvalidParams> {
        if !(self.lambda >= 0.0 && self.beta > self.lambda) {
            return Err(InvalidParams(format!(
                "need beta > lambda >= 0, got lambda={} beta={}",
                self.lambda, self.beta
            )));
        }
        Ok(())
    }

    pub fn validate_celoe(&self) -> Result<(), InvalidParams> {
        if !(self.lambda >= 0.0 && self.beta >= 0.0 && self.t > 1.0) {
            return Err(InvalidParams(format!(
                "need lambda >= 0, beta >= 0, t > 1, got lambda={} beta={} t={}",
                self.lambda, self.beta, self.t
            )));
        }
        Ok(())
    }
}

/// Fraction of labeled examples classified correctly.
pub fn accuracy_simple(lp: &LearningProblem, retrieved: &IndividualSet) -> f64 {
    let missed = lp.positives.difference_count(retrieved);
    let wrong = retrieved.intersection_count(&lp.negatives);
    let total = lp.positives.len() + lp.negatives.len();
    1.0 - (missed + wrong) as f64 / total as f64
}

/// CELOE's accuracy, which charges every retrieved non-positive (labeled or
/// not) and weights missed positives by `t`.
pub fn accuracy_celoe(lp: &LearningProblem, retrieved: &IndividualSet, all_individuals: &IndividualSet, t: f64) -> f64 {
    let missed = lp.positives.difference_count(retrieved) as f64;
    let extra = retrieved.difference_count(&lp.positives) as f64;
    1.0 - 2.0 * (t * missed + extra) / ((t + 1.0) * all_individuals.len() as f64)
}

pub fn heuristic_ocel(acc_parent: f64, acc_child: f64, expansions: usize, p: &HeuristicParams) -> f64 {
    acc_child + p.lambda * (acc_child - acc_parent) - p.beta * expansions as f64
}

pub fn heuristic_celoe(acc_parent: f64, acc_child: f64, child_length: usize, p: &HeuristicParams) -> f64 {
    acc_child + p.lambda * (acc_child - acc_parent) - p.beta * child_length as f64
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision(lp: &LearningProblem, retrieved: &IndividualSet) -> f64 {
    let tp = lp.positives.intersection_count(retrieved);
    ratio(tp, tp + lp.negatives.intersection_count(retrieved))
}

pub fn recall(lp: &LearningProblem, retrieved: &IndividualSet) -> f64 {
    let tp = lp.positives.intersection_count(retrieved);
    ratio(tp, tp + lp.positives.difference_count(retrieved))
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_measure(lp: &LearningProblem, retrieved: &IndividualSet) -> f64 {
    let p = precision(lp, retrieved);
    let r = recall(lp, retrieved);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// A concept is a goal when it retrieves every positive and no negative.
pub fn is_goal(lp: &LearningProblem, retrieved: &IndividualSet) -> bool {
    lp.positives.is_subset(retrieved) && lp.negatives.is_disjoint(retrieved)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QualityMetric {
    #[default]
    FMeasure,
    AccuracySimple,
    AccuracyCeloe,
}

impl QualityMetric {
    pub fn evaluate(self, lp: &LearningProblem, retrieved: &IndividualSet, t: f64) -> f64 {
        match self {
            QualityMetric::FMeasure => f_measure(lp, retrieved),
            QualityMetric::AccuracySimple => accuracy_simple(lp, retrieved),
            QualityMetric::AccuracyCeloe => {
                accuracy_celoe(lp, retrieved, &IndividualSet::full(retrieved.universe()), t)
            }
        }
    }
}
