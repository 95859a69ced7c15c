//! Best-first refinement search over the concept space.
//!
//! The tree starts at `⊤`. Each iteration expands the frontier maximum:
//! its refinements are filtered for redundancy, evaluated against the
//! learning problem and inserted with the value the [`Scorer`] assigns. The
//! search stops at the first goal concept, when the runtime budget is spent,
//! or after the configured number of tested expressions.

mod scorer;
mod tree;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scorer::{Candidate, CeloeScorer, OcelScorer, RandomScorer, ScoreContext, Scorer};
pub use tree::{SearchNode, SearchTree};

use crate::concept::{Concept, UnknownName};
use crate::heuristics::{accuracy_simple, f_measure, is_goal, HeuristicParams, LearningProblem, QualityMetric};
use crate::kb::KnowledgeBase;
use crate::refinement::{refine_bounded, RefinementConfig};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid learning problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    UnknownName(#[from] UnknownName),
    #[error("search frontier is empty")]
    EmptyFrontier,
    #[error("scorer failed: {0}")]
    Scorer(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_runtime_seconds: f64,
    pub max_expressions_tested: usize,
    pub quality_metric: QualityMetric,
    pub refinement_max_length: usize,
    pub heuristic_params: HeuristicParams,
    pub seed: u64,
    pub record_trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_runtime_seconds: 3.0,
            max_expressions_tested: 100_000,
            quality_metric: QualityMetric::FMeasure,
            refinement_max_length: 12,
            heuristic_params: HeuristicParams::default(),
            seed: 0,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub concept: Concept,
    pub quality: f64,
    pub heuristic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub best_concept: Concept,
    pub best_length: usize,
    pub f1: f64,
    pub accuracy: f64,
    pub runtime_seconds: f64,
    pub expressions_tested: usize,
    pub goal_found: bool,
    pub trace: Option<Vec<TraceEntry>>,
}

/// Runs the search and returns its best concept.
pub fn learn(
    kb: &KnowledgeBase,
    lp: &LearningProblem,
    scorer: &mut dyn Scorer,
    cfg: &SearchConfig,
) -> Result<LearnResult, SearchError> {
    learn_with_tree(kb, lp, scorer, cfg).map(|(result, _)| result)
}

/// As [`learn`], also handing back the final search tree.
pub fn learn_with_tree(
    kb: &KnowledgeBase,
    lp: &LearningProblem,
    scorer: &mut dyn Scorer,
    cfg: &SearchConfig,
) -> Result<(LearnResult, SearchTree), SearchError> {
    let start = Instant::now();
    validate(kb, lp, cfg)?;
    let deadline = Duration::from_secs_f64(cfg.max_runtime_seconds);
    let metric = cfg.quality_metric;
    let t = cfg.heuristic_params.t;
    let all = kb.all_individuals();
    let ctx = ScoreContext { kb, lp, all_individuals: &all };
    let sig = kb.signature();

    let root_set = kb.retrieve(&Concept::Top)?;
    let root_quality = metric.evaluate(lp, &root_set, t);
    let mut tree = SearchTree::with_root(Concept::Top, root_set.clone(), root_quality, 0.0);
    let mut trace = cfg.record_trace.then(Vec::new);
    if let Some(trace) = trace.as_mut() {
        trace.push(TraceEntry { concept: Concept::Top, quality: root_quality, heuristic: 0.0 });
    }
    let mut tested = 1usize;
    let mut goal = is_goal(lp, &root_set).then_some(0);

    while goal.is_none() && tested < cfg.max_expressions_tested && start.elapsed() < deadline {
        let Ok(node) = tree.select_most_promising() else {
            break;
        };
        let id = node.id;
        let limit = if scorer.stepwise() {
            (node.length + node.expansions + 1).min(cfg.refinement_max_length)
        } else {
            cfg.refinement_max_length
        };
        let rcfg = RefinementConfig { max_length: limit, dedup: true };
        let refinements = refine_bounded(sig, &node.concept, &rcfg)?;

        let mut fresh = Vec::new();
        for concept in refinements {
            if tested >= cfg.max_expressions_tested {
                break;
            }
            if tree.contains_key(&concept.canonical_key()) {
                continue;
            }
            let retrieved = kb.retrieve(&concept)?;
            let quality = metric.evaluate(lp, &retrieved, t);
            tested += 1;
            let reached_goal = is_goal(lp, &retrieved);
            fresh.push((concept, retrieved, quality));
            if reached_goal {
                break;
            }
        }

        let candidates: Vec<Candidate<'_>> =
            fresh.iter().map(|(c, r, _)| Candidate { concept: c, retrieved: r }).collect();
        let scores = if candidates.is_empty() { Vec::new() } else { scorer.score(&ctx, tree.node(id), &candidates)? };
        if scores.len() != candidates.len() {
            return Err(SearchError::Scorer(format!(
                "{} returned {} scores for {} candidates",
                scorer.name(),
                scores.len(),
                candidates.len()
            )));
        }
        drop(candidates);
        for ((concept, retrieved, quality), heuristic) in fresh.into_iter().zip(scores) {
            let child_goal = is_goal(lp, &retrieved);
            if let Some(trace) = trace.as_mut() {
                trace.push(TraceEntry { concept: concept.clone(), quality, heuristic });
            }
            if let Some(child) = tree.add_child(id, concept, retrieved, quality, heuristic) {
                if child_goal && goal.is_none() {
                    goal = Some(child);
                }
            }
        }

        tree.node_mut(id).expansions += 1;
        if scorer.stepwise() && limit < cfg.refinement_max_length {
            let node = tree.node(id);
            let parent = node.parent.map(|p| tree.node(p));
            let heuristic = scorer.rescore(&ctx, node, parent);
            tree.reinsert(id, heuristic);
        } else {
            tree.remove_from_frontier(id);
        }
    }

    if let Some(g) = goal {
        tree.set_best(g);
    }
    let best = tree.best();
    let f1 = f_measure(lp, &best.retrieved);
    let result = LearnResult {
        best_concept: best.concept.clone(),
        best_length: best.length,
        f1,
        accuracy: accuracy_simple(lp, &best.retrieved),
        runtime_seconds: start.elapsed().as_secs_f64(),
        expressions_tested: tested,
        goal_found: f1 == 1.0,
        trace,
    };
    Ok((result, tree))
}

fn validate(kb: &KnowledgeBase, lp: &LearningProblem, cfg: &SearchConfig) -> Result<(), SearchError> {
    if lp.positives().universe() != kb.num_individuals() {
        return Err(SearchError::InvalidProblem(format!(
            "examples range over {} individuals but the knowledge base has {}",
            lp.positives().universe(),
            kb.num_individuals()
        )));
    }
    if cfg.max_runtime_seconds.is_nan()
        || cfg.max_runtime_seconds <= 0.0
        || cfg.max_expressions_tested == 0
        || cfg.refinement_max_length == 0
    {
        return Err(SearchError::InvalidProblem("search bounds must be positive".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_kb;

    fn kb() -> KnowledgeBase {
        parse_kb("type a Male\ntype b Female\nrole a hasChild c\nrole b hasChild c\n").unwrap()
    }

    fn lp(kb: &KnowledgeBase) -> LearningProblem {
        LearningProblem::new(kb.individual_set(["a", "b"]).unwrap(), kb.individual_set(["c"]).unwrap()).unwrap()
    }

    #[test]
    fn celoe_finds_a_goal() {
        let kb = kb();
        let lp = lp(&kb);
        let mut scorer = CeloeScorer::new(HeuristicParams::default()).unwrap();
        let cfg = SearchConfig { record_trace: true, ..Default::default() };
        let (result, tree) = learn_with_tree(&kb, &lp, &mut scorer, &cfg).unwrap();
        assert!(result.goal_found);
        assert_eq!(result.f1, 1.0);
        assert!(result.expressions_tested < 500);
        let trace = result.trace.as_ref().unwrap();
        assert_eq!(trace.len(), result.expressions_tested);
        let max_quality = trace.iter().map(|e| e.quality).fold(f64::MIN, f64::max);
        assert_eq!(max_quality, f_measure(&lp, &kb.retrieve(&result.best_concept).unwrap()));
        let mut keys: Vec<_> = tree.nodes().iter().map(|n| n.concept.canonical_key()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), tree.nodes().len());
    }

    #[test]
    fn ocel_and_random_find_goals_too() {
        let kb = kb();
        let lp = lp(&kb);
        let params = HeuristicParams { lambda: 0.01, ..Default::default() };
        let mut ocel = OcelScorer::new(params).unwrap();
        assert!(learn(&kb, &lp, &mut ocel, &SearchConfig::default()).unwrap().goal_found);
        let mut random = RandomScorer::new(3);
        assert!(learn(&kb, &lp, &mut random, &SearchConfig::default()).unwrap().goal_found);
    }

    #[test]
    fn random_scorer_is_deterministic() {
        let kb = kb();
        let lp =
            LearningProblem::new(kb.individual_set(["a"]).unwrap(), kb.individual_set(["b", "c"]).unwrap()).unwrap();
        let cfg = SearchConfig { max_expressions_tested: 300, max_runtime_seconds: 60.0, ..Default::default() };
        let run = || {
            let mut scorer = RandomScorer::new(42);
            let mut r = learn(&kb, &lp, &mut scorer, &cfg).unwrap();
            r.runtime_seconds = 0.0;
            r
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn mismatched_problem_is_invalid() {
        let kb = kb();
        let positives = crate::kb::IndividualSet::from_indices(5, [0]);
        let negatives = crate::kb::IndividualSet::from_indices(5, [1]);
        let lp = LearningProblem::new(positives, negatives).unwrap();
        let mut scorer = RandomScorer::new(0);
        let err = learn(&kb, &lp, &mut scorer, &SearchConfig::default()).unwrap_err();
        assert!(matches!(err, SearchError::InvalidProblem(_)));
    }

    #[test]
    fn expression_cap_is_respected() {
        let kb = kb();
        let lp = LearningProblem::new(kb.individual_set(["c"]).unwrap(), kb.individual_set(["a"]).unwrap()).unwrap();
        let mut scorer = RandomScorer::new(1);
        let cfg = SearchConfig { max_expressions_tested: 5, ..Default::default() };
        let result = learn(&kb, &lp, &mut scorer, &cfg).unwrap();
        assert!(result.expressions_tested <= 5);
    }
}
