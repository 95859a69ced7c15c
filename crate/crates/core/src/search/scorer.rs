//! Heuristics that order the search frontier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SearchError, SearchNode};
use crate::concept::Concept;
use crate::heuristics::{
    accuracy_celoe, accuracy_simple, heuristic_celoe, heuristic_ocel, HeuristicParams, LearningProblem,
};
use crate::kb::{IndividualSet, KnowledgeBase};

/// What a scorer may look at besides the nodes themselves.
pub struct ScoreContext<'a> {
    pub kb: &'a KnowledgeBase,
    pub lp: &'a LearningProblem,
    pub all_individuals: &'a IndividualSet,
}

/// A refinement that passed the redundancy filter and awaits a heuristic value.
pub struct Candidate<'a> {
    pub concept: &'a Concept,
    pub retrieved: &'a IndividualSet,
}

pub trait Scorer {
    /// Heuristic values for `children` refined from `parent`, in order.
    fn score(
        &mut self,
        ctx: &ScoreContext<'_>,
        parent: &SearchNode,
        children: &[Candidate<'_>],
    ) -> Result<Vec<f64>, SearchError>;

    /// Stepwise scorers expand a node a little further each time it is
    /// selected and re-score it afterwards.
    fn stepwise(&self) -> bool {
        false
    }

    /// New heuristic for an expanded node; only consulted when `stepwise`.
    fn rescore(&mut self, _ctx: &ScoreContext<'_>, node: &SearchNode, _parent: Option<&SearchNode>) -> f64 {
        node.heuristic
    }

    fn name(&self) -> &'static str;
}

/// CELOE: accuracy gain over the parent, penalised by the child's length.
#[derive(Debug, Clone)]
pub struct CeloeScorer {
    params: HeuristicParams,
}

impl CeloeScorer {
    pub fn new(params: HeuristicParams) -> Result<Self, SearchError> {
        params.validate_celoe().map_err(|e| SearchError::Scorer(e.to_string()))?;
        Ok(CeloeScorer { params })
    }
}

impl Scorer for CeloeScorer {
    fn score(
        &mut self,
        ctx: &ScoreContext<'_>,
        parent: &SearchNode,
        children: &[Candidate<'_>],
    ) -> Result<Vec<f64>, SearchError> {
        let t = self.params.t;
        let acc_parent = accuracy_celoe(ctx.lp, &parent.retrieved, ctx.all_individuals, t);
        Ok(children
            .iter()
            .map(|c| {
                let acc = accuracy_celoe(ctx.lp, c.retrieved, ctx.all_individuals, t);
                heuristic_celoe(acc_parent, acc, c.concept.length(), &self.params)
            })
            .collect())
    }

    fn name(&self) -> &'static str {
        "celoe"
    }
}

/// OCEL: accuracy gain over the parent, penalised by horizontal expansion.
#[derive(Debug, Clone)]
pub struct OcelScorer {
    params: HeuristicParams,
}

impl OcelScorer {
    pub fn new(params: HeuristicParams) -> Result<Self, SearchError> {
        params.validate_ocel().map_err(|e| SearchError::Scorer(e.to_string()))?;
        Ok(OcelScorer { params })
    }
}

impl Scorer for OcelScorer {
    fn score(
        &mut self,
        ctx: &ScoreContext<'_>,
        parent: &SearchNode,
        children: &[Candidate<'_>],
    ) -> Result<Vec<f64>, SearchError> {
        let acc_parent = accuracy_simple(ctx.lp, &parent.retrieved);
        Ok(children
            .iter()
            .map(|c| heuristic_ocel(acc_parent, accuracy_simple(ctx.lp, c.retrieved), 0, &self.params))
            .collect())
    }

    fn stepwise(&self) -> bool {
        true
    }

    fn rescore(&mut self, ctx: &ScoreContext<'_>, node: &SearchNode, parent: Option<&SearchNode>) -> f64 {
        let acc = accuracy_simple(ctx.lp, &node.retrieved);
        let acc_parent = parent.map_or(acc, |p| accuracy_simple(ctx.lp, &p.retrieved));
        heuristic_ocel(acc_parent, acc, node.expansions, &self.params)
    }

    fn name(&self) -> &'static str {
        "ocel"
    }
}

/// Uniform random heuristic values from a seeded stream.
#[derive(Debug, Clone)]
pub struct RandomScorer {
    rng: ChaCha8Rng,
}

impl RandomScorer {
    pub fn new(seed: u64) -> Self {
        RandomScorer { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Scorer for RandomScorer {
    fn score(
        &mut self,
        _ctx: &ScoreContext<'_>,
        _parent: &SearchNode,
        children: &[Candidate<'_>],
    ) -> Result<Vec<f64>, SearchError> {
        Ok(children.iter().map(|_| self.rng.random::<f64>()).collect())
    }

    fn name(&self) -> &'static str {
        "random"
    }
}
