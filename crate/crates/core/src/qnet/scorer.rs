use super::network::{forward_batch, QNetworkParams};
use crate::embeddings::{EmbeddingTable, StateMatrix};
use crate::search::{Candidate, ScoreContext, Scorer, SearchError, SearchNode};

/// Scores a refinement by the Q-value of the (parent, child) transition.
#[derive(Debug, Clone)]
pub struct DrillScorer<'a> {
    params: &'a QNetworkParams,
    table: &'a EmbeddingTable,
}

impl<'a> DrillScorer<'a> {
    pub fn new(params: &'a QNetworkParams, table: &'a EmbeddingTable) -> Result<Self, super::QNetError> {
        if table.dimension() != params.dimension() {
            return Err(super::QNetError::ShapeMismatch {
                what: "embedding table".into(),
                expected: vec![params.dimension()],
                found: vec![table.dimension()],
            });
        }
        Ok(DrillScorer { params, table })
    }
}

impl Scorer for DrillScorer<'_> {
    fn score(
        &mut self,
        ctx: &ScoreContext<'_>,
        parent: &SearchNode,
        children: &[Candidate<'_>],
    ) -> Result<Vec<f64>, SearchError> {
        if self.table.len() != ctx.kb.num_individuals() {
            return Err(SearchError::Scorer(format!(
                "embedding table covers {} individuals, knowledge base has {}",
                self.table.len(),
                ctx.kb.num_individuals()
            )));
        }
        let parent_mean = self.table.mean(&parent.retrieved);
        let pos = self.table.mean(ctx.lp.positives());
        let neg = self.table.mean(ctx.lp.negatives());
        let states: Vec<StateMatrix> = children
            .iter()
            .map(|c| StateMatrix::from_rows([&parent_mean, &self.table.mean(c.retrieved), &pos, &neg]))
            .collect();
        forward_batch(self.params, &states).map_err(|e| SearchError::Scorer(e.to_string()))
    }

    fn name(&self) -> &'static str {
        "drill"
    }
}
