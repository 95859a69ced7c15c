use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use super::SearchError;
use crate::concept::Concept;
use crate::kb::IndividualSet;

/// A concept in the search tree together with its evaluation.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub id: usize,
    pub concept: Concept,
    pub length: usize,
    pub parent: Option<usize>,
    pub retrieved: Arc<IndividualSet>,
    pub quality: f64,
    pub heuristic: f64,
    /// Number of times this node has been expanded (OCEL's `z`).
    pub expansions: usize,
    pub refinement_count: usize,
}

// Frontier order: higher heuristic first, then shorter, then older.
#[derive(Debug, Clone, Copy)]
struct FrontierKey {
    heuristic: f64,
    length: usize,
    id: usize,
}

impl Ord for FrontierKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.heuristic
            .total_cmp(&other.heuristic)
            .then_with(|| other.length.cmp(&self.length))
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for FrontierKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for FrontierKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for FrontierKey {}

#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
    frontier: BTreeSet<FrontierKey>,
    seen: HashSet<String>,
    best: usize,
}

impl SearchTree {
    /// A tree holding only the root, which should be `⊤`.
    pub fn with_root(concept: Concept, retrieved: Arc<IndividualSet>, quality: f64, heuristic: f64) -> Self {
        let mut tree = SearchTree { nodes: Vec::new(), frontier: BTreeSet::new(), seen: HashSet::new(), best: 0 };
        tree.push(concept, None, retrieved, quality, heuristic);
        tree
    }

    fn push(
        &mut self,
        concept: Concept,
        parent: Option<usize>,
        retrieved: Arc<IndividualSet>,
        quality: f64,
        heuristic: f64,
    ) -> usize {
        let id = self.nodes.len();
        self.seen.insert(concept.canonical_key());
        let length = concept.length();
        self.frontier.insert(FrontierKey { heuristic, length, id });
        self.nodes.push(SearchNode {
            id,
            concept,
            length,
            parent,
            retrieved,
            quality,
            heuristic,
            expansions: 0,
            refinement_count: 0,
        });
        let best = &self.nodes[self.best];
        let improves = quality > best.quality || (quality == best.quality && length < best.length);
        if improves {
            self.best = id;
        }
        id
    }

    /// Adds a child unless an equivalent concept (modulo commutativity) is
    /// already in the tree. Returns the new node id.
    pub fn add_child(
        &mut self,
        parent: usize,
        concept: Concept,
        retrieved: Arc<IndividualSet>,
        quality: f64,
        heuristic: f64,
    ) -> Option<usize> {
        if self.seen.contains(&concept.canonical_key()) {
            return None;
        }
        self.nodes[parent].refinement_count += 1;
        Some(self.push(concept, Some(parent), retrieved, quality, heuristic))
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.seen.contains(key)
    }

    /// The frontier maximum, left in place.
    pub fn select_most_promising(&self) -> Result<&SearchNode, SearchError> {
        self.frontier.last().map(|k| &self.nodes[k.id]).ok_or(SearchError::EmptyFrontier)
    }

    pub(crate) fn remove_from_frontier(&mut self, id: usize) {
        let node = &self.nodes[id];
        self.frontier.remove(&FrontierKey { heuristic: node.heuristic, length: node.length, id });
    }

    pub(crate) fn reinsert(&mut self, id: usize, heuristic: f64) {
        self.remove_from_frontier(id);
        let node = &mut self.nodes[id];
        node.heuristic = heuristic;
        self.frontier.insert(FrontierKey { heuristic, length: node.length, id });
    }

    pub(crate) fn node_mut(&mut self, id: usize) -> &mut SearchNode {
        &mut self.nodes[id]
    }

    pub(crate) fn set_best(&mut self, id: usize) {
        self.best = id;
    }

    pub fn node(&self, id: usize) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn best(&self) -> &SearchNode {
        &self.nodes[self.best]
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }
}
