//! Closed-world retrieval `R(C)` and the per-individual instance check.

use std::sync::Arc;

use super::{IndividualSet, KbError, KnowledgeBase};
use crate::concept::{Concept, UnknownName};

impl KnowledgeBase {
    /// Instances of `c` under closed-world set semantics.
    ///
    /// Results are memoised by canonical key, including those of every
    /// subexpression.
    pub fn retrieve(&self, c: &Concept) -> Result<Arc<IndividualSet>, UnknownName> {
        self.signature.check(c)?;
        Ok(self.retrieve_checked(c))
    }

    fn retrieve_checked(&self, c: &Concept) -> Arc<IndividualSet> {
        let n = self.num_individuals();
        match c {
            Concept::Top => return Arc::new(IndividualSet::full(n)),
            Concept::Bottom => return Arc::new(IndividualSet::empty(n)),
            _ => {}
        }
        let key = c.canonical_key();
        if let Some(hit) = self.cache.read().expect("retrieval cache poisoned").get(&key) {
            return hit.clone();
        }
        let set = match c {
            Concept::Top | Concept::Bottom => unreachable!(),
            Concept::Named(name) => self.concept_members[name].clone(),
            Concept::Not(x) => self.retrieve_checked(x).complement(),
            Concept::And(x, y) => self.retrieve_checked(x).intersection(&self.retrieve_checked(y)),
            Concept::Or(x, y) => self.retrieve_checked(x).union(&self.retrieve_checked(y)),
            Concept::Exists(role, x) => {
                let filler = self.retrieve_checked(x);
                let mut out = IndividualSet::empty(n);
                for &(s, o) in &self.role_pairs[role] {
                    if filler.contains(o) {
                        out.insert(s);
                    }
                }
                out
            }
            Concept::Forall(role, x) => {
                let filler = self.retrieve_checked(x);
                let mut out = IndividualSet::full(n);
                for &(s, o) in &self.role_pairs[role] {
                    if !filler.contains(o) {
                        out.remove(s);
                    }
                }
                out
            }
        };
        let set = Arc::new(set);
        self.cache.write().expect("retrieval cache poisoned").entry(key).or_insert(set).clone()
    }

    /// Whether `individual` is an instance of `c`, decided by evaluating the
    /// concept directly at that individual rather than through set algebra.
    pub fn instance_check(&self, individual: &str, c: &Concept) -> Result<bool, KbError> {
        let x = self.individual_index(individual).ok_or_else(|| KbError::UnknownIndividual(individual.to_string()))?;
        self.signature.check(c)?;
        Ok(self.holds_at(x, c))
    }

    pub(crate) fn holds_at(&self, x: usize, c: &Concept) -> bool {
        match c {
            Concept::Top => true,
            Concept::Bottom => false,
            Concept::Named(name) => self.concept_members[name].contains(x),
            Concept::Not(y) => !self.holds_at(x, y),
            Concept::And(y, z) => self.holds_at(x, y) && self.holds_at(x, z),
            Concept::Or(y, z) => self.holds_at(x, y) || self.holds_at(x, z),
            Concept::Exists(role, y) => self.successors(role, x).iter().any(|&s| self.holds_at(s as usize, y)),
            Concept::Forall(role, y) => self.successors(role, x).iter().all(|&s| self.holds_at(s as usize, y)),
        }
    }

    /// Drops every memoised retrieval result.
    pub fn clear_cache(&self) {
        self.cache.write().expect("retrieval cache poisoned").clear();
    }
}
