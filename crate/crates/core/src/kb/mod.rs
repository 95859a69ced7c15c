//! Knowledge bases with materialized assertions and closed-world retrieval.

mod individuals;
mod load;
mod retrieval;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use thiserror::Error;

pub use individuals::IndividualSet;
pub use load::{load_kb, parse_kb};

use crate::concept::{Signature, UnknownName};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    UnknownName(#[from] UnknownName),
    #[error("unknown individual `{0}`")]
    UnknownIndividual(String),
}

/// Non-fatal findings reported while building a knowledge base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KbWarning {
    /// Concept names that are their own (strict) subclass.
    SubclassCycle(Vec<String>),
    IgnoredDataProperty {
        line: usize,
    },
}

/// Accumulates assertions; individuals are numbered in first-seen order.
#[derive(Debug, Default)]
pub struct KbBuilder {
    individuals: Vec<Arc<str>>,
    index: HashMap<Arc<str>, usize>,
    concept_members: BTreeMap<Arc<str>, BTreeSet<usize>>,
    role_pairs: BTreeMap<Arc<str>, BTreeSet<(usize, usize)>>,
    subclass_axioms: BTreeSet<(Arc<str>, Arc<str>)>,
    warnings: Vec<KbWarning>,
}

impl KbBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn individual(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let name: Arc<str> = name.into();
        let i = self.individuals.len();
        self.individuals.push(name.clone());
        self.index.insert(name, i);
        i
    }

    pub fn add_type(&mut self, individual: &str, concept: &str) -> &mut Self {
        let i = self.individual(individual);
        self.concept_members.entry(concept.into()).or_default().insert(i);
        self
    }

    pub fn add_role(&mut self, subject: &str, role: &str, object: &str) -> &mut Self {
        let s = self.individual(subject);
        let o = self.individual(object);
        self.role_pairs.entry(role.into()).or_default().insert((s, o));
        self
    }

    pub fn add_subclass(&mut self, sub: &str, sup: &str) -> &mut Self {
        self.concept_members.entry(sub.into()).or_default();
        self.concept_members.entry(sup.into()).or_default();
        self.subclass_axioms.insert((sub.into(), sup.into()));
        self
    }

    /// Declares a concept name without instances.
    pub fn declare_concept(&mut self, name: &str) -> &mut Self {
        self.concept_members.entry(name.into()).or_default();
        self
    }

    /// Declares a role name without assertions.
    pub fn declare_role(&mut self, name: &str) -> &mut Self {
        self.role_pairs.entry(name.into()).or_default();
        self
    }

    pub(crate) fn warn(&mut self, warning: KbWarning) {
        self.warnings.push(warning);
    }

    pub fn build(self) -> Result<KnowledgeBase, KbError> {
        if self.individuals.is_empty() {
            return Err(KbError::Format { line: 0, message: "empty knowledge base".into() });
        }
        if self.concept_members.is_empty() {
            return Err(KbError::Format { line: 0, message: "knowledge base declares no concept names".into() });
        }
        let n = self.individuals.len();
        let mut warnings = self.warnings;

        let mut supers: BTreeMap<&Arc<str>, Vec<&Arc<str>>> = BTreeMap::new();
        for (sub, sup) in &self.subclass_axioms {
            supers.entry(sub).or_default().push(sup);
        }
        let direct: BTreeMap<Arc<str>, IndividualSet> = self
            .concept_members
            .iter()
            .map(|(name, members)| (name.clone(), IndividualSet::from_indices(n, members.iter().copied())))
            .collect();
        let mut closed = direct.clone();
        let mut cyclic = Vec::new();
        for (name, members) in &direct {
            // Depth-first over the superclass graph; terminates on cycles via `seen`.
            let mut seen: BTreeSet<&Arc<str>> = BTreeSet::new();
            let mut stack: Vec<&Arc<str>> = supers.get(name).cloned().unwrap_or_default();
            while let Some(sup) = stack.pop() {
                if !seen.insert(sup) {
                    continue;
                }
                if let Some(next) = supers.get(sup) {
                    stack.extend(next.iter().copied());
                }
            }
            if seen.contains(name) {
                cyclic.push(name.to_string());
            }
            for sup in seen {
                closed.get_mut(sup).expect("superclass declared").union_with(members);
            }
        }
        if !cyclic.is_empty() {
            log::warn!("subclass cycle among {}", cyclic.join(", "));
            warnings.push(KbWarning::SubclassCycle(cyclic));
        }

        let mut successors = BTreeMap::new();
        for (role, pairs) in &self.role_pairs {
            let mut succ = vec![Vec::new(); n];
            for &(s, o) in pairs {
                succ[s].push(o as u32);
            }
            successors.insert(role.clone(), succ);
        }

        let signature = Signature::new(closed.keys().cloned(), self.role_pairs.keys().cloned());
        Ok(KnowledgeBase {
            individuals: self.individuals,
            index: self.index,
            signature,
            concept_members: closed,
            role_pairs: self.role_pairs.into_iter().map(|(r, p)| (r, p.into_iter().collect())).collect(),
            successors,
            subclass_axioms: self.subclass_axioms,
            warnings,
            cache: RwLock::new(HashMap::new()),
        })
    }
}

/// A knowledge base: individuals, signature, and assertions with the subclass
/// closure already applied. Immutable apart from its retrieval cache.
#[derive(Debug)]
pub struct KnowledgeBase {
    individuals: Vec<Arc<str>>,
    index: HashMap<Arc<str>, usize>,
    signature: Signature,
    concept_members: BTreeMap<Arc<str>, IndividualSet>,
    role_pairs: BTreeMap<Arc<str>, Vec<(usize, usize)>>,
    successors: BTreeMap<Arc<str>, Vec<Vec<u32>>>,
    subclass_axioms: BTreeSet<(Arc<str>, Arc<str>)>,
    warnings: Vec<KbWarning>,
    cache: RwLock<HashMap<String, Arc<IndividualSet>>>,
}

impl KnowledgeBase {
    pub fn builder() -> KbBuilder {
        KbBuilder::new()
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn num_individuals(&self) -> usize {
        self.individuals.len()
    }

    pub fn individuals(&self) -> &[Arc<str>] {
        &self.individuals
    }

    pub fn individual_name(&self, index: usize) -> &str {
        &self.individuals[index]
    }

    pub fn individual_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn all_individuals(&self) -> IndividualSet {
        IndividualSet::full(self.num_individuals())
    }

    /// Builds a set from individual names, failing on the first unknown one.
    pub fn individual_set<S: AsRef<str>>(&self, names: impl IntoIterator<Item = S>) -> Result<IndividualSet, KbError> {
        let mut set = IndividualSet::empty(self.num_individuals());
        for name in names {
            let name = name.as_ref();
            set.insert(self.individual_index(name).ok_or_else(|| KbError::UnknownIndividual(name.to_string()))?);
        }
        Ok(set)
    }

    pub fn names_of(&self, set: &IndividualSet) -> Vec<String> {
        set.iter().map(|i| self.individuals[i].to_string()).collect()
    }

    /// Instances of a concept name after subclass closure.
    pub fn concept_members(&self, name: &str) -> Option<&IndividualSet> {
        self.concept_members.get(name)
    }

    pub fn role_pairs(&self, role: &str) -> Option<&[(usize, usize)]> {
        self.role_pairs.get(role).map(Vec::as_slice)
    }

    pub fn successors(&self, role: &str, individual: usize) -> &[u32] {
        self.successors.get(role).map_or(&[], |s| s[individual].as_slice())
    }

    pub fn subclass_axioms(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.subclass_axioms.iter().map(|(a, b)| (&**a, &**b))
    }

    pub fn warnings(&self) -> &[KbWarning] {
        &self.warnings
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().expect("retrieval cache poisoned").len()
    }
}
