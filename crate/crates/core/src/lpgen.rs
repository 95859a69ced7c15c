//! Learning problems generated from random refinement walks.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::{Concept, UnknownName};
use crate::heuristics::{LearningProblem, ProblemError};
use crate::kb::{IndividualSet, KnowledgeBase};
use crate::refinement::{refine_bounded, RefinementConfig};
use crate::syntax::{parse_concept, ParseError};

#[derive(Debug, Error)]
pub enum LpGenError {
    #[error("no goal concept survived the length and size filters")]
    NoConceptsFound,
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    UnknownName(#[from] UnknownName),
}

/// Retrieval-size window as fractions of the number of individuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeConstraint {
    pub min_fraction: f64,
    pub max_fraction: f64,
}

impl Default for SizeConstraint {
    fn default() -> Self {
        SizeConstraint { min_fraction: 0.1, max_fraction: 0.3 }
    }
}

impl SizeConstraint {
    pub fn admits(&self, size: usize, total: usize) -> bool {
        let size = size as f64;
        let total = total as f64;
        self.min_fraction * total <= size && size <= self.max_fraction * total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpGenConfig {
    /// States kept per walk.
    pub n: usize,
    /// Number of independent walks.
    pub m: usize,
    /// Balanced resamples per concept.
    pub kappa: usize,
    pub max_length: usize,
    pub size_constraint: Option<SizeConstraint>,
    pub seed: u64,
}

impl Default for LpGenConfig {
    fn default() -> Self {
        LpGenConfig { n: 20, m: 5, kappa: 2, max_length: 5, size_constraint: None, seed: 0 }
    }
}

impl LpGenConfig {
    pub fn validate(&self) -> Result<(), LpGenError> {
        if self.n == 0 || self.m == 0 || self.kappa == 0 || self.max_length == 0 {
            return Err(LpGenError::InvalidConfig("n, m, kappa and max length must be positive".into()));
        }
        if let Some(s) = self.size_constraint {
            if !(0.0 < s.min_fraction && s.min_fraction < s.max_fraction && s.max_fraction < 1.0) {
                return Err(LpGenError::InvalidConfig(format!(
                    "size fractions must satisfy 0 < min < max < 1, got {} and {}",
                    s.min_fraction, s.max_fraction
                )));
            }
        }
        Ok(())
    }
}

/// Goal concepts collected by `m` random refinement walks from `⊤`.
///
/// A walk repeatedly moves to a uniformly chosen refinement (other than the
/// current concept) of length at most `max_length`, storing every new state
/// until `n` are stored. A walk that gets stuck restarts at `⊤`; each walk is
/// also capped at `20 n` moves.
pub fn generate_goal_concepts(kb: &KnowledgeBase, cfg: &LpGenConfig) -> Result<Vec<Concept>, LpGenError> {
    cfg.validate()?;
    let sig = kb.signature();
    let rcfg = RefinementConfig { max_length: cfg.max_length, dedup: true };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = kb.num_individuals();
    let mut seen = HashSet::new();
    let mut out = Vec::new();

    for _ in 0..cfg.m {
        let mut current = Concept::Top;
        let mut stored = HashSet::new();
        let mut moves = 0;
        while stored.len() < cfg.n && moves < 20 * cfg.n {
            moves += 1;
            let key = current.canonical_key();
            let mut options = refine_bounded(sig, &current, &rcfg)?;
            options.retain(|c| c.canonical_key() != key);
            if options.is_empty() {
                current = Concept::Top;
                continue;
            }
            let next = options.swap_remove(rng.random_range(0..options.len()));
            let next_key = next.canonical_key();
            if (1..=cfg.max_length).contains(&next.length()) && stored.insert(next_key.clone()) && seen.insert(next_key)
            {
                let keep = match cfg.size_constraint {
                    Some(s) => s.admits(kb.retrieve(&next)?.len(), total),
                    None => true,
                };
                if keep {
                    out.push(next.clone());
                }
            }
            current = next;
        }
    }

    if out.is_empty() {
        return Err(LpGenError::NoConceptsFound);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct GeneratedProblems {
    pub problems: Vec<LearningProblem>,
    /// Concepts dropped because they retrieve nothing or everything.
    pub skipped: usize,
}

/// `kappa` balanced learning problems per concept: the larger of `R(c)` and
/// its complement is undersampled without replacement to the size of the
/// smaller.
pub fn build_learning_problems(
    kb: &KnowledgeBase,
    concepts: &[Concept],
    cfg: &LpGenConfig,
) -> Result<GeneratedProblems, LpGenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let all = kb.all_individuals();
    let mut problems = Vec::new();
    let mut skipped = 0;
    for c in concepts {
        let retrieved = kb.retrieve(c)?;
        let rest = all.difference(&retrieved);
        if retrieved.is_empty() || rest.is_empty() {
            skipped += 1;
            continue;
        }
        let size = retrieved.len().min(rest.len());
        for _ in 0..cfg.kappa {
            let positives = undersample(&retrieved, size, &mut rng);
            let negatives = undersample(&rest, size, &mut rng);
            let lp = LearningProblem::new(positives, negatives).expect("balanced sides are disjoint and non-empty");
            problems.push(lp.with_target(c.clone()));
        }
    }
    if skipped > 0 {
        log::info!("skipped {skipped} concept(s) retrieving no or all individuals");
    }
    Ok(GeneratedProblems { problems, skipped })
}

fn undersample(set: &IndividualSet, size: usize, rng: &mut impl Rng) -> IndividualSet {
    if set.len() == size {
        return set.clone();
    }
    let members: Vec<usize> = set.iter().collect();
    let picked = index::sample(rng, members.len(), size).into_iter().map(|i| members[i]);
    IndividualSet::from_indices(set.universe(), picked)
}

/// Splits problems into a training and an evaluation part such that no target
/// concept (modulo commutativity) occurs in both. Targets are taken in order of
/// first appearance; the first `train_targets` distinct targets go to training.
pub fn split_by_target(
    problems: Vec<LearningProblem>,
    train_targets: usize,
) -> (Vec<LearningProblem>, Vec<LearningProblem>) {
    let mut order: Vec<String> = Vec::new();
    let key_of = |lp: &LearningProblem| lp.target().map(Concept::canonical_key).unwrap_or_default();
    for lp in &problems {
        let key = key_of(lp);
        if !order.contains(&key) {
            order.push(key);
        }
    }
    let train_keys: HashSet<&String> = order.iter().take(train_targets).collect();
    problems.into_iter().partition(|lp| train_keys.contains(&key_of(lp)))
}

#[derive(Debug, Error)]
pub enum LpFileError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed learning problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("problem {index}: unknown individual `{name}`")]
    UnknownIndividual { index: usize, name: String },
    #[error("problem {index}: {source}")]
    Problem { index: usize, source: ProblemError },
    #[error("problem {index}: bad target: {source}")]
    Target { index: usize, source: ParseError },
    #[error("problem {index}: {source}")]
    UnknownName { index: usize, source: UnknownName },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRecord {
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl LpRecord {
    pub fn from_problem(kb: &KnowledgeBase, lp: &LearningProblem) -> Self {
        LpRecord {
            positives: kb.names_of(lp.positives()),
            negatives: kb.names_of(lp.negatives()),
            target: lp.target().map(|c| c.to_string()),
        }
    }

    pub fn to_problem(&self, kb: &KnowledgeBase, index: usize) -> Result<LearningProblem, LpFileError> {
        let set = |names: &[String]| -> Result<IndividualSet, LpFileError> {
            let mut set = IndividualSet::empty(kb.num_individuals());
            for name in names {
                let i = kb
                    .individual_index(name)
                    .ok_or_else(|| LpFileError::UnknownIndividual { index, name: name.clone() })?;
                set.insert(i);
            }
            Ok(set)
        };
        let lp = LearningProblem::new(set(&self.positives)?, set(&self.negatives)?)
            .map_err(|source| LpFileError::Problem { index, source })?;
        Ok(match &self.target {
            Some(text) => {
                let target = parse_concept(text).map_err(|source| LpFileError::Target { index, source })?;
                kb.signature().check(&target).map_err(|source| LpFileError::UnknownName { index, source })?;
                lp.with_target(target)
            }
            None => lp,
        })
    }
}

pub fn problems_to_json(kb: &KnowledgeBase, problems: &[LearningProblem]) -> String {
    let records: Vec<LpRecord> = problems.iter().map(|lp| LpRecord::from_problem(kb, lp)).collect();
    let mut text = serde_json::to_string_pretty(&records).expect("records serialise");
    text.push('\n');
    text
}

pub fn parse_problems(text: &str, kb: &KnowledgeBase) -> Result<Vec<LearningProblem>, LpFileError> {
    let records: Vec<LpRecord> = serde_json::from_str(text)?;
    records.iter().enumerate().map(|(i, r)| r.to_problem(kb, i)).collect()
}

pub fn load_problems(path: impl AsRef<Path>, kb: &KnowledgeBase) -> Result<Vec<LearningProblem>, LpFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LpFileError::Io { path: path.to_path_buf(), source })?;
    parse_problems(&text, kb)
}

pub fn save_problems(
    path: impl AsRef<Path>,
    kb: &KnowledgeBase,
    problems: &[LearningProblem],
) -> Result<(), LpFileError> {
    let path = path.as_ref();
    let io = |source| LpFileError::Io { path: path.to_path_buf(), source };
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(problems_to_json(kb, problems).as_bytes()).map_err(io)
}
