//! Seeded generators of random concepts and knowledge bases, for tests and
//! benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::concept::{Concept, Signature};
use crate::kb::KnowledgeBase;

/// A concept over `sig` of exactly `length` (which must be positive).
pub fn concept_of_length(rng: &mut impl Rng, sig: &Signature, length: usize) -> Concept {
    assert!(length > 0, "concept length must be positive");
    let concepts: Vec<_> = sig.concept_names().cloned().collect();
    let roles: Vec<_> = sig.role_names().cloned().collect();
    let role = |rng: &mut dyn rand::RngCore| roles[rng.random_range(0..roles.len())].clone();
    match length {
        1 => match rng.random_range(0..concepts.len() + 2) {
            0 => Concept::Top,
            1 => Concept::Bottom,
            i => Concept::Named(concepts[i - 2].clone()),
        },
        2 => Concept::not(concept_of_length(rng, sig, 1)),
        _ => {
            let quantifiers = if roles.is_empty() { 0 } else { 2 };
            match rng.random_range(0..3 + quantifiers) {
                0 => Concept::not(concept_of_length(rng, sig, length - 1)),
                k @ (1 | 2) => {
                    let left = rng.random_range(1..length - 1);
                    let l = concept_of_length(rng, sig, left);
                    let r = concept_of_length(rng, sig, length - 1 - left);
                    if k == 1 {
                        Concept::and(l, r)
                    } else {
                        Concept::or(l, r)
                    }
                }
                3 => Concept::exists(role(rng), concept_of_length(rng, sig, length - 2)),
                _ => Concept::forall(role(rng), concept_of_length(rng, sig, length - 2)),
            }
        }
    }
}

/// `count` concepts with lengths drawn uniformly from `1..=max_length`.
pub fn random_concepts(sig: &Signature, count: usize, max_length: usize, seed: u64) -> Vec<Concept> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let length = rng.random_range(1..=max_length);
            concept_of_length(&mut rng, sig, length)
        })
        .collect()
}

/// A knowledge base with individuals `i0..`, concepts `C0..` and roles `r0..`.
/// Memberships and role edges are drawn independently; subclass axioms only
/// point from lower to higher concept indices, so there are no cycles.
pub fn random_kb(seed: u64, individuals: usize, concepts: usize, roles: usize) -> KnowledgeBase {
    assert!(individuals > 0 && concepts > 0, "need at least one individual and one concept");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = KnowledgeBase::builder();
    let concept_names: Vec<String> = (0..concepts).map(|c| format!("C{c}")).collect();
    let role_names: Vec<String> = (0..roles).map(|r| format!("r{r}")).collect();
    let individual_names: Vec<String> = (0..individuals).map(|i| format!("i{i}")).collect();
    for name in &concept_names {
        b.declare_concept(name);
    }
    for name in &role_names {
        b.declare_role(name);
    }
    let edge_probability = (2.0 / individuals as f64).min(0.5);
    for name in &individual_names {
        b.individual(name);
        for c in &concept_names {
            if rng.random_bool(0.35) {
                b.add_type(name, c);
            }
        }
        for r in &role_names {
            for object in &individual_names {
                if rng.random_bool(edge_probability) {
                    b.add_role(name, r, object);
                }
            }
        }
    }
    for sub in 0..concepts {
        for sup in sub + 1..concepts {
            if rng.random_bool(0.1) {
                b.add_subclass(&concept_names[sub], &concept_names[sup]);
            }
        }
    }
    b.build().expect("random knowledge base is well-formed")
}
