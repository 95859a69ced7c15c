//! The length-based refinement operator.
//!
//! For any concept `C` the operator yields `∃r.C`, `∀r.C` for every role,
//! `C ⊓ ⊤`, `C ⊔ ⊤`, `¬C` and `C` itself. On top of that, a compound concept
//! has one operand refined at a time (`ρ(X) ⊓ Y` and `X ⊓ ρ(Y)`), and `⊤`
//! additionally refines to every named concept, `⊤` and `⊥`. Every refinement
//! is at least as long as its input.

use std::collections::HashSet;

use crate::concept::{Concept, Signature, UnknownName};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefinementConfig {
    pub max_length: usize,
    pub dedup: bool,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig { max_length: 12, dedup: true }
    }
}

/// All refinements of `c`, without a length cap.
pub fn refine(sig: &Signature, c: &Concept) -> Result<Vec<Concept>, UnknownName> {
    sig.check(c)?;
    Ok(refine_within(sig, c, usize::MAX))
}

/// Refinements of `c` no longer than `cfg.max_length`, optionally collapsed
/// modulo commutativity.
pub fn refine_bounded(sig: &Signature, c: &Concept, cfg: &RefinementConfig) -> Result<Vec<Concept>, UnknownName> {
    sig.check(c)?;
    let refinements = refine_within(sig, c, cfg.max_length);
    Ok(if cfg.dedup { dedup_by_key(refinements) } else { refinements })
}

/// Keeps the first concept of every canonical-key class.
pub fn dedup_by_key(concepts: Vec<Concept>) -> Vec<Concept> {
    let mut seen = HashSet::new();
    concepts.into_iter().filter(|c| seen.insert(c.canonical_key())).collect()
}

/// Upper bound on the number of refinements the operator can produce for `c`.
pub fn refinement_bound(sig: &Signature, c: &Concept) -> usize {
    let universal = 2 * sig.num_roles() + 4;
    let structural = match c {
        Concept::Top => sig.num_concepts() + 2,
        Concept::Bottom | Concept::Named(_) => 0,
        Concept::Not(x) | Concept::Exists(_, x) | Concept::Forall(_, x) => refinement_bound(sig, x),
        Concept::And(x, y) | Concept::Or(x, y) => refinement_bound(sig, x) + refinement_bound(sig, y),
    };
    universal + structural
}

/// Refinements of length at most `budget`, structurally deduplicated, in
/// emission order: universal forms (roles lexicographic), structural
/// refinements, then atoms when `c` is `⊤`.
pub(crate) fn refine_within(sig: &Signature, c: &Concept, budget: usize) -> Vec<Concept> {
    let len = c.length();
    if len > budget {
        return Vec::new();
    }
    let mut out = Vec::new();
    let fits = |extra: usize| len.saturating_add(extra) <= budget;

    for role in sig.role_names() {
        if fits(2) {
            out.push(Concept::Exists(role.clone(), c.clone().into()));
            out.push(Concept::Forall(role.clone(), c.clone().into()));
        }
    }
    if fits(2) {
        out.push(Concept::and(c.clone(), Concept::Top));
        out.push(Concept::or(c.clone(), Concept::Top));
    }
    if fits(1) {
        out.push(Concept::not(c.clone()));
    }
    out.push(c.clone());

    match c {
        Concept::Top => out.extend(sig.atoms()),
        Concept::Bottom | Concept::Named(_) => {}
        Concept::Not(x) => {
            out.extend(refine_within(sig, x, budget - 1).into_iter().map(Concept::not));
        }
        Concept::Exists(role, x) => {
            let inner = refine_within(sig, x, budget - 2);
            out.extend(inner.into_iter().map(|x| Concept::exists(role.clone(), x)));
        }
        Concept::Forall(role, x) => {
            let inner = refine_within(sig, x, budget - 2);
            out.extend(inner.into_iter().map(|x| Concept::forall(role.clone(), x)));
        }
        Concept::And(x, y) | Concept::Or(x, y) => {
            let conj = matches!(c, Concept::And(..));
            let build = |l: Concept, r: Concept| {
                if conj {
                    Concept::and(l, r)
                } else {
                    Concept::or(l, r)
                }
            };
            for x2 in refine_within(sig, x, budget - y.length() - 1) {
                out.push(build(x2, (**y).clone()));
            }
            for y2 in refine_within(sig, y, budget - x.length() - 1) {
                out.push(build((**x).clone(), y2));
            }
        }
    }

    let mut seen = HashSet::with_capacity(out.len());
    out.retain(|d| seen.insert(d.clone()));
    out
}

/// Whether `target` (modulo commutativity) is produced from `⊤` within
/// `max_steps` breadth-first refinement levels.
///
/// Candidates longer than `length(target) + 2` are pruned; the slack admits
/// the `X ⊓ ⊤` detour that conjunctions and disjunctions are built through.
pub fn reachable(sig: &Signature, target: &Concept, max_steps: usize) -> bool {
    let goal = target.canonical_key();
    let bound = target.length() + 2;
    let mut seen = HashSet::new();
    seen.insert(Concept::Top.canonical_key());
    if goal == Concept::Top.canonical_key() {
        return true;
    }
    let mut frontier = vec![Concept::Top];
    for _ in 0..max_steps {
        let mut next = Vec::new();
        for c in &frontier {
            for d in refine_within(sig, c, bound) {
                let key = d.canonical_key();
                if key == goal {
                    return true;
                }
                if seen.insert(key) {
                    next.push(d);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    false
}

/// Canonical keys of every concept of length at most `max_length` produced from
/// `⊤` within `max_steps` levels, mapped to the level at which each first
/// appears.
pub fn reachable_keys(
    sig: &Signature,
    max_length: usize,
    max_steps: usize,
) -> std::collections::HashMap<String, usize> {
    let mut depth = std::collections::HashMap::new();
    depth.insert(Concept::Top.canonical_key(), 0);
    let mut frontier = vec![Concept::Top];
    for level in 1..=max_steps {
        let mut next = Vec::new();
        for c in &frontier {
            for d in refine_within(sig, c, max_length) {
                let key = d.canonical_key();
                if let std::collections::hash_map::Entry::Vacant(slot) = depth.entry(key) {
                    slot.insert(level);
                    next.push(d);
                }
            }
        }
        frontier = next;
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_concept;

    fn sig() -> Signature {
        Signature::new(["A", "B"], ["r"])
    }

    fn p(s: &str) -> Concept {
        parse_concept(s).unwrap()
    }

    fn rendered(cs: &[Concept]) -> Vec<String> {
        cs.iter().map(|c| c.to_string()).collect()
    }

    #[test]
    fn top_refines_to_atoms() {
        let out = refine(&sig(), &Concept::Top).unwrap();
        for atom in [p("A"), p("B"), Concept::Top, Concept::Bottom] {
            assert!(out.contains(&atom), "{atom} missing");
        }
    }

    #[test]
    fn atom_refinement_is_exactly_the_universal_case() {
        let sig = Signature::new(["A"], ["r"]);
        let out = refine(&sig, &p("A")).unwrap();
        assert_eq!(rendered(&out), vec!["r some A", "r only A", "A and Thing", "A or Thing", "not A", "A"]);
    }

    #[test]
    fn reflexive() {
        for text in ["A", "Thing", "Nothing", "not A", "A and r some B", "r only (A or B)"] {
            let c = p(text);
            assert!(refine(&sig(), &c).unwrap().contains(&c), "{text}");
        }
    }

    #[test]
    fn bounded_refinements() {
        let one = RefinementConfig { max_length: 1, dedup: true };
        assert_eq!(rendered(&refine_bounded(&sig(), &Concept::Top, &one).unwrap()), vec!["Thing", "A", "B", "Nothing"]);
        let two = RefinementConfig { max_length: 2, dedup: true };
        assert_eq!(rendered(&refine_bounded(&sig(), &p("A"), &two).unwrap()), vec!["not A", "A"]);
    }

    #[test]
    fn dedup_collapses_commuted_duplicates() {
        let c = p("Thing and Thing");
        let raw = refine_bounded(&sig(), &c, &RefinementConfig { max_length: 3, dedup: false }).unwrap();
        assert!(raw.contains(&p("A and Thing")) && raw.contains(&p("Thing and A")));
        let deduped = refine_bounded(&sig(), &c, &RefinementConfig { max_length: 3, dedup: true }).unwrap();
        assert!(deduped.contains(&p("A and Thing")));
        assert!(!deduped.contains(&p("Thing and A")));
    }

    #[test]
    fn bounded_equals_filtered_unbounded() {
        for text in ["Thing", "A and Thing", "r some (Thing or B)", "not (A and r only Thing)"] {
            let c = p(text);
            let all = refine(&sig(), &c).unwrap();
            for max_length in 1..10 {
                let cfg = RefinementConfig { max_length, dedup: false };
                let expected: Vec<_> = all.iter().filter(|d| d.length() <= max_length).cloned().collect();
                assert_eq!(refine_bounded(&sig(), &c, &cfg).unwrap(), expected, "{text} at {max_length}");
            }
        }
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(refine(&sig(), &p("C")).is_err());
        assert!(refine(&sig(), &p("s some A")).is_err());
    }

    #[test]
    fn reachability_examples() {
        assert!(reachable(&sig(), &p("A"), 1));
        assert!(reachable(&sig(), &p("A and B"), 3));
        assert!(!reachable(&sig(), &p("A and B"), 2));
        assert!(reachable(&sig(), &p("r some not A"), 3));
        assert!(reachable(&sig(), &Concept::Top, 0));
    }

    #[test]
    fn bound_holds_on_examples() {
        for text in ["Thing", "A", "A or B", "r some (A and not B)", "Thing and Thing"] {
            let c = p(text);
            assert!(refine(&sig(), &c).unwrap().len() <= refinement_bound(&sig(), &c));
        }
    }
}
