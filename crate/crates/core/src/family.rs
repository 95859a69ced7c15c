//! A synthetic family knowledge base.
//!
//! Founding couples have children over several generations; most children
//! marry someone from outside the family and raise children of their own.
//! Individuals are typed `Male` or `Female`, both subclasses of `Person`, and
//! related by `hasChild`, `hasSibling` and `married` (the latter two in both
//! directions).

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kb::{parse_kb, KnowledgeBase};

pub const DEFAULT_SEED: u64 = 1;

/// The family KB shipped with the crate, identical to
/// `family_kb_text(DEFAULT_SEED)`.
pub const BUNDLED: &str = include_str!("../data/family.kb");

pub fn bundled_family_kb() -> KnowledgeBase {
    parse_kb(BUNDLED).expect("bundled family knowledge base is well-formed")
}

struct Person {
    name: String,
    male: bool,
}

struct Family {
    people: Vec<Person>,
    has_child: Vec<(usize, usize)>,
    siblings: Vec<(usize, usize)>,
    married: Vec<(usize, usize)>,
}

impl Family {
    fn add(&mut self, male: bool) -> usize {
        let name = format!("{}{}", if male { "m" } else { "f" }, self.people.len());
        self.people.push(Person { name, male });
        self.people.len() - 1
    }
}

/// Renders a family of roughly two hundred people as knowledge base text.
pub fn family_kb_text(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fam = Family { people: Vec::new(), has_child: Vec::new(), siblings: Vec::new(), married: Vec::new() };

    let mut couples: Vec<(usize, usize)> = (0..9)
        .map(|_| {
            let husband = fam.add(true);
            let wife = fam.add(false);
            fam.married.push((husband, wife));
            (husband, wife)
        })
        .collect();

    for generation in 0..3 {
        let mut next = Vec::new();
        for &(father, mother) in &couples {
            let count = rng.random_range(1..=4);
            let children: Vec<usize> = (0..count).map(|_| fam.add(rng.random_bool(0.5))).collect();
            for &child in &children {
                fam.has_child.push((father, child));
                fam.has_child.push((mother, child));
                for &other in &children {
                    if other != child {
                        fam.siblings.push((child, other));
                    }
                }
            }
            if generation == 2 {
                continue;
            }
            for &child in &children {
                if rng.random_bool(0.75) {
                    let male = fam.people[child].male;
                    let spouse = fam.add(!male);
                    fam.married.push((child, spouse));
                    next.push(if male { (child, spouse) } else { (spouse, child) });
                }
            }
        }
        couples = next;
    }

    let mut text = String::from("# synthetic family\nsubclass Male Person\nsubclass Female Person\n");
    for p in &fam.people {
        writeln!(text, "type {} {}", p.name, if p.male { "Male" } else { "Female" }).unwrap();
    }
    let name = |i: usize| fam.people[i].name.as_str();
    for &(a, b) in &fam.married {
        writeln!(text, "role {} married {}", name(a), name(b)).unwrap();
        writeln!(text, "role {} married {}", name(b), name(a)).unwrap();
    }
    for &(parent, child) in &fam.has_child {
        writeln!(text, "role {} hasChild {}", name(parent), name(child)).unwrap();
    }
    for &(a, b) in &fam.siblings {
        writeln!(text, "role {} hasSibling {}", name(a), name(b)).unwrap();
    }
    text
}

pub fn family_kb(seed: u64) -> KnowledgeBase {
    parse_kb(&family_kb_text(seed)).expect("generated family knowledge base is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_concept;

    #[test]
    fn bundled_file_matches_generator() {
        assert_eq!(BUNDLED, family_kb_text(DEFAULT_SEED));
    }

    #[test]
    fn shape() {
        let kb = bundled_family_kb();
        assert!((150..=260).contains(&kb.num_individuals()), "{}", kb.num_individuals());
        let person = kb.retrieve(&parse_concept("Person").unwrap()).unwrap();
        assert_eq!(person.len(), kb.num_individuals());
        let both = kb.retrieve(&parse_concept("Male and Female").unwrap()).unwrap();
        assert!(both.is_empty());
        let roles: Vec<&str> = kb.signature().role_names().map(|r| &**r).collect();
        assert_eq!(roles, ["hasChild", "hasSibling", "married"]);
    }
}
