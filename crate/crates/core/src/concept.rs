//! ALC class expressions and the vocabulary they are built from.
//!
//! A [`Concept`] is an immutable tree; children are reference counted so that
//! refinements can share the unchanged parts of their parent expression.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// An ALC class expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    Top,
    Bottom,
    Named(Arc<str>),
    Not(Arc<Concept>),
    And(Arc<Concept>, Arc<Concept>),
    Or(Arc<Concept>, Arc<Concept>),
    Exists(Arc<str>, Arc<Concept>),
    Forall(Arc<str>, Arc<Concept>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

impl Concept {
    pub fn named(name: impl Into<Arc<str>>) -> Self {
        Concept::Named(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Concept) -> Self {
        Concept::Not(Arc::new(c))
    }

    pub fn and(left: Concept, right: Concept) -> Self {
        Concept::And(Arc::new(left), Arc::new(right))
    }

    pub fn or(left: Concept, right: Concept) -> Self {
        Concept::Or(Arc::new(left), Arc::new(right))
    }

    pub fn exists(role: impl Into<Arc<str>>, filler: Concept) -> Self {
        Concept::Exists(role.into(), Arc::new(filler))
    }

    pub fn forall(role: impl Into<Arc<str>>, filler: Concept) -> Self {
        Concept::Forall(role.into(), Arc::new(filler))
    }

    /// Syntactic length: atoms count 1, each binary connective 1, negation 1,
    /// and a role restriction 2 (quantifier plus role).
    pub fn length(&self) -> usize {
        match self {
            Concept::Top | Concept::Bottom | Concept::Named(_) => 1,
            Concept::Not(x) => x.length() + 1,
            Concept::And(x, y) | Concept::Or(x, y) => x.length() + y.length() + 1,
            Concept::Exists(_, x) | Concept::Forall(_, x) => x.length() + 2,
        }
    }

    /// Height of the constructor tree; atoms have height 0.
    pub fn height(&self) -> usize {
        match self {
            Concept::Top | Concept::Bottom | Concept::Named(_) => 0,
            Concept::Not(x) | Concept::Exists(_, x) | Concept::Forall(_, x) => x.height() + 1,
            Concept::And(x, y) | Concept::Or(x, y) => x.height().max(y.height()) + 1,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Concept::Top | Concept::Bottom | Concept::Named(_))
    }

    /// Key identifying the concept up to commutativity of `and`/`or`.
    ///
    /// Operands of a binary connective are ordered by their own keys; nothing
    /// else is normalised, so `Forall(r, Top)` and `Top` keep distinct keys.
    pub fn canonical_key(&self) -> String {
        let mut out = String::new();
        self.write_key(&mut out);
        out
    }

    fn write_key(&self, out: &mut String) {
        match self {
            Concept::Top => out.push('T'),
            Concept::Bottom => out.push('F'),
            Concept::Named(name) => push_name(out, name),
            Concept::Not(x) => {
                out.push_str("(!");
                x.write_key(out);
                out.push(')');
            }
            Concept::And(x, y) | Concept::Or(x, y) => {
                let (mut a, mut b) = (x.canonical_key(), y.canonical_key());
                if b < a {
                    std::mem::swap(&mut a, &mut b);
                }
                out.push_str(if matches!(self, Concept::And(..)) { "(&" } else { "(|" });
                out.push_str(&a);
                out.push(' ');
                out.push_str(&b);
                out.push(')');
            }
            Concept::Exists(role, x) | Concept::Forall(role, x) => {
                out.push_str(if matches!(self, Concept::Exists(..)) { "(E" } else { "(A" });
                push_name(out, role);
                out.push(' ');
                x.write_key(out);
                out.push(')');
            }
        }
    }

    /// Calls `f` on every concept name and role name, in tree order.
    pub fn for_each_name<'a>(&'a self, f: &mut impl FnMut(NameRef<'a>)) {
        match self {
            Concept::Top | Concept::Bottom => {}
            Concept::Named(name) => f(NameRef::Concept(name)),
            Concept::Not(x) => x.for_each_name(f),
            Concept::And(x, y) | Concept::Or(x, y) => {
                x.for_each_name(f);
                y.for_each_name(f);
            }
            Concept::Exists(role, x) | Concept::Forall(role, x) => {
                f(NameRef::Role(role));
                x.for_each_name(f);
            }
        }
    }
}

// Length-prefixed so that arbitrary identifiers cannot collide with the
// key's own punctuation.
fn push_name(out: &mut String, name: &str) {
    out.push_str(&name.len().to_string());
    out.push(':');
    out.push_str(name);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameRef<'a> {
    Concept(&'a str),
    Role(&'a str),
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::render_concept(self))
    }
}

/// Named concepts and roles of a knowledge base, iterated lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    concepts: BTreeSet<Arc<str>>,
    roles: BTreeSet<Arc<str>>,
}

impl Signature {
    pub fn new<C, R>(concepts: C, roles: R) -> Self
    where
        C: IntoIterator,
        C::Item: Into<Arc<str>>,
        R: IntoIterator,
        R::Item: Into<Arc<str>>,
    {
        Signature {
            concepts: concepts.into_iter().map(Into::into).collect(),
            roles: roles.into_iter().map(Into::into).collect(),
        }
    }

    pub fn concept_names(&self) -> impl Iterator<Item = &Arc<str>> + '_ {
        self.concepts.iter()
    }

    pub fn role_names(&self) -> impl Iterator<Item = &Arc<str>> + '_ {
        self.roles.iter()
    }

    pub fn num_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn num_roles(&self) -> usize {
        self.roles.len()
    }

    pub fn has_concept(&self, name: &str) -> bool {
        self.concepts.contains(name)
    }

    pub fn has_role(&self, name: &str) -> bool {
        self.roles.contains(name)
    }

    /// N_C together with Top and Bottom, in emission order.
    pub fn atoms(&self) -> Vec<Concept> {
        let mut atoms: Vec<Concept> = self.concepts.iter().cloned().map(Concept::Named).collect();
        atoms.push(Concept::Top);
        atoms.push(Concept::Bottom);
        atoms
    }

    /// Checks that every name used by `c` belongs to this signature.
    pub fn check(&self, c: &Concept) -> Result<(), UnknownName> {
        let mut missing = None;
        c.for_each_name(&mut |name| {
            if missing.is_some() {
                return;
            }
            match name {
                NameRef::Concept(n) if !self.has_concept(n) => missing = Some(n.to_string()),
                NameRef::Role(n) if !self.has_role(n) => missing = Some(n.to_string()),
                _ => {}
            }
        });
        missing.map_or(Ok(()), |n| Err(UnknownName(n)))
    }
}
