//! Class expression learning in the description logic ALC.
//!
//! Concepts are searched with a length-based refinement operator, guided
//! either by the classical CELOE/OCEL heuristics or by a convolutional deep
//! Q-network trained on automatically generated learning problems.

pub mod concept;
pub mod embeddings;
pub mod eval;
pub mod family;
pub mod heuristics;
pub mod kb;
pub mod lpgen;
pub mod qnet;
pub mod refinement;
pub mod search;
pub mod syntax;
pub mod testing;

pub use concept::{Concept, Signature, UnknownName};
pub use heuristics::{HeuristicParams, LearningProblem, QualityMetric};
pub use kb::{load_kb, IndividualSet, KnowledgeBase};
pub use syntax::{parse_concept, render_concept};
