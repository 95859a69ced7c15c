//! Individual embeddings and the averaged state representation fed to the
//! Q-network.

use std::hash::Hasher;
use std::io::Write;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::heuristics::LearningProblem;
use crate::kb::{IndividualSet, KnowledgeBase};

pub const DEFAULT_DIMENSION: usize = 32;
pub const DEFAULT_NOISE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("no embedding for individual `{0}`")]
    MissingIndividual(String),
    #[error("embedding dimension must be at least 2")]
    InvalidDimension,
}

/// One `dimension`-length vector per knowledge-base individual, indexed like
/// the knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: Vec<f64>,
}

impl EmbeddingTable {
    pub fn from_rows(dimension: usize, rows: Vec<Vec<f64>>) -> Result<Self, EmbeddingError> {
        let mut vectors = Vec::with_capacity(rows.len() * dimension);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dimension {
                return Err(EmbeddingError::DimensionMismatch { line: i + 1, expected: dimension, found: row.len() });
            }
            vectors.extend(row);
        }
        Ok(EmbeddingTable { dimension, vectors })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, individual: usize) -> &[f64] {
        &self.vectors[individual * self.dimension..(individual + 1) * self.dimension]
    }

    /// Coordinate-wise mean of the members' vectors; zero for an empty set.
    pub fn mean(&self, set: &IndividualSet) -> Vec<f64> {
        let mut mean = vec![0.0; self.dimension];
        let mut count = 0usize;
        for i in set.iter() {
            for (m, v) in mean.iter_mut().zip(self.vector(i)) {
                *m += v;
            }
            count += 1;
        }
        if count > 0 {
            let count = count as f64;
            mean.iter_mut().for_each(|m| *m /= count);
        }
        mean
    }

    /// Writes `individual,v1,...,vd` lines in knowledge-base order.
    pub fn write_csv(&self, kb: &KnowledgeBase, out: &mut impl Write) -> std::io::Result<()> {
        for (i, name) in kb.individuals().iter().enumerate() {
            write!(out, "{name}")?;
            for v in self.vector(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Reads a header-free CSV of `individual,v1,...,vd` rows. Rows for
/// individuals unknown to `kb` are ignored.
pub fn load_embeddings(path: impl AsRef<Path>, kb: &KnowledgeBase) -> Result<EmbeddingTable, EmbeddingError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| EmbeddingError::Io { path: path.to_path_buf(), source })?;
    read_embeddings(file, kb)
}

pub fn read_embeddings(reader: impl std::io::Read, kb: &KnowledgeBase) -> Result<EmbeddingTable, EmbeddingError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; kb.num_individuals()];
    let mut dimension = None;
    for (i, record) in csv.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| EmbeddingError::Parse { line, message: e.to_string() })?;
        let Some(name) = record.get(0) else { continue };
        let values = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| EmbeddingError::Parse { line, message: format!("`{v}` is not a finite number") })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let expected = *dimension.get_or_insert(values.len());
        if values.len() != expected {
            return Err(EmbeddingError::DimensionMismatch { line, expected, found: values.len() });
        }
        if expected < 1 {
            return Err(EmbeddingError::Parse { line, message: "row has no components".into() });
        }
        match kb.individual_index(name) {
            Some(index) => rows[index] = Some(values),
            None => log::debug!("line {line}: embedding for unknown individual `{name}` ignored"),
        }
    }
    let dimension = dimension.ok_or_else(|| EmbeddingError::MissingIndividual(kb.individual_name(0).to_string()))?;
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.ok_or_else(|| EmbeddingError::MissingIndividual(kb.individual_name(i).to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    EmbeddingTable::from_rows(dimension, rows)
}

fn feature_slot(tag: &str, name: &str, width: usize) -> (usize, f64) {
    let mut hasher = FnvHasher::default();
    hasher.write(tag.as_bytes());
    hasher.write(&[0]);
    hasher.write(name.as_bytes());
    let h = hasher.finish();
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    ((h % width as u64) as usize, sign)
}

/// Deterministic embeddings built from each individual's assertions.
///
/// The first half of a vector hashes the individual's concept memberships,
/// the second half its per-role out- and in-degrees (log-scaled) plus a
/// constant bias. Seeded Gaussian noise of scale `noise` is added before the
/// vector is normalised to unit length.
pub fn generate_embeddings(
    kb: &KnowledgeBase,
    dimension: usize,
    seed: u64,
    noise: f64,
) -> Result<EmbeddingTable, EmbeddingError> {
    if dimension < 2 {
        return Err(EmbeddingError::InvalidDimension);
    }
    let n = kb.num_individuals();
    let concept_width = dimension / 2;
    let role_width = dimension - concept_width;
    let mut features = vec![0.0; n * dimension];

    for name in kb.signature().concept_names() {
        let (slot, sign) = feature_slot("concept", name, concept_width);
        for i in kb.concept_members(name).into_iter().flat_map(|s| s.iter()) {
            features[i * dimension + slot] += sign;
        }
    }
    for role in kb.signature().role_names() {
        let mut out_degree = vec![0usize; n];
        let mut in_degree = vec![0usize; n];
        for &(s, o) in kb.role_pairs(role).unwrap_or_default() {
            out_degree[s] += 1;
            in_degree[o] += 1;
        }
        let (out_slot, out_sign) = feature_slot("out", role, role_width);
        let (in_slot, in_sign) = feature_slot("in", role, role_width);
        for i in 0..n {
            let row = &mut features[i * dimension + concept_width..(i + 1) * dimension];
            row[out_slot] += out_sign * (out_degree[i] as f64).ln_1p();
            row[in_slot] += in_sign * (in_degree[i] as f64).ln_1p();
        }
    }
    let (bias_slot, _) = feature_slot("bias", "", role_width);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.abs()).expect("finite noise scale");
    for row in features.chunks_mut(dimension) {
        row[concept_width + bias_slot] += 1.0;
        if noise != 0.0 {
            for v in row.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(EmbeddingTable { dimension, vectors: features })
}

/// The 4×d state: mean embeddings of the parent's instances, the child's
/// instances, the positives and the negatives, in that row order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    dimension: usize,
    data: Vec<f64>,
}

impl StateMatrix {
    pub const ROWS: usize = 4;

    pub fn from_rows(rows: [&[f64]; 4]) -> Self {
        let dimension = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == dimension), "state rows differ in length");
        StateMatrix { dimension, data: rows.concat() }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dimension..(r + 1) * self.dimension]
    }

    /// Row-major 4×d values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

pub fn state_matrix(
    table: &EmbeddingTable,
    retrieved_parent: &IndividualSet,
    retrieved_child: &IndividualSet,
    lp: &LearningProblem,
) -> StateMatrix {
    let parent = table.mean(retrieved_parent);
    let child = table.mean(retrieved_child);
    let pos = table.mean(lp.positives());
    let neg = table.mean(lp.negatives());
    StateMatrix::from_rows([&parent, &child, &pos, &neg])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_kb;

    fn kb() -> KnowledgeBase {
        parse_kb("type a Male\ntype b Female\ntype d Male\nrole a hasChild c\nrole b hasChild c\nrole d hasChild e\n")
            .unwrap()
    }

    fn table3() -> (KnowledgeBase, EmbeddingTable) {
        let kb = parse_kb("type a A\ntype b A\ntype c B\n").unwrap();
        let csv = "a,1,2,3,4\nb,0,0,0,0\nc,-1,0.5,2,1e-3\n";
        let table = read_embeddings(csv.as_bytes(), &kb).unwrap();
        (kb, table)
    }

    #[test]
    fn loads_well_formed_csv() {
        let (_, table) = table3();
        assert_eq!(table.dimension(), 4);
        assert_eq!(table.len(), 3);
        assert_eq!(table.vector(2), &[-1.0, 0.5, 2.0, 1e-3]);
    }

    #[test]
    fn missing_individual_and_dimension_mismatch() {
        let kb = parse_kb("type a A\ntype b A\ntype c B\n").unwrap();
        let err = read_embeddings("a,1,2,3,4\nb,1,2,3,4\n".as_bytes(), &kb).unwrap_err();
        assert!(matches!(err, EmbeddingError::MissingIndividual(ref n) if n == "c"));
        let err = read_embeddings("a,1,2,3,4\nb,1,2,3,4,5\nc,1,2,3,4\n".as_bytes(), &kb).unwrap_err();
        assert!(matches!(err, EmbeddingError::DimensionMismatch { line: 2, expected: 4, found: 5 }));
        let err = read_embeddings("a,1,x,3,4\n".as_bytes(), &kb).unwrap_err();
        assert!(matches!(err, EmbeddingError::Parse { line: 1, .. }));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let kb = kb();
        let table = generate_embeddings(&kb, 8, 5, DEFAULT_NOISE).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&kb, &mut buf).unwrap();
        assert_eq!(read_embeddings(buf.as_slice(), &kb).unwrap(), table);
    }

    #[test]
    fn generation_is_deterministic_and_normalised() {
        let kb = kb();
        let a = generate_embeddings(&kb, 16, 9, DEFAULT_NOISE).unwrap();
        assert_eq!(a, generate_embeddings(&kb, 16, 9, DEFAULT_NOISE).unwrap());
        assert_ne!(a, generate_embeddings(&kb, 16, 10, DEFAULT_NOISE).unwrap());
        for i in 0..kb.num_individuals() {
            let norm = a.vector(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((0.5..=2.0).contains(&norm));
        }
        assert!(generate_embeddings(&kb, 1, 0, 0.0).is_err());
    }

    #[test]
    fn identical_profiles_get_identical_vectors_without_noise() {
        let kb = parse_kb("type a Male\ntype b Male\nrole a r x\nrole b r y\n").unwrap();
        let table = generate_embeddings(&kb, 8, 1, 0.0).unwrap();
        let (a, b) = (kb.individual_index("a").unwrap(), kb.individual_index("b").unwrap());
        assert_eq!(table.vector(a), table.vector(b));
        let x = kb.individual_index("x").unwrap();
        assert_ne!(table.vector(a), table.vector(x));
    }

    #[test]
    fn state_rows_are_means() {
        let (kb, table) = table3();
        let s = |names: &[&str]| kb.individual_set(names.iter().copied()).unwrap();
        let lp = LearningProblem::new(s(&["b"]), s(&["c"])).unwrap();
        let m = state_matrix(&table, &s(&["a"]), &s(&[]), &lp);
        assert_eq!(m.row(0), table.vector(0));
        assert_eq!(m.row(1), &[0.0; 4]);
        assert_eq!(m.row(2), table.vector(1));
        assert_eq!(m.row(3), table.vector(2));
        let m = state_matrix(&table, &s(&["a", "b"]), &s(&["a", "b"]), &lp);
        assert_eq!(m.row(0), m.row(1));
        assert_eq!(m.row(0), &[0.5, 1.0, 1.5, 2.0]);
    }
}
