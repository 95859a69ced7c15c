//! Text checkpoints of network parameters.
//!
//! ```text
//! drill-qnet-checkpoint v1
//! dimension <d>
//! hidden <hidden>
//! tensor <name> <shape...>
//! <values of the last axis, one row per line>
//! ...
//! ```
//!
//! Values are written in shortest round-trip decimal form, so a checkpoint
//! reloads bit-identically.

use std::fmt::Write as _;
use std::path::Path;

use super::network::QNetworkParams;
use super::QNetError;

pub const SCHEMA: &str = "drill-qnet-checkpoint v1";

pub fn checkpoint_to_string(params: &QNetworkParams) -> String {
    let mut out = String::new();
    writeln!(out, "{SCHEMA}").unwrap();
    writeln!(out, "dimension {}", params.dimension()).unwrap();
    writeln!(out, "hidden {}", params.hidden()).unwrap();
    for ((name, shape), values) in QNetworkParams::TENSOR_NAMES.iter().zip(params.shapes()).zip(params.tensors()) {
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        writeln!(out, "tensor {name} {}", dims.join(" ")).unwrap();
        let width = *shape.last().unwrap();
        for row in values.chunks(width) {
            let row: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    out
}

pub fn save_checkpoint(params: &QNetworkParams, path: impl AsRef<Path>) -> Result<(), QNetError> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint_to_string(params))
        .map_err(|source| QNetError::Io { path: path.to_path_buf(), source })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<QNetworkParams, QNetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| QNetError::Io { path: path.to_path_buf(), source })?;
    parse_checkpoint(&text)
}

fn bad(line: usize, message: impl Into<String>) -> QNetError {
    QNetError::Checkpoint { line, message: message.into() }
}

pub fn parse_checkpoint(text: &str) -> Result<QNetworkParams, QNetError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| lines.next().ok_or_else(|| bad(0, format!("unexpected end of file, expected {what}")));

    let (line, schema) = next("schema line")?;
    if schema != SCHEMA {
        return Err(bad(line, format!("unsupported schema `{schema}`")));
    }
    let mut header = |key: &str| -> Result<usize, QNetError> {
        let (line, text) = next(key)?;
        text.strip_prefix(key)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(line, format!("expected `{key} <n>`")))
    };
    let dimension = header("dimension")?;
    let hidden = header("hidden")?;
    if dimension < 2 || hidden == 0 {
        return Err(bad(3, "dimension must be >= 2 and hidden >= 1"));
    }
    let mut params = QNetworkParams::zeros(dimension, hidden);
    let shapes = params.shapes();
    for ((name, shape), values) in QNetworkParams::TENSOR_NAMES.iter().zip(shapes).zip(params.tensors_mut()) {
        let (line, head) = next("tensor header")?;
        let mut fields = head.split_whitespace();
        if fields.next() != Some("tensor") || fields.next() != Some(*name) {
            return Err(bad(line, format!("expected header of tensor `{name}`")));
        }
        let found: Vec<usize> = fields
            .map(|f| f.parse().map_err(|_| bad(line, format!("bad dimension `{f}`"))))
            .collect::<Result<_, _>>()?;
        if found != shape {
            return Err(QNetError::ShapeMismatch { what: format!("tensor {name}"), expected: shape, found });
        }
        let width = *shape.last().unwrap();
        for row in values.chunks_mut(width) {
            let (line, text) = next("tensor values")?;
            let parsed: Vec<f64> = text
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(line, format!("bad value `{v}`")))
                })
                .collect::<Result<_, _>>()?;
            if parsed.len() != width {
                return Err(bad(line, format!("expected {width} values, found {}", parsed.len())));
            }
            row.copy_from_slice(&parsed);
        }
    }
    if let Some((line, extra)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(bad(line, format!("trailing content `{extra}`")));
    }
    Ok(params)
}

/// Loads a checkpoint and checks it was trained for `(dimension, hidden)`.
pub fn load_checkpoint_for(
    path: impl AsRef<Path>,
    dimension: usize,
    hidden: usize,
) -> Result<QNetworkParams, QNetError> {
    let params = load_checkpoint(path)?;
    if params.dimension() != dimension || params.hidden() != hidden {
        return Err(QNetError::ShapeMismatch {
            what: "checkpoint".into(),
            expected: vec![dimension, hidden],
            found: vec![params.dimension(), params.hidden()],
        });
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnet::init_network;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut p = init_network(3, 5, 11).unwrap();
        p.b1[2] = -1.0e-300;
        p.b2[0] = 0.1 + 0.2;
        let text = checkpoint_to_string(&p);
        assert_eq!(parse_checkpoint(&text).unwrap(), p);
        assert!(text.starts_with("drill-qnet-checkpoint v1\ndimension 3\nhidden 5\ntensor kernels 32 1 3 3\n"));
    }

    #[test]
    fn rejects_malformed_checkpoints() {
        let p = init_network(3, 5, 11).unwrap();
        let text = checkpoint_to_string(&p);
        assert!(parse_checkpoint(&text.replace("v1", "v9")).is_err());
        assert!(matches!(
            parse_checkpoint(&text.replace("tensor W 384 5", "tensor W 384 6")),
            Err(QNetError::ShapeMismatch { .. })
        ));
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(parse_checkpoint(&truncated).is_err());
        assert!(parse_checkpoint(&format!("{text}junk\n")).is_err());
    }

    #[test]
    fn load_validates_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&init_network(3, 5, 1).unwrap(), &path).unwrap();
        assert!(load_checkpoint_for(&path, 3, 5).is_ok());
        assert!(matches!(load_checkpoint_for(&path, 4, 5), Err(QNetError::ShapeMismatch { .. })));
    }
}
