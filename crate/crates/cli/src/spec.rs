//! Measurement specification files.
//!
//! ```json
//! {
//!   "schema_version": "1.0",
//!   "dim": 2,
//!   "measurements": [
//!     {"type": "basis", "vectors": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]},
//!     {"type": "povm", "elements": [[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]], ...]}
//!   ]
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs; matrices are lists of rows.

use anyhow::{bail, Context, Result};
use eurcut::quantum::{validate_povm, HermitianMatrix, Povm, PureState, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: &str = "1.0";

const NORM_TOL: f64 = 1e-8;

pub type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub schema_version: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub measurements: Vec<Measurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Measurement {
    Basis { vectors: Vec<Vec<Complex>> },
    Povm { elements: Vec<Vec<Vec<Complex>>> },
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SpecFile = serde_json::from_str(text).context("parse error")?;
        if spec.schema_version != SCHEMA_VERSION {
            bail!(
                "parse error: unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})",
                spec.schema_version
            );
        }
        if spec.dim < 2 {
            bail!("parse error: field `dim` must be at least 2, got {}", spec.dim);
        }
        if spec.measurements.is_empty() {
            bail!("parse error: field `measurements` is empty");
        }
        Ok(spec)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes") + "\n"
    }

    /// One validated POVM per measurement entry.
    pub fn povms(&self) -> Result<Vec<Povm>> {
        self.measurements
            .iter()
            .enumerate()
            .map(|(i, m)| self.povm_of(m).with_context(|| format!("measurements[{i}]")))
            .collect()
    }

    fn povm_of(&self, m: &Measurement) -> Result<Povm> {
        match m {
            Measurement::Basis { .. } => Ok(Povm::from_basis(&self.basis_of(m)?.expect("basis entry"))?),
            Measurement::Povm { elements } => {
                let mats = elements
                    .iter()
                    .enumerate()
                    .map(|(k, e)| self.matrix(e).with_context(|| format!("elements[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(validate_povm(mats)?)
            }
        }
    }

    fn basis_of(&self, m: &Measurement) -> Result<Option<Vec<PureState>>> {
        let Measurement::Basis { vectors } = m else {
            return Ok(None);
        };
        if vectors.len() != self.dim {
            bail!("a basis needs {} vectors, got {}", self.dim, vectors.len());
        }
        let states = vectors
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if v.len() != self.dim {
                    bail!("vectors[{k}] has length {}, expected {}", v.len(), self.dim);
                }
                let amps: Vec<C64> = v.iter().map(|c| C64::new(c[0], c[1])).collect();
                let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > NORM_TOL {
                    bail!("vectors[{k}] has norm {norm}, expected 1");
                }
                Ok(PureState::from_slice(&amps)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(states))
    }

    /// The bases, when every measurement is a basis.
    pub fn bases(&self) -> Result<Option<Vec<Vec<PureState>>>> {
        let mut out = Vec::new();
        for (i, m) in self.measurements.iter().enumerate() {
            match self.basis_of(m).with_context(|| format!("measurements[{i}]"))? {
                Some(b) => out.push(b),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    fn matrix(&self, rows: &[Vec<Complex>]) -> Result<HermitianMatrix> {
        let d = self.dim;
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            bail!("matrix must be {d}x{d}");
        }
        let m = DMatrix::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
        Ok(HermitianMatrix::new(m)?)
    }

    pub fn from_povm(povm: &Povm, description: Option<String>) -> Self {
        let d = povm.dim();
        let elements = povm
            .elements()
            .iter()
            .map(|e| {
                (0..d)
                    .map(|i| (0..d).map(|j| complex(e.matrix()[(i, j)])).collect())
                    .collect()
            })
            .collect();
        SpecFile {
            schema_version: SCHEMA_VERSION.into(),
            dim: d,
            description,
            measurements: vec![Measurement::Povm { elements }],
        }
    }

    pub fn from_bases(bases: &[Vec<PureState>], description: Option<String>) -> Self {
        SpecFile {
            schema_version: SCHEMA_VERSION.into(),
            dim: bases[0][0].dim(),
            description,
            measurements: bases
                .iter()
                .map(|b| Measurement::Basis {
                    vectors: b.iter().map(state_json).collect(),
                })
                .collect(),
        }
    }
}

pub fn complex(c: C64) -> Complex {
    [c.re, c.im]
}

pub fn state_json(s: &PureState) -> Vec<Complex> {
    s.amplitudes().iter().map(|&c| complex(c)).collect()
}

/// `sha256:<hex>` of the compact JSON with object keys sorted.
pub fn canonical_digest(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("value serializes");
    let hash = Sha256::digest(canonical.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Digest of an input file's JSON content, independent of formatting.
pub fn digest_text(text: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(text).context("parse error")?;
    Ok(canonical_digest(&value))
}

#[cfg(test)]
mod tests {
    use super::*;

    const XZ: &str = r#"{"schema_version":"1.0","dim":2,"measurements":[
        {"type":"basis","vectors":[[[1,0],[0,0]],[[0,0],[1,0]]]},
        {"type":"basis","vectors":[[[0.7071067811865476,0],[0.7071067811865476,0]],[[0.7071067811865476,0],[-0.7071067811865476,0]]]}]}"#;

    #[test]
    fn parses_bases() {
        let spec = SpecFile::parse(XZ).unwrap();
        assert_eq!(spec.povms().unwrap().len(), 2);
        assert_eq!(spec.bases().unwrap().unwrap().len(), 2);
    }

    #[test]
    fn round_trip() {
        let spec = SpecFile::parse(XZ).unwrap();
        assert_eq!(SpecFile::parse(&spec.to_json()).unwrap(), spec);
        let povm = eurcut::quantum::random_haar_povm(3, 3, 1).unwrap();
        let spec = SpecFile::from_povm(&povm, None);
        let back = SpecFile::parse(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.povms().unwrap()[0], povm);
    }

    #[test]
    fn errors_name_the_problem() {
        let err = SpecFile::parse("{\"dim\": 2,").unwrap_err();
        assert!(format!("{err:#}").contains("line"));
        let err = SpecFile::parse(r#"{"schema_version":"1.0","measurements":[]}"#).unwrap_err();
        assert!(format!("{err:#}").contains("dim"));
        let bad = XZ.replace("[[1,0],[0,0]],[[0,0],[1,0]]", "[[2,0],[0,0]],[[0,0],[1,0]]");
        let err = SpecFile::parse(&bad).unwrap().povms().unwrap_err();
        assert!(format!("{err:#}").contains("norm"));
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = digest_text(r#"{"b": 1, "a": [1, 2]}"#).unwrap();
        let b = digest_text("{\"a\":[1,2],\n \"b\":1}").unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("sha256:"));
    }
}
