//! JSON document format for game specifications.
//!
//! ```json
//! {
//!   "dims": { "n": 1, "m1": 1, "m2": 1 },
//!   "horizon": 1.0,
//!   "coefficients": { "B1": { "kind": "constant", "data": [[1.0]] } },
//!   "weights": { "G": [[-1.0]], "R11": { "kind": "polynomial", "data": [[[0.0]], [[0.0]], [[1.0]]] } }
//! }
//! ```
//!
//! Missing coefficients and weights default to zero of the right shape.
//! Path kinds: `constant` (one matrix), `piecewise` (list of
//! `[start_time, matrix]`, right-continuous) and `polynomial` (list of
//! matrices `C₀, C₁, …` for `Σ Cₖ tᵏ`). Matrices are lists of rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::path::{CoefficientPath, PathKind};
use super::spec::GameSpec;
use crate::error::{Error, Result};
use crate::linalg::Mat;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum PathDoc {
    Constant(Rows),
    #[serde(alias = "piecewise-constant")]
    Piecewise(Vec<(f64, Rows)>),
    #[serde(alias = "polynomial-in-t")]
    Polynomial(Vec<Rows>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightDoc {
    Matrix(Rows),
    Path(PathDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecDocument {
    pub dims: Dims,
    pub horizon: f64,
    #[serde(default)]
    pub coefficients: BTreeMap<String, PathDoc>,
    #[serde(default)]
    pub weights: BTreeMap<String, WeightDoc>,
}

const COEFFICIENT_KEYS: [&str; 12] =
    ["A", "Abar", "B1", "B1bar", "B2", "B2bar", "C", "Cbar", "D1", "D1bar", "D2", "D2bar"];
const WEIGHT_KEYS: [&str; 16] = [
    "G", "Gbar", "Q", "Qbar", "S1", "S1bar", "S2", "S2bar", "R11", "R12", "R22", "R11bar", "R12bar", "R22bar",
    "R21", "R21bar",
];

fn rows_to_mat(rows: &Rows, what: &str) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidSpec(format!("{what}: matrix rows must be non-empty and of equal length")));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

fn mat_to_rows(m: &Mat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl PathDoc {
    pub fn to_path(&self, what: &str) -> Result<CoefficientPath> {
        match self {
            PathDoc::Constant(rows) => Ok(CoefficientPath::constant(rows_to_mat(rows, what)?)),
            PathDoc::Piecewise(pieces) => CoefficientPath::piecewise(
                pieces.iter().map(|(t, rows)| Ok((*t, rows_to_mat(rows, what)?))).collect::<Result<_>>()?,
            ),
            PathDoc::Polynomial(coeffs) => CoefficientPath::polynomial(
                coeffs.iter().map(|rows| rows_to_mat(rows, what)).collect::<Result<_>>()?,
            ),
        }
    }

    pub fn from_path(path: &CoefficientPath) -> Self {
        match path.kind() {
            PathKind::Constant(m) => PathDoc::Constant(mat_to_rows(m)),
            PathKind::Piecewise(p) => PathDoc::Piecewise(p.iter().map(|(t, m)| (*t, mat_to_rows(m))).collect()),
            PathKind::Polynomial(c) => PathDoc::Polynomial(c.iter().map(mat_to_rows).collect()),
        }
    }
}

impl SpecDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("config parse error: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec documents always serialize")
    }

    /// Builds the game. Unknown keys are rejected; the result is *not*
    /// validated (call [`GameSpec::validated`]).
    pub fn to_spec(&self) -> Result<GameSpec> {
        for key in self.coefficients.keys() {
            if !COEFFICIENT_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidSpec(format!("unknown coefficient key `{key}`")));
            }
        }
        for key in self.weights.keys() {
            if !WEIGHT_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidSpec(format!("unknown weight key `{key}`")));
            }
        }
        if self.weights.contains_key("R21") || self.weights.contains_key("R21bar") {
            return Err(Error::InvalidSpec("R21/R21bar are implied by R12/R12bar and must not be given".into()));
        }

        let Dims { n, m1, m2 } = self.dims;
        let mut spec = GameSpec::zeros(n, m1, m2, self.horizon);
        let coeff = |key: &str, default: CoefficientPath| -> Result<CoefficientPath> {
            self.coefficients.get(key).map_or(Ok(default), |d| d.to_path(key))
        };
        let c = &mut spec.coefficients;
        c.a = coeff("A", c.a.clone())?;
        c.a_bar = coeff("Abar", c.a_bar.clone())?;
        c.b1 = coeff("B1", c.b1.clone())?;
        c.b1_bar = coeff("B1bar", c.b1_bar.clone())?;
        c.b2 = coeff("B2", c.b2.clone())?;
        c.b2_bar = coeff("B2bar", c.b2_bar.clone())?;
        c.c = coeff("C", c.c.clone())?;
        c.c_bar = coeff("Cbar", c.c_bar.clone())?;
        c.d1 = coeff("D1", c.d1.clone())?;
        c.d1_bar = coeff("D1bar", c.d1_bar.clone())?;
        c.d2 = coeff("D2", c.d2.clone())?;
        c.d2_bar = coeff("D2bar", c.d2_bar.clone())?;

        let weight = |key: &str, default: CoefficientPath| -> Result<CoefficientPath> {
            match self.weights.get(key) {
                None => Ok(default),
                Some(WeightDoc::Path(d)) => d.to_path(key),
                Some(WeightDoc::Matrix(rows)) => Ok(CoefficientPath::constant(rows_to_mat(rows, key)?)),
            }
        };
        let terminal = |key: &str, default: Mat| -> Result<Mat> {
            match self.weights.get(key) {
                None => Ok(default),
                Some(WeightDoc::Matrix(rows)) => rows_to_mat(rows, key),
                Some(WeightDoc::Path(PathDoc::Constant(rows))) => rows_to_mat(rows, key),
                Some(_) => Err(Error::InvalidSpec(format!("{key} must be a constant matrix"))),
            }
        };
        let w = &mut spec.weights;
        w.g = terminal("G", w.g.clone())?;
        w.g_bar = terminal("Gbar", w.g_bar.clone())?;
        w.q = weight("Q", w.q.clone())?;
        w.q_bar = weight("Qbar", w.q_bar.clone())?;
        w.s1 = weight("S1", w.s1.clone())?;
        w.s1_bar = weight("S1bar", w.s1_bar.clone())?;
        w.s2 = weight("S2", w.s2.clone())?;
        w.s2_bar = weight("S2bar", w.s2_bar.clone())?;
        w.r11 = weight("R11", w.r11.clone())?;
        w.r12 = weight("R12", w.r12.clone())?;
        w.r22 = weight("R22", w.r22.clone())?;
        w.r11_bar = weight("R11bar", w.r11_bar.clone())?;
        w.r12_bar = weight("R12bar", w.r12_bar.clone())?;
        w.r22_bar = weight("R22bar", w.r22_bar.clone())?;
        Ok(spec)
    }

    /// Full document for a game (every key written out).
    pub fn from_spec(spec: &GameSpec) -> Self {
        let coefficients = spec
            .named_paths()
            .into_iter()
            .filter(|(k, _)| COEFFICIENT_KEYS.contains(k))
            .map(|(k, p)| (k.to_string(), PathDoc::from_path(p)))
            .collect();
        let mut weights: BTreeMap<String, WeightDoc> = spec
            .named_paths()
            .into_iter()
            .filter(|(k, _)| !COEFFICIENT_KEYS.contains(k))
            .map(|(k, p)| (k.to_string(), WeightDoc::Path(PathDoc::from_path(p))))
            .collect();
        weights.insert("G".into(), WeightDoc::Matrix(mat_to_rows(&spec.weights.g)));
        weights.insert("Gbar".into(), WeightDoc::Matrix(mat_to_rows(&spec.weights.g_bar)));
        Self {
            dims: Dims { n: spec.n, m1: spec.m1, m2: spec.m2 },
            horizon: spec.horizon,
            coefficients,
            weights,
        }
    }
}

/// Parses and validates a JSON game specification.
pub fn parse_spec(text: &str) -> Result<GameSpec> {
    SpecDocument::from_json(text)?.to_spec()?.validated()
}
