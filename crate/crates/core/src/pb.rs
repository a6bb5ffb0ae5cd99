//! Planetary-boundary state and the human-impact aggregate.
//!
//! The aggregate is the second-order expansion
//!
//! ```text
//! H = Σ_i h_i + Σ_i Σ_j g_ij h_i h_j
//! ```
//!
//! where the double sum runs over all ordered pairs, so an off-diagonal pair
//! contributes `2 g_ij h_i h_j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION: usize = 9;

/// Canonical labels for the nine-parameter layout.
pub const DEFAULT_LABELS: [&str; DEFAULT_DIMENSION] = [
    "biosphere_loss_rate",
    "land_system_change",
    "fresh_water_use",
    "biogeochemical_flows",
    "ocean_acidification",
    "atmospheric_aerosol_loading",
    "stratospheric_ozone_depletion",
    "climate_change",
    "chemical_pollution",
];

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-12;
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-9;

/// Boundary readings `h_i`, dimensionless and measured against the safe-operating-space baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PbVector(Vec<f64>);

impl PbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("h", "dimension must be at least 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("h", format!("entry {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "PbVector dimension must be at least 1");
        Self(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Copy with entry `i` replaced.
    pub fn with(&self, i: usize, value: f64) -> Result<Self> {
        let mut values = self.0.clone();
        values[i] = value;
        Self::new(values)
    }
}

impl<'de> Deserialize<'de> for PbVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        PbVector::new(values).map_err(serde::de::Error::custom)
    }
}

/// Symmetric coupling matrix `g_ij`. Only the upper triangle is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    n: usize,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixTolerances {
    /// Maximum `|g_ij - g_ji|` accepted before symmetrizing.
    pub symmetry: f64,
    /// `|det g|` at or below this is degenerate (unless `g` is all zero).
    pub degeneracy: f64,
}

impl Default for MatrixTolerances {
    fn default() -> Self {
        Self {
            symmetry: DEFAULT_SYMMETRY_TOL,
            degeneracy: DEFAULT_DEGENERACY_TOL,
        }
    }
}

impl InteractionMatrix {
    /// The no-interaction sentinel. Always admitted despite `det = 0`.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut g = Self::zeros(n);
        for i in 0..n {
            g.set(i, i, 1.0);
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        // row-major packed upper triangle
        a * self.n - a * (a + 1) / 2 + b
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.index(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.upper[k] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|&v| v == 0.0)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn determinant(&self) -> f64 {
        self.to_dmatrix().determinant()
    }

    /// Every entry multiplied by `factor`, bypassing re-validation.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            upper: self.upper.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Validates raw rows with default tolerances.
pub fn validate_matrix(raw: &[Vec<f64>]) -> Result<InteractionMatrix> {
    validate_matrix_with(raw, MatrixTolerances::default())
}

pub fn validate_matrix_with(raw: &[Vec<f64>], tol: MatrixTolerances) -> Result<InteractionMatrix> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::invalid("g", "matrix must have at least one row"));
    }
    for row in raw {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                field: "g",
                expected: n,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("g", "entries must be finite"));
        }
    }

    let mut g = InteractionMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let diff = (raw[i][j] - raw[j][i]).abs();
            if diff > tol.symmetry {
                return Err(Error::AsymmetricMatrix { i, j, diff });
            }
            g.set(i, j, 0.5 * (raw[i][j] + raw[j][i]));
        }
    }

    if !g.is_zero() {
        let det = g.determinant();
        if det.abs() <= tol.degeneracy {
            return Err(Error::DegenerateMatrix { det });
        }
    }
    Ok(g)
}

fn check_dims(h: &PbVector, g: &InteractionMatrix) -> Result<()> {
    if h.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            field: "h",
            expected: g.dim(),
            found: h.dim(),
        });
    }
    Ok(())
}

/// The aggregate `H` for readings `h` under couplings `g`.
pub fn human_impact(h: &PbVector, g: &InteractionMatrix) -> Result<f64> {
    check_dims(h, g)?;
    let h = h.as_slice();
    let linear: f64 = h.iter().sum();
    let mut quadratic = 0.0;
    for (i, &hi) in h.iter().enumerate() {
        for (j, &hj) in h.iter().enumerate() {
            quadratic += g.get(i, j) * hi * hj;
        }
    }
    Ok(linear + quadratic)
}

/// `H(end) - H(start)`; negative when impact fell.
pub fn impact_delta(start: &PbVector, end: &PbVector, g: &InteractionMatrix) -> Result<f64> {
    if start.dim() != end.dim() {
        return Err(Error::DimensionMismatch {
            field: "h_end",
            expected: start.dim(),
            found: end.dim(),
        });
    }
    Ok(human_impact(end, g)? - human_impact(start, g)?)
}

/// JSON layout for a boundary state: `dimension`, optional `labels`, `h`, optional `g`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PbDocument {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
}

/// A validated [`PbDocument`].
#[derive(Debug, Clone)]
pub struct PbState {
    pub labels: Vec<String>,
    pub h: Option<PbVector>,
    pub g: InteractionMatrix,
}

impl PbDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<PbState> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        let labels = match &self.labels {
            Some(labels) if labels.len() != n => {
                return Err(Error::DimensionMismatch {
                    field: "labels",
                    expected: n,
                    found: labels.len(),
                })
            }
            Some(labels) => labels.clone(),
            None if n == DEFAULT_DIMENSION => {
                DEFAULT_LABELS.iter().map(|s| s.to_string()).collect()
            }
            None => (1..=n).map(|i| format!("h{i}")).collect(),
        };
        let h = match &self.h {
            Some(values) if values.len() != n => {
                return Err(Error::DimensionMismatch {
                    field: "h",
                    expected: n,
                    found: values.len(),
                })
            }
            Some(values) => Some(PbVector::new(values.clone())?),
            None => None,
        };
        let g = match &self.g {
            Some(rows) if rows.len() != n => {
                return Err(Error::DimensionMismatch {
                    field: "g",
                    expected: n,
                    found: rows.len(),
                })
            }
            Some(rows) => validate_matrix(rows)?,
            None => InteractionMatrix::zeros(n),
        };
        Ok(PbState { labels, h, g })
    }
}
