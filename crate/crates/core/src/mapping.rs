//! Impact-to-price mapping `S = S0 - alpha * dH` and curvature analysis of
//! the composed map `h -> S`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pb::InteractionMatrix;

/// Eigenvalues with magnitude at or below this fraction of the largest are treated as zero.
pub const EIGEN_RELATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMappingParams")]
pub struct MappingParams {
    s0: f64,
    alpha: f64,
}

#[derive(Deserialize)]
struct RawMappingParams {
    s0: f64,
    alpha: f64,
}

impl TryFrom<RawMappingParams> for MappingParams {
    type Error = Error;
    fn try_from(raw: RawMappingParams) -> Result<Self> {
        MappingParams::new(raw.s0, raw.alpha)
    }
}

impl MappingParams {
    pub fn new(s0: f64, alpha: f64) -> Result<Self> {
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::invalid(
                "s0",
                format!("must be positive and finite, got {s0}"),
            ));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(
                "alpha",
                format!("must be positive and finite, got {alpha}"),
            ));
        }
        Ok(Self { s0, alpha })
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// A mapped price. Non-positive values are kept and flagged, never clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpotPrice {
    pub value: f64,
    pub priceable: bool,
}

impl SpotPrice {
    /// The value if it can feed a pricer.
    pub fn positive(self) -> Result<f64> {
        if self.priceable {
            Ok(self.value)
        } else {
            Err(Error::Unpriceable { spot: self.value })
        }
    }
}

pub fn stock_price(params: &MappingParams, delta_h: f64) -> SpotPrice {
    let value = params.s0 - params.alpha * delta_h;
    SpotPrice {
        value,
        priceable: value > 0.0 && value.is_finite(),
    }
}

fn check_coords(g: &InteractionMatrix, coords: &[usize]) -> Result<()> {
    if coords.is_empty() {
        return Err(Error::invalid("coords", "coordinate set is empty"));
    }
    for (k, &c) in coords.iter().enumerate() {
        if c >= g.dim() {
            return Err(Error::invalid(
                "coords",
                format!("index {c} out of range for dimension {}", g.dim()),
            ));
        }
        if coords[..k].contains(&c) {
            return Err(Error::invalid("coords", format!("index {c} repeated")));
        }
    }
    Ok(())
}

/// Analytic Hessian of `S` over the selected (zero-based) coordinates.
///
/// The linear part of the aggregate has no curvature, so entry `(a, b)` is
/// `-alpha * (g_ij + g_ji) = -2 alpha g_ij` with `i = coords[a]`, `j = coords[b]`.
pub fn hessian_of_price(
    params: &MappingParams,
    g: &InteractionMatrix,
    coords: &[usize],
) -> Result<DMatrix<f64>> {
    check_coords(g, coords)?;
    let k = coords.len();
    Ok(DMatrix::from_fn(k, k, |a, b| {
        -2.0 * params.alpha * g.get(coords[a], coords[b])
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Maximum,
    Minimum,
    Saddle,
    Degenerate,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Maximum => "maximum",
            Classification::Minimum => "minimum",
            Classification::Saddle => "saddle",
            Classification::Degenerate => "degenerate",
        }
    }
}

/// The determinant / leading-minor test for a two-coordinate Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoVariableTest {
    /// `S_11 S_22 - S_12^2 > 0`
    pub determinant_positive: bool,
    /// `S_11 < 0`
    pub leading_negative: bool,
}

impl TwoVariableTest {
    pub fn is_maximum(&self) -> bool {
        self.determinant_positive && self.leading_negative
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremumReport {
    /// Analysed coordinates, zero-based.
    pub coords: Vec<usize>,
    /// Stationary point over `coords` with every other coordinate held at zero;
    /// `None` when the Hessian is degenerate.
    pub point: Option<Vec<f64>>,
    pub classification: Classification,
    pub hessian: Vec<Vec<f64>>,
    pub hessian_det: f64,
    pub leading_second_derivative: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_variable_test: Option<TwoVariableTest>,
}

/// Sign pattern of a symmetric matrix's spectrum, with the relative zero tolerance.
pub fn classify_eigenvalues(eigenvalues: &[f64]) -> Classification {
    let scale = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = EIGEN_RELATIVE_TOL * scale;
    if eigenvalues.iter().any(|v| v.abs() <= tol) {
        Classification::Degenerate
    } else if eigenvalues.iter().all(|&v| v < -tol) {
        Classification::Maximum
    } else if eigenvalues.iter().all(|&v| v > tol) {
        Classification::Minimum
    } else {
        Classification::Saddle
    }
}

pub fn two_variable_test(hessian: &DMatrix<f64>) -> TwoVariableTest {
    assert_eq!(hessian.shape(), (2, 2));
    let det = hessian[(0, 0)] * hessian[(1, 1)] - hessian[(0, 1)] * hessian[(0, 1)];
    TwoVariableTest {
        determinant_positive: det > 0.0,
        leading_negative: hessian[(0, 0)] < 0.0,
    }
}

/// Classifies the critical point of `S` over `coords`.
///
/// With the quadratic aggregate the gradient is `-alpha (1 + 2 g h)`, so the
/// stationary point solves `2 g_cc h_c = -1` on the selected block (other
/// coordinates at zero). The classification always comes from the eigenvalue
/// criterion; for two coordinates the determinant test is reported alongside.
pub fn classify_extremum(
    params: &MappingParams,
    g: &InteractionMatrix,
    coords: &[usize],
) -> Result<ExtremumReport> {
    let hessian = hessian_of_price(params, g, coords)?;
    let k = coords.len();

    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(hessian.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    let classification = classify_eigenvalues(&eigenvalues);

    let point = if classification == Classification::Degenerate {
        None
    } else {
        let block = DMatrix::from_fn(k, k, |a, b| 2.0 * g.get(coords[a], coords[b]));
        block
            .lu()
            .solve(&DVector::from_element(k, -1.0))
            .map(|h| h.iter().copied().collect())
    };

    let two_variable_test = (k == 2).then(|| two_variable_test(&hessian));

    Ok(ExtremumReport {
        coords: coords.to_vec(),
        point,
        classification,
        hessian_det: hessian.determinant(),
        leading_second_derivative: hessian[(0, 0)],
        hessian: (0..k)
            .map(|a| hessian.row(a).iter().copied().collect())
            .collect(),
        eigenvalues,
        two_variable_test,
    })
}
