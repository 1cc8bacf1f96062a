//! Scattering operators on a velocity quadrature.
//!
//! `K` acts on nodal values as a matrix with `K_ij ~ k(v_i, v_j) w_j`. All
//! spectral work happens in the weighted inner product `(u, w)_w = sum_i w_i u_i w_i`,
//! where a discrete operator satisfying `w_i K_ij = w_j K_ji` is self-adjoint.
//! Conjugating with `W^{1/2}` turns `I - K` into an ordinary symmetric matrix.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::quadrature::VelocitySet;
use crate::{Error, PhaseField, Result};

/// Eigenvalues below this magnitude count as zero.
pub const NULL_SPACE_CUTOFF: f64 = 1e-10;
/// Slack on the interval `[0, 1]` for the spectrum of `I - K`.
pub const SPECTRUM_TOL: f64 = 1e-10;
/// Weighted symmetry tolerance `|w_i K_ij - w_j K_ji|`.
pub const SELF_ADJOINT_TOL: f64 = 1e-12;
/// Row-sum deviation above which the normalization is flagged.
pub const NORMALIZATION_WARN: f64 = 1e-6;
/// Relative solvability slack for `pinv_apply`.
pub const SOLVABILITY_TOL: f64 = 1e-10;

/// Scattering kernel `k(v, v')` on the unit sphere (or on slab cosines).
#[derive(Clone)]
pub enum Kernel {
    /// `k = 1`: `K` replaces a function by its velocity average.
    Isotropic,
    /// `k = 1 + 3 g (v . v')`. Negative for `g > 1/3` at backscatter; admitted for
    /// `|g| <= 1` and judged by certification instead.
    Linear { g: f64 },
    /// `k(v_i, v_j)` tabulated on the quadrature nodes.
    Table(DMatrix<f64>),
    /// Any symmetric nonnegative function of two directions.
    Function(Arc<dyn Fn([f64; 3], [f64; 3]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Isotropic => write!(f, "Isotropic"),
            Kernel::Linear { g } => write!(f, "Linear {{ g: {g} }}"),
            Kernel::Table(t) => write!(f, "Table({}x{})", t.nrows(), t.ncols()),
            Kernel::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Kernel {
    /// Parse a whitespace-separated square table (row i, column j = k(v_i, v_j)).
    pub fn parse_table(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|l| {
                l.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| Error::Config(format!("kernel table entry {t:?}: {e}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "kernel table must be square; got {n} rows with lengths {:?}",
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Ok(Kernel::Table(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
    }

    pub fn read_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading kernel table {}", path.display()), e))?;
        Self::parse_table(&text)
    }

    fn sample(&self, quad: &VelocitySet) -> Result<DMatrix<f64>> {
        let n = quad.len();
        let m = match self {
            Kernel::Isotropic => DMatrix::from_element(n, n, 1.0),
            Kernel::Linear { g } => {
                if !(g.abs() <= 1.0) {
                    return Err(Error::Validation(format!(
                        "linear anisotropy factor must satisfy |g| <= 1, got {g}"
                    )));
                }
                DMatrix::from_fn(n, n, |i, j| {
                    let (a, b) = (quad.direction(i), quad.direction(j));
                    1.0 + 3.0 * g * (a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
                })
            }
            Kernel::Table(t) => {
                if t.nrows() != n || t.ncols() != n {
                    return Err(Error::Argument(format!(
                        "kernel table is {}x{} but the quadrature has {n} nodes",
                        t.nrows(),
                        t.ncols()
                    )));
                }
                t.clone()
            }
            Kernel::Function(k) => {
                DMatrix::from_fn(n, n, |i, j| k(quad.direction(i), quad.direction(j)))
            }
        };
        if !matches!(self, Kernel::Linear { .. }) {
            if let Some(v) = m.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::Validation(format!(
                    "scattering kernel sampled a negative or non-finite value {v}"
                )));
            }
        }
        Ok(m)
    }
}

/// Spectral data of `I - K` in the weighted inner product.
#[derive(Debug, Clone, Serialize)]
pub struct CertReport {
    /// Eigenvalues of `I - K`, ascending.
    pub eigenvalues: Vec<f64>,
    pub null_space_dim: usize,
    /// Null eigenvector normalized to unit weighted mean (constant for a passing report).
    pub null_vector: Vec<f64>,
    /// Reciprocal of the smallest nonzero eigenvalue of `I - K`.
    #[serde(rename = "c_K")]
    pub c_k: f64,
    pub passed: bool,
    pub assumptions: AssumptionFlags,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct AssumptionFlags {
    /// Weighted self-adjointness and positivity of `K` (spectrum of `I - K` below `1 + tol`).
    pub self_adjoint_positive: bool,
    /// L2 contraction: spectrum of `I - K` above `-tol`.
    pub contraction: bool,
    /// Null space of `I - K` is exactly the constants.
    pub simple_null_space: bool,
    /// Pseudoinverse bounded on mean-zero functions.
    pub bounded_pseudoinverse: bool,
    /// Max-norm contraction via absolute row sums. Reported, not required for `passed`.
    pub max_norm_contraction: bool,
}

#[derive(Debug, Clone)]
struct Spectral {
    /// Eigenvalues of the conjugated symmetric matrix, ascending.
    values: DVector<f64>,
    /// Orthonormal eigenvectors (columns) of `W^{1/2} (I - K) W^{-1/2}`.
    vectors: DMatrix<f64>,
}

/// Matrix action of `K` on quadrature values plus certification data.
#[derive(Debug, Clone)]
pub struct ScatteringOperator {
    matrix: DMatrix<f64>,
    quad: VelocitySet,
    /// `max_i |sum_j k_ij w_j - 1|` before normalization.
    normalization_deviation: f64,
    warnings: Vec<String>,
    spectral: Option<Spectral>,
    certification: Option<CertReport>,
}

/// Assemble `K` from a kernel on a quadrature.
///
/// The sampled matrix `k_ij w_j` is rescaled symmetrically to `d_i k_ij w_j d_j` with `d`
/// chosen so that every row sums to one. This keeps `w_i K_ij = w_j K_ji` intact while
/// enforcing `K 1 = 1`; for kernels already normalized on the quadrature `d = 1`.
pub fn assemble_scattering(
    kernel: &Kernel,
    quad: impl Into<VelocitySet>,
) -> Result<ScatteringOperator> {
    let quad = quad.into();
    let n = quad.len();
    let w = quad.weights().to_vec();
    let k = kernel.sample(&quad)?;
    let base = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * w[j]);
    let row_sums: Vec<f64> = (0..n).map(|i| base.row(i).sum()).collect();
    let normalization_deviation = row_sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);

    let mut d = vec![1.0; n];
    if normalization_deviation > 1e-14 {
        let mut converged = false;
        for _ in 0..10_000 {
            let r: Vec<f64> = (0..n)
                .map(|i| d[i] * (0..n).map(|j| base[(i, j)] * d[j]).sum::<f64>())
                .collect();
            if r.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Validation(
                    "kernel cannot be normalized: a row has nonpositive mass".into(),
                ));
            }
            if r.iter().all(|v| (v - 1.0).abs() < 1e-14) {
                converged = true;
                break;
            }
            for (di, ri) in d.iter_mut().zip(&r) {
                *di /= ri.sqrt();
            }
        }
        if !converged {
            return Err(Error::Validation(
                "symmetric kernel normalization did not converge".into(),
            ));
        }
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| d[i] * base[(i, j)] * d[j]);

    let mut warnings = Vec::new();
    if normalization_deviation > NORMALIZATION_WARN {
        warnings.push(format!(
            "kernel row sums deviated from 1 by up to {normalization_deviation:e}; rescaled"
        ));
    }
    Ok(ScatteringOperator {
        matrix,
        quad,
        normalization_deviation,
        warnings,
        spectral: None,
        certification: None,
    })
}

impl ScatteringOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn quadrature(&self) -> &VelocitySet {
        &self.quad
    }

    pub fn weights(&self) -> &[f64] {
        self.quad.weights()
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn normalization_deviation(&self) -> f64 {
        self.normalization_deviation
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn certification(&self) -> Option<&CertReport> {
        self.certification.as_ref()
    }

    /// `max_{i,j} |w_i K_ij - w_j K_ji|`.
    pub fn self_adjointness_defect(&self) -> f64 {
        let w = self.weights();
        let n = self.len();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                m = m.max((w[i] * self.matrix[(i, j)] - w[j] * self.matrix[(j, i)]).abs());
            }
        }
        m
    }

    fn spectral(&self) -> Spectral {
        let w = self.weights();
        let n = self.len();
        let s = DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            w[i].sqrt() * (delta - self.matrix[(i, j)]) / w[j].sqrt()
        });
        let sym = (&s + s.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let vectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
        Spectral { values, vectors }
    }

    /// Run [`certify_assumptions`] and keep the decomposition for [`pinv_apply`].
    /// Fails with [`Error::Certification`] unless every required assumption passes.
    pub fn certified(mut self) -> Result<Self> {
        let spectral = self.spectral();
        let report = certify_with(&self, &spectral);
        if !report.passed {
            return Err(Error::Certification(report.diagnostics.join("; ")));
        }
        self.spectral = Some(spectral);
        self.certification = Some(report);
        Ok(self)
    }

    /// `(u, v)_w`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        weighted_inner(self.weights(), u, v)
    }
}

pub(crate) fn weighted_inner(w: &[f64], u: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
}

/// Full spectral certification of the assumptions on `K`.
pub fn certify_assumptions(op: &ScatteringOperator) -> CertReport {
    certify_with(op, &op.spectral())
}

fn certify_with(op: &ScatteringOperator, spectral: &Spectral) -> CertReport {
    let w = op.weights();
    let n = op.len();
    let eigenvalues: Vec<f64> = spectral.values.iter().copied().collect();
    let mut diagnostics = Vec::new();

    let defect = op.self_adjointness_defect();
    let symmetric = defect <= SELF_ADJOINT_TOL;
    if !symmetric {
        diagnostics.push(format!(
            "K is not self-adjoint in the weighted inner product (defect {defect:e})"
        ));
    }
    let max_ev = eigenvalues.last().copied().unwrap_or(0.0);
    let min_ev = eigenvalues.first().copied().unwrap_or(0.0);
    let positive = max_ev <= 1.0 + SPECTRUM_TOL;
    if !positive {
        diagnostics.push(format!(
            "eigenvalue {max_ev} of I-K exceeds 1: K is not positive"
        ));
    }
    let contraction = min_ev >= -SPECTRUM_TOL;
    if !contraction {
        diagnostics.push(format!(
            "eigenvalue {min_ev} of I-K is negative: K is not a contraction"
        ));
    }
    let max_row = (0..n)
        .map(|i| op.matrix.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let max_norm_contraction = max_row <= 1.0 + SPECTRUM_TOL;

    let null_idx: Vec<usize> = (0..n)
        .filter(|&k| eigenvalues[k].abs() <= NULL_SPACE_CUTOFF)
        .collect();
    let null_space_dim = null_idx.len();
    let mut null_vector = Vec::new();
    let mut simple_null_space = null_space_dim == 1;
    if null_space_dim != 1 {
        diagnostics.push(format!(
            "null space of I-K has dimension {null_space_dim} (must be 1, spanned by constants)"
        ));
    } else {
        let q = spectral.vectors.column(null_idx[0]);
        let x: Vec<f64> = (0..n).map(|i| q[i] / w[i].sqrt()).collect();
        let mean: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
        null_vector = x.iter().map(|v| v / mean).collect();
        let spread = null_vector
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        if !(spread <= 1e-8) {
            simple_null_space = false;
            diagnostics.push(format!(
                "null eigenvector is not constant (relative spread {spread:e})"
            ));
        }
    }
    let smallest_nonzero = eigenvalues
        .iter()
        .copied()
        .filter(|v| v.abs() > NULL_SPACE_CUTOFF)
        .fold(f64::INFINITY, f64::min);
    let c_k = 1.0 / smallest_nonzero;
    let bounded_pseudoinverse = simple_null_space
        && contraction
        && smallest_nonzero.is_finite()
        && smallest_nonzero > 0.0
        && c_k >= 1.0 - 1e-12;
    if simple_null_space && !bounded_pseudoinverse {
        diagnostics.push("pseudoinverse of I-K is not bounded by a constant >= 1".into());
    }
    let assumptions = AssumptionFlags {
        self_adjoint_positive: symmetric && positive,
        contraction,
        simple_null_space,
        bounded_pseudoinverse,
        max_norm_contraction,
    };
    let passed = assumptions.self_adjoint_positive
        && assumptions.contraction
        && assumptions.simple_null_space
        && assumptions.bounded_pseudoinverse;
    CertReport {
        eigenvalues,
        null_space_dim,
        null_vector,
        c_k,
        passed,
        assumptions,
        diagnostics,
    }
}

/// Unique zero-mean solution of `(I - K) u = rhs`.
pub fn pinv_apply(op: &ScatteringOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let spectral = op.spectral.as_ref().ok_or_else(|| {
        Error::Certification("pseudoinverse requested on an uncertified operator".into())
    })?;
    let n = op.len();
    if rhs.len() != n {
        return Err(Error::Argument(format!(
            "right-hand side has {} entries, operator has {n}",
            rhs.len()
        )));
    }
    let w = op.weights();
    let mean: f64 = w.iter().zip(rhs).map(|(w, r)| w * r).sum();
    let norm = weighted_inner(w, rhs, rhs).sqrt();
    if mean.abs() > SOLVABILITY_TOL * norm.max(f64::MIN_POSITIVE) && mean.abs() > 0.0 {
        return Err(Error::Solvability { mean });
    }
    let y = DVector::from_fn(n, |i, _| w[i].sqrt() * rhs[i]);
    let coeffs = spectral.vectors.tr_mul(&y);
    let scaled = DVector::from_fn(n, |k, _| {
        let lam = spectral.values[k];
        if lam.abs() <= NULL_SPACE_CUTOFF {
            0.0
        } else {
            coeffs[k] / lam
        }
    });
    let z = &spectral.vectors * scaled;
    Ok((0..n).map(|i| z[i] / w[i].sqrt()).collect())
}

/// Solution of `(alpha I + beta (I - K)) u = rhs` for `alpha > 0`, `beta >= 0`.
pub(crate) fn shifted_solve(
    op: &ScatteringOperator,
    alpha: f64,
    beta: f64,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let spectral = op.spectral.as_ref().ok_or_else(|| {
        Error::Certification("spectral solve requested on an uncertified operator".into())
    })?;
    let w = op.weights();
    let n = op.len();
    let y = DVector::from_fn(n, |i, _| w[i].sqrt() * rhs[i]);
    let coeffs = spectral.vectors.tr_mul(&y);
    let scaled = DVector::from_fn(n, |k, _| {
        coeffs[k] / (alpha + beta * spectral.values[k].max(0.0))
    });
    let z = &spectral.vectors * scaled;
    Ok((0..n).map(|i| z[i] / w[i].sqrt()).collect())
}

/// `K u` for a single velocity vector.
pub fn apply_k(op: &ScatteringOperator, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != op.len() {
        return Err(Error::Argument(format!(
            "field has {} velocity values, operator has {}",
            values.len(),
            op.len()
        )));
    }
    let v = DVector::from_column_slice(values);
    Ok((&op.matrix * v).iter().copied().collect())
}

/// `K` applied independently in every cell of a space-velocity field.
pub fn apply_k_field(op: &ScatteringOperator, field: &PhaseField) -> Result<PhaseField> {
    if field.ncols() != op.len() {
        return Err(Error::Argument(format!(
            "field has {} ordinates, operator has {}",
            field.ncols(),
            op.len()
        )));
    }
    Ok(field * op.matrix.transpose())
}
