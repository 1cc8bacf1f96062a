//! Manufactured solutions for solver verification.
//!
//! Every case is a product `X(x / L) M(mu)`. All spatial shapes vanish at both
//! ends of the slab, so zero inflow data are reproduced exactly.

use std::f64::consts::PI;

use serde::Serialize;

use super::coefficient::{integrate, CoefficientField};
use super::grid::Grid1D;
use super::spec::ScaledProblem;
use crate::velocity::{apply_k, ScatteringOperator, VelocitySet};
use crate::{Error, PhaseField, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialShape {
    /// `sin(pi xi)`
    Sine,
    /// `xi (1 - xi)`
    Polynomial,
    /// Identically zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngularShape {
    One,
    /// `1 + mu`
    OnePlusMu,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManufacturedCase {
    pub name: String,
    pub spatial: SpatialShape,
    pub angular: AngularShape,
}

impl ManufacturedCase {
    pub fn new(name: &str, spatial: SpatialShape, angular: AngularShape) -> Self {
        Self {
            name: name.to_string(),
            spatial,
            angular,
        }
    }

    /// `sin(pi x/L) (1 + mu)`.
    pub fn transport_sine() -> Self {
        Self::new(
            "transport-sine",
            SpatialShape::Sine,
            AngularShape::OnePlusMu,
        )
    }

    /// `x(1-x)(1 + mu)` on the unit slab.
    pub fn transport_polynomial() -> Self {
        Self::new(
            "transport-polynomial",
            SpatialShape::Polynomial,
            AngularShape::OnePlusMu,
        )
    }

    /// `sin(pi x/L)`.
    pub fn diffusion_sine() -> Self {
        Self::new("diffusion-sine", SpatialShape::Sine, AngularShape::One)
    }

    /// `x(1-x)` on the unit slab.
    pub fn diffusion_polynomial() -> Self {
        Self::new(
            "diffusion-polynomial",
            SpatialShape::Polynomial,
            AngularShape::One,
        )
    }

    pub fn zero() -> Self {
        Self::new("zero", SpatialShape::Zero, AngularShape::One)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "transport-sine" => Self::transport_sine(),
            "transport-polynomial" => Self::transport_polynomial(),
            "diffusion-sine" => Self::diffusion_sine(),
            "diffusion-polynomial" => Self::diffusion_polynomial(),
            "zero" => Self::zero(),
            other => {
                return Err(Error::Config(format!(
                    "unknown manufactured case {other:?}"
                )))
            }
        })
    }

    pub fn is_velocity_independent(&self) -> bool {
        self.angular == AngularShape::One
    }

    /// `X`, `dX/dx` and `d2X/dx2` at `x` on a slab of length `length`.
    pub fn spatial(&self, x: f64, length: f64) -> (f64, f64, f64) {
        let xi = x / length;
        match self.spatial {
            SpatialShape::Sine => {
                let k = PI / length;
                (
                    (PI * xi).sin(),
                    k * (PI * xi).cos(),
                    -k * k * (PI * xi).sin(),
                )
            }
            SpatialShape::Polynomial => (
                xi * (1.0 - xi),
                (1.0 - 2.0 * xi) / length,
                -2.0 / (length * length),
            ),
            SpatialShape::Zero => (0.0, 0.0, 0.0),
        }
    }

    pub fn angular(&self, mu: f64) -> f64 {
        match self.angular {
            AngularShape::One => 1.0,
            AngularShape::OnePlusMu => 1.0 + mu,
        }
    }

    pub fn exact(&self, x: f64, mu: f64, length: f64) -> f64 {
        self.spatial(x, length).0 * self.angular(mu)
    }

    pub fn exact_dx(&self, x: f64, mu: f64, length: f64) -> f64 {
        self.spatial(x, length).1 * self.angular(mu)
    }

    /// Cell averages of the exact solution on `grid x ordinates`.
    pub fn cell_averages(&self, grid: &Grid1D, mus: &[f64]) -> PhaseField {
        let l = grid.length();
        PhaseField::from_fn(grid.n_cells(), mus.len(), |i, j| {
            let (a, b) = (grid.edge(i), grid.edge(i + 1));
            integrate(|x| self.exact(x, mus[j], l), a, b) / (b - a)
        })
    }
}

fn slab_nodes(op: &ScatteringOperator) -> Result<&[f64]> {
    match op.quadrature() {
        VelocitySet::Slab(q) => Ok(q.nodes()),
        VelocitySet::Sphere(_) => Err(Error::Argument(
            "manufactured transport sources need a slab quadrature".into(),
        )),
    }
}

/// `mu du/dx + gamma u - sigma (K - I) u` at one point for every ordinate.
pub fn mms_transport_source_at(
    case: &ManufacturedCase,
    coeffs: &ScaledProblem<'_>,
    op: &ScatteringOperator,
    x: f64,
) -> Result<Vec<f64>> {
    let mus = slab_nodes(op)?;
    let l = coeffs.grid().length();
    let u: Vec<f64> = mus.iter().map(|m| case.exact(x, *m, l)).collect();
    let ku = apply_k(op, &u)?;
    let (g, s) = (coeffs.gamma(x), coeffs.sigma(x));
    Ok(mus
        .iter()
        .enumerate()
        .map(|(j, m)| m * case.exact_dx(x, *m, l) + g * u[j] - s * (ku[j] - u[j]))
        .collect())
}

/// Cell averages of the manufactured transport source on the problem grid.
pub fn mms_transport_source(
    case: &ManufacturedCase,
    coeffs: &ScaledProblem<'_>,
    op: &ScatteringOperator,
) -> Result<PhaseField> {
    let grid = coeffs.grid();
    let n = op.len();
    let mut out = PhaseField::zeros(grid.n_cells(), n);
    // three-point Gauss per cell: exact enough for a second-order scheme
    let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
    let weights = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    for i in 0..grid.n_cells() {
        let (a, b) = (grid.edge(i), grid.edge(i + 1));
        for (t, wt) in nodes.iter().zip(weights) {
            let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
            let f = mms_transport_source_at(case, coeffs, op, x)?;
            for j in 0..n {
                out[(i, j)] += wt * f[j];
            }
        }
    }
    Ok(out)
}

/// `-(a u')' + gamma u` with `a = factor / sigma` (`factor = 1/3` for isotropic scattering).
pub fn mms_diffusion_source(
    case: &ManufacturedCase,
    sigma: &CoefficientField,
    gamma: &CoefficientField,
    factor: f64,
    length: f64,
) -> impl Fn(f64) -> f64 {
    let (case, sigma, gamma) = (case.clone(), sigma.clone(), gamma.clone());
    move |x| {
        let (u, du, d2u) = case.spatial(x, length);
        let s = sigma.value(x);
        let a = factor / s;
        let da = -factor * sigma.derivative(x) / (s * s);
        -(a * d2u + da * du) + gamma.value(x) * u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Grid1D, ProblemSpec};
    use crate::velocity::{assemble_scattering, AngularQuadrature, Kernel};

    fn unit_problem() -> ProblemSpec {
        ProblemSpec::new(
            Grid1D::new(1.0, 8).unwrap(),
            CoefficientField::constant(1.0),
            CoefficientField::constant(1.0),
            CoefficientField::constant(0.0),
        )
    }

    fn iso(n: usize) -> ScatteringOperator {
        assemble_scattering(&Kernel::Isotropic, AngularQuadrature::gauss(n).unwrap()).unwrap()
    }

    #[test]
    fn polynomial_case_pointwise() {
        let p = unit_problem();
        let s = p.scale(1.0).unwrap();
        let op = iso(8);
        let case = ManufacturedCase::transport_polynomial();
        let mus = match op.quadrature() {
            VelocitySet::Slab(q) => q.nodes().to_vec(),
            _ => unreachable!(),
        };
        for x in [0.1, 0.5, 0.77] {
            let f = mms_transport_source_at(&case, &s, &op, x).unwrap();
            for (j, mu) in mus.iter().enumerate() {
                let q = x * (1.0 - x);
                let expect =
                    mu * (1.0 - 2.0 * x) * (1.0 + mu) + q * (1.0 + mu) - q * (1.0 - (1.0 + mu));
                assert!((f[j] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn velocity_independent_case_has_no_scattering_term() {
        let p = unit_problem();
        let s = p.scale(1.0).unwrap();
        let op = iso(4);
        let case = ManufacturedCase::diffusion_sine();
        let f = mms_transport_source_at(&case, &s, &op, 0.3).unwrap();
        let mus = [
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_3,
            0.339_981_043_584_856_3,
            0.861_136_311_594_052_6,
        ];
        for (j, mu) in mus.iter().enumerate() {
            let expect = mu * PI * (PI * 0.3).cos() + (PI * 0.3).sin();
            assert!((f[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_case_zero_source() {
        let p = unit_problem();
        let s = p.scale(0.5).unwrap();
        let f = mms_transport_source(&ManufacturedCase::zero(), &s, &iso(4)).unwrap();
        assert!(f.iter().all(|v| *v == 0.0));
    }

    // Oracle: central finite differences of -(a u')' + gamma u at h = 1e-5.
    fn fd_residual(case: &ManufacturedCase, sigma: &CoefficientField, gamma: f64, x: f64) -> f64 {
        let h = 1e-5;
        let u = |x: f64| case.spatial(x, 1.0).0;
        let a = |x: f64| 1.0 / (3.0 * sigma.value(x));
        let flux = |x: f64| a(x) * (u(x + h / 2.0) - u(x - h / 2.0)) / h;
        -(flux(x + h / 2.0) - flux(x - h / 2.0)) / h + gamma * u(x)
    }

    #[test]
    fn diffusion_sine_source() {
        let one = CoefficientField::constant(1.0);
        let f = mms_diffusion_source(
            &ManufacturedCase::diffusion_sine(),
            &one,
            &one,
            1.0 / 3.0,
            1.0,
        );
        for x in [0.2, 0.5, 0.9] {
            let expect = (PI * PI / 3.0 + 1.0) * (PI * x).sin();
            assert!((f(x) - expect).abs() < 1e-12);
            let fd = fd_residual(&ManufacturedCase::diffusion_sine(), &one, 1.0, x);
            assert!((f(x) - fd).abs() < 1e-4);
        }
    }

    #[test]
    fn diffusion_polynomial_source() {
        let one = CoefficientField::constant(1.0);
        let f = mms_diffusion_source(
            &ManufacturedCase::diffusion_polynomial(),
            &one,
            &one,
            1.0 / 3.0,
            1.0,
        );
        for x in [0.2, 0.5, 0.9] {
            assert!((f(x) - (2.0 / 3.0 + x * (1.0 - x))).abs() < 1e-13);
            let fd = fd_residual(&ManufacturedCase::diffusion_polynomial(), &one, 1.0, x);
            assert!((f(x) - fd).abs() < 1e-4);
        }
        let z = mms_diffusion_source(&ManufacturedCase::zero(), &one, &one, 1.0 / 3.0, 1.0);
        assert_eq!(z(0.4), 0.0);
    }

    #[test]
    fn variable_sigma_matches_finite_differences() {
        let sigma = CoefficientField::sine(1.0, 0.5, 1.0).unwrap();
        let one = CoefficientField::constant(1.0);
        let case = ManufacturedCase::diffusion_sine();
        let f = mms_diffusion_source(&case, &sigma, &one, 1.0 / 3.0, 1.0);
        for x in [0.15, 0.4, 0.66] {
            assert!((f(x) - fd_residual(&case, &sigma, 1.0, x)).abs() < 1e-4);
        }
    }

    #[test]
    fn exact_solutions_vanish_on_boundary() {
        for case in [
            ManufacturedCase::transport_sine(),
            ManufacturedCase::transport_polynomial(),
        ] {
            for mu in [-0.9, -0.1, 0.4] {
                assert!(case.exact(0.0, mu, 1.0).abs() < 1e-15);
                assert!(case.exact(1.0, mu, 1.0).abs() < 1e-15);
            }
        }
    }
}
