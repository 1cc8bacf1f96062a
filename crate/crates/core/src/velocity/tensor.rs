//! The diffusion tensor of the limit problem.
//!
//! For every cell, `A = (1/sigma) sum_i w_i v_i ((I - K)^+ v^T)(v_i)`. The velocity
//! integral does not depend on the cell, so it is formed once and scaled by `1/sigma`.

use nalgebra::Matrix3;
use serde::Serialize;

use super::quadrature::VelocitySet;
use super::scattering::{pinv_apply, ScatteringOperator};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct DiffusionTensor {
    /// One symmetric 3x3 tensor per cell.
    pub cells: Vec<Matrix3<f64>>,
    /// Smallest eigenvalue over all cells.
    pub coercivity_lb: f64,
    /// Smallest eigenvalue per cell.
    pub cell_min_eigenvalues: Vec<f64>,
}

impl DiffusionTensor {
    /// Per-cell `A_11`, the coefficient of the slab-reduced limit problem.
    pub fn a11(&self) -> Vec<f64> {
        self.cells.iter().map(|a| a[(0, 0)]).collect()
    }
}

/// `sum_i w_i v_i ((I - K)^+ v^T)(v_i)`; equals `I/3` for isotropic scattering.
pub fn velocity_moment_tensor(op: &ScatteringOperator) -> Result<Matrix3<f64>> {
    let quad = op.quadrature();
    let n = quad.len();
    let w = quad.weights();
    let dirs: Vec<[f64; 3]> = (0..n).map(|i| quad.direction(i)).collect();
    let mut t = Matrix3::zeros();
    for col in 0..3 {
        let comp: Vec<f64> = dirs.iter().map(|d| d[col]).collect();
        if comp.iter().all(|c| *c == 0.0) {
            // slab sets carry no transverse components
            continue;
        }
        let u = pinv_apply(op, &comp)?;
        for row in 0..3 {
            t[(row, col)] = (0..n).map(|i| w[i] * dirs[i][row] * u[i]).sum();
        }
    }
    Ok(t)
}

/// Per-cell diffusion tensor for cell values of `sigma`.
pub fn diffusion_tensor(op: &ScatteringOperator, sigma: &[f64]) -> Result<DiffusionTensor> {
    if !matches!(op.quadrature(), VelocitySet::Sphere(_)) {
        return Err(Error::Argument(
            "the full diffusion tensor needs a sphere quadrature".into(),
        ));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::Validation(format!(
            "sigma must be positive and finite, got {s}"
        )));
    }
    let t = velocity_moment_tensor(op)?;
    let t = (t + t.transpose()) * 0.5;
    let t_min = t.symmetric_eigenvalues().min();
    let mut cells = Vec::with_capacity(sigma.len());
    let mut mins = Vec::with_capacity(sigma.len());
    for &s in sigma {
        let lam = t_min / s;
        let floor = (1.0 - 1e-8) / (3.0 * s);
        if lam < floor {
            return Err(Error::Certification(format!(
                "diffusion tensor not coercive: eigenvalue {lam} below 1/(3 sigma) = {}",
                1.0 / (3.0 * s)
            )));
        }
        cells.push(t / s);
        mins.push(lam);
    }
    let coercivity_lb = mins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DiffusionTensor {
        cells,
        coercivity_lb,
        cell_min_eigenvalues: mins,
    })
}

/// `sum_i w_i mu_i ((I - K)^+ mu)_i` on a slab set; the slab analogue of `sigma A_11`.
pub fn slab_diffusion_factor(op: &ScatteringOperator) -> Result<f64> {
    match op.quadrature() {
        VelocitySet::Slab(_) => Ok(velocity_moment_tensor(op)?[(0, 0)]),
        VelocitySet::Sphere(_) => Err(Error::Argument("expected a slab quadrature".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::{assemble_scattering, AngularQuadrature, Kernel, SphereQuadrature};
    use nalgebra::DMatrix;

    fn sphere_op(kernel: Kernel) -> ScatteringOperator {
        let q = SphereQuadrature::product(6, 12).unwrap();
        assemble_scattering(&kernel, q)
            .unwrap()
            .certified()
            .unwrap()
    }

    // Oracle: dense SVD pseudoinverse of I - K in the W^{1/2} frame, then quadrature sums.
    fn dense_oracle(op: &ScatteringOperator) -> Matrix3<f64> {
        let quad = op.quadrature();
        let w = quad.weights();
        let n = w.len();
        let s = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            w[i].sqrt() * (d - op.matrix()[(i, j)]) / w[j].sqrt()
        });
        let pinv = s.pseudo_inverse(1e-10).unwrap();
        let mut t = Matrix3::zeros();
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let vi = quad.direction(i);
                        let vj = quad.direction(j);
                        acc += w[i].sqrt() * vi[a] * pinv[(i, j)] * w[j].sqrt() * vj[b];
                    }
                }
                t[(a, b)] = acc;
            }
        }
        t
    }

    #[test]
    fn isotropic_unit_sigma() {
        let op = sphere_op(Kernel::Isotropic);
        let a = diffusion_tensor(&op, &[1.0, 1.0]).unwrap();
        for c in &a.cells {
            assert!((c - Matrix3::identity() / 3.0).abs().max() < 1e-10);
        }
        assert!((a.coercivity_lb - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn isotropic_scales_with_sigma() {
        let op = sphere_op(Kernel::Isotropic);
        let a = diffusion_tensor(&op, &[2.0]).unwrap();
        assert!((a.cells[0] - Matrix3::identity() / 6.0).abs().max() < 1e-10);
    }

    #[test]
    fn linear_kernel_matches_closed_form_and_oracle() {
        for g in [0.3, 0.5, 0.9] {
            let op = sphere_op(Kernel::Linear { g });
            let a = diffusion_tensor(&op, &[1.0]).unwrap();
            let target = Matrix3::identity() / (3.0 * (1.0 - g));
            let oracle = dense_oracle(&op);
            assert!((oracle - target).abs().max() < 1e-8, "g={g}");
            assert!((a.cells[0] - target).abs().max() < 1e-8, "g={g}");
        }
    }

    #[test]
    fn eigenvalue_window() {
        let op = sphere_op(Kernel::Linear { g: 0.5 });
        let c_k = op.certification().unwrap().c_k;
        let sig = [0.5, 1.0, 3.0];
        let a = diffusion_tensor(&op, &sig).unwrap();
        for (m, s) in a.cells.iter().zip(sig) {
            assert!((m - m.transpose()).abs().max() < 1e-12);
            for ev in m.symmetric_eigenvalues().iter() {
                let lo = 1.0 / (3.0 * s);
                assert!(*ev >= lo * (1.0 - 1e-8) && *ev <= c_k * lo * (1.0 + 1e-8));
            }
        }
    }

    #[test]
    fn rejects_slab_and_bad_sigma() {
        let q = AngularQuadrature::gauss(8).unwrap();
        let op = assemble_scattering(&Kernel::Isotropic, q)
            .unwrap()
            .certified()
            .unwrap();
        assert!(diffusion_tensor(&op, &[1.0]).is_err());
        assert!((slab_diffusion_factor(&op).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let sp = sphere_op(Kernel::Isotropic);
        assert!(diffusion_tensor(&sp, &[0.0]).is_err());
    }

    #[test]
    fn slab_factor_matches_sphere_a11() {
        let q = AngularQuadrature::gauss(16).unwrap();
        let slab = assemble_scattering(&Kernel::Linear { g: 0.5 }, q)
            .unwrap()
            .certified()
            .unwrap();
        let sphere = sphere_op(Kernel::Linear { g: 0.5 });
        let a = diffusion_tensor(&sphere, &[1.0]).unwrap();
        assert!((slab_diffusion_factor(&slab).unwrap() - a.cells[0][(0, 0)]).abs() < 1e-10);
    }
}
