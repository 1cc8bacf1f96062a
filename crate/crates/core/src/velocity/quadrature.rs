//! Discrete velocity sets with weights for the normalized measure.
//!
//! Both rule families integrate the constant function to one: the slab rule
//! represents `dmu/2` on `(-1, 1)`, the sphere rule the uniform probability
//! measure on the unit sphere.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
///
/// Newton iteration on the three-term recurrence, started from the
/// Chebyshev-like guess `cos(pi (i + 3/4) / (n + 1/2))`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre_with_derivative(n, x).1;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` from the Bonnet recurrence.
pub(crate) fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Slab velocity set: cosines `mu_i` with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl AngularQuadrature {
    /// Gauss rule with `n` points (even, at least 2), weights rescaled to `dmu/2`.
    pub fn gauss(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Argument(format!(
                "slab quadrature needs an even number of ordinates >= 2, got {n}"
            )));
        }
        let (nodes, w) = gauss_legendre(n);
        let weights = w.into_iter().map(|w| 0.5 * w).collect();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_i w_i mu_i^k`.
    pub fn moment(&self, k: i32) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * m.powi(k))
            .sum()
    }
}

/// Product rule on the unit sphere: Gauss in the polar cosine (polar axis
/// along `e1`) times the uniform midpoint rule in azimuth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereQuadrature {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    n_polar: usize,
    n_azimuth: usize,
}

impl SphereQuadrature {
    /// Exact for spherical polynomials of degree up to `min(2 n_polar - 1, n_azimuth - 1)`.
    pub fn product(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar < 2 || n_azimuth < 4 {
            return Err(Error::Argument(format!(
                "sphere quadrature needs n_polar >= 2 and n_azimuth >= 4, got {n_polar} x {n_azimuth}"
            )));
        }
        let (mus, wmu) = gauss_legendre(n_polar);
        let mut points = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (mu, wm) in mus.iter().zip(&wmu) {
            let s = (1.0 - mu * mu).sqrt();
            for k in 0..n_azimuth {
                let phi = 2.0 * PI * (k as f64 + 0.5) / n_azimuth as f64;
                points.push([*mu, s * phi.cos(), s * phi.sin()]);
                weights.push(0.5 * wm / n_azimuth as f64);
            }
        }
        Ok(Self {
            points,
            weights,
            n_polar,
            n_azimuth,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_polar, self.n_azimuth)
    }

    pub fn first_moment(&self) -> Vector3<f64> {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(Vector3::zeros(), |acc, (p, w)| acc + *w * Vector3::from(*p))
    }

    pub fn second_moment(&self) -> Matrix3<f64> {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(Matrix3::zeros(), |acc, (p, w)| {
                let v = Vector3::from(*p);
                acc + *w * v * v.transpose()
            })
    }
}

/// Either velocity set, as referenced by a scattering operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VelocitySet {
    Slab(AngularQuadrature),
    Sphere(SphereQuadrature),
}

impl VelocitySet {
    pub fn weights(&self) -> &[f64] {
        match self {
            VelocitySet::Slab(q) => q.weights(),
            VelocitySet::Sphere(q) => q.weights(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights().len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights().is_empty()
    }

    /// Velocity `i` as a 3-vector; slab cosines map to `(mu, 0, 0)`.
    pub fn direction(&self, i: usize) -> [f64; 3] {
        match self {
            VelocitySet::Slab(q) => [q.nodes()[i], 0.0, 0.0],
            VelocitySet::Sphere(q) => q.points()[i],
        }
    }
}

impl From<AngularQuadrature> for VelocitySet {
    fn from(q: AngularQuadrature) -> Self {
        VelocitySet::Slab(q)
    }
}

impl From<SphereQuadrature> for VelocitySet {
    fn from(q: SphereQuadrature) -> Self {
        VelocitySet::Sphere(q)
    }
}
