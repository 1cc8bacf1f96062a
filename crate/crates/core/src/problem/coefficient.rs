use serde::Serialize;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Five-point Gauss-Legendre rule on `[-1, 1]`.
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `int_a^b f` with the five-point Gauss rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS)
        .map(|(x, w)| w * f(m + r * x))
        .sum::<f64>()
        * r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `values[k]` on `[breakpoints[k-1], breakpoints[k])`; right-continuous.
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `mean + amplitude * sin(2 pi frequency x + phase)`.
    Sine {
        mean: f64,
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

/// A scalar field on the slab with recorded bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientField {
    profile: Profile,
    factor: f64,
}

impl CoefficientField {
    pub fn new(profile: Profile) -> Result<Self> {
        match &profile {
            Profile::Constant { value } if !value.is_finite() => {
                return Err(Error::Validation(format!("non-finite constant {value}")));
            }
            Profile::Piecewise {
                breakpoints,
                values,
            } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::Validation(format!(
                        "piecewise field needs one more value than breakpoints ({} values, {} breakpoints)",
                        values.len(),
                        breakpoints.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Validation(
                        "breakpoints must be strictly increasing".into(),
                    ));
                }
                if values.iter().chain(breakpoints).any(|v| !v.is_finite()) {
                    return Err(Error::Validation(
                        "piecewise field has non-finite entries".into(),
                    ));
                }
            }
            Profile::Sine {
                mean,
                amplitude,
                frequency,
                phase,
            } => {
                if ![mean, amplitude, frequency, phase]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    return Err(Error::Validation(
                        "sine profile has non-finite parameters".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(Self {
            profile,
            factor: 1.0,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Profile::Constant { value }).expect("finite constant")
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(Profile::Piecewise {
            breakpoints,
            values,
        })
    }

    pub fn sine(mean: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        Self::new(Profile::Sine {
            mean,
            amplitude,
            frequency,
            phase: 0.0,
        })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// Same profile with all values multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            profile: self.profile.clone(),
            factor: self.factor * factor,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.factor
            * match &self.profile {
                Profile::Constant { value } => *value,
                Profile::Piecewise {
                    breakpoints,
                    values,
                } => values[breakpoints.partition_point(|b| *b <= x)],
                Profile::Sine {
                    mean,
                    amplitude,
                    frequency,
                    phase,
                } => mean + amplitude * (2.0 * PI * frequency * x + phase).sin(),
            }
    }

    /// Derivative away from jumps (zero for piecewise-constant fields).
    pub fn derivative(&self, x: f64) -> f64 {
        self.factor
            * match &self.profile {
                Profile::Constant { .. } | Profile::Piecewise { .. } => 0.0,
                Profile::Sine {
                    amplitude,
                    frequency,
                    phase,
                    ..
                } => {
                    let k = 2.0 * PI * frequency;
                    amplitude * k * (k * x + phase).cos()
                }
            }
    }

    /// `(c_lo, c_hi)` over the whole line.
    pub fn bounds(&self) -> (f64, f64) {
        let (lo, hi) = match &self.profile {
            Profile::Constant { value } => (*value, *value),
            Profile::Piecewise { values, .. } => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            Profile::Sine {
                mean, amplitude, ..
            } => (mean - amplitude.abs(), mean + amplitude.abs()),
        };
        let (a, b) = (self.factor * lo, self.factor * hi);
        (a.min(b), a.max(b))
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(&self.profile, Profile::Piecewise { values, .. } if values.windows(2).any(|w| w[0] != w[1]))
    }

    fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.profile {
            Profile::Piecewise { breakpoints, .. } => breakpoints
                .iter()
                .copied()
                .filter(|x| *x > a && *x < b)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// `int_a^b value`, exact for piecewise-constant fields.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut pts = vec![a];
        pts.extend(self.breakpoints_in(a, b));
        pts.push(b);
        pts.windows(2)
            .map(|w| match &self.profile {
                Profile::Sine { .. } => {
                    // two panels keep the rule accurate for coarse cells
                    let m = 0.5 * (w[0] + w[1]);
                    integrate(|x| self.value(x), w[0], m) + integrate(|x| self.value(x), m, w[1])
                }
                _ => (w[1] - w[0]) * self.value(0.5 * (w[0] + w[1])),
            })
            .sum()
    }

    pub fn average(&self, a: f64, b: f64) -> f64 {
        self.integral(a, b) / (b - a)
    }

    /// `int_a^b value * g` split at the field's jumps.
    pub fn weighted_integral(&self, g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let mut pts = vec![a];
        pts.extend(self.breakpoints_in(a, b));
        pts.push(b);
        pts.windows(2)
            .map(|w| integrate(|x| self.value(x) * g(x), w[0], w[1]))
            .sum()
    }

    /// Require `c_lo > 0`, as for absorption and scattering coefficients.
    pub fn require_positive(&self, name: &str) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::Validation(format!(
                "{name} must be bounded below by a positive constant; bounds are [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_lookup_and_bounds() {
        let f = CoefficientField::piecewise(vec![0.5], vec![1.0, 4.0]).unwrap();
        assert_eq!(f.value(0.25), 1.0);
        assert_eq!(f.value(0.5), 4.0);
        assert_eq!(f.bounds(), (1.0, 4.0));
        assert!(!f.is_smooth());
        assert!((f.integral(0.0, 1.0) - 2.5).abs() < 1e-15);
        assert!((f.average(0.4, 0.6) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn sine_integral_and_derivative() {
        let f = CoefficientField::sine(1.0, 0.5, 1.0).unwrap();
        assert!((f.integral(0.0, 1.0) - 1.0).abs() < 1e-12);
        let h = 1e-6;
        for x in [0.1, 0.33, 0.8] {
            let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            assert!((fd - f.derivative(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn bounds_hold_on_refined_sampling() {
        let fields = [
            CoefficientField::sine(1.0, 0.5, 1.0).unwrap(),
            CoefficientField::piecewise(vec![0.3, 0.7], vec![2.0, 0.5, 1.0]).unwrap(),
            CoefficientField::constant(3.0).scaled(0.1),
        ];
        for f in &fields {
            let (lo, hi) = f.bounds();
            for k in 0..=1000 {
                let v = f.value(k as f64 / 1000.0);
                assert!(v >= lo - 1e-15 && v <= hi + 1e-15);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(CoefficientField::piecewise(vec![0.5], vec![1.0]).is_err());
        assert!(CoefficientField::piecewise(vec![0.5, 0.2], vec![1.0, 2.0, 3.0]).is_err());
        assert!(CoefficientField::constant(0.0)
            .require_positive("gamma")
            .is_err());
        assert!(CoefficientField::constant(1.0)
            .require_positive("gamma")
            .is_ok());
    }
}
