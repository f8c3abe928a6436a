//! Test functions `f` for linear statistics `X_f = Σ f(x_i)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::symbols::{fourier_of_composition, fourier_of_polynomial, FourierCoefficients, LaurentSymbol};

/// Named test functions. All but [`TestFunction::Indicator`] are `C¹`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `sin(freq · x)`
    Sin {
        freq: f64,
    },
    /// `cos(freq · x)`
    Cos {
        freq: f64,
    },
    /// `exp(rate · x)`
    Exp {
        rate: f64,
    },
    /// C¹ bump equal to 1 on `[lo, hi]`, 0 outside `[lo - width, hi + width]`,
    /// with smoothstep ramps.
    SmoothIndicator {
        lo: f64,
        hi: f64,
        width: f64,
    },
    /// `1{x <= threshold}`: a jump function, used only as a diagnostic.
    Indicator {
        threshold: f64,
    },
}

impl TestFunction {
    pub fn identity() -> Self {
        TestFunction::Polynomial { coeffs: vec![0.0, 1.0] }
    }

    pub fn polynomial(p: &Polynomial) -> Self {
        TestFunction::Polynomial { coeffs: p.coeffs().to_vec() }
    }

    pub fn as_polynomial(&self) -> Option<Polynomial> {
        match self {
            TestFunction::Polynomial { coeffs } => Some(Polynomial::new(coeffs.clone())),
            _ => None,
        }
    }

    pub fn is_c1(&self) -> bool {
        match self {
            TestFunction::Indicator { .. } => false,
            TestFunction::SmoothIndicator { width, lo, hi } => *width > 0.0 && lo <= hi,
            _ => true,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
            TestFunction::Sin { freq } => (freq * x).sin(),
            TestFunction::Cos { freq } => (freq * x).cos(),
            TestFunction::Exp { rate } => (rate * x).exp(),
            TestFunction::SmoothIndicator { lo, hi, width } => {
                if x < *lo {
                    1.0 - smoothstep((lo - x) / width)
                } else if x > *hi {
                    1.0 - smoothstep((x - hi) / width)
                } else {
                    1.0
                }
            }
            TestFunction::Indicator { threshold } => {
                if x <= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative where it exists; the jump of an indicator is reported as 0.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            TestFunction::Polynomial { coeffs } => Polynomial::new(coeffs.clone()).derivative().eval(x),
            TestFunction::Sin { freq } => freq * (freq * x).cos(),
            TestFunction::Cos { freq } => -freq * (freq * x).sin(),
            TestFunction::Exp { rate } => rate * (rate * x).exp(),
            TestFunction::SmoothIndicator { lo, hi, width } => {
                if x < *lo {
                    smoothstep_prime((lo - x) / width) / width
                } else if x > *hi {
                    -smoothstep_prime((x - hi) / width) / width
                } else {
                    0.0
                }
            }
            TestFunction::Indicator { .. } => 0.0,
        }
    }

    /// Fourier coefficients of `f ∘ s`. Polynomials go through exact symbol
    /// arithmetic (any symbol); other C¹ functions need a symbol that is
    /// real on the unit circle.
    pub fn fourier(&self, s: &LaurentSymbol, truncation: usize, grid: usize) -> Result<FourierCoefficients> {
        if let Some(p) = self.as_polynomial() {
            return Ok(fourier_of_polynomial(&p, s));
        }
        if !self.is_c1() {
            return Err(Error::InvalidArgument(
                "test function is not C1; limiting variances are only defined for C1 functions".into(),
            ));
        }
        fourier_of_composition(|x| self.eval(x), s, truncation, grid)
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn smoothstep_prime(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        6.0 * t * (1.0 - t)
    } else {
        0.0
    }
}

/// Closed interval `E` on which a C¹ test function is prescribed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Checks that `s(e^{iθ})` stays in the interval on a fine θ-grid.
    pub fn covers_symbol(&self, s: &LaurentSymbol, grid: usize) -> bool {
        (0..grid).all(|j| {
            let t = 2.0 * PI * j as f64 / grid as f64;
            let v = s.eval_on_circle(t);
            v >= self.lo - 1e-12 && v <= self.hi + 1e-12
        })
    }
}
