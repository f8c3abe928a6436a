//! Dense real polynomials in the monomial basis.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Real polynomial `c_0 + c_1 x + ... + c_d x^d`, coefficients stored in
/// ascending order. Trailing zeros are trimmed, the zero polynomial has no
/// coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The identity polynomial `x`.
    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    pub fn monomial(degree: usize) -> Self {
        let mut c = vec![0.0; degree + 1];
        c[degree] = 1.0;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Degree; the zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading_coeff(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// `self(other(x))`.
    pub fn compose(&self, other: &Polynomial) -> Self {
        self.coeffs.iter().rev().fold(Polynomial::zero(), |acc, &c| &(&acc * other) + &Polynomial::constant(c))
    }

    /// All real roots, sorted, located by bisection between the critical
    /// points of the polynomial (found recursively). Roots of even
    /// multiplicity are reported when the polynomial touches zero within
    /// `tol` at a critical point.
    pub fn real_roots(&self, tol: f64) -> Vec<f64> {
        let d = self.degree();
        if self.is_zero() || d == 0 {
            return Vec::new();
        }
        if d == 1 {
            return vec![-self.coeffs[0] / self.coeffs[1]];
        }
        let bound = self.cauchy_bound();
        let mut knots = vec![-bound];
        knots.extend(self.derivative().real_roots(tol).into_iter().filter(|x| x.abs() < bound));
        knots.push(bound);

        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let mut roots: Vec<f64> = Vec::new();
        let push = |x: f64, roots: &mut Vec<f64>| {
            if roots.last().is_none_or(|&r| (x - r).abs() > tol.max(1e-12)) {
                roots.push(x);
            }
        };
        for w in knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (flo, fhi) = (self.eval(lo), self.eval(hi));
            if flo.abs() <= tol * scale {
                push(lo, &mut roots);
            }
            if flo * fhi < 0.0 {
                push(bisect(|x| self.eval(x), lo, hi, tol), &mut roots);
            }
        }
        let last = *knots.last().unwrap();
        if self.eval(last).abs() <= tol * scale {
            push(last, &mut roots);
        }
        roots
    }

    fn cauchy_bound(&self) -> f64 {
        let lead = self.leading_coeff().abs();
        1.0 + self.coeffs[..self.coeffs.len() - 1].iter().fold(0.0_f64, |m, c| m.max(c.abs() / lead))
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * 1e-3 || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}
