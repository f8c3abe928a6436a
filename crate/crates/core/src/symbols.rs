//! Laurent symbols and the limiting variance functional.
//!
//! A symbol `s(w) = Σ_{l=-q}^{p} s_l w^l` describes a Laurent (two-sided
//! Toeplitz) matrix `L(s)[j,k] = s_{j-k}`. When `L(s)` is the right limit
//! of a recurrence matrix, the fluctuations of `X_f` are Gaussian with
//! variance `Σ_{k≥1} k f̂_k f̂_{-k}` where `f̂_k` is the `w^k` coefficient
//! of `f(s(w))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Default truncation of Fourier coefficient tables.
pub const DEFAULT_FOURIER_TRUNCATION: usize = 64;
/// Default number of quadrature nodes on the circle.
pub const DEFAULT_FOURIER_GRID: usize = 1024;

/// Tolerance under which a symbol counts as real on the unit circle.
const SYMMETRY_TOL: f64 = 1e-12;

/// Finite Laurent polynomial in canonical form (no stored zeros).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LaurentSymbol {
    #[serde(with = "string_keys")]
    coeffs: BTreeMap<i64, f64>,
}

mod string_keys {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<i64, f64>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<String, f64>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<i64, f64>, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(d)?;
        raw.into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(k, v)| {
                k.trim()
                    .parse::<i64>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("symbol degree `{k}` is not an integer")))
            })
            .collect()
    }
}

impl LaurentSymbol {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_coeffs<I: IntoIterator<Item = (i64, f64)>>(it: I) -> Self {
        let mut s = Self::zero();
        for (k, v) in it {
            *s.coeffs.entry(k).or_insert(0.0) += v;
        }
        s.canonicalize();
        s
    }

    /// `a w + b + a / w`, the symbol of a constant Jacobi matrix.
    pub fn jacobi(a: f64, b: f64) -> Self {
        Self::from_coeffs([(-1, a), (0, b), (1, a)])
    }

    pub fn monomial(degree: i64, c: f64) -> Self {
        Self::from_coeffs([(degree, c)])
    }

    fn canonicalize(&mut self) {
        self.coeffs.retain(|_, v| *v != 0.0);
    }

    pub fn coeff(&self, degree: i64) -> f64 {
        self.coeffs.get(&degree).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest degree `p` with a nonzero coefficient (0 for the zero symbol).
    pub fn max_degree(&self) -> i64 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    /// Lowest degree `-q` with a nonzero coefficient (0 for the zero symbol).
    pub fn min_degree(&self) -> i64 {
        self.coeffs.keys().next().copied().unwrap_or(0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.abs()).sum()
    }

    /// `max_l |s_l - s_{-l}|`; zero iff the symbol is real on `|w| = 1`.
    pub fn asymmetry(&self) -> f64 {
        self.coeffs.iter().map(|(&k, &v)| (v - self.coeff(-k)).abs()).fold(0.0, f64::max)
    }

    pub fn is_real_on_circle(&self) -> bool {
        self.asymmetry() <= SYMMETRY_TOL * self.l1_norm().max(1.0)
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        self.coeffs.iter().map(|(&k, &v)| w.powi(k as i32) * v).sum()
    }

    /// `s(e^{iθ})`, real part only (exact for symbols real on the circle).
    pub fn eval_on_circle(&self, theta: f64) -> f64 {
        self.coeffs.iter().map(|(&k, &v)| v * (k as f64 * theta).cos()).sum()
    }

    /// Analytic part `s_+`: degrees `>= 0`.
    pub fn positive_part(&self) -> Self {
        Self::from_coeffs(self.iter().filter(|(k, _)| *k >= 0))
    }

    /// Co-analytic part `s_-`: degrees `< 0`.
    pub fn negative_part(&self) -> Self {
        Self::from_coeffs(self.iter().filter(|(k, _)| *k < 0))
    }

    /// `s̃(w) = s(1/w)`.
    pub fn reflect(&self) -> Self {
        Self::from_coeffs(self.iter().map(|(k, v)| (-k, v)))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_coeffs(self.iter().map(|(k, v)| (k, v * c)))
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::monomial(0, 1.0), |acc, _| &acc * self)
    }

    /// `p(s(w))` by exact coefficient arithmetic.
    pub fn compose(&self, p: &Polynomial) -> Self {
        p.coeffs().iter().rev().fold(Self::zero(), |acc, &c| &(&acc * self) + &Self::monomial(0, c))
    }

    /// `s_r(w) = s(r w)`, i.e. `s_l ↦ s_l r^l`; the symbol of `D J D^{-1}`
    /// with `D = diag(r^k)`.
    pub fn scaling_conjugation(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("scaling factor must be positive, got {r}")));
        }
        Ok(Self::from_coeffs(self.iter().map(|(k, v)| (k, v * r.powi(k as i32)))))
    }

    /// `½ Σ_{k≥1} k s_k s_{-k}`, the limit of the second cumulant of any
    /// banded matrix with right limit `L(s)`.
    pub fn half_szego_exponent(&self) -> f64 {
        0.5 * self.iter().filter(|(k, _)| *k > 0).map(|(k, v)| k as f64 * v * self.coeff(-k)).sum::<f64>()
    }
}

impl Add for &LaurentSymbol {
    type Output = LaurentSymbol;
    fn add(self, rhs: &LaurentSymbol) -> LaurentSymbol {
        LaurentSymbol::from_coeffs(self.iter().chain(rhs.iter()))
    }
}

impl Sub for &LaurentSymbol {
    type Output = LaurentSymbol;
    fn sub(self, rhs: &LaurentSymbol) -> LaurentSymbol {
        self + &(-rhs)
    }
}

impl Neg for &LaurentSymbol {
    type Output = LaurentSymbol;
    fn neg(self) -> LaurentSymbol {
        self.scale(-1.0)
    }
}

impl Mul for &LaurentSymbol {
    type Output = LaurentSymbol;
    fn mul(self, rhs: &LaurentSymbol) -> LaurentSymbol {
        let mut out = BTreeMap::new();
        for (i, a) in self.iter() {
            for (j, b) in rhs.iter() {
                *out.entry(i + j).or_insert(0.0) += a * b;
            }
        }
        LaurentSymbol::from_coeffs(out)
    }
}

/// Fourier coefficients of `f(s(e^{iθ}))` for `|k| <= K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    #[serde(with = "string_keys")]
    pub values: BTreeMap<i64, f64>,
    pub truncation: usize,
    /// Diagnostic estimate of the dropped part of `Σ k f̂_k f̂_{-k}`; zero
    /// for polynomial `f`.
    pub tail_estimate: f64,
    /// True when the coefficients came from exact symbol arithmetic.
    pub exact: bool,
}

impl FourierCoefficients {
    pub fn get(&self, k: i64) -> f64 {
        self.values.get(&k).copied().unwrap_or(0.0)
    }

    /// `Σ_k |f̂_k|²`.
    pub fn energy(&self) -> f64 {
        self.values.values().map(|v| v * v).sum()
    }
}

/// Exact coefficients of `p(s(w))`; valid for any symbol, symmetric or not.
pub fn fourier_of_polynomial(p: &Polynomial, s: &LaurentSymbol) -> FourierCoefficients {
    let composed = s.compose(p);
    let truncation = composed.max_degree().abs().max(composed.min_degree().abs()) as usize;
    FourierCoefficients {
        values: composed.iter().collect(),
        truncation: truncation.max(1),
        tail_estimate: 0.0,
        exact: true,
    }
}

/// Coefficients `f̂_k = (1/2π) ∫ f(s(e^{iθ})) e^{-ikθ} dθ`, `|k| <= K`, by
/// the trapezoidal rule on `grid` equispaced nodes evaluated with an FFT.
pub fn fourier_of_composition<F>(f: F, s: &LaurentSymbol, truncation: usize, grid: usize) -> Result<FourierCoefficients>
where
    F: Fn(f64) -> f64,
{
    if !s.is_real_on_circle() {
        return Err(Error::NonSymmetricSymbol { asymmetry: s.asymmetry() });
    }
    if truncation == 0 || !grid.is_power_of_two() || grid < 4 * truncation {
        return Err(Error::InvalidArgument(format!(
            "grid must be a power of two >= 4K (K = {truncation}, grid = {grid})"
        )));
    }
    let step = 2.0 * PI / grid as f64;
    let samples: Vec<f64> = (0..grid).map(|j| f(s.eval_on_circle(j as f64 * step))).collect();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(grid).process(&mut buf);
    let scale = 1.0 / grid as f64;
    let coeff = |k: i64| buf[k.rem_euclid(grid as i64) as usize].re * scale;

    let values: BTreeMap<i64, f64> = (-(truncation as i64)..=truncation as i64).map(|k| (k, coeff(k))).collect();

    // Cauchy–Schwarz on the dropped modes: Σ_{k>K} k|f̂_k|² is at most the
    // geometric mean of the tail energies of g and g'.
    let g_energy = samples.iter().map(|x| x * x).sum::<f64>() * scale;
    let dg_energy = (0..grid)
        .map(|j| {
            let next = samples[(j + 1) % grid];
            let prev = samples[(j + grid - 1) % grid];
            ((next - prev) / (2.0 * step)).powi(2)
        })
        .sum::<f64>()
        * scale;
    let kept: f64 = values.values().map(|v| v * v).sum();
    let kept_d: f64 = values.iter().map(|(k, v)| (*k as f64 * v).powi(2)).sum();
    let tail = ((g_energy - kept).max(0.0) * (dg_energy - kept_d).max(0.0)).sqrt();

    Ok(FourierCoefficients { values, truncation, tail_estimate: tail, exact: false })
}

/// `Σ_{k=1}^{K} k f̂_k f̂_{-k}` over the stored coefficients.
pub fn clt_variance(fc: &FourierCoefficients) -> f64 {
    fc.values.iter().filter(|(k, _)| **k > 0).map(|(k, v)| *k as f64 * v * fc.get(-k)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cheb() -> LaurentSymbol {
        LaurentSymbol::jacobi(1.0, 0.0)
    }

    #[test]
    fn square_of_free_symbol() {
        let sq = &cheb() * &cheb();
        assert_eq!(sq, LaurentSymbol::from_coeffs([(-2, 1.0), (0, 2.0), (2, 1.0)]));
    }

    #[test]
    fn negative_part_of_cube() {
        let a = 0.8;
        let cube = LaurentSymbol::jacobi(a, 0.0).pow(3);
        let neg = cube.negative_part();
        let a3 = a * a * a;
        assert!((neg.coeff(-1) - 3.0 * a3).abs() < 1e-15);
        assert!((neg.coeff(-3) - a3).abs() < 1e-15);
        assert_eq!(neg.max_degree(), -1);
        assert_eq!(cube.positive_part().min_degree(), 1);
    }

    #[test]
    fn linear_f_reads_off_symbol() {
        let s = LaurentSymbol::jacobi(0.3, 0.7);
        let fc = fourier_of_polynomial(&Polynomial::identity(), &s);
        assert_eq!(fc.get(0), 0.7);
        assert_eq!(fc.get(1), 0.3);
        assert_eq!(fc.get(-1), 0.3);
        assert_eq!(fc.get(2), 0.0);
    }

    #[test]
    fn square_path_agrees_with_fft() {
        let p = Polynomial::monomial(2);
        let exact = fourier_of_polynomial(&p, &cheb());
        assert_eq!(exact.get(0), 2.0);
        assert_eq!(exact.get(2), 1.0);
        let fft = fourier_of_composition(|x| x * x, &cheb(), 8, 64).unwrap();
        for k in -8..=8 {
            assert!((fft.get(k) - exact.get(k)).abs() < 1e-12);
        }
        assert!((clt_variance(&exact) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn multi_interval_coefficients() {
        let p = 3;
        let s = LaurentSymbol::from_coeffs([(p, 1.0), (-p, 1.0)]);
        let fc = fourier_of_composition(|x| x, &s, 8, 64).unwrap();
        assert!((fc.get(3) - 1.0).abs() < 1e-14);
        assert!((fc.get(-3) - 1.0).abs() < 1e-14);
        assert!(fc.get(1).abs() < 1e-14);
    }

    #[test]
    fn variances_of_linear_statistic() {
        let id = Polynomial::identity();
        assert_eq!(clt_variance(&fourier_of_polynomial(&id, &cheb())), 1.0);
        let half = LaurentSymbol::jacobi(0.5, 0.0);
        assert_eq!(clt_variance(&fourier_of_polynomial(&id, &half)), 0.25);
    }

    #[test]
    fn scaling_conjugation_examples() {
        let s = cheb();
        assert_eq!(s.scaling_conjugation(1.0).unwrap(), s);
        let s2 = s.scaling_conjugation(2.0).unwrap();
        assert_eq!(s2, LaurentSymbol::from_coeffs([(1, 2.0), (-1, 0.5)]));
        assert!(s.scaling_conjugation(0.0).is_err());
    }

    #[test]
    fn refuses_non_symmetric_symbol_for_c1() {
        let s = LaurentSymbol::from_coeffs([(1, 1.0), (-1, 2.0)]);
        let err = fourier_of_composition(f64::sin, &s, 8, 64).unwrap_err();
        assert!(matches!(err, Error::NonSymmetricSymbol { .. }));
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(fourier_of_composition(|x| x, &cheb(), 8, 30).is_err());
        assert!(fourier_of_composition(|x| x, &cheb(), 8, 16).is_err());
    }

    #[test]
    fn json_uses_string_degrees() {
        let s = cheb();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"{"coeffs":{"-1":1.0,"1":1.0}}"#);
        let back: LaurentSymbol = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<LaurentSymbol>(r#"{"coeffs":{"x":1.0}}"#).is_err());
    }

    #[test]
    fn smooth_function_tail_is_small() {
        let fc = fourier_of_composition(|x| (0.5 * x).exp(), &cheb(), 32, 256).unwrap();
        assert!(fc.tail_estimate < 1e-10, "tail {}", fc.tail_estimate);
        // Parseval against the grid mean of |f|^2
        let grid_mean: f64 = (0..4096)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / 4096.0;
                (cheb().eval_on_circle(t)).exp()
            })
            .sum::<f64>()
            / 4096.0;
        assert!((fc.energy() - grid_mean).abs() < 1e-10);
    }
}
