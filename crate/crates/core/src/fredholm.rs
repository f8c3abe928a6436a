//! Finite-section checks of the regularised Toeplitz determinant limit
//!
//! ```text
//! exp(-Tr P_n T(s)) det(I + P_n (e^{T(s)} - I) P_n)  →  exp(½ Σ_{k≥1} k s_k s_{-k})
//! ```
//!
//! and of the identity `det e^{-T(s₊)} e^{T(s)} e^{-T(s₋)} = exp(½ Σ k s_k s_{-k})`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{expm, leading_mask, log_det, log_regularized_det};
use crate::error::{Error, Result};
use crate::symbols::LaurentSymbol;

/// Change in the left-hand side accepted as converged.
pub const SECTION_TOL: f64 = 1e-8;
const MAX_DOUBLINGS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSection {
    pub size: usize,
    pub matrix: DMatrix<f64>,
    pub provenance: String,
}

fn check_size(s: &LaurentSymbol, size: usize) -> Result<()> {
    let need = s.max_degree().abs().max(s.min_degree().abs()) as usize + 1;
    if size < need {
        return Err(Error::InvalidArgument(format!("section size {size} is below max(p, q) + 1 = {need}")));
    }
    Ok(())
}

/// `T(s)[j, k] = s_{j-k}` on `1..=N`.
pub fn toeplitz_section(s: &LaurentSymbol, size: usize) -> Result<FiniteSection> {
    check_size(s, size)?;
    Ok(FiniteSection {
        size,
        matrix: DMatrix::from_fn(size, size, |i, j| s.coeff(i as i64 - j as i64)),
        provenance: "T(s)".into(),
    })
}

/// `H(s)[j, k] = s_{j+k-1}` on `1..=N`.
pub fn hankel_section(s: &LaurentSymbol, size: usize) -> Result<FiniteSection> {
    check_size(s, size)?;
    Ok(FiniteSection {
        size,
        matrix: DMatrix::from_fn(size, size, |i, j| s.coeff(i as i64 + j as i64 + 1)),
        provenance: "H(s)".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SzegoReport {
    pub n: usize,
    pub schedule: Vec<usize>,
    pub lhs_per_section: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

fn section_lhs(s: &LaurentSymbol, n: usize, size: usize) -> f64 {
    let t = DMatrix::from_fn(size, size, |i, j| s.coeff(i as i64 - j as i64));
    log_regularized_det(&t, &leading_mask(size, n), 1.0).exp()
}

/// Left side on sections `N, 2N, …` until two successive values agree to
/// [`SECTION_TOL`]; right side in closed form.
pub fn szego_limit_check(s: &LaurentSymbol, n: usize, size: usize) -> Result<SzegoReport> {
    if n == 0 || size <= n {
        return Err(Error::InvalidArgument(format!("need 1 <= n < N, got n = {n}, N = {size}")));
    }
    check_size(s, size)?;
    let rhs = s.half_szego_exponent().exp();
    let mut schedule = vec![size];
    let mut lhs = vec![section_lhs(s, n, size)];
    for _ in 0..MAX_DOUBLINGS {
        let next = 2 * schedule.last().unwrap();
        let v = section_lhs(s, n, next);
        let prev = *lhs.last().unwrap();
        schedule.push(next);
        lhs.push(v);
        if (v - prev).abs() < SECTION_TOL {
            let residual = (v - rhs).abs();
            return Ok(SzegoReport { n, schedule, lhs_per_section: lhs, lhs: v, rhs, residual });
        }
    }
    Err(Error::SectionNotConverged(format!("lhs per section {schedule:?} = {lhs:?} did not settle to {SECTION_TOL:e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HhpReport {
    pub schedule: Vec<usize>,
    pub det_per_section: Vec<f64>,
    pub det: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `det` of the top-left `N/2` block of `e^{-T_N(s₊)} e^{T_N(s)} e^{-T_N(s₋)}`.
/// The full `N`-section determinant is identically one; the leading block
/// carries the trace-class part of the operator product.
fn hhp_det(s: &LaurentSymbol, size: usize) -> f64 {
    let sec = |sym: &LaurentSymbol| DMatrix::from_fn(size, size, |i, j| sym.coeff(i as i64 - j as i64));
    let (sp, sm) = (s.positive_part(), s.negative_part());
    let mats: Vec<DMatrix<f64>> =
        [(sp, -1.0), (s.clone(), 1.0), (sm, -1.0)].par_iter().map(|(sym, z)| expm(&(sec(sym) * *z))).collect();
    let x = &mats[0] * &mats[1] * &mats[2];
    let half = size / 2;
    let (sign, ld) = log_det(&x.view((0, 0), (half, half)).into_owned());
    sign * ld.exp()
}

/// `|det(e^{-T(s₊)} e^{T(s)} e^{-T(s₋)}) − exp(½ Σ k s_k s_{-k})|` evaluated
/// at sections `N` and `2N`.
pub fn hhp_check(s: &LaurentSymbol, size: usize) -> Result<HhpReport> {
    if size < 4 {
        return Err(Error::InvalidArgument("section size must be at least 4".into()));
    }
    check_size(s, size / 2)?;
    let rhs = s.half_szego_exponent().exp();
    let schedule = vec![size, 2 * size];
    let dets: Vec<f64> = schedule.iter().map(|&n| hhp_det(s, n)).collect();
    let change = (dets[1] - dets[0]).abs();
    if change > 1e-6 {
        return Err(Error::SectionNotConverged(format!(
            "determinant moved by {change:e} between sections {schedule:?}"
        )));
    }
    let det = dets[1];
    Ok(HhpReport { schedule, det_per_section: dets, det, rhs, residual: (det - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cheb() -> LaurentSymbol {
        LaurentSymbol::jacobi(1.0, 0.0)
    }

    #[test]
    fn sections_of_free_symbol() {
        let t = toeplitz_section(&cheb(), 3).unwrap().matrix;
        assert_eq!(t, DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]));
        let h = hankel_section(&cheb(), 3).unwrap().matrix;
        assert_eq!(h[(0, 0)], 1.0);
        assert_eq!(h.iter().filter(|x| **x != 0.0).count(), 1);
        assert!(toeplitz_section(&LaurentSymbol::monomial(3, 1.0), 3).is_err());
    }

    #[test]
    fn analytic_symbol_has_trivial_limit() {
        let s = LaurentSymbol::from_coeffs([(0, 0.4), (1, 0.7), (2, -0.2)]);
        let r = szego_limit_check(&s, 10, 40).unwrap();
        assert_eq!(r.rhs, 1.0);
        assert!(r.residual < 1e-10);
        let h = hhp_check(&s, 20).unwrap();
        assert!(h.residual < 1e-10);
    }

    #[test]
    fn half_symbol_limit() {
        let r = szego_limit_check(&cheb().scale(0.5), 30, 120).unwrap();
        assert!((r.rhs - (0.125f64).exp()).abs() < 1e-15);
        assert!(r.residual < 1e-3);
    }

    #[test]
    fn hhp_free_symbol() {
        let r = hhp_check(&cheb(), 200).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
    }
}
