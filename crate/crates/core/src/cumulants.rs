//! Finite-n cumulants of linear statistics and their two-sided limits.
//!
//! For a banded `B` and the projection `P_n`,
//!
//! ```text
//! C_m^(n)(B) = Σ_{j=1}^m (-1)^{j+1}/j  Σ_{l_1+…+l_j=m, l_i≥1}
//!              (Tr B^{l_1}P_n ··· B^{l_j}P_n − Tr B^m P_n) / (l_1!···l_j!)
//! ```
//!
//! for `m ≥ 2`, and `C_1 = Tr B P_n`. Each bracket only sees entries of `B`
//! within `band · m` of the cut, so `C_m^(n)(B) = D_m(W)` where `W` is the
//! window of radius `band · m` around the cut and `P_n` is replaced by the
//! projection `P_-` onto the negative indices.

use serde::{Deserialize, Serialize};

use crate::banded::{dense_powers, dense_trace_difference, window_extract, BandedMatrix, KahanSum, Window};
use crate::dense::{leading_mask, log_regularized_det};
use crate::error::{Error, Result};
use crate::symbols::LaurentSymbol;

pub use crate::banded::DEFAULT_MAX_ORDER;

/// All compositions of `m`, grouped by the number of parts `j` and listed
/// lexicographically within each group.
pub fn compositions(m: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for l in 1..=rest.saturating_sub(parts - 1) {
            cur.push(l);
            rec(rest - l, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for j in 1..=m {
        rec(m, j, &mut Vec::new(), &mut out);
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `D_m` of a finite dense block whose kept coordinates are flagged in `keep`.
fn dm_dense(f: &nalgebra::DMatrix<f64>, keep: &[bool], m: usize) -> f64 {
    let powers = dense_powers(f, m);
    let mut acc = KahanSum::default();
    for ls in compositions(m) {
        let j = ls.len();
        if j == 1 {
            continue; // the bracket vanishes identically
        }
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let weight: f64 = ls.iter().map(|&l| factorial(l)).product();
        acc.add(sign / j as f64 * dense_trace_difference(&powers, keep, &ls) / weight);
    }
    acc.value()
}

fn check_order(m: usize, min: usize, max_order: usize) -> Result<()> {
    if m < min {
        return Err(Error::InvalidArgument(format!("cumulant order must be >= {min}, got {m}")));
    }
    if m > max_order {
        return Err(Error::OrderOverflow { order: m, max: max_order });
    }
    Ok(())
}

/// Window radius needed for the order-`m` cumulant of `b`.
pub fn window_radius(b: &BandedMatrix, m: usize) -> usize {
    (b.bandwidth() * m).max(1)
}

/// `C_m^(n)(B)`, exact up to rounding.
pub fn cumulant(b: &BandedMatrix, n: usize, m: usize, max_order: usize) -> Result<f64> {
    check_order(m, 1, max_order)?;
    if m == 1 {
        return Ok(b.power_trace(1, n));
    }
    let w = window_extract(b, n + 1, window_radius(b, m));
    Ok(dm_window(&w, m))
}

/// `D_m(F)` for a finite two-sided window with `P_-` the projection onto
/// negative indices.
pub fn dm(w: &Window, m: usize, max_order: usize) -> Result<f64> {
    check_order(m, 2, max_order)?;
    Ok(dm_window(w, m))
}

fn dm_window(w: &Window, m: usize) -> f64 {
    let r = w.radius() as i64;
    let keep: Vec<bool> = (-r..=r).map(|i| i < 0).collect();
    dm_dense(w.entries(), &keep, m)
}

/// The a priori bound `(m^{3/2} e^m / √(2π)) ‖B‖^{m-2} ‖[B, P_n]‖₂²`.
pub fn cumulant_bound(b: &BandedMatrix, n: usize, m: usize) -> Result<f64> {
    let norm = b.norm_bound().ok_or(Error::UnboundedOperator)?;
    let mf = m as f64;
    let constant = mf.powf(1.5) * mf.exp() / (2.0 * std::f64::consts::PI).sqrt();
    let hs = crate::banded::commutator_hs_norm_sq(b, n);
    if hs == 0.0 {
        return Ok(0.0);
    }
    Ok(constant * norm.powi(m as i32 - 2) * hs)
}

/// Largest admissible `|z|` for the generating function, `1 / (3‖B‖)`.
pub fn admissible_radius(b: &BandedMatrix) -> Result<f64> {
    let norm = b.norm_bound().ok_or(Error::UnboundedOperator)?;
    Ok(if norm == 0.0 { f64::INFINITY } else { 1.0 / (3.0 * norm) })
}

/// Log-values of `exp(-z Tr B P_n) det(I + P_n(e^{zB} - I)P_n)` for each `z`,
/// evaluated on dense truncations grown until the value is stable.
pub fn generating_function(b: &BandedMatrix, n: usize, zs: &[f64]) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-9;
    const MAX_DOUBLINGS: usize = 8;
    let radius = admissible_radius(b)?;
    if let Some(&z) = zs.iter().find(|z| z.abs() > radius) {
        return Err(Error::OutsideRadius { z: z.abs(), radius });
    }
    let mut size = n + b.bandwidth().max(1) * 8;
    let keep_for = |size: usize| leading_mask(size, n);
    let eval = |size: usize| -> Vec<f64> {
        let f = b.dense_block(1, size);
        let keep = keep_for(size);
        zs.iter().map(|&z| log_regularized_det(&f, &keep, z)).collect()
    };
    let mut prev = eval(size);
    for _ in 0..MAX_DOUBLINGS {
        size *= 2;
        let next = eval(size);
        let change = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::SectionNotConverged(format!("generating function still moving after truncation size {size}")))
}

/// Log-values of `exp(-z Tr F P_-) det(I + P_-(e^{zF} - I)P_-)` for a
/// finite window; no truncation is involved.
pub fn generating_function_window(w: &Window, zs: &[f64]) -> Vec<f64> {
    let r = w.radius() as i64;
    let keep: Vec<bool> = (-r..=r).map(|i| i < 0).collect();
    zs.iter().map(|&z| log_regularized_det(w.entries(), &keep, z)).collect()
}

/// Cumulants at a cut together with their predicted limits and bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub n: usize,
    pub orders: Vec<usize>,
    pub values: Vec<f64>,
    /// `½ Σ k s_k s_{-k}` for `m = 2`, `0` for `m ≥ 3`, absent for `m = 1` or
    /// when no Laurent right limit is known.
    pub limits: Vec<Option<f64>>,
    /// Absent in unbounded-operator mode and for `m = 1`.
    pub bounds: Vec<Option<f64>>,
    pub window_radius_used: usize,
}

impl CumulantReport {
    /// `symbol` is the symbol of the right limit of `b` itself (for `b = Q(J)`
    /// pass `Q ∘ s`).
    pub fn compute(
        b: &BandedMatrix,
        n: usize,
        orders: &[usize],
        symbol: Option<&LaurentSymbol>,
        max_order: usize,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(orders.len());
        let mut limits = Vec::with_capacity(orders.len());
        let mut bounds = Vec::with_capacity(orders.len());
        for &m in orders {
            values.push(cumulant(b, n, m, max_order)?);
            limits.push(match (m, symbol) {
                (1, _) | (_, None) => None,
                (2, Some(s)) => Some(s.half_szego_exponent()),
                (_, Some(_)) => Some(0.0),
            });
            bounds.push(if m >= 2 { cumulant_bound(b, n, m).ok() } else { None });
        }
        let window_radius_used = orders.iter().map(|&m| window_radius(b, m)).max().unwrap_or(0);
        Ok(Self { n, orders: orders.to_vec(), values, limits, bounds, window_radius_used })
    }

    pub fn value(&self, m: usize) -> Option<f64> {
        self.orders.iter().position(|&o| o == m).map(|i| self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::{commutator_trace_sq, trace_product};

    fn cheb() -> BandedMatrix {
        BandedMatrix::jacobi(|_| 1.0, |_| 0.0).with_bound_hint(2.0)
    }

    #[test]
    fn composition_counts() {
        for m in 1..=8 {
            assert_eq!(compositions(m).len(), 1 << (m - 1));
        }
        assert_eq!(compositions(3), vec![vec![3], vec![1, 2], vec![2, 1], vec![1, 1, 1]]);
    }

    #[test]
    fn chebyshev_constants() {
        let b = cheb();
        assert!((cumulant(&b, 10, 2, 8).unwrap() - 0.5).abs() < 1e-14);
        assert!(cumulant(&b, 10, 3, 8).unwrap().abs() < 1e-12);
        assert!(cumulant(&b, 10, 4, 8).unwrap().abs() < 1e-12);
    }

    #[test]
    fn first_cumulant_is_trace() {
        let b = BandedMatrix::diagonal(|k| k as f64);
        assert_eq!(cumulant(&b, 4, 1, 8).unwrap(), 10.0);
        for m in 2..=4 {
            assert_eq!(cumulant(&b, 4, m, 8).unwrap(), 0.0);
        }
    }

    #[test]
    fn variance_identity() {
        let b = BandedMatrix::jacobi(|k| 1.0 + 0.1 * (k as f64).sin(), |k| (k as f64).cos());
        for n in 1..8 {
            let c2 = cumulant(&b, n, 2, 8).unwrap();
            let t2 = trace_product(&b, n, &[2], 8).unwrap();
            let t11 = trace_product(&b, n, &[1, 1], 8).unwrap();
            assert!((2.0 * c2 - (t2 - t11)).abs() < 1e-12);
            assert!((2.0 * c2 + 0.5 * commutator_trace_sq(&b, n)).abs() < 1e-12);
        }
    }

    #[test]
    fn dm_of_laurent_truncation() {
        let w = Window::laurent(&LaurentSymbol::jacobi(1.0, 0.0), 6);
        assert!((dm(&w, 2, 8).unwrap() - 0.5).abs() < 1e-14);
        assert!(dm(&w, 4, 8).unwrap().abs() < 1e-12);
        let w8 = Window::laurent(&LaurentSymbol::jacobi(1.0, 0.0), 8);
        assert!((dm(&w8, 4, 8).unwrap() - dm(&w, 4, 8).unwrap()).abs() < 1e-12);
        assert!(dm(&w, 1, 8).is_err());
    }

    #[test]
    fn bound_for_chebyshev() {
        let bound = cumulant_bound(&cheb(), 10, 2).unwrap();
        let expected = 2f64.powf(1.5) * 2f64.exp() / (2.0 * std::f64::consts::PI).sqrt() * 2.0;
        assert!((bound - expected).abs() < 1e-12);
        assert!((bound - 16.67).abs() < 1e-2);
        let diag = BandedMatrix::diagonal(|k| k as f64).with_bound_hint(1.0);
        assert_eq!(cumulant_bound(&diag, 3, 3).unwrap(), 0.0);
        let unbounded = BandedMatrix::jacobi(|_| 1.0, |_| 0.0);
        assert!(matches!(cumulant_bound(&unbounded, 3, 2), Err(Error::UnboundedOperator)));
    }

    #[test]
    fn order_overflow() {
        let err = cumulant(&cheb(), 5, 9, 8).unwrap_err();
        assert!(err.to_string().contains("maximum order 8"));
    }

    #[test]
    fn generating_function_small_z() {
        let b = cheb();
        let zs = [0.0, 0.02, -0.02, 0.04];
        let g = generating_function(&b, 10, &zs).unwrap();
        assert_eq!(g[0], 0.0);
        for (z, v) in zs.iter().zip(&g).skip(1) {
            // C3 = 0, so the error is O(z^4)
            assert!((v / (z * z) - 0.5).abs() < 1e-4, "z={z} v={v}");
        }
        assert!(matches!(generating_function(&b, 10, &[0.5]), Err(Error::OutsideRadius { .. })));
    }

    #[test]
    fn report_json_fields() {
        let s = LaurentSymbol::jacobi(1.0, 0.0);
        let r = CumulantReport::compute(&cheb(), 10, &[1, 2, 3], Some(&s), 8).unwrap();
        assert_eq!(r.limits, vec![None, Some(0.5), Some(0.0)]);
        let js = serde_json::to_value(&r).unwrap();
        for key in ["n", "orders", "values", "limits", "bounds", "window_radius_used"] {
            assert!(js.get(key).is_some(), "{key}");
        }
    }
}
