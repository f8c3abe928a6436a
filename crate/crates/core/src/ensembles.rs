//! Concrete ensembles: coefficient generators, Hahn closed forms, periodic
//! Jacobi matrices and their discriminant, two-matrix symbols, and a
//! Lanczos oracle that recovers recurrence coefficients from a discrete
//! measure.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::banded::{poly_apply, window_extract};
use crate::dpp::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::right_limits::{CoefficientSequence, INDEX_CAP};
use crate::symbols::LaurentSymbol;

/// Ensemble catalog. JSON uses the `variant` tag, e.g.
/// `{"variant":"hahn","alpha":1,"beta":1,"big_n":60,"n":20}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EnsembleSpec {
    /// Constant Jacobi data `a_n ≡ a`, `b_n ≡ b`.
    Chebyshev {
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        b: f64,
    },
    /// Nevai class member `a_n = a + amp_a n^{-power}`, `b_n = b + amp_b n^{-power}`.
    NevaiCustom { a: f64, b: f64, amp_a: f64, amp_b: f64, power: f64 },
    /// `a_n ≡ 1`, `b_n = amp j^{-decay}` at `n = N_j = round(growth^{j²})`, else 0.
    SparseDecaying { amp: f64, decay: f64, growth: f64 },
    /// `a_n ≡ 1`, `b_n = b_tilde` at `n = N_j = scale j²`, else 0.
    SparseFixed { b_tilde: f64, scale: usize },
    /// Blocks `A_1, C_1, A_2, …` of sizes `3^{j²}`, `2^{j²}` with `a = 1`, `½`.
    BlocksExample1,
    /// Blocks `A_j, B_j, C_j, D_j`; `log a_n²` interpolates linearly on `B_j`, `D_j`.
    BlocksExample2,
    /// Rescaled Hahn ensemble of size `n` on the nodes `x / N`, `x = 0..=N`.
    Hahn { alpha: f64, beta: f64, big_n: usize, n: usize },
    /// Family `J^(n)` with `α = A n + alpha0`, `β = B n + beta0`, `N = round(t n)`.
    HahnScaling {
        a_rate: f64,
        b_rate: f64,
        t: f64,
        #[serde(default)]
        alpha0: f64,
        #[serde(default)]
        beta0: f64,
    },
    /// `a_k = a[(k-1) mod p]`, `b_k = b[(k-1) mod p]`.
    Periodic { a: Vec<f64>, b: Vec<f64> },
    /// Gauss nodes of the semicircle law on `[-2, 2]`; its recurrence is
    /// exactly `a = 1`, `b = 0` up to the number of nodes.
    SemicircleDiscrete { nodes: usize },
    /// Symbol-level two-matrix model with `V₁ = x²/2`.
    TwoMatrixSymbolic { v2: Vec<f64>, tau: f64, a: f64, b: f64 },
}

fn one() -> f64 {
    1.0
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        match self {
            EnsembleSpec::Chebyshev { a, .. } if !(*a > 0.0) => bad(format!("chebyshev needs a > 0, got {a}")),
            EnsembleSpec::NevaiCustom { a, power, .. } if !(*a > 0.0) || !(*power > 0.0) => {
                bad("nevai_custom needs a > 0 and power > 0".into())
            }
            EnsembleSpec::SparseDecaying { growth, .. } if !(*growth > 1.0) => {
                bad(format!("sparse_decaying needs growth > 1, got {growth}"))
            }
            EnsembleSpec::SparseFixed { scale, .. } if *scale == 0 => bad("sparse_fixed needs scale >= 1".into()),
            EnsembleSpec::Hahn { alpha, beta, big_n, n } => {
                if !(*alpha > -1.0 && *beta > -1.0) {
                    bad(format!("hahn needs alpha, beta > -1, got ({alpha}, {beta})"))
                } else if n > big_n {
                    bad(format!("hahn needs 0 <= n <= N, got n = {n}, N = {big_n}"))
                } else if *big_n == 0 {
                    bad("hahn needs N >= 1".into())
                } else {
                    Ok(())
                }
            }
            EnsembleSpec::HahnScaling { a_rate, b_rate, t, alpha0, beta0 } => {
                if *a_rate < 0.0 || *b_rate < 0.0 || !(*t > 1.0) || !(*alpha0 > -1.0) || !(*beta0 > -1.0) {
                    bad("hahn_scaling needs A, B >= 0, t > 1 and alpha0, beta0 > -1".into())
                } else {
                    Ok(())
                }
            }
            EnsembleSpec::Periodic { a, b } => {
                if a.is_empty() || a.len() != b.len() {
                    bad("periodic needs a and b lists of the same length p >= 1".into())
                } else if a.iter().any(|x| !(*x > 0.0)) {
                    bad("periodic needs every a_i > 0".into())
                } else {
                    Ok(())
                }
            }
            EnsembleSpec::SemicircleDiscrete { nodes } if *nodes < 2 => {
                bad("semicircle_discrete needs at least 2 nodes".into())
            }
            EnsembleSpec::TwoMatrixSymbolic { tau, .. } if *tau == 0.0 => {
                bad("two_matrix_symbolic needs a nonzero coupling constant tau".into())
            }
            _ => Ok(()),
        }
    }

    /// Recurrence data of the ensemble.
    pub fn coefficients(&self) -> Result<CoefficientSequence> {
        self.validate()?;
        let seq = match self.clone() {
            EnsembleSpec::Chebyshev { a, b } => {
                CoefficientSequence::jacobi(move |_| a, move |_| b).with_bound(2.0 * a + b.abs())
            }
            EnsembleSpec::NevaiCustom { a, b, amp_a, amp_b, power } => CoefficientSequence::jacobi(
                move |k| a + amp_a * (k as f64).powf(-power),
                move |k| b + amp_b * (k as f64).powf(-power),
            )
            .with_bound(2.0 * (a + amp_a.abs()) + b.abs() + amp_b.abs()),
            EnsembleSpec::SparseDecaying { amp, decay, growth } => {
                let sites = sparse_decaying_sites(growth);
                let values: Vec<f64> = (1..=sites.len()).map(|j| amp * (j as f64).powf(-decay)).collect();
                sparse_sequence(sites, values)
            }
            EnsembleSpec::SparseFixed { b_tilde, scale } => {
                let sites: Vec<usize> = (1..).map(|j: usize| scale * j * j).take_while(|&n| n <= INDEX_CAP).collect();
                let values = vec![b_tilde; sites.len()];
                sparse_sequence(sites, values)
            }
            EnsembleSpec::BlocksExample1 => BlockLayout::example1().sequence(),
            EnsembleSpec::BlocksExample2 => BlockLayout::example2().sequence(),
            EnsembleSpec::Hahn { alpha, beta, big_n, .. } => CoefficientSequence::jacobi(
                move |k| hahn_coefficients(alpha, beta, big_n, k).0,
                move |k| hahn_coefficients(alpha, beta, big_n, k).1,
            )
            .with_bound(1.0),
            EnsembleSpec::HahnScaling { a_rate, b_rate, t, alpha0, beta0 } => {
                let params = move |n: usize| {
                    let n = n.max(1);
                    let big_n = (t * n as f64).round() as usize;
                    (a_rate * n as f64 + alpha0, b_rate * n as f64 + beta0, big_n)
                };
                CoefficientSequence::tridiagonal(
                    move |n, k| {
                        let (al, be, bn) = params(n);
                        hahn_coefficients(al, be, bn, k).0
                    },
                    move |n, k| {
                        let (al, be, bn) = params(n);
                        hahn_coefficients(al, be, bn, k).1
                    },
                    true,
                )
                .with_bound(1.0)
            }
            EnsembleSpec::Periodic { a, b } => {
                let p = a.len();
                let bound =
                    2.0 * a.iter().fold(0.0_f64, |m, x| m.max(*x)) + b.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                let (a, b) = (Arc::new(a), Arc::new(b));
                CoefficientSequence::jacobi(move |k| a[(k - 1) % p], move |k| b[(k - 1) % p]).with_bound(bound)
            }
            EnsembleSpec::SemicircleDiscrete { nodes } => {
                CoefficientSequence::jacobi(move |k| if k < nodes { 1.0 } else { 0.0 }, move |_| 0.0).with_bound(2.0)
            }
            EnsembleSpec::TwoMatrixSymbolic { .. } => {
                return Err(Error::InvalidParameters(
                    "two_matrix_symbolic is symbol-level only; it has no coefficient generator".into(),
                ))
            }
        };
        Ok(seq.with_label(self.name()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnsembleSpec::Chebyshev { .. } => "chebyshev",
            EnsembleSpec::NevaiCustom { .. } => "nevai_custom",
            EnsembleSpec::SparseDecaying { .. } => "sparse_decaying",
            EnsembleSpec::SparseFixed { .. } => "sparse_fixed",
            EnsembleSpec::BlocksExample1 => "blocks_example1",
            EnsembleSpec::BlocksExample2 => "blocks_example2",
            EnsembleSpec::Hahn { .. } => "hahn",
            EnsembleSpec::HahnScaling { .. } => "hahn_scaling",
            EnsembleSpec::Periodic { .. } => "periodic",
            EnsembleSpec::SemicircleDiscrete { .. } => "semicircle_discrete",
            EnsembleSpec::TwoMatrixSymbolic { .. } => "two_matrix_symbolic",
        }
    }

    /// Closed-form Laurent right limit, when the ensemble has one.
    pub fn limit_symbol(&self) -> Option<LaurentSymbol> {
        match *self {
            EnsembleSpec::Chebyshev { a, b } => Some(LaurentSymbol::jacobi(a, b)),
            EnsembleSpec::NevaiCustom { a, b, .. } => Some(LaurentSymbol::jacobi(a, b)),
            EnsembleSpec::SemicircleDiscrete { .. } => Some(LaurentSymbol::jacobi(1.0, 0.0)),
            EnsembleSpec::HahnScaling { a_rate, b_rate, t, .. } => {
                let (a, b) = hahn_limit(a_rate, b_rate, t);
                Some(LaurentSymbol::jacobi(a, b))
            }
            _ => None,
        }
    }

    /// Discrete orthogonality measure for ensembles that have one.
    pub fn measure(&self) -> Option<Result<DiscreteMeasure>> {
        match *self {
            EnsembleSpec::Hahn { alpha, beta, big_n, .. } => Some(hahn_measure(alpha, beta, big_n)),
            EnsembleSpec::SemicircleDiscrete { nodes } => Some(semicircle_gauss_measure(nodes)),
            _ => None,
        }
    }

    /// Ensemble size for ensembles that fix it.
    pub fn size(&self) -> Option<usize> {
        match *self {
            EnsembleSpec::Hahn { n, .. } => Some(n),
            _ => None,
        }
    }
}

fn sparse_decaying_sites(growth: f64) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for j in 1.. {
        let x = growth.powf((j * j) as f64).round();
        if !x.is_finite() || x > INDEX_CAP as f64 {
            break;
        }
        let n = (x as usize).max(1);
        if out.last().is_none_or(|&l| n > l) {
            out.push(n);
        }
    }
    out
}

fn sparse_sequence(sites: Vec<usize>, values: Vec<f64>) -> CoefficientSequence {
    let mid: Vec<usize> = sites.windows(2).map(|w| (w[0] + w[1]) / 2).collect();
    let bound = 2.0 + values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let lookup = Arc::new((sites.clone(), values));
    CoefficientSequence::jacobi(
        |_| 1.0,
        move |k| match lookup.0.binary_search(&k) {
            Ok(i) => lookup.1[i],
            Err(_) => 0.0,
        },
    )
    .with_bound(bound)
    .with_landmarks("sites", sites)
    .with_landmarks("mid-gap", mid)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Block {
    start: usize,
    len: usize,
    kind: char,
    j: usize,
}

/// Block partition of `ℕ` used by the two block examples, truncated at
/// [`INDEX_CAP`].
#[derive(Clone, Debug)]
pub struct BlockLayout {
    blocks: Vec<Block>,
    interpolating: bool,
}

impl BlockLayout {
    pub fn example1() -> Self {
        Self::build(&['A', 'C'], false)
    }

    pub fn example2() -> Self {
        Self::build(&['A', 'B', 'C', 'D'], true)
    }

    fn build(order: &[char], interpolating: bool) -> Self {
        let mut blocks = Vec::new();
        let mut start = 1usize;
        'outer: for j in 1usize.. {
            for &kind in order {
                let len = match kind {
                    'A' => 3f64.powi((j * j) as i32),
                    'C' => 2f64.powi((j * j) as i32),
                    _ => (j as f64).powi(6) - 1.0,
                };
                if start as f64 + len > INDEX_CAP as f64 {
                    break 'outer;
                }
                let len = len as usize;
                if len > 0 {
                    blocks.push(Block { start, len, kind, j });
                }
                start += len;
            }
        }
        Self { blocks, interpolating }
    }

    fn block_of(&self, k: usize) -> Option<&Block> {
        let i = self.blocks.partition_point(|b| b.start <= k);
        let b = self.blocks.get(i.checked_sub(1)?)?;
        (k < b.start + b.len).then_some(b)
    }

    /// `a_k`; indices past the cap continue with `a = 1`.
    pub fn a(&self, k: usize) -> f64 {
        let Some(b) = self.block_of(k) else { return 1.0 };
        let i = (k - b.start + 1) as f64;
        let j6 = (b.j as f64).powi(6);
        match b.kind {
            'A' => 1.0,
            'C' => 0.5,
            'B' => 2f64.powf(-i / j6),
            _ => 0.5 * 2f64.powf(i / j6),
        }
    }

    /// Centres `start + len / 2` of the blocks of one kind, in order.
    pub fn centers(&self, kind: char) -> Vec<usize> {
        self.blocks.iter().filter(|b| b.kind == kind).map(|b| b.start + b.len / 2).collect()
    }

    /// `(first, last)` index of every block of one kind.
    pub fn ranges(&self, kind: char) -> Vec<(usize, usize)> {
        self.blocks.iter().filter(|b| b.kind == kind).map(|b| (b.start, b.start + b.len - 1)).collect()
    }

    pub fn sequence(&self) -> CoefficientSequence {
        let layout = Arc::new(self.clone());
        let kinds: &[char] = if self.interpolating { &['A', 'B', 'C', 'D'] } else { &['A', 'C'] };
        let mut seq = CoefficientSequence::jacobi(move |k| layout.a(k), |_| 0.0).with_bound(2.0);
        for &kind in kinds {
            seq = seq.with_landmarks(kind.to_string(), self.centers(kind));
        }
        if self.interpolating {
            seq = seq.with_scan_regions(self.ranges('B'));
        }
        seq
    }
}

/// `(A_n, C_n)` of the Hahn recurrence `x Q_n = A_n Q_{n+1} - (A_n + C_n) Q_n + C_n Q_{n-1}`
/// on the unscaled nodes.
fn hahn_ac(alpha: f64, beta: f64, big_n: usize, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let big = big_n as f64;
    let s = alpha + beta;
    let a = if n == 0 {
        (alpha + 1.0) * big / (s + 2.0)
    } else {
        (nf + s + 1.0) * (nf + alpha + 1.0) * (big - nf) / ((2.0 * nf + s + 1.0) * (2.0 * nf + s + 2.0))
    };
    let c =
        if n == 0 { 0.0 } else { nf * (nf + s + big + 1.0) * (nf + beta) / ((2.0 * nf + s) * (2.0 * nf + s + 1.0)) };
    (a, c)
}

/// `(a_k, b_k)`, `k ≥ 1`, of the orthonormal polynomials of the Hahn weight
/// on the rescaled nodes `x / N`; zero past the support.
pub fn hahn_coefficients(alpha: f64, beta: f64, big_n: usize, k: usize) -> (f64, f64) {
    if k == 0 || k > big_n + 1 {
        return (0.0, 0.0);
    }
    let big = big_n as f64;
    let (a_prev, c_prev) = hahn_ac(alpha, beta, big_n, k - 1);
    let b = (a_prev + c_prev) / big;
    let a = if k <= big_n {
        let (_, c_k) = hahn_ac(alpha, beta, big_n, k);
        (a_prev * c_k).max(0.0).sqrt() / big
    } else {
        0.0
    };
    (a, b)
}

/// Limits `(a, b)` of the rescaled Hahn coefficients when `α/n → A`,
/// `β/n → B`, `N/n → t`.
pub fn hahn_limit(a_rate: f64, b_rate: f64, t: f64) -> (f64, f64) {
    let (aa, bb) = (a_rate, b_rate);
    let d = t * (2.0 + aa + bb).powi(2);
    let a = ((t - 1.0) * (1.0 + aa + bb) * (1.0 + aa) * (1.0 + aa + bb + t) * (1.0 + bb)).sqrt() / d;
    let b = ((t - 1.0) * (1.0 + aa + bb) * (1.0 + aa) + (1.0 + aa + bb + t) * (1.0 + bb)) / d;
    (a, b)
}

/// Hahn weights `binom(α+x, x) binom(β+N-x, N-x)` on `x / N`, normalised to
/// total mass one.
pub fn hahn_measure(alpha: f64, beta: f64, big_n: usize) -> Result<DiscreteMeasure> {
    if !(alpha > -1.0 && beta > -1.0) || big_n == 0 {
        return Err(Error::InvalidParameters("hahn weight needs alpha, beta > -1 and N >= 1".into()));
    }
    let logw: Vec<f64> = (0..=big_n)
        .map(|x| {
            let x = x as f64;
            let m = big_n as f64 - x;
            ln_gamma(alpha + x + 1.0) - ln_gamma(x + 1.0) - ln_gamma(alpha + 1.0) + ln_gamma(beta + m + 1.0)
                - ln_gamma(m + 1.0)
                - ln_gamma(beta + 1.0)
        })
        .collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let nodes = (0..=big_n).map(|x| x as f64 / big_n as f64).collect();
    DiscreteMeasure::new(nodes, w.into_iter().map(|x| x / total).collect())
}

/// Gauss quadrature of the semicircle law: nodes `2 cos(kπ/(M+1))`, weights
/// `(2/(M+1)) sin²(kπ/(M+1))`, `k = 1..=M`.
pub fn semicircle_gauss_measure(m: usize) -> Result<DiscreteMeasure> {
    let h = std::f64::consts::PI / (m + 1) as f64;
    let mut pts: Vec<(f64, f64)> = (1..=m)
        .map(|k| {
            let t = k as f64 * h;
            (2.0 * t.cos(), 2.0 / (m + 1) as f64 * t.sin().powi(2))
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    DiscreteMeasure::new(pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())
}

/// Recurrence coefficients `a_1..a_count`, `b_1..b_count` of a discrete measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl RecurrenceCoefficients {
    pub fn sequence(&self) -> CoefficientSequence {
        CoefficientSequence::from_vectors(self.a.clone(), self.b.clone()).with_label("measure")
    }
}

/// Lanczos tridiagonalisation of `diag(nodes)` started from `√weights`,
/// with full re-orthogonalisation.
pub fn recurrence_from_measure(nodes: &[f64], weights: &[f64], count: usize) -> Result<RecurrenceCoefficients> {
    let m = nodes.len();
    if weights.len() != m {
        return Err(Error::InvalidArgument("nodes and weights differ in length".into()));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument("weights must be positive".into()));
    }
    if count > m {
        return Err(Error::InvalidArgument(format!(
            "a measure on {m} nodes supports only {m} orthogonal polynomials, {count} requested"
        )));
    }
    let norm = weights.iter().sum::<f64>().sqrt();
    let mut q: Vec<Vec<f64>> = vec![weights.iter().map(|w| w.sqrt() / norm).collect()];
    let mut a = Vec::with_capacity(count);
    let mut b = Vec::with_capacity(count);
    for k in 0..count {
        let qk = &q[k];
        let mut v: Vec<f64> = qk.iter().zip(nodes).map(|(q, x)| q * x).collect();
        b.push(dot(qk, &v));
        for _ in 0..2 {
            for qj in &q {
                let c = dot(qj, &v);
                v.iter_mut().zip(qj).for_each(|(vi, qi)| *vi -= c * qi);
            }
        }
        let beta = dot(&v, &v).sqrt();
        if k + 1 == m {
            a.push(0.0);
            break;
        }
        a.push(beta);
        q.push(v.iter().map(|x| x / beta).collect());
    }
    Ok(RecurrenceCoefficients { a, b })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Hexagon with sides `a ≤ b`, `c` and the vertical section `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hexagon {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub m: usize,
}

impl Hexagon {
    /// Number of type III lozenges on the section.
    pub fn section_size(&self) -> usize {
        let (a, b, m) = (self.a, self.b, self.m);
        if m <= a {
            m
        } else if m <= b {
            a
        } else {
            a + b - m
        }
    }

    /// Hahn ensemble of the section: size `L_m`, `N = c + L_m`,
    /// `(α, β) = (|a - m| + 1, |b - m| + 1)`.
    pub fn hahn_spec(&self) -> Result<EnsembleSpec> {
        if self.a > self.b {
            return Err(Error::InvalidParameters(format!(
                "hexagon sides must satisfy a <= b (swap them), got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self.m == 0 || self.m >= self.a + self.b {
            return Err(Error::InvalidParameters(format!(
                "section m must lie in 1..{}, got {}",
                self.a + self.b,
                self.m
            )));
        }
        let l = self.section_size();
        Ok(EnsembleSpec::Hahn {
            alpha: self.a.abs_diff(self.m) as f64 + 1.0,
            beta: self.b.abs_diff(self.m) as f64 + 1.0,
            big_n: self.c + l,
            n: l,
        })
    }
}

/// Discriminant `Δ` of a periodic Jacobi matrix and its band set `Δ⁻¹([-2, 2])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantPoly {
    pub period: usize,
    pub coeffs: Polynomial,
    pub bands: Vec<(f64, f64)>,
}

impl DiscriminantPoly {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.eval(x)
    }

    pub fn leading_coeff(&self) -> f64 {
        self.coeffs.leading_coeff()
    }
}

/// `Δ(x) = Tr T_p(x) ··· T_1(x)` with `T_i = [[(x-b_i)/a_i, -a_{i-1}/a_i], [1, 0]]`
/// and `a_0 = a_p`.
pub fn discriminant(a: &[f64], b: &[f64]) -> Result<DiscriminantPoly> {
    EnsembleSpec::Periodic { a: a.to_vec(), b: b.to_vec() }.validate()?;
    let p = a.len();
    let one = Polynomial::constant(1.0);
    let zero = Polynomial::zero();
    // 2×2 matrix of polynomials, row-major
    let mut prod = [one.clone(), zero.clone(), zero.clone(), one];
    for i in 0..p {
        let prev = if i == 0 { a[p - 1] } else { a[i - 1] };
        let t = [
            Polynomial::new(vec![-b[i] / a[i], 1.0 / a[i]]),
            Polynomial::constant(-prev / a[i]),
            Polynomial::constant(1.0),
            zero.clone(),
        ];
        prod = [
            &(&t[0] * &prod[0]) + &(&t[1] * &prod[2]),
            &(&t[0] * &prod[1]) + &(&t[1] * &prod[3]),
            &(&t[2] * &prod[0]) + &(&t[3] * &prod[2]),
            &(&t[2] * &prod[1]) + &(&t[3] * &prod[3]),
        ];
    }
    let delta = &prod[0] + &prod[3];
    let bands = band_set(&delta);
    Ok(DiscriminantPoly { period: p, coeffs: delta, bands })
}

/// Maximal intervals on which `|Δ| ≤ 2`, from the real roots of `Δ ∓ 2`.
fn band_set(delta: &Polynomial) -> Vec<(f64, f64)> {
    const TOL: f64 = 1e-13;
    let two = Polynomial::constant(2.0);
    let mut knots: Vec<f64> = (delta - &two).real_roots(TOL);
    knots.extend((delta + &two).real_roots(TOL));
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    let inside = |x: f64| delta.eval(x).abs() <= 2.0;
    let mut bands: Vec<(f64, f64)> = Vec::new();
    for w in knots.windows(2) {
        if inside(0.5 * (w[0] + w[1])) {
            match bands.last_mut() {
                Some(last) if (last.1 - w[0]).abs() < 1e-9 => last.1 = w[1],
                _ => bands.push((w[0], w[1])),
            }
        }
    }
    bands
}

/// Max deviation of the interior of `Δ(J)` from the pattern `S^p + S^{-p}`.
pub fn magic_formula_residual(a: &[f64], b: &[f64]) -> Result<f64> {
    let d = discriminant(a, b)?;
    let p = d.period;
    let j = EnsembleSpec::Periodic { a: a.to_vec(), b: b.to_vec() }.coefficients()?.matrix(1);
    let dj = poly_apply(&j, &d.coeffs);
    let radius = 2 * p + 1;
    let w = window_extract(&dj, 10 * p + radius + 1, radius);
    let r = radius as i64;
    let mut worst: f64 = 0.0;
    for i in -r..=r {
        for k in -r..=r {
            let target = if (i - k).unsigned_abs() as usize == p { 1.0 } else { 0.0 };
            worst = worst.max((w.get(i, k) - target).abs());
        }
    }
    Ok(worst)
}

/// `(s₁, s₂)` for the two-matrix model with `V₁ = x²/2`:
/// `s₂ = aw + b + a/w`, `s₁ = (1/τ) [V₂'(s₂)]_- + aw`.
pub fn two_matrix_symbols(v2: &Polynomial, tau: f64, a: f64, b: f64) -> Result<(LaurentSymbol, LaurentSymbol)> {
    if tau == 0.0 {
        return Err(Error::InvalidParameters("the coupling constant tau must be nonzero".into()));
    }
    let s2 = LaurentSymbol::jacobi(a, b);
    let s1 = &s2.compose(&v2.derivative()).negative_part().scale(1.0 / tau) + &LaurentSymbol::monomial(1, a);
    Ok((s1, s2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_sequence() {
        let seq = EnsembleSpec::Chebyshev { a: 1.0, b: 0.0 }.coefficients().unwrap();
        assert_eq!(seq.a(1, 7), 1.0);
        assert_eq!(seq.b(1, 7), 0.0);
    }

    #[test]
    fn hahn_limit_values() {
        let (a, b) = hahn_limit(0.0, 0.0, 2.0);
        assert!((a - 3f64.sqrt() / 8.0).abs() < 1e-15);
        assert!((b - 0.5).abs() < 1e-15);
        let (a3, _) = hahn_limit(0.0, 0.0, 3.0);
        assert!((a3 * a3 - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn hahn_matches_lanczos() {
        let (alpha, beta, big_n) = (1.0, 1.0, 60);
        let mu = hahn_measure(alpha, beta, big_n).unwrap();
        let rc = recurrence_from_measure(mu.nodes(), mu.weights(), 40).unwrap();
        for k in 1..=40 {
            let (a, b) = hahn_coefficients(alpha, beta, big_n, k);
            assert!((b - rc.b[k - 1]).abs() < 1e-10, "b_{k}");
            assert!((a - rc.a[k - 1]).abs() < 1e-10, "a_{k}");
        }
    }

    #[test]
    fn hahn_positivity_and_support() {
        for &(al, be, n) in &[(0.0, 0.0, 10), (2.5, 0.3, 30), (-0.5, 4.0, 17)] {
            for k in 1..=n {
                assert!(hahn_coefficients(al, be, n, k).0 > 0.0);
            }
            assert_eq!(hahn_coefficients(al, be, n, n + 1).0, 0.0);
            assert_eq!(hahn_coefficients(al, be, n, n + 2), (0.0, 0.0));
        }
    }

    #[test]
    fn two_point_measure() {
        let rc = recurrence_from_measure(&[-1.0, 1.0], &[0.5, 0.5], 2).unwrap();
        assert!(rc.b[0].abs() < 1e-15);
        assert!((rc.a[0] - 1.0).abs() < 1e-15);
        assert!(recurrence_from_measure(&[-1.0, 1.0], &[0.5, 0.5], 3).is_err());
    }

    #[test]
    fn semicircle_gauss_recurrence() {
        let mu = semicircle_gauss_measure(400).unwrap();
        let rc = recurrence_from_measure(mu.nodes(), mu.weights(), 30).unwrap();
        assert!((rc.a[19] - 1.0).abs() < 1e-10);
        assert!(rc.b[19].abs() < 1e-10);
    }

    #[test]
    fn free_discriminant() {
        let d = discriminant(&[1.0], &[0.0]).unwrap();
        assert_eq!(d.coeffs, Polynomial::identity());
        assert_eq!(d.bands.len(), 1);
        assert!((d.bands[0].0 + 2.0).abs() < 1e-12 && (d.bands[0].1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn period_two_discriminant() {
        let d = discriminant(&[1.0, 0.5], &[0.0, 0.0]).unwrap();
        assert_eq!(d.coeffs.coeffs(), &[-2.5, 0.0, 2.0]);
        assert_eq!(d.leading_coeff(), 2.0);
        let want = [(-1.5, -0.5), (0.5, 1.5)];
        assert_eq!(d.bands.len(), 2);
        for (got, want) in d.bands.iter().zip(want) {
            assert!((got.0 - want.0).abs() < 1e-10 && (got.1 - want.1).abs() < 1e-10);
        }
        assert!(magic_formula_residual(&[1.0, 0.5], &[0.0, 0.0]).unwrap() < 1e-12);
    }

    #[test]
    fn constant_period_closes_gaps() {
        let d = discriminant(&[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.bands.len(), 1);
        assert!((d.bands[0].0 + 2.0).abs() < 1e-6 && (d.bands[0].1 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn hexagon_mapping() {
        let h = Hexagon { a: 3, b: 5, c: 4, m: 4 };
        assert_eq!(h.section_size(), 3);
        assert_eq!(h.hahn_spec().unwrap(), EnsembleSpec::Hahn { alpha: 2.0, beta: 2.0, big_n: 7, n: 3 });
        assert_eq!(Hexagon { a: 3, b: 5, c: 4, m: 7 }.section_size(), 1);
        assert!(Hexagon { a: 6, b: 5, c: 4, m: 2 }.hahn_spec().is_err());
    }

    #[test]
    fn two_matrix_cubic() {
        let a = 0.7;
        let tau = 1.3;
        let v2 = Polynomial::new(vec![0.0, 0.0, 0.0, 0.0, 0.25]);
        let (s1, s2) = two_matrix_symbols(&v2, tau, a, 0.0).unwrap();
        let a3 = a * a * a;
        assert!((s1.coeff(-1) - 3.0 * a3 / tau).abs() < 1e-15);
        assert!((s1.coeff(-3) - a3 / tau).abs() < 1e-15);
        assert_eq!(s1.coeff(1), a);
        assert_eq!(s2, LaurentSymbol::jacobi(a, 0.0));
        assert!(two_matrix_symbols(&v2, 0.0, a, 0.0).is_err());
    }

    #[test]
    fn block_layouts() {
        let l1 = BlockLayout::example1();
        assert_eq!(l1.ranges('A')[0], (1, 3));
        assert_eq!(l1.ranges('C')[0], (4, 5));
        assert_eq!(l1.centers('A').len(), 4);
        assert_eq!(l1.a(2), 1.0);
        assert_eq!(l1.a(4), 0.5);
        let l2 = BlockLayout::example2();
        let (s, e) = l2.ranges('B')[0];
        assert_eq!(e - s + 1, 63);
        assert!((l2.a(s) - 2f64.powf(-1.0 / 64.0)).abs() < 1e-15);
        assert!((l2.a(e) - 2f64.powf(-63.0 / 64.0)).abs() < 1e-15);
    }

    #[test]
    fn spec_json() {
        let s: EnsembleSpec =
            serde_json::from_str(r#"{"variant":"hahn","alpha":1,"beta":1,"big_n":60,"n":20}"#).unwrap();
        assert_eq!(s.size(), Some(20));
        let s: EnsembleSpec = serde_json::from_str(r#"{"variant":"blocks_example1"}"#).unwrap();
        assert_eq!(s, EnsembleSpec::BlocksExample1);
        let bad: EnsembleSpec =
            serde_json::from_str(r#"{"variant":"hahn","alpha":-2,"beta":1,"big_n":60,"n":20}"#).unwrap();
        assert!(bad.coefficients().is_err());
    }
}
