//! Semi-infinite banded matrices, two-sided windows and exact traces.
//!
//! Rows and columns of a [`BandedMatrix`] are 1-based, matching the
//! projection `P_n` onto the first `n` coordinates of `ℓ²(ℕ)`. A [`Window`]
//! is a dense `(2M+1)×(2M+1)` block with signed indices `-M..=M`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::symbols::LaurentSymbol;

/// Default ceiling on `Σ l_i` in trace products and on cumulant orders.
pub const DEFAULT_MAX_ORDER: usize = 8;

type EntryFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

/// A one-sided infinite matrix with finitely many non-trivial diagonals,
/// realised lazily by a pure entry generator.
#[derive(Clone)]
pub struct BandedMatrix {
    lower: usize,
    upper: usize,
    entry: EntryFn,
    bound_hint: Option<f64>,
}

impl fmt::Debug for BandedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BandedMatrix")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("bound_hint", &self.bound_hint)
            .finish_non_exhaustive()
    }
}

impl BandedMatrix {
    /// Builds a banded matrix from a generator of 1-based entries. The
    /// generator is never consulted outside the declared band.
    pub fn from_fn<F>(lower: usize, upper: usize, entry: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        Self { lower, upper, entry: Arc::new(entry), bound_hint: None }
    }

    /// Symmetric tridiagonal (Jacobi) matrix with `J[k,k] = b(k)` and
    /// `J[k,k+1] = J[k+1,k] = a(k)`.
    pub fn jacobi<A, B>(a: A, b: B) -> Self
    where
        A: Fn(usize) -> f64 + Send + Sync + 'static,
        B: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self::from_fn(1, 1, move |r, s| if r == s { b(r) } else { a(r.min(s)) })
    }

    pub fn diagonal<D>(d: D) -> Self
    where
        D: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self::from_fn(0, 0, move |r, _| d(r))
    }

    /// Toeplitz operator `T(s)` with `T(s)[j,k] = s_{j-k}`.
    pub fn toeplitz(symbol: &LaurentSymbol) -> Self {
        let s = symbol.clone();
        let lower = symbol.max_degree().max(0) as usize;
        let upper = (-symbol.min_degree()).max(0) as usize;
        let norm = symbol.l1_norm();
        Self::from_fn(lower, upper, move |r, c| s.coeff(r as i64 - c as i64)).with_bound_hint(norm)
    }

    /// Banded matrix from a finite dense block placed at rows/cols
    /// `1..=dense.nrows()`, zero elsewhere.
    pub fn from_dense(dense: DMatrix<f64>) -> Self {
        let n = dense.nrows();
        let (mut lower, mut upper) = (0, 0);
        for r in 0..n {
            for c in 0..dense.ncols() {
                if dense[(r, c)] != 0.0 {
                    if r > c {
                        lower = lower.max(r - c);
                    } else {
                        upper = upper.max(c - r);
                    }
                }
            }
        }
        let m = Arc::new(dense);
        Self::from_fn(lower, upper, move |r, c| m.get((r - 1, c - 1)).copied().unwrap_or(0.0))
    }

    pub fn with_bound_hint(mut self, bound: f64) -> Self {
        self.bound_hint = Some(bound);
        self
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.lower
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.upper
    }

    /// Larger of the two bandwidths; the locality radius of traces scales
    /// with it.
    pub fn bandwidth(&self) -> usize {
        self.lower.max(self.upper)
    }

    pub fn bound_hint(&self) -> Option<f64> {
        self.bound_hint
    }

    #[inline]
    pub fn in_band(&self, r: usize, s: usize) -> bool {
        r >= 1 && s >= 1 && r <= s + self.lower && s <= r + self.upper
    }

    /// Entry `B[r, s]` (1-based); zero outside the band and for index 0.
    #[inline]
    pub fn get(&self, r: usize, s: usize) -> f64 {
        if self.in_band(r, s) {
            (self.entry)(r, s)
        } else {
            0.0
        }
    }

    /// Signed-index access, zero for indices below 1.
    #[inline]
    fn get_signed(&self, r: i64, s: i64) -> f64 {
        if r < 1 || s < 1 {
            0.0
        } else {
            self.get(r as usize, s as usize)
        }
    }

    /// Dense copy of rows/cols `first..first+size` (1-based).
    pub fn dense_block(&self, first: usize, size: usize) -> DMatrix<f64> {
        DMatrix::from_fn(size, size, |i, j| self.get(first + i, first + j))
    }

    /// Max absolute row sum over the probe rows, an upper bound for the
    /// operator norm restricted to the probed part.
    pub fn estimate_norm(&self, rows: std::ops::RangeInclusive<usize>) -> f64 {
        rows.map(|r| {
            let lo = r.saturating_sub(self.lower).max(1);
            (lo..=r + self.upper).map(|c| self.get(r, c).abs()).sum::<f64>()
        })
        .fold(0.0, f64::max)
    }

    /// Operator norm used by the cumulant bound: the bound hint if present.
    pub fn norm_bound(&self) -> Option<f64> {
        self.bound_hint
    }

    /// Column `s` of `B^k` as `(first_row, values)`, computed by repeated
    /// banded matrix–vector products.
    fn power_column(&self, k: usize, s: usize) -> (usize, Vec<f64>) {
        let mut first = s;
        let mut v = vec![1.0];
        for _ in 0..k {
            let new_first = first.saturating_sub(self.upper).max(1);
            let new_last = first + v.len() - 1 + self.lower;
            let mut w = vec![0.0; new_last - new_first + 1];
            for (off, &x) in v.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let j = first + off;
                let lo = j.saturating_sub(self.upper).max(1);
                for i in lo..=j + self.lower {
                    w[i - new_first] += self.get(i, j) * x;
                }
            }
            first = new_first;
            v = w;
        }
        (first, v)
    }

    /// Entry `(B^k)[r, s]`, exact up to floating point, using only the
    /// entries within `k` band-widths of `(r, s)`.
    pub fn power_entry(&self, k: usize, r: usize, s: usize) -> f64 {
        let (first, v) = self.power_column(k, s);
        if r < first {
            0.0
        } else {
            v.get(r - first).copied().unwrap_or(0.0)
        }
    }

    /// `Tr B^m P_n = Σ_{s ≤ n} (B^m)[s, s]`.
    pub fn power_trace(&self, m: usize, n: usize) -> f64 {
        let mut acc = KahanSum::default();
        for s in 1..=n {
            acc.add(self.power_entry(m, s, s));
        }
        acc.value()
    }
}

/// Projections used in cumulant formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// `P_n` on `ℓ²(ℕ)`: keeps the 1-based coordinates `1..=n`.
    OneSided(usize),
    /// `P_-` on `ℓ²(ℤ)`: keeps the strictly negative coordinates.
    Negative,
}

impl Projection {
    pub fn keeps(&self, index: i64) -> bool {
        match *self {
            Projection::OneSided(n) => index >= 1 && index <= n as i64,
            Projection::Negative => index < 0,
        }
    }

    pub fn apply(&self, first_index: i64, v: &[f64]) -> Vec<f64> {
        v.iter().enumerate().map(|(i, &x)| if self.keeps(first_index + i as i64) { x } else { 0.0 }).collect()
    }
}

/// Finite two-sided block with signed indices `-M..=M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "WindowData", try_from = "WindowData")]
pub struct Window {
    radius: usize,
    center: usize,
    entries: DMatrix<f64>,
    lower: usize,
    upper: usize,
}

impl Window {
    /// Window from a dense `(2M+1)×(2M+1)` matrix; `center` is 0 for
    /// abstract two-sided data.
    pub fn from_dense(entries: DMatrix<f64>, center: usize) -> Result<Self> {
        let size = entries.nrows();
        if size != entries.ncols() || size.is_multiple_of(2) || size < 3 {
            return Err(Error::InvalidArgument(format!(
                "window must be square with odd size >= 3, got {}x{}",
                size,
                entries.ncols()
            )));
        }
        let (mut lower, mut upper) = (0, 0);
        for r in 0..size {
            for c in 0..size {
                if entries[(r, c)] != 0.0 {
                    if r > c {
                        lower = lower.max(r - c);
                    } else {
                        upper = upper.max(c - r);
                    }
                }
            }
        }
        Ok(Self { radius: size / 2, center, entries, lower, upper })
    }

    /// Truncation `L(s)_M` of the Laurent matrix of `symbol`.
    pub fn laurent(symbol: &LaurentSymbol, radius: usize) -> Self {
        let size = 2 * radius + 1;
        let entries = DMatrix::from_fn(size, size, |i, j| symbol.coeff(i as i64 - j as i64));
        Self {
            radius,
            center: 0,
            entries,
            lower: symbol.max_degree().max(0) as usize,
            upper: (-symbol.min_degree()).max(0) as usize,
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn size(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn bandwidth(&self) -> usize {
        self.lower.max(self.upper)
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.lower
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.upper
    }

    /// Entry at signed indices `(r, s)`, `|r|, |s| <= M`.
    pub fn get(&self, r: i64, s: i64) -> f64 {
        let m = self.radius as i64;
        assert!(r.abs() <= m && s.abs() <= m, "window index out of range");
        self.entries[((r + m) as usize, (s + m) as usize)]
    }

    /// Values along diagonal `offset = r - s`, ordered by increasing row.
    pub fn diagonal(&self, offset: i64) -> Vec<f64> {
        let m = self.radius as i64;
        (-m..=m)
            .filter_map(|r| {
                let s = r - offset;
                (s.abs() <= m).then(|| self.get(r, s))
            })
            .collect()
    }

    /// Restriction to a smaller radius around the same center.
    pub fn shrink(&self, radius: usize) -> Self {
        let radius = radius.min(self.radius);
        let off = self.radius - radius;
        let size = 2 * radius + 1;
        Self {
            radius,
            center: self.center,
            entries: self.entries.view((off, off), (size, size)).into_owned(),
            lower: self.lower,
            upper: self.upper,
        }
    }

    /// Max-norm distance between two windows of equal radius.
    pub fn max_distance(&self, other: &Window) -> f64 {
        assert_eq!(self.radius, other.radius);
        (&self.entries - &other.entries).amax()
    }

    /// Largest absolute row sum (operator norm bound of the window).
    pub fn row_sum_norm(&self) -> f64 {
        self.entries.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Serialized form of a [`Window`]: rows of the dense block from index `-M`.
#[derive(Serialize, Deserialize)]
struct WindowData {
    center: usize,
    radius: usize,
    rows: Vec<Vec<f64>>,
}

impl From<Window> for WindowData {
    fn from(w: Window) -> Self {
        WindowData {
            center: w.center,
            radius: w.radius,
            rows: w.entries.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<WindowData> for Window {
    type Error = Error;
    fn try_from(d: WindowData) -> Result<Self> {
        let size = d.rows.len();
        if d.rows.iter().any(|r| r.len() != size) || size != 2 * d.radius + 1 {
            return Err(Error::InvalidArgument("window rows must form a (2M+1)-square".into()));
        }
        let entries = DMatrix::from_fn(size, size, |i, j| d.rows[i][j]);
        Window::from_dense(entries, d.center)
    }
}

/// Shift-and-restrict: `W[r, s] = B[n + r, n + s]` for `|r|, |s| <= M`,
/// zero where `n + r < 1` or `n + s < 1`.
pub fn window_extract(b: &BandedMatrix, n: usize, radius: usize) -> Window {
    let radius = radius.max(1);
    let size = 2 * radius + 1;
    let m = radius as i64;
    let c = n as i64;
    let entries = DMatrix::from_fn(size, size, |i, j| b.get_signed(c + i as i64 - m, c + j as i64 - m));
    Window { radius, center: n, entries, lower: b.lower, upper: b.upper }
}

/// `p(B)` as a banded matrix with bandwidths scaled by `deg p`. Entries are
/// computed on demand by local multiplication.
pub fn poly_apply(b: &BandedMatrix, p: &Polynomial) -> BandedMatrix {
    let d = p.degree();
    let base = b.clone();
    let coeffs = p.coeffs().to_vec();
    let bound = b.bound_hint.map(|nb| coeffs.iter().enumerate().map(|(k, c)| c.abs() * nb.powi(k as i32)).sum());
    let out = BandedMatrix::from_fn(d * b.lower, d * b.upper, move |r, s| {
        // Horner on the column vector e_s: v <- B v + c_k e_s.
        let mut first = s;
        let mut v = vec![0.0];
        for (k, &c) in coeffs.iter().enumerate().rev() {
            if k + 1 < coeffs.len() {
                let new_first = first.saturating_sub(base.upper).max(1);
                let new_last = first + v.len() - 1 + base.lower;
                let mut w = vec![0.0; new_last - new_first + 1];
                for (off, &x) in v.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let j = first + off;
                    let lo = j.saturating_sub(base.upper).max(1);
                    for i in lo..=j + base.lower {
                        w[i - new_first] += base.get(i, j) * x;
                    }
                }
                first = new_first;
                v = w;
            }
            v[s - first] += c;
        }
        if r < first {
            0.0
        } else {
            v.get(r - first).copied().unwrap_or(0.0)
        }
    });
    match bound {
        Some(h) => out.with_bound_hint(h),
        None => out,
    }
}

/// `Tr F^{l_1} P F^{l_2} P ... F^{l_j} P - Tr F^m P` for a finite dense `F`
/// whose rows are labelled by `first_index + i`; `m = Σ l_i`.
pub(crate) fn dense_trace_difference(powers: &[DMatrix<f64>], keep: &[bool], ls: &[usize]) -> f64 {
    let m: usize = ls.iter().sum();
    let proj = |a: &DMatrix<f64>| {
        let mut a = a.clone();
        for (j, &k) in keep.iter().enumerate() {
            if !k {
                a.column_mut(j).fill(0.0);
            }
        }
        a
    };
    let mut prod = proj(&powers[ls[0]]);
    for &l in &ls[1..] {
        prod = &prod * proj(&powers[l]);
    }
    let full = proj(&powers[m]);
    prod.trace() - full.trace()
}

/// Powers `F^0..=F^m` of a dense matrix.
pub(crate) fn dense_powers(f: &DMatrix<f64>, m: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(DMatrix::identity(f.nrows(), f.ncols()));
    for k in 1..=m {
        let next = &out[k - 1] * f;
        out.push(next);
    }
    out
}

/// Exact `Tr B^{l_1} P_n B^{l_2} P_n ··· B^{l_j} P_n`.
///
/// The value splits as `Tr B^m P_n` (a sum of `n` local diagonal entries)
/// plus a correction that only sees the window of radius `band · m` around
/// the cut, so no truncation error is made.
pub fn trace_product(b: &BandedMatrix, n: usize, ls: &[usize], max_order: usize) -> Result<f64> {
    if ls.is_empty() || ls.contains(&0) {
        return Err(Error::InvalidArgument("powers must be a non-empty list of positive integers".into()));
    }
    let m: usize = ls.iter().sum();
    if m > max_order {
        return Err(Error::OrderOverflow { order: m, max: max_order });
    }
    let base = b.power_trace(m, n);
    if ls.len() == 1 {
        return Ok(base);
    }
    Ok(base + local_trace_difference(b, n, ls))
}

/// The cut-local part `Tr Π B^{l_i} P_n − Tr B^m P_n`, evaluated on the
/// window centred just past the cut with `P_-` in place of `P_n`.
pub(crate) fn local_trace_difference(b: &BandedMatrix, n: usize, ls: &[usize]) -> f64 {
    let m: usize = ls.iter().sum();
    let w = window_extract(b, n + 1, (b.bandwidth() * m).max(1));
    let keep = negative_mask(w.radius());
    let powers = dense_powers(w.entries(), m);
    dense_trace_difference(&powers, &keep, ls)
}

pub(crate) fn negative_mask(radius: usize) -> Vec<bool> {
    let m = radius as i64;
    (-m..=m).map(|i| i < 0).collect()
}

/// Hilbert–Schmidt norm squared of `[B, P_n]`: the sum of `B[r,s]²` over
/// pairs straddling the cut.
pub fn commutator_hs_norm_sq(b: &BandedMatrix, n: usize) -> f64 {
    let band = b.bandwidth();
    let mut acc = 0.0;
    for r in n.saturating_sub(band).max(1)..=n {
        for s in n + 1..=n + band {
            acc += b.get(r, s).powi(2) + b.get(s, r).powi(2);
        }
    }
    acc
}

/// `Tr [B, P_n]²`, which equals `-2 Σ_{r ≤ n < s} B[r,s] B[s,r]`.
pub fn commutator_trace_sq(b: &BandedMatrix, n: usize) -> f64 {
    let band = b.bandwidth();
    let mut acc = 0.0;
    for r in n.saturating_sub(band).max(1)..=n {
        for s in n + 1..=n + band {
            acc += b.get(r, s) * b.get(s, r);
        }
    }
    -2.0 * acc
}

/// Kahan–Babuška compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
