//! Coefficient sequences, subsequence schemes and right limits.
//!
//! A right limit of `J^(n)` along `n_j` is the entrywise limit of the
//! windows of `J^(n_j)` centred at `n_j`. Windows that are constant along
//! diagonals identify a Laurent matrix, whose symbol then drives the
//! prediction of the limiting variance.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::{window_extract, BandedMatrix, Window};
use crate::error::{Error, Result};
use crate::symbols::LaurentSymbol;

/// Largest row index any generator is asked for.
pub const INDEX_CAP: usize = 1_000_000_000;
/// Default tolerance for closed-form generators.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default tolerance for numerically produced coefficients.
pub const DEFAULT_NUMERIC_TOL: f64 = 1e-6;

type EntryGen = Arc<dyn Fn(usize, usize, usize) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    /// Symmetric Jacobi data `(a_k, b_k)`.
    Tridiagonal,
    /// General banded recurrence with fixed offsets.
    Banded { lower: usize, upper: usize },
}

/// Recurrence data for a family of matrices `J^(n)` (or a single `J` when
/// the family does not vary with `n`).
#[derive(Clone)]
pub struct CoefficientSequence {
    kind: SequenceKind,
    varying: bool,
    entry: EntryGen,
    bound: Option<f64>,
    landmarks: BTreeMap<String, Vec<usize>>,
    scan_regions: Vec<(usize, usize)>,
    label: String,
}

impl fmt::Debug for CoefficientSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSequence")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .field("varying", &self.varying)
            .field("bound", &self.bound)
            .field("landmarks", &self.landmarks.keys().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

impl CoefficientSequence {
    /// Jacobi data `a(n, k)`, `b(n, k)` for `J^(n)`; `n` is ignored when
    /// `varying` is false. `a` must be nonnegative, a zero marks the end of
    /// a finite support.
    pub fn tridiagonal<A, B>(a: A, b: B, varying: bool) -> Self
    where
        A: Fn(usize, usize) -> f64 + Send + Sync + 'static,
        B: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: SequenceKind::Tridiagonal,
            varying,
            entry: Arc::new(move |n, r, s| if r == s { b(n, r) } else { a(n, r.min(s)) }),
            bound: None,
            landmarks: BTreeMap::new(),
            scan_regions: Vec::new(),
            label: "tridiagonal".into(),
        }
    }

    /// Fixed Jacobi data from `k ↦ (a_k, b_k)`.
    pub fn jacobi<A, B>(a: A, b: B) -> Self
    where
        A: Fn(usize) -> f64 + Send + Sync + 'static,
        B: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self::tridiagonal(move |_, k| a(k), move |_, k| b(k), false)
    }

    /// Finite Jacobi data, zero past the end of the vectors.
    pub fn from_vectors(a: Vec<f64>, b: Vec<f64>) -> Self {
        let a = Arc::new(a);
        let b = Arc::new(b);
        Self::jacobi(move |k| a.get(k - 1).copied().unwrap_or(0.0), move |k| b.get(k - 1).copied().unwrap_or(0.0))
    }

    /// General banded generator `entry(n, r, s)`; only consulted inside the band.
    pub fn banded<F>(lower: usize, upper: usize, entry: F, varying: bool) -> Self
    where
        F: Fn(usize, usize, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: SequenceKind::Banded { lower, upper },
            varying,
            entry: Arc::new(entry),
            bound: None,
            landmarks: BTreeMap::new(),
            scan_regions: Vec::new(),
            label: "banded".into(),
        }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Named index lists used by the `block-centers` and `sites` schemes.
    pub fn with_landmarks(mut self, name: impl Into<String>, indices: Vec<usize>) -> Self {
        self.landmarks.insert(name.into(), indices);
        self
    }

    /// Index ranges on which `a_k` is monotone, searched by the `target-a` scheme.
    pub fn with_scan_regions(mut self, regions: Vec<(usize, usize)>) -> Self {
        self.scan_regions = regions;
        self
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn is_varying(&self) -> bool {
        self.varying
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn landmarks(&self, name: &str) -> Option<&[usize]> {
        self.landmarks.get(name).map(Vec::as_slice)
    }

    pub fn landmark_names(&self) -> Vec<String> {
        self.landmarks.keys().cloned().collect()
    }

    pub fn lower_bandwidth(&self) -> usize {
        match self.kind {
            SequenceKind::Tridiagonal => 1,
            SequenceKind::Banded { lower, .. } => lower,
        }
    }

    pub fn upper_bandwidth(&self) -> usize {
        match self.kind {
            SequenceKind::Tridiagonal => 1,
            SequenceKind::Banded { upper, .. } => upper,
        }
    }

    /// `J^(n)[r, s]` (1-based).
    pub fn entry(&self, n: usize, r: usize, s: usize) -> f64 {
        if r > s + self.lower_bandwidth() || s > r + self.upper_bandwidth() {
            0.0
        } else {
            (self.entry)(n, r, s)
        }
    }

    /// `a_k` of `J^(n)`, i.e. the entry `(k, k + 1)`.
    pub fn a(&self, n: usize, k: usize) -> f64 {
        self.entry(n, k, k + 1)
    }

    /// `b_k` of `J^(n)`, i.e. the entry `(k, k)`.
    pub fn b(&self, n: usize, k: usize) -> f64 {
        self.entry(n, k, k)
    }

    /// `J^(n)` as a lazily evaluated banded matrix.
    pub fn matrix(&self, n: usize) -> BandedMatrix {
        let entry = self.entry.clone();
        let m = BandedMatrix::from_fn(self.lower_bandwidth(), self.upper_bandwidth(), move |r, s| entry(n, r, s));
        match self.bound {
            Some(b) => m.with_bound_hint(b),
            None => m,
        }
    }

    /// Window of `J^(n)` of radius `radius` centred at `center`.
    pub fn window(&self, n: usize, center: usize, radius: usize) -> Window {
        window_extract(&self.matrix(n), center, radius)
    }

    /// The window used for right limits: `J^(n_j)` centred at `n_j`.
    pub fn window_at(&self, nj: usize, radius: usize) -> Window {
        self.window(nj, nj, radius)
    }
}

/// How the subsequence `n_j` is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SubsequenceScheme {
    /// `n_j = start + j · step`, `j = 0, 1, …`
    Arithmetic {
        start: usize,
        step: usize,
    },
    /// Centres of the named blocks of a block example ("A", "B", "C", "D").
    BlockCenters {
        block: String,
    },
    Explicit {
        values: Vec<usize>,
    },
    /// Named site list of a sparse example ("sites" or "mid-gap").
    Sites {
        name: String,
    },
    /// Indices with `|a_n - a| <= tol`, one per scan region.
    TargetA {
        a: f64,
        tol: f64,
    },
}

impl SubsequenceScheme {
    /// Up to `count` strictly increasing indices, none above [`INDEX_CAP`].
    pub fn indices(&self, seq: &CoefficientSequence, count: usize) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = match self {
            SubsequenceScheme::Arithmetic { start, step } => {
                if *start == 0 || *step == 0 {
                    return Err(Error::Config("arithmetic scheme needs start >= 1 and step >= 1".into()));
                }
                (0..count).map(|j| start + j * step).take_while(|&n| n <= INDEX_CAP).collect()
            }
            SubsequenceScheme::BlockCenters { block } => named(seq, block)?,
            SubsequenceScheme::Sites { name } => named(seq, name)?,
            SubsequenceScheme::Explicit { values } => values.clone(),
            SubsequenceScheme::TargetA { a, tol } => target_a(seq, *a, *tol),
        };
        out.retain(|&n| (1..=INDEX_CAP).contains(&n));
        if out.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("subsequence must be strictly increasing".into()));
        }
        out.truncate(count);
        if out.is_empty() {
            return Err(Error::Config(format!("subsequence scheme {self:?} produced no indices")));
        }
        Ok(out)
    }

    pub fn describe(&self) -> String {
        match self {
            SubsequenceScheme::Arithmetic { start, step } => format!("n_j = {start} + {step} j"),
            SubsequenceScheme::BlockCenters { block } => format!("centres of {block} blocks"),
            SubsequenceScheme::Explicit { values } => format!("explicit ({} indices)", values.len()),
            SubsequenceScheme::Sites { name } => format!("sparse sites `{name}`"),
            SubsequenceScheme::TargetA { a, tol } => format!("a_n within {tol:e} of {a}"),
        }
    }
}

fn named(seq: &CoefficientSequence, name: &str) -> Result<Vec<usize>> {
    seq.landmarks(name).map(<[usize]>::to_vec).ok_or_else(|| {
        Error::Config(format!(
            "sequence `{}` has no landmark `{name}` (available: {:?})",
            seq.label(),
            seq.landmark_names()
        ))
    })
}

/// For each scan region, the index whose `a_k` is closest to `target`
/// (bisection, `a` monotone on the region), kept if within `tol`. Without
/// regions, a linear scan over `1..=10^6` keeps indices within `tol`.
fn target_a(seq: &CoefficientSequence, target: f64, tol: f64) -> Vec<usize> {
    if seq.scan_regions.is_empty() {
        return (1..=1_000_000usize).filter(|&k| (seq.a(k, k) - target).abs() <= tol).collect();
    }
    let mut out = Vec::new();
    for &(lo, hi) in &seq.scan_regions {
        if hi <= lo {
            continue;
        }
        let a = |k: usize| seq.a(k, k);
        let increasing = a(hi) > a(lo);
        let (mut l, mut h) = (lo, hi);
        while h - l > 1 {
            let mid = l + (h - l) / 2;
            if (a(mid) < target) == increasing {
                l = mid;
            } else {
                h = mid;
            }
        }
        let best = if (a(l) - target).abs() <= (a(h) - target).abs() { l } else { h };
        if (a(best) - target).abs() <= tol {
            out.push(best);
        }
    }
    out
}

/// Classification of the limit window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum RightLimitTag {
    Laurent,
    Periodic { p: usize },
    LaurentPlusFiniteRank,
    Undetermined,
}

/// A detected right limit with the window that supports it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RightLimitClass {
    #[serde(flatten)]
    pub tag: RightLimitTag,
    /// Laurent symbol (laurent case) or background symbol (finite rank case).
    pub symbol: Option<LaurentSymbol>,
    /// For periodic limits: one period of each diagonal, `W[r, r - d]` for
    /// `r = 0..p`, keyed by the offset `d`.
    pub period_data: Option<BTreeMap<String, Vec<f64>>>,
    /// Entries `(r, s, W[r,s] - s_{r-s})` that deviate from the background.
    pub perturbation: Vec<(i64, i64, f64)>,
    pub window: Window,
    pub subsequence: String,
    pub indices_used: Vec<usize>,
    /// Max-norm distance between the last two windows examined.
    pub convergence_error: f64,
}

impl RightLimitClass {
    pub fn is_determined(&self) -> bool {
        self.tag != RightLimitTag::Undetermined
    }
}

/// Walks the subsequence until two successive windows agree within `tol`
/// (or `budget` windows have been examined) and classifies the last window.
pub fn detect_right_limit(
    seq: &CoefficientSequence,
    scheme: &SubsequenceScheme,
    radius: usize,
    tol: f64,
    budget: usize,
) -> Result<RightLimitClass> {
    if radius == 0 {
        return Err(Error::InvalidArgument("window radius must be >= 1".into()));
    }
    let indices = scheme.indices(seq, budget.max(2))?;
    Ok(detect_with(|nj| seq.window_at(nj, radius), &indices, tol, scheme.describe()))
}

/// Right-limit detection on arbitrary windows, e.g. those of `Q(J^(n))`.
pub fn detect_with<W>(window_at: W, indices: &[usize], tol: f64, subsequence: String) -> RightLimitClass
where
    W: Fn(usize) -> Window,
{
    let mut prev: Option<Window> = None;
    let mut used = Vec::new();
    let mut dist = f64::INFINITY;
    let mut stable = false;
    for &nj in indices {
        let w = window_at(nj);
        used.push(nj);
        if let Some(p) = &prev {
            dist = p.max_distance(&w);
            if dist < tol {
                prev = Some(w);
                stable = true;
                break;
            }
        }
        prev = Some(w);
    }
    let window = prev.expect("at least one index");
    let mut class = if stable {
        classify_window(&window, tol)
    } else {
        RightLimitClass {
            tag: RightLimitTag::Undetermined,
            symbol: None,
            period_data: None,
            perturbation: Vec::new(),
            window,
            subsequence: String::new(),
            indices_used: Vec::new(),
            convergence_error: 0.0,
        }
    };
    class.subsequence = subsequence;
    class.indices_used = used;
    class.convergence_error = dist;
    class
}

/// Classifies a single window: constant diagonals, periodic diagonals,
/// constant up to entries near the centre, or undetermined.
pub fn classify_window(window: &Window, tol: f64) -> RightLimitClass {
    let base = RightLimitClass {
        tag: RightLimitTag::Undetermined,
        symbol: None,
        period_data: None,
        perturbation: Vec::new(),
        window: window.clone(),
        subsequence: String::new(),
        indices_used: Vec::new(),
        convergence_error: 0.0,
    };
    if let Ok(symbol) = laurent_symbol_of(window, tol) {
        return RightLimitClass { tag: RightLimitTag::Laurent, symbol: Some(symbol), ..base };
    }
    let m = window.radius();
    let band = window.size() as i64 - 1;
    for p in 2..=m {
        if let Some(data) = periodic_data(window, p, tol) {
            return RightLimitClass { tag: RightLimitTag::Periodic { p }, period_data: Some(data), ..base };
        }
    }
    // Background from the outermost entries of each diagonal; perturbation
    // must sit in the inner half of the window.
    let r = m as i64;
    let mut background = BTreeMap::new();
    for d in -band..=band {
        let diag = window.diagonal(d);
        if diag.len() < 2 {
            continue;
        }
        let (first, last) = (diag[0], diag[diag.len() - 1]);
        if (first - last).abs() > tol {
            return base;
        }
        background.insert(d, 0.5 * (first + last));
    }
    let mut perturbation = Vec::new();
    for i in -r..=r {
        for j in -r..=r {
            let bg = background.get(&(i - j)).copied().unwrap_or(0.0);
            let delta = window.get(i, j) - bg;
            if delta.abs() > tol {
                if i.abs() > r / 2 || j.abs() > r / 2 {
                    return base;
                }
                perturbation.push((i, j, delta));
            }
        }
    }
    RightLimitClass {
        tag: RightLimitTag::LaurentPlusFiniteRank,
        symbol: Some(LaurentSymbol::from_coeffs(background)),
        perturbation,
        ..base
    }
}

fn periodic_data(window: &Window, p: usize, tol: f64) -> Option<BTreeMap<String, Vec<f64>>> {
    let m = window.radius() as i64;
    let band = window.bandwidth().max(1) as i64;
    let mut data = BTreeMap::new();
    for d in -band..=band {
        // rows r with both r and r - d inside the window
        let rows: Vec<i64> = (-m..=m).filter(|r| (r - d).abs() <= m).collect();
        let val = |r: i64| window.get(r, r - d);
        for &r in &rows {
            if rows.contains(&(r + p as i64)) && (val(r) - val(r + p as i64)).abs() > tol {
                return None;
            }
        }
        let period: Vec<f64> = (0..p as i64)
            .map(|k| {
                let r = rows.iter().copied().find(|r| (r - k).rem_euclid(p as i64) == 0).unwrap_or(k);
                val(r)
            })
            .collect();
        if period.iter().any(|v| *v != 0.0) {
            data.insert(d.to_string(), period);
        }
    }
    Some(data)
}

/// Symbol of a window whose diagonals are constant within `tol`; the
/// coefficient is the mean of each diagonal.
pub fn laurent_symbol_of(window: &Window, tol: f64) -> Result<LaurentSymbol> {
    let band = window.size() as i64 - 1;
    let mut worst: f64 = 0.0;
    let mut coeffs = Vec::new();
    for d in -band..=band {
        let diag = window.diagonal(d);
        let mean = diag.iter().sum::<f64>() / diag.len() as f64;
        let dev = diag.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
        coeffs.push((d, mean));
    }
    if worst > tol {
        return Err(Error::NotLaurent { deviation: worst, tol });
    }
    Ok(LaurentSymbol::from_coeffs(coeffs))
}
