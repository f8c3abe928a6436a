//! Dense oracles shared by the integration tests. Nothing here calls into
//! the crate's trace or cumulant code.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use spectral_clt::BandedMatrix;

/// Random banded matrix stored densely on `1..=size`, zero beyond.
#[derive(Clone, Debug)]
pub struct RandomBanded {
    pub lower: usize,
    pub upper: usize,
    pub size: usize,
    pub entries: Vec<f64>,
}

impl RandomBanded {
    pub fn new<R: Rng>(rng: &mut R, lower: usize, upper: usize, size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        for r in 0..size {
            for s in r.saturating_sub(lower)..(r + upper + 1).min(size) {
                entries[r * size + s] = rng.random_range(-0.5..0.5);
            }
        }
        Self { lower, upper, size, entries }
    }

    pub fn get(&self, r: usize, s: usize) -> f64 {
        if r == 0 || s == 0 || r > self.size || s > self.size {
            0.0
        } else {
            self.entries[(r - 1) * self.size + (s - 1)]
        }
    }

    pub fn set(&mut self, r: usize, s: usize, v: f64) {
        self.entries[(r - 1) * self.size + (s - 1)] = v;
    }

    pub fn in_band(&self, r: usize, s: usize) -> bool {
        r <= s + self.lower && s <= r + self.upper
    }

    pub fn banded(&self) -> BandedMatrix {
        let me = Arc::new(self.clone());
        BandedMatrix::from_fn(self.lower, self.upper, move |r, s| me.get(r, s))
    }

    pub fn dense(&self, size: usize) -> DMatrix<f64> {
        DMatrix::from_fn(size, size, |i, j| self.get(i + 1, j + 1))
    }
}

/// Dense top-left block `1..=size` of a banded matrix.
pub fn dense_of(b: &BandedMatrix, size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |i, j| b.get(i + 1, j + 1))
}

/// `Tr B^{l_1} P B^{l_2} P ··· B^{l_j} P` with `P` the leading `n` coordinates.
pub fn dense_trace_product(b: &DMatrix<f64>, n: usize, ls: &[usize]) -> f64 {
    let size = b.nrows();
    let p = DMatrix::from_fn(size, size, |i, j| if i == j && i < n { 1.0 } else { 0.0 });
    let mut prod = DMatrix::identity(size, size);
    for &l in ls {
        let mut bl = DMatrix::identity(size, size);
        for _ in 0..l {
            bl = &bl * b;
        }
        prod = prod * bl * &p;
    }
    prod.trace()
}

fn compositions_into(m: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if m == 0 {
        out.push(prefix.clone());
        return;
    }
    for first in 1..=m {
        prefix.push(first);
        compositions_into(m - first, prefix, out);
        prefix.pop();
    }
}

pub fn all_compositions(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    compositions_into(m, &mut Vec::new(), &mut out);
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `C_m` from the composition expansion of `log det(I + P(e^{zB} - I)P)`,
/// with every trace taken on a dense truncation.
pub fn dense_cumulant(b: &DMatrix<f64>, n: usize, m: usize) -> f64 {
    if m == 1 {
        return dense_trace_product(b, n, &[1]);
    }
    let full = dense_trace_product(b, n, &[m]);
    let mut acc = 0.0;
    for c in all_compositions(m) {
        let j = c.len();
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let denom: f64 = c.iter().map(|&l| factorial(l)).product();
        acc += sign / j as f64 * (dense_trace_product(b, n, &c) - full) / denom;
    }
    acc
}

/// `½ Σ_{r ≤ n < s} B[r,s] B[s,r]`, the second cumulant in closed form.
pub fn second_cumulant_closed_form(b: &DMatrix<f64>, n: usize) -> f64 {
    let size = b.nrows();
    let mut acc = 0.0;
    for r in 0..n {
        for s in n..size {
            acc += b[(r, s)] * b[(s, r)];
        }
    }
    0.5 * acc
}

/// `Σ_k k f̂_k f̂_{-k}` for `f = id` and a symbol given by its coefficients.
pub fn linear_variance(coeffs: &[(i64, f64)]) -> f64 {
    let get = |k: i64| coeffs.iter().filter(|(d, _)| *d == k).map(|(_, c)| c).sum::<f64>();
    coeffs.iter().filter(|(k, _)| *k > 0).map(|&(k, c)| k as f64 * c * get(-k)).sum()
}

/// Exact variance of `Σ f(x_i)` for the projection ensemble of the first
/// `n` eigenvectors of a finite symmetric matrix, computed from scratch.
pub fn projection_variance(jacobi: &DMatrix<f64>, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let eig = jacobi.clone().symmetric_eigen();
    let size = jacobi.nrows();
    // Eigenvectors of the Jacobi matrix; the first component squared is the weight.
    // The kernel on nodes is K = V_n V_n^T with V[i, k] = q_k(x_i) √w_i.
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let nodes: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let v = DMatrix::from_fn(size, n, |i, k| eig.eigenvectors[(k, order[i])]);
    let k = &v * v.transpose();
    let mut var = 0.0;
    for i in 0..size {
        for j in 0..size {
            let d = f(nodes[i]) - f(nodes[j]);
            var += 0.5 * d * d * k[(i, j)] * k[(j, i)];
        }
    }
    var
}
