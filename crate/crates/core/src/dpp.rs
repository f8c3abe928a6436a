//! Discrete orthogonal polynomial ensembles as projection determinantal
//! point processes: kernels, exact moments and exact sampling.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::right_limits::CoefficientSequence;

/// Largest tolerated `max |VᵀV − I|` for the kernel's orthonormal basis.
pub const ORTHONORMALITY_LIMIT: f64 = 1e-6;
/// Tolerance for the projection checks `K² = K`, `Tr K = n`.
pub const PROJECTION_TOL: f64 = 1e-8;
/// Default Kolmogorov–Smirnov threshold (engineering default).
pub const DEFAULT_KS_THRESHOLD: f64 = 0.02;
/// Default bound on `|κ₃| / σ³` (engineering default).
pub const DEFAULT_SKEW_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidArgument("nodes and weights must be non-empty and of equal length".into()));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Symmetrised kernel `√w_i K_n(x_i, x_j) √w_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    nodes: Vec<f64>,
    rank: usize,
    entries: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `max |K² − K|`.
    pub fn idempotence_residual(&self) -> f64 {
        (&self.entries * &self.entries - &self.entries).amax()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Refuses kernels that are not rank-`n` orthogonal projections.
    pub fn check_projection(&self) -> Result<()> {
        let asym = (&self.entries - self.entries.transpose()).amax();
        if asym > PROJECTION_TOL {
            return Err(Error::NotProjection(format!("asymmetry {asym:e}")));
        }
        let tr = (self.trace() - self.rank as f64).abs();
        if tr > PROJECTION_TOL {
            return Err(Error::NotProjection(format!("trace differs from rank by {tr:e}")));
        }
        let idem = self.idempotence_residual();
        if idem > PROJECTION_TOL {
            return Err(Error::NotProjection(format!("|K^2 - K| = {idem:e}")));
        }
        Ok(())
    }
}

/// Kernel of the ensemble of size `n`: `V_{ik} = √w_i p_k(x_i)` by the
/// forward three-term recurrence of `seq` (as `J^(n)`), then `K = V Vᵀ`.
///
/// Forward recurrence loses orthonormality at degrees close to the number
/// of nodes. In that case the basis is taken from the eigenvectors of the
/// finite Jacobi matrix instead (its eigenvector matrix is exactly
/// `√w_i p_k(x_i)`), after checking that its eigenvalues are the nodes.
pub fn build_kernel(seq: &CoefficientSequence, measure: &DiscreteMeasure, n: usize) -> Result<KernelMatrix> {
    let size = measure.len();
    if n == 0 || n > size {
        return Err(Error::InvalidArgument(format!("kernel rank must be in 1..={size} (number of nodes), got {n}")));
    }
    let v = match forward_basis(seq, measure, n) {
        Ok(v) => v,
        Err(Error::Orthonormality { residual, .. }) => spectral_basis(seq, measure, n).map_err(|e| match e {
            Error::Orthonormality { .. } => Error::Orthonormality { residual, limit: ORTHONORMALITY_LIMIT },
            other => other,
        })?,
        Err(e) => return Err(e),
    };
    let entries = &v * v.transpose();
    Ok(KernelMatrix { nodes: measure.nodes().to_vec(), rank: n, entries })
}

fn orthonormality_residual(v: &DMatrix<f64>) -> f64 {
    let n = v.ncols();
    (v.transpose() * v - DMatrix::<f64>::identity(n, n)).amax()
}

fn forward_basis(seq: &CoefficientSequence, measure: &DiscreteMeasure, n: usize) -> Result<DMatrix<f64>> {
    let size = measure.len();
    let x = measure.nodes();
    let w = measure.weights();
    let p0 = 1.0 / w.iter().sum::<f64>().sqrt();
    let mut v = DMatrix::<f64>::zeros(size, n);
    for i in 0..size {
        let mut prev = 0.0;
        let mut cur = p0;
        v[(i, 0)] = cur;
        for k in 1..n {
            let a = seq.a(n, k);
            if !(a > 0.0) {
                return Err(Error::InvalidArgument(format!("recurrence coefficient a_{k} = {a} is not positive")));
            }
            let a_prev = if k >= 2 { seq.a(n, k - 1) } else { 0.0 };
            let next = ((x[i] - seq.b(n, k)) * cur - a_prev * prev) / a;
            prev = cur;
            cur = next;
            v[(i, k)] = cur;
        }
        let sw = w[i].sqrt();
        v.row_mut(i).scale_mut(sw);
    }
    let residual = orthonormality_residual(&v);
    if !(residual <= ORTHONORMALITY_LIMIT) {
        return Err(Error::Orthonormality { residual, limit: ORTHONORMALITY_LIMIT });
    }
    Ok(v)
}

fn spectral_basis(seq: &CoefficientSequence, measure: &DiscreteMeasure, n: usize) -> Result<DMatrix<f64>> {
    let size = measure.len();
    let j = seq.matrix(n).dense_block(1, size);
    let eig = j.symmetric_eigen();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let x = measure.nodes();
    let mismatch = order.iter().zip(x).map(|(&k, xi)| (eig.eigenvalues[k] - xi).abs()).fold(0.0, f64::max);
    if mismatch > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "recurrence does not match the measure: eigenvalues differ from nodes by {mismatch:e}"
        )));
    }
    let mut v = DMatrix::<f64>::zeros(size, n);
    for (i, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let sign = if col[0] < 0.0 { -1.0 } else { 1.0 };
        for d in 0..n {
            v[(i, d)] = sign * col[d];
        }
    }
    let residual = orthonormality_residual(&v);
    if !(residual <= ORTHONORMALITY_LIMIT) {
        return Err(Error::Orthonormality { residual, limit: ORTHONORMALITY_LIMIT });
    }
    Ok(v)
}

/// Exact `(E X_f, Var X_f)`: `Σ f_i K_ii` and `½ ΣΣ (f_i − f_j)² K_ij²`.
pub fn exact_moments<F: Fn(f64) -> f64>(k: &KernelMatrix, f: F) -> (f64, f64) {
    let fx: Vec<f64> = k.nodes.iter().map(|&x| f(x)).collect();
    let e = &k.entries;
    let size = fx.len();
    let mean = (0..size).map(|i| fx[i] * e[(i, i)]).sum();
    let mut var = 0.0;
    for j in 0..size {
        for i in 0..j {
            let d = fx[i] - fx[j];
            var += d * d * e[(i, j)] * e[(i, j)];
        }
    }
    (mean, var)
}

/// Independent exact draws from a projection DPP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub seed: u64,
    pub n: usize,
    /// Sorted node indices of every draw.
    pub draws: Vec<Vec<usize>>,
    /// `X_f` of every draw.
    pub values: Vec<f64>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (self.len() as f64 - 1.0)
    }

    /// One row per draw: `draw,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["draw", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws from the DPP with kernel `k`; draw `i` uses a ChaCha8 stream
/// `(seed, i)`, so the batch does not depend on the number of workers.
pub fn sample<F>(k: &KernelMatrix, draws: usize, seed: u64, f: F) -> Result<SampleBatch>
where
    F: Fn(f64) -> f64 + Sync,
{
    k.check_projection()?;
    let fx: Vec<f64> = k.nodes.iter().map(|&x| f(x)).collect();
    let out: Vec<(Vec<usize>, f64)> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let pts = draw_one(k, &mut rng);
            let v = pts.iter().map(|&j| fx[j]).sum();
            (pts, v)
        })
        .collect();
    let (draws, values) = out.into_iter().unzip();
    Ok(SampleBatch { seed, n: k.rank, draws, values })
}

/// Sequential conditioning for a projection kernel: pick `i` with
/// probability `d_i / Σd`, then project the chosen direction out.
fn draw_one(k: &KernelMatrix, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let e = &k.entries;
    let size = k.size();
    let mut d: Vec<f64> = (0..size).map(|i| e[(i, i)].max(0.0)).collect();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k.rank);
    let mut picked = Vec::with_capacity(k.rank);
    for _ in 0..k.rank {
        let total: f64 = d.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut i = size - 1;
        for (j, &dj) in d.iter().enumerate() {
            if u < dj {
                i = j;
                break;
            }
            u -= dj;
        }
        while d[i] <= 0.0 && i > 0 {
            i -= 1;
        }
        let mut c: Vec<f64> = (0..size).map(|r| e[(r, i)]).collect();
        for prev in &cols {
            let s = prev[i];
            c.iter_mut().zip(prev).for_each(|(cj, pj)| *cj -= s * pj);
        }
        let norm = d[i].sqrt();
        c.iter_mut().for_each(|x| *x /= norm);
        for (dj, cj) in d.iter_mut().zip(&c) {
            *dj = (*dj - cj * cj).max(0.0);
        }
        d[i] = 0.0;
        cols.push(c);
        picked.push(i);
    }
    picked.sort_unstable();
    picked
}

/// Distributional comparison of a batch with `N(0, predicted_variance)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub draws: usize,
    pub mean: f64,
    pub variance: f64,
    pub predicted_variance: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub ks_distance: f64,
    pub ks_threshold: f64,
    pub skew_threshold: f64,
    pub passed: bool,
    pub note: String,
}

pub fn normality_check(batch: &SampleBatch, predicted_variance: f64) -> NormalityReport {
    normality_check_with(batch, predicted_variance, DEFAULT_KS_THRESHOLD, DEFAULT_SKEW_THRESHOLD)
}

pub fn normality_check_with(
    batch: &SampleBatch,
    predicted_variance: f64,
    ks_threshold: f64,
    skew_threshold: f64,
) -> NormalityReport {
    let n = batch.len();
    let mean = batch.mean();
    let centered: Vec<f64> = batch.values.iter().map(|v| v - mean).collect();
    let moment = |p: i32| centered.iter().map(|x| x.powi(p)).sum::<f64>() / n as f64;
    let (m2, m3, m4) = (moment(2), moment(3), moment(4));
    let kappa3 = m3;
    let kappa4 = m4 - 3.0 * m2 * m2;
    let ks_distance = match Normal::new(0.0, predicted_variance.sqrt()) {
        Ok(normal) => {
            let mut sorted = centered.clone();
            sorted.sort_by(f64::total_cmp);
            sorted
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let c = normal.cdf(x);
                    (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
                })
                .fold(0.0, f64::max)
        }
        Err(_) => f64::INFINITY,
    };
    let sigma3 = predicted_variance.max(0.0).powf(1.5);
    let enough = n >= 1000;
    let passed = enough && ks_distance < ks_threshold && kappa3.abs() < skew_threshold * sigma3;
    let note = if enough {
        "thresholds are engineering defaults, not consequences of the limit theorem".to_string()
    } else {
        format!("only {n} draws; at least 1000 are needed for a verdict")
    };
    NormalityReport {
        draws: n,
        mean,
        variance: batch.variance(),
        predicted_variance,
        kappa3,
        kappa4,
        ks_distance,
        ks_threshold,
        skew_threshold,
        passed,
        note,
    }
}

/// Exact variances along a list of sizes, flagged when strictly increasing
/// (the signature of a jump function, whose variance grows like `log n`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceGrowth {
    pub sizes: Vec<usize>,
    pub variances: Vec<f64>,
    pub increasing: bool,
}

impl VarianceGrowth {
    pub fn new(sizes: Vec<usize>, variances: Vec<f64>) -> Self {
        let increasing = variances.windows(2).all(|w| w[1] > w[0]);
        Self { sizes, variances, increasing }
    }
}

const CACHE_MAGIC: &[u8; 8] = b"SCLTKERN";

/// Hex SHA-256 of a spec string, used as the kernel cache key.
pub fn cache_key(spec: &str) -> String {
    Sha256::digest(spec.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("kernel-{key}.bin"))
}

/// Layout: magic `SCLTKERN`, `u64` size, `u64` rank (little endian), then
/// `size²` little-endian doubles in row-major order.
pub fn write_kernel(path: &Path, k: &KernelMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&(k.size() as u64).to_le_bytes())?;
    w.write_all(&(k.rank as u64).to_le_bytes())?;
    for i in 0..k.size() {
        for j in 0..k.size() {
            w.write_all(&k.entries[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_kernel(path: &Path, measure: &DiscreteMeasure) -> Result<KernelMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Config(format!("{} is not a kernel cache file", path.display())));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let size = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let rank = u64::from_le_bytes(word) as usize;
    if size != measure.len() {
        return Err(Error::Config(format!("kernel cache has size {size}, measure has {} nodes", measure.len())));
    }
    let mut data = vec![0.0; size * size];
    for x in data.iter_mut() {
        r.read_exact(&mut word)?;
        *x = f64::from_le_bytes(word);
    }
    Ok(KernelMatrix { nodes: measure.nodes().to_vec(), rank, entries: DMatrix::from_row_slice(size, size, &data) })
}

/// Loads the kernel from `dir` if cached under `key`, otherwise builds and stores it.
pub fn cached_kernel(
    dir: &Path,
    key: &str,
    seq: &CoefficientSequence,
    measure: &DiscreteMeasure,
    n: usize,
) -> Result<KernelMatrix> {
    let path = cache_path(dir, key);
    if path.exists() {
        let k = read_kernel(&path, measure)?;
        if k.rank == n {
            return Ok(k);
        }
    }
    let k = build_kernel(seq, measure, n)?;
    std::fs::create_dir_all(dir)?;
    write_kernel(&path, &k)?;
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{hahn_measure, EnsembleSpec};

    fn hahn_kernel(n: usize) -> KernelMatrix {
        let spec = EnsembleSpec::Hahn { alpha: 1.0, beta: 1.0, big_n: 60, n: n.min(60) };
        let mu = hahn_measure(1.0, 1.0, 60).unwrap();
        build_kernel(&spec.coefficients().unwrap(), &mu, n).unwrap()
    }

    #[test]
    fn full_rank_kernel_is_identity() {
        let k = hahn_kernel(61);
        assert!((k.entries() - DMatrix::<f64>::identity(61, 61)).amax() < 1e-9);
    }

    #[test]
    fn hahn_kernel_is_projection() {
        let k = hahn_kernel(20);
        assert!((k.trace() - 20.0).abs() < 1e-8);
        assert!(k.idempotence_residual() < 1e-8);
        k.check_projection().unwrap();
    }

    #[test]
    fn large_hahn_kernel_is_projection() {
        let spec = EnsembleSpec::Hahn { alpha: 1.0, beta: 1.0, big_n: 240, n: 80 };
        let mu = hahn_measure(1.0, 1.0, 240).unwrap();
        let k = build_kernel(&spec.coefficients().unwrap(), &mu, 80).unwrap();
        k.check_projection().unwrap();
    }

    #[test]
    fn constant_has_no_variance() {
        let (mean, var) = exact_moments(&hahn_kernel(20), |_| 3.0);
        assert!((mean - 60.0).abs() < 1e-9);
        assert!(var.abs() < 1e-12);
    }

    #[test]
    fn draws_have_n_points_and_are_reproducible() {
        let k = hahn_kernel(20);
        let a = sample(&k, 200, 7, |x| x).unwrap();
        assert!(a.draws.iter().all(|d| d.len() == 20 && d.windows(2).all(|w| w[0] < w[1])));
        let b = sample(&k, 200, 7, |x| x).unwrap();
        assert_eq!(a, b);
        let c = sample(&k, 200, 8, |x| x).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn non_projection_is_refused() {
        let mut k = hahn_kernel(20);
        k.entries *= 0.5;
        assert!(matches!(sample(&k, 10, 0, |x| x), Err(Error::NotProjection(_))));
    }

    #[test]
    fn calibration_with_gaussian_input() {
        // synthetic N(0, 1) values via Box–Muller
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..100_000)
            .map(|_| {
                let (u, v): (f64, f64) = (rng.random(), rng.random());
                (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
            })
            .collect();
        let batch = SampleBatch { seed: 1, n: 0, draws: Vec::new(), values };
        let r = normality_check(&batch, 1.0);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn kernel_cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = EnsembleSpec::Hahn { alpha: 1.0, beta: 1.0, big_n: 60, n: 20 };
        let mu = hahn_measure(1.0, 1.0, 60).unwrap();
        let key = cache_key(&serde_json::to_string(&spec).unwrap());
        let seq = spec.coefficients().unwrap();
        let k1 = cached_kernel(dir.path(), &key, &seq, &mu, 20).unwrap();
        assert!(cache_path(dir.path(), &key).exists());
        let k2 = cached_kernel(dir.path(), &key, &seq, &mu, 20).unwrap();
        assert_eq!(k1, k2);
        let bytes = std::fs::read(cache_path(dir.path(), &key)).unwrap();
        assert_eq!(bytes.len(), 8 + 16 + 61 * 61 * 8);
    }
}
