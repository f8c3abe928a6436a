//! Command layer behind the `spectral-clt` binary.
//!
//! Every command reads an optional JSON [`RunConfig`], writes one JSON report
//! (to `--out` or stdout) and, when `--out` is given, a CSV table next to it.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::banded::{poly_apply, window_extract, BandedMatrix};
use crate::cumulants::{CumulantReport, DEFAULT_MAX_ORDER};
use crate::dpp::{self, KernelMatrix};
use crate::ensembles::{discriminant, magic_formula_residual, two_matrix_symbols, EnsembleSpec, Hexagon};
use crate::error::{Error, Result};
use crate::fredholm::{hhp_check, szego_limit_check};
use crate::functions::{Interval, TestFunction};
use crate::poly::Polynomial;
use crate::right_limits::{
    detect_right_limit, detect_with, CoefficientSequence, RightLimitClass, SubsequenceScheme, DEFAULT_TOL,
};
use crate::symbols::{clt_variance, LaurentSymbol, DEFAULT_FOURIER_GRID, DEFAULT_FOURIER_TRUNCATION};
use crate::SCHEMA;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNDETERMINED: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

const SZEGO_ACCEPT: f64 = 1e-3;
const MAGIC_ACCEPT: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "spectral-clt",
    version,
    about = "Cumulants, right limits and CLT predictions for polynomial ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report path; a CSV table is written beside it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed, overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Omit the timestamp so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub stable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Right limit, symbol and limiting variance.
    Predict,
    /// Finite-n cumulants with limits and bounds.
    Cumulants,
    /// Exact DPP sampling checked against exact moments.
    Sample,
    /// Finite-section Szegő-type determinant limit.
    Szego,
    /// Right-limit detection along a subsequence.
    Rightlimit,
    /// Discriminant, band set and magic formula of a periodic matrix.
    Discriminant,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierConfig {
    pub truncation: Option<usize>,
    pub grid: Option<usize>,
}

/// Run configuration. All fields are optional; each command reads the
/// ones it needs.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub ensemble: Option<EnsembleSpec>,
    /// Test function, identity when absent.
    pub function: Option<TestFunction>,
    /// Interval `E` on which a C¹ test function is prescribed.
    pub interval: Option<Interval>,
    /// Polynomial `Q` (ascending coefficients) applied to `J` before `f`.
    pub q: Option<Polynomial>,
    /// For periodic ensembles: use `Q = Δ`.
    pub multi_interval: bool,
    pub subsequence: Option<SubsequenceScheme>,
    pub radius: Option<usize>,
    pub tol: Option<f64>,
    pub budget: Option<usize>,
    pub orders: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub max_order: Option<usize>,
    pub draws: Option<usize>,
    pub seed: Option<u64>,
    pub fourier: FourierConfig,
    pub symbol: Option<LaurentSymbol>,
    pub section: Option<usize>,
    pub hexagon: Option<Hexagon>,
    pub cache_dir: Option<PathBuf>,
    /// Use the closed-form right limit of the ensemble instead of detecting one.
    pub use_closed_form_limit: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn ensemble(&self) -> Result<EnsembleSpec> {
        match (&self.ensemble, &self.hexagon) {
            (Some(e), _) => Ok(e.clone()),
            (None, Some(h)) => h.hahn_spec(),
            (None, None) => Err(Error::Config("an `ensemble` (or `hexagon`) is required".into())),
        }
    }

    fn function(&self) -> TestFunction {
        self.function.clone().unwrap_or_else(TestFunction::identity)
    }

    fn truncation(&self) -> usize {
        self.fourier.truncation.unwrap_or(DEFAULT_FOURIER_TRUNCATION)
    }

    fn grid(&self) -> usize {
        self.fourier.grid.unwrap_or(DEFAULT_FOURIER_GRID)
    }

    fn radius(&self) -> usize {
        self.radius.unwrap_or(4)
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    fn budget(&self) -> usize {
        self.budget.unwrap_or(16)
    }

    fn scheme(&self) -> SubsequenceScheme {
        self.subsequence.clone().unwrap_or(SubsequenceScheme::Arithmetic { start: 1000, step: 1000 })
    }

    /// `Q` from the config, or the discriminant for `multi_interval`.
    fn transform(&self, ens: &EnsembleSpec) -> Result<Option<Polynomial>> {
        if self.multi_interval {
            return match ens {
                EnsembleSpec::Periodic { a, b } => Ok(Some(discriminant(a, b)?.coeffs)),
                _ => Err(Error::Config("multi_interval needs a periodic ensemble".into())),
            };
        }
        Ok(self.q.clone())
    }
}

/// Result of a command before it is written out.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Value,
    pub csv: Option<Table>,
    pub code: i32,
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::InvalidArgument(_)
        | Error::InvalidParameters(_)
        | Error::NonSymmetricSymbol { .. }
        | Error::OrderOverflow { .. } => EXIT_CONFIG,
        _ => EXIT_VALIDATION,
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let mut outcome = run_command(cli.command, &cfg)?;
    if let Value::Object(map) = &mut outcome.report {
        map.insert("schema".into(), json!(SCHEMA));
        map.insert("exit_code".into(), json!(outcome.code));
        if !cli.stable {
            let secs =
                std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            map.insert("generated_at".into(), json!(secs));
        }
    }
    let text = serde_json::to_string_pretty(&outcome.report)?;
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text + "\n")?;
            if let Some(t) = &outcome.csv {
                t.write(&path.with_extension("csv"))?;
            }
        }
        None => println!("{text}"),
    }
    Ok(outcome.code)
}

/// Runs one command on a parsed config.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Command::Predict => cmd_predict(cfg),
        Command::Cumulants => cmd_cumulants(cfg),
        Command::Sample => cmd_sample(cfg),
        Command::Szego => cmd_szego(cfg),
        Command::Rightlimit => cmd_rightlimit(cfg),
        Command::Discriminant => cmd_discriminant(cfg),
    }
}

/// Right limit of `J` (or of `Q(J)` when `q` is set) along the configured subsequence.
fn detect(cfg: &RunConfig, seq: &CoefficientSequence, q: Option<&Polynomial>) -> Result<RightLimitClass> {
    let (radius, tol, scheme) = (cfg.radius(), cfg.tol(), cfg.scheme());
    match q {
        None => detect_right_limit(seq, &scheme, radius, tol, cfg.budget()),
        Some(q) => {
            let indices = scheme.indices(seq, cfg.budget().max(2))?;
            let window = |nj: usize| window_extract(&poly_apply(&seq.matrix(nj), q), nj, radius);
            Ok(detect_with(window, &indices, tol, format!("{} of Q(J)", scheme.describe())))
        }
    }
}

fn variance_of(cfg: &RunConfig, f: &TestFunction, s: &LaurentSymbol) -> Result<Value> {
    if let Some(e) = cfg.interval.filter(|_| f.as_polynomial().is_none()) {
        if !e.covers_symbol(s, cfg.grid()) {
            return Err(Error::InvalidArgument(format!(
                "the symbol range leaves the interval [{}, {}] on which f is prescribed",
                e.lo, e.hi
            )));
        }
    }
    let fc = f.fourier(s, cfg.truncation(), cfg.grid())?;
    let var = clt_variance(&fc);
    Ok(json!({
        "symbol": s,
        "fourier": fc,
        "variance": var,
    }))
}

fn symbol_table(s: &LaurentSymbol, f: &TestFunction, points: usize) -> Table {
    let mut t = Table::new(&["theta", "symbol", "f_of_symbol"]);
    if s.is_real_on_circle() {
        for j in 0..points {
            let theta = 2.0 * PI * j as f64 / points as f64;
            let v = s.eval_on_circle(theta);
            t.rows.push(vec![theta, v, f.eval(v)]);
        }
    }
    t
}

fn cmd_predict(cfg: &RunConfig) -> Result<Outcome> {
    let ens = cfg.ensemble()?;
    let f = cfg.function();
    if let EnsembleSpec::TwoMatrixSymbolic { v2, tau, a, b } = &ens {
        let (s1, s2) = two_matrix_symbols(&Polynomial::new(v2.clone()), *tau, *a, *b)?;
        let first = variance_of(cfg, &f, &s1)?;
        let second = variance_of(cfg, &f, &s2)?;
        return Ok(Outcome {
            report: json!({
                "command": "predict",
                "ensemble": ens,
                "function": f,
                "first_species": first,
                "second_species": second,
            }),
            csv: Some(symbol_table(&s2, &f, 256)),
            code: EXIT_OK,
        });
    }
    let seq = ens.coefficients()?;
    let q = cfg.transform(&ens)?;
    let (symbol, limit) = match ens.limit_symbol().filter(|_| cfg.use_closed_form_limit) {
        Some(s) => {
            let s = match &q {
                Some(q) => s.compose(q),
                None => s,
            };
            (Some(s), json!({"tag": "closed_form"}))
        }
        None => {
            let class = detect(cfg, &seq, q.as_ref())?;
            (class.symbol.clone().filter(|_| class.tag == crate::right_limits::RightLimitTag::Laurent), json!(class))
        }
    };
    let mut report = json!({
        "command": "predict",
        "ensemble": ens,
        "function": f,
        "q": q,
        "right_limit": limit,
    });
    let Some(s) = symbol else {
        report["note"] = json!("no Laurent right limit along this subsequence; no variance prediction");
        return Ok(Outcome { report, csv: None, code: EXIT_UNDETERMINED });
    };
    let pred = variance_of(cfg, &f, &s)?;
    report["prediction"] = pred;
    Ok(Outcome { report, csv: Some(symbol_table(&s, &f, 256)), code: EXIT_OK })
}

/// `f(Q(J^(n)))` and the symbol of its right limit, when known.
fn statistic_matrix(cfg: &RunConfig, ens: &EnsembleSpec, n: usize) -> Result<(BandedMatrix, Option<LaurentSymbol>)> {
    let seq = ens.coefficients()?;
    let q = cfg.transform(ens)?;
    let f = cfg
        .function()
        .as_polynomial()
        .ok_or_else(|| Error::Config("cumulants need a polynomial test function".into()))?;
    let p = match &q {
        Some(q) => f.compose(q),
        None => f,
    };
    let b = poly_apply(&seq.matrix(n), &p);
    let symbol = ens.limit_symbol().map(|s| s.compose(&p));
    Ok((b, symbol))
}

fn cmd_cumulants(cfg: &RunConfig) -> Result<Outcome> {
    let ens = cfg.ensemble()?;
    let n = cfg.n.or(ens.size()).unwrap_or(10);
    let orders = cfg.orders.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
    let (b, symbol) = statistic_matrix(cfg, &ens, n)?;
    let rep = CumulantReport::compute(&b, n, &orders, symbol.as_ref(), cfg.max_order.unwrap_or(DEFAULT_MAX_ORDER))?;
    let mut t = Table::new(&["order", "value", "limit", "bound"]);
    for (i, &m) in rep.orders.iter().enumerate() {
        t.rows.push(vec![
            m as f64,
            rep.values[i],
            rep.limits[i].unwrap_or(f64::NAN),
            rep.bounds[i].unwrap_or(f64::NAN),
        ]);
    }
    Ok(Outcome {
        report: json!({
            "command": "cumulants",
            "ensemble": ens,
            "function": cfg.function(),
            "cumulants": rep,
        }),
        csv: Some(t),
        code: EXIT_OK,
    })
}

fn kernel_for(cfg: &RunConfig, ens: &EnsembleSpec, n: usize) -> Result<KernelMatrix> {
    let measure = ens
        .measure()
        .ok_or_else(|| Error::Config(format!("ensemble {} has no discrete measure to sample", ens.name())))??;
    let seq = ens.coefficients()?;
    match &cfg.cache_dir {
        Some(dir) => {
            let key = dpp::cache_key(&serde_json::to_string(&json!({"ensemble": ens, "n": n}))?);
            dpp::cached_kernel(dir, &key, &seq, &measure, n)
        }
        None => dpp::build_kernel(&seq, &measure, n),
    }
}

fn cmd_sample(cfg: &RunConfig) -> Result<Outcome> {
    let ens = cfg.ensemble()?;
    let n = cfg.n.or(ens.size()).ok_or_else(|| Error::Config("sampling needs the ensemble size `n`".into()))?;
    let draws = cfg.draws.unwrap_or(10_000);
    let seed = cfg.seed.unwrap_or(0);
    let f = cfg.function();
    let k = kernel_for(cfg, &ens, n)?;
    let (mean, var) = dpp::exact_moments(&k, |x| f.eval(x));
    let batch = dpp::sample(&k, draws, seed, |x| f.eval(x))?;
    let emp_mean = batch.mean();
    let emp_var = batch.variance();
    let se = (emp_var / draws as f64).sqrt();
    let mean_ok = (emp_mean - mean).abs() <= 4.0 * se.max(f64::MIN_POSITIVE);
    let var_ok = if var > 0.0 { (emp_var - var).abs() <= 0.1 * var } else { emp_var.abs() < 1e-12 };
    let sizes_ok = batch.draws.iter().all(|d| d.len() == n);
    let normality = dpp::normality_check(&batch, var);
    let passed = mean_ok && var_ok && sizes_ok;
    let mut t = Table::new(&["draw", "value"]);
    t.rows = batch.values.iter().enumerate().map(|(i, v)| vec![i as f64, *v]).collect();
    Ok(Outcome {
        report: json!({
            "command": "sample",
            "ensemble": ens,
            "function": f,
            "n": n,
            "draws": draws,
            "seed": seed,
            "exact": {"mean": mean, "variance": var},
            "empirical": {"mean": emp_mean, "variance": emp_var, "standard_error": se},
            "checks": {
                "every_draw_has_n_points": sizes_ok,
                "mean_within_4_se": mean_ok,
                "variance_within_10_percent": var_ok,
            },
            "kernel": {"trace": k.trace(), "idempotence_residual": k.idempotence_residual()},
            "normality": normality,
            "passed": passed,
        }),
        csv: Some(t),
        code: if passed { EXIT_OK } else { EXIT_VALIDATION },
    })
}

fn cmd_szego(cfg: &RunConfig) -> Result<Outcome> {
    let s = cfg.symbol.clone().unwrap_or_else(|| LaurentSymbol::jacobi(1.0, 0.0));
    let n = cfg.n.unwrap_or(60);
    let size = cfg.section.unwrap_or(400);
    let rep = szego_limit_check(&s, n, size)?;
    let hhp = match hhp_check(&s, size.min(200)) {
        Ok(h) => json!(h),
        Err(e) => json!({"error": e.to_string()}),
    };
    let mut t = Table::new(&["section", "lhs"]);
    t.rows = rep.schedule.iter().zip(&rep.lhs_per_section).map(|(&m, &v)| vec![m as f64, v]).collect();
    let passed = rep.residual < SZEGO_ACCEPT;
    Ok(Outcome {
        report: json!({
            "command": "szego",
            "symbol": s,
            "szego": rep,
            "hhp": hhp,
            "accept_residual": SZEGO_ACCEPT,
            "passed": passed,
        }),
        csv: Some(t),
        code: if passed { EXIT_OK } else { EXIT_VALIDATION },
    })
}

fn cmd_rightlimit(cfg: &RunConfig) -> Result<Outcome> {
    let ens = cfg.ensemble()?;
    let seq = ens.coefficients()?;
    let q = cfg.transform(&ens)?;
    let class = detect(cfg, &seq, q.as_ref())?;
    let code = if class.is_determined() { EXIT_OK } else { EXIT_UNDETERMINED };
    let mut t = Table::new(&["row", "col", "entry"]);
    let r = class.window.radius() as i64;
    for i in -r..=r {
        for k in -r..=r {
            t.rows.push(vec![i as f64, k as f64, class.window.get(i, k)]);
        }
    }
    Ok(Outcome {
        report: json!({
            "command": "rightlimit",
            "ensemble": ens,
            "q": q,
            "right_limit": class,
        }),
        csv: Some(t),
        code,
    })
}

fn cmd_discriminant(cfg: &RunConfig) -> Result<Outcome> {
    let ens = cfg.ensemble()?;
    let EnsembleSpec::Periodic { a, b } = &ens else {
        return Err(Error::Config("discriminant needs a periodic ensemble".into()));
    };
    let d = discriminant(a, b)?;
    let residual = magic_formula_residual(a, b)?;
    let p = d.period as i64;
    let symbol = LaurentSymbol::from_coeffs([(p, 1.0), (-p, 1.0)]);
    let f = cfg.function();
    let pred = variance_of(cfg, &f, &symbol)?;
    let lo = d.bands.first().map_or(-2.0, |b| b.0);
    let hi = d.bands.last().map_or(2.0, |b| b.1);
    let margin = 0.1 * (hi - lo).max(1.0);
    let mut t = Table::new(&["x", "delta"]);
    for j in 0..=400 {
        let x = lo - margin + (hi - lo + 2.0 * margin) * j as f64 / 400.0;
        t.rows.push(vec![x, d.eval(x)]);
    }
    let passed = residual < MAGIC_ACCEPT;
    Ok(Outcome {
        report: json!({
            "command": "discriminant",
            "ensemble": ens,
            "discriminant": d,
            "magic_formula_residual": residual,
            "prediction": pred,
            "passed": passed,
        }),
        csv: Some(t),
        code: if passed { EXIT_OK } else { EXIT_VALIDATION },
    })
}
