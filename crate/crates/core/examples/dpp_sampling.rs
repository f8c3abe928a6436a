//! Exact sampling of the Hahn ensemble and comparison with exact moments.

use spectral_clt::dpp::{build_kernel, exact_moments, normality_check, sample};
use spectral_clt::ensembles::EnsembleSpec;

fn main() -> spectral_clt::Result<()> {
    let spec = EnsembleSpec::Hahn { alpha: 1.0, beta: 1.0, big_n: 240, n: 80 };
    let measure = spec.measure().expect("discrete ensemble")?;
    let k = build_kernel(&spec.coefficients()?, &measure, 80)?;
    println!("trace {:.10}, ‖K² − K‖ = {:.1e}", k.trace(), k.idempotence_residual());

    let (mean, var) = exact_moments(&k, |x| x);
    let batch = sample(&k, 10_000, 2024, |x| x)?;
    println!("exact mean {mean:.6}, variance {var:.6}");
    println!("sample mean {:.6}, variance {:.6}", batch.mean(), batch.variance());
    let rep = normality_check(&batch, var);
    println!("KS {:.4}, κ₃ {:.2e}, κ₄ {:.2e}, passed {}", rep.ks_distance, rep.kappa3, rep.kappa4, rep.passed);
    Ok(())
}
