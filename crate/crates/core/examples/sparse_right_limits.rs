//! Sparse perturbations of the free Jacobi matrix: right limits at the
//! perturbation sites are free plus a rank-one term, in between they are free.

use spectral_clt::ensembles::EnsembleSpec;
use spectral_clt::right_limits::{detect_right_limit, DEFAULT_TOL};
use spectral_clt::SubsequenceScheme;

fn main() -> spectral_clt::Result<()> {
    let fixed = EnsembleSpec::SparseFixed { b_tilde: 0.7, scale: 10 }.coefficients()?;
    let decaying = EnsembleSpec::SparseDecaying { amp: 1.0, decay: 1.0, growth: 2.0 }.coefficients()?;
    for (name, seq) in [("fixed", &fixed), ("decaying", &decaying)] {
        for landmark in ["sites", "mid-gap"] {
            let scheme = SubsequenceScheme::Sites { name: landmark.into() };
            let class = detect_right_limit(seq, &scheme, 3, DEFAULT_TOL, 6)?;
            println!(
                "{name:8} {landmark:8} {:?} perturbation {:?} (last change {:.1e})",
                class.tag, class.perturbation, class.convergence_error
            );
        }
    }
    Ok(())
}
