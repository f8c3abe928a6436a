//! Two different Gaussian limits from one Jacobi matrix: right limits along
//! the centres of the A and C blocks.

use spectral_clt::cumulants::{cumulant, DEFAULT_MAX_ORDER};
use spectral_clt::ensembles::EnsembleSpec;
use spectral_clt::right_limits::{detect_right_limit, DEFAULT_TOL};
use spectral_clt::symbols::clt_variance;
use spectral_clt::{SubsequenceScheme, TestFunction};

fn main() -> spectral_clt::Result<()> {
    let seq = EnsembleSpec::BlocksExample1.coefficients()?;
    for block in ["A", "C"] {
        let scheme = SubsequenceScheme::BlockCenters { block: block.into() };
        let class = detect_right_limit(&seq, &scheme, 4, DEFAULT_TOL, 8)?;
        let s = class.symbol.clone().expect("Laurent limit");
        let var = clt_variance(&TestFunction::identity().fourier(&s, 8, 64)?);
        println!("block {block}: {:?} symbol {:?} variance {var}", class.tag, s.iter().collect::<Vec<_>>());
        for &nj in &class.indices_used {
            let c2 = cumulant(&seq.matrix(nj), nj, 2, DEFAULT_MAX_ORDER)?;
            println!("   n = {nj:10}  2 C₂ = {:.12}", 2.0 * c2);
        }
    }

    let seq2 = EnsembleSpec::BlocksExample2.coefficients()?;
    let scheme = SubsequenceScheme::TargetA { a: 0.75, tol: 5e-3 };
    let class = detect_right_limit(&seq2, &scheme, 2, 5e-3, 8)?;
    println!("example 2, a → 0.75: {:?} at {:?}", class.tag, class.indices_used);
    Ok(())
}
