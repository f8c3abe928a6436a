//! Limiting variances `Σ k f̂_k f̂_{-k}` for several symbols and test functions.

use spectral_clt::symbols::{clt_variance, DEFAULT_FOURIER_GRID, DEFAULT_FOURIER_TRUNCATION};
use spectral_clt::{LaurentSymbol, TestFunction};

fn main() -> spectral_clt::Result<()> {
    let symbols = [
        ("w + 1/w", LaurentSymbol::jacobi(1.0, 0.0)),
        ("(w + 1/w)/2", LaurentSymbol::jacobi(0.5, 0.0)),
        ("w² + 1/w²", LaurentSymbol::from_coeffs([(2, 1.0), (-2, 1.0)])),
    ];
    let functions = [
        TestFunction::identity(),
        TestFunction::Polynomial { coeffs: vec![0.0, 0.0, 1.0] },
        TestFunction::Sin { freq: 1.0 },
        TestFunction::SmoothIndicator { lo: -0.5, hi: 0.5, width: 0.5 },
    ];
    for (name, s) in &symbols {
        for f in &functions {
            let fc = f.fourier(s, DEFAULT_FOURIER_TRUNCATION, DEFAULT_FOURIER_GRID)?;
            println!("{name:12} {f:?}: variance {:.10} (tail {:.1e})", clt_variance(&fc), fc.tail_estimate);
        }
    }

    // Conjugating by diag(r^k) rescales s_k but not the variance of a polynomial f.
    let s = LaurentSymbol::from_coeffs([(-1, 0.3), (0, 0.1), (1, 2.0)]);
    for r in [0.5, 1.0, 2.0, 3.0] {
        let sr = s.scaling_conjugation(r)?;
        let fc = TestFunction::identity().fourier(&sr, 8, 64)?;
        println!("r = {r}: f̂₁ = {:.3}, variance {:.12}", fc.get(1), clt_variance(&fc));
    }
    Ok(())
}
