//! Symbols of the two-matrix model and the variance they predict for
//! polynomial statistics of each species.

use spectral_clt::ensembles::two_matrix_symbols;
use spectral_clt::symbols::clt_variance;
use spectral_clt::{Polynomial, TestFunction};

fn main() -> spectral_clt::Result<()> {
    // V₂(y) = y⁴/4
    let v2 = Polynomial::new(vec![0.0, 0.0, 0.0, 0.0, 0.25]);
    let (s1, s2) = two_matrix_symbols(&v2, 0.8, 1.0, 0.0)?;
    println!("s₁ = {:?}", s1.iter().collect::<Vec<_>>());
    println!("s₂ = {:?}", s2.iter().collect::<Vec<_>>());
    for coeffs in [vec![0.0, 1.0], vec![0.0, 0.0, 1.0]] {
        let f = TestFunction::Polynomial { coeffs };
        let v1 = clt_variance(&f.fourier(&s1, 0, 0)?);
        let v2 = clt_variance(&f.fourier(&s2, 0, 0)?);
        println!("{f:?}: first species {v1:.6}, second species {v2:.6}");
    }
    // C¹ functions need a symbol that is real on the circle; s₁ is not.
    println!("{}", TestFunction::Sin { freq: 1.0 }.fourier(&s1, 32, 256).unwrap_err());
    Ok(())
}
