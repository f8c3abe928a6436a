//! Finite-n cumulants of `X_f` for the free Jacobi matrix, next to their limits.

use spectral_clt::cumulants::{cumulant, generating_function, DEFAULT_MAX_ORDER};
use spectral_clt::ensembles::EnsembleSpec;
use spectral_clt::{banded::poly_apply, CumulantReport, LaurentSymbol, Polynomial};

fn main() -> spectral_clt::Result<()> {
    let seq = EnsembleSpec::Chebyshev { a: 1.0, b: 0.0 }.coefficients()?;
    let symbol = LaurentSymbol::jacobi(1.0, 0.0);

    for n in [5, 10, 20, 40] {
        let j = seq.matrix(n);
        let rep = CumulantReport::compute(&j, n, &[1, 2, 3, 4], Some(&symbol), DEFAULT_MAX_ORDER)?;
        println!("n = {n:3}  C = {:?}", rep.values);
    }

    // f(x) = x + x^2 / 2
    let f = Polynomial::new(vec![0.0, 1.0, 0.5]);
    let b = poly_apply(&seq.matrix(30), &f);
    let c2 = cumulant(&b, 30, 2, DEFAULT_MAX_ORDER)?;
    println!("f = x + x²/2: C₂ = {c2:.12}, limit {:.12}", symbol.compose(&f).half_szego_exponent());

    let zs = [0.05, 0.1, 0.15];
    let logs = generating_function(&seq.matrix(20), 20, &zs)?;
    for (z, l) in zs.iter().zip(logs) {
        println!("log E exp(z X) at z = {z}: {l:.12} (z²/2 = {:.12})", z * z / 2.0);
    }
    Ok(())
}
