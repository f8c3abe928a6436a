use spectral_clt::fredholm::{hhp_check, szego_limit_check};
use spectral_clt::LaurentSymbol;

fn main() -> spectral_clt::Result<()> {
    for s in [LaurentSymbol::jacobi(1.0, 0.0), LaurentSymbol::jacobi(0.5, 0.0)] {
        let r = szego_limit_check(&s, 60, 400)?;
        println!("lhs {:.12} rhs {:.12} residual {:.1e} sections {:?}", r.lhs, r.rhs, r.residual, r.schedule);
        let h = hhp_check(&s, 100)?;
        println!("  det e^-T(s+) e^T(s) e^-T(s-) = {:.12}", h.det);
    }
    let s = LaurentSymbol::from_coeffs([(-2, 0.3), (-1, -0.2), (1, 0.5), (2, 0.1)]);
    let r = szego_limit_check(&s, 40, 200)?;
    println!("non-symmetric symbol: lhs {:.12} rhs {:.12}", r.lhs, r.rhs);
    Ok(())
}
