//! Lozenge tilings of a hexagon: a vertical section is a Hahn ensemble.

use spectral_clt::dpp::{build_kernel, exact_moments};
use spectral_clt::ensembles::Hexagon;

fn main() -> spectral_clt::Result<()> {
    for m in [10, 20, 30, 40] {
        let hex = Hexagon { a: 25, b: 30, c: 20, m };
        let spec = hex.hahn_spec()?;
        let n = spec.size().unwrap();
        let k = build_kernel(&spec.coefficients()?, &spec.measure().expect("discrete")?, n)?;
        let (mean, var) = exact_moments(&k, |x| x);
        println!("m = {m}: {spec:?}  mean {mean:.4} variance {var:.6}");
    }
    Ok(())
}
