//! Variance of the number of points below a threshold keeps growing with n,
//! unlike the variance of a smooth statistic.

use spectral_clt::dpp::{build_kernel, exact_moments, VarianceGrowth};
use spectral_clt::ensembles::EnsembleSpec;

fn main() -> spectral_clt::Result<()> {
    let sizes = vec![20, 40, 80];
    let (mut jump, mut smooth) = (Vec::new(), Vec::new());
    for &n in &sizes {
        let spec = EnsembleSpec::SemicircleDiscrete { nodes: 2 * n };
        let k = build_kernel(&spec.coefficients()?, &spec.measure().expect("discrete")?, n)?;
        jump.push(exact_moments(&k, |x| if x <= 0.0 { 1.0 } else { 0.0 }).1);
        smooth.push(exact_moments(&k, |x| x).1);
    }
    println!("indicator: {:?}", VarianceGrowth::new(sizes.clone(), jump));
    println!("identity:  {:?}", VarianceGrowth::new(sizes, smooth));
    Ok(())
}
