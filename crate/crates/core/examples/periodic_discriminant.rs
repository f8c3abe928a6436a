use spectral_clt::ensembles::{discriminant, magic_formula_residual};

fn main() -> spectral_clt::Result<()> {
    let (a, b) = (vec![1.0, 0.5], vec![0.0, 0.0]);
    let d = discriminant(&a, &b)?;
    println!("Δ coefficients (ascending): {:?}", d.coeffs.coeffs());
    println!("bands: {:?}", d.bands);
    println!("Δ(J) vs S² + S⁻²: {:.2e}", magic_formula_residual(&a, &b)?);

    let d3 = discriminant(&[1.0, 0.6, 1.3], &[0.2, -0.4, 0.0])?;
    println!("period 3 bands: {:?}", d3.bands);
    Ok(())
}
