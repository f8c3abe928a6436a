//! Hahn recurrence coefficients: closed form versus a Lanczos run on the
//! weights, and convergence of the rescaled coefficients to their limit.

use spectral_clt::ensembles::{hahn_coefficients, hahn_limit, hahn_measure, recurrence_from_measure};

fn main() -> spectral_clt::Result<()> {
    let (alpha, beta, big_n) = (1.0, 1.0, 60);
    let m = hahn_measure(alpha, beta, big_n)?;
    let lanczos = recurrence_from_measure(m.nodes(), m.weights(), 30)?;
    let worst = (1..30)
        .map(|k| {
            let (a, b) = hahn_coefficients(alpha, beta, big_n, k);
            (a - lanczos.a[k - 1]).abs().max((b - lanczos.b[k - 1]).abs())
        })
        .fold(0.0, f64::max);
    println!("closed form vs Lanczos at N = {big_n}: {worst:.2e}");

    let (a_lim, b_lim) = hahn_limit(0.0, 0.0, 2.0);
    for n in [25, 50, 100, 200, 400] {
        let (a, b) = hahn_coefficients(0.0, 0.0, 2 * n, n);
        println!("n = {n:3}: a_n = {a:.6}, b_n = {b:.6}, error {:.2e}", (a - a_lim).abs().max((b - b_lim).abs()));
    }
    println!("limit: ({a_lim:.6}, {b_lim:.6})");
    Ok(())
}
