mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{dense_cumulant, dense_of, dense_trace_product, projection_variance, RandomBanded};
use spectral_clt::banded::{poly_apply, trace_product, window_extract};
use spectral_clt::cumulants::{cumulant, cumulant_bound, generating_function, DEFAULT_MAX_ORDER};
use spectral_clt::dpp::exact_moments;
use spectral_clt::ensembles::{discriminant, magic_formula_residual, EnsembleSpec};
use spectral_clt::fredholm::{hankel_section, szego_limit_check, toeplitz_section};
use spectral_clt::right_limits::classify_window;
use spectral_clt::symbols::{clt_variance, fourier_of_composition, fourier_of_polynomial};
use spectral_clt::{BandedMatrix, LaurentSymbol, Polynomial, TestFunction, Window};

fn symbol_strategy(max_deg: i64, symmetric: bool) -> impl Strategy<Value = LaurentSymbol> {
    prop::collection::vec(-1.0..1.0f64, (2 * max_deg + 1) as usize).prop_map(move |c| {
        LaurentSymbol::from_coeffs((-max_deg..=max_deg).map(|k| {
            let v = if symmetric { c[k.unsigned_abs() as usize] } else { c[(k + max_deg) as usize] };
            (k, v)
        }))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cumulants_match_dense_truncation(seed in any::<u64>(), lower in 0usize..=3, upper in 0usize..=3, n in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = n + 3 * 6 + 4;
        let rb = RandomBanded::new(&mut rng, lower, upper, size);
        let (b, dense) = (rb.banded(), rb.dense(size));
        for m in 1..=5 {
            let want = dense_cumulant(&dense, n, m);
            let got = cumulant(&b, n, m, DEFAULT_MAX_ORDER).unwrap();
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "m = {m}: {got} vs {want}");
        }
        let ls = [2, 1, 1];
        let want = dense_trace_product(&dense, n, &ls);
        prop_assert!((trace_product(&b, n, &ls, DEFAULT_MAX_ORDER).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
        prop_assert!((cumulant(&b, n, 2, 8).unwrap() - common::second_cumulant_closed_form(&dense, n)).abs() < 1e-13);
    }

    #[test]
    fn cumulants_only_see_the_cut(seed in any::<u64>(), band in 1usize..=3, n in 15usize..30, m in 2usize..=4, far in 0.0..10.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = n + 30;
        let rb = RandomBanded::new(&mut rng, band, band, size);
        let mut pert = rb.clone();
        let reach = band * m;
        for r in 1..=size {
            for s in 1..=size {
                if pert.in_band(r, s) && (r.min(s) > n + reach || r.max(s) + reach < n) {
                    pert.set(r, s, far);
                }
            }
        }
        let c0 = cumulant(&rb.banded(), n, m, DEFAULT_MAX_ORDER).unwrap();
        let c1 = cumulant(&pert.banded(), n, m, DEFAULT_MAX_ORDER).unwrap();
        prop_assert_eq!(c0, c1);
    }

    #[test]
    fn cumulants_respect_their_bound(a in prop::collection::vec(0.1..1.5f64, 40), b in prop::collection::vec(-1.0..1.0f64, 40), n in 5usize..30, m in 2usize..=6) {
        let bound = 2.0 * a.iter().cloned().fold(0.0, f64::max) + b.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let j = spectral_clt::CoefficientSequence::from_vectors(a, b).with_bound(bound).matrix(1);
        let c = cumulant(&j, n, m, DEFAULT_MAX_ORDER).unwrap();
        prop_assert!(c.abs() <= cumulant_bound(&j, n, m).unwrap() + 1e-12);
    }

    #[test]
    fn variance_ignores_diagonal_scaling(s in symbol_strategy(3, false), r in 0.2..5.0f64, p in prop::collection::vec(-1.0..1.0f64, 1..4)) {
        let f = Polynomial::new(p);
        let base = clt_variance(&fourier_of_polynomial(&f, &s));
        let scaled = clt_variance(&fourier_of_polynomial(&f, &s.scaling_conjugation(r).unwrap()));
        prop_assert!((base - scaled).abs() <= 1e-9 * base.abs().max(1.0));
    }

    #[test]
    fn polynomial_and_fft_paths_agree(s in symbol_strategy(2, true), p in prop::collection::vec(-1.0..1.0f64, 1..5)) {
        let f = Polynomial::new(p);
        let exact = fourier_of_polynomial(&f, &s);
        let fft = fourier_of_composition(|x| f.eval(x), &s, 32, 512).unwrap();
        for k in -10i64..=10 {
            prop_assert!((exact.get(k) - fft.get(k)).abs() < 1e-10, "k = {k}");
        }
        prop_assert!((clt_variance(&exact) - clt_variance(&fft)).abs() < 1e-9);
    }

    #[test]
    fn magic_formula_holds(a in prop::collection::vec(0.2..2.0f64, 1..5), shift in prop::collection::vec(-1.0..1.0f64, 5)) {
        let b: Vec<f64> = shift[..a.len()].to_vec();
        let d = discriminant(&a, &b).unwrap();
        let lead: f64 = a.iter().map(|x| 1.0 / x).product();
        prop_assert!((d.leading_coeff() - lead).abs() < 1e-9 * lead);
        let residual = magic_formula_residual(&a, &b).unwrap();
        prop_assert!(residual < 1e-8 * lead.max(1.0), "residual {residual}");
        for &(lo, hi) in &d.bands {
            prop_assert!((d.eval(lo).abs() - 2.0).abs() < 1e-6);
            prop_assert!((d.eval(hi).abs() - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn toeplitz_product_identity(a in symbol_strategy(2, false), b in symbol_strategy(2, false)) {
        // T(ab) = T(a) T(b) + H(a) H(b̃), b̃(w) = b(1/w)
        let size = 16;
        let tab = toeplitz_section(&(&a * &b), size).unwrap().matrix;
        let rhs = toeplitz_section(&a, size).unwrap().matrix * toeplitz_section(&b, size).unwrap().matrix
            + hankel_section(&a, size).unwrap().matrix * hankel_section(&b.reflect(), size).unwrap().matrix;
        let keep = size - 4;
        let diff = (tab.view((0, 0), (keep, keep)) - rhs.view((0, 0), (keep, keep))).abs().max();
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn szego_lhs_is_the_generating_function(s in symbol_strategy(2, false), n in 3usize..12) {
        let s = s.scale(0.3 / s.l1_norm().max(1e-9));
        let t = BandedMatrix::toeplitz(&s);
        let log_gf = generating_function(&t, n, &[1.0]).unwrap()[0];
        let rep = szego_limit_check(&s, n, 4 * n + 8).unwrap();
        prop_assert!((rep.lhs_per_section[0] - log_gf.exp()).abs() < 1e-10);
    }

    #[test]
    fn symmetric_laurent_windows_are_recognised(s in symbol_strategy(2, true), radius in 3usize..6) {
        let class = classify_window(&Window::laurent(&s, radius), 1e-12);
        let got = class.symbol.unwrap();
        for k in -2i64..=2 {
            prop_assert!((got.coeff(k) - s.coeff(k)).abs() < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_variance_is_twice_second_cumulant(alpha in 0.0..3.0f64, beta in 0.0..3.0f64, n in 3usize..15, p in prop::collection::vec(-1.0..1.0f64, 2..4)) {
        let big_n = 3 * n;
        let spec = EnsembleSpec::Hahn { alpha, beta, big_n, n };
        let seq = spec.coefficients().unwrap();
        let k = spectral_clt::dpp::build_kernel(&seq, &spec.measure().unwrap().unwrap(), n).unwrap();
        let f = Polynomial::new(p);
        let (_, var) = exact_moments(&k, |x| f.eval(x));
        let c2 = cumulant(&poly_apply(&seq.matrix(n), &f), n, 2, DEFAULT_MAX_ORDER).unwrap();
        prop_assert!((var - 2.0 * c2).abs() < 1e-8, "{var} vs {}", 2.0 * c2);
        let oracle = projection_variance(&dense_of(&seq.matrix(n), big_n + 1), n, |x| f.eval(x));
        prop_assert!((var - oracle).abs() < 1e-8);
    }
}

#[test]
fn windows_survive_json() {
    let w = window_extract(&BandedMatrix::jacobi(|k| 1.0 / k as f64, |k| k as f64), 10, 3);
    let text = serde_json::to_string(&w).unwrap();
    assert_eq!(serde_json::from_str::<Window>(&text).unwrap(), w);
    let s = LaurentSymbol::from_coeffs([(-1, 1.0), (1, 1.0)]);
    assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"coeffs":{"-1":1.0,"1":1.0}}"#);
}

#[test]
fn c1_functions_refuse_complex_symbols() {
    let s = LaurentSymbol::from_coeffs([(-1, 0.2), (1, 1.0)]);
    assert!(TestFunction::Cos { freq: 1.0 }.fourier(&s, 16, 128).is_err());
    assert!(TestFunction::identity().fourier(&s, 16, 128).is_ok());
}
