mod common;

use common::{int, k2, qq, rng, sc, theta};
use deltaclose_core::construct::{corner_witness, make_antidifference, make_fm, make_triangle_wave, EvaluableFunction};
use deltaclose_core::exppoly::ExpPolynomial;
use deltaclose_core::scalar::AlgebraicScalar;
use deltaclose_core::Error;
use proptest::prelude::*;
use rand::Rng;

fn periods() -> Vec<AlgebraicScalar> {
    let k = k2();
    vec![int(&k, 1), theta(&k), sc(&k, qq(1, 3), qq(0, 1))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn antidifference_inverts_difference(seed in any::<u64>(), which in 0usize..3, depth in 1u32..=3) {
        let h = &periods()[which];
        let hf = h.to_f64();
        let mut g = make_triangle_wave(h).unwrap();
        for _ in 1..depth {
            g = make_antidifference(g, h).unwrap();
        }
        let f = make_antidifference(g.clone(), h).unwrap();
        let mut r = rng(seed);
        for _ in 0..200 {
            let x = r.gen_range(-20.0..20.0) * hf;
            let d = f.difference_at(&[x], &[hf], 1) - g.eval(&[x]);
            prop_assert!(d.norm() <= 1e-10 * (1.0 + g.eval(&[x]).norm()), "{} at {}", d.norm(), x);
        }
    }

    #[test]
    fn fm_is_annihilated(seed in any::<u64>(), which in 0usize..3, m in 1u32..=4, p in 1i64..=3) {
        let h = &periods()[which];
        let hf = h.to_f64();
        let f = make_fm(m, h).unwrap();
        let phi = make_triangle_wave(h).unwrap();
        let mut r = rng(seed);
        for _ in 0..200 {
            let x = r.gen_range(-20.0..20.0) * hf;
            prop_assert!(f.difference_at(&[x], &[p as f64 * hf], m).norm() <= 1e-9);
            let back = f.difference_at(&[x], &[hf], m - 1) - phi.eval(&[x]);
            prop_assert!(back.norm() <= 1e-9);
        }
    }

    #[test]
    fn exact_and_float_values_agree(n in -40i64..=40, den in 1i64..=7, m in 1u32..=3) {
        let k = k2();
        let f = make_fm(m, &int(&k, 1)).unwrap();
        let x = AlgebraicScalar::from_ratio(&k, n, den);
        let exact = f.eval_exact(std::slice::from_ref(&x)).unwrap().to_c64();
        prop_assert!((exact - f.eval(&[x.to_f64()])).norm() <= 1e-9 * (1.0 + exact.norm()));
    }
}

#[test]
fn fm_vanishes_exactly_on_lattice() {
    let k = k2();
    let h = theta(&k);
    for m in 1..=4 {
        let f = make_fm(m, &h).unwrap();
        for j in -6..=6 {
            let x = AlgebraicScalar::from_int(&k, j).try_mul(&h).unwrap();
            assert!(f.eval_exact(&[x]).unwrap().is_zero(), "m={m} j={j}");
        }
    }
}

#[test]
fn triangle_wave_shape() {
    let k = k2();
    let h = theta(&k);
    let phi = make_triangle_wave(&h).unwrap();
    let half = h.div(&int(&k, 2)).unwrap();
    assert_eq!(phi.eval_exact(std::slice::from_ref(&half)).unwrap().as_constant().unwrap().re, half);
    let hf = h.to_f64();
    for i in 0..50 {
        let x = -3.0 + 0.137 * i as f64;
        assert!((phi.eval(&[x]) - phi.eval(&[-x])).norm() < 1e-12);
        assert!((phi.eval(&[x + hf]) - phi.eval(&[x])).norm() < 1e-12);
    }
}

#[test]
fn corners() {
    let k = k2();
    let phi = make_triangle_wave(&int(&k, 1)).unwrap();
    let c = corner_witness(&phi, &[(-0.4, 0.4)], &[]).unwrap();
    assert!(c.point[0].abs() < 1e-3);
    assert!((c.gap() - 2.0).abs() < 0.01);
    let smooth = EvaluableFunction::exp_poly(ExpPolynomial::power(&k, &[2]));
    assert!(corner_witness(&smooth, &[(-1.0, 1.0)], &[]).is_none());
    for m in 1..=4 {
        let f = make_fm(m, &int(&k, 1)).unwrap();
        assert!(corner_witness(&f, &[(-2.0, 2.0)], &[]).is_some(), "m={m}");
    }
}

#[test]
fn guards() {
    let k = k2();
    let one = int(&k, 1);
    let smooth = EvaluableFunction::exp_poly(ExpPolynomial::one(&k, 1));
    assert!(matches!(make_antidifference(smooth, &one), Err(Error::LatticeValuesNonzero { .. })));
    assert!(matches!(make_triangle_wave(&int(&k, -1)), Err(Error::NonpositivePeriod)));
    assert!(make_fm(0, &one).is_err());
    let f = make_fm(2, &one).unwrap();
    assert!(f.eval(&[1e9]).re.is_nan());
}
