use dphase_core::quadrature::{QuadratureGrid, SpaceRule};
use dphase_core::varexp::{
    check_modular_norm_sandwich, composite_n, difference, embedding_check, holder_pairing_check,
    luxemburg_norm, modular, monotone_difference_check, pairing_g_eps, SampledField,
    DEFAULT_REL_TOL,
};
use dphase_core::{ExponentData, FieldSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> QuadratureGrid {
    QuadratureGrid::spatial(SpaceRule::gauss(2, 6).unwrap(), 0.0)
}

fn random_scalar(g: &QuadratureGrid, seed: u64, amp: f64) -> SampledField<'_> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..g.len()).map(|_| rng.random_range(-amp..amp)).collect();
    SampledField::scalar(g, v).unwrap()
}

fn random_vector(g: &QuadratureGrid, seed: u64, amp: f64) -> SampledField<'_> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..2 * g.len())
        .map(|_| rng.random_range(-amp..amp))
        .collect();
    SampledField::new(g, 2, v).unwrap()
}

fn affine_exponent(g: &QuadratureGrid, lo: f64, slope: f64) -> SampledField<'_> {
    SampledField::from_fn(g, |x, _| lo + slope * x[0]).unwrap()
}

fn unordered_data(p0: f64, q0: f64, tilt: f64, a: f64, b: f64) -> ExponentData {
    ExponentData {
        p: FieldSpec::Affine {
            offset: p0,
            slope: vec![tilt, 0.0],
            rate: 0.0,
        },
        q: FieldSpec::Affine {
            offset: q0,
            slope: vec![-tilt, 0.0],
            rate: 0.0,
        },
        ..ExponentData::constant(2, 1.0, p0, q0, a, b, a.min(b))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn luxemburg_bisection_lands_on_unit_modular(seed in any::<u64>(), amp in 0.01..50.0f64, lo in 1.1..3.0f64, slope in 0.0..2.0f64) {
        let g = grid();
        let f = random_scalar(&g, seed, amp);
        let r = affine_exponent(&g, lo, slope);
        let lambda = luxemburg_norm(&f, &r, DEFAULT_REL_TOL).unwrap();
        let m = modular(&f.scaled(1.0 / lambda).unwrap(), &r).unwrap();
        prop_assert!((1.0 - 1e-9..=1.0).contains(&m), "modular {m}");
    }

    #[test]
    fn luxemburg_is_homogeneous(seed in any::<u64>(), c in 0.05..20.0f64, lo in 1.1..3.0f64, slope in 0.0..2.0f64) {
        let g = grid();
        let f = random_scalar(&g, seed, 1.0);
        let r = affine_exponent(&g, lo, slope);
        let n1 = luxemburg_norm(&f, &r, DEFAULT_REL_TOL).unwrap();
        let nc = luxemburg_norm(&f.scaled(c).unwrap(), &r, DEFAULT_REL_TOL).unwrap();
        prop_assert!((nc - c * n1).abs() <= 1e-9 * nc);
    }

    #[test]
    fn modular_norm_sandwich(seed in any::<u64>(), amp in 0.01..50.0f64, lo in 1.1..3.0f64, slope in 0.0..2.0f64) {
        let g = grid();
        let f = random_scalar(&g, seed, amp);
        let r = affine_exponent(&g, lo, slope);
        let rep = check_modular_norm_sandwich(&f, &r).unwrap();
        prop_assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn holder_pairing(seed in any::<u64>(), amp in 0.01..20.0f64, lo in 1.1..3.0f64, slope in 0.0..2.0f64) {
        let g = grid();
        let f = random_scalar(&g, seed, amp);
        let h = random_scalar(&g, seed.wrapping_add(1), 1.0);
        let r = affine_exponent(&g, lo, slope);
        let rep = holder_pairing_check(&f, &h, &r).unwrap();
        prop_assert!(rep.holds, "{rep:?}");
        prop_assert!(rep.pairing <= rep.sharp_bound * (1.0 + 1e-9));
    }

    #[test]
    fn pairing_is_nonnegative(seed in any::<u64>(), amp in 0.01..5.0f64, p0 in 1.5..2.5f64, q0 in 1.5..2.5f64, eps in 0.0..0.5f64) {
        let g = grid();
        let u = random_vector(&g, seed, amp);
        let v = random_vector(&g, seed ^ 0x5555, amp);
        let data = unordered_data(p0, q0, 0.2, 0.7, 0.4);
        let gval = pairing_g_eps(&u, &v, eps, &data).unwrap();
        prop_assert!(gval >= -1e-12 * (1.0 + amp.powf(3.0)), "G = {gval}");
    }

    #[test]
    fn embedding_holds(seed in any::<u64>(), amp in 0.01..5.0f64, p0 in 1.4..2.6f64, q0 in 1.4..2.6f64) {
        let g = grid();
        let u = random_vector(&g, seed, amp);
        let data = unordered_data(p0, q0, 0.2, 0.7, 0.4);
        let rep = embedding_check(&u, &data).unwrap();
        prop_assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn monotone_difference_bound(seed in any::<u64>(), amp in 0.01..3.0f64, p0 in 1.4..2.6f64, q0 in 1.4..2.6f64, eps in 0.0..0.5f64) {
        let g = grid();
        let u = random_vector(&g, seed, amp);
        let v = random_vector(&g, seed ^ 0xabcd, amp);
        let data = unordered_data(p0, q0, 0.2, 0.7, 0.4);
        let rep = monotone_difference_check(&u, &v, eps, &data).unwrap();
        prop_assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn gap_and_composite_decay_together(seed in any::<u64>(), p0 in 1.5..2.5f64, q0 in 1.5..2.5f64) {
        let g = grid();
        let u = random_vector(&g, seed, 2.0);
        let dir = random_vector(&g, seed ^ 0x77, 1.0);
        let data = unordered_data(p0, q0, 0.2, 0.7, 0.4);
        let mut last = (f64::INFINITY, f64::INFINITY);
        for k in 0..5 {
            let delta = 0.5f64.powi(k);
            let v = SampledField::new(
                &g,
                2,
                u.values().iter().zip(dir.values()).map(|(a, b)| a + delta * b).collect(),
            ).unwrap();
            let gval = pairing_g_eps(&u, &v, 0.01, &data).unwrap();
            let nval = composite_n(&difference(&u, &v).unwrap(), &data).unwrap();
            prop_assert!(gval < last.0 && nval < last.1);
            last = (gval, nval);
        }
    }
}

#[test]
fn constant_exponent_closed_forms() {
    let g = grid();
    for (seed, r) in [(1u64, 1.5), (2, 2.0), (3, 3.7)] {
        let f = random_scalar(&g, seed, 3.0);
        let rf = SampledField::from_fn(&g, |_, _| r).unwrap();
        let lp = modular(&f, &rf).unwrap().powf(1.0 / r);
        let n = luxemburg_norm(&f, &rf, DEFAULT_REL_TOL).unwrap();
        assert!((n - lp).abs() <= 1e-10 * lp, "r = {r}: {n} vs {lp}");
    }
    // ‖1‖ on the unit square is 1 for every exponent
    let one = SampledField::from_fn(&g, |_, _| 1.0).unwrap();
    let r = affine_exponent(&g, 1.3, 1.5);
    assert!((luxemburg_norm(&one, &r, DEFAULT_REL_TOL).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn zero_field_has_zero_norm_and_pairing() {
    let g = grid();
    let z = SampledField::scalar(&g, vec![0.0; g.len()]).unwrap();
    let r = affine_exponent(&g, 1.5, 1.0);
    assert_eq!(luxemburg_norm(&z, &r, DEFAULT_REL_TOL).unwrap(), 0.0);
    let u = random_vector(&g, 9, 1.0);
    let data = unordered_data(1.8, 2.2, 0.2, 0.7, 0.4);
    assert_eq!(pairing_g_eps(&u, &u, 0.1, &data).unwrap(), 0.0);
}
