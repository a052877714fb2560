use std::f64::consts::PI;

use dphase_core::diagnostics::*;
use dphase_core::galerkin::{EigenBasis, Forcing, SolverConfig};
use dphase_core::quadrature::SpaceRule;
use dphase_core::{Error, ExponentData, FieldSpec};

fn heat(horizon: f64) -> ExponentData {
    ExponentData::constant(2, horizon, 2.0, 2.0, 0.5, 0.5, 1.0)
}

fn mode(k0: f64, k1: f64, c: f64) -> FieldSpec {
    FieldSpec::Sinusoidal {
        offset: 0.0,
        amplitude: 2.0 * c,
        wavenumbers: vec![k0, k1],
        phases: vec![],
        decay: 0.0,
    }
}

fn unordered(horizon: f64) -> ExponentData {
    ExponentData {
        p: FieldSpec::Affine {
            offset: 1.9,
            slope: vec![0.3, 0.0],
            rate: 0.0,
        },
        q: FieldSpec::Affine {
            offset: 2.2,
            slope: vec![-0.3, 0.0],
            rate: 0.0,
        },
        ..ExponentData::constant(2, horizon, 2.0, 2.0, 0.3, 0.3, 0.5)
    }
}

fn cfg(m: usize, tau: f64) -> SolverConfig {
    SolverConfig {
        m_per_dim: m,
        tau,
        ..Default::default()
    }
}

#[test]
fn zero_solution_has_zero_residual_and_bounds() {
    let (sys, tr) = solve_with_system(
        &cfg(4, 1e-2),
        &unordered(0.05),
        &FieldSpec::zero(),
        &Forcing::None,
    )
    .unwrap();
    let view = TrajectoryView::new(&sys, &tr).unwrap();
    let e = energy_identity_residual(&view);
    assert!(e.absolute.iter().all(|&r| r == 0.0));
    let a = apriori_energy_bound(&view);
    assert_eq!(a.lhs, 0.0);
    assert!(a.holds);
    assert!(higher_integrability(&view, &[0.1, 0.5])
        .unwrap()
        .iter()
        .all(|(_, v)| *v == 0.0));
    assert_eq!(
        interpolation_ratio(&view, 0.5, 1.0)
            .unwrap()
            .implied_constant,
        0.0
    );
    // stationary zero: LHS = sup ∫(aε^p + bε^q) ≤ a⁺ + b⁺
    let td = time_derivative_bound(&view);
    let eps = sys.eps();
    let rule = sys.rule();
    let oracle: f64 = (0..rule.len())
        .map(|n| {
            let x = rule.point(n)[0];
            rule.weights()[n] * (0.3 * eps.powf(1.9 + 0.3 * x) + 0.3 * eps.powf(2.2 - 0.3 * x))
        })
        .sum();
    assert!((td.lhs - oracle).abs() < 1e-14);
    assert!(td.lhs <= 0.6);
}

#[test]
fn heat_energy_and_apriori_match_analytic_values() {
    let lambda = 2.0 * PI * PI;
    let t_end = 0.1;
    let mut residuals = Vec::new();
    for tau in [2e-3, 1e-3] {
        let (sys, tr) = solve_with_system(
            &cfg(8, tau),
            &heat(t_end),
            &mode(1.0, 1.0, 1.0),
            &Forcing::None,
        )
        .unwrap();
        let view = TrajectoryView::new(&sys, &tr).unwrap();
        residuals.push(energy_identity_residual(&view).max_relative());
        let a = apriori_energy_bound(&view);
        let lhs = 1.0 + 0.5 * (1.0 - (-2.0 * lambda * t_end).exp());
        assert!((a.lhs - lhs).abs() < 2e-2 * lhs, "{} vs {lhs}", a.lhs);
        assert!((a.rhs - t_end.exp()).abs() < 1e-12);
        assert!(a.ratio < 1.0 && a.holds);
        assert!(gradbound_check(&view).holds);
    }
    assert!(residuals[1] <= 1e-2, "residual {}", residuals[1]);
    let halving = residuals[0] / residuals[1];
    assert!((1.5..=3.0).contains(&halving), "halving {halving}");
}

#[test]
fn higher_integrability_matches_refined_quadrature() {
    let (sys, tr) = solve_with_system(
        &cfg(8, 1e-2),
        &heat(0.05),
        &mode(1.0, 1.0, 1.0),
        &Forcing::None,
    )
    .unwrap();
    let view = TrajectoryView::new(&sys, &tr).unwrap();
    let got = higher_integrability_on(&view, &[0.5], 64).unwrap()[0].1;
    let coarse = higher_integrability(&view, &[0.5]).unwrap()[0].1;
    // ∫|∇u|^{2 + 1 − 0.5} with a dense rule on the same coefficients, trapezoid in time
    let dense = SpaceRule::gauss(2, 160).unwrap();
    let basis = EigenBasis::new(2, 8).unwrap();
    let per: Vec<f64> = tr
        .states
        .iter()
        .map(|s| {
            (0..dense.len())
                .map(|n| {
                    let (_, g) = basis.evaluate(&s.coeffs, dense.point(n)).unwrap();
                    dense.weights()[n] * (g[0] * g[0] + g[1] * g[1]).powf(1.25)
                })
                .sum()
        })
        .collect();
    let t = tr.times();
    let oracle: f64 = (1..per.len())
        .map(|k| 0.5 * (t[k] - t[k - 1]) * (per[k] + per[k - 1]))
        .sum();
    assert!((got - oracle).abs() < 1e-6 * oracle, "{got} vs {oracle}");
    assert!(
        (coarse - oracle).abs() < 1e-4 * oracle,
        "{coarse} vs {oracle}"
    );
    assert!(matches!(
        higher_integrability(&view, &[1.0]),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        higher_integrability(&view, &[0.0]),
        Err(Error::Domain(_))
    ));
}

#[test]
fn stability_identical_and_decoupled_heat_pairs() {
    let c = cfg(4, 1e-2);
    let data = heat(0.1);
    let u0 = mode(1.0, 1.0, 1.0);
    let same =
        stability_experiment(&c, &data, (&u0, &Forcing::None), (&u0, &Forcing::None)).unwrap();
    assert!(same.w_sq.iter().all(|&w| w == 0.0) && same.bound == 0.0 && same.holds());

    let delta = 0.1;
    let v0 = FieldSpec::Sum {
        terms: vec![u0.clone(), mode(2.0, 1.0, delta)],
    };
    let r = stability_experiment(&c, &data, (&u0, &Forcing::None), (&v0, &Forcing::None)).unwrap();
    let lambda = 5.0 * PI * PI;
    for (n, w) in r.w_sq.iter().enumerate() {
        let exact = delta * delta * (1.0 + 1e-2 * lambda).powi(-2 * n as i32);
        assert!((w - exact).abs() < 1e-12, "step {n}: {w} vs {exact}");
    }
    assert!((r.bound - (0.1f64).exp() * delta * delta).abs() < 1e-12);
    assert!(r.holds());
}

#[test]
fn stability_refuses_mismatched_grids() {
    let data = heat(0.05);
    let (s1, t1) =
        solve_with_system(&cfg(4, 1e-2), &data, &mode(1.0, 1.0, 1.0), &Forcing::None).unwrap();
    let (s2, t2) =
        solve_with_system(&cfg(5, 1e-2), &data, &mode(1.0, 1.0, 1.0), &Forcing::None).unwrap();
    let a = TrajectoryView::new(&s1, &t1).unwrap();
    let b = TrajectoryView::new(&s2, &t2).unwrap();
    assert!(matches!(
        stability_from_views(&a, &b),
        Err(Error::Config(_))
    ));
}

#[test]
fn nonlinear_perturbations_shrink_the_gradient_modular() {
    let c = cfg(6, 2e-3);
    let r = perturbation_study(
        &c,
        &unordered(0.05),
        &mode(1.0, 1.0, 1.0),
        &Forcing::None,
        &mode(2.0, 1.0, 1.0),
        &[0.1, 0.05, 0.025, 0.0125],
    )
    .unwrap();
    assert!(r.monotone);
    assert!(r.reports.iter().all(|x| x.holds() && x.pairing >= 0.0));
}

#[test]
fn linf_envelope_heat_decay_and_unit_forcing() {
    let (sys, tr) = solve_with_system(
        &cfg(6, 2e-3),
        &heat(0.05),
        &mode(1.0, 1.0, 0.5),
        &Forcing::None,
    )
    .unwrap();
    let view = TrajectoryView::new(&sys, &tr).unwrap();
    let r = linf_bound_check(&view, &mode(1.0, 1.0, 0.5), 33, 1e-3).unwrap();
    assert!(r.holds());
    assert!(r.lattice_max.windows(2).all(|w| w[1] <= w[0]));

    let u0 = mode(1.0, 1.0, 0.5);
    let f = Forcing::field(FieldSpec::constant(1.0));
    let (sys, tr) = solve_with_system(&cfg(6, 2e-3), &heat(0.05), &u0, &f).unwrap();
    let view = TrajectoryView::new(&sys, &tr).unwrap();
    let r = linf_bound_check(&view, &u0, 33, 1e-3).unwrap();
    for (t, e) in r.times.iter().zip(&r.envelope) {
        assert!((e - (1.0 + t)).abs() < 1e-12);
    }
    assert!(r.holds());
}

#[test]
fn continuation_is_exactly_flat_for_the_heat_equation() {
    let r = eps_continuation_study(
        &cfg(4, 1e-2),
        &heat(0.05),
        &mode(1.0, 1.0, 1.0),
        &Forcing::None,
        &[0.1, 0.05, 0.025],
        1e-6,
    )
    .unwrap();
    assert!(r.identically_zero && r.passed());
    assert!(eps_continuation_study(
        &cfg(4, 1e-2),
        &heat(0.05),
        &FieldSpec::zero(),
        &Forcing::None,
        &[0.1, 0.2],
        1.0
    )
    .is_err());
}

#[test]
fn refinement_embedding_preserves_modes() {
    let coarse = EigenBasis::new(2, 3).unwrap();
    let fine = EigenBasis::new(2, 5).unwrap();
    let c: Vec<f64> = (0..coarse.len()).map(|j| j as f64 + 1.0).collect();
    let e = embed_coefficients(&coarse, &fine, &c).unwrap();
    for j in 0..coarse.len() {
        assert_eq!(e[fine.index_of(coarse.mode(j)).unwrap()], c[j]);
    }
    assert_eq!(e.iter().sum::<f64>(), c.iter().sum::<f64>());
}

#[test]
fn monotone_helper() {
    assert!(decreasing_within(&[1.0, 0.5, 0.52, 0.1], 0.1, 0.0));
    assert!(!decreasing_within(&[1.0, 0.5, 0.6], 0.1, 0.0));
    assert!(!decreasing_within(&[1.0, 1.05, 1.08], 0.1, 0.0));
    assert!(decreasing_within(&[0.0, 0.0, 0.0], 0.1, 0.0));
    assert!(decreasing_within(&[1e-20, 3e-20], 0.1, 1e-15));
}

#[test]
fn full_report_on_forced_unordered_run() {
    let f = Forcing::field(FieldSpec::constant(0.5));
    let (sys, tr) =
        solve_with_system(&cfg(6, 1e-3), &unordered(0.05), &mode(1.0, 1.0, 1.0), &f).unwrap();
    let opts = DiagnosticsOptions {
        second_order_h: Some(1.0 / 64.0),
        ..Default::default()
    };
    let rep = run_diagnostics(&sys, &tr, &opts).unwrap();
    assert!(rep.all_finite());
    assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    assert_eq!(rep.series.len(), tr.states.len());
    assert!(rep
        .series
        .windows(2)
        .all(|w| w[1].ut_sq_accum >= w[0].ut_sq_accum));
    assert!(rep.assertions.iter().any(|a| a.anchor == "eq:energy"));
}
