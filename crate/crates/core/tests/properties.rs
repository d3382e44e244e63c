//! Randomized invariants.

use mellin_radon::diagnostics::{injectivity_report, zero_scan, ScanSettings, Verdict, ZeroClass};
use mellin_radon::inversion::{invert_radon, InversionOptions};
use mellin_radon::mellin_engine::{mellin_expcost_closed, GridFunction, LogGrid};
use mellin_radon::transforms::{profit_forward, radon_grid, default_p_grid, KernelOptions, NormOrder, Operator};
use mellin_radon::CostExpr;
use num_complex::Complex64;
use proptest::prelude::*;

fn flat_ces() -> impl Strategy<Value = CostExpr> {
    (0.1f64..=1.0, 0.2f64..5.0, 0.05f64..0.95)
        .prop_map(|(alpha, scale, a)| CostExpr::flat_ces(alpha, scale, vec![a, 1.0 - a]).unwrap())
}

fn nested_ces() -> impl Strategy<Value = CostExpr> {
    (0.1f64..=1.0, 0.1f64..=1.0, 0.05f64..0.95, 0.05f64..0.95, 0.5f64..2.0).prop_map(|(a1, a2, w1, w2, c)| {
        CostExpr::parse(&format!(
            "(ces :alpha {a1} :C {c} :a ({w1} {}) (axis 1) (ces :alpha {a2} :C 1 :a ({w2} {}) (axis 2) (axis 3)))",
            1.0 - w1,
            1.0 - w2
        ))
        .unwrap()
    })
}

fn small_settings() -> ScanSettings {
    ScanSettings {
        resolution: 16,
        ..ScanSettings::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ces_scans_are_certified_on_every_plane(q in flat_ces(), c1 in 0.1f64..5.0, c2 in 0.1f64..5.0) {
        let rep = zero_scan(&q, &[c1, c2], 20.0, 16).unwrap();
        prop_assert!(rep.analytic);
        prop_assert_eq!(rep.classification, ZeroClass::NoZeroDetected);
        prop_assert!(rep.min_modulus > 0.0);
    }

    #[test]
    fn profit_verdict_equals_radon_verdict(q in nested_ces(), c in prop::collection::vec(0.1f64..2.0, 3)) {
        for r in NormOrder::ALL {
            let radon = injectivity_report(&Operator::Radon, &q, &c, r, &small_settings()).unwrap();
            let profit = injectivity_report(&Operator::Profit { p0: 1.7 }, &q, &c, r, &small_settings()).unwrap();
            prop_assert_eq!(radon.verdict, profit.verdict);
            prop_assert_eq!(radon.verdict, Verdict::InjectiveCertified);
        }
    }

    /// The integrand of `M e^{-q}` is positive on the real plane, so the
    /// modulus peaks at `xi = 0`.
    #[test]
    fn closed_form_modulus_peaks_on_real_plane(
        q in nested_ces(),
        c in prop::collection::vec(0.1f64..2.0, 3),
        xi in prop::collection::vec(-8.0f64..8.0, 3),
    ) {
        let real: Vec<Complex64> = c.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let z: Vec<Complex64> = c.iter().zip(&xi).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let peak = mellin_expcost_closed(&q, &real).unwrap();
        prop_assert!(peak.im.abs() <= 1e-12 * peak.re);
        prop_assert!(mellin_expcost_closed(&q, &z).unwrap().norm() <= peak.re * (1.0 + 1e-12));
    }

    /// `M e^{-l q}(z) = l^{-(z1 + ... + zn)} M e^{-q}(z)`.
    #[test]
    fn closed_form_scales_with_cost(alpha in 0.1f64..=1.0, a in 0.05f64..0.95, l in 0.2f64..5.0,
                                    z1 in 0.1f64..2.0, z2 in 0.1f64..2.0, t1 in -6.0f64..6.0, t2 in -6.0f64..6.0) {
        let q = CostExpr::flat_ces(alpha, 1.0, vec![a, 1.0 - a]).unwrap();
        let ql = CostExpr::flat_ces(alpha, l, vec![a, 1.0 - a]).unwrap();
        let z = [Complex64::new(z1, t1), Complex64::new(z2, t2)];
        let lhs = mellin_expcost_closed(&ql, &z).unwrap();
        let rhs = mellin_expcost_closed(&q, &z).unwrap() * (-(z[0] + z[1]) * l.ln()).exp();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm(), "{lhs} vs {rhs}");
    }

    /// Homogeneity of degree one for nested trees.
    #[test]
    fn cost_is_homogeneous(q in nested_ces(), x in prop::collection::vec(1e-3f64..1e3, 3), l in 1e-3f64..1e3) {
        let lx: Vec<f64> = x.iter().map(|v| v * l).collect();
        let (a, b) = (q.eval(&x).unwrap(), q.eval(&lx).unwrap());
        prop_assert!((b - l * a).abs() <= 1e-12 * l * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn radon_grid_is_linear(q in flat_ces(), a in -2.0f64..2.0, b in -2.0f64..2.0,
                            s1 in 0.5f64..3.0, s2 in 0.5f64..3.0) {
        let grid = LogGrid::cube(2, -8.0, 4.0, 32).unwrap();
        let f = GridFunction::from_fn(grid.clone(), |x| (-s1 * x[0] - x[1]).exp()).unwrap();
        let g = GridFunction::from_fn(grid, |x| x[0] * x[1] * (-x[0] - s2 * x[1]).exp()).unwrap();
        let pg = default_p_grid(f.grid());
        let combo = radon_grid(&f.combine(a, &g, b).unwrap(), &q, &pg).unwrap();
        let parts = radon_grid(&f, &q, &pg).unwrap().combine(a, &radon_grid(&g, &q, &pg).unwrap(), b).unwrap();
        let scale = parts.values().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (u, v) in combo.values().iter().zip(parts.values()) {
            prop_assert!((u - v).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn inversion_is_linear(q in flat_ces(), a in -2.0f64..2.0, s in 0.5f64..3.0) {
        let grid = LogGrid::cube(2, -16.0, 12.0, 32).unwrap();
        let g1 = GridFunction::from_fn(grid.clone(), |x| (-x[0] - s * x[1]).exp() * x[0].sqrt()).unwrap();
        let g2 = GridFunction::from_fn(grid, |x| (-(x[0] * x[1]).ln().powi(2)).exp()).unwrap();
        let opts = InversionOptions::new(vec![0.9, 0.9], 1e-6).unwrap();
        let inv = |g: &GridFunction| invert_radon(g, &q, &opts).unwrap().estimate;
        let combo = inv(&g1.combine(a, &g2, 1.0).unwrap());
        let parts = inv(&g1).combine(a, &inv(&g2), 1.0).unwrap();
        let scale = parts.values().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (u, v) in combo.values().iter().zip(parts.values()) {
            prop_assert!((u - v).abs() <= 1e-9 * scale);
        }
    }

    /// `Pi_q(p0)` is nondecreasing and convex in `p0` for `f >= 0`.
    #[test]
    fn profit_is_monotone_and_convex_in_p0(q in flat_ces(), p1 in 0.5f64..2.0, p2 in 0.5f64..2.0) {
        let f = GridFunction::from_fn(LogGrid::cube(2, -10.0, 5.0, 64).unwrap(), |x| {
            x[0] * x[1] * (-x[0] - x[1]).exp()
        })
        .unwrap();
        let opts = KernelOptions::default();
        let vals: Vec<f64> = [0.6, 0.8, 1.0, 1.2]
            .iter()
            .map(|p0| profit_forward(&f, &q, *p0, &[p1, p2], &opts).unwrap())
            .collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * w[1].abs());
        }
        for w in vals.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-9 * w[1].abs(), "{vals:?}");
        }
    }
}
