use std::sync::OnceLock;

use confluence::quadrature::GaussRule;
use confluence::scenario::asymmetric_fixture;
use confluence::weak_residuals::{
    fit_scaling, layer_nodes, profile_pairing_gap, test_family, verify, TestFunction, TestKind, VerifyOptions,
};
use confluence::{build_table, Error, KernelTable};
use proptest::prelude::*;

fn table() -> &'static KernelTable {
    static T: OnceLock<KernelTable> = OnceLock::new();
    T.get_or_init(|| build_table(30.0, 400).unwrap())
}

const LADDER: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

#[test]
fn fit_recovers_pure_powers() {
    let lin: Vec<f64> = LADDER.iter().map(|e| 3.0 * e).collect();
    let f = fit_scaling(&LADDER, &lin).unwrap();
    assert!((f.slope - 1.0).abs() < 1e-12);
    assert!((f.intercept - 3.0f64.ln()).abs() < 1e-12);
    assert!(f.confidence < 1e-12);
    let frac: Vec<f64> = LADDER.iter().map(|e| -e.powf(0.4)).collect();
    assert!((fit_scaling(&LADDER, &frac).unwrap().slope - 0.4).abs() < 1e-12);
}

#[test]
fn fit_of_mixed_orders_leans_on_the_leading_one() {
    let mixed: Vec<f64> = LADDER.iter().map(|e| 2.0 * e + 5.0 * e * e).collect();
    let s = fit_scaling(&LADDER, &mixed).unwrap().slope;
    assert!(s > 0.9 && s < 1.1, "{s}");
}

#[test]
fn fit_reports_points_under_the_floor() {
    let vals = [1e-3, 0.0, 1e-16, 1e-4];
    match fit_scaling(&LADDER, &vals) {
        Err(Error::DegenerateFit(msg)) => assert!(msg.contains("0.05") && msg.contains("0.025")),
        other => panic!("expected a degenerate fit, got {other:?}"),
    }
    assert!(fit_scaling(&LADDER, &[1.0, 2.0]).is_err());
}

#[test]
fn family_lives_inside_the_domain() {
    let sc = asymmetric_fixture();
    let fam = test_family(&sc);
    assert_eq!(fam.len(), 16);
    for f in &fam {
        let (lo, hi) = f.support();
        assert!(lo >= sc.l1 - 1e-12 && hi <= sc.l2 + 1e-12, "{} on [{lo}, {hi}]", f.name);
    }
    assert_eq!(fam.iter().filter(|f| f.kind == TestKind::BumpDerivative).count(), 2);
}

#[test]
fn sech_squared_profile_converges_at_second_order() {
    // an even profile has no first moment, so the gap starts at ε²
    let w = |z: f64| 1.0 / z.cosh().powi(2);
    let zeta = TestFunction::bump("z", 0.1, 0.6);
    let a = profile_pairing_gap(&w, 0.8, 0.2, 0.02, &zeta).unwrap();
    let b = profile_pairing_gap(&w, 0.8, 0.2, 0.01, &zeta).unwrap();
    let ratio = b / a;
    assert!((ratio - 0.25).abs() < 0.01, "{ratio}");
}

#[test]
fn short_verify_run_has_exact_v2_and_full_rows() {
    let sc = asymmetric_fixture();
    let opts = VerifyOptions { ladder: vec![0.1, 0.07, 0.05, 0.035], n_times: 3, ..VerifyOptions::default() };
    let rep = verify(&sc, table(), &opts).unwrap();
    assert_eq!(rep.points.len(), 4);
    assert_eq!(rep.rows.len(), 4 * 3 * (16 * 3 + 5));
    assert!(rep.pass_v2(), "{:e}", rep.v2_max);
    assert!(rep.rows.iter().all(|r| r.value.is_finite()));
    assert!(rep.slope5.is_ok() && rep.slope6.is_ok());
}

proptest! {
    #[test]
    fn layer_nodes_integrate_polynomials(
        lo in -1.0f64..0.0,
        len in 0.2f64..1.5,
        f1 in 0.0f64..1.0,
        f2 in 0.0f64..1.0,
        eps in 0.01f64..0.1,
    ) {
        let hi = lo + len;
        let fronts = [lo + f1 * len, lo + f2 * len];
        let nodes = layer_nodes(lo, hi, &fronts, eps, eps / 8.0, &GaussRule::new(8));
        let w: f64 = nodes.iter().map(|n| n.1).sum();
        let m2: f64 = nodes.iter().map(|n| n.1 * n.0 * n.0).sum();
        prop_assert!((w - len).abs() < 1e-12);
        prop_assert!((m2 - (hi.powi(3) - lo.powi(3)) / 3.0).abs() < 1e-12);
        prop_assert!(nodes.iter().all(|n| n.0 > lo && n.0 < hi));
    }

    #[test]
    fn bump_slope_matches_difference(c in -0.5f64..0.5, w in 0.1f64..1.0, r in -0.95f64..0.95) {
        let h = 1e-7;
        for kind in [TestKind::Bump, TestKind::BumpDerivative] {
            let f = TestFunction { name: "p".into(), center: c, width: w, kind };
            let x = c + r * w;
            let fd = (f.eval(x + h).0 - f.eval(x - h).0) / (2.0 * h);
            let d = f.eval(x).1;
            prop_assert!((d - fd).abs() < 1e-5 * (1.0 + d.abs()), "{kind:?}: {d} vs {fd}");
        }
    }
}
