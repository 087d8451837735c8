use std::f64::consts::PI;
use std::sync::OnceLock;

use confluence::scenario::{asymmetric_fixture, symmetric_fixture};
use confluence::temperature_field::{
    model_temperature, solve_heat_cn, Cutoff, Duhamel, DuhamelMask, HeatGrid,
};
use confluence::profiles::switch_b;
use confluence::{build_table, Boundary, Error, FrontModel, KernelTable, SumRule};

fn table() -> &'static KernelTable {
    static T: OnceLock<KernelTable> = OnceLock::new();
    T.get_or_init(|| build_table(30.0, 400).unwrap())
}

#[test]
fn cutoff_is_one_on_the_plateau_and_zero_at_the_ends() {
    let sc = asymmetric_fixture();
    let cut = Cutoff::new(&sc);
    assert_eq!(cut.eval(0.5 * (cut.lo + cut.hi)).0, 1.0);
    assert_eq!(cut.eval(sc.l1).0, 0.0);
    assert_eq!(cut.eval(sc.l2).0, 0.0);
    let h = 1e-6;
    for x in [sc.l1 + 0.3 * (cut.lo - sc.l1), cut.hi + 0.6 * (sc.l2 - cut.hi)] {
        let (_, d, dd) = cut.eval(x);
        let fd = (cut.eval(x + h).0 - cut.eval(x - h).0) / (2.0 * h);
        let fdd = (cut.eval(x + h).1 - cut.eval(x - h).1) / (2.0 * h);
        assert!((d - fd).abs() < 1e-6);
        assert!((dd - fdd).abs() < 1e-5);
    }
}

#[test]
fn model_temperature_is_continuous_with_the_stefan_kink() {
    let sc = asymmetric_fixture();
    let model = FrontModel::new(&sc, table(), SumRule::Derived).unwrap();
    let k = model.kinematics(0.3).unwrap();
    let s = &k.state;
    let b = switch_b(s.tau);
    let d = 1e-9;
    let fronts = [
        (s.phi1, sc.gamma1_plus.eval(s.t) + sc.gamma1_minus.eval(s.t)),
        (s.phi2, sc.gamma2_plus.eval(s.t) + sc.gamma2_minus.eval(s.t)),
    ];
    for (p, g) in fronts {
        let lo = model_temperature(p - d, &k, &sc);
        let hi = model_temperature(p + d, &k, &sc);
        assert!((hi.value - lo.value).abs() < 1e-8);
        assert!(((hi.d_x - lo.d_x) - b * g).abs() < 1e-6, "kink at {p}");
    }
}

#[test]
fn model_temperature_time_derivative() {
    let sc = asymmetric_fixture();
    let model = FrontModel::new(&sc, table(), SumRule::Derived).unwrap();
    let (t, h) = (0.35, 1e-5);
    let k = model.kinematics(t).unwrap();
    let (km, kp) = (model.kinematics(t - h).unwrap(), model.kinematics(t + h).unwrap());
    for x in [-0.6, 0.0, 0.6] {
        let fd = (model_temperature(x, &kp, &sc).value - model_temperature(x, &km, &sc).value) / (2.0 * h);
        let d_t = model_temperature(x, &k, &sc).d_t;
        assert!((d_t - fd).abs() < 1e-5 * (1.0 + fd.abs()), "at {x}: {d_t} vs {fd}");
    }
}

#[test]
fn crank_nicolson_matches_a_manufactured_solution() {
    // q = t sin(k(x+1)) on [-1, 1], so q_t - q_xx = sin(k(x+1))(1 + k²t)
    let k = PI / 2.0;
    let grid = HeatGrid { nx: 201, dt: 1e-4 };
    let sol = solve_heat_cn(-1.0, 1.0, Boundary::Dirichlet(0.0, 0.0), grid, 0.5, &[0.5], |t, xs, out| {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = (k * (x + 1.0)).sin() * (1.0 + k * k * t);
        }
        Ok(())
    })
    .unwrap();
    let snap = sol.snapshot(0.5);
    let err = sol
        .x
        .iter()
        .zip(&snap.cur)
        .map(|(x, q)| (q - snap.t * (k * (x + 1.0)).sin()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-5, "{err:e}");
}

#[test]
fn crank_nicolson_refuses_large_steps() {
    let grid = HeatGrid { nx: 101, dt: 1e-3 };
    let r = solve_heat_cn(-1.0, 1.0, Boundary::Neumann(0.0, 0.0), grid, 0.1, &[0.1], |_, _, out| {
        out.fill(0.0);
        Ok(())
    });
    assert!(matches!(r, Err(Error::CflViolation { .. })));
}

#[test]
fn duhamel_agrees_with_a_grid_solve_of_its_source() {
    let sc = asymmetric_fixture();
    let model = FrontModel::new(&sc, table(), SumRule::Derived).unwrap();
    let duh = Duhamel::new(&model, DuhamelMask::ALL).unwrap();
    let t = 0.3;
    let grid = HeatGrid { nx: 801, dt: (2.0f64 / 800.0).powi(2) };
    let sol = solve_heat_cn(sc.l1, sc.l2, sc.bc, grid, t, &[t], |tt, xs, out| {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = duh.source(x, tt);
        }
        Ok(())
    })
    .unwrap();
    let snap = sol.snapshot(t);
    let mut scale: f64 = 0.0;
    let mut err: f64 = 0.0;
    for x in [-0.7, -0.3, 0.0, 0.1, 0.25, 0.6] {
        let exact = duh.eval(x, snap.t).unwrap();
        let grid_v = sol.interp(&snap.cur, x).0;
        scale = scale.max(exact.abs());
        err = err.max((exact - grid_v).abs());
    }
    assert!(scale > 1e-3);
    assert!(err < 2e-3 * scale, "{err:e} against {scale:e}");
}

#[test]
fn symmetric_duhamel_is_even() {
    let sc = symmetric_fixture();
    let model = FrontModel::new(&sc, table(), SumRule::Derived).unwrap();
    let duh = Duhamel::new(&model, DuhamelMask::ALL).unwrap();
    assert_eq!(duh.eval(0.3, 0.0).unwrap(), 0.0);
    for x in [0.05, 0.2, 0.7] {
        let (a, b) = (duh.eval(x, 0.4).unwrap(), duh.eval(-x, 0.4).unwrap());
        assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
    }
}
