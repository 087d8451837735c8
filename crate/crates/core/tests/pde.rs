use std::sync::OnceLock;

use confluence::pde_reference::{front_agreement, solve_from_ansatz, solve_system, track_fronts, GridSpec, SavePlan};
use confluence::scenario::asymmetric_fixture;
use confluence::{build_table, Error, FrontModel, KernelTable, Poly, Scenario, SumRule};

fn short(eps: f64, t_end: f64) -> Scenario {
    let mut sc = asymmetric_fixture().with_epsilon(eps);
    sc.t_end = t_end;
    sc
}

fn table() -> &'static KernelTable {
    static T: OnceLock<KernelTable> = OnceLock::new();
    T.get_or_init(|| build_table(30.0, 400).unwrap())
}

#[test]
fn resolving_grid_passes_its_own_check() {
    for eps in [0.1, 0.05, 0.0125] {
        let sc = asymmetric_fixture().with_epsilon(eps);
        let g = GridSpec::resolving(&sc);
        g.check(&sc).unwrap();
        assert!(g.dx(&sc) <= eps / 8.0);
    }
    let sc = asymmetric_fixture().with_epsilon(0.0125);
    assert_eq!(GridSpec::resolving(&sc).nx, 1281);
}

#[test]
fn coarse_or_hasty_grids_are_rejected() {
    let sc = asymmetric_fixture();
    let g = GridSpec::resolving(&sc);
    let coarse = GridSpec { nx: g.nx / 2, dt: g.dt };
    assert!(matches!(coarse.check(&sc), Err(Error::ResolutionError { .. })));
    let hasty = GridSpec { nx: g.nx, dt: 2.0 * g.dt };
    assert!(matches!(hasty.check(&sc), Err(Error::CflViolation { .. })));
}

#[test]
fn tracker_finds_tanh_crossings() {
    let x: Vec<f64> = (0..=400).map(|j| -1.0 + 0.005 * j as f64).collect();
    let u: Vec<f64> = x.iter().map(|&x| ((x + 0.3) / 0.05).tanh() * ((0.4 - x) / 0.05).tanh()).collect();
    let f = track_fronts(&x, &u);
    assert_eq!(f.len(), 2);
    assert!((f[0] + 0.3).abs() < 1e-5);
    assert!((f[1] - 0.4).abs() < 1e-5);
}

#[test]
fn tracker_drops_pairs_closer_than_two_cells() {
    let x: Vec<f64> = (0..=100).map(|j| j as f64 * 0.01).collect();
    let u: Vec<f64> = x.iter().map(|&x| if (0.5..0.51).contains(&x) { -0.2 } else { 1.0 }).collect();
    assert!(track_fronts(&x, &u).is_empty());
}

#[test]
fn pure_phase_with_zero_temperature_stays_put() {
    let sc = short(0.1, 0.05);
    let g = GridSpec::resolving(&sc);
    let run = solve_system(&sc, g, vec![1.0; g.nx], vec![0.0; g.nx], SavePlan::for_scenario(&sc)).unwrap();
    let last = run.frames.last().unwrap();
    assert!((last.t - 0.05).abs() < g.dt);
    assert!(last.u.iter().all(|&u| (u - 1.0).abs() < 1e-14));
    assert!(last.theta.iter().all(|&t| t.abs() < 1e-14));
    assert!(run.t_merge.is_none());
    assert!(run.mass_drift < 1e-12);
}

#[test]
fn energy_exchange_conserves_enthalpy() {
    // a single interface in a warm bath; Neumann walls close the system
    let mut sc = short(0.1, 0.05);
    sc.bc = confluence::Boundary::Neumann(0.0, 0.0);
    sc.phi10 = Poly::new(vec![-0.2]);
    let g = GridSpec::resolving(&sc);
    let x: Vec<f64> = (0..g.nx).map(|j| sc.l1 + g.dx(&sc) * j as f64).collect();
    let u0 = x.iter().map(|&x| ((x + 0.2) / 0.1).tanh()).collect();
    let th0 = vec![0.3; g.nx];
    let run = solve_system(&sc, g, u0, th0, SavePlan::for_scenario(&sc)).unwrap();
    assert!(run.mass_drift < 1e-10, "{:e}", run.mass_drift);
    assert!(run.max_abs_u <= 1.2);
}

#[test]
fn mismatched_initial_data_is_rejected() {
    let sc = short(0.1, 0.01);
    let g = GridSpec::resolving(&sc);
    let r = solve_system(&sc, g, vec![1.0; 3], vec![0.0; g.nx], SavePlan::for_scenario(&sc));
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
}

#[test]
fn early_reference_fronts_start_on_the_ansatz() {
    let sc = short(0.1, 0.1);
    let model = FrontModel::new(&sc, table(), SumRule::Derived).unwrap();
    let run = solve_from_ansatz(&model, GridSpec::resolving(&sc), SavePlan::for_scenario(&sc)).unwrap();
    let first = &run.fronts[0];
    let s0 = model.state(0.0).unwrap();
    assert_eq!(first.fronts.len(), 2);
    assert!((first.fronts[0] - s0.phi1).abs() < 0.02);
    assert!((first.fronts[1] - s0.phi2).abs() < 0.02);
    let fa = front_agreement(&model, &run).unwrap();
    assert!(fa.two_fronts_before);
    assert!(run.max_abs_u < 1.5);
    // the wall flux is a one-sided difference, so the bookkeeping is O(Δx) here
    assert!(run.mass_drift < 1e-3, "{:e}", run.mass_drift);
}
