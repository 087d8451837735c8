//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p confluence --release --test acceptance`.

use std::process::ExitCode;

use confluence::front_dynamics::uniform_times;
use confluence::kernels::{b_tilde, bz_omega, c_hat, d_hat};
use confluence::pde_reference::{compare, front_agreement, solve_from_ansatz, GridSpec, SavePlan};
use confluence::scenario::{asymmetric_fixture, symmetric_fixture};
use confluence::weak_residuals::{
    delta_book, fit_loglog, lemma_suite, verify, ResidualReport, VerifyOptions, FIT_FLOOR,
};
use confluence::{
    assemble_fronts, build_table, contact_effects, solve_eta, Error, FrontModel, KernelTable, Scenario, SumRule,
};

const LADDER: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

struct Verdict {
    pass: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { pass: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: String) {
        self.pass &= ok;
        self.notes.push(format!("{}{}", if ok { "" } else { "✗ " }, note));
    }
}

fn kernel_identities(table: &KernelTable) -> Verdict {
    let mut v = Verdict::new();
    let mut worst_b: f64 = 0.0;
    let mut worst_beta: f64 = 0.0;
    for k in table.node_values() {
        worst_b = worst_b.max((k.b_omega - 2.0 * k.c_hat).abs());
        worst_beta = worst_beta.max((k.beta * k.beta * k.c_hat - k.d_hat).abs());
    }
    v.check(worst_b <= 1e-8, format!("max|B_Ω−2Ĉ| = {worst_b:.2e}"));
    v.check(worst_beta <= 1e-12, format!("max|β²Ĉ−D̂| = {worst_beta:.2e}"));
    let bz0 = bz_omega(0.0).unwrap();
    v.check(bz0.abs() <= 1e-10, format!("B^z_Ω(0) = {bz0:.6e}"));
    let mut worst_bt: f64 = 0.0;
    for i in 0..=40 {
        let eta = -5.0 + 0.25 * i as f64;
        let closed = if eta == 0.0 { 2.0 } else { 2.0 * eta / eta.tanh() };
        worst_bt = worst_bt.max((b_tilde(eta).unwrap() - closed).abs());
    }
    v.check(worst_bt <= 1e-8, format!("max|B̃−2η coth η| on [−5,5] = {worst_bt:.2e}"));
    // oracle values from independent quadrature (both layers counted at large η)
    for (name, got, want, tol) in [
        ("Ĉ(30)", c_hat(30.0).unwrap(), 2.0 / 3.0, 1e-6),
        ("D̂(30)", d_hat(30.0).unwrap(), 1.0 / 3.0, 1e-6),
        ("Ĉ(0)", c_hat(0.0).unwrap(), 1.0 / 15.0, 1e-8),
        ("D̂(0)", d_hat(0.0).unwrap(), 3.0 / 28.0, 1e-8),
    ] {
        v.check((got - want).abs() <= tol, format!("{name} = {got:.10} (oracle {want:.10})"));
    }
    v
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn max_deviation(model: &FrontModel, sc: &Scenario, t_hi: f64) -> f64 {
    let n = 201;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let t = t_hi * k as f64 / (n - 1) as f64;
        let s = model.state(t).unwrap();
        worst = worst.max((s.phi1 - sc.phi10.eval(t)).abs()).max((s.phi2 - sc.phi20.eval(t)).abs());
    }
    worst
}

fn front_limits(table: &KernelTable) -> Verdict {
    let mut v = Verdict::new();
    let e = solve_eta(-30.0, table).unwrap();
    v.check(e <= 1e-10, format!("η(−30) = {e:.2e}"));
    let mut prev = -1.0;
    let mut mono = true;
    for k in 0..=600 {
        let e = solve_eta(-30.0 + 0.1 * k as f64, table).unwrap();
        mono &= e >= prev;
        prev = e;
    }
    v.check(mono, "η monotone on τ ∈ [−30, 30]".into());
    for base in [asymmetric_fixture(), symmetric_fixture()] {
        let mut dev = Vec::new();
        let mut sep_ok = true;
        let mut worst_ratio: f64 = 0.0;
        for &eps in &LADDER {
            let sc = base.with_epsilon(eps);
            let model = FrontModel::new(&sc, table, SumRule::Derived).unwrap();
            dev.push(max_deviation(&model, &sc, (sc.t_star - 10.0 * eps).max(0.0)));
            // the window is empty when t* + 10ε lies past the end of the scenario
            let t0 = sc.t_star + 10.0 * eps;
            for k in (0..=100).filter(|_| t0 <= sc.t_end) {
                let t = t0 + (sc.t_end - t0) * k as f64 / 100.0;
                let s = model.state(t).unwrap();
                let r = (s.phi2 - s.phi1).abs() / eps;
                worst_ratio = worst_ratio.max(r);
                sep_ok &= r <= 1.0;
            }
        }
        match fit_loglog(&LADDER, &dev) {
            Ok(f) => v.check(f.slope >= 0.9, format!("{}: |φ−φ₀| order {:.3} (values {})", base.name, f.slope, sci(&dev))),
            Err(e) => {
                let all_floor = dev.iter().all(|d| *d < FIT_FLOOR);
                v.check(all_floor, format!("{}: |φ−φ₀| {e}", base.name))
            }
        }
        v.check(sep_ok, format!("{}: post-contact max|φ₂−φ₁|/ε = {worst_ratio:.2e} (C = 1)", base.name));
    }
    v
}

fn residual_scaling(reports: &[(String, ResidualReport)]) -> Verdict {
    let mut v = Verdict::new();
    for (name, r) in reports {
        let s = |f: &confluence::Result<confluence::weak_residuals::ScalingFit>| match f {
            Ok(f) => format!("{:.3}±{:.3}", f.slope, f.confidence),
            Err(e) => e.to_string(),
        };
        v.check(r.pass5(), format!("{name}: heat slope {}", s(&r.slope5)));
        v.check(r.pass6(), format!("{name}: allen-cahn slope (μ) {}", s(&r.slope6)));
        v.check(r.pass_v2(), format!("{name}: max|V²| = {:.2e}", r.v2_max));
    }
    v
}

fn delta_books(table: &KernelTable, reports: &[(String, ResidualReport)]) -> Verdict {
    let mut v = Verdict::new();
    for base in [asymmetric_fixture(), symmetric_fixture()] {
        let sc = base.with_epsilon(0.0125);
        let model = FrontModel::new(&sc, table, SumRule::Derived).unwrap();
        let mut taus = Vec::new();
        let mut js = Vec::new();
        for t in uniform_times(sc.t_star, 401) {
            let k = model.kinematics(t).unwrap();
            if k.state.tau >= 5.0 {
                let b = delta_book(&k, &sc);
                taus.push(k.state.tau);
                js.push(b.j1.abs().max(b.j2.abs()));
            }
        }
        let jmax = js.iter().cloned().fold(0.0, f64::max);
        match fit_loglog(&taus, &js) {
            Ok(f) => v.check(f.slope <= -0.9, format!("{}: J vs τ slope {:.2} (max|J| {jmax:.2e})", base.name, f.slope)),
            Err(_) => v.check(jmax < FIT_FLOOR, format!("{}: J below floor (max {jmax:.2e})", base.name)),
        }
    }
    for (name, r) in reports {
        match &r.slope6 {
            Ok(f) => {
                let mut worst: f64 = 0.0;
                for p in &r.points {
                    let envelope = (f.intercept + f.slope * p.epsilon.ln()).exp();
                    worst = worst.max(p.max_gap / envelope);
                }
                v.check(worst <= 1.0, format!("{name}: reconstruction gap / O(ε^μ) envelope = {worst:.2}"));
            }
            Err(e) => v.check(false, format!("{name}: no envelope ({e})")),
        }
    }
    v
}

fn confluence_effects(table: &KernelTable) -> Verdict {
    let mut v = Verdict::new();
    let sym = symmetric_fixture().with_epsilon(0.0125);
    let model = FrontModel::new(&sym, table, SumRule::Derived).unwrap();
    let traj = assemble_fronts(&model, &uniform_times(sym.t_end, 2001)).unwrap();
    let c = contact_effects(&traj, &sym).unwrap();
    v.check(c.velocity_sum == 0.0, format!("symmetric velocity sum = {:e}", c.velocity_sum));

    let asym = asymmetric_fixture().with_epsilon(0.0125);
    let model = FrontModel::new(&asym, table, SumRule::Derived).unwrap();
    let traj = assemble_fronts(&model, &uniform_times(asym.t_end, 2001)).unwrap();
    let c = contact_effects(&traj, &asym).unwrap();
    let vmax = asym.phi10.deriv(asym.t_star, 1).abs().max(asym.phi20.deriv(asym.t_star, 1).abs());
    v.check(
        c.velocity_sum.abs() <= 0.05 * vmax,
        format!("asymmetric |φ₁ₜ+φ₂ₜ| = {:.2e} (bound {:.2e})", c.velocity_sum.abs(), 0.05 * vmax),
    );
    let run = solve_from_ansatz(&model, GridSpec::resolving(&asym), SavePlan::for_scenario(&asym)).unwrap();
    match compare(&model, &run, &c) {
        Ok(r) => v.check(r.dip_ok(), format!("dip {:.4} vs predicted {:.4}", r.dip_depth, r.dip_predicted)),
        Err(e) => v.check(false, format!("dip not measurable: {e}")),
    }
    v
}

fn cross_validation(table: &KernelTable) -> Verdict {
    let mut v = Verdict::new();
    let sc = asymmetric_fixture().with_epsilon(0.0125);
    let model = FrontModel::new(&sc, table, SumRule::Derived).unwrap();
    let traj = assemble_fronts(&model, &uniform_times(sc.t_end, 2001)).unwrap();
    let c = contact_effects(&traj, &sc).unwrap();
    let grid = GridSpec::resolving(&sc);
    let run = solve_from_ansatz(&model, grid, SavePlan::for_scenario(&sc)).unwrap();
    v.notes.push(format!("nx = {}, dt = {:.3e}", grid.nx, grid.dt));
    let fa = front_agreement(&model, &run).unwrap();
    v.check(
        fa.front_error <= 5.0 * sc.epsilon,
        format!("front error {:.4} (bound {:.4})", fa.front_error, 5.0 * sc.epsilon),
    );
    match compare(&model, &run, &c) {
        Ok(r) => v.check(
            r.merge_time_ok(),
            format!("t*_fd = {:.5}, |t*_fd − t*| = {:.2e} (bound {:.2e})", r.t_star_fd, r.t_star_error, r.t_star_tolerance),
        ),
        Err(Error::NoConfluence { t_end }) => v.check(false, format!("reference fronts never merged before t = {t_end}")),
        Err(e) => v.check(false, e.to_string()),
    }
    v.check(fa.two_fronts_before && fa.none_after, format!("phase counts: two before {}, none after {}", fa.two_fronts_before, fa.none_after));
    v
}

fn lemmas(table: &KernelTable) -> Verdict {
    let mut v = Verdict::new();
    let r = lemma_suite(&asymmetric_fixture(), table, &LADDER, SumRule::Derived).unwrap();
    for (name, fit, bound) in [
        ("profile pairing", &r.pairing_fit, 0.9),
        ("product linearisation", &r.product_fit, 0.9),
        ("weighted q̂ pairing", &r.weighted_fit, 0.25),
        ("trace Hölder", &r.holder_fit, 0.3),
    ] {
        match fit {
            Ok(f) => v.check(f.slope >= bound, format!("{name} slope {:.3} (≥ {bound})", f.slope)),
            Err(e) => v.check(false, format!("{name}: {e}")),
        }
    }
    v
}

fn same_bits(a: &ResidualReport, b: &ResidualReport) -> bool {
    a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(x, y)| {
            x.functional == y.functional
                && x.test_fn == y.test_fn
                && x.t.to_bits() == y.t.to_bits()
                && x.epsilon.to_bits() == y.epsilon.to_bits()
                && x.value.to_bits() == y.value.to_bits()
        })
}

fn main() -> ExitCode {
    let table = build_table(30.0, 400).unwrap();
    let opts = VerifyOptions::default();
    let reports: Vec<(String, ResidualReport)> = [asymmetric_fixture(), symmetric_fixture()]
        .into_iter()
        .map(|sc| (sc.name.clone(), verify(&sc, &table, &opts).unwrap()))
        .collect();

    let mut results = vec![
        ("kernel identity suite", kernel_identities(&table)),
        ("front-dynamics limits", front_limits(&table)),
        ("weak residual scaling", residual_scaling(&reports)),
        ("δ-coefficient books", delta_books(&table, &reports)),
        ("confluence effects", confluence_effects(&table)),
        ("cross-validation vs FD", cross_validation(&table)),
        ("lemma property suite", lemmas(&table)),
    ];
    let again = verify(&symmetric_fixture(), &table, &opts).unwrap();
    let mut det = Verdict::new();
    det.check(same_bits(&reports[1].1, &again), format!("{} residual rows compared bitwise", again.rows.len()));
    results.push(("determinism", det));

    let mut all = true;
    for (i, (name, v)) in results.iter().enumerate() {
        all &= v.pass;
        println!("criterion {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" });
        for n in &v.notes {
            println!("    {n}");
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
