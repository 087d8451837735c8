use std::path::Path;

use anyhow::Result;

use confluence::front_dynamics::uniform_times;
use confluence::order_field::u_check;
use confluence::pde_reference::{compare, front_agreement, solve_from_ansatz, FdRun, GridSpec, SavePlan};
use confluence::temperature_field::{assemble_theta, solve_q_smooth, Duhamel, DuhamelMask, HeatGrid};
use confluence::weak_residuals::{verify, ScalingFit, VerifyOptions};
use confluence::{
    assemble_fronts, build_table, contact_effects, load_scenario, Error, FrontModel, KernelTable, Scenario,
};

use crate::output::{num, Artifacts};
use crate::{Command, Common, FieldArgs, FieldWhich, KernelsAction, PdeArgs};

const TABLE_ETA_MAX: f64 = 30.0;
const TABLE_NODES: usize = 400;

/// Map a failure onto the exit-code contract.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Parse { .. } | Error::Validation(_) | Error::InvalidArgument(_)) => 3,
        Some(Error::NoConfluence { .. }) => 2,
        Some(_) => 4,
        None => 4,
    }
}

/// Run one subcommand; `Ok(false)` means a numerical check failed.
pub fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Kernels { action: KernelsAction::Dump { eta_min, eta_max, nodes, out } } => {
            kernels_dump(eta_min, eta_max, nodes, &out)
        }
        Command::Fronts(a) => fronts(&a.common, a.epsilon, a.nt),
        Command::Field { which: FieldWhich::U(a) } => field_u(&a),
        Command::Field { which: FieldWhich::Theta(a) } => field_theta(&a),
        Command::Verify(a) => verify_cmd(&a.common, &a.ladder, a.times),
        Command::Pde(a) => pde(&a),
        Command::Compare(a) => compare_cmd(&a),
        Command::Jump(a) => jump(&a),
    }
}

fn scenario(c: &Common, epsilon: Option<f64>) -> Result<Scenario> {
    let sc = load_scenario(&c.scenario)?;
    Ok(match epsilon {
        Some(e) => {
            let sc = sc.with_epsilon(e);
            sc.validate()?;
            sc
        }
        None => sc,
    })
}

fn table() -> Result<KernelTable> {
    Ok(build_table(TABLE_ETA_MAX, TABLE_NODES)?)
}

fn kernels_dump(eta_min: f64, eta_max: f64, nodes: usize, out: &Path) -> Result<bool> {
    let t = confluence::kernels::build_table_range(eta_min, eta_max, nodes)?;
    let mut art = Artifacts::new(out)?;
    let mut ok = true;
    let rows: Vec<Vec<String>> = t
        .eta_grid()
        .iter()
        .zip(t.node_values())
        .map(|(&eta, v)| {
            ok &= (v.b_omega - 2.0 * v.c_hat).abs() <= 1e-8;
            ok &= (v.beta * v.beta * v.c_hat - v.d_hat).abs() <= 1e-12;
            [eta, v.c_hat, v.d_hat, v.b_omega, v.bz_omega, v.c_omega, v.b_tilde, v.b_dot00, v.bz_dot00, v.beta]
                .iter()
                .map(|&x| num(x))
                .collect()
        })
        .collect();
    art.csv("kernels.csv", "eta,c_hat,d_hat,b_omega,bz_omega,c_omega,b_tilde,b_dot00,bz_dot00,beta", rows)?;
    art.finish(
        "kernels dump",
        None,
        &[("eta_min", num(eta_min)), ("eta_max", num(eta_max)), ("nodes", nodes.to_string())],
    )?;
    Ok(ok)
}

fn fronts(c: &Common, epsilon: Option<f64>, nt: usize) -> Result<bool> {
    let sc = scenario(c, epsilon)?;
    let table = table()?;
    let model = FrontModel::new(&sc, &table, c.rule())?;
    let traj = assemble_fronts(&model, &sample_times(&sc, nt)?)?;
    let mut art = Artifacts::new(&c.out)?;
    let rows = traj.states.iter().map(|s| {
        [s.t, s.tau, s.eta, s.beta, s.rho, s.phi1, s.phi2, s.phi1_t, s.phi2_t].iter().map(|&x| num(x)).collect()
    });
    art.csv("fronts.csv", "t,tau,eta,beta,rho,phi1,phi2,phi1_t,phi2_t", rows)?;
    art.finish(
        "fronts",
        Some(&c.scenario),
        &[("epsilon", num(sc.epsilon)), ("nt", nt.to_string()), ("sum_rule", format!("{:?}", c.rule()))],
    )?;
    Ok(true)
}

/// `nt` evenly spaced times covering `[0, t_end]`.
fn sample_times(sc: &Scenario, nt: usize) -> Result<Vec<f64>> {
    if nt < 2 {
        return Err(Error::InvalidArgument("cli: --nt must be at least 2".into()).into());
    }
    Ok(uniform_times(sc.t_end, nt - 1))
}

fn grid_x(sc: &Scenario, nx: usize) -> Result<Vec<f64>> {
    if nx < 2 {
        return Err(Error::InvalidArgument("cli: --nx must be at least 2".into()).into());
    }
    Ok((0..nx).map(|j| sc.l1 + (sc.l2 - sc.l1) * j as f64 / (nx - 1) as f64).collect())
}

fn field_u(a: &FieldArgs) -> Result<bool> {
    let sc = scenario(&a.common, a.epsilon)?;
    let table = table()?;
    let model = FrontModel::new(&sc, &table, a.common.rule())?;
    let xs = grid_x(&sc, a.nx)?;
    let mut rows = Vec::with_capacity(xs.len() * a.nt);
    for t in sample_times(&sc, a.nt)? {
        let st = model.state(t)?;
        for &x in &xs {
            let f = u_check(x, &st, sc.epsilon);
            rows.push([t, x, f.u, f.u_t, f.u_x].iter().map(|&v| num(v)).collect());
        }
    }
    let mut art = Artifacts::new(&a.common.out)?;
    art.csv("field_u.csv", "t,x,u,u_t,u_x", rows)?;
    art.finish(
        "field u",
        Some(&a.common.scenario),
        &[("epsilon", num(sc.epsilon)), ("nx", a.nx.to_string()), ("nt", a.nt.to_string())],
    )?;
    Ok(true)
}

fn field_theta(a: &FieldArgs) -> Result<bool> {
    let sc = scenario(&a.common, a.epsilon)?;
    let table = table()?;
    let model = FrontModel::new(&sc, &table, a.common.rule())?;
    let duhamel = Duhamel::new(&model, DuhamelMask::ALL)?;
    let xs = grid_x(&sc, a.nx)?;
    let grid = HeatGrid::resolving(&sc);
    // sample times sit on the remainder's time grid
    let times: Vec<f64> =
        sample_times(&sc, a.nt)?.iter().map(|&t| (t / grid.dt).round().max(1.0) * grid.dt).collect();
    let t_stop = times.iter().cloned().fold(0.0, f64::max);
    let sol = solve_q_smooth(&model, grid, t_stop, &times)?;
    let mut rows = Vec::with_capacity(xs.len() * times.len());
    let mut traces = Vec::with_capacity(times.len());
    for &t in &times {
        let k = model.kinematics(t)?;
        let level = &sol.snapshot(t).cur;
        let at = |x: f64| assemble_theta(x, &k, &sc, &duhamel, Some((&sol, level)));
        for &x in &xs {
            let s = at(x)?;
            rows.push([t, x, s.theta, s.model_t, s.q_hat, s.q_smooth].iter().map(|&v| num(v)).collect());
        }
        let st = &k.state;
        let tr = [t, at(st.phi1)?.theta, at(st.phi2)?.theta, at(st.x_star())?.theta];
        traces.push(tr.iter().map(|&v| num(v)).collect());
    }
    let mut art = Artifacts::new(&a.common.out)?;
    art.csv("field_theta.csv", "t,x,theta,model_T,q_hat,q_smooth", rows)?;
    art.csv("theta_traces.csv", "t,theta_at_phi1,theta_at_phi2,theta_at_xstar", traces)?;
    art.finish(
        "field theta",
        Some(&a.common.scenario),
        &[("epsilon", num(sc.epsilon)), ("nx", a.nx.to_string()), ("nt", a.nt.to_string())],
    )?;
    Ok(true)
}

fn fit_cells(f: &confluence::Result<ScalingFit>) -> [String; 2] {
    match f {
        Ok(f) => [num(f.slope), num(f.confidence)],
        Err(_) => ["nan".into(), "nan".into()],
    }
}

fn verify_cmd(c: &Common, ladder: &[f64], times: usize) -> Result<bool> {
    let sc = scenario(c, None)?;
    let table = table()?;
    let opts = VerifyOptions { ladder: ladder.to_vec(), n_times: times, rule: c.rule(), ..Default::default() };
    let rep = verify(&sc, &table, &opts)?;
    let mut art = Artifacts::new(&c.out)?;
    let rows = rep.rows.iter().map(|r| vec![r.functional.to_string(), r.test_fn.clone(), num(r.t), num(r.epsilon), num(r.value)]);
    art.csv("residuals.csv", "functional,test_fn,t,epsilon,value", rows)?;
    let ladder_rows = rep.points.iter().map(|p| {
        [p.epsilon, p.max_r5, p.max_r6, p.max_gap, p.max_v2, p.max_j].iter().map(|&v| num(v)).collect()
    });
    art.csv("ladder.csv", "epsilon,max_heat,max_allen_cahn,max_v_gap,max_v2,max_j", ladder_rows)?;
    let [s5, s5e] = fit_cells(&rep.slope5);
    let [s6, s6e] = fit_cells(&rep.slope6);
    let [sg, sge] = fit_cells(&rep.gap_fit);
    let verdicts = [rep.pass5(), rep.pass6(), rep.pass_v2(), rep.pass_gap()];
    let mut row = vec![s5, s5e, s6.clone(), s6e, s6, num(rep.v2_max), sg, sge];
    row.extend(verdicts.iter().map(|v| v.to_string()));
    art.csv(
        "report.csv",
        "slope5,slope5_se,slope6,slope6_se,mu_fit,v2_max,gap_slope,gap_slope_se,pass5,pass6,pass_v2,pass_gap",
        [row],
    )?;
    let ladder_s: Vec<String> = ladder.iter().map(|e| format!("{e:?}")).collect();
    art.finish(
        "verify",
        Some(&c.scenario),
        &[("ladder", ladder_s.join(",")), ("times", times.to_string()), ("sum_rule", format!("{:?}", c.rule()))],
    )?;
    Ok(verdicts.iter().all(|&v| v))
}

fn reference_run<'a>(a: &PdeArgs, sc: &'a Scenario, model: &FrontModel<'a>) -> Result<FdRun> {
    let mut grid = GridSpec::resolving(sc);
    if let Some(nx) = a.nx {
        grid.nx = nx;
        let dx = grid.dx(sc);
        grid.dt = (dx * dx).min(sc.epsilon * dx);
    }
    if let Some(dt) = a.dt {
        grid.dt = dt;
    }
    Ok(solve_from_ansatz(model, grid, SavePlan::for_scenario(sc))?)
}

fn grid_params(run: &FdRun) -> Vec<(&'static str, String)> {
    vec![("epsilon", num(run.epsilon)), ("nx", run.grid.nx.to_string()), ("dt", num(run.grid.dt))]
}

/// Spacing of frames written to `fd_fields.csv`.
const FIELD_OUTPUT_DT: f64 = 0.05;

fn pde(a: &PdeArgs) -> Result<bool> {
    let sc = scenario(&a.common, a.epsilon)?;
    let table = table()?;
    let model = FrontModel::new(&sc, &table, a.common.rule())?;
    let run = reference_run(a, &sc, &model)?;
    let mut art = Artifacts::new(&a.common.out)?;
    let mut rows = Vec::new();
    let mut next = 0.0;
    for f in &run.frames {
        if f.t + 1e-12 < next {
            continue;
        }
        next = f.t + FIELD_OUTPUT_DT;
        for (j, &x) in run.x.iter().enumerate() {
            rows.push([f.t, x, f.u[j], f.theta[j]].iter().map(|&v| num(v)).collect());
        }
    }
    art.csv("fd_fields.csv", "t,x,u,theta", rows)?;
    art.csv(
        "fd_fronts.csv",
        "t,count,front1,front2",
        run.fronts.iter().map(|s| {
            let pick = |k: usize| s.fronts.get(k).map(|&v| num(v)).unwrap_or_else(|| "nan".into());
            vec![num(s.t), s.fronts.len().to_string(), pick(0), pick(1)]
        }),
    )?;
    art.finish("pde", Some(&a.common.scenario), &grid_params(&run))?;
    Ok(true)
}

fn compare_cmd(a: &PdeArgs) -> Result<bool> {
    let sc = scenario(&a.common, a.epsilon)?;
    let table = table()?;
    let model = FrontModel::new(&sc, &table, a.common.rule())?;
    let traj = assemble_fronts(&model, &uniform_times(sc.t_end, 2001))?;
    let contact = contact_effects(&traj, &sc)?;
    let run = reference_run(a, &sc, &model)?;
    let header = "epsilon,front_error,front_tol,t_star,t_star_fd,t_star_error,t_star_tol,two_fronts_before,none_after,\
                  pass_fronts,pass_merge,pass_phases";
    let (row, ok) = match compare(&model, &run, &contact) {
        Ok(r) => {
            let ok = [r.fronts_ok(), r.merge_time_ok(), r.phases_ok()];
            let mut row: Vec<String> = [r.epsilon, r.front_error, 5.0 * r.epsilon, sc.t_star, r.t_star_fd, r.t_star_error, r.t_star_tolerance]
                .iter()
                .map(|&v| num(v))
                .collect();
            row.extend([r.two_fronts_before, r.none_after].iter().chain(&ok).map(|b| b.to_string()));
            (row, ok.iter().all(|&b| b))
        }
        Err(Error::NoConfluence { .. }) => {
            let fa = front_agreement(&model, &run)?;
            let fronts_ok = fa.front_error <= 5.0 * sc.epsilon;
            let mut row: Vec<String> = [sc.epsilon, fa.front_error, 5.0 * sc.epsilon, sc.t_star].iter().map(|&v| num(v)).collect();
            row.extend(["nan".into(), "nan".into(), num(10.0 * sc.epsilon * sc.epsilon + 5.0 * run.grid.dt)]);
            row.extend([fa.two_fronts_before, fa.none_after, fronts_ok, false, false].iter().map(|b| b.to_string()));
            (row, false)
        }
        Err(e) => return Err(e.into()),
    };
    let mut art = Artifacts::new(&a.common.out)?;
    art.csv("comparison.csv", header, [row])?;
    art.finish("compare", Some(&a.common.scenario), &grid_params(&run))?;
    Ok(ok)
}

fn jump(a: &PdeArgs) -> Result<bool> {
    let sc = scenario(&a.common, a.epsilon)?;
    let table = table()?;
    let model = FrontModel::new(&sc, &table, a.common.rule())?;
    let traj = assemble_fronts(&model, &uniform_times(sc.t_end, 2001))?;
    let contact = contact_effects(&traj, &sc)?;
    let run = reference_run(a, &sc, &model)?;
    let (measured, ok) = match compare(&model, &run, &contact) {
        Ok(r) => (r.dip_depth, r.dip_ok()),
        Err(Error::NoConfluence { .. }) => (f64::NAN, false),
        Err(e) => return Err(e.into()),
    };
    println!("predicted dip = {:.6}", contact.temperature_jump);
    if measured.is_nan() {
        println!("measured dip  = none (reference fronts never merged)");
    } else {
        println!("measured dip  = {measured:.6}");
    }
    println!("velocity sum at contact = {:.6e}", contact.velocity_sum);
    let mut art = Artifacts::new(&a.common.out)?;
    art.csv(
        "jump.csv",
        "epsilon,t_contact,velocity_sum,dip_predicted,dip_measured,pass",
        [vec![
            num(sc.epsilon),
            num(contact.t_contact),
            num(contact.velocity_sum),
            num(contact.temperature_jump),
            if measured.is_nan() { "nan".into() } else { num(measured) },
            ok.to_string(),
        ]],
    )?;
    art.finish("jump", Some(&a.common.scenario), &grid_params(&run))?;
    Ok(ok)
}
