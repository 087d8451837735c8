//! Finite-difference reference solve of the full phase-field system
//! `u_t = u_xx + (u − u³)/ε² + θ/ε`, `θ_t = θ_xx − u_t`.
//!
//! Diffusion is Crank–Nicolson, reaction and coupling are explicit. `u` has
//! zero-flux ends; `θ` takes the scenario boundary data.

use crate::error::{Error, Result};
use crate::front_dynamics::{ContactEffects, FrontModel};
use crate::order_field::u_check;
use crate::scenario::{Boundary, Scenario};
use crate::spline::solve_tridiagonal;
use crate::temperature_field::{cn_matrix, laplacian, model_temperature, Cutoff};

/// Space-time resolution of a reference run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub dt: f64,
}

impl GridSpec {
    /// Coarsest grid allowed: `Δx ≤ ε/8` and `dt = min(Δx², εΔx)`.
    pub fn resolving(sc: &Scenario) -> Self {
        let len = sc.domain_length();
        let nx = (len / (sc.epsilon / 8.0)).ceil() as usize + 1;
        let dx = len / (nx - 1) as f64;
        Self { nx, dt: (dx * dx).min(sc.epsilon * dx) }
    }

    pub fn dx(&self, sc: &Scenario) -> f64 {
        sc.domain_length() / (self.nx - 1) as f64
    }

    pub fn check(&self, sc: &Scenario) -> Result<()> {
        if self.nx < 3 {
            return Err(Error::InvalidArgument("pde_reference: need at least 3 grid points".into()));
        }
        let dx = self.dx(sc);
        if dx > sc.epsilon / 8.0 * (1.0 + 1e-12) {
            return Err(Error::ResolutionError { dx, epsilon: sc.epsilon });
        }
        let bound = (dx * dx).min(sc.epsilon * dx);
        if !(self.dt > 0.0) || self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt: self.dt, bound });
        }
        Ok(())
    }
}

/// Stored solution level.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Zero crossings of `u` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSample {
    pub t: f64,
    pub fronts: Vec<f64>,
}

/// When to keep full frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SavePlan {
    /// Spacing of stored frames away from `t*`.
    pub coarse_dt: f64,
    /// Spacing inside `|t − t*| ≤ window`.
    pub fine_dt: f64,
    pub window: f64,
    /// Spacing of stored front samples.
    pub front_dt: f64,
}

impl SavePlan {
    pub fn for_scenario(sc: &Scenario) -> Self {
        let eps = sc.epsilon;
        Self { coarse_dt: 0.01, fine_dt: 0.05 * eps, window: 10.0 * eps, front_dt: 0.1 * eps }
    }
}

/// Output of [`solve_system`].
#[derive(Debug, Clone, PartialEq)]
pub struct FdRun {
    pub epsilon: f64,
    pub grid: GridSpec,
    pub x: Vec<f64>,
    pub frames: Vec<Frame>,
    pub fronts: Vec<FrontSample>,
    /// First step with no crossing after two had been present.
    pub t_merge: Option<f64>,
    /// Location of the last crossing pair before the merge.
    pub x_merge: Option<f64>,
    /// Largest `|∫(θ+u) − ∫(θ+u)|₀ − ∫flux|` seen.
    pub mass_drift: f64,
    pub max_abs_u: f64,
}

/// Ansatz values `(ǔ, θ̌)` at `t = 0` on the grid; `θ̌(·,0) = eŤ` since both
/// heat corrections start from zero.
pub fn initial_from_ansatz(model: &FrontModel, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let sc = model.scenario();
    let k = model.kinematics(0.0)?;
    let cut = Cutoff::new(sc);
    let u = x.iter().map(|&xi| u_check(xi, &k.state, sc.epsilon).u).collect();
    let theta = x.iter().map(|&xi| cut.eval(xi).0 * model_temperature(xi, &k, sc).value).collect();
    Ok((u, theta))
}

/// Zero crossings by linear interpolation; adjacent crossings closer than
/// `2Δx` are treated as already merged and dropped.
pub fn track_fronts(x: &[f64], u: &[f64]) -> Vec<f64> {
    let mut raw = Vec::new();
    for j in 0..u.len().saturating_sub(1) {
        let (a, b) = (u[j], u[j + 1]);
        if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
            raw.push(x[j] + (x[j + 1] - x[j]) * a / (a - b));
        }
    }
    if x.len() < 2 {
        return raw;
    }
    let gap = 2.0 * (x[1] - x[0]);
    let mut out: Vec<f64> = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        if i + 1 < raw.len() && raw[i + 1] - raw[i] < gap {
            i += 2;
        } else {
            out.push(raw[i]);
            i += 1;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cn_step(lower: &[f64], diag: &[f64], upper: &[f64], q: &[f64], extra: &[f64], bc: Boundary, dx: f64, dt: f64) -> Vec<f64> {
    let n = q.len();
    let r = dt / (dx * dx);
    let mut rhs: Vec<f64> = (0..n).map(|j| q[j] + 0.5 * dt * laplacian(q, j, bc, dx) + extra[j]).collect();
    match bc {
        Boundary::Dirichlet(a, b) => {
            rhs[0] = a;
            rhs[n - 1] = b;
        }
        Boundary::Neumann(a, b) => {
            rhs[0] -= r * dx * a;
            rhs[n - 1] += r * dx * b;
        }
    }
    solve_tridiagonal(lower, diag, upper, &mut rhs);
    rhs
}

fn trapezoid(v: &[f64], dx: f64) -> f64 {
    let n = v.len();
    dx * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
}

fn boundary_flux(theta: &[f64], bc: Boundary, dx: f64) -> f64 {
    match bc {
        Boundary::Neumann(a, b) => b - a,
        Boundary::Dirichlet(..) => {
            let n = theta.len();
            (theta[n - 1] - theta[n - 2]) / dx - (theta[1] - theta[0]) / dx
        }
    }
}

/// March the full system from `(u0, theta0)` up to the scenario's `t_end`.
pub fn solve_system(sc: &Scenario, grid: GridSpec, u0: Vec<f64>, theta0: Vec<f64>, plan: SavePlan) -> Result<FdRun> {
    grid.check(sc)?;
    let nx = grid.nx;
    if u0.len() != nx || theta0.len() != nx {
        return Err(Error::InvalidArgument("pde_reference: initial data does not match the grid".into()));
    }
    let eps = sc.epsilon;
    let dx = grid.dx(sc);
    let dt = grid.dt;
    let x: Vec<f64> = (0..nx).map(|j| sc.l1 + dx * j as f64).collect();
    let u_bc = Boundary::Neumann(0.0, 0.0);
    let r = dt / (dx * dx);
    let (ul, ud, uu) = cn_matrix(nx, r, u_bc);
    let (tl, td, tu) = cn_matrix(nx, r, sc.bc);
    let n_steps = (sc.t_end / dt).round() as usize;

    let mut u = u0;
    let mut theta = theta0;
    let mass0 = trapezoid(&u, dx) + trapezoid(&theta, dx);
    let mut flux_acc = 0.0;
    let mut mass_drift: f64 = 0.0;
    let mut max_abs_u = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut frames = vec![Frame { t: 0.0, u: u.clone(), theta: theta.clone() }];
    let mut fronts = vec![FrontSample { t: 0.0, fronts: track_fronts(&x, &u) }];
    let (mut next_frame, mut next_front) = (0.0, 0.0);
    let mut seen_two = fronts[0].fronts.len() >= 2;
    let mut last_pair: Option<f64> = None;
    let (mut t_merge, mut x_merge) = (None, None);
    let mut extra = vec![0.0; nx];

    for n in 1..=n_steps {
        let t = n as f64 * dt;
        for j in 0..nx {
            let v = u[j];
            extra[j] = dt * ((v - v * v * v) / (eps * eps) + theta[j] / eps);
        }
        let u_new = cn_step(&ul, &ud, &uu, &u, &extra, u_bc, dx, dt);
        for j in 0..nx {
            extra[j] = -(u_new[j] - u[j]);
        }
        let flux_old = boundary_flux(&theta, sc.bc, dx);
        let theta_new = cn_step(&tl, &td, &tu, &theta, &extra, sc.bc, dx, dt);
        flux_acc += 0.5 * dt * (flux_old + boundary_flux(&theta_new, sc.bc, dx));
        u = u_new;
        theta = theta_new;

        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        max_abs_u = max_abs_u.max(umax);
        if !(umax <= 2.0) {
            return Err(Error::Instability { t, max_u: umax });
        }
        let crossings = track_fronts(&x, &u);
        if crossings.len() >= 2 {
            seen_two = true;
            last_pair = Some(0.5 * (crossings[0] + crossings[1]));
        }
        if seen_two && t_merge.is_none() && crossings.is_empty() {
            t_merge = Some(t);
            x_merge = last_pair;
        }
        if t + 0.5 * dt >= next_front + plan.front_dt || n == n_steps {
            next_front = t;
            fronts.push(FrontSample { t, fronts: crossings });
        }
        let spacing = if (t - sc.t_star).abs() <= plan.window { plan.fine_dt } else { plan.coarse_dt };
        if t + 0.5 * dt >= next_frame + spacing || n == n_steps {
            next_frame = t;
            let mass = trapezoid(&u, dx) + trapezoid(&theta, dx);
            mass_drift = mass_drift.max((mass - mass0 - flux_acc).abs());
            frames.push(Frame { t, u: u.clone(), theta: theta.clone() });
        }
    }
    Ok(FdRun { epsilon: eps, grid, x, frames, fronts, t_merge, x_merge, mass_drift, max_abs_u })
}

/// Set up and run the reference solve initialised from the ansatz.
pub fn solve_from_ansatz(model: &FrontModel, grid: GridSpec, plan: SavePlan) -> Result<FdRun> {
    let sc = model.scenario();
    grid.check(sc)?;
    let x: Vec<f64> = (0..grid.nx).map(|j| sc.l1 + grid.dx(sc) * j as f64).collect();
    let (u0, th0) = initial_from_ansatz(model, &x)?;
    solve_system(sc, grid, u0, th0, plan)
}

impl FdRun {
    /// `θ(x, t)` interpolated linearly in space and time between frames.
    pub fn theta_at(&self, x: f64, t: f64) -> f64 {
        let k = self.frames.partition_point(|f| f.t < t).clamp(1, self.frames.len() - 1);
        let (a, b) = (&self.frames[k - 1], &self.frames[k]);
        let s = if b.t > a.t { ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0) } else { 0.0 };
        let dx = self.x[1] - self.x[0];
        let u = ((x - self.x[0]) / dx).clamp(0.0, (self.x.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.x.len() - 2);
        let w = u - i as f64;
        let at = |v: &[f64]| v[i] + w * (v[i + 1] - v[i]);
        (1.0 - s) * at(&a.theta) + s * at(&b.theta)
    }
}

/// Agreement between the asymptotic fronts and the reference run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub epsilon: f64,
    pub front_error: f64,
    pub t_star_fd: f64,
    pub t_star_error: f64,
    pub t_star_tolerance: f64,
    /// `θ(x_m, t_m + w) − θ(x_m, t_m − w)` at the reference merge point.
    pub dip_depth: f64,
    pub dip_predicted: f64,
    pub dip_window: f64,
    /// Two crossings at every sample with `t ≤ t* − 10ε`.
    pub two_fronts_before: bool,
    /// No crossing at every sample with `t ≥ t* + 10ε`.
    pub none_after: bool,
}

impl ComparisonReport {
    pub fn fronts_ok(&self) -> bool {
        self.front_error <= 5.0 * self.epsilon
    }
    pub fn merge_time_ok(&self) -> bool {
        self.t_star_error <= self.t_star_tolerance
    }
    pub fn phases_ok(&self) -> bool {
        self.two_fronts_before && self.none_after
    }
    pub fn dip_ok(&self) -> bool {
        self.dip_depth < 0.0 && (self.dip_depth - self.dip_predicted).abs() <= 0.3 * self.dip_predicted.abs()
    }
}

/// Front-path agreement over the pre-contact window and phase counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontAgreement {
    /// Max `|front_fd − φ_i|` over samples with `t ≤ t* − 10ε`.
    pub front_error: f64,
    pub two_fronts_before: bool,
    pub none_after: bool,
}

pub fn front_agreement(model: &FrontModel, run: &FdRun) -> Result<FrontAgreement> {
    let sc = model.scenario();
    let delta = 10.0 * sc.epsilon;
    let mut out = FrontAgreement { front_error: 0.0, two_fronts_before: true, none_after: true };
    for s in &run.fronts {
        if s.t <= sc.t_star - delta {
            if s.fronts.len() != 2 {
                out.two_fronts_before = false;
                continue;
            }
            let st = model.state(s.t)?;
            out.front_error = out.front_error.max((s.fronts[0] - st.phi1).abs()).max((s.fronts[1] - st.phi2).abs());
        } else if s.t >= sc.t_star + delta && !s.fronts.is_empty() {
            out.none_after = false;
        }
    }
    Ok(out)
}

/// Compare a reference run with the asymptotic front model.
pub fn compare(model: &FrontModel, run: &FdRun, contact: &ContactEffects) -> Result<ComparisonReport> {
    let sc = model.scenario();
    let eps = sc.epsilon;
    let (t_m, x_m) = match (run.t_merge, run.x_merge) {
        (Some(t), Some(x)) => (t, x),
        _ => return Err(Error::NoConfluence { t_end: sc.t_end }),
    };
    let fa = front_agreement(model, run)?;
    let w = 2.0 * eps;
    let dip_depth = run.theta_at(x_m, t_m + w) - run.theta_at(x_m, t_m - w);
    Ok(ComparisonReport {
        epsilon: eps,
        front_error: fa.front_error,
        t_star_fd: t_m,
        t_star_error: (t_m - sc.t_star).abs(),
        t_star_tolerance: 10.0 * eps * eps + 5.0 * run.grid.dt,
        dip_depth,
        dip_predicted: contact.temperature_jump,
        dip_window: w,
        two_fronts_before: fa.two_fronts_before,
        none_after: fa.none_after,
    })
}
