//! Global temperature `θ̌ = e(x)Ť + q̂ + q_s`: the piecewise model field, its
//! Duhamel correction, the smooth remainder and trace diagnostics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::front_dynamics::{FrontModel, Kinematics};
use crate::profiles::{switch_b, switch_b_prime};
use crate::quadrature::{adaptive, GaussRule, QuadOptions};
use crate::scenario::{Boundary, Scenario};
use crate::spline::solve_tridiagonal;

/// Smooth cutoff equal to 1 on the plateau and rolling off to 0 at the
/// domain ends with a quintic smoothstep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub l1: f64,
    pub l2: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Cutoff {
    pub fn new(sc: &Scenario) -> Self {
        let (lo, hi) = sc.cutoff_plateau();
        Self { l1: sc.l1, l2: sc.l2, lo, hi }
    }

    /// `(e, e', e'')`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let step = |s: f64, w: f64| {
            let s = s.clamp(0.0, 1.0);
            let v = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
            let d = 30.0 * s * s * (1.0 - s) * (1.0 - s) / w;
            let dd = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (w * w);
            (v, d, dd)
        };
        if x < self.lo {
            let w = self.lo - self.l1;
            step((x - self.l1) / w, w)
        } else if x > self.hi {
            let w = self.l2 - self.hi;
            let (v, d, dd) = step((self.l2 - x) / w, w);
            (v, -d, dd)
        } else {
            (1.0, 0.0, 0.0)
        }
    }
}

/// Slope traces `γ_i^±` and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeTraces {
    pub g1p: f64,
    pub g1m: f64,
    pub g2p: f64,
    pub g2m: f64,
    pub g1p_t: f64,
    pub g1m_t: f64,
    pub g2p_t: f64,
    pub g2m_t: f64,
}

impl SlopeTraces {
    pub fn at(sc: &Scenario, t: f64) -> Self {
        Self {
            g1p: sc.gamma1_plus.eval(t),
            g1m: sc.gamma1_minus.eval(t),
            g2p: sc.gamma2_plus.eval(t),
            g2m: sc.gamma2_minus.eval(t),
            g1p_t: sc.gamma1_plus.deriv(t, 1),
            g1m_t: sc.gamma1_minus.deriv(t, 1),
            g2p_t: sc.gamma2_plus.deriv(t, 1),
            g2m_t: sc.gamma2_minus.deriv(t, 1),
        }
    }
}

/// End weights of the interior cubic, `W = Bγ⁻ − (1−B)γ̂` at `φ₁` and `φ₂`.
fn end_weights(g: &SlopeTraces, b: f64) -> (f64, f64) {
    (b * g.g1p - (1.0 - b) * g.g1m, b * g.g2m - (1.0 - b) * g.g2p)
}

/// Which of the four Duhamel sources to include.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelMask {
    /// `B(γ₁⁺ + γ₂⁻)` plain term.
    pub plain_b: bool,
    /// `(1−B)(γ₁⁻ + γ₂⁺)` plain term.
    pub plain_nb: bool,
    /// `B(γ₂⁻ − γ₁⁺)` weighted term.
    pub star_b: bool,
    /// `(1−B)(γ₂⁺ − γ₁⁻)` weighted term.
    pub star_nb: bool,
}

impl DuhamelMask {
    pub const ALL: Self = Self { plain_b: true, plain_nb: true, star_b: true, star_nb: true };
}

impl Default for DuhamelMask {
    fn default() -> Self {
        Self::ALL
    }
}

/// Source of `q̂` on `[φ₁, φ₂]` written as `c_plain/ψ + c_star (ξ − x*)/ψ²`.
fn source_coeffs(g: &SlopeTraces, b: f64, mask: DuhamelMask) -> (f64, f64) {
    let on = |f: bool| if f { 1.0 } else { 0.0 };
    let c_plain = -on(mask.plain_b) * b * (g.g1p + g.g2m) + on(mask.plain_nb) * (1.0 - b) * (g.g1m + g.g2p);
    let c_star = -6.0 * on(mask.star_b) * b * (g.g2m - g.g1p) + 6.0 * on(mask.star_nb) * (1.0 - b) * (g.g2p - g.g1m);
    (c_plain, c_star)
}

/// Model temperature with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelEval {
    pub value: f64,
    pub d_x: f64,
    pub d_t: f64,
    /// `Ť_xx` strictly between the fronts (zero elsewhere); the source of `q̂`.
    pub interior_xx: f64,
    /// Linear trace function `I` alone.
    pub i_part: f64,
}

/// Evaluate `Ť` at `x`.
///
/// Between the fronts the quadratic factor is written with `s = (x−φ₁)/ψ`,
/// so `(φ₁−x)(x−φ₂)/ψ = ψ s(1−s)` and nothing is divided by a small ψ.
pub fn model_temperature(x: f64, k: &Kinematics, sc: &Scenario) -> ModelEval {
    let st = &k.state;
    let eps = sc.epsilon;
    let g = SlopeTraces::at(sc, st.t);
    let b = switch_b(st.tau);
    let b_t = switch_b_prime(st.tau) * st.psi0_t / eps;
    let (p1, p2, v1, v2) = (st.phi1, st.phi2, st.phi1_t, st.phi2_t);
    let xs = 0.5 * (p1 + p2);
    let xs_t = 0.5 * (v1 + v2);
    let i_part = 0.5 * (v1 - v2) - (x - xs) * 0.5 * (v1 + v2);
    let i_x = -0.5 * (v1 + v2);
    let i_t = 0.5 * (k.phi1_tt - k.phi2_tt) + xs_t * 0.5 * (v1 + v2) - (x - xs) * 0.5 * (k.phi1_tt + k.phi2_tt);
    let psi = p2 - p1;
    let mut out = ModelEval { i_part, ..Default::default() };
    if x < p1 {
        out.value = g.g1m * (p1 - x) + i_part;
        out.d_x = -g.g1m + i_x;
        out.d_t = g.g1m_t * (p1 - x) + g.g1m * v1 + i_t;
    } else if x > p2 || psi <= 0.0 {
        out.value = g.g2p * (x - p2) + i_part;
        out.d_x = g.g2p + i_x;
        out.d_t = g.g2p_t * (x - p2) - g.g2p * v2 + i_t;
    } else {
        let s = ((x - p1) / psi).clamp(0.0, 1.0);
        let (w1, w2) = end_weights(&g, b);
        let dw = w2 - w1;
        let w = w1 + s * dw;
        let w1_t = b_t * (g.g1p + g.g1m) + b * g.g1p_t - (1.0 - b) * g.g1m_t;
        let w2_t = b_t * (g.g2m + g.g2p) + b * g.g2m_t - (1.0 - b) * g.g2p_t;
        let w_t = w1_t + s * (w2_t - w1_t);
        let p = s * (1.0 - s) * w;
        let dp = (1.0 - 2.0 * s) * w + s * (1.0 - s) * dw;
        let ddp = -2.0 * w + 2.0 * (1.0 - 2.0 * s) * dw;
        let psi_t = v2 - v1;
        out.value = psi * p + i_part;
        out.d_x = dp + i_x;
        out.d_t = psi_t * p - dp * (v1 + s * psi_t) + psi * s * (1.0 - s) * w_t + i_t;
        out.interior_xx = ddp / psi;
    }
    out
}

/// Front positions on a dense uniform time grid with cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct DenseFronts {
    t0: f64,
    h: f64,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
    v1: Vec<f64>,
    v2: Vec<f64>,
}

impl DenseFronts {
    /// Sample the model on `n + 1` uniform nodes over `[0, t_end]`.
    pub fn new(model: &FrontModel, n: usize) -> Result<Self> {
        let t_end = model.scenario().t_end;
        let h = t_end / n as f64;
        let states = (0..=n)
            .into_par_iter()
            .map(|k| model.state(h * k as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t0: 0.0,
            h,
            phi1: states.iter().map(|s| s.phi1).collect(),
            phi2: states.iter().map(|s| s.phi2).collect(),
            v1: states.iter().map(|s| s.phi1_t).collect(),
            v2: states.iter().map(|s| s.phi2_t).collect(),
        })
    }

    /// Default density: about 100 nodes per ε of time.
    pub fn for_model(model: &FrontModel) -> Result<Self> {
        let sc = model.scenario();
        let n = ((sc.t_end / (sc.epsilon / 100.0)).ceil() as usize).max(2000);
        Self::new(model, n)
    }

    /// `(φ₁, φ₂)` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.phi1.len() - 1;
        let u = ((t - self.t0) / self.h).clamp(0.0, n as f64);
        let i = (u.floor() as usize).min(n - 1);
        let s = u - i as f64;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let f = |y: &[f64], d: &[f64]| {
            h00 * y[i] + h10 * self.h * d[i] + h01 * y[i + 1] + h11 * self.h * d[i + 1]
        };
        (f(&self.phi1, &self.v1), f(&self.phi2, &self.v2))
    }
}

fn heat_kernel(y: f64, sigma: f64) -> f64 {
    (-y * y / (4.0 * sigma)).exp() / (4.0 * std::f64::consts::PI * sigma).sqrt()
}

/// `½[erf(p) − erf(q)]` for `p ≥ q` without cancellation in the tails.
fn half_erf_diff(p: f64, q: f64) -> f64 {
    if q > 0.0 {
        0.5 * (libm::erfc(q) - libm::erfc(p))
    } else if p < 0.0 {
        0.5 * (libm::erfc(-p) - libm::erfc(-q))
    } else {
        0.5 * (libm::erf(p) - libm::erf(q))
    }
}

/// Pairing of the free-space heat kernel centred at `y` with the source
/// `c_plain/ψ + c_star(ξ−m)/ψ²` on `[a, b]`.
fn inner_free(y: f64, a: f64, b: f64, c_plain: f64, c_star: f64, sigma: f64, rule: &GaussRule) -> f64 {
    let psi = b - a;
    let m = 0.5 * (a + b);
    if psi <= 0.0 {
        return c_plain * heat_kernel(y - m, sigma);
    }
    let r = sigma.sqrt();
    if psi < r {
        return rule.integrate(a, b, |xi| {
            (c_plain / psi + c_star * (xi - m) / (psi * psi)) * heat_kernel(y - xi, sigma)
        });
    }
    let e0 = half_erf_diff((y - a) / (2.0 * r), (y - b) / (2.0 * r));
    let e1 = (sigma / std::f64::consts::PI).sqrt()
        * ((-(a - y) * (a - y) / (4.0 * sigma)).exp() - (-(b - y) * (b - y) / (4.0 * sigma)).exp());
    c_plain / psi * e0 + c_star / (psi * psi) * (e1 + (y - m) * e0)
}

/// Absolute tolerance of the outer Duhamel quadrature.
pub const DUHAMEL_TOL: f64 = 1e-9;

/// Heat potential `q̂` of the interior curvature of `Ť`, with image sources
/// enforcing the scenario's boundary kind.
pub struct Duhamel<'a> {
    sc: &'a Scenario,
    fronts: DenseFronts,
    mask: DuhamelMask,
    rule: GaussRule,
}

impl<'a> Duhamel<'a> {
    pub fn new(model: &FrontModel<'a>, mask: DuhamelMask) -> Result<Self> {
        Ok(Self { sc: model.scenario(), fronts: DenseFronts::for_model(model)?, mask, rule: GaussRule::new(12) })
    }

    pub fn with_fronts(sc: &'a Scenario, fronts: DenseFronts, mask: DuhamelMask) -> Self {
        Self { sc, fronts, mask, rule: GaussRule::new(12) }
    }

    pub fn fronts(&self) -> &DenseFronts {
        &self.fronts
    }

    /// Source `Lq̂` at `(ξ, t)`; zero outside `[φ₁, φ₂]`.
    pub fn source(&self, xi: f64, t: f64) -> f64 {
        let (a, b) = self.fronts.eval(t);
        let psi = b - a;
        if psi <= 0.0 || xi < a || xi > b {
            return 0.0;
        }
        let (cp, cs) = self.coeffs(t);
        cp / psi + cs * (xi - 0.5 * (a + b)) / (psi * psi)
    }

    fn coeffs(&self, t: f64) -> (f64, f64) {
        let g = SlopeTraces::at(self.sc, t);
        let b = switch_b(self.sc.psi0(t) / self.sc.epsilon);
        source_coeffs(&g, b, self.mask)
    }

    /// Spatial pairing at source time `t'` and lag `σ = t − t'`.
    fn inner(&self, x: f64, tp: f64, sigma: f64) -> f64 {
        let (a, b) = self.fronts.eval(tp);
        let (cp, cs) = self.coeffs(tp);
        if cp == 0.0 && cs == 0.0 {
            return 0.0;
        }
        let sc = self.sc;
        let len = sc.l2 - sc.l1;
        let reach = 12.0 * sigma.sqrt();
        let sign = match sc.bc {
            Boundary::Dirichlet(..) => -1.0,
            Boundary::Neumann(..) => 1.0,
        };
        let far = |y: f64| y < a - reach || y > b.max(a) + reach;
        let mut acc = 0.0;
        for k in -3i32..=3 {
            let shift = 2.0 * k as f64 * len;
            let y = x + shift;
            if !far(y) {
                acc += inner_free(y, a, b, cp, cs, sigma, &self.rule);
            }
            let yr = 2.0 * sc.l1 - shift - x;
            if !far(yr) {
                acc += sign * inner_free(yr, a, b, cp, cs, sigma, &self.rule);
            }
        }
        acc
    }

    /// `q̂(x, t)`, integrating over `s = √(t − t')`.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let root = t.sqrt();
        let opts = QuadOptions { abs_tol: DUHAMEL_TOL, initial_panels: 16, max_panels: 6000 };
        adaptive(
            |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                2.0 * s * self.inner(x, t - s * s, s * s)
            },
            0.0,
            root,
            opts,
        )
    }
}

/// Uniform grid and time step for the smooth remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatGrid {
    pub nx: usize,
    pub dt: f64,
}

impl HeatGrid {
    pub fn dx(&self, sc: &Scenario) -> f64 {
        (sc.l2 - sc.l1) / (self.nx - 1) as f64
    }

    /// Finest uniform grid with `Δx ≤ ε/8` and `dt = Δx²`.
    pub fn resolving(sc: &Scenario) -> Self {
        let nx = ((sc.l2 - sc.l1) / (sc.epsilon / 8.0)).ceil() as usize + 1;
        let dx = (sc.l2 - sc.l1) / (nx - 1) as f64;
        Self { nx, dt: dx * dx }
    }
}

/// Three consecutive time levels kept around a requested instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub prev: Vec<f64>,
    pub cur: Vec<f64>,
    pub next: Vec<f64>,
}

/// Result of a Crank–Nicolson heat solve.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSolution {
    pub x: Vec<f64>,
    pub dx: f64,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
}

impl HeatSolution {
    /// Snapshot nearest to `t`.
    pub fn snapshot(&self, t: f64) -> &Snapshot {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap())
            .expect("heat solution has no snapshots")
    }

    /// Linear interpolation of a level at `x`, with its slope.
    pub fn interp(&self, level: &[f64], x: f64) -> (f64, f64) {
        let n = self.x.len();
        let u = ((x - self.x[0]) / self.dx).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        let s = u - i as f64;
        let slope = (level[i + 1] - level[i]) / self.dx;
        (level[i] + s * (level[i + 1] - level[i]), slope)
    }
}

/// Crank–Nicolson solve of `q_t = q_xx + F` on `[l1, l2]` from zero initial data.
///
/// `forcing(t, x, out)` fills `F(x_j, t)`. The step must satisfy
/// `dt ≤ Δx²`, the bound under which the scheme obeys a discrete maximum
/// principle and does not ring on discontinuous forcing. Snapshots are
/// stored at the steps nearest to each of `sample_times`.
pub fn solve_heat_cn<F>(
    l1: f64,
    l2: f64,
    bc: Boundary,
    grid: HeatGrid,
    t_stop: f64,
    sample_times: &[f64],
    forcing: F,
) -> Result<HeatSolution>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let nx = grid.nx;
    if nx < 3 {
        return Err(Error::InvalidArgument("temperature_field: need at least 3 grid points".into()));
    }
    let dx = (l2 - l1) / (nx - 1) as f64;
    let bound = dx * dx;
    if !(grid.dt > 0.0) || grid.dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: grid.dt, bound });
    }
    let dt = grid.dt;
    let x: Vec<f64> = (0..nx).map(|j| l1 + dx * j as f64).collect();
    let n_steps = (t_stop / dt).ceil() as usize + 1;
    let wanted: Vec<usize> = sample_times
        .iter()
        .map(|&t| ((t / dt).round() as usize).clamp(1, n_steps.saturating_sub(1).max(1)))
        .collect();
    let last_needed = wanted.iter().map(|&n| n + 1).max().unwrap_or(0).min(n_steps);

    let r = dt / (dx * dx);
    let mut q = vec![0.0; nx];
    let mut f_old = vec![0.0; nx];
    let mut f_new = vec![0.0; nx];
    forcing(0.0, &x, &mut f_old)?;
    let mut history: Vec<(usize, Vec<f64>)> = vec![(0, q.clone())];
    let mut snaps: Vec<Snapshot> = Vec::new();

    let (lower, diag, upper) = cn_matrix(nx, r, bc);
    for n in 1..=last_needed {
        let t_new = n as f64 * dt;
        forcing(t_new, &x, &mut f_new)?;
        let mut rhs = vec![0.0; nx];
        for j in 0..nx {
            let lap = laplacian(&q, j, bc, dx);
            rhs[j] = q[j] + 0.5 * dt * lap + 0.5 * dt * (f_old[j] + f_new[j]);
        }
        match bc {
            Boundary::Dirichlet(a, b) => {
                rhs[0] = a;
                rhs[nx - 1] = b;
            }
            Boundary::Neumann(a, b) => {
                // ghost-node flux data, implicit half
                rhs[0] -= r * dx * a;
                rhs[nx - 1] += r * dx * b;
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        q = rhs;
        std::mem::swap(&mut f_old, &mut f_new);
        history.push((n, q.clone()));
        if history.len() > 3 {
            history.remove(0);
        }
        for &w in &wanted {
            if w + 1 == n && snaps.iter().all(|s| s.t != w as f64 * dt) {
                snaps.push(Snapshot {
                    t: w as f64 * dt,
                    prev: history[0].1.clone(),
                    cur: history[1].1.clone(),
                    next: history[2].1.clone(),
                });
            }
        }
    }
    snaps.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(HeatSolution { x, dx, dt, snapshots: snaps })
}

pub(crate) fn laplacian(q: &[f64], j: usize, bc: Boundary, dx: f64) -> f64 {
    let n = q.len();
    let h2 = dx * dx;
    match bc {
        Boundary::Dirichlet(..) => {
            if j == 0 || j == n - 1 {
                0.0
            } else {
                (q[j - 1] - 2.0 * q[j] + q[j + 1]) / h2
            }
        }
        Boundary::Neumann(a, b) => {
            if j == 0 {
                (2.0 * q[1] - 2.0 * q[0] - 2.0 * dx * a) / h2
            } else if j == n - 1 {
                (2.0 * q[n - 2] - 2.0 * q[n - 1] + 2.0 * dx * b) / h2
            } else {
                (q[j - 1] - 2.0 * q[j] + q[j + 1]) / h2
            }
        }
    }
}

pub(crate) fn cn_matrix(n: usize, r: f64, bc: Boundary) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut lower = vec![-0.5 * r; n - 1];
    let mut diag = vec![1.0 + r; n];
    let mut upper = vec![-0.5 * r; n - 1];
    match bc {
        Boundary::Dirichlet(..) => {
            diag[0] = 1.0;
            upper[0] = 0.0;
            diag[n - 1] = 1.0;
            lower[n - 2] = 0.0;
        }
        Boundary::Neumann(..) => {
            upper[0] = -r;
            lower[n - 2] = -r;
        }
    }
    (lower, diag, upper)
}

/// Forcing of the smooth remainder: `−(eŤ_t − 2e'Ť_x − e''Ť)`.
pub fn remainder_forcing(x: f64, k: &Kinematics, sc: &Scenario, cut: &Cutoff) -> f64 {
    let m = model_temperature(x, k, sc);
    let (e, e1, e2) = cut.eval(x);
    -(e * m.d_t - 2.0 * e1 * m.d_x - e2 * m.value)
}

/// Solve for `q_s` with the remainder forcing of the given front model.
pub fn solve_q_smooth(model: &FrontModel, grid: HeatGrid, t_stop: f64, sample_times: &[f64]) -> Result<HeatSolution> {
    let sc = model.scenario();
    let dx = grid.dx(sc);
    if dx > sc.epsilon / 8.0 * (1.0 + 1e-12) {
        return Err(Error::ResolutionError { dx, epsilon: sc.epsilon });
    }
    let cut = Cutoff::new(sc);
    solve_heat_cn(sc.l1, sc.l2, sc.bc, grid, t_stop, sample_times, |t, xs, out| {
        let k = model.kinematics(t)?;
        out.par_iter_mut().zip(xs.par_iter()).for_each(|(o, &x)| *o = remainder_forcing(x, &k, sc, &cut));
        Ok(())
    })
}

/// Components of `θ̌` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSample {
    pub theta: f64,
    pub model_t: f64,
    pub q_hat: f64,
    pub q_smooth: f64,
}

/// `θ̌ = e(x)Ť + q̂ + q_s`; `q_s` comes from the supplied grid level.
pub fn assemble_theta(
    x: f64,
    k: &Kinematics,
    sc: &Scenario,
    duhamel: &Duhamel,
    q_level: Option<(&HeatSolution, &[f64])>,
) -> Result<ThetaSample> {
    let cut = Cutoff::new(sc);
    let m = model_temperature(x, k, sc);
    let q_hat = duhamel.eval(x, k.state.t)?;
    let q_smooth = q_level.map(|(sol, lvl)| sol.interp(lvl, x).0).unwrap_or(0.0);
    let model_t = cut.eval(x).0 * m.value;
    Ok(ThetaSample { theta: model_t + q_hat + q_smooth, model_t, q_hat, q_smooth })
}
