//! Interaction dynamics of the two fronts: η(τ), the corrections φ_{i1},
//! assembled positions and velocities, and the contact effects.

use crate::error::{Error, Result};
use crate::kernels::{BetaLaw, KernelTable, KernelValues};
use crate::profiles::{mean_v_minus_one, switch_b_integral2, switch_v};
use crate::quadrature::GaussRule;
use crate::scenario::Scenario;
use crate::spline::CubicSpline;

/// η below which the fronts count as touching.
pub const CONTACT_ETA: f64 = 1e-3;

const ETA_REL_TOL: f64 = 1e-12;

/// Solve `η(1 + tanh η) = β(η) ln(1 + e^{2τ})` for `η ≥ 0` by bisection.
pub fn solve_eta(tau: f64, law: &dyn BetaLaw) -> Result<f64> {
    let l = switch_b_integral2(tau);
    if !l.is_finite() {
        return Err(Error::BracketFailure { tau });
    }
    if l == 0.0 {
        return Ok(0.0);
    }
    let g = |eta: f64| eta * (1.0 + eta.tanh()) - law.beta(eta) * l;
    let mut lo = 0.0;
    let mut hi = law.beta_max() * l * 1.01 + f64::MIN_POSITIVE;
    let ghi = g(hi);
    if !(ghi > 0.0) {
        return Err(Error::BracketFailure { tau });
    }
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= ETA_REL_TOL * lo {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// η and the quantities derived from it at one τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaState {
    pub tau: f64,
    pub eta: f64,
    pub eta_tau: f64,
    pub beta: f64,
    pub beta_tau: f64,
    pub rho: f64,
    pub rho_tau: f64,
}

/// Solve for η and differentiate the root implicitly in τ.
pub fn eta_state(tau: f64, law: &dyn BetaLaw) -> Result<EtaState> {
    let eta = solve_eta(tau, law)?;
    let beta = law.beta(eta);
    let bp = law.beta_prime(eta);
    let l = switch_b_integral2(tau);
    let sech2 = 1.0 / eta.cosh().powi(2);
    let denom = 1.0 + eta.tanh() + eta * sech2 - bp * l;
    let eta_tau = beta * (1.0 + tau.tanh()) / denom;
    let beta_tau = bp * eta_tau;
    let rho = eta / beta;
    let rho_tau = eta_tau / beta - eta * beta_tau / (beta * beta);
    Ok(EtaState { tau, eta, eta_tau, beta, beta_tau, rho, rho_tau })
}

/// Denominator of the stretch integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumDenominator {
    #[default]
    BOmegaPlusCOmega,
    BzOmegaPlusCOmega,
}

/// Closed form used for `S = φ₁₁ + φ₂₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumRule {
    /// `S = (a/ψ₀ₜ) M(τ)`, the reflection-consistent balance of the velocity sum.
    #[default]
    Derived,
    /// `Derived` plus the `β_τ B^z_Ω` stretch integral.
    DerivedWithStretch(SumDenominator),
    /// `S = a M(τ) + (2ψ₀ₜ/τ) ∫₀^τ β_τ/β² · B^z_Ω/den dτ'` taken literally.
    Undivided(SumDenominator),
}

impl SumRule {
    fn denominator(self) -> Option<SumDenominator> {
        match self {
            SumRule::Derived => None,
            SumRule::DerivedWithStretch(d) | SumRule::Undivided(d) => Some(d),
        }
    }
}

/// `H(η) = ∫₀^η β'/β² · B^z_Ω/den dη'`, so the stretch integral over τ is
/// `H(η(τ)) − H(η(0))`.
#[derive(Debug, Clone)]
struct StretchPrimitive {
    spline: CubicSpline,
    top: f64,
    den: SumDenominator,
}

fn stretch_density(table: &KernelTable, den: SumDenominator, eta: f64) -> f64 {
    let (k, d) = table.eval_with_derivative(eta);
    let bottom = match den {
        SumDenominator::BOmegaPlusCOmega => k.b_omega + k.c_omega,
        SumDenominator::BzOmegaPlusCOmega => k.bz_omega + k.c_omega,
    };
    d.beta / (k.beta * k.beta) * k.bz_omega / bottom
}

impl StretchPrimitive {
    fn new(table: &KernelTable, den: SumDenominator) -> Self {
        let grid = table.eta_grid().to_vec();
        let rule = GaussRule::new(8);
        let mut acc = 0.0;
        let mut h = Vec::with_capacity(grid.len());
        h.push(0.0);
        for w in grid.windows(2) {
            acc += rule.integrate(w[0], w[1], |e| stretch_density(table, den, e));
            h.push(acc);
        }
        let top = *grid.last().unwrap();
        Self { spline: CubicSpline::new(grid, h), top, den }
    }

    fn eval(&self, eta: f64) -> f64 {
        self.spline.eval(eta.min(self.top)).0
    }
}

/// Everything known about the fronts at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontState {
    pub t: f64,
    pub tau: f64,
    pub eta: f64,
    pub eta_tau: f64,
    pub beta: f64,
    pub beta_tau: f64,
    pub rho: f64,
    pub rho_tau: f64,
    pub psi0: f64,
    pub psi0_t: f64,
    pub phi10: f64,
    pub phi20: f64,
    pub phi10_t: f64,
    pub phi20_t: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi1_t: f64,
    pub phi2_t: f64,
    /// `φ₁₁ + φ₂₁`.
    pub sum_corr: f64,
    /// `D = (φ₂₁ − φ₁₁)/ψ₀`, NaN at `τ = 0`.
    pub diff_corr: f64,
    pub kernels: KernelValues,
}

impl FrontState {
    /// Midpoint `x*` between the fronts.
    pub fn x_star(&self) -> f64 {
        0.5 * (self.phi1 + self.phi2)
    }

    /// `ψ = φ₂ − φ₁ = ερ`.
    pub fn psi(&self) -> f64 {
        self.phi2 - self.phi1
    }

    /// `dβ/dt`.
    pub fn beta_t(&self, epsilon: f64) -> f64 {
        self.beta_tau * self.psi0_t / epsilon
    }
}

/// `D(τ) = ρ/τ − 1`. Since `ρ(0) > 0` this has a pole at `τ = 0`, where NaN
/// is returned; positions go through the finite product `ψ₀D = ε(ρ − τ)`.
pub fn phi_diff_correction(tau: f64, rho: f64) -> f64 {
    if tau == 0.0 {
        f64::NAN
    } else {
        rho / tau - 1.0
    }
}

/// Front model bound to a scenario and kernel table.
pub struct FrontModel<'a> {
    scenario: &'a Scenario,
    table: &'a KernelTable,
    rule: SumRule,
    stretch: Option<StretchPrimitive>,
    h_at_tau0: f64,
}

impl<'a> FrontModel<'a> {
    pub fn new(scenario: &'a Scenario, table: &'a KernelTable, rule: SumRule) -> Result<Self> {
        let stretch = rule.denominator().map(|d| StretchPrimitive::new(table, d));
        let h_at_tau0 = match &stretch {
            Some(s) => s.eval(solve_eta(0.0, table)?),
            None => 0.0,
        };
        Ok(Self { scenario, table, rule, stretch, h_at_tau0 })
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn table(&self) -> &'a KernelTable {
        self.table
    }

    pub fn rule(&self) -> SumRule {
        self.rule
    }

    pub fn epsilon(&self) -> f64 {
        self.scenario.epsilon
    }

    /// Stretch integral `∫₀^τ β_τ/β² · B^z_Ω/den dτ'` and its integrand.
    fn stretch(&self, es: &EtaState) -> (f64, f64) {
        match &self.stretch {
            None => (0.0, 0.0),
            Some(p) => {
                let g = stretch_density(self.table, p.den, es.eta) * es.eta_tau;
                (p.eval(es.eta) - self.h_at_tau0, g)
            }
        }
    }

    /// `τS`, `∂_τ(τS)` and `ψ₀ ∂_t S` at fixed τ.
    fn sum_parts(&self, t: f64, es: &EtaState) -> (f64, f64, f64) {
        let sc = self.scenario;
        let eps = sc.epsilon;
        let tau = es.tau;
        let a = sc.phi10.deriv(t, 1) + sc.phi20.deriv(t, 1);
        let a_t = sc.phi10.deriv(t, 2) + sc.phi20.deriv(t, 2);
        let p_t = sc.psi0_t(t);
        let p_tt = sc.psi0_tt(t);
        let tau_m = tau * mean_v_minus_one(tau);
        let v1 = switch_v(tau) - 1.0;
        let (big_g, g) = self.stretch(es);
        match self.rule {
            SumRule::Derived | SumRule::DerivedWithStretch(_) => {
                let c = a / p_t;
                let c_t = (a_t * p_t - a * p_tt) / (p_t * p_t);
                (c * tau_m + 2.0 * big_g, c * v1 + 2.0 * g, eps * c_t * tau_m)
            }
            SumRule::Undivided(_) => (
                a * tau_m + 2.0 * p_t * big_g,
                a * v1 + 2.0 * p_t * g,
                eps * (a_t * tau_m + 2.0 * p_tt * big_g),
            ),
        }
    }

    /// `S(τ) = φ₁₁ + φ₂₁` at time `t` (τ is taken from `t`).
    pub fn phi_sum_correction(&self, t: f64) -> Result<f64> {
        let tau = self.scenario.psi0(t) / self.scenario.epsilon;
        let es = eta_state(tau, self.table)?;
        let (tau_s, d_tau_s, _) = self.sum_parts(t, &es);
        Ok(if tau.abs() < 1e-12 { d_tau_s } else { tau_s / tau })
    }

    pub fn state(&self, t: f64) -> Result<FrontState> {
        let sc = self.scenario;
        let eps = sc.epsilon;
        let psi0 = sc.psi0(t);
        let psi0_t = sc.psi0_t(t);
        let tau = psi0 / eps;
        let es = eta_state(tau, self.table)?;
        let (tau_s, d_tau_s, psi0_s_t) = self.sum_parts(t, &es);
        // ψ₀·D = ε(ρ − τ) keeps the geometry exact and finite at τ = 0
        let psi0_d = eps * (es.rho - tau);
        let d_tau_d = es.rho_tau - 1.0;
        let phi10 = sc.phi10.eval(t);
        let phi20 = sc.phi20.eval(t);
        let phi10_t = sc.phi10.deriv(t, 1);
        let phi20_t = sc.phi20.deriv(t, 1);
        let phi1 = phi10 + 0.5 * (eps * tau_s - psi0_d);
        let phi2 = phi20 + 0.5 * (eps * tau_s + psi0_d);
        let phi1_t = phi10_t + 0.5 * psi0_t * (d_tau_s - d_tau_d) + 0.5 * psi0_s_t;
        let phi2_t = phi20_t + 0.5 * psi0_t * (d_tau_s + d_tau_d) + 0.5 * psi0_s_t;
        let sum_corr = if tau.abs() < 1e-12 { d_tau_s } else { tau_s / tau };
        Ok(FrontState {
            t,
            tau,
            eta: es.eta,
            eta_tau: es.eta_tau,
            beta: es.beta,
            beta_tau: es.beta_tau,
            rho: es.rho,
            rho_tau: es.rho_tau,
            psi0,
            psi0_t,
            phi10,
            phi20,
            phi10_t,
            phi20_t,
            phi1,
            phi2,
            phi1_t,
            phi2_t,
            sum_corr,
            diff_corr: phi_diff_correction(tau, es.rho),
            kernels: self.table.eval(es.eta),
        })
    }
}

/// Front state plus accelerations, as needed by the model temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub state: FrontState,
    pub phi1_tt: f64,
    pub phi2_tt: f64,
}

impl<'a> FrontModel<'a> {
    /// State with `φ_{itt}` from a central difference of the analytic velocities.
    pub fn kinematics(&self, t: f64) -> Result<Kinematics> {
        let state = self.state(t)?;
        let h = ACCEL_STEP * self.scenario.t_end.max(1.0);
        let lo = self.state(t - h)?;
        let hi = self.state(t + h)?;
        Ok(Kinematics {
            state,
            phi1_tt: (hi.phi1_t - lo.phi1_t) / (2.0 * h),
            phi2_tt: (hi.phi2_t - lo.phi2_t) / (2.0 * h),
        })
    }
}

const ACCEL_STEP: f64 = 2e-6;

/// Front states on a time grid.
#[derive(Debug, Clone)]
pub struct FrontTrajectory {
    pub epsilon: f64,
    pub states: Vec<FrontState>,
}

impl FrontTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

/// Uniform grid of `n + 1` times on `[0, t_end]`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

/// Evaluate the front model on `times` and check the geometric invariants.
pub fn assemble_fronts(model: &FrontModel, times: &[f64]) -> Result<FrontTrajectory> {
    let eps = model.epsilon();
    let states = times.iter().map(|&t| model.state(t)).collect::<Result<Vec<_>>>()?;
    for s in &states {
        if s.eta < 0.0 || !s.eta.is_finite() {
            return Err(Error::InvalidArgument(format!("front_dynamics: eta = {} at t = {}", s.eta, s.t)));
        }
        let gap = (s.phi2 - s.phi1) - eps * s.rho;
        if gap.abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "front_dynamics: phi2 - phi1 deviates from eps*rho by {gap:e} at t = {}",
                s.t
            )));
        }
    }
    Ok(FrontTrajectory { epsilon: eps, states })
}

/// Observable consequences of the merger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEffects {
    pub t_contact: f64,
    pub eta_contact: f64,
    /// `φ₁ₜ + φ₂ₜ` at the contact node.
    pub velocity_sum: f64,
    /// `−½ lim_{t→t*−0} (φ₁₀ₜ + φ₂₀ₜ)`.
    pub temperature_jump: f64,
}

/// Locate the first node with `η < CONTACT_ETA` and read off the effects.
pub fn contact_effects(traj: &FrontTrajectory, scenario: &Scenario) -> Result<ContactEffects> {
    let node = traj.states.iter().find(|s| s.eta < CONTACT_ETA).ok_or_else(|| Error::NoContact {
        threshold: CONTACT_ETA,
        min_eta: traj.states.iter().map(|s| s.eta).fold(f64::INFINITY, f64::min),
    })?;
    let ts = scenario.t_star;
    let a = scenario.phi10.deriv(ts, 1) + scenario.phi20.deriv(ts, 1);
    Ok(ContactEffects {
        t_contact: node.t,
        eta_contact: node.eta,
        velocity_sum: node.phi1_t + node.phi2_t,
        temperature_jump: -0.5 * a,
    })
}
