//! Convolution integrals of the interacting profile and their tabulation in η.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profiles::{capital_omega, double_well, omega0, omega0_dot, omega_reduced};
use crate::quadrature::{adaptive, QuadOptions};
use crate::spline::CubicSpline;

/// Half-width of the truncated integration line.
pub const LINE_HALF_WIDTH: f64 = 40.0;
/// Default absolute tolerance for kernel quadrature.
pub const LINE_TOL: f64 = 1e-12;

/// Integrate `f` over `[−40, 40]` to absolute tolerance `tol`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    adaptive(
        f,
        -LINE_HALF_WIDTH,
        LINE_HALF_WIDTH,
        QuadOptions { abs_tol: tol, initial_panels: 16, max_panels: 8000 },
    )
}

/// `Ĉ(η) = ¼ ∫ (Ω'_z)² dz`.
pub fn c_hat(eta: f64) -> Result<f64> {
    Ok(0.25 * integrate_line(|z| capital_omega(z, eta).d_z.powi(2), LINE_TOL)?)
}

/// `D̂(η) = ½ ∫ F(Ω) dz`.
pub fn d_hat(eta: f64) -> Result<f64> {
    Ok(0.5 * integrate_line(|z| double_well(capital_omega(z, eta).value), LINE_TOL)?)
}

/// `B_Ω(η) = ∫ Ω'_z (Ω'_z − Ω'_η) dz`.
pub fn b_omega(eta: f64) -> Result<f64> {
    integrate_line(
        |z| {
            let p = capital_omega(z, eta);
            p.d_z * (p.d_z - p.d_eta)
        },
        LINE_TOL,
    )
}

/// Second form `½ ∫ (Ω'_z)² dz` of `B_Ω`, exposed for the identity check.
pub fn b_omega_half_square(eta: f64) -> Result<f64> {
    Ok(0.5 * integrate_line(|z| capital_omega(z, eta).d_z.powi(2), LINE_TOL)?)
}

/// `B^z_Ω(η) = ∫ [z(Ω'_z − Ω'_η) − (z + η)Ω'_η](Ω'_z − Ω'_η) dz`.
pub fn bz_omega(eta: f64) -> Result<f64> {
    integrate_line(
        |z| {
            let p = capital_omega(z, eta);
            let r = p.d_z - p.d_eta;
            (z * r - (z + eta) * p.d_eta) * r
        },
        LINE_TOL,
    )
}

/// `C_Ω(η) = ∫ (Ω'_z − Ω'_η) dz`.
pub fn c_omega(eta: f64) -> Result<f64> {
    integrate_line(
        |z| {
            let p = capital_omega(z, eta);
            p.d_z - p.d_eta
        },
        LINE_TOL,
    )
}

/// `C_Ω` through the reduced integrand `½ ω̇₀(z)(1 − ω₀(−z−η))`.
pub fn c_omega_reduced(eta: f64) -> Result<f64> {
    integrate_line(|z| omega_reduced(z, eta), LINE_TOL)
}

/// `B̃(η) = ∫ (1 − ω₀(z + η) ω₀(z)) dz`.
pub fn b_tilde(eta: f64) -> Result<f64> {
    integrate_line(|z| 1.0 - omega0(z + eta) * omega0(z), LINE_TOL)
}

/// `B_{0̇0}(η) = ∫ ω̇₀(z) ω₀(−η − z) dz`.
pub fn b_dot00(eta: f64) -> Result<f64> {
    integrate_line(|z| omega0_dot(z) * omega0(-eta - z), LINE_TOL)
}

/// `B^z_{0̇0}(η) = ∫ z ω̇₀(z) ω₀(−η − z) dz`.
pub fn bz_dot00(eta: f64) -> Result<f64> {
    integrate_line(|z| z * omega0_dot(z) * omega0(-eta - z), LINE_TOL)
}

/// `β(η) = √(D̂/Ĉ)`.
pub fn beta_of_eta(eta: f64) -> Result<f64> {
    Ok((d_hat(eta)? / c_hat(eta)?).sqrt())
}

/// All tabulated kernels at one η.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelValues {
    pub c_hat: f64,
    pub d_hat: f64,
    pub b_omega: f64,
    pub bz_omega: f64,
    pub c_omega: f64,
    pub b_tilde: f64,
    pub b_dot00: f64,
    pub bz_dot00: f64,
    pub beta: f64,
}

impl KernelValues {
    /// Direct quadrature of every kernel.
    pub fn direct(eta: f64) -> Result<Self> {
        let c = c_hat(eta)?;
        let d = d_hat(eta)?;
        Ok(Self {
            c_hat: c,
            d_hat: d,
            b_omega: b_omega(eta)?,
            bz_omega: bz_omega(eta)?,
            c_omega: c_omega(eta)?,
            b_tilde: b_tilde(eta)?,
            b_dot00: b_dot00(eta)?,
            bz_dot00: bz_dot00(eta)?,
            beta: (d / c).sqrt(),
        })
    }

    fn to_array(self) -> [f64; 9] {
        [
            self.c_hat,
            self.d_hat,
            self.b_omega,
            self.bz_omega,
            self.c_omega,
            self.b_tilde,
            self.b_dot00,
            self.bz_dot00,
            self.beta,
        ]
    }

    fn from_array(a: [f64; 9]) -> Self {
        Self {
            c_hat: a[0],
            d_hat: a[1],
            b_omega: a[2],
            bz_omega: a[3],
            c_omega: a[4],
            b_tilde: a[5],
            b_dot00: a[6],
            bz_dot00: a[7],
            beta: a[8],
        }
    }
}

/// Layer width law `β(η)` consumed by the front dynamics.
pub trait BetaLaw: Sync {
    fn beta(&self, eta: f64) -> f64;
    fn beta_prime(&self, eta: f64) -> f64;
    /// Upper bound of `β` over `η ≥ 0`.
    fn beta_max(&self) -> f64;
}

/// Constant `β`, used to isolate the η equation in tests.
#[derive(Debug, Clone, Copy)]
pub struct ConstantBeta(pub f64);

impl BetaLaw for ConstantBeta {
    fn beta(&self, _eta: f64) -> f64 {
        self.0
    }
    fn beta_prime(&self, _eta: f64) -> f64 {
        0.0
    }
    fn beta_max(&self) -> f64 {
        self.0
    }
}

/// Cubic-interpolated kernels on a grid clustered around `η = 0`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    eta_grid: Vec<f64>,
    nodes: Vec<KernelValues>,
    splines: Vec<CubicSpline>,
    beta_max: f64,
}

/// Clustering length of the sinh-stretched grid.
const GRID_SCALE: f64 = 0.5;

/// Sinh-stretched nodes on `[eta_min, eta_max]`, densest near `η = 0`.
pub fn stretched_grid(eta_min: f64, eta_max: f64, n: usize) -> Vec<f64> {
    let u0 = (eta_min / GRID_SCALE).asinh();
    let u1 = (eta_max / GRID_SCALE).asinh();
    let mut g: Vec<f64> = (0..n)
        .map(|k| GRID_SCALE * (u0 + (u1 - u0) * k as f64 / (n - 1) as f64).sinh())
        .collect();
    g[0] = eta_min;
    g[n - 1] = eta_max;
    g
}

/// Tabulate all kernels on `[0, eta_max]`.
pub fn build_table(eta_max: f64, n_nodes: usize) -> Result<KernelTable> {
    if eta_max < 20.0 || n_nodes < 200 {
        return Err(Error::InvalidArgument(format!(
            "kernels: table needs eta_max >= 20 and n_nodes >= 200 (got {eta_max}, {n_nodes})"
        )));
    }
    build_table_range(0.0, eta_max, n_nodes)
}

/// Tabulate all kernels on an arbitrary range (used by the dump command).
pub fn build_table_range(eta_min: f64, eta_max: f64, n_nodes: usize) -> Result<KernelTable> {
    if !(eta_max > eta_min) || n_nodes < 4 {
        return Err(Error::InvalidArgument(format!(
            "kernels: need eta_min < eta_max and at least 4 nodes (got [{eta_min}, {eta_max}], {n_nodes})"
        )));
    }
    let eta_grid = stretched_grid(eta_min, eta_max, n_nodes);
    let nodes: Vec<KernelValues> = eta_grid
        .par_iter()
        .map(|&e| KernelValues::direct(e))
        .collect::<Result<Vec<_>>>()?;
    // β is not splined on its own: it is rebuilt from the interpolated Ĉ, D̂
    // so that β²Ĉ = D̂ also holds between nodes.
    let splines = (0..8)
        .map(|k| CubicSpline::new(eta_grid.clone(), nodes.iter().map(|v| v.to_array()[k]).collect()))
        .collect();
    let beta_max = nodes.iter().map(|v| v.beta).fold(0.0, f64::max);
    Ok(KernelTable { eta_grid, nodes, splines, beta_max })
}

impl KernelTable {
    pub fn eta_grid(&self) -> &[f64] {
        &self.eta_grid
    }

    pub fn node_values(&self) -> &[KernelValues] {
        &self.nodes
    }

    pub fn eta_max(&self) -> f64 {
        *self.eta_grid.last().unwrap()
    }

    pub fn eta_min(&self) -> f64 {
        self.eta_grid[0]
    }

    /// Interpolated kernels with η-derivatives. Past the last node the values
    /// are frozen at their limits, except `B̃` which continues with slope 2.
    pub fn eval_with_derivative(&self, eta: f64) -> (KernelValues, KernelValues) {
        let top = self.eta_max();
        let probe = eta.clamp(self.eta_min(), top);
        let mut v = [0.0; 9];
        let mut d = [0.0; 9];
        for k in 0..8 {
            let (a, b) = self.splines[k].eval(probe);
            v[k] = a;
            d[k] = if eta > top { 0.0 } else { b };
        }
        v[8] = (v[1] / v[0]).sqrt();
        d[8] = 0.5 * v[8] * (d[1] / v[1] - d[0] / v[0]);
        if eta > top {
            v[5] += 2.0 * (eta - top);
            d[5] = 2.0;
        }
        (KernelValues::from_array(v), KernelValues::from_array(d))
    }

    pub fn eval(&self, eta: f64) -> KernelValues {
        self.eval_with_derivative(eta).0
    }
}

impl BetaLaw for KernelTable {
    fn beta(&self, eta: f64) -> f64 {
        let probe = eta.clamp(self.eta_min(), self.eta_max());
        (self.splines[1].eval(probe).0 / self.splines[0].eval(probe).0).sqrt()
    }
    fn beta_prime(&self, eta: f64) -> f64 {
        if eta > self.eta_max() || eta < self.eta_min() {
            return 0.0;
        }
        let (c, dc) = self.splines[0].eval(eta);
        let (d, dd) = self.splines[1].eval(eta);
        0.5 * (d / c).sqrt() * (dd / d - dc / c)
    }
    fn beta_max(&self) -> f64 {
        self.beta_max
    }
}
