//! The order-function ansatz
//! `ǔ = ½[1 + ω₀(β(φ₁−x)/ε) + ω₀(β(x−φ₂)/ε) − ω₀(β(φ₁−x)/ε) ω₀(β(x−φ₂)/ε)]`
//! with its exact derivatives and weak δ-expansion of `ǔ_t`.

use crate::front_dynamics::FrontState;
use crate::profiles::{omega0, omega0_dot};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
}

/// Evaluate `ǔ`, `ǔ_t`, `ǔ_x` at `x` for the given front state.
pub fn u_check(x: f64, s: &FrontState, epsilon: f64) -> FieldSample {
    let beta = s.beta;
    let beta_t = s.beta_t(epsilon);
    let za = beta * (s.phi1 - x) / epsilon;
    let zb = beta * (x - s.phi2) / epsilon;
    let a = omega0(za);
    let b = omega0(zb);
    let da = omega0_dot(za);
    let db = omega0_dot(zb);
    let u = 0.5 * (1.0 + a + b - a * b);
    // ∂u/∂a = ½(1 − b), ∂u/∂b = ½(1 − a)
    let wa = 0.5 * (1.0 - b) * da;
    let wb = 0.5 * (1.0 - a) * db;
    let u_x = (-wa + wb) * beta / epsilon;
    let za_t = (beta_t * (s.phi1 - x) + beta * s.phi1_t) / epsilon;
    let zb_t = (beta_t * (x - s.phi2) - beta * s.phi2_t) / epsilon;
    let u_t = wa * za_t + wb * zb_t;
    FieldSample { u, u_t, u_x }
}

/// Coefficient and location of one δ-term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaTerm {
    pub coeff: f64,
    pub at: f64,
}

/// Weak expansion `ǔ_t = A₁δ(x−φ₁) + A₂δ(x−φ₂) + O(ε)` with
/// `A_i = (−1)^{i+1} φ_{it}(2 − B_{0̇0})/2 − β_τψ₀ₜ B^z_{0̇0}/(2β²)`.
pub fn ut_delta_expansion(s: &FrontState) -> [DeltaTerm; 2] {
    let k = &s.kernels;
    let stretch = s.beta_tau * s.psi0_t * k.bz_dot00 / (2.0 * s.beta * s.beta);
    let half = 0.5 * (2.0 - k.b_dot00);
    [
        DeltaTerm { coeff: s.phi1_t * half - stretch, at: s.phi1 },
        DeltaTerm { coeff: -s.phi2_t * half - stretch, at: s.phi2 },
    ]
}
