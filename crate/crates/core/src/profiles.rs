//! Closed-form profile and switch functions.
//!
//! Everything downstream is built from the tanh front `ω₀`, the two-front
//! profile `Ω(z, η)` and the smooth switch `B = V = ½(1 + tanh τ)`.

/// Beyond this magnitude `tanh` is replaced by `±1`.
pub const SATURATION: f64 = 40.0;

/// Value of a two-argument profile together with both partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEval {
    pub value: f64,
    pub d_z: f64,
    pub d_eta: f64,
}

/// The front profile `ω₀(z) = tanh z`, saturated for `|z| > 40`.
#[inline]
pub fn omega0(z: f64) -> f64 {
    if z > SATURATION {
        1.0
    } else if z < -SATURATION {
        -1.0
    } else {
        z.tanh()
    }
}

/// Derivative `ω̇₀ = 1 − ω₀²`.
#[inline]
pub fn omega0_dot(z: f64) -> f64 {
    if z.abs() > SATURATION {
        return 0.0;
    }
    // sech² directly avoids the cancellation in 1 − tanh² for moderate |z|.
    let c = z.cosh();
    1.0 / (c * c)
}

/// Interacting profile
/// `Ω(z, η) = ½{1 + ω₀(z) + ω₀(−z−η) − ω₀(z) ω₀(−z−η)}`.
pub fn capital_omega(z: f64, eta: f64) -> ProfileEval {
    let a = omega0(z);
    let b = omega0(-z - eta);
    let da = omega0_dot(z);
    let db = omega0_dot(-z - eta);
    ProfileEval {
        value: 0.5 * (1.0 + a + b - a * b),
        d_z: 0.5 * da * (1.0 - b) - 0.5 * db * (1.0 - a),
        d_eta: -0.5 * db * (1.0 - a),
    }
}

/// `Ω'_z − Ω'_η` in reduced form, `½ ω̇₀(z)(1 − ω₀(−z−η))`.
#[inline]
pub fn omega_reduced(z: f64, eta: f64) -> f64 {
    0.5 * omega0_dot(z) * (1.0 - omega0(-z - eta))
}

/// Double-well potential `F(u) = u⁴/4 − u²/2 + 1/4`.
#[inline]
pub fn double_well(u: f64) -> f64 {
    let u2 = u * u;
    0.25 * u2 * u2 - 0.5 * u2 + 0.25
}

/// `F'(u) = u³ − u`.
#[inline]
pub fn double_well_prime(u: f64) -> f64 {
    u * u * u - u
}

/// Heaviside regularisation used for the temperature model, `½(1 + tanh τ)`.
#[inline]
pub fn switch_b(tau: f64) -> f64 {
    0.5 * (1.0 + omega0(tau))
}

/// Switch in the front-velocity balance; the same function as [`switch_b`].
#[inline]
pub fn switch_v(tau: f64) -> f64 {
    switch_b(tau)
}

/// `dB/dτ = ½ sech² τ`.
#[inline]
pub fn switch_b_prime(tau: f64) -> f64 {
    0.5 * omega0_dot(tau)
}

/// `2 ∫_{−∞}^{τ} B = ln(1 + e^{2τ})`, evaluated without overflow.
pub fn switch_b_integral2(tau: f64) -> f64 {
    if tau > 0.0 {
        2.0 * tau + (-2.0 * tau).exp().ln_1p()
    } else {
        (2.0 * tau).exp().ln_1p()
    }
}

/// `ln cosh τ` without overflow.
pub fn ln_cosh(tau: f64) -> f64 {
    let a = tau.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `(1/τ) ∫₀^τ (V − 1) dτ'`, continuous through `τ = 0` where it equals `−½`.
pub fn mean_v_minus_one(tau: f64) -> f64 {
    if tau.abs() < 1e-4 {
        // ln cosh τ = τ²/2 − τ⁴/12 + …
        let t2 = tau * tau;
        return -0.5 + tau / 4.0 - t2 * tau / 24.0;
    }
    (ln_cosh(tau) - tau) / (2.0 * tau)
}

/// `d/dτ` of [`mean_v_minus_one`].
pub fn mean_v_minus_one_prime(tau: f64) -> f64 {
    if tau.abs() < 1e-4 {
        return 0.25 - tau * tau / 8.0;
    }
    (switch_v(tau) - 1.0 - mean_v_minus_one(tau)) / tau
}
