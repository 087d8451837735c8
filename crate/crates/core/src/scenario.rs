//! Problem definition and the flat `key = value` scenario format.
//!
//! ```text
//! # two fronts meeting at t = 0.5
//! l1 = -1
//! l2 = 1
//! t_end = 1
//! t_star = 0.5
//! epsilon = 0.05
//! phi10.coeffs = [-0.2, 0.5, -0.2, 0]
//! gamma1_plus.coeffs = [...]
//! bc = dirichlet:0,0
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Ratio between the jump of `θ_x` at a front and the front speed.
///
/// The order parameter jumps by 2 across a front, so the heat balance
/// `Lθ = −u_t` gives `[θ_x] = 2(−1)^{i+1} φ_{it}`.
pub const STEFAN_JUMP: f64 = 2.0;

/// Tolerance for the Stefan consistency check at load time.
pub const STEFAN_TOL: f64 = 1e-10;

/// Polynomial in `t` with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `k`-th derivative at `t`.
    pub fn deriv(&self, t: f64, k: usize) -> f64 {
        let mut acc = 0.0;
        for (p, &c) in self.coeffs.iter().enumerate().skip(k).rev() {
            let mut f = 1.0;
            for j in 0..k {
                f *= (p - j) as f64;
            }
            acc = acc * t + c * f;
        }
        acc
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.deriv(t, 0)
    }
}

/// Boundary condition kind with its data at `l1` and `l2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Dirichlet(f64, f64),
    Neumann(f64, f64),
}

/// Synthetic two-front problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub l1: f64,
    pub l2: f64,
    pub t_end: f64,
    pub t_star: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub phi10: Poly,
    pub phi20: Poly,
    pub gamma1_plus: Poly,
    pub gamma1_minus: Poly,
    pub gamma2_plus: Poly,
    pub gamma2_minus: Poly,
    pub bc: Boundary,
}

impl Scenario {
    pub fn psi0(&self, t: f64) -> f64 {
        self.phi20.eval(t) - self.phi10.eval(t)
    }

    pub fn psi0_t(&self, t: f64) -> f64 {
        self.phi20.deriv(t, 1) - self.phi10.deriv(t, 1)
    }

    pub fn psi0_tt(&self, t: f64) -> f64 {
        self.phi20.deriv(t, 2) - self.phi10.deriv(t, 2)
    }

    pub fn domain_length(&self) -> f64 {
        self.l2 - self.l1
    }

    /// Copy with a different small parameter.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    /// Plateau of the cutoff `e(x)`.
    pub fn cutoff_plateau(&self) -> (f64, f64) {
        let pad = 0.1 * self.domain_length();
        (self.phi10.eval(0.0) - pad, self.phi20.eval(0.0) + pad)
    }

    /// Check every load-time invariant.
    pub fn validate(&self) -> Result<()> {
        let v = |m: String| Err(Error::Validation(m));
        if !(self.l1 < self.l2) {
            return v(format!("domain [{}, {}] is empty", self.l1, self.l2));
        }
        if !(self.t_star > 0.0 && self.t_star < self.t_end) {
            return v(format!("t_star = {} must lie in (0, t_end = {})", self.t_star, self.t_end));
        }
        if !(self.epsilon > 0.0) {
            return v(format!("epsilon = {} must be positive", self.epsilon));
        }
        for (name, p) in [
            ("phi10", &self.phi10),
            ("phi20", &self.phi20),
            ("gamma1_plus", &self.gamma1_plus),
            ("gamma1_minus", &self.gamma1_minus),
            ("gamma2_plus", &self.gamma2_plus),
            ("gamma2_minus", &self.gamma2_minus),
        ] {
            if p.coeffs.is_empty() || p.coeffs.len() > 4 {
                return v(format!("{name}.coeffs must hold 1 to 4 coefficients"));
            }
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return v(format!("{name}.coeffs contains a non-finite value"));
            }
        }
        let n = 4000;
        let scale = 1.0 + self.domain_length();
        if self.psi0(self.t_star).abs() > 1e-10 * scale {
            return v(format!("psi0(t_star) = {:e} is not zero", self.psi0(self.t_star)));
        }
        if !(self.psi0_t(self.t_star) < 0.0) {
            return v(format!("psi0'(t_star) = {} must be negative", self.psi0_t(self.t_star)));
        }
        let (lo, hi) = self.cutoff_plateau();
        if !(lo > self.l1 && hi < self.l2) {
            return v(format!("cutoff plateau [{lo}, {hi}] leaves the domain"));
        }
        for k in 0..=n {
            let t = self.t_end * k as f64 / n as f64;
            let psi = self.psi0(t);
            if !(self.psi0_t(t) < 0.0) {
                return v(format!("psi0' must stay negative on [0, t_end]; psi0'({t}) = {}", self.psi0_t(t)));
            }
            let dt = t - self.t_star;
            if dt.abs() > 1e-9 && psi * dt >= 0.0 {
                return v(format!("psi0 must be positive before and negative after t_star; psi0({t}) = {psi}"));
            }
            for (name, x) in [("phi10", self.phi10.eval(t)), ("phi20", self.phi20.eval(t))] {
                if x <= lo || x >= hi {
                    return v(format!("{name}({t}) = {x} leaves the cutoff plateau [{lo}, {hi}]"));
                }
            }
            let r1 = self.gamma1_plus.eval(t) + self.gamma1_minus.eval(t) - STEFAN_JUMP * self.phi10.deriv(t, 1);
            if r1.abs() > STEFAN_TOL {
                return v(format!("Stefan identity gamma1_plus + gamma1_minus = 2 phi10_t broken at t = {t} (residual {r1:e})"));
            }
            let r2 = self.gamma2_plus.eval(t) + self.gamma2_minus.eval(t) + STEFAN_JUMP * self.phi20.deriv(t, 1);
            if r2.abs() > STEFAN_TOL {
                return v(format!("Stefan identity gamma2_plus + gamma2_minus = -2 phi20_t broken at t = {t} (residual {r2:e})"));
            }
        }
        Ok(())
    }

    /// Parse and validate a scenario file's contents.
    pub fn from_scn_str(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, val) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected `key = value`, got `{line}`") })?;
            let key = k.trim().to_string();
            if map.insert(key.clone(), (i + 1, val.trim().to_string())).is_some() {
                return Err(Error::Parse { line: i + 1, msg: format!("duplicate key `{key}`") });
            }
        }
        if map.is_empty() {
            return Err(Error::Parse { line: 0, msg: "empty scenario".into() });
        }
        let mut take = |key: &str| map.remove(key);
        let num = |key: &str, e: Option<(usize, String)>, default: Option<f64>| -> Result<f64> {
            match e {
                Some((line, s)) => s
                    .parse::<f64>()
                    .map_err(|_| Error::Parse { line, msg: format!("`{key}` expects a number, got `{s}`") }),
                None => default.ok_or_else(|| Error::Parse { line: 0, msg: format!("missing key `{key}`") }),
            }
        };
        let poly = |key: &str, e: Option<(usize, String)>| -> Result<Poly> {
            let (line, s) = e.ok_or_else(|| Error::Parse { line: 0, msg: format!("missing key `{key}`") })?;
            let inner = s
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| Error::Parse { line, msg: format!("`{key}` expects [a0, a1, ...]") })?;
            let coeffs = inner
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse { line, msg: format!("`{key}` has a malformed coefficient") })?;
            Ok(Poly::new(coeffs))
        };
        let name = take("name").map(|(_, s)| s).unwrap_or_else(|| "scenario".into());
        let l1 = num("l1", take("l1"), None)?;
        let l2 = num("l2", take("l2"), None)?;
        let t_end = num("t_end", take("t_end"), None)?;
        let t_star = num("t_star", take("t_star"), None)?;
        let epsilon = num("epsilon", take("epsilon"), None)?;
        let kappa = num("kappa", take("kappa"), Some(1.0))?;
        let phi10 = poly("phi10.coeffs", take("phi10.coeffs"))?;
        let phi20 = poly("phi20.coeffs", take("phi20.coeffs"))?;
        let gamma1_plus = poly("gamma1_plus.coeffs", take("gamma1_plus.coeffs"))?;
        let gamma1_minus = poly("gamma1_minus.coeffs", take("gamma1_minus.coeffs"))?;
        let gamma2_plus = poly("gamma2_plus.coeffs", take("gamma2_plus.coeffs"))?;
        let gamma2_minus = poly("gamma2_minus.coeffs", take("gamma2_minus.coeffs"))?;
        let bc = match take("bc") {
            None => Boundary::Dirichlet(0.0, 0.0),
            Some((line, s)) => parse_bc(&s).ok_or_else(|| Error::Parse {
                line,
                msg: format!("`bc` expects dirichlet:a,b or neumann:a,b, got `{s}`"),
            })?,
        };
        if let Some((key, (line, _))) = map.into_iter().next() {
            return Err(Error::Parse { line, msg: format!("unknown key `{key}`") });
        }
        let sc = Scenario {
            name,
            l1,
            l2,
            t_end,
            t_star,
            epsilon,
            kappa,
            phi10,
            phi20,
            gamma1_plus,
            gamma1_minus,
            gamma2_plus,
            gamma2_minus,
            bc,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// Serialise back to the `.scn` format.
    pub fn to_scn_string(&self) -> String {
        let p = |c: &Poly| {
            let parts: Vec<String> = c.coeffs.iter().map(|v| format!("{v:?}")).collect();
            format!("[{}]", parts.join(", "))
        };
        let bc = match self.bc {
            Boundary::Dirichlet(a, b) => format!("dirichlet:{a:?},{b:?}"),
            Boundary::Neumann(a, b) => format!("neumann:{a:?},{b:?}"),
        };
        format!(
            "name = {}\nl1 = {:?}\nl2 = {:?}\nt_end = {:?}\nt_star = {:?}\nepsilon = {:?}\nkappa = {:?}\n\
             phi10.coeffs = {}\nphi20.coeffs = {}\ngamma1_plus.coeffs = {}\ngamma1_minus.coeffs = {}\n\
             gamma2_plus.coeffs = {}\ngamma2_minus.coeffs = {}\nbc = {}\n",
            self.name,
            self.l1,
            self.l2,
            self.t_end,
            self.t_star,
            self.epsilon,
            self.kappa,
            p(&self.phi10),
            p(&self.phi20),
            p(&self.gamma1_plus),
            p(&self.gamma1_minus),
            p(&self.gamma2_plus),
            p(&self.gamma2_minus),
            bc
        )
    }
}

fn parse_bc(s: &str) -> Option<Boundary> {
    let (kind, data) = s.split_once(':')?;
    let (a, b) = data.split_once(',')?;
    let a = a.trim().parse().ok()?;
    let b = b.trim().parse().ok()?;
    match kind.trim().to_ascii_lowercase().as_str() {
        "dirichlet" => Some(Boundary::Dirichlet(a, b)),
        "neumann" => Some(Boundary::Neumann(a, b)),
        _ => None,
    }
}

/// Read, parse and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse { line: 0, msg: format!("cannot read {}: {e}", path.display()) })?;
    Scenario::from_scn_str(&text)
}

/// Shift `(t* − t)`-based curve coefficients to ascending powers of `t`.
///
/// Given `f(t) = c0 + c1 s + c2 s² + c3 s³` with `s = t* − t`, return the
/// ascending coefficients in `t`.
pub fn coeffs_in_t(t_star: f64, c: [f64; 4]) -> Vec<f64> {
    // (t* − t)^k expanded with binomial coefficients.
    let mut out = [0.0; 4];
    let binom = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];
    for (k, &ck) in c.iter().enumerate() {
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            out[j] += ck * binom[k][j] * t_star.powi((k - j) as i32) * sign;
        }
    }
    out.to_vec()
}

/// Bundled symmetric fixture: fronts mirror each other about `x = 0`.
pub fn symmetric_fixture() -> Scenario {
    let ts = 0.5;
    let phi20 = coeffs_in_t(ts, [0.0, 0.3, 0.2, 0.0]);
    let phi10: Vec<f64> = phi20.iter().map(|c| -c).collect();
    let phi20p = Poly::new(phi20.clone());
    // outer slope constant, inner slope closes the Stefan balance
    let g2p = vec![-0.3, 0.0, 0.0, 0.0];
    let g2m = stefan_partner(&g2p, &phi20p, -STEFAN_JUMP);
    Scenario {
        name: "symmetric".into(),
        l1: -1.0,
        l2: 1.0,
        t_end: 1.0,
        t_star: ts,
        epsilon: 0.05,
        kappa: 1.0,
        phi10: Poly::new(phi10),
        phi20: phi20p,
        gamma1_plus: Poly::new(g2m.clone()),
        gamma1_minus: Poly::new(g2p.clone()),
        gamma2_plus: Poly::new(g2p),
        gamma2_minus: Poly::new(g2m),
        bc: Boundary::Dirichlet(0.0, 0.0),
    }
}

/// Bundled asymmetric fixture: unequal approach speeds, meeting at `x = 0.1`.
pub fn asymmetric_fixture() -> Scenario {
    let ts = 0.5;
    let phi10 = Poly::new(coeffs_in_t(ts, [0.1, -0.6, -0.2, 0.0]));
    let phi20 = Poly::new(coeffs_in_t(ts, [0.1, 0.3, 0.1, 0.0]));
    let g1m = vec![-0.25, 0.0, 0.0, 0.0];
    let g1p = stefan_partner(&g1m, &phi10, STEFAN_JUMP);
    let g2p = vec![-0.35, 0.0, 0.0, 0.0];
    let g2m = stefan_partner(&g2p, &phi20, -STEFAN_JUMP);
    Scenario {
        name: "asymmetric".into(),
        l1: -1.0,
        l2: 1.0,
        t_end: 1.0,
        t_star: ts,
        epsilon: 0.05,
        kappa: 1.0,
        phi10,
        phi20,
        gamma1_plus: Poly::new(g1p),
        gamma1_minus: Poly::new(g1m),
        gamma2_plus: Poly::new(g2p),
        gamma2_minus: Poly::new(g2m),
        bc: Boundary::Dirichlet(0.0, 0.0),
    }
}

/// Coefficients of `g` with `given + g = factor · front'`.
fn stefan_partner(given: &[f64], front: &Poly, factor: f64) -> Vec<f64> {
    let mut out = vec![0.0; 4];
    for (k, c) in front.coeffs.iter().enumerate().skip(1) {
        out[k - 1] += factor * k as f64 * c;
    }
    for (k, g) in given.iter().enumerate() {
        out[k] -= g;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_derivatives() {
        let p = Poly::new(vec![1.0, -2.0, 3.0, 0.5]);
        let t = 0.7;
        assert!((p.eval(t) - (1.0 - 2.0 * t + 3.0 * t * t + 0.5 * t * t * t)).abs() < 1e-15);
        assert!((p.deriv(t, 1) - (-2.0 + 6.0 * t + 1.5 * t * t)).abs() < 1e-15);
        assert!((p.deriv(t, 2) - (6.0 + 3.0 * t)).abs() < 1e-15);
        assert!((p.deriv(t, 3) - 3.0).abs() < 1e-15);
        assert_eq!(p.deriv(t, 4), 0.0);
    }

    #[test]
    fn shifted_coefficients() {
        let c = coeffs_in_t(0.5, [0.1, 0.3, 0.2, -0.4]);
        let p = Poly::new(c);
        for t in [0.0, 0.3, 0.9] {
            let s: f64 = 0.5 - t;
            let want = 0.1 + 0.3 * s + 0.2 * s * s - 0.4 * s * s * s;
            assert!((p.eval(t) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn fixtures_validate_and_round_trip() {
        for sc in [symmetric_fixture(), asymmetric_fixture()] {
            sc.validate().unwrap();
            let back = Scenario::from_scn_str(&sc.to_scn_string()).unwrap();
            assert_eq!(back, sc);
        }
    }
}
