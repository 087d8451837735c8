//! Clamped cubic spline on a nonuniform grid.

/// Derivative at `x[0]` of the cubic through the first four points.
fn end_slope(x: &[f64], y: &[f64]) -> f64 {
    let x0 = x[0];
    let mut d = 0.0;
    for i in 0..4 {
        // d/dx of the i-th Lagrange basis polynomial at x0
        let mut s = 0.0;
        for j in 0..4 {
            if j == i {
                continue;
            }
            let mut p = 1.0 / (x[i] - x[j]);
            for k in 0..4 {
                if k != i && k != j {
                    p *= (x0 - x[k]) / (x[i] - x[k]);
                }
            }
            s += p;
        }
        d += y[i] * s;
    }
    d
}

/// Solve a tridiagonal system in place (Thomas algorithm).
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut b0 = diag[0];
    c[0] = upper.first().copied().unwrap_or(0.0) / b0;
    rhs[0] /= b0;
    for i in 1..n {
        b0 = diag[i] - lower[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = upper[i] / b0;
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / b0;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    /// Build from strictly increasing `x` with at least four points.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 4 && y.len() == n);
        let d0 = end_slope(&x[..4], &y[..4]);
        let xr: Vec<f64> = x[n - 4..].iter().rev().copied().collect();
        let yr: Vec<f64> = y[n - 4..].iter().rev().copied().collect();
        let dn = end_slope(&xr, &yr);

        let mut lower = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n - 1];
        let mut rhs = vec![0.0; n];
        let h0 = x[1] - x[0];
        diag[0] = h0 / 3.0;
        upper[0] = h0 / 6.0;
        rhs[0] = (y[1] - y[0]) / h0 - d0;
        for i in 1..n - 1 {
            let hl = x[i] - x[i - 1];
            let hr = x[i + 1] - x[i];
            lower[i - 1] = hl / 6.0;
            diag[i] = (hl + hr) / 3.0;
            upper[i] = hr / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
        }
        let hn = x[n - 1] - x[n - 2];
        lower[n - 2] = hn / 6.0;
        diag[n - 1] = hn / 3.0;
        rhs[n - 1] = dn - (y[n - 1] - y[n - 2]) / hn;
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        Self { x, y, m: rhs }
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value and first derivative; linear extrapolation outside the grid.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        if t < self.x[0] {
            let (v, d) = self.eval(self.x[0]);
            return (v + d * (t - self.x[0]), d);
        }
        if t > self.x[n - 1] {
            let (v, d) = self.eval(self.x[n - 1]);
            return (v + d * (t - self.x[n - 1]), d);
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * mi + (3.0 * b * b - 1.0) * mj) * h / 6.0;
        (v, d)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }
}
