//! Quadrature rules, interpolation and finite differences.

use crate::error::{Error, Result};
use crate::specfun::legendre_derivs;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes increasing.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp, _) = legendre_derivs(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp, _) = legendre_derivs(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    (
        x.iter().map(|&t| c + h * t).collect(),
        w.iter().map(|&v| h * v).collect(),
    )
}

/// Unit-step weights for integrating m intervals on equispaced nodes.
/// Newton–Cotes for m ≤ 4, Gregory end corrections otherwise.
pub fn gregory_weights(m: usize) -> Vec<f64> {
    match m {
        0 => vec![0.0],
        1 => vec![0.5, 0.5],
        2 => vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        3 => vec![3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        4 => [14.0, 64.0, 24.0, 64.0, 14.0].iter().map(|v| v / 45.0).collect(),
        _ => {
            let mut w = vec![1.0; m + 1];
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            for (k, &e) in ends.iter().enumerate() {
                w[k] = e;
                w[m - k] = e;
            }
            w
        }
    }
}

/// Correction to unit weights for a Gregory rule with m ≥ 5 intervals:
/// returns (index, weight - 1) pairs for the six end nodes.
pub fn gregory_end_corrections(m: usize) -> [(usize, f64); 6] {
    let e = [3.0 / 8.0 - 1.0, 7.0 / 6.0 - 1.0, 23.0 / 24.0 - 1.0];
    [
        (0, e[0]),
        (1, e[1]),
        (2, e[2]),
        (m - 2, e[2]),
        (m - 1, e[1]),
        (m, e[0]),
    ]
}

/// Chebyshev–Lobatto points on [a, b], increasing.
pub fn chebyshev_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|k| {
            let t = -(std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

/// Natural cubic spline on increasing knots; zero outside [x_0, x_last].
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Domain("spline needs >= 2 matching knots".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("spline knots must increase".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second-derivative system.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] || t.is_nan() {
            return 0.0;
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = 1.0 - a;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Several natural cubic splines sharing one set of knots.
#[derive(Debug, Clone)]
pub struct MultiSpline {
    x: Vec<f64>,
    splines: Vec<CubicSpline>,
}

impl MultiSpline {
    pub fn new(x: Vec<f64>, ys: Vec<Vec<f64>>) -> Result<Self> {
        let splines = ys
            .into_iter()
            .map(|y| CubicSpline::new(x.clone(), y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { x, splines })
    }

    pub fn len(&self) -> usize {
        self.splines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splines.is_empty()
    }

    pub fn get(&self, i: usize) -> &CubicSpline {
        &self.splines[i]
    }

    /// Values of every spline at t (zero outside the knot range).
    pub fn eval_all(&self, t: f64, out: &mut [f64]) {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] || t.is_nan() {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = 1.0 - a;
        let ca = (a * a * a - a) * h * h / 6.0;
        let cb = (b * b * b - b) * h * h / 6.0;
        for (o, s) in out.iter_mut().zip(&self.splines) {
            *o = a * s.y[i] + b * s.y[i + 1] + ca * s.m[i] + cb * s.m[i + 1];
        }
    }
}

/// Piecewise-linear interpolation of samples `y` at spacing `dt` from 0;
/// zero outside the sampled range.
pub fn lerp_series(y: &[f64], dt: f64, t: f64) -> f64 {
    if t < 0.0 || y.is_empty() {
        return 0.0;
    }
    let s = t / dt;
    let i = s.floor() as usize;
    if i + 1 >= y.len() {
        return if i + 1 == y.len() && (s - i as f64) < 1e-9 {
            y[i]
        } else {
            0.0
        };
    }
    let f = s - i as f64;
    y[i] * (1.0 - f) + y[i + 1] * f
}

/// Four-point Lagrange interpolation of uniformly sampled data.
pub fn cubic_series(y: &[f64], dt: f64, t: f64) -> f64 {
    let n = y.len();
    if n < 4 {
        return lerp_series(y, dt, t);
    }
    let s = t / dt;
    if s < 0.0 || s > (n - 1) as f64 {
        return 0.0;
    }
    let i = (s.floor() as usize).clamp(1, n - 3);
    let u = s - i as f64;
    let l0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    let l1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    let l2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    let l3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    l0 * y[i - 1] + l1 * y[i] + l2 * y[i + 1] + l3 * y[i + 2]
}

/// Derivative of order 1 or 2 of a uniformly sampled series: fourth-order
/// centered stencils inside, fourth-order one-sided at the two end points.
pub fn differentiate_series(y: &[f64], order: u8, dt: f64) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 6 {
        return Err(Error::Resolution(format!("series of length {n} too short to differentiate")));
    }
    let mut d = vec![0.0; n];
    match order {
        1 => {
            let c = 1.0 / (12.0 * dt);
            for i in 2..n - 2 {
                d[i] = c * (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]);
            }
            let f0 = [-25.0, 48.0, -36.0, 16.0, -3.0];
            let f1 = [-3.0, -10.0, 18.0, -6.0, 1.0];
            d[0] = c * dot(&f0, &y[0..5]);
            d[1] = c * dot(&f1, &y[0..5]);
            d[n - 1] = -c * dot_rev(&f0, &y[n - 5..]);
            d[n - 2] = -c * dot_rev(&f1, &y[n - 5..]);
        }
        2 => {
            let c = 1.0 / (12.0 * dt * dt);
            for i in 2..n - 2 {
                d[i] = c * (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]);
            }
            let f0 = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
            let f1 = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
            d[0] = c * dot(&f0, &y[0..6]);
            d[1] = c * dot(&f1, &y[0..6]);
            d[n - 1] = c * dot_rev(&f0, &y[n - 6..]);
            d[n - 2] = c * dot_rev(&f1, &y[n - 6..]);
        }
        _ => return Err(Error::Domain(format!("derivative order {order} not supported"))),
    }
    Ok(d)
}

fn dot(c: &[f64], y: &[f64]) -> f64 {
    c.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn dot_rev(c: &[f64], y: &[f64]) -> f64 {
    c.iter().zip(y.iter().rev()).map(|(a, b)| a * b).sum()
}

/// Number of steps of size `dt` covering `t`, requiring exact alignment.
pub fn steps(t: f64, dt: f64) -> Result<usize> {
    let s = t / dt;
    let k = s.round();
    if (s - k).abs() > 1e-6 || k < 0.0 {
        return Err(Error::Resolution(format!("time {t} is not a multiple of dt = {dt}")));
    }
    Ok(k as usize)
}
