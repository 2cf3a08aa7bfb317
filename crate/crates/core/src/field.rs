//! Scalar fields in the unit ball: evaluation interface, sampling grids and
//! modal (harmonic × radial profile) representations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::harmonics::{harmonics_at, mode_count, mode_degree, AngularGrid, Dim};

/// A ball containing the support of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Support {
    pub fn unit() -> Self {
        Self { center: [0.0; 3], radius: 1.0 }
    }
}

pub trait Field: Send + Sync {
    fn dim(&self) -> Dim;
    fn value(&self, p: &[f64; 3]) -> f64;
    fn support(&self) -> Support {
        Support::unit()
    }
}

pub fn norm3(p: &[f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Radial midpoint grid times an angular grid. Node index is
/// `angular * n_radii + radial` (radius fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct BallGrid {
    pub dim: Dim,
    pub radius: f64,
    pub radii: Vec<f64>,
    pub angular: AngularGrid,
}

impl BallGrid {
    pub fn new(radius: f64, n_radii: usize, angular: AngularGrid) -> Result<Self> {
        if n_radii == 0 || radius <= 0.0 {
            return Err(Error::Resolution("ball grid needs radii".into()));
        }
        let h = radius / n_radii as f64;
        let radii = (0..n_radii).map(|i| (i as f64 + 0.5) * h).collect();
        Ok(Self { dim: angular.dim, radius, radii, angular })
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.angular.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_radii(&self) -> usize {
        self.radii.len()
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let nr = self.radii.len();
        let d = self.angular.nodes[idx / nr];
        let r = self.radii[idx % nr];
        [r * d[0], r * d[1], r * d[2]]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Volume quadrature weights (midpoint in r, angular rule on spheres).
    pub fn weights(&self) -> Vec<f64> {
        let nr = self.radii.len();
        let h = self.radius / nr as f64;
        let p = self.dim.get() as i32 - 1;
        (0..self.len())
            .map(|i| self.angular.weights[i / nr] * self.radii[i % nr].powi(p) * h)
            .collect()
    }

    pub fn sample(&self, f: &dyn Field) -> Vec<f64> {
        (0..self.len()).map(|i| f.value(&self.point(i))).collect()
    }
}

/// Per-mode radial profiles on a set of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialModes {
    pub dim: Dim,
    pub nmax: usize,
    pub radii: Vec<f64>,
    /// Radius where profiles are taken to vanish.
    pub outer: f64,
    /// `profiles[mode][radius]`.
    pub profiles: Vec<Vec<f64>>,
}

impl RadialModes {
    pub fn zeros(dim: Dim, nmax: usize, radii: Vec<f64>, outer: f64) -> Self {
        let nr = radii.len();
        Self { dim, nmax, radii, outer, profiles: vec![vec![0.0; nr]; mode_count(dim, nmax)] }
    }

    /// Projects ball samples onto harmonics radius by radius.
    pub fn from_samples(ball: &BallGrid, values: &[f64], nmax: usize) -> Result<Self> {
        ball.angular.check_resolution(nmax)?;
        if values.len() != ball.len() {
            return Err(Error::Domain("sample count does not match ball grid".into()));
        }
        let basis = ball.angular.basis(nmax);
        let nr = ball.n_radii();
        let mut out = Self::zeros(ball.dim, nmax, ball.radii.clone(), ball.radius);
        for (a, row) in basis.iter().enumerate() {
            let w = ball.angular.weights[a];
            for (mode, y) in row.iter().enumerate() {
                for i in 0..nr {
                    out.profiles[mode][i] += w * y * values[a * nr + i];
                }
            }
        }
        Ok(out)
    }

    pub fn to_samples(&self, ball: &BallGrid) -> Vec<f64> {
        let nr = ball.n_radii();
        let same = ball.radii == self.radii;
        let mut out = vec![0.0; ball.len()];
        for (a, d) in ball.angular.nodes.iter().enumerate() {
            let y = harmonics_at(self.dim, self.nmax, d);
            for i in 0..nr {
                let r = ball.radii[i];
                out[a * nr + i] = y
                    .iter()
                    .enumerate()
                    .map(|(m, yv)| yv * if same { self.profiles[m][i] } else { self.profile(m, r) })
                    .sum();
            }
        }
        out
    }

    /// Cubic (four-point) profile interpolation. Below the first radius the
    /// profile is continued with parity (-1)^n through r = 0; towards `outer`
    /// it is continued as an odd reflection about a zero at `outer`.
    pub fn profile(&self, mode: usize, r: f64) -> f64 {
        let p = &self.profiles[mode];
        let rr = &self.radii;
        let n = rr.len();
        if r >= self.outer || n == 0 {
            return 0.0;
        }
        if n == 1 {
            return p[0] * (1.0 - r / self.outer).max(0.0);
        }
        let sign = if mode_degree(self.dim, mode).0 % 2 == 0 { 1.0 } else { -1.0 };
        // Extended knots: two mirrored below 0, the radii, outer, one mirrored beyond.
        let knot = |j: isize| -> (f64, f64) {
            match j {
                -2 => (-rr[1], sign * p[1]),
                -1 => (-rr[0], sign * p[0]),
                j if (j as usize) < n => (rr[j as usize], p[j as usize]),
                j if j as usize == n => (self.outer, 0.0),
                _ => (2.0 * self.outer - rr[n - 1], -p[n - 1]),
            }
        };
        let i: isize = if r < rr[0] {
            -1
        } else if r >= rr[n - 1] {
            n as isize - 1
        } else {
            match rr.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
                Ok(i) => return p[i],
                Err(i) => i as isize - 1,
            }
        };
        let pts = [knot(i - 1), knot(i), knot(i + 1), knot(i + 2)];
        let mut s = 0.0;
        for (a, &(xa, ya)) in pts.iter().enumerate() {
            let mut l = 1.0;
            for (b, &(xb, _)) in pts.iter().enumerate() {
                if a != b {
                    l *= (r - xb) / (xa - xb);
                }
            }
            s += l * ya;
        }
        s
    }

    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        let r = norm3(x);
        if r >= self.outer {
            return 0.0;
        }
        let dir = if r > 0.0 { *x } else { [0.0, 0.0, 1.0] };
        let y = harmonics_at(self.dim, self.nmax, &dir);
        y.iter().enumerate().map(|(m, yv)| yv * self.profile(m, r)).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.profiles {
            for v in p.iter_mut() {
                *v *= c;
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self, c: f64) {
        for (p, q) in self.profiles.iter_mut().zip(&other.profiles) {
            for (a, b) in p.iter_mut().zip(q) {
                *a += c * b;
            }
        }
    }
}

impl Field for RadialModes {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn value(&self, p: &[f64; 3]) -> f64 {
        self.eval(p)
    }

    fn support(&self) -> Support {
        Support { center: [0.0; 3], radius: self.outer }
    }
}

/// Initial pressure a and initial velocity b sampled on a ball grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyField {
    pub ball: BallGrid,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CauchyField {
    pub fn from_modes(ball: &BallGrid, a: &RadialModes, b: &RadialModes) -> Self {
        Self { ball: ball.clone(), a: a.to_samples(ball), b: b.to_samples(ball) }
    }

    pub fn sample(ball: &BallGrid, a: &dyn Field, b: &dyn Field) -> Self {
        Self { ball: ball.clone(), a: ball.sample(a), b: ball.sample(b) }
    }
}

/// One component of Cauchy data for the forward solver.
#[derive(Clone)]
pub enum Source {
    Zero,
    Analytic(Arc<dyn Field>),
    Modal(RadialModes),
}

impl Source {
    pub fn is_zero(&self) -> bool {
        matches!(self, Source::Zero)
    }

    pub fn value(&self, p: &[f64; 3]) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Analytic(f) => f.value(p),
            Source::Modal(m) => m.eval(p),
        }
    }

    pub fn support(&self) -> Support {
        match self {
            Source::Zero => Support::unit(),
            Source::Analytic(f) => f.support(),
            Source::Modal(m) => m.support(),
        }
    }
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Zero => write!(f, "Zero"),
            Source::Analytic(_) => write!(f, "Analytic"),
            Source::Modal(m) => write!(f, "Modal(nmax={})", m.nmax),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CauchyData {
    pub dim: Dim,
    pub a: Source,
    pub b: Source,
}

impl CauchyData {
    pub fn from_field(cf: &CauchyField, nmax: usize) -> Result<Self> {
        Ok(Self {
            dim: cf.ball.dim,
            a: Source::Modal(RadialModes::from_samples(&cf.ball, &cf.a, nmax)?),
            b: Source::Modal(RadialModes::from_samples(&cf.ball, &cf.b, nmax)?),
        })
    }
}

/// Relative L² error ‖x - y‖ / ‖y‖ under quadrature weights.
pub fn relative_l2(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((a, b), c) in x.iter().zip(y).zip(w) {
        num += c * (a - b) * (a - b);
        den += c * b * b;
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Relative max-norm error max|x - y| / max|y|; absolute when y vanishes.
pub fn relative_linf(x: &[f64], y: &[f64]) -> f64 {
    let num = x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let den = y.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn weighted_norm(x: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(a, c)| c * a * a).sum::<f64>().sqrt()
}
