//! Volterra integral equations of the modal boundary problems.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{differentiate_series, gauss_legendre, gauss_legendre_on, gregory_weights};
use crate::specfun::{
    bessel_k_scaled_complex, c2d, k_asymptotic_coeffs, legendre_derivs,
};

/// Equispaced grid t_k = k dt, k = 0..n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n: usize) -> Self {
        Self { dt, n }
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Second-kind equation
/// ω(t) + ∫_{max(0,t-W)}^t K(t-τ) ω(τ) dτ + c ω(t-W) = g(t),
/// with W = ∞ when no window is given.
pub struct SmoothVolterra {
    grid: TimeGrid,
    lags: Vec<f64>,
    window: Option<(usize, f64)>,
    start: [[f64; 4]; 3],
}

impl SmoothVolterra {
    /// `window` is (W / dt, c).
    pub fn new(kernel: impl Fn(f64) -> f64, grid: TimeGrid, window: Option<(usize, f64)>) -> Result<Self> {
        if grid.n < 5 {
            return Err(Error::Resolution("volterra grid needs at least 5 nodes".into()));
        }
        if let Some((m, _)) = window {
            if m < 4 {
                return Err(Error::Resolution("delay window shorter than 4 steps".into()));
            }
        }
        let max_lag = window.map(|(m, _)| m.min(grid.n - 1)).unwrap_or(grid.n - 1);
        let lags: Vec<f64> = (0..=max_lag).map(|l| kernel(grid.t(l))).collect();
        // Cubic Lagrange block start: β[j-1][k] = ∫_0^{t_j} K(t_j-τ) ℓ_k(τ) dτ.
        let mut start = [[0.0; 4]; 3];
        let (x, w) = gauss_legendre(12);
        for j in 1..=3usize {
            let tj = grid.t(j);
            for (xi, wi) in x.iter().zip(&w) {
                let tau = 0.5 * tj * (xi + 1.0);
                let kv = kernel(tj - tau) * 0.5 * tj * wi;
                let u = tau / grid.dt;
                let l = lagrange4(u);
                for k in 0..4 {
                    start[j - 1][k] += kv * l[k];
                }
            }
        }
        Ok(Self { grid, lags, window, start })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn solve(&self, g: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n;
        if g.len() < n {
            return Err(Error::Resolution(format!("rhs has {} samples, grid needs {n}", g.len())));
        }
        let dt = self.grid.dt;
        let mut w = vec![0.0; n];
        w[0] = g[0];
        // Joint solve for nodes 1..3 from the cubic start.
        let mut a = DMatrix::<f64>::zeros(3, 3);
        let mut b = nalgebra::DVector::<f64>::zeros(3);
        for j in 1..=3 {
            for k in 1..=3 {
                a[(j - 1, k - 1)] = self.start[j - 1][k] + if j == k { 1.0 } else { 0.0 };
            }
            b[j - 1] = g[j] - self.start[j - 1][0] * w[0];
        }
        let sol = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Conditioning("singular start block".into()))?;
        w[1..4].copy_from_slice(sol.as_slice());
        let (mwin, c) = self.window.unwrap_or((usize::MAX, 0.0));
        for j in 4..n {
            let k0 = j.saturating_sub(mwin);
            let m = j - k0;
            let mut s = 0.0;
            if m <= 4 {
                let gw = gregory_weights(m);
                for (i, wi) in gw.iter().enumerate().take(m) {
                    s += wi * self.lags[j - (k0 + i)] * w[k0 + i];
                }
            } else {
                for k in k0..j {
                    s += self.lags[j - k] * w[k];
                }
                let e = [3.0 / 8.0 - 1.0, 7.0 / 6.0 - 1.0, 23.0 / 24.0 - 1.0];
                for (i, ei) in e.iter().enumerate() {
                    s += ei * self.lags[j - (k0 + i)] * w[k0 + i];
                    if i > 0 {
                        s += ei * self.lags[i] * w[j - i];
                    }
                }
            }
            let diag = if m <= 4 { gregory_weights(m)[m] } else { 3.0 / 8.0 };
            let mut rhs = g[j] - dt * s;
            if j >= mwin {
                rhs -= c * w[j - mwin];
            }
            w[j] = rhs / (1.0 + dt * diag * self.lags[0]);
        }
        Ok(w)
    }
}

fn lagrange4(u: f64) -> [f64; 4] {
    [
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ]
}

/// One-shot solve of ω + ∫_0^t K(t-τ)ω = g.
pub fn solve_smooth_volterra(kernel: impl Fn(f64) -> f64, g: &[f64], grid: TimeGrid) -> Result<Vec<f64>> {
    SmoothVolterra::new(kernel, grid, None)?.solve(g)
}

/// Exterior 3D kernel P_n'(1+s).
pub fn exterior_solver_3d(n: usize, grid: TimeGrid) -> Result<SmoothVolterra> {
    SmoothVolterra::new(move |s| legendre_derivs(n, 1.0 + s).1, grid, None)
}

/// Interior delay equation
/// ω(t) - (-1)^n ω(t-2) - ∫_{t-2}^t ω(τ) P_n'(τ+1-t) dτ = g(t).
pub fn solve_delay_volterra(n: usize, g: &[f64], grid: TimeGrid) -> Result<Vec<f64>> {
    delay_solver_3d(n, grid)?.solve(g)
}

pub fn delay_solver_3d(n: usize, grid: TimeGrid) -> Result<SmoothVolterra> {
    let m = crate::quadrature::steps(2.0, grid.dt)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    SmoothVolterra::new(move |s| -legendre_derivs(n, 1.0 - s).1, grid, Some((m, -sign)))
}

/// Closed-form resolvent of the exterior 3D kernel:
/// H(t) = Σ_i w_i exp(k_i t) with ω = g - H * g.
#[derive(Debug, Clone)]
pub struct ResolventKernel3D {
    pub n: usize,
    pub roots: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl ResolventKernel3D {
    pub fn eval(&self, t: f64) -> f64 {
        self.roots
            .iter()
            .zip(&self.weights)
            .map(|(k, w)| (w * (k * t).exp()).re)
            .sum()
    }

    /// Growth bound σ = max Re k_i.
    pub fn sigma(&self) -> f64 {
        self.roots.iter().map(|k| k.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// D(k) = k^n + Σ_{j=1}^n j! c_j k^{n-j} with c_j the Taylor coefficients of
/// P_n at 1, and D'(k). D is the reverse Bessel polynomial, evaluated by
/// θ_n = (2n-1) θ_{n-1} + k² θ_{n-2}.
fn reverse_bessel(n: usize, k: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    if n == 0 {
        return (one, Complex64::new(0.0, 0.0));
    }
    let (mut p0, mut d0) = (one, Complex64::new(0.0, 0.0));
    let (mut p1, mut d1) = (k + 1.0, one);
    for m in 2..=n {
        let c = (2 * m - 1) as f64;
        let p2 = p1 * c + k * k * p0;
        let d2 = d1 * c + k * p0 * 2.0 + k * k * d0;
        p0 = p1;
        d0 = d1;
        p1 = p2;
        d1 = d2;
    }
    (p1, d1)
}

/// Relative root accuracy below which the closed-form resolvent is refused.
pub const ROOT_TOLERANCE: f64 = 1e-6;

/// Roots of D by simultaneous Aberth iteration, then residue weights of
/// −k^n e^{kt} / D(k).
pub fn build_resolvent3d(n: usize) -> Result<ResolventKernel3D> {
    if n > 64 {
        return Err(Error::Domain(format!("resolvent order {n} exceeds 64")));
    }
    if n == 0 {
        return Ok(ResolventKernel3D { n, roots: vec![], weights: vec![] });
    }
    // |product of roots| = (2n)! / (n! 2^n)
    let log_prod: f64 = (n + 1..=2 * n).map(|j| (j as f64).ln()).sum::<f64>() - n as f64 * 2f64.ln();
    let radius = (log_prod / n as f64).exp();
    let mut roots: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    for _ in 0..600 {
        let mut worst = 0.0f64;
        for i in 0..n {
            let z = roots[i];
            let (p, dp) = reverse_bessel(n, z);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulse: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z - roots[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulse);
            roots[i] = z - step;
            worst = worst.max(step.norm() / z.norm().max(1.0));
        }
        if worst < 1e-13 {
            break;
        }
    }
    // Newton distance to the nearest root, relative: rounding in D limits it
    let resolved = roots
        .iter()
        .map(|&z| {
            let (p, dp) = reverse_bessel(n, z);
            let r = (p / dp).norm() / z.norm().max(1.0);
            if r.is_finite() {
                r
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0f64, f64::max);
    if resolved >= ROOT_TOLERANCE {
        return Err(Error::Conditioning(format!(
            "resolvent roots for n = {n} resolved only to {resolved:.1e}"
        )));
    }
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for i in 0..n {
        for j in i + 1..n {
            if (roots[i] - roots[j]).norm() < 1e-8 * scale {
                return Err(Error::Singular(format!("repeated resolvent root for n = {n}")));
            }
        }
    }
    // exact conjugate pairs, so that H is real by construction
    roots.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()).then(a.re.total_cmp(&b.re)));
    let mut paired = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = roots[i];
        if z.im.abs() < 1e-9 * scale {
            paired.push(Complex64::new(z.re, 0.0));
            continue;
        }
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (roots[a] - z.conj()).norm().total_cmp(&(roots[b] - z.conj()).norm()))
            .ok_or_else(|| Error::Conditioning(format!("unpaired resolvent root for n = {n}")))?;
        used[j] = true;
        let mid = 0.5 * (z + roots[j].conj());
        paired.push(mid);
        paired.push(mid.conj());
    }
    let roots = paired;
    let weights = roots
        .iter()
        .map(|&z| {
            let (_, dp) = reverse_bessel(n, z);
            -z.powu(n as u32) / dp
        })
        .collect();
    Ok(ResolventKernel3D { n, roots, weights })
}

/// ω = g - H * g with fourth-order product quadrature.
pub fn apply_resolvent3d(res: &ResolventKernel3D, g: &[f64], grid: TimeGrid) -> Vec<f64> {
    let n = grid.n.min(g.len());
    if res.roots.is_empty() {
        return g[..n].to_vec();
    }
    let h: Vec<f64> = (0..n).map(|l| res.eval(grid.t(l))).collect();
    let conv = convolve_gregory(|s| res.eval(s), &h, g, grid);
    g[..n].iter().zip(conv).map(|(a, b)| a - b).collect()
}

/// (K * g)(t_j) = ∫_0^{t_j} K(t_j - τ) g(τ) dτ on the grid; `lags[l] = K(l dt)`.
pub fn convolve_gregory(kernel: impl Fn(f64) -> f64, lags: &[f64], g: &[f64], grid: TimeGrid) -> Vec<f64> {
    let n = grid.n.min(g.len());
    let dt = grid.dt;
    let mut out = vec![0.0; n];
    let (x, w) = gauss_legendre(12);
    for j in 1..n.min(4) {
        let tj = grid.t(j);
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let tau = 0.5 * tj * (xi + 1.0);
            let l = lagrange4(tau / dt);
            let gv: f64 = (0..4).map(|k| l[k] * g.get(k).copied().unwrap_or(0.0)).sum();
            s += kernel(tj - tau) * gv * 0.5 * tj * wi;
        }
        out[j] = s;
    }
    for j in 4..n {
        let gw = gregory_weights(j);
        let s: f64 = (0..=j).map(|k| gw[k] * lags[j - k] * g[k]).sum();
        out[j] = dt * s;
    }
    out
}

/// Which weakly singular 2D kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbelKind {
    /// ∫_0^t ω(τ) c_n T_n(t+1-τ) / sqrt((t+1-τ)²-1) dτ
    Exterior,
    /// ∫_{t-2}^t ω(τ) c_n T_n(τ+1-t) / sqrt(1-(τ+1-t)²) dτ
    Interior,
}

/// Hat-function product-integration weights of the 2D kernels, per lag cell.
#[derive(Debug, Clone)]
pub struct AbelWeights {
    pub kind: AbelKind,
    pub n: usize,
    pub dt: f64,
    /// Weight of the cell's near node (lag m dt).
    pub a: Vec<f64>,
    /// Weight of the cell's far node (lag (m+1) dt).
    pub b: Vec<f64>,
}

const ABEL_GL: usize = 8;

fn theta_of_lag(kind: AbelKind, s: f64) -> f64 {
    match kind {
        AbelKind::Exterior => (s + (s * (2.0 + s)).sqrt()).ln_1p(),
        AbelKind::Interior => 2.0 * (0.5 * s).sqrt().min(1.0).asin(),
    }
}

fn lag_of_theta(kind: AbelKind, th: f64) -> f64 {
    match kind {
        AbelKind::Exterior => 2.0 * (0.5 * th).sinh().powi(2),
        AbelKind::Interior => 2.0 * (0.5 * th).sin().powi(2),
    }
}

/// Cell weights ∫ f(θ) hat dθ over lag cells 0..cells, where `density(θ)`
/// is the kernel times ds/dθ.
fn cell_weights(kind: AbelKind, dt: f64, cells: usize, density: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(ABEL_GL);
    let mut a = vec![0.0; cells];
    let mut b = vec![0.0; cells];
    for m in 0..cells {
        let t0 = theta_of_lag(kind, m as f64 * dt);
        let t1 = theta_of_lag(kind, (m + 1) as f64 * dt);
        let h = 0.5 * (t1 - t0);
        for (xi, wi) in x.iter().zip(&w) {
            let th = t0 + h * (xi + 1.0);
            let lam = ((lag_of_theta(kind, th) - m as f64 * dt) / dt).clamp(0.0, 1.0);
            let f = density(th) * h * wi;
            a[m] += f * (1.0 - lam);
            b[m] += f * lam;
        }
    }
    (a, b)
}

impl AbelWeights {
    pub fn new(kind: AbelKind, n: usize, dt: f64, cells: usize) -> Self {
        let c = c2d(n);
        let nf = n as f64;
        let (a, b) = match kind {
            AbelKind::Exterior => cell_weights(kind, dt, cells, |th| c * (nf * th).cosh()),
            AbelKind::Interior => cell_weights(kind, dt, cells, |th| c * (nf * th).cos()),
        };
        Self { kind, n, dt, a, b }
    }

    /// Applies the kernel to piecewise-linear ω: returns ∫ ω(τ) G(t_j - τ) dτ.
    pub fn apply(&self, omega: &[f64]) -> Vec<f64> {
        let cells = self.a.len();
        (0..omega.len())
            .map(|j| {
                let mut s = 0.0;
                for m in 0..cells.min(j) {
                    s += self.a[m] * omega[j - m] + self.b[m] * omega[j - m - 1];
                }
                s
            })
            .collect()
    }
}

/// First-kind Abel equation ∫ ω(τ) G(t-τ) dτ = g(t) solved by marching with
/// ω(0) = ω(dt). `window` is 2 for the interior kernel.
pub fn solve_abel_volterra(n: usize, g: &[f64], grid: TimeGrid, kind: AbelKind) -> Result<Vec<f64>> {
    let cells = match kind {
        AbelKind::Exterior => grid.n.saturating_sub(1),
        AbelKind::Interior => crate::quadrature::steps(2.0, grid.dt)?,
    };
    let w = AbelWeights::new(kind, n, grid.dt, cells);
    solve_abel_with(&w, g, grid.n)
}

pub fn solve_abel_with(w: &AbelWeights, g: &[f64], n_steps: usize) -> Result<Vec<f64>> {
    let n = n_steps.min(g.len());
    if n < 2 {
        return Err(Error::Resolution("abel grid needs at least 2 nodes".into()));
    }
    let a0 = w.a[0];
    if a0.abs() < 1e-14 || !(a0 + w.b[0]).is_normal() {
        return Err(Error::Conditioning(format!("vanishing abel diagonal weight {a0:e}")));
    }
    let cells = w.a.len();
    let mut om = vec![0.0; n];
    om[1] = g[1] / (a0 + w.b[0]);
    om[0] = om[1];
    for j in 2..n {
        let mut s = w.b[0] * om[j - 1];
        for m in 1..cells.min(j) {
            s += w.a[m] * om[j - m] + w.b[m] * om[j - m - 1];
        }
        om[j] = (g[j] - s) / a0;
    }
    Ok(om)
}

/// Undifferentiated 2D forward map F(t) = ∫ ω(τ) Ψ_n(..) dτ, i.e. the
/// boundary value of the modal field with density ω.
pub fn abel_forward(n: usize, omega: &[f64], grid: TimeGrid, kind: AbelKind) -> Result<Vec<f64>> {
    let nf = n as f64;
    let cells = match kind {
        AbelKind::Exterior => grid.n.saturating_sub(1),
        AbelKind::Interior => crate::quadrature::steps(2.0, grid.dt)?,
    };
    let (a, b) = match kind {
        AbelKind::Exterior => cell_weights(kind, grid.dt, cells, |th| {
            let psi = if n == 0 { th } else { (nf * th).sinh() };
            psi * th.sinh()
        }),
        AbelKind::Interior => cell_weights(kind, grid.dt, cells, |th| {
            let psi = if n == 0 { th } else { (nf * th).sin() };
            psi * th.sin()
        }),
    };
    let w = AbelWeights { kind, n, dt: grid.dt, a, b };
    let mut out = w.apply(&omega[..grid.n.min(omega.len())]);
    if kind == AbelKind::Interior && n == 0 {
        // Beyond the window the n = 0 kernel is the constant π.
        let mut cum = 0.0;
        for j in 0..out.len() {
            if j > cells {
                let k = j - cells;
                cum += 0.5 * grid.dt * (omega[k] + omega[k - 1]);
                out[j] += std::f64::consts::PI * cum;
            }
        }
    }
    Ok(out)
}

/// Truncated Bromwich inversion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BromwichParams {
    pub sigma: f64,
    pub height: f64,
    pub count: usize,
    pub asymptotic_terms: usize,
}

impl Default for BromwichParams {
    fn default() -> Self {
        Self { sigma: 1.0, height: 2000.0, count: 20000, asymptotic_terms: 3 }
    }
}

/// Twice-integrated resolvent of the exterior 2D kernel: Φ with
/// L[Φ](k) = 1 / (k² c_n e^k K_n(k)), so that ω = (Φ * g)''.
#[derive(Debug, Clone)]
pub struct Resolvent2D {
    pub n: usize,
    pub grid: TimeGrid,
    pub kernel: Vec<f64>,
    pub error_estimate: f64,
}

impl Resolvent2D {
    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n.min(g.len());
        let dt = self.grid.dt;
        let conv: Vec<f64> = (0..n)
            .map(|j| {
                if j == 0 {
                    return 0.0;
                }
                let s: f64 = (1..j).map(|k| self.kernel[j - k] * g[k]).sum();
                dt * (s + 0.5 * self.kernel[j] * g[0])
            })
            .collect();
        differentiate_series(&conv, 2, dt)
    }
}

pub fn build_resolvent2d(n: usize, grid: TimeGrid, params: BromwichParams) -> Result<Resolvent2D> {
    if params.count < 2 || params.height <= 0.0 || params.sigma <= 0.0 {
        return Err(Error::Domain("invalid Bromwich parameters".into()));
    }
    let c = c2d(n);
    let pref = (2.0 / std::f64::consts::PI).sqrt() / c;
    // Reciprocal of the asymptotic series of e^k K_n(k) sqrt(2k/π).
    let jt = params.asymptotic_terms;
    let a = k_asymptotic_coeffs(n, jt.max(1));
    let mut bcoef = vec![0.0; jt];
    for j in 0..jt {
        let mut s = if j == 0 { 1.0 } else { 0.0 };
        for i in 1..=j {
            s -= a[i] * bcoef[j - i];
        }
        bcoef[j] = s;
    }
    let remainder = |k: Complex64| -> Complex64 {
        let full = Complex64::new(1.0, 0.0) / (k * k * c * bessel_k_scaled_complex(n, k));
        let mut asym = Complex64::new(0.0, 0.0);
        for (j, bj) in bcoef.iter().enumerate() {
            asym += k.powf(-1.5 - j as f64) * (bj * pref);
        }
        full - asym
    };
    let h = params.height / params.count as f64;
    let ys: Vec<f64> = (0..=params.count).map(|i| i as f64 * h).collect();
    let rv: Vec<Complex64> = ys.iter().map(|&y| remainder(Complex64::new(params.sigma, y))).collect();
    let mut kernel = vec![0.0; grid.n];
    for (j, kv) in kernel.iter_mut().enumerate() {
        let t = grid.t(j);
        if j == 0 {
            continue;
        }
        let mut asym = 0.0;
        let mut gamma = std::f64::consts::PI.sqrt() / 2.0; // Γ(3/2)
        for (i, bj) in bcoef.iter().enumerate() {
            if i > 0 {
                gamma *= i as f64 + 0.5;
            }
            asym += pref * bj * t.powf(0.5 + i as f64) / gamma;
        }
        let rot = Complex64::new((h * t).cos(), (h * t).sin());
        let mut e = Complex64::new(1.0, 0.0);
        let mut s = 0.0;
        for (i, r) in rv.iter().enumerate() {
            let wgt = if i == 0 || i == params.count { 0.5 } else { 1.0 };
            s += wgt * (r * e).re;
            e *= rot;
        }
        *kv = asym + (params.sigma * t).exp() / std::f64::consts::PI * h * s;
    }
    // Tail of the truncated line integral, assuming algebraic decay.
    let q = 1.5 + jt as f64;
    let t_max = grid.t(grid.n - 1);
    let tail = rv[params.count].norm() * params.height / (q - 1.0);
    let error_estimate = (params.sigma * t_max).exp() / std::f64::consts::PI * tail;
    Ok(Resolvent2D { n, grid, kernel, error_estimate })
}

/// Exact Gauss–Legendre composite rule over [a, b] with `cells` cells.
pub fn composite_gl(a: f64, b: f64, cells: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(cells * order);
    let mut ws = Vec::with_capacity(cells * order);
    let h = (b - a) / cells as f64;
    for c in 0..cells {
        let (x, w) = gauss_legendre_on(order, a + c as f64 * h, a + (c + 1) as f64 * h);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}
