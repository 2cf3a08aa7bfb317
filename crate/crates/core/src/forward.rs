//! Free-space wave propagation of Cauchy data: spherical and disc means,
//! point evaluation and boundary observation synthesis.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{CauchyData, Field, RadialModes, Source, Support};
use crate::harmonics::{mode_count, mode_degree, synthesize, AngularGrid, BoundaryObservation, Dim, ModalCoefficients};
use crate::quadrature::{gauss_legendre, gauss_legendre_on};
use crate::specfun::legendre_all;

/// Quadrature settings for forward evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    /// Polar (3D) or radial/angular (2D) Gauss–Legendre order.
    pub quad_order: usize,
    /// Time step of the centered differences in t.
    pub fd_step: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self { quad_order: 24, fd_step: 5e-4 }
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Orthonormal frame with third axis e.
fn frame(e: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let t = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = t[0] * e[0] + t[1] * e[1] + t[2] * e[2];
    let mut u = [t[0] - d * e[0], t[1] - d * e[1], t[2] - d * e[2]];
    let nu = norm(&u);
    u = [u[0] / nu, u[1] / nu, u[2] / nu];
    let v = [e[1] * u[2] - e[2] * u[1], e[2] * u[0] - e[0] * u[2], e[0] * u[1] - e[1] * u[0]];
    (u, v)
}

/// Mean of a 3D field over the sphere of radius s about x, restricted to
/// the spherical cap that meets the field's support ball.
pub fn spherical_mean(f: &dyn Field, x: &[f64; 3], s: f64, quad_order: usize) -> f64 {
    mean_with_support(&|p| f.value(p), f.support(), x, s, quad_order)
}

fn mean_with_support(f: &dyn Fn(&[f64; 3]) -> f64, sup: Support, x: &[f64; 3], s: f64, q: usize) -> f64 {
    if s == 0.0 {
        return f(x);
    }
    let dv = sub(&sup.center, x);
    let d = norm(&dv);
    let rs = sup.radius;
    if s > d + rs || s < d - rs {
        return 0.0;
    }
    let (e, mu0) = if d < 1e-14 {
        ([0.0, 0.0, 1.0], -1.0)
    } else {
        let e = [dv[0] / d, dv[1] / d, dv[2] / d];
        (e, ((s * s + d * d - rs * rs) / (2.0 * s * d)).clamp(-1.0, 1.0))
    };
    let (u, v) = frame(e);
    let (mu, wmu) = gauss_legendre_on(q, mu0, 1.0);
    let nphi = 2 * q;
    let ring_dirs: Vec<(f64, f64)> = (0..nphi)
        .map(|k| {
            let ph = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
            (ph.cos(), ph.sin())
        })
        .collect();
    let mut acc = 0.0;
    for (m, wm) in mu.iter().zip(&wmu) {
        let st = (1.0 - m * m).max(0.0).sqrt();
        let mut ring = 0.0;
        for &(pc, ps) in &ring_dirs {
            let (c, sn) = (st * pc, st * ps);
            let p = [
                x[0] + s * (m * e[0] + c * u[0] + sn * v[0]),
                x[1] + s * (m * e[1] + c * u[1] + sn * v[1]),
                x[2] + s * (m * e[2] + c * u[2] + sn * v[2]),
            ];
            ring += f(&p);
        }
        acc += wm * ring * 2.0 * PI / nphi as f64;
    }
    acc / (4.0 * PI)
}

/// (1/2π) ∫_{|y-x|<s} f(y) / sqrt(s² - |y-x|²) dy for a 2D field, in the
/// form (s/2π) ∫_0^{π/2} sin α ∫_0^{2π} f(x + s sin α e_ψ) dψ dα.
pub fn disc_potential(f: &dyn Field, x: &[f64; 3], s: f64, quad_order: usize) -> f64 {
    disc_with_support(&|p| f.value(p), f.support(), x, s, quad_order)
}

fn disc_with_support(f: &dyn Fn(&[f64; 3]) -> f64, sup: Support, x: &[f64; 3], s: f64, q: usize) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let dv = sub(&sup.center, x);
    let d = (dv[0] * dv[0] + dv[1] * dv[1]).sqrt();
    let rs = sup.radius;
    if d - rs >= s {
        return 0.0;
    }
    let a0 = if d > rs { ((d - rs) / s).min(1.0).asin() } else { 0.0 };
    let a1 = ((d + rs) / s).min(1.0).asin();
    let ang = if d > 1e-14 { dv[1].atan2(dv[0]) } else { 0.0 };
    let (al, wal) = gauss_legendre_on(q, a0, a1);
    let (base, wbase) = gauss_legendre(q);
    let mut acc = 0.0;
    for (a, wa) in al.iter().zip(&wal) {
        let rho = s * a.sin();
        let psi_c = if d < 1e-14 || rho + d <= rs {
            PI
        } else {
            ((rho * rho + d * d - rs * rs) / (2.0 * rho * d)).clamp(-1.0, 1.0).acos()
        };
        if psi_c <= 0.0 {
            continue;
        }
        let mut ring = 0.0;
        for (p, wp) in base.iter().zip(&wbase) {
            let th = ang + psi_c * p;
            ring += psi_c * wp * f(&[x[0] + rho * th.cos(), x[1] + rho * th.sin(), 0.0]);
        }
        acc += wa * a.sin() * ring;
    }
    s * acc / (2.0 * PI)
}

/// G(t) = t M_t[f] in 3D or the disc potential in 2D.
fn potential(dim: Dim, src: &Source, x: &[f64; 3], t: f64, q: usize) -> f64 {
    if src.is_zero() || t < 0.0 {
        return 0.0;
    }
    let f = |p: &[f64; 3]| src.value(p);
    match dim {
        Dim::Three => t * mean_with_support(&f, src.support(), x, t, q),
        Dim::Two => disc_with_support(&f, src.support(), x, t, q),
    }
}

/// First and second t-derivatives of g at t ≥ 0 by centered differences,
/// one-sided near t = 0.
fn derivs(g: &dyn Fn(f64) -> f64, t: f64, h: f64) -> (f64, f64, f64) {
    if t >= h {
        let (gm, g0, gp) = (g(t - h), g(t), g(t + h));
        (g0, (gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h))
    } else {
        let (g0, g1, g2, g3) = (g(t), g(t + h), g(t + 2.0 * h), g(t + 3.0 * h));
        (g0, (-3.0 * g0 + 4.0 * g1 - g2) / (2.0 * h), (2.0 * g0 - 5.0 * g1 + 4.0 * g2 - g3) / (h * h))
    }
}

/// (u, u_t) at a point for Cauchy data (a, b).
pub fn eval_solution(data: &CauchyData, x: &[f64; 3], t: f64, opts: &ForwardOptions) -> Result<(f64, f64)> {
    if t < 0.0 {
        return Err(Error::Domain(format!("negative time {t}")));
    }
    if t == 0.0 {
        return Ok((data.a.value(x), data.b.value(x)));
    }
    let q = opts.quad_order;
    let h = opts.fd_step;
    let ga = |s: f64| potential(data.dim, &data.a, x, s, q);
    let gb = |s: f64| potential(data.dim, &data.b, x, s, q);
    let (_, da1, da2) = if data.a.is_zero() { (0.0, 0.0, 0.0) } else { derivs(&ga, t, h) };
    let (b0, db1, _) = if data.b.is_zero() { (0.0, 0.0, 0.0) } else { derivs(&gb, t, h) };
    Ok((da1 + b0, da2 + db1))
}

pub fn eval_solution3d(data: &CauchyData, x: &[f64; 3], t: f64, opts: &ForwardOptions) -> Result<(f64, f64)> {
    if data.dim != Dim::Three {
        return Err(Error::Domain("eval_solution3d needs 3D data".into()));
    }
    eval_solution(data, x, t, opts)
}

pub fn eval_solution2d(data: &CauchyData, x: &[f64; 3], t: f64, opts: &ForwardOptions) -> Result<(f64, f64)> {
    if data.dim != Dim::Two {
        return Err(Error::Domain("eval_solution2d needs 2D data".into()));
    }
    eval_solution(data, x, t, opts)
}

/// Pressure on the grid nodes at t_k = k dt, k = 0..=t_final/dt.
pub fn synthesize_observation(
    data: &CauchyData,
    grid: &AngularGrid,
    t_final: f64,
    dt: f64,
    opts: &ForwardOptions,
) -> Result<BoundaryObservation> {
    if grid.dim != data.dim {
        return Err(Error::Domain("grid and data dimensions differ".into()));
    }
    if !(dt > 0.0) || !(t_final > 0.0) {
        return Err(Error::Domain("dt and t_final must be positive".into()));
    }
    let n_times = (t_final / dt + 1e-9).floor() as usize + 1;
    let modal = |s: &Source| matches!(s, Source::Zero | Source::Modal(_));
    if modal(&data.a) && modal(&data.b) {
        let coeffs = modal_boundary_series(data, dt, n_times, opts)?;
        return Ok(synthesize(&coeffs, grid));
    }
    let q = opts.quad_order;
    let h = opts.fd_step;
    let rows: Vec<Vec<f64>> = grid
        .nodes
        .par_iter()
        .map(|x| {
            (0..n_times)
                .map(|k| {
                    let t = k as f64 * dt;
                    if t == 0.0 {
                        return data.a.value(x);
                    }
                    let mut u = 0.0;
                    if !data.a.is_zero() {
                        let ga = |s: f64| potential(data.dim, &data.a, x, s, q);
                        u += if t >= h {
                            (ga(t + h) - ga(t - h)) / (2.0 * h)
                        } else {
                            derivs(&ga, t, h).1
                        };
                    }
                    if !data.b.is_zero() {
                        u += potential(data.dim, &data.b, x, t, q);
                    }
                    u
                })
                .collect()
        })
        .collect();
    let mut obs = BoundaryObservation::zeros(grid.clone(), dt, n_times);
    for (node, row) in rows.into_iter().enumerate() {
        obs.series_mut(node).copy_from_slice(&row);
    }
    Ok(obs)
}

/// ½ ∫ p(ρ(μ)) P_n(cos γ(μ)) dμ over the part of the sphere |y - x| = s,
/// |x| = r, where ρ = |y| lies in [lo, hi], for all degrees ≤ nmax at once.
/// `profile(ρ, out)` fills one value per requested mode; `degrees[j]` is the
/// degree of mode j. Returns one mean per mode.
pub fn modal_sphere_means(
    profile: &dyn Fn(f64, &mut [f64]),
    degrees: &[usize],
    r: f64,
    s: f64,
    lo: f64,
    hi: f64,
    nodes: &(Vec<f64>, Vec<f64>),
) -> Vec<f64> {
    let nm = degrees.len();
    let nmax = degrees.iter().copied().max().unwrap_or(0);
    let mut out = vec![0.0; nm];
    if s == 0.0 {
        // Degenerate sphere: value at x itself along the pole direction.
        let mut vals = vec![0.0; nm];
        if r >= lo && r <= hi {
            profile(r, &mut vals);
        }
        return vals;
    }
    if r < 1e-14 {
        if s >= lo && s <= hi {
            let mut vals = vec![0.0; nm];
            profile(s, &mut vals);
            for (o, (v, n)) in out.iter_mut().zip(vals.iter().zip(degrees)) {
                // Only the n = 0 mode survives at the origin.
                *o = if *n == 0 { *v } else { 0.0 };
            }
        }
        return out;
    }
    let c = 2.0 * r * s;
    let base = r * r + s * s;
    let m_lo = ((lo * lo - base) / c).max(-1.0);
    let m_hi = ((hi * hi - base) / c).min(1.0);
    if m_hi <= m_lo {
        return out;
    }
    let (x, w) = nodes;
    let half = 0.5 * (m_hi - m_lo);
    let mut p = vec![0.0; nmax + 1];
    let mut vals = vec![0.0; nm];
    for (xi, wi) in x.iter().zip(w) {
        let mu = m_lo + half * (xi + 1.0);
        let rho = (base + c * mu).max(0.0).sqrt();
        let cg = if rho > 0.0 { ((r + s * mu) / rho).clamp(-1.0, 1.0) } else { 1.0 };
        legendre_all(cg, &mut p);
        profile(rho, &mut vals);
        let ww = 0.5 * half * wi;
        for j in 0..nm {
            out[j] += ww * vals[j] * p[degrees[j]];
        }
    }
    out
}

/// Composite Gauss–Legendre nodes on [-1, 1].
pub fn composite_nodes(cells: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    crate::volterra::composite_gl(-1.0, 1.0, cells, order)
}

/// Modal boundary values u_n^m(1, t_k) of band-limited Cauchy data.
pub fn modal_boundary_series(data: &CauchyData, dt: f64, n_times: usize, opts: &ForwardOptions) -> Result<ModalCoefficients> {
    let nmax = [&data.a, &data.b]
        .iter()
        .filter_map(|s| match s {
            Source::Modal(m) => Some(m.nmax),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let nm = mode_count(data.dim, nmax);
    let mut out = ModalCoefficients::zeros(data.dim, nmax, dt, n_times);
    let h = opts.fd_step;
    let pot_a = potential_series(data.dim, &data.a, nmax, dt, n_times, h)?;
    let pot_b = potential_series(data.dim, &data.b, nmax, dt, n_times, h)?;
    for mode in 0..nm {
        for k in 0..n_times {
            let mut u = 0.0;
            if let Some(pa) = &pot_a {
                u += (pa[mode][k][2] - pa[mode][k][0]) / (2.0 * h);
            }
            if let Some(pb) = &pot_b {
                u += pb[mode][k][1];
            }
            out.series[mode][k] = u;
        }
        if let Source::Modal(m) = &data.a {
            if mode < m.profiles.len() {
                out.series[mode][0] = m.profile(mode, 1.0);
            }
        }
    }
    Ok(out)
}

type PotentialSeries = Vec<Vec<[f64; 3]>>;

/// Per mode, per time: the potential at t - h, t, t + h on the unit sphere
/// or circle.
fn potential_series(dim: Dim, src: &Source, nmax: usize, dt: f64, n_times: usize, h: f64) -> Result<Option<PotentialSeries>> {
    let m = match src {
        Source::Zero => return Ok(None),
        Source::Modal(m) => m,
        Source::Analytic(_) => return Err(Error::Domain("modal series needs a modal source".into())),
    };
    let nm = mode_count(dim, nmax);
    let own = m.profiles.len();
    let ts: Vec<f64> = (0..n_times).flat_map(|k| {
        let t = k as f64 * dt;
        [t - h, t, t + h]
    }).collect();
    let vals: Vec<Vec<f64>> = match dim {
        Dim::Three => {
            let degrees: Vec<usize> = (0..own).map(|j| mode_degree(dim, j).0).collect();
            let nodes = composite_nodes(16, 8);
            let profile = |rho: f64, out: &mut [f64]| {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = m.profile(j, rho);
                }
            };
            ts.par_iter()
                .map(|&t| {
                    if t <= 0.0 {
                        return vec![0.0; own];
                    }
                    let means = modal_sphere_means(&profile, &degrees, 1.0, t, 0.0, m.outer, &nodes);
                    means.into_iter().map(|v| t * v).collect()
                })
                .collect()
        }
        Dim::Two => {
            let table = DiscTable::new(m, 801, 48);
            ts.par_iter().map(|&t| table.potential(t)).collect()
        }
    };
    let mut out = vec![vec![[0.0; 3]; n_times]; nm];
    for k in 0..n_times {
        for j in 0..3 {
            let v = &vals[3 * k + j];
            for mode in 0..own.min(nm) {
                out[mode][k][j] = v[mode];
            }
        }
    }
    Ok(Some(out))
}

/// Tabulated C_n(ρ) = ∫_0^{2π} p_n(|x̂ + ρ e_ψ|) cos(nγ) dψ for a 2D modal
/// field, used for the disc potential at boundary points.
struct DiscTable {
    drho: f64,
    /// `c[mode][i]` at ρ = i drho.
    c: Vec<Vec<f64>>,
    rho_max: f64,
    alpha_nodes: (Vec<f64>, Vec<f64>),
}

impl DiscTable {
    fn new(m: &RadialModes, n_rho: usize, q: usize) -> Self {
        let own = m.profiles.len();
        let rho_max = 1.0 + m.outer;
        let drho = rho_max / (n_rho - 1) as f64;
        let mut c = vec![vec![0.0; n_rho]; own];
        let (gx, gw) = gauss_legendre(q);
        for i in 1..n_rho {
            let rho = i as f64 * drho;
            // |x̂ + ρ e_ψ| ≤ outer  ⟺  cos ψ ≤ (outer² - 1 - ρ²) / (2ρ).
            let cmax = (m.outer * m.outer - 1.0 - rho * rho) / (2.0 * rho);
            if cmax <= -1.0 {
                continue;
            }
            let p0 = cmax.min(1.0).acos();
            let half = 0.5 * (PI - p0);
            for (x, w) in gx.iter().zip(&gw) {
                let psi = p0 + half * (x + 1.0);
                let big_r = (1.0 + rho * rho + 2.0 * rho * psi.cos()).max(0.0).sqrt();
                let gamma = (rho * psi.sin()).atan2(1.0 + rho * psi.cos());
                for (mode, cm) in c.iter_mut().enumerate() {
                    let n = mode_degree(Dim::Two, mode).0 as f64;
                    cm[i] += 2.0 * half * w * m.profile(mode, big_r) * (n * gamma).cos();
                }
            }
        }
        // Tighten the reach to where the table is nonzero.
        let last = (0..n_rho).rev().find(|&i| c.iter().any(|cm| cm[i] != 0.0)).unwrap_or(0);
        let rho_max = ((last + 2) as f64 * drho).min(rho_max);
        Self { drho, c, rho_max, alpha_nodes: crate::volterra::composite_gl(0.0, 1.0, 16, 8) }
    }

    fn potential(&self, t: f64) -> Vec<f64> {
        let own = self.c.len();
        let mut out = vec![0.0; own];
        if t <= 0.0 {
            return out;
        }
        let a1 = (self.rho_max / t).min(1.0).asin();
        let (x, w) = &self.alpha_nodes;
        for (xi, wi) in x.iter().zip(w) {
            let a = a1 * xi;
            let rho = t * a.sin();
            let ww = a1 * wi * a.sin();
            for (o, cm) in out.iter_mut().zip(&self.c) {
                *o += ww * crate::quadrature::cubic_series(cm, self.drho, rho);
            }
        }
        for o in out.iter_mut() {
            *o *= t / (2.0 * PI);
        }
        out
    }
}
