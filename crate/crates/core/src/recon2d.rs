//! 2D reconstruction: the exterior and interior Abel-type solvers and the
//! recursive scheme for the initial pressure.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::config::ReconConfig;
use crate::error::{Error, Result};
use crate::field::{BallGrid, CauchyData, CauchyField, RadialModes, Source};
use crate::forward::modal_boundary_series;
use crate::harmonics::{analyze, mode_count, mode_degree, BoundaryObservation, Dim, ModalCoefficients};
use crate::quadrature::{chebyshev_points, differentiate_series, gauss_legendre, steps, MultiSpline};
use crate::specfun::c2d;
use crate::volterra::{solve_abel_volterra, AbelKind, TimeGrid};

fn check_dim(dim: Dim) -> Result<()> {
    if dim != Dim::Two {
        return Err(Error::Domain("2D reconstruction given 3D data".into()));
    }
    Ok(())
}

fn degrees(nm: usize) -> Vec<usize> {
    (0..nm).map(|m| mode_degree(Dim::Two, m).0).collect()
}

/// Per-mode densities of the exterior problem on [0, t_k] from F'.
pub fn exterior_densities_2d(coeffs: &ModalCoefficients, nmax: usize, n_steps: usize) -> Result<Vec<Vec<f64>>> {
    let grid = TimeGrid::new(coeffs.dt, n_steps + 1);
    let nm = mode_count(Dim::Two, nmax);
    (0..nm)
        .into_par_iter()
        .map(|m| {
            let n = mode_degree(Dim::Two, m).0;
            let g = differentiate_series(&coeffs.series[m][..=n_steps], 1, coeffs.dt)?;
            solve_abel_volterra(n, &g, grid, AbelKind::Exterior)
        })
        .collect()
}

/// Exterior solution at time T: densities and the radial profiles of v(·, T)
/// and v_t(·, T) on r ∈ [1, T + 1].
#[derive(Debug, Clone)]
pub struct ExteriorField2D {
    pub nmax: usize,
    pub t_final: f64,
    pub dt: f64,
    pub densities: Vec<Vec<f64>>,
    pub v: MultiSpline,
    pub vt: MultiSpline,
}

const CELL_GL: usize = 4;

/// v(ρ, t) = ρ ∫ ω(t+1-ρ cosh θ) Ψ_n(cosh θ) sinh θ dθ and
/// v_t(ρ, t) = c_n ∫ ω(t+1-ρ cosh θ) cosh nθ dθ, θ ∈ [0, acosh((t+1)/ρ)],
/// with ω piecewise linear on its grid. Zero for t < ρ - 1.
pub fn exterior_modes_at(densities: &[Vec<f64>], dt: f64, t: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let nm = densities.len();
    let deg = degrees(nm);
    let nmax = deg.iter().copied().max().unwrap_or(0);
    let mut v = vec![0.0; nm];
    let mut vt = vec![0.0; nm];
    let tau_max = t + 1.0 - rho;
    if tau_max <= 0.0 || nm == 0 {
        return (v, vt);
    }
    let len = densities[0].len();
    let (gx, gw) = gauss_legendre(CELL_GL);
    let theta = |tau: f64| {
        let x = ((t + 1.0 - tau) / rho).max(1.0);
        (x + (x * x - 1.0).sqrt()).ln()
    };
    let kmax = ((tau_max / dt).ceil() as usize).min(len - 1);
    let mut sh = vec![0.0; nmax + 1];
    let mut ch = vec![0.0; nmax + 1];
    for k in 0..kmax {
        let t0 = k as f64 * dt;
        let t1 = ((k + 1) as f64 * dt).min(tau_max);
        if t1 <= t0 {
            break;
        }
        let th_hi = theta(t0);
        let th_lo = theta(t1);
        let half = 0.5 * (th_hi - th_lo);
        for (xi, wi) in gx.iter().zip(&gw) {
            let th = th_lo + half * (xi + 1.0);
            let c = th.cosh();
            let tau = t + 1.0 - rho * c;
            let lam = ((tau - t0) / dt).clamp(0.0, 1.0);
            let wgt = half * wi;
            sh[0] = 0.0;
            ch[0] = 1.0;
            if nmax >= 1 {
                sh[1] = th.sinh();
                ch[1] = c;
            }
            for n in 1..nmax {
                sh[n + 1] = 2.0 * c * sh[n] - sh[n - 1];
                ch[n + 1] = 2.0 * c * ch[n] - ch[n - 1];
            }
            let s1 = th.sinh();
            for m in 0..nm {
                let om = &densities[m];
                let o = om[k] * (1.0 - lam) + om[(k + 1).min(len - 1)] * lam;
                if o == 0.0 {
                    continue;
                }
                let n = deg[m];
                let psi = if n == 0 { th } else { sh[n] };
                v[m] += wgt * o * rho * psi * s1;
                vt[m] += wgt * o * c2d(n) * ch[n];
            }
        }
    }
    (v, vt)
}

pub fn solve_exterior_2d(coeffs: &ModalCoefficients, t_final: f64, cfg: &ReconConfig) -> Result<ExteriorField2D> {
    check_dim(coeffs.dim)?;
    let nmax = cfg.nmax.min(coeffs.nmax);
    let n_steps = steps(t_final, coeffs.dt)?;
    if n_steps >= coeffs.n_times {
        return Err(Error::Domain(format!(
            "observation ends at {} before T = {t_final}",
            coeffs.t_final()
        )));
    }
    let densities = exterior_densities_2d(coeffs, nmax, n_steps)?;
    let knots = chebyshev_points(cfg.shell_radii, 1.0, t_final + 1.0);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = knots
        .par_iter()
        .map(|&rho| exterior_modes_at(&densities, coeffs.dt, t_final, rho))
        .collect();
    let nm = densities.len();
    let mut v = vec![vec![0.0; knots.len()]; nm];
    let mut vt = v.clone();
    for (i, (a, b)) in rows.into_iter().enumerate() {
        for m in 0..nm {
            v[m][i] = a[m];
            vt[m][i] = b[m];
        }
    }
    Ok(ExteriorField2D {
        nmax,
        t_final,
        dt: coeffs.dt,
        densities,
        v: MultiSpline::new(knots.clone(), v)?,
        vt: MultiSpline::new(knots, vt)?,
    })
}

impl ExteriorField2D {
    /// All modes of (v, v_t) at radius r ≥ 1 and time t ≤ T, from the densities.
    pub fn modes_at(&self, r: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
        exterior_modes_at(&self.densities, self.dt, t, r)
    }
}

/// Per-mode (t/2π) ∫_{α} sin α ∫_{arc} cos(nγ) R_m(ρ) dψ dα: the disc
/// potential of the exterior profile over D(t, x) \ B_1 for |x| = r.
fn shell_disc_modes(prof: &MultiSpline, deg: &[usize], r: f64, t: f64, cells: usize) -> Vec<f64> {
    let nm = deg.len();
    let nmax = deg.iter().copied().max().unwrap_or(0);
    let mut out = vec![0.0; nm];
    if t <= 0.0 {
        return out;
    }
    let a0 = ((1.0 - r) / t).clamp(0.0, 1.0).asin();
    let a1 = ((1.0 + r) / t).clamp(0.0, 1.0).asin();
    let (xg, wg) = gauss_legendre(8);
    let psi_cells = (cells / 2).max(2);
    let mut vals = vec![0.0; nm];
    let mut tn = vec![0.0; nmax + 1];
    for (lo, hi) in [(a0, a1), (a1, 0.5 * PI)] {
        if hi <= lo {
            continue;
        }
        let da = (hi - lo) / cells as f64;
        for ca in 0..cells {
            for (xa, wa) in xg.iter().zip(&wg) {
                let al = lo + da * (ca as f64 + 0.5 * (xa + 1.0));
                let s = t * al.sin();
                let wa = 0.5 * da * wa * al.sin();
                let psi_c = if r * s < 1e-14 {
                    if s >= 1.0 {
                        PI
                    } else {
                        0.0
                    }
                } else {
                    ((1.0 - r * r - s * s) / (2.0 * r * s)).clamp(-1.0, 1.0).acos()
                };
                if psi_c <= 0.0 {
                    continue;
                }
                let dp = psi_c / psi_cells as f64;
                for cp in 0..psi_cells {
                    for (xp, wp) in xg.iter().zip(&wg) {
                        let psi = dp * (cp as f64 + 0.5 * (xp + 1.0));
                        let cpsi = psi.cos();
                        let rho = (r * r + s * s + 2.0 * r * s * cpsi).max(0.0).sqrt();
                        let cg = if rho > 0.0 { (r + s * cpsi) / rho } else { 1.0 };
                        tn[0] = 1.0;
                        if nmax >= 1 {
                            tn[1] = cg;
                        }
                        for n in 1..nmax {
                            tn[n + 1] = 2.0 * cg * tn[n] - tn[n - 1];
                        }
                        prof.eval_all(rho, &mut vals);
                        let w = 2.0 * wa * 0.5 * dp * wp;
                        for m in 0..nm {
                            out[m] += w * tn[deg[m]] * vals[m];
                        }
                    }
                }
            }
        }
    }
    for o in out.iter_mut() {
        *o *= t / (2.0 * PI);
    }
    out
}

/// Modes of C F = I₁ + I₂ at radius r < 1 from the exterior field at T.
pub fn correction_at_radius(ext: &ExteriorField2D, r: f64, cfg: &ReconConfig) -> Result<Vec<f64>> {
    let t = ext.t_final;
    if t <= 2.0 {
        return Err(Error::Domain(format!("recursive scheme needs T > 2, got {t}")));
    }
    let deg = degrees(ext.v.len());
    let h = cfg.fd_step();
    let cells = cfg.mean_cells;
    let i1 = shell_disc_modes(&ext.vt, &deg, r, t, cells);
    let jp = shell_disc_modes(&ext.v, &deg, r, t + h, cells);
    let jm = shell_disc_modes(&ext.v, &deg, r, t - h, cells);
    Ok((0..deg.len()).map(|m| -i1[m] + (jp[m] - jm[m]) / (2.0 * h)).collect())
}

/// a₁ = C F on the given radii.
pub fn exterior_correction(ext: &ExteriorField2D, radii: &[f64], outer: f64, cfg: &ReconConfig) -> Result<RadialModes> {
    let rows = radii
        .par_iter()
        .map(|&r| correction_at_radius(ext, r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut out = RadialModes::zeros(Dim::Two, ext.nmax, radii.to_vec(), outer);
    for (i, row) in rows.into_iter().enumerate() {
        for (m, v) in row.into_iter().enumerate() {
            out.profiles[m][i] = v;
        }
    }
    Ok(out)
}

/// Progress of the recursive scheme.
#[derive(Debug, Clone)]
pub struct IterationState {
    /// Number of completed iterations.
    pub iteration: usize,
    /// Σ_{j ≤ i} a_j.
    pub sum: RadialModes,
    /// F - Σ_j F_j.
    pub residual: ModalCoefficients,
    /// ‖a_i‖ per iteration, weighted L² on the target grid.
    pub norms: Vec<f64>,
}

fn modal_norm(m: &RadialModes, ball: &BallGrid) -> f64 {
    let s = m.to_samples(ball);
    crate::field::weighted_norm(&s, &ball.weights())
}

/// True when the last three correction norms each failed to decrease.
pub fn is_diverging(norms: &[f64]) -> bool {
    norms.len() >= 4 && norms[norms.len() - 4..].windows(2).all(|w| w[1] >= w[0])
}

/// Recursive reconstruction of a (with b = 0) from an observation on [0, T],
/// T = cfg.t_final > 2.
pub fn reconstruct_iterative_2d(obs: &BoundaryObservation, cfg: &ReconConfig, target: &BallGrid) -> Result<(CauchyField, IterationState)> {
    check_dim(obs.grid.dim)?;
    if cfg.n_iter == 0 {
        return Err(Error::Domain("n_iter must be at least 1".into()));
    }
    let t = cfg.t_final;
    if t <= 2.0 {
        return Err(Error::Domain(format!("recursive scheme needs T > 2, got {t}")));
    }
    if ((obs.dt - cfg.dt) / cfg.dt).abs() > 1e-9 {
        return Err(Error::Domain(format!("observation dt {} differs from config dt {}", obs.dt, cfg.dt)));
    }
    let n_steps = steps(t, cfg.dt)?;
    let coeffs = analyze(obs, cfg.nmax)?;
    if n_steps >= coeffs.n_times {
        return Err(Error::Domain(format!("observation ends at {} before T = {t}", coeffs.t_final())));
    }
    let mut state = IterationState {
        iteration: 0,
        sum: RadialModes::zeros(Dim::Two, cfg.nmax, target.radii.clone(), target.radius),
        residual: coeffs,
        norms: Vec::new(),
    };
    for i in 0..cfg.n_iter {
        let ext = solve_exterior_2d(&state.residual, t, cfg)?;
        let ai = exterior_correction(&ext, &target.radii, target.radius, cfg)?;
        state.norms.push(modal_norm(&ai, target));
        state.sum.add_assign(&ai, 1.0);
        state.iteration = i + 1;
        if is_diverging(&state.norms) {
            return Err(Error::Divergence(state.norms));
        }
        if i + 1 < cfg.n_iter {
            let data = CauchyData { dim: Dim::Two, a: Source::Modal(ai), b: Source::Zero };
            let fi = modal_boundary_series(&data, cfg.dt, state.residual.n_times, &cfg.forward_options())?;
            for (res, f) in state.residual.series.iter_mut().zip(&fi.series) {
                for (r, v) in res.iter_mut().zip(f) {
                    *r -= v;
                }
            }
        }
    }
    let zero = RadialModes::zeros(Dim::Two, cfg.nmax, target.radii.clone(), target.radius);
    Ok((CauchyField::from_modes(target, &state.sum, &zero), state))
}

/// β(t, c) = 1 / sqrt(t² - c²).
pub fn beta(t: f64, c: f64) -> f64 {
    1.0 / (t * t - c * c).sqrt()
}

pub fn beta_t(t: f64, c: f64) -> f64 {
    -t / (t * t - c * c).powf(1.5)
}

pub fn beta_tt(t: f64, c: f64) -> f64 {
    let q = t * t - c * c;
    -1.0 / q.powf(1.5) + 3.0 * t * t / q.powf(2.5)
}

/// Bounds on |β|, |β_t|, |β_tt| for c < 2 as printed: 1/(T²-4),
/// T/(T²-4)^{3/2}, 4T/(T²-4)³.
pub fn beta_envelopes_printed(t: f64) -> [f64; 3] {
    let q = t * t - 4.0;
    [1.0 / q, t / q.powf(1.5), 4.0 * t / q.powi(3)]
}

/// Sharp bounds for c < 2: 1/sqrt(T²-4), T/(T²-4)^{3/2}, (2T²+4)/(T²-4)^{5/2}.
pub fn beta_envelopes(t: f64) -> [f64; 3] {
    let q = t * t - 4.0;
    [1.0 / q.sqrt(), t / q.powf(1.5), (2.0 * t * t + 4.0) / q.powf(2.5)]
}

/// K a = I₃ + I₄ on the ball grid by tensor quadrature over B₁ × B₁.
pub fn apply_k(a: &[f64], ball: &BallGrid, t: f64) -> Result<Vec<f64>> {
    if t <= 2.0 {
        return Err(Error::Domain(format!("K needs T > 2, got {t}")));
    }
    if a.len() != ball.len() || ball.dim != Dim::Two {
        return Err(Error::Domain("apply_k needs 2D ball samples".into()));
    }
    let pts = ball.points();
    let w = ball.weights();
    let dist = |p: &[f64; 3], q: &[f64; 3]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let inner: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|xi| {
            let mut g_tt = 0.0;
            let mut g_t = 0.0;
            for ((xj, wj), aj) in pts.iter().zip(&w).zip(a) {
                if *aj == 0.0 {
                    continue;
                }
                let c = dist(xi, xj);
                g_tt += wj * aj * beta_tt(t, c);
                g_t += wj * aj * beta_t(t, c);
            }
            (g_tt, g_t)
        })
        .collect();
    let scale = 1.0 / (4.0 * PI * PI);
    Ok(pts
        .par_iter()
        .map(|x| {
            let mut s = 0.0;
            for ((xi, wi), (g_tt, g_t)) in pts.iter().zip(&w).zip(&inner) {
                let c = dist(xi, x);
                s += wi * (-beta(t, c) * g_tt + beta_t(t, c) * g_t);
            }
            scale * s
        })
        .collect())
}

/// Per-mode densities of the interior problem with window 2, from the data
/// as given on [0, 2].
pub fn interior_densities_2d(coeffs: &ModalCoefficients, nmax: usize) -> Result<Vec<Vec<f64>>> {
    let m2 = steps(2.0, coeffs.dt)?;
    if m2 >= coeffs.n_times {
        return Err(Error::Domain(format!("interior procedure needs data up to t = 2, have {}", coeffs.t_final())));
    }
    let grid = TimeGrid::new(coeffs.dt, m2 + 1);
    (0..mode_count(Dim::Two, nmax))
        .into_par_iter()
        .map(|m| {
            let n = mode_degree(Dim::Two, m).0;
            let g = differentiate_series(&coeffs.series[m][..=m2], 1, coeffs.dt)?;
            solve_abel_volterra(n, &g, grid, AbelKind::Interior)
        })
        .collect()
}

/// v(r, 2) = r ∫_0^π ω(1 + r cos θ) Ψ_n(cos θ) sin θ dθ (+ π ∫_0^{1-r} ω for
/// n = 0) and v_t(r, 2) = c_n ∫_0^π ω(1 + r cos θ) cos nθ dθ.
pub fn interior_modes_at(densities: &[Vec<f64>], dt: f64, r: f64) -> (Vec<f64>, Vec<f64>) {
    let nm = densities.len();
    let deg = degrees(nm);
    let mut v = vec![0.0; nm];
    let mut vt = vec![0.0; nm];
    if nm == 0 {
        return (v, vt);
    }
    let len = densities[0].len();
    let at = |m: usize, tau: f64| crate::quadrature::lerp_series(&densities[m], dt, tau);
    if r < 1e-12 {
        for m in 0..nm {
            if deg[m] == 0 {
                vt[m] = PI * at(m, 1.0);
            }
        }
    } else {
        let (gx, gw) = gauss_legendre(CELL_GL);
        let lo = 1.0 - r;
        let hi = 1.0 + r;
        let k0 = (lo / dt).floor() as usize;
        let k1 = ((hi / dt).ceil() as usize).min(len - 1);
        let theta = |tau: f64| ((tau - 1.0) / r).clamp(-1.0, 1.0).acos();
        for k in k0..k1 {
            let c0 = (k as f64 * dt).max(lo);
            let c1 = ((k + 1) as f64 * dt).min(hi);
            if c1 <= c0 {
                continue;
            }
            let th_lo = theta(c1);
            let th_hi = theta(c0);
            let half = 0.5 * (th_hi - th_lo);
            for (xi, wi) in gx.iter().zip(&gw) {
                let th = th_lo + half * (xi + 1.0);
                let tau = 1.0 + r * th.cos();
                let lam = ((tau - k as f64 * dt) / dt).clamp(0.0, 1.0);
                let w = half * wi;
                for m in 0..nm {
                    let om = &densities[m];
                    let o = om[k] * (1.0 - lam) + om[(k + 1).min(len - 1)] * lam;
                    let n = deg[m] as f64;
                    let psi = if deg[m] == 0 { th } else { (n * th).sin() };
                    v[m] += w * r * o * psi * th.sin();
                    vt[m] += w * c2d(deg[m]) * o * (n * th).cos();
                }
            }
        }
    }
    // Constant tail of the n = 0 kernel below the window.
    let lo = 1.0 - r;
    for m in 0..nm {
        if deg[m] != 0 || lo <= 0.0 {
            continue;
        }
        let om = &densities[m];
        let kl = ((lo / dt).floor() as usize).min(len - 1);
        let mut s = 0.0;
        for k in 0..kl {
            s += 0.5 * dt * (om[k] + om[k + 1]);
        }
        let frac = lo - kl as f64 * dt;
        s += 0.5 * frac * (om[kl] + at(m, lo));
        v[m] += PI * s;
    }
    (v, vt)
}

/// Interior IBVP with zero Cauchy data at t = 0 and boundary data on [0, 2]:
/// returns (v(·, 2), v_t(·, 2)) on the target grid.
pub fn solve_interior_2d(coeffs: &ModalCoefficients, cfg: &ReconConfig, target: &BallGrid) -> Result<CauchyField> {
    check_dim(coeffs.dim)?;
    let nmax = cfg.nmax.min(coeffs.nmax);
    let dens = interior_densities_2d(coeffs, nmax)?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = target
        .radii
        .par_iter()
        .map(|&r| interior_modes_at(&dens, coeffs.dt, r))
        .collect();
    let mut a = RadialModes::zeros(Dim::Two, nmax, target.radii.clone(), target.radius);
    let mut b = a.clone();
    for (i, (va, vb)) in rows.into_iter().enumerate() {
        for m in 0..va.len() {
            a.profiles[m][i] = va[m];
            b.profiles[m][i] = vb[m];
        }
    }
    Ok(CauchyField::from_modes(target, &a, &b))
}
