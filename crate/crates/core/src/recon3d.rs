//! Reconstruction of 3D Cauchy data from spherical observations: the
//! exterior procedure with time reversal and the interior delay equation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ReconConfig, VolterraPath};
use crate::error::{Error, Result};
use crate::field::{norm3, BallGrid, CauchyField, RadialModes};
use crate::forward::{composite_nodes, modal_sphere_means};
use crate::harmonics::{analyze, harmonics_at, mode_count, mode_degree, BoundaryObservation, Dim, ModalCoefficients};
use crate::quadrature::{chebyshev_points, differentiate_series, gauss_legendre, gregory_weights, steps, MultiSpline};
use crate::specfun::{bessel_zeros, legendre_all, legendre_all_deriv, legendre_antideriv_all, sph_bessel_j, sph_bessel_j_complex, Order};
use crate::volterra::{apply_resolvent3d, build_resolvent3d, delay_solver_3d, exterior_solver_3d, TimeGrid};

/// Exterior solution at time T: densities ω_n^m on [0, T] and the radial
/// profiles of v(·, T) and v_t(·, T) on r ∈ [1, T + 1].
#[derive(Debug, Clone)]
pub struct ExteriorField3D {
    pub nmax: usize,
    pub t_final: f64,
    pub dt: f64,
    /// `densities[mode][k]` = ω(t_k).
    pub densities: Vec<Vec<f64>>,
    pub v: MultiSpline,
    pub vt: MultiSpline,
}

fn check_dim(dim: Dim) -> Result<()> {
    if dim != Dim::Three {
        return Err(Error::Domain("3D reconstruction given 2D data".into()));
    }
    Ok(())
}

/// Modal densities of the exterior problem from F'' by the chosen Volterra path.
pub fn exterior_densities(coeffs: &ModalCoefficients, nmax: usize, n_steps: usize, path: VolterraPath) -> Result<Vec<Vec<f64>>> {
    let grid = TimeGrid::new(coeffs.dt, n_steps + 1);
    let nm = mode_count(Dim::Three, nmax);
    let per_degree: Vec<Result<Vec<Vec<f64>>>> = (0..=nmax)
        .into_par_iter()
        .map(|n| {
            let modes: Vec<usize> = (n * n..(n + 1) * (n + 1)).filter(|&m| m < nm).collect();
            let solver = match path {
                VolterraPath::Direct => Some(exterior_solver_3d(n, grid)?),
                VolterraPath::Resolvent => None,
            };
            let res = match path {
                VolterraPath::Resolvent => Some(build_resolvent3d(n)?),
                VolterraPath::Direct => None,
            };
            modes
                .iter()
                .map(|&m| {
                    let g = differentiate_series(&coeffs.series[m][..=n_steps], 2, coeffs.dt)?;
                    match (&solver, &res) {
                        (Some(s), _) => s.solve(&g),
                        (_, Some(r)) => Ok(apply_resolvent3d(r, &g, grid)),
                        _ => unreachable!(),
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(nm);
    for d in per_degree {
        out.extend(d?);
    }
    Ok(out)
}

pub fn solve_exterior(coeffs: &ModalCoefficients, t_final: f64, cfg: &ReconConfig) -> Result<ExteriorField3D> {
    check_dim(coeffs.dim)?;
    let nmax = cfg.nmax.min(coeffs.nmax);
    let n_steps = steps(t_final, coeffs.dt)?;
    if n_steps >= coeffs.n_times {
        return Err(Error::Domain(format!(
            "observation ends at {} before T = {t_final}",
            coeffs.t_final()
        )));
    }
    let densities = exterior_densities(coeffs, nmax, n_steps, cfg.volterra)?;
    let (v, vt) = exterior_profiles(&densities, nmax, coeffs.dt, t_final, cfg.shell_radii)?;
    Ok(ExteriorField3D { nmax, t_final, dt: coeffs.dt, densities, v, vt })
}

/// R(ρ) = ∫_0^{T+1-ρ} ω(τ) Q_{n+1}((T+1-τ)/ρ) dτ and
/// R'(ρ) = ∫_0^{T+1-ρ} ω(τ) P_n((T+1-τ)/ρ) / ρ dτ on Chebyshev radii.
fn exterior_profiles(densities: &[Vec<f64>], nmax: usize, dt: f64, t_final: f64, n_knots: usize) -> Result<(MultiSpline, MultiSpline)> {
    let knots = chebyshev_points(n_knots, 1.0, t_final + 1.0);
    let degrees: Vec<usize> = (0..densities.len()).map(|m| mode_degree(Dim::Three, m).0).collect();
    let nm = densities.len();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = knots
        .par_iter()
        .map(|&rho| {
            let mut rv = vec![0.0; nm];
            let mut rt = vec![0.0; nm];
            let tau_max = t_final + 1.0 - rho;
            if tau_max <= 0.0 {
                return (rv, rt);
            }
            let kmax = ((tau_max / dt) + 1e-9).floor() as usize;
            let kmax = kmax.min(densities[0].len() - 1);
            let mut p = vec![0.0; nmax + 2];
            let mut q = vec![0.0; nmax + 1];
            let w = gregory_weights(kmax);
            for k in 0..=kmax {
                let wk = if kmax == 0 { 0.0 } else { w[k] * dt };
                if wk == 0.0 {
                    continue;
                }
                let x = (t_final + 1.0 - k as f64 * dt) / rho;
                legendre_all(x, &mut p);
                legendre_antideriv_all(x, &mut q);
                for m in 0..nm {
                    let om = densities[m][k];
                    rv[m] += wk * om * q[degrees[m]];
                    rt[m] += wk * om * p[degrees[m]] / rho;
                }
            }
            // Partial cell [t_kmax, tau_max]: trapezoid, Q vanishes at tau_max.
            let tk = kmax as f64 * dt;
            let frac = tau_max - tk;
            if frac > 1e-14 {
                let x = (t_final + 1.0 - tk) / rho;
                legendre_all(x, &mut p);
                legendre_antideriv_all(x, &mut q);
                for m in 0..nm {
                    let om = &densities[m];
                    let o0 = om[kmax];
                    let o1 = if kmax + 1 < om.len() { om[kmax + 1] } else { o0 };
                    let oe = o0 + (o1 - o0) * frac / dt;
                    rv[m] += 0.5 * frac * o0 * q[degrees[m]];
                    rt[m] += 0.5 * frac * (o0 * p[degrees[m]] + oe) / rho;
                }
            }
            (rv, rt)
        })
        .collect();
    let mut v = vec![vec![0.0; knots.len()]; nm];
    let mut vt = vec![vec![0.0; knots.len()]; nm];
    for (i, (a, b)) in rows.into_iter().enumerate() {
        for m in 0..nm {
            v[m][i] = a[m];
            vt[m][i] = b[m];
        }
    }
    Ok((MultiSpline::new(knots.clone(), v)?, MultiSpline::new(knots, vt)?))
}

impl ExteriorField3D {
    /// v_n^m(r, t) for r ≥ 1, t ≤ T, directly from the density.
    pub fn mode_value(&self, mode: usize, r: f64, t: f64) -> f64 {
        let n = mode_degree(Dim::Three, mode).0;
        let tau_max = t + 1.0 - r;
        if tau_max <= 0.0 {
            return 0.0;
        }
        let om = &self.densities[mode];
        let kmax = ((tau_max / self.dt) + 1e-9).floor() as usize;
        let kmax = kmax.min(om.len() - 1);
        let mut q = vec![0.0; n + 1];
        let w = gregory_weights(kmax);
        let mut s = 0.0;
        if kmax > 0 {
            for (k, wk) in w.iter().enumerate() {
                legendre_antideriv_all((t + 1.0 - k as f64 * self.dt) / r, &mut q);
                s += wk * self.dt * om[k] * q[n];
            }
        }
        let tk = kmax as f64 * self.dt;
        legendre_antideriv_all((t + 1.0 - tk) / r, &mut q);
        s + 0.5 * (tau_max - tk) * om[kmax] * q[n]
    }

    /// Modal coefficients (a, b) at radius r via Kirchhoff time reversal.
    pub fn reverse_at_radius(&self, r: f64, cfg: &ReconConfig) -> Result<(Vec<f64>, Vec<f64>)> {
        let t = self.t_final;
        if t - r < 1.0 - 1e-12 {
            return Err(Error::Domain(format!(
                "radius {r} is outside the domain of dependence of T = {t}"
            )));
        }
        let h = cfg.fd_step();
        let nm = self.v.len();
        let degrees: Vec<usize> = (0..nm).map(|m| mode_degree(Dim::Three, m).0).collect();
        let nodes = composite_nodes(cfg.mean_cells, 8);
        let hi = t + 1.0;
        let g = |s: f64, prof: &MultiSpline| -> Vec<f64> {
            let f = |rho: f64, out: &mut [f64]| prof.eval_all(rho, out);
            modal_sphere_means(&f, &degrees, r, s, 1.0, hi, &nodes)
                .into_iter()
                .map(|v| s * v)
                .collect()
        };
        let centered = t - h - r >= 1.0;
        let offs: Vec<f64> = if centered { vec![-1.0, 0.0, 1.0] } else { vec![0.0, 1.0, 2.0, 3.0] };
        let g0: Vec<Vec<f64>> = offs.iter().map(|o| g(t + o * h, &self.v)).collect();
        let g1: Vec<Vec<f64>> = offs.iter().map(|o| g(t + o * h, &self.vt)).collect();
        let mut a = vec![0.0; nm];
        let mut b = vec![0.0; nm];
        for m in 0..nm {
            let (d0, dd0, g1t, d1) = if centered {
                (
                    (g0[2][m] - g0[0][m]) / (2.0 * h),
                    (g0[2][m] - 2.0 * g0[1][m] + g0[0][m]) / (h * h),
                    g1[1][m],
                    (g1[2][m] - g1[0][m]) / (2.0 * h),
                )
            } else {
                (
                    (-3.0 * g0[0][m] + 4.0 * g0[1][m] - g0[2][m]) / (2.0 * h),
                    (2.0 * g0[0][m] - 5.0 * g0[1][m] + 4.0 * g0[2][m] - g0[3][m]) / (h * h),
                    g1[0][m],
                    (-3.0 * g1[0][m] + 4.0 * g1[1][m] - g1[2][m]) / (2.0 * h),
                )
            };
            a[m] = -g1t + d0;
            b[m] = d1 - dd0;
        }
        Ok((a, b))
    }
}

/// Time reversal onto the radii of a ball grid.
pub fn time_reverse(ext: &ExteriorField3D, target: &BallGrid, cfg: &ReconConfig) -> Result<CauchyField> {
    let (a, b) = time_reverse_modes(ext, &target.radii, target.radius, cfg)?;
    Ok(CauchyField::from_modes(target, &a, &b))
}

pub fn time_reverse_modes(ext: &ExteriorField3D, radii: &[f64], outer: f64, cfg: &ReconConfig) -> Result<(RadialModes, RadialModes)> {
    let rows = radii
        .par_iter()
        .map(|&r| ext.reverse_at_radius(r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut a = RadialModes::zeros(Dim::Three, ext.nmax, radii.to_vec(), outer);
    let mut b = a.clone();
    for (i, (ra, rb)) in rows.into_iter().enumerate() {
        for m in 0..ra.len() {
            a.profiles[m][i] = ra[m];
            b.profiles[m][i] = rb[m];
        }
    }
    Ok((a, b))
}

/// (a(x), b(x)) at a single point.
pub fn time_reverse_point(ext: &ExteriorField3D, x: &[f64; 3], cfg: &ReconConfig) -> Result<(f64, f64)> {
    let r = norm3(x);
    let (a, b) = ext.reverse_at_radius(r, cfg)?;
    let dir = if r > 0.0 { *x } else { [0.0, 0.0, 1.0] };
    let y = harmonics_at(Dim::Three, ext.nmax, &dir);
    let dot = |v: &[f64]| v.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>();
    Ok((dot(&a), dot(&b)))
}

fn prepare(obs: &BoundaryObservation, cfg: &ReconConfig) -> Result<ModalCoefficients> {
    check_dim(obs.grid.dim)?;
    if ((obs.dt - cfg.dt) / cfg.dt).abs() > 1e-9 {
        return Err(Error::Domain(format!("observation dt {} differs from config dt {}", obs.dt, cfg.dt)));
    }
    analyze(obs, cfg.nmax)
}

/// Exterior procedure: Volterra solve, exterior field at T, time reversal.
pub fn reconstruct_exterior(obs: &BoundaryObservation, cfg: &ReconConfig, target: &BallGrid) -> Result<CauchyField> {
    let t = cfg.t_final;
    let rmax = target.radii.iter().copied().fold(0.0, f64::max);
    if t < 1.0 + rmax - 1e-12 {
        return Err(Error::Domain(format!("T = {t} too short for targets up to radius {rmax}")));
    }
    let coeffs = prepare(obs, cfg)?;
    let ext = solve_exterior(&coeffs, t, cfg)?;
    time_reverse(&ext, target, cfg)
}

/// Interior procedure on reversed data over [0, 2]: per-mode densities.
pub fn interior_densities(coeffs: &ModalCoefficients, nmax: usize) -> Result<Vec<Vec<f64>>> {
    let m2 = steps(2.0, coeffs.dt)?;
    if m2 >= coeffs.n_times {
        return Err(Error::Domain(format!("interior procedure needs data up to t = 2, have {}", coeffs.t_final())));
    }
    let grid = TimeGrid::new(coeffs.dt, m2 + 1);
    let nm = mode_count(Dim::Three, nmax);
    let per_degree: Vec<Result<Vec<Vec<f64>>>> = (0..=nmax)
        .into_par_iter()
        .map(|n| {
            let solver = delay_solver_3d(n, grid)?;
            (n * n..(n + 1) * (n + 1))
                .filter(|&m| m < nm)
                .map(|m| {
                    let rev: Vec<f64> = (0..=m2).map(|k| coeffs.series[m][m2 - k]).collect();
                    let g = differentiate_series(&rev, 1, coeffs.dt)?;
                    solver.solve(&g)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(nm);
    for d in per_degree {
        out.extend(d?);
    }
    Ok(out)
}

/// φ(r, 2) = ∫_{-1}^1 ω(1 + rα) P_n(α) dα and φ_t(r, 2) for all modes.
fn interior_assemble(densities: &[Vec<f64>], nmax: usize, dt: f64, r: f64) -> (Vec<f64>, Vec<f64>) {
    let nm = densities.len();
    let degrees: Vec<usize> = (0..nm).map(|m| mode_degree(Dim::Three, m).0).collect();
    let mut phi = vec![0.0; nm];
    let mut phit = vec![0.0; nm];
    let derivs: Vec<Vec<f64>> = densities
        .iter()
        .map(|w| differentiate_series(w, 1, dt).unwrap_or_else(|_| vec![0.0; w.len()]))
        .collect();
    let (gx, gw) = gauss_legendre(4);
    let mut p = vec![0.0; nmax + 1];
    let mut dp = vec![0.0; nmax + 1];
    let lo = 1.0 - r;
    let hi = 1.0 + r;
    let use_ibp = r >= 0.05;
    let k0 = (lo / dt).floor() as usize;
    let k1 = ((hi / dt).ceil() as usize).min(densities[0].len() - 1);
    for k in k0..k1 {
        let c0 = (k as f64 * dt).max(lo);
        let c1 = ((k + 1) as f64 * dt).min(hi);
        if c1 <= c0 {
            continue;
        }
        let half = 0.5 * (c1 - c0);
        for (x, w) in gx.iter().zip(&gw) {
            let tau = c0 + half * (x + 1.0);
            let f = (tau - k as f64 * dt) / dt;
            let alpha = ((tau - 1.0) / r).clamp(-1.0, 1.0);
            legendre_all_deriv(alpha, &mut p, &mut dp);
            // dα = dτ / r
            let ww = half * w / r;
            for m in 0..nm {
                let om = &densities[m];
                let v = om[k] * (1.0 - f) + om[k + 1] * f;
                phi[m] += ww * v * p[degrees[m]];
                if use_ibp {
                    phit[m] -= ww * v * dp[degrees[m]] / r;
                } else {
                    let d = &derivs[m];
                    phit[m] += ww * (d[k] * (1.0 - f) + d[k + 1] * f) * p[degrees[m]];
                }
            }
        }
    }
    if use_ibp {
        let at = |om: &[f64], t: f64| crate::quadrature::lerp_series(om, dt, t);
        for m in 0..nm {
            let sign = if degrees[m] % 2 == 0 { 1.0 } else { -1.0 };
            phit[m] += (at(&densities[m], hi) - sign * at(&densities[m], lo)) / r;
        }
    }
    (phi, phit)
}

pub fn interior_modes(densities: &[Vec<f64>], nmax: usize, dt: f64, radii: &[f64], outer: f64) -> (RadialModes, RadialModes) {
    let rows: Vec<(Vec<f64>, Vec<f64>)> = radii
        .par_iter()
        .map(|&r| interior_assemble(densities, nmax, dt, r))
        .collect();
    let mut a = RadialModes::zeros(Dim::Three, nmax, radii.to_vec(), outer);
    let mut b = a.clone();
    for (i, (pa, pb)) in rows.into_iter().enumerate() {
        for m in 0..pa.len() {
            a.profiles[m][i] = pa[m];
            b.profiles[m][i] = -pb[m];
        }
    }
    (a, b)
}

/// Interior procedure: reversed-time delay Volterra equation, field at t = 2.
pub fn reconstruct_interior_volterra(obs: &BoundaryObservation, cfg: &ReconConfig, target: &BallGrid) -> Result<CauchyField> {
    let coeffs = prepare(obs, cfg)?;
    let nmax = cfg.nmax.min(coeffs.nmax);
    let dens = interior_densities(&coeffs, nmax)?;
    let (a, b) = interior_modes(&dens, nmax, coeffs.dt, &target.radii, target.radius);
    Ok(CauchyField::from_modes(target, &a, &b))
}

/// Reversed-time boundary coefficient of one mode as a finite exponential
/// sum: F̃(t) = Re Σ c_j exp(p_j t).
#[derive(Debug, Clone, PartialEq)]
pub struct ModePoles {
    pub mode: usize,
    pub terms: Vec<(Complex64, Complex64)>,
}

impl ModePoles {
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|(p, c)| (c * (p * t).exp()).re).sum()
    }

    /// Laplace transform Σ c_j / (s - p_j).
    pub fn laplace(&self, s: Complex64) -> Complex64 {
        self.terms.iter().map(|(p, c)| c / (s - p)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ResidueReconstruction {
    pub a: RadialModes,
    pub b: RadialModes,
    /// Estimated truncation error of the Bessel-zero series for (a, b).
    pub tail_bound: (f64, f64),
}

/// Interior field at t = 2 from the closed-form residue expansion.
pub fn reconstruct_interior_residue(
    poles: &[ModePoles],
    nmax: usize,
    n_zeros: usize,
    radii: &[f64],
    outer: f64,
) -> Result<ResidueReconstruction> {
    let t = 2.0;
    let mut a = RadialModes::zeros(Dim::Three, nmax, radii.to_vec(), outer);
    let mut b = a.clone();
    let mut tails = (0.0f64, 0.0f64);
    let nm = mode_count(Dim::Three, nmax);
    for mp in poles {
        if mp.mode >= nm {
            return Err(Error::Domain(format!("mode {} beyond nmax {nmax}", mp.mode)));
        }
        let n = mode_degree(Dim::Three, mp.mode).0;
        let zeros = bessel_zeros(Order::HalfInteger(n as u32), n_zeros)?;
        let jm1 = |x: f64| if n == 0 { x.cos() / x } else { sph_bessel_j(n - 1, x) };
        let mut last_a = vec![0.0f64; n_zeros];
        let mut last_b = vec![0.0f64; n_zeros];
        for (i, &r) in radii.iter().enumerate() {
            let mut phi = 0.0;
            let mut phit = 0.0;
            for (p, c) in &mp.terms {
                let den = sph_bessel_j_complex(n, -Complex64::i() * p);
                if den.norm() < 1e-14 {
                    return Err(Error::Singular(format!("pole {p} resonates with a Bessel zero")));
                }
                let ratio = sph_bessel_j_complex(n, -Complex64::i() * p * r) / den;
                let e = c * (p * t).exp() * ratio;
                phi += e.re;
                phit += (e * p).re;
            }
            for (z, &k) in zeros.iter().enumerate() {
                let ik = Complex64::new(0.0, k);
                let f = mp.laplace(ik) * (ik * t).exp();
                let ratio = sph_bessel_j(n, k * r) / jm1(k);
                let ta = -2.0 * f.im * ratio;
                let tb = -2.0 * (f * ik).im * ratio;
                phi += ta;
                phit += tb;
                last_a[z] = last_a[z].max(ta.abs());
                last_b[z] = last_b[z].max(tb.abs());
            }
            a.profiles[mp.mode][i] += phi;
            b.profiles[mp.mode][i] -= phit;
        }
        tails.0 = tails.0.max(tail_estimate(&last_a));
        tails.1 = tails.1.max(tail_estimate(&last_b));
    }
    Ok(ResidueReconstruction { a, b, tail_bound: tails })
}

/// Tail of Σ_{p > P} t_p from the envelope decay rate of the last terms.
fn tail_estimate(terms: &[f64]) -> f64 {
    let n = terms.len();
    if n < 4 {
        return f64::INFINITY;
    }
    let env = |lo: usize, hi: usize| terms[lo..hi].iter().copied().fold(0.0, f64::max);
    let last = env(n - n / 4, n);
    let mid = env(n / 2 - n / 8, n / 2 + n / 8);
    if last == 0.0 {
        return 0.0;
    }
    let q = (mid / last).ln() / 2f64.ln();
    if q <= 1.0 {
        f64::INFINITY
    } else {
        last * n as f64 / (q - 1.0)
    }
}
